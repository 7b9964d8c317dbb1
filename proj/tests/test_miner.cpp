#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "support.hpp"

using namespace harmonia;
using Catch::Approx;

namespace {

ColorDescriptor mono(int id) { return ColorDescriptor{{{id, 1.0}}, std::nullopt}; }

ColorDescriptor two(int a, double wa, int b, double wb) {
  ColorDescriptor d{{{a, wa}, {b, wb}}, std::nullopt};
  detail::sort_entries(d.entries);
  return d;
}

MinerConfig small_config(std::size_t min_size = 1) {
  MinerConfig cfg;
  cfg.min_group_size = min_size;
  return cfg;
}

const SyntheticCorpus& planted_corpus() {
  static const SyntheticCorpus corpus = [] {
    CorpusSpec spec;
    spec.seed = 17;
    return generate_corpus(spec, testing::partition(), testing::table());
  }();
  return corpus;
}

}  // namespace

TEST_CASE("first descriptor founds group 0, identical one joins it") {
  GroupSet groups(testing::table(), small_config());
  const auto d = two(3, 0.6, 40, 0.4);
  CHECK(assign(d, groups) == 0);
  CHECK_FALSE(groups.last_join_difference());
  CHECK(assign(d, groups) == 0);
  REQUIRE(groups.last_join_difference());
  CHECK(*groups.last_join_difference() == 0.0);
  CHECK(groups.groups().size() == 1);
  CHECK(groups.groups()[0].members.size() == 2);
}

TEST_CASE("difference exactly at the threshold joins") {
  const auto at = ColorDistanceTable::from_matrix(2, {0.0, 0.25, 0.25, 0.0});
  GroupSet joined(at, small_config());
  assign(mono(0), joined);
  CHECK(descriptor_difference(mono(0), mono(1), at) == 0.25);
  CHECK(assign(mono(1), joined) == 0);
  CHECK(joined.groups().size() == 1);

  const auto above = ColorDistanceTable::from_matrix(2, {0.0, 0.2500001, 0.2500001, 0.0});
  GroupSet split(above, small_config());
  assign(mono(0), split);
  CHECK(assign(mono(1), split) == 1);
  CHECK(split.groups().size() == 2);
}

TEST_CASE("ties go to the lowest group id") {
  const auto t = ColorDistanceTable::from_matrix(3, {0.0, 0.8, 0.2, 0.8, 0.0, 0.2, 0.2, 0.2, 0.0});
  GroupSet groups(t, small_config());
  CHECK(assign(mono(0), groups) == 0);
  CHECK(assign(mono(1), groups) == 1);
  CHECK(assign(mono(2), groups) == 0);
}

TEST_CASE("miner config validation") {
  MinerConfig cfg;
  cfg.threshold = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.min_group_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.min_palette_weight = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK(MinerConfig::desk_scale().min_group_size == 10);
  CHECK(MinerConfig{}.min_group_size == 100);
}

TEST_CASE("average palette") {
  MinerConfig cfg = small_config(2);

  Group same{0, {two(3, 0.7, 9, 0.3), two(3, 0.7, 9, 0.3)}, {"a", "b"}};
  const auto p = average_palette(same, cfg);
  CHECK(p.descriptor() == two(3, 0.7, 9, 0.3));
  CHECK(p.member_count == 2);

  Group rb{4, {mono(0), mono(70)}, {"a", "b"}};
  const auto q = average_palette(rb, cfg);
  CHECK(q.id == 4);
  CHECK(q.descriptor() == two(0, 0.5, 70, 0.5));

  Group lonely{1, {mono(0)}, {"a"}};
  CHECK_THROWS_AS(average_palette(lonely, cfg), InvalidStateError);
}

TEST_CASE("average palette drops colors under the weight cut") {
  MinerConfig cfg = small_config(2);
  cfg.min_palette_weight = 0.1;
  Group g{0, {two(1, 0.9, 2, 0.1), two(1, 0.9, 3, 0.1)}, {"a", "b"}};
  const auto p = average_palette(g, cfg);
  // Means: 1 -> 0.9, 2 -> 0.05, 3 -> 0.05.
  CHECK(p.entries.size() == 1);
  CHECK(p.entries[0].color_id == 1);
  CHECK(p.entries[0].weight == 1.0);
}

TEST_CASE("mean weights equal column means of the member-weight matrix") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> count(1, 20);
  for (int n = 0; n < 200; ++n) {
    std::vector<ColorDescriptor> members;
    const int k = count(rng);
    for (int m = 0; m < k; ++m) members.push_back(testing::random_descriptor(rng, 4, 12));
    std::vector<std::vector<double>> matrix(members.size(), std::vector<double>(12, 0.0));
    for (std::size_t r = 0; r < members.size(); ++r)
      for (const auto& e : members[r].entries) matrix[r][static_cast<std::size_t>(e.color_id)] = e.weight;
    const auto means = detail::mean_weights(members);
    for (int c = 0; c < 12; ++c) {
      double col = 0.0;
      for (const auto& row : matrix) col += row[static_cast<std::size_t>(c)];
      col /= static_cast<double>(members.size());
      const double got = means.contains(c) ? means.at(c) : 0.0;
      REQUIRE(got == Approx(col).margin(1e-12));
    }
  }
}

TEST_CASE("empty corpus yields nothing") {
  const std::vector<CorpusItem> none;
  const auto result = mine(none, testing::partition(), testing::table(), MinerConfig::desk_scale());
  CHECK(result.groups.empty());
  CHECK(result.palettes.empty());
  CHECK(result.stats.items_processed == 0);
  CHECK(result.stats.skipped.empty());
  CHECK(result.stats.convergence.empty());
}

TEST_CASE("undecodable items are skipped and reported") {
  std::vector<CorpusItem> items;
  items.push_back({"good", [] { return testing::solid(8, 8, {255, 0, 0}); }});
  items.push_back({"bad", []() -> RgbImage { throw DecodeError("not an image"); }});
  items.push_back({"good2", [] { return testing::solid(8, 8, {255, 0, 0}); }});
  std::vector<std::string> reported;
  const auto result = mine(items, testing::partition(), testing::table(), small_config(),
                           {}, [&](const std::string& id, const std::string&) { reported.push_back(id); });
  CHECK(result.stats.items_processed == 2);
  CHECK(result.stats.skipped == std::vector<std::string>{"bad"});
  CHECK(reported == std::vector<std::string>{"bad"});
  CHECK(result.groups.size() == 1);
}

TEST_CASE("every item lands in exactly one group within the threshold") {
  const auto& corpus = planted_corpus();
  const auto& t = testing::table();
  GroupSet groups(t, MinerConfig::desk_scale());
  for (const auto& img : corpus.images) {
    const auto ch = extract_descriptor(img.image, testing::partition());
    const std::size_t before = groups.groups().size();
    const int id = groups.assign(ch, img.name);
    if (groups.groups().size() == before) {
      REQUIRE(groups.last_join_difference());
      REQUIRE(*groups.last_join_difference() <= 0.25);
      // Recompute against the group as it was before the join.
      const auto& members = groups.groups()[static_cast<std::size_t>(id)].members;
      std::span<const ColorDescriptor> prior(members.data(), members.size() - 1);
      REQUIRE(group_mean_difference(ch, prior, t) == Approx(*groups.last_join_difference()).margin(1e-12));
    }
  }
  std::multiset<std::string> refs;
  for (const auto& g : groups.groups()) refs.insert(g.member_refs.begin(), g.member_refs.end());
  CHECK(refs.size() == corpus.images.size());
  CHECK(std::set<std::string>(refs.begin(), refs.end()).size() == corpus.images.size());
}

TEST_CASE("planted palettes are recovered") {
  const auto& corpus = planted_corpus();
  const auto items = as_corpus_items(corpus);
  auto cfg = MinerConfig::desk_scale();
  cfg.curve_window = 50;
  const auto result = mine(items, testing::partition(), testing::table(), cfg);
  CHECK(result.stats.items_processed == 500);
  CHECK(recovered_palettes(corpus.palettes, result.palettes, testing::table()) >= 7);

  // Founding slows down: the later half founds no more often than the first.
  const auto& curve = result.stats.convergence;
  REQUIRE(curve.size() >= 2);
  std::size_t early = 0, late = 0;
  for (std::size_t k = 0; k < curve.size(); ++k) (2 * k < curve.size() ? early : late) += curve[k].new_groups;
  CHECK(late <= early);
  CHECK(curve.back().rate() < curve.front().rate());
}

TEST_CASE("mining is deterministic for a fixed order") {
  const auto items = as_corpus_items(planted_corpus());
  const auto a = mine(items, testing::partition(), testing::table(), MinerConfig::desk_scale());
  const auto b = mine(items, testing::partition(), testing::table(), MinerConfig::desk_scale());
  CHECK(a.palettes == b.palettes);
  CHECK(to_json(KnowledgeBase{"1", a.palettes}).dump() == to_json(KnowledgeBase{"1", b.palettes}).dump());
}

TEST_CASE("property: recovery holds for shuffled corpora", "[property]") {
  auto items = as_corpus_items(planted_corpus());
  std::mt19937_64 rng(77);
  for (int n = 0; n < 5; ++n) {
    std::shuffle(items.begin(), items.end(), rng);
    const auto result = mine(items, testing::partition(), testing::table(), MinerConfig::desk_scale());
    CHECK(recovered_palettes(planted_corpus().palettes, result.palettes, testing::table()) >= 7);
  }
}

TEST_CASE("centroid mode recovers planted palettes too") {
  auto cfg = MinerConfig::desk_scale();
  cfg.mode = GroupDistanceMode::centroid;
  const auto items = as_corpus_items(planted_corpus());
  const auto result = mine(items, testing::partition(), testing::table(), cfg);
  CHECK(recovered_palettes(planted_corpus().palettes, result.palettes, testing::table()) >= 7);
}

TEST_CASE("directory corpus and knowledge base files") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "harmonia_miner_dir";
  fs::remove_all(dir);
  CorpusSpec spec;
  spec.images = 40;
  spec.palettes = 2;
  spec.seed = 5;
  const auto corpus = generate_corpus(spec, testing::partition(), testing::table());
  write_corpus(corpus, dir);
  { std::ofstream(dir / "broken.png") << "not a png"; }
  { std::ofstream(dir / "notes.txt") << "ignored"; }

  const auto items = corpus_from_directory(dir);
  CHECK(items.size() == 41);
  CHECK(std::is_sorted(items.begin(), items.end(),
                       [](const CorpusItem& a, const CorpusItem& b) { return a.id < b.id; }));
  const auto result = mine(items, testing::partition(), testing::table(), small_config(5));
  CHECK(result.stats.skipped.size() == 1);
  CHECK(result.stats.items_processed == 40);

  const KnowledgeBase kb{"1", result.palettes};
  CHECK(knowledge_base_from_json(to_json(kb), 92).palettes == kb.palettes);
  const auto manifest = detail::read_json_file(dir / "manifest.json");
  CHECK(planted_from_manifest(manifest, 92).size() == 2);
  fs::remove_all(dir);

  auto doc = to_json(kb);
  doc["palettes"].push_back(doc["palettes"][0]);
  CHECK_THROWS_AS(knowledge_base_from_json(doc, 92), ValidationError);
}

TEST_CASE("generator is deterministic and rejects impossible separations") {
  CorpusSpec spec;
  spec.images = 30;
  const auto a = generate_corpus(spec, testing::partition(), testing::table());
  const auto b = generate_corpus(spec, testing::partition(), testing::table());
  CHECK(manifest_json(a) == manifest_json(b));
  for (std::size_t k = 0; k < a.images.size(); ++k) CHECK(a.images[k].image == b.images[k].image);
  for (std::size_t i = 0; i < a.palettes.size(); ++i)
    for (std::size_t j = i + 1; j < a.palettes.size(); ++j)
      CHECK(descriptor_difference(a.palettes[i].descriptor, a.palettes[j].descriptor, testing::table()) >= 0.25);
  spec.min_separation = 0.9;
  CHECK_THROWS_AS(generate_corpus(spec, testing::partition(), testing::table()), InvalidStateError);
}
