#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <thread>

#include "support.hpp"

using namespace harmonia;
namespace fs = std::filesystem;

namespace {

const nlohmann::json kLook = nlohmann::json::parse(R"({"items":[
    {"role":"dress_costume","color_id":12},{"role":"shoes_bags","color_id":1}]})");

KnowledgeBase example_kb() {
  KnowledgeBase kb;
  kb.palettes.push_back({14, {{60, 0.6}, {63, 0.4}}, 104, "retro"});
  kb.palettes.push_back({27, {{12, 0.4}, {1, 0.35}, {40, 0.25}}, 120, "classic"});
  return kb;
}

struct Fixture {
  fs::path root;
  std::unique_ptr<Store> store;
  std::unique_ptr<Api> api;

  explicit Fixture(const std::string& name) : root(fs::temp_directory_path() / name) {
    fs::remove_all(root);
    store = Store::open(root, 92);
    store->put_palettes(example_kb());
    const std::vector<CatalogItem> catalog{
        {"belt", ApparelRole::accessory, ColorDescriptor{{{40, 1.0}}, std::nullopt}, std::nullopt, "Belt", "classic"},
        {"scarf", ApparelRole::accessory, ColorDescriptor{{{70, 1.0}}, std::nullopt}, std::nullopt, "Scarf", "retro"},
        {"bag", ApparelRole::shoes_bags, ColorDescriptor{{{91, 1.0}}, std::nullopt}, std::nullopt, "Bag", std::nullopt}};
    store->upsert_catalog(catalog);
    api = std::make_unique<Api>(testing::partition(), *store);
  }
  ~Fixture() {
    api.reset();
    store.reset();
    fs::remove_all(root);
  }
};

}  // namespace

TEST_CASE("preference endpoint equals the core computation") {
  Fixture f("harmonia_api_pref");
  REQUIRE(f.api->put_ratings("alice", nlohmann::json{{"12", 0.8}, {"1", 0.5}}).status == 200);

  const auto r = f.api->preference({{"look", kLook}, {"user_id", "alice"}});
  REQUIRE(r.status == 200);
  const UserProfile alice{"alice", {{12, 0.8}, {1, 0.5}}, 0.5};
  const auto core = predict_preference(look_from_json(kLook, 92), &alice, example_kb(), testing::table());
  CHECK(r.body.dump() == to_json(core).dump());
  CHECK(std::abs(r.body["value"].get<double>() - 0.85) <= 1e-9);
  CHECK(std::abs(r.body["components"]["weighted_scp"].get<double>() - 0.7) <= 1e-9);
  CHECK(r.body["components"]["harmony"] == 1.0);

  const auto guest = f.api->preference({{"look", kLook}, {"guest", true}});
  CHECK(guest.body["value"] == guest.body["components"]["harmony"]);
  CHECK(guest.body["components"]["weighted_scp"].is_null());

  CHECK(f.api->preference({{"look", kLook}, {"user_id", "ghost"}}).status == 404);
  CHECK(f.api->preference({{"look", kLook}, {"user_id", "alice"}, {"guest", true}}).status == 400);
  CHECK(f.api->preference({{"nolook", 1}}).status == 400);
}

TEST_CASE("harmony endpoint") {
  Fixture f("harmonia_api_harm");
  const auto r = f.api->harmony({{"colors", {12, 1}}});
  REQUIRE(r.status == 200);
  CHECK(r.body["harm"] == 1.0);
  CHECK(r.body["matched_palette_id"] == 27);
  CHECK(r.body["contained"] == true);
  CHECK(f.api->harmony({{"colors", {"x"}}}).status == 400);
  CHECK(f.api->harmony({{"colors", {400}}}).status == 400);
}

TEST_CASE("ratings validation and profile read-back") {
  Fixture f("harmonia_api_ratings");
  const auto bad = f.api->put_ratings("alice", nlohmann::json{{"12", 1.5}});
  CHECK(bad.status == 400);
  CHECK(bad.body["code"] == "bad_request");
  CHECK(f.api->put_ratings("alice", nlohmann::json{{"200", 0.5}}).status == 400);
  CHECK(f.api->put_ratings("../etc", nlohmann::json{{"1", 0.5}}).status == 400);
  CHECK(f.api->get_profile("alice").status == 404);

  CHECK(f.api->put_ratings("alice", {{"ratings", {{"3", 0.2}}}, {"default_rating", 0.4}}).status == 200);
  const auto p = f.api->get_profile("alice");
  CHECK(p.body["default_rating"] == 0.4);
  CHECK(p.body["ratings"]["3"] == 0.2);
}

TEST_CASE("rank endpoint equals the core ranking") {
  Fixture f("harmonia_api_rank");
  const nlohmann::json anchor = nlohmann::json::parse(R"({"items":[{"role":"dress_costume","color_id":12}]})");
  const auto r = f.api->rank({{"anchor", anchor}});
  REQUIRE(r.status == 200);
  const auto items = f.store->list_catalog();
  std::vector<ApparelItem> candidates;
  for (const auto& i : items) candidates.push_back(i.as_apparel());
  const auto core = rank_catalog(look_from_json(anchor, 92), candidates, nullptr, example_kb(), testing::table());
  REQUIRE(r.body["ranked"].size() == core.size());
  for (std::size_t k = 0; k < core.size(); ++k) {
    CHECK(r.body["ranked"][k]["item"]["item_id"] == items[core[k].index].item_id);
    CHECK(r.body["ranked"][k]["score"].dump() == to_json(core[k].score).dump());
  }
  CHECK(r.body["ranked"][0]["item"]["item_id"] == "belt");

  const auto filtered = f.api->rank({{"anchor", anchor}, {"filter", {{"role", "shoes_bags"}}}});
  CHECK(filtered.body["ranked"].size() == 1);
  CHECK(f.api->rank({{"anchor", anchor}, {"filter", {{"label", "none"}}}}).status == 404);
}

TEST_CASE("colors, palettes and descriptor endpoints") {
  Fixture f("harmonia_api_misc");
  const auto colors = f.api->colors();
  REQUIRE(colors.body["colors"].size() == 92);
  CHECK(colors.body["colors"][91]["name"] == "white");
  CHECK(colors.body["colors"][91]["hex"].get<std::string>().size() == 7);

  CHECK(f.api->palettes(std::nullopt).body["palettes"].size() == 2);
  const auto retro = f.api->palettes("retro");
  REQUIRE(retro.body["palettes"].size() == 1);
  CHECK(retro.body["palettes"][0]["id"] == 14);

  const auto png = encode_png(testing::solid(16, 16, {255, 0, 0}));
  const auto d = f.api->descriptor(std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
  REQUIRE(d.status == 200);
  CHECK(d.body == to_json(extract_descriptor(testing::solid(16, 16, {255, 0, 0}), testing::partition())));
  CHECK(f.api->descriptor("garbage").status == 400);
}

TEST_CASE("mine endpoint publishes palettes") {
  Fixture f("harmonia_api_mine");
  const auto corpus_dir = f.root.parent_path() / "harmonia_api_mine_corpus";
  fs::remove_all(corpus_dir);
  CorpusSpec spec;
  spec.images = 60;
  spec.palettes = 2;
  write_corpus(generate_corpus(spec, testing::partition(), testing::table()), corpus_dir);

  const auto dry = f.api->mine({{"corpus", corpus_dir.string()}, {"publish", false}});
  REQUIRE(dry.status == 200);
  CHECK(dry.body["published"] == false);
  CHECK(f.store->knowledge_base().palettes == example_kb().palettes);

  const auto r = f.api->mine({{"corpus", corpus_dir.string()}});
  REQUIRE(r.status == 200);
  CHECK(r.body["items_processed"] == 60);
  CHECK(f.store->knowledge_base().palettes.size() == r.body["promoted_count"].get<std::size_t>());

  CHECK(f.api->mine({{"corpus", corpus_dir.string()}, {"config", {{"threshold", 2.0}}}}).status == 400);
  CHECK(f.api->mine({{"corpus", (corpus_dir / "missing").string()}}).status >= 400);

  Api limited(testing::partition(), *f.store, ServiceOptions{"*", 10, {}});
  CHECK(limited.mine({{"corpus", corpus_dir.string()}}).status == 400);
  fs::remove_all(corpus_dir);
}

TEST_CASE("empty knowledge base maps to invalid_state") {
  const auto root = fs::temp_directory_path() / "harmonia_api_empty";
  fs::remove_all(root);
  {
    Store store(root, 92);
    Api api(testing::partition(), store);
    const auto r = api.harmony({{"colors", {1}}});
    CHECK(r.status == 409);
    CHECK(r.body["code"] == "invalid_state");
  }
  fs::remove_all(root);
}

TEST_CASE("HTTP responses match the in-process API") {
  Fixture f("harmonia_api_http");
  httplib::Server server;
  mount(server, *f.api);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread loop([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto put = client.Put("/api/users/alice/ratings", R"({"12":0.8,"1":0.5})", "application/json");
  REQUIRE(put);
  CHECK(put->status == 200);
  CHECK(put->get_header_value("Access-Control-Allow-Origin") == "*");

  const nlohmann::json body{{"look", kLook}, {"user_id", "alice"}};
  auto pref = client.Post("/api/preference", body.dump(), "application/json");
  REQUIRE(pref);
  CHECK(pref->status == 200);
  CHECK(pref->body == f.api->preference(body).body.dump());

  auto bad = client.Put("/api/users/alice/ratings", R"({"12":1.5})", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(nlohmann::json::parse(bad->body)["code"] == "bad_request");

  auto malformed = client.Post("/api/harmony", "{nope", "application/json");
  REQUIRE(malformed);
  CHECK(malformed->status == 400);

  auto user = client.Get("/api/users/alice");
  REQUIRE(user);
  CHECK(user->body == f.api->get_profile("alice").body.dump());
  auto missing = client.Get("/api/users/bob");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  auto palettes = client.Get("/api/palettes?label=classic");
  REQUIRE(palettes);
  CHECK(palettes->body == f.api->palettes("classic").body.dump());

  auto colors = client.Get("/api/colors");
  REQUIRE(colors);
  CHECK(colors->body == f.api->colors().body.dump());

  auto options = client.Options("/api/harmony");
  REQUIRE(options);
  CHECK(options->status == 204);

  server.stop();
  loop.join();
}
