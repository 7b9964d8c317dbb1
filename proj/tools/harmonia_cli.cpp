// harmonia: command-line front end for extraction, mining, scoring, ranking,
// evaluation, synthetic corpus generation and the HTTP service.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 internal.
// Failures print a single JSON line {"error": kind, "message": ...} on stderr.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "harmonia/harmonia.hpp"

namespace fs = std::filesystem;
using namespace harmonia;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

int fail(std::string_view kind, std::string_view message, int code) {
  std::cerr << nlohmann::json{{"error", std::string(kind)}, {"message", std::string(message)}}.dump() << '\n';
  return code;
}

Partition partition_or_default(const std::string& path) {
  return path.empty() ? default_partition() : load_partition(path);
}

KnowledgeBase load_kb(const std::string& path, const Partition& partition) {
  return knowledge_base_from_json(detail::read_json_file(path), partition.size());
}

void print(const nlohmann::json& doc) { std::cout << detail::dump(doc); }

httplib::Server* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fuzzy color harmony and look preference toolkit", "harmonia"};
  app.require_subcommand(1);

  std::string partition_path;
  app.add_option("--partition", partition_path, "Partition JSON file (default: generated 92-color partition)");

  // extract
  auto* extract = app.add_subcommand("extract", "Print the fuzzy dominant color descriptor of an image");
  std::string image_path;
  DescriptorConfig dcfg;
  extract->add_option("image", image_path, "PNG or JPEG image")->required();
  extract->add_option("--min-share", dcfg.min_share, "Drop colors below this share")->capture_default_str();
  extract->add_option("--max-dominant", dcfg.max_dominant, "Keep at most this many colors")->capture_default_str();

  // mine
  auto* mine_cmd = app.add_subcommand("mine", "Mine harmonious palettes from a directory of images");
  std::string corpus_dir, kb_out = "kb.json", stats_out, curve_out, manifest_path;
  MinerConfig mcfg;
  mine_cmd->add_option("dir", corpus_dir, "Directory of PNG/JPEG images")->required();
  mine_cmd->add_option("--threshold", mcfg.threshold, "Group difference threshold")->capture_default_str();
  mine_cmd->add_option("--min-size", mcfg.min_group_size, "Members needed to promote a group")->capture_default_str();
  mine_cmd->add_option("--min-weight", mcfg.min_palette_weight, "Drop palette colors below this mean weight")
      ->capture_default_str();
  mine_cmd->add_option("--window", mcfg.curve_window, "Items per convergence-curve bucket")->capture_default_str();
  mine_cmd->add_option("--out", kb_out, "Knowledge base output")->capture_default_str();
  mine_cmd->add_option("--stats", stats_out, "Write the run statistics JSON here");
  mine_cmd->add_option("--curve", curve_out, "Write the convergence curve CSV here");
  mine_cmd->add_option("--manifest", manifest_path, "Ground-truth manifest; reports recovered palettes");

  // score
  auto* score = app.add_subcommand("score", "Predict a user's preference for a look");
  std::string look_path, user_path, kb_path;
  bool guest = false;
  score->add_option("--look", look_path, "Look JSON")->required();
  auto* user_opt = score->add_option("--user", user_path, "User profile JSON");
  score->add_flag("--guest", guest, "Score without a profile (harmony only)")->excludes(user_opt);
  score->add_option("--kb", kb_path, "Palette knowledge base JSON")->required();

  // rank
  auto* rank = app.add_subcommand("rank", "Rank catalog items by preference next to an anchor look");
  std::string anchor_path, catalog_path, rank_user, rank_kb, role_filter, label_filter;
  rank->add_option("--anchor", anchor_path, "Anchor look JSON")->required();
  rank->add_option("--catalog", catalog_path, "Catalog JSON")->required();
  rank->add_option("--user", rank_user, "User profile JSON (guest when omitted)");
  rank->add_option("--kb", rank_kb, "Palette knowledge base JSON")->required();
  rank->add_option("--role", role_filter, "Only rank items with this role");
  rank->add_option("--label", label_filter, "Only rank items with this style label");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluation metrics");
  eval->require_subcommand(1);
  std::string fixtures_path, pairs_path;
  bool as_table = false;
  auto* eval_pr = eval->add_subcommand("pr", "Averaged precision/recall and relevance ratio");
  eval_pr->add_option("--fixtures", fixtures_path, "Query fixtures JSON")->required();
  eval_pr->add_flag("--table", as_table, "Print a plain-text table instead of JSON");
  auto* eval_diff = eval->add_subcommand("diff", "Average absolute preference difference");
  eval_diff->add_option("--pairs", pairs_path, "Preference pairs JSON")->required();

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic planted-palette corpus");
  CorpusSpec spec;
  std::string gen_out;
  gen->add_option("--palettes", spec.palettes, "Planted palettes")->capture_default_str();
  gen->add_option("--images", spec.images, "Images to generate")->capture_default_str();
  gen->add_option("--noise", spec.noise, "Fraction of images drawn from random palettes")->capture_default_str();
  gen->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
  gen->add_option("--width", spec.width, "Image width")->capture_default_str();
  gen->add_option("--height", spec.height, "Image height")->capture_default_str();
  gen->add_option("--separation", spec.min_separation, "Minimum difference between planted palettes")
      ->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string store_dir, host = "127.0.0.1", cors = "*";
  int port = 8080;
  std::size_t max_items = 5000;
  serve->add_option("--store", store_dir, "Store root directory")->required();
  serve->add_option("--port", port, "Port")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--cors-origin", cors, "Allowed CORS origin")->capture_default_str();
  serve->add_option("--max-mine-items", max_items, "Largest corpus accepted by /api/mine")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kExitUsage);
  }

  try {
    const Partition partition = partition_or_default(partition_path);
    const ColorDistanceTable table(partition);

    if (*extract) {
      print(to_json(extract_descriptor(read_image(image_path), partition, dcfg)));
    } else if (*mine_cmd) {
      const auto items = corpus_from_directory(corpus_dir);
      auto result = mine(items, partition, table, mcfg, {}, [](const std::string& id, const std::string& why) {
        std::cerr << nlohmann::json{{"skipped", id}, {"reason", why}}.dump() << '\n';
      });
      detail::write_json_file(kb_out, to_json(KnowledgeBase{"1", result.palettes}));
      if (!stats_out.empty()) detail::write_json_file(stats_out, to_json(result.stats));
      if (!curve_out.empty()) {
        std::ofstream csv(curve_out);
        if (!csv) throw IoError("cannot write " + curve_out);
        write_convergence_csv(result.stats, csv);
      }
      nlohmann::json summary{{"items_processed", result.stats.items_processed},
                             {"skipped", result.stats.skipped.size()},
                             {"group_count", result.stats.group_count},
                             {"promoted_count", result.stats.promoted_count},
                             {"kb", kb_out}};
      if (!manifest_path.empty()) {
        const auto planted = planted_from_manifest(detail::read_json_file(manifest_path), partition.size());
        summary["planted"] = planted.size();
        summary["recovered"] = recovered_palettes(planted, result.palettes, table);
      }
      print(summary);
    } else if (*score) {
      const Look look = look_from_json(detail::read_json_file(look_path), partition.size());
      std::optional<UserProfile> user;
      if (!user_path.empty()) user = profile_from_json(detail::read_json_file(user_path));
      else if (!guest) return fail("usage", "score needs --user or --guest", kExitUsage);
      print(to_json(predict_preference(look, user, load_kb(kb_path, partition), table)));
    } else if (*rank) {
      const Look anchor = look_from_json(detail::read_json_file(anchor_path), partition.size());
      CatalogFilter filter;
      if (!role_filter.empty()) filter.role = parse_role(role_filter);
      if (!label_filter.empty()) filter.label = label_filter;
      std::vector<CatalogItem> items;
      for (auto& item : catalog_from_json(detail::read_json_file(catalog_path), partition.size()))
        if (filter.matches(item)) items.push_back(std::move(item));
      if (items.empty()) throw NotFoundError("no catalog items match the filter");
      std::optional<UserProfile> user;
      if (!rank_user.empty()) user = profile_from_json(detail::read_json_file(rank_user));
      std::vector<ApparelItem> candidates;
      for (const auto& item : items) candidates.push_back(item.as_apparel());
      const auto ranked =
          rank_catalog(anchor, candidates, user ? &*user : nullptr, load_kb(rank_kb, partition), table);
      nlohmann::json out = nlohmann::json::array();
      for (const auto& r : ranked)
        out.push_back({{"item_id", items[r.index].item_id}, {"name", items[r.index].name}, {"score", to_json(r.score)}});
      print({{"ranked", std::move(out)}});
    } else if (*eval_pr) {
      const auto queries = queries_from_json(detail::read_json_file(fixtures_path));
      const auto pr = precision_recall(queries);
      if (as_table)
        write_table(std::cout, queries, pr);
      else
        print(to_json(pr, queries.size()));
    } else if (*eval_diff) {
      const auto pairs = pairs_from_json(detail::read_json_file(pairs_path));
      print({{"pairs", pairs.size()}, {"average_difference", average_difference(pairs)}});
    } else if (*gen) {
      const auto corpus = generate_corpus(spec, partition, table);
      write_corpus(corpus, gen_out);
      print({{"images", corpus.images.size()},
             {"palettes", corpus.palettes.size()},
             {"manifest", (fs::path(gen_out) / "manifest.json").string()}});
    } else if (*serve) {
      Store store(store_dir, partition.size());
      ServiceOptions options;
      options.cors_origin = cors;
      options.max_mine_items = max_items;
      Api api(partition, store, options);
      httplib::Server server;
      mount(server, api);
      g_server = &server;
      std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
      std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
      std::cerr << "listening on " << host << ':' << port << '\n';
      if (!server.listen(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    }
  } catch (const Error& e) {
    return fail(to_string(e.kind()), e.what(), kExitData);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kExitInternal);
  }
  return 0;
}
