#pragma once

// Streaming grouping of image descriptors into harmonious palettes.
//
// Every incoming descriptor is compared with each existing group by its mean
// difference to the group's members. If even the best group is farther than
// the threshold a new group is founded; otherwise the descriptor joins the
// best group. Groups that reach `min_group_size` are averaged into palettes.

#include <chrono>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "harmonia/descriptor.hpp"
#include "harmonia/detail/json_util.hpp"
#include "harmonia/error.hpp"
#include "harmonia/image.hpp"
#include "harmonia/similarity.hpp"

namespace harmonia {

struct Group {
  int id = 0;
  std::vector<ColorDescriptor> members;
  std::vector<std::string> member_refs;
};

struct HarmoniousPalette {
  int id = 0;
  std::vector<DescriptorEntry> entries;
  std::size_t member_count = 0;
  std::optional<std::string> label;

  friend bool operator==(const HarmoniousPalette&, const HarmoniousPalette&) = default;

  ColorDescriptor descriptor() const { return ColorDescriptor{entries, std::nullopt}; }
  bool contains(int color_id) const {
    return std::any_of(entries.begin(), entries.end(),
                       [&](const DescriptorEntry& e) { return e.color_id == color_id; });
  }
};

enum class GroupDistanceMode {
  exact,     // mean over all stored members
  centroid,  // difference to the running mean descriptor (large corpora)
};

struct MinerConfig {
  double threshold = 0.25;
  std::size_t min_group_size = 100;
  double min_palette_weight = 0.1;
  GroupDistanceMode mode = GroupDistanceMode::exact;
  /// Items per bucket of the convergence curve.
  std::size_t curve_window = 1000;

  /// Desk-scale preset: same algorithm, groups of 10 are promoted.
  static MinerConfig desk_scale() {
    MinerConfig cfg;
    cfg.min_group_size = 10;
    return cfg;
  }

  void validate() const {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("threshold must lie in (0,1)");
    if (min_group_size < 1) throw ValidationError("min_group_size must be at least 1");
    if (!(min_palette_weight >= 0.0 && min_palette_weight < 1.0))
      throw ValidationError("min_palette_weight must lie in [0,1)");
    if (curve_window < 1) throw ValidationError("curve_window must be at least 1");
  }
};

namespace detail {

// Column means of the member-weight matrix (absent ids count as 0).
inline std::map<int, double> mean_weights(std::span<const ColorDescriptor> members) {
  std::map<int, double> sums;
  for (const auto& m : members)
    for (const auto& e : m.entries) sums[e.color_id] += e.weight;
  for (auto& [id, w] : sums) w /= static_cast<double>(members.size());
  return sums;
}

inline ColorDescriptor mean_descriptor(std::span<const ColorDescriptor> members) {
  ColorDescriptor d;
  for (const auto& [id, w] : mean_weights(members)) d.entries.push_back({id, w});
  normalize_entries(d.entries);
  sort_entries(d.entries);
  return d;
}

}  // namespace detail

/// Averaged palette of a group: per-id mean weight, ids below the minimum
/// palette weight dropped, renormalized.
inline HarmoniousPalette average_palette(const Group& g, const MinerConfig& cfg) {
  if (g.members.empty() || g.members.size() < cfg.min_group_size)
    throw InvalidStateError("group " + std::to_string(g.id) + " has " + std::to_string(g.members.size()) +
                            " members, below the minimum of " + std::to_string(cfg.min_group_size));
  HarmoniousPalette p;
  p.id = g.id;
  p.member_count = g.members.size();
  const auto means = detail::mean_weights(g.members);
  for (const auto& [id, w] : means)
    if (w >= cfg.min_palette_weight) p.entries.push_back({id, w});
  if (p.entries.empty()) {
    // Every id fell under the cut; keep the heaviest one.
    auto best = std::max_element(means.begin(), means.end(),
                                 [](const auto& x, const auto& y) { return x.second < y.second; });
    p.entries.push_back({best->first, best->second});
  }
  detail::normalize_entries(p.entries);
  detail::sort_entries(p.entries);
  return p;
}

/// The mutable set of groups built by one mining run. Single writer.
class GroupSet {
 public:
  explicit GroupSet(const ColorDistanceTable& table, MinerConfig cfg = {}) : table_(&table), cfg_(cfg) {
    cfg_.validate();
  }

  const std::vector<Group>& groups() const { return groups_; }
  const MinerConfig& config() const { return cfg_; }

  /// Mean difference of `ch` to group `index` under the configured mode.
  double distance_to(const ColorDescriptor& ch, std::size_t index) const {
    if (cfg_.mode == GroupDistanceMode::centroid) return descriptor_difference(ch, centroids_[index], *table_);
    return group_mean_difference(ch, groups_[index].members, *table_);
  }

  /// Places `ch` in its closest group, or founds a new group when the closest
  /// is farther than the threshold. Ties go to the lowest group id.
  int assign(const ColorDescriptor& ch, std::string ref = {}) {
    if (ch.entries.empty()) throw ValidationError("cannot assign an empty descriptor");
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    for (std::size_t k = 0; k < groups_.size(); ++k) {
      const double d = distance_to(ch, k);
      if (d < best) {
        best = d;
        best_index = k;
      }
    }
    if (groups_.empty() || best > cfg_.threshold) {
      Group g;
      g.id = static_cast<int>(groups_.size());
      g.members.push_back(ch);
      g.member_refs.push_back(std::move(ref));
      groups_.push_back(std::move(g));
      if (cfg_.mode == GroupDistanceMode::centroid) centroids_.push_back(ch);
      last_join_difference_.reset();
      return groups_.back().id;
    }
    Group& g = groups_[best_index];
    g.members.push_back(ch);
    g.member_refs.push_back(std::move(ref));
    if (cfg_.mode == GroupDistanceMode::centroid) centroids_[best_index] = detail::mean_descriptor(g.members);
    last_join_difference_ = best;
    return g.id;
  }

  /// Difference at which the last assigned descriptor joined its group;
  /// empty when it founded one.
  std::optional<double> last_join_difference() const { return last_join_difference_; }

  std::vector<HarmoniousPalette> promote() const {
    std::vector<HarmoniousPalette> out;
    for (const auto& g : groups_)
      if (g.members.size() >= cfg_.min_group_size) out.push_back(average_palette(g, cfg_));
    return out;
  }

 private:
  const ColorDistanceTable* table_;
  MinerConfig cfg_;
  std::vector<Group> groups_;
  std::vector<ColorDescriptor> centroids_;
  std::optional<double> last_join_difference_;
};

/// Convenience wrapper over GroupSet::assign.
inline int assign(const ColorDescriptor& ch, GroupSet& groups, std::string ref = {}) {
  return groups.assign(ch, std::move(ref));
}

struct ConvergencePoint {
  std::size_t window_start = 0;  // index of the first item in the window
  std::size_t items = 0;
  std::size_t new_groups = 0;
  double rate() const { return items == 0 ? 0.0 : static_cast<double>(new_groups) / static_cast<double>(items); }
};

struct MiningStats {
  std::size_t items_processed = 0;
  std::vector<std::string> skipped;  // ids that failed to decode
  std::size_t group_count = 0;
  std::size_t promoted_count = 0;
  double mean_item_ms = 0.0;
  double max_item_ms = 0.0;
  double total_ms = 0.0;
  std::vector<ConvergencePoint> convergence;
};

struct MiningResult {
  std::vector<Group> groups;
  std::vector<HarmoniousPalette> palettes;
  MiningStats stats;
};

struct CorpusItem {
  std::string id;
  std::function<RgbImage()> load;
};

/// One sequential pass over the corpus in iteration order. Items whose
/// image fails to load are reported through `on_skip` and skipped.
inline MiningResult mine(std::span<const CorpusItem> corpus, const Partition& partition,
                         const ColorDistanceTable& table, const MinerConfig& cfg,
                         const DescriptorConfig& dcfg = {},
                         const std::function<void(const std::string&, const std::string&)>& on_skip = {}) {
  using clock = std::chrono::steady_clock;
  GroupSet groups(table, cfg);
  MiningStats stats;
  const auto run_start = clock::now();
  std::size_t position = 0;
  for (const auto& item : corpus) {
    const auto t0 = clock::now();
    ColorDescriptor ch;
    try {
      ch = extract_descriptor(item.load(), partition, dcfg);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::decode && e.kind() != ErrorKind::validation) throw;
      stats.skipped.push_back(item.id);
      if (on_skip) on_skip(item.id, e.what());
      continue;
    }
    const std::size_t before = groups.groups().size();
    groups.assign(ch, item.id);
    const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    stats.mean_item_ms += ms;
    stats.max_item_ms = std::max(stats.max_item_ms, ms);

    if (position % cfg.curve_window == 0) stats.convergence.push_back({position, 0, 0});
    auto& bucket = stats.convergence.back();
    ++bucket.items;
    if (groups.groups().size() > before) ++bucket.new_groups;
    ++position;
  }
  stats.items_processed = position;
  if (position > 0) stats.mean_item_ms /= static_cast<double>(position);
  MiningResult result;
  result.palettes = groups.promote();
  result.groups = groups.groups();
  stats.group_count = result.groups.size();
  stats.promoted_count = result.palettes.size();
  stats.total_ms = std::chrono::duration<double, std::milli>(clock::now() - run_start).count();
  result.stats = std::move(stats);
  return result;
}

/// Image files of a directory (non-recursive), sorted by file name so the
/// mining order is reproducible. Images are decoded lazily.
inline std::vector<CorpusItem> corpus_from_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw NotFoundError("corpus directory " + dir.string() + " not found");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && is_image_path(entry.path())) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<CorpusItem> items;
  for (auto& f : files) {
    std::string id = f.filename().string();
    items.push_back({std::move(id), [f] { return read_image(f); }});
  }
  return items;
}

inline nlohmann::json to_json(const MiningStats& s) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& c : s.convergence)
    curve.push_back({{"window_start", c.window_start}, {"items", c.items}, {"new_groups", c.new_groups},
                     {"rate", c.rate()}});
  return {{"items_processed", s.items_processed},
          {"skipped", s.skipped},
          {"group_count", s.group_count},
          {"promoted_count", s.promoted_count},
          {"mean_item_ms", s.mean_item_ms},
          {"max_item_ms", s.max_item_ms},
          {"total_ms", s.total_ms},
          {"convergence", std::move(curve)}};
}

inline void write_convergence_csv(const MiningStats& s, std::ostream& out) {
  out << "window_start,items,new_groups,rate\n";
  for (const auto& c : s.convergence)
    out << c.window_start << ',' << c.items << ',' << c.new_groups << ',' << c.rate() << '\n';
}

// ---------------------------------------------------------------------------
// Palette knowledge base: {version, palettes:[{id, label?, member_count, entries:[{id,w}]}]}

struct KnowledgeBase {
  std::string version = "1";
  std::vector<HarmoniousPalette> palettes;

  friend bool operator==(const KnowledgeBase&, const KnowledgeBase&) = default;

  bool empty() const { return palettes.empty(); }
  const HarmoniousPalette* find(int id) const {
    for (const auto& p : palettes)
      if (p.id == id) return &p;
    return nullptr;
  }
};

inline nlohmann::json to_json(const HarmoniousPalette& p) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : p.entries) entries.push_back({{"id", e.color_id}, {"w", e.weight}});
  nlohmann::json out{{"id", p.id}, {"member_count", p.member_count}, {"entries", std::move(entries)}};
  if (p.label) out["label"] = *p.label;
  return out;
}

inline HarmoniousPalette palette_from_json(const nlohmann::json& j, std::size_t color_count = 0) {
  HarmoniousPalette p;
  p.id = static_cast<int>(detail::require_integer(j, "id", "palette"));
  const std::string where = "palette " + std::to_string(p.id);
  const long long count = detail::require_integer(j, "member_count", where);
  if (count < 0) throw ValidationError(where + ": negative member_count");
  p.member_count = static_cast<std::size_t>(count);
  if (j.contains("label") && !j["label"].is_null()) {
    if (!j["label"].is_string()) throw ParseError(where + ": label must be a string");
    p.label = j["label"].get<std::string>();
  }
  try {
    p.entries = descriptor_from_json(j, color_count).entries;
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
  return p;
}

inline nlohmann::json to_json(const KnowledgeBase& kb) {
  nlohmann::json palettes = nlohmann::json::array();
  for (const auto& p : kb.palettes) palettes.push_back(to_json(p));
  return {{"version", kb.version}, {"palettes", std::move(palettes)}};
}

inline KnowledgeBase knowledge_base_from_json(const nlohmann::json& j, std::size_t color_count = 0) {
  KnowledgeBase kb;
  kb.version = detail::require_string(j, "version", "knowledge base");
  std::set<int> ids;
  for (const auto& entry : detail::require_array(j, "palettes", "knowledge base")) {
    kb.palettes.push_back(palette_from_json(entry, color_count));
    if (!ids.insert(kb.palettes.back().id).second)
      throw ValidationError("knowledge base repeats palette id " + std::to_string(kb.palettes.back().id));
  }
  return kb;
}

}  // namespace harmonia
