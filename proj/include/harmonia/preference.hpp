#pragma once

// Look preference: weighted single-color preferences combined with the
// harmony of the look's colors against the mined palette knowledge base.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "harmonia/descriptor.hpp"
#include "harmonia/detail/json_util.hpp"
#include "harmonia/error.hpp"
#include "harmonia/miner.hpp"
#include "harmonia/similarity.hpp"

namespace harmonia {

enum class ApparelRole { dress_costume, up_down, shoes_bags, accessory };

inline constexpr double role_weight(ApparelRole role) {
  switch (role) {
    case ApparelRole::dress_costume: return 1.0;
    case ApparelRole::up_down: return 0.75;
    case ApparelRole::shoes_bags: return 0.5;
    case ApparelRole::accessory: return 0.25;
  }
  return 0.0;
}

inline std::string_view to_string(ApparelRole role) {
  switch (role) {
    case ApparelRole::dress_costume: return "dress_costume";
    case ApparelRole::up_down: return "up_down";
    case ApparelRole::shoes_bags: return "shoes_bags";
    case ApparelRole::accessory: return "accessory";
  }
  return "unknown";
}

inline ApparelRole parse_role(std::string_view name) {
  if (name == "dress_costume") return ApparelRole::dress_costume;
  if (name == "up_down") return ApparelRole::up_down;
  if (name == "shoes_bags") return ApparelRole::shoes_bags;
  if (name == "accessory") return ApparelRole::accessory;
  throw ValidationError("unknown apparel role '" + std::string(name) + "'");
}

struct UserProfile {
  std::string user_id;
  std::map<int, double> ratings;
  double default_rating = 0.5;

  friend bool operator==(const UserProfile&, const UserProfile&) = default;

  double rating(int color_id) const {
    auto it = ratings.find(color_id);
    return it == ratings.end() ? default_rating : it->second;
  }

  void validate() const {
    auto in_range = [](double r) { return r >= 0.0 && r <= 1.0; };
    if (user_id.empty()) throw ValidationError("profile needs a user_id");
    if (!in_range(default_rating))
      throw ValidationError("profile " + user_id + ": default_rating outside [0,1]");
    for (const auto& [id, r] : ratings)
      if (!in_range(r))
        throw ValidationError("profile " + user_id + ": rating for color " + std::to_string(id) +
                              " outside [0,1]");
  }
};

struct ApparelItem {
  ApparelRole role = ApparelRole::dress_costume;
  std::variant<int, ColorDescriptor> color;

  double weight() const { return role_weight(role); }

  /// Color used for the single-color preference lookup.
  int dominant_color() const {
    if (const int* id = std::get_if<int>(&color)) return *id;
    return std::get<ColorDescriptor>(color).dominant();
  }

  ColorDescriptor descriptor() const {
    if (const int* id = std::get_if<int>(&color)) return ColorDescriptor{{{*id, 1.0}}, std::nullopt};
    return std::get<ColorDescriptor>(color);
  }
};

struct Look {
  std::optional<std::string> id;
  std::vector<ApparelItem> items;

  void validate() const {
    if (items.empty()) throw ValidationError("look has no items");
    double total = 0.0;
    for (const auto& item : items) total += item.weight();
    if (!(total > 0.0)) throw ValidationError("look has zero total weight");
  }
};

struct HarmonyResult {
  double harm = 0.0;
  int palette_id = 0;
  bool contained = false;  // a palette holds every queried color
};

struct PreferenceScore {
  double value = 0.0;
  std::optional<double> weighted_scp;  // absent for guests
  double harmony = 0.0;
  std::optional<int> matched_palette_id;
};

/// Harmony of a color set. 1 when some palette contains every queried color
/// (ties: most members, then lowest id); otherwise the best similarity of the
/// query descriptor to any palette (ties: lowest id).
inline HarmonyResult harmony(const ColorDescriptor& query, const KnowledgeBase& kb, const ColorDistanceTable& table) {
  if (kb.empty()) throw InvalidStateError("palette knowledge base is empty; run mining first");
  if (query.entries.empty()) throw ValidationError("harmony query has no colors");

  const HarmoniousPalette* container = nullptr;
  for (const auto& p : kb.palettes) {
    const bool holds_all = std::all_of(query.entries.begin(), query.entries.end(),
                                       [&](const DescriptorEntry& e) { return p.contains(e.color_id); });
    if (!holds_all) continue;
    if (!container || p.member_count > container->member_count ||
        (p.member_count == container->member_count && p.id < container->id))
      container = &p;
  }
  if (container) return {1.0, container->id, true};

  HarmonyResult best{-1.0, 0, false};
  for (const auto& p : kb.palettes) {
    const double sim = palette_similarity(query, p.descriptor(), table);
    if (sim > best.harm || (sim == best.harm && p.id < best.palette_id)) {
      best.harm = sim;
      best.palette_id = p.id;
    }
  }
  return best;
}

/// Harmony of a set of color ids, each weighted equally.
inline HarmonyResult harmony(std::span<const int> color_ids, const KnowledgeBase& kb, const ColorDistanceTable& table) {
  if (color_ids.empty()) throw ValidationError("harmony query has no colors");
  std::set<int> unique(color_ids.begin(), color_ids.end());
  ColorDescriptor q;
  for (int id : unique) {
    if (id < 0 || static_cast<std::size_t>(id) >= table.size())
      throw ValidationError("unknown color id " + std::to_string(id));
    q.entries.push_back({id, 1.0});
  }
  detail::normalize_entries(q.entries);
  detail::sort_entries(q.entries);
  return harmony(q, kb, table);
}

/// All colors of a look merged into one descriptor, each item's entries
/// scaled by its role weight.
inline ColorDescriptor look_descriptor(const Look& look) {
  std::map<int, double> merged;
  for (const auto& item : look.items)
    for (const auto& e : item.descriptor().entries) merged[e.color_id] += e.weight * item.weight();
  ColorDescriptor d;
  for (const auto& [id, w] : merged) d.entries.push_back({id, w});
  detail::normalize_entries(d.entries);
  detail::sort_entries(d.entries);
  return d;
}

/// Role-weighted mean of the user's single-color ratings.
inline double weighted_single_color_preference(const Look& look, const UserProfile& user) {
  double num = 0.0, den = 0.0;
  for (const auto& item : look.items) {
    num += user.rating(item.dominant_color()) * item.weight();
    den += item.weight();
  }
  return num / den;
}

/// Maps the two addends onto [0,1] by averaging; harmony alone for guests.
inline double combine_preference(std::optional<double> weighted_scp, double harm) {
  return weighted_scp ? (*weighted_scp + harm) / 2.0 : harm;
}

/// Weighted single-color preference averaged with harmony, both in [0,1].
/// Guests (no profile) score the harmony alone.
inline PreferenceScore predict_preference(const Look& look, const UserProfile* user, const KnowledgeBase& kb,
                                          const ColorDistanceTable& table) {
  look.validate();
  for (const auto& item : look.items)
    for (const auto& e : item.descriptor().entries)
      if (e.color_id < 0 || static_cast<std::size_t>(e.color_id) >= table.size())
        throw ValidationError("look references unknown color id " + std::to_string(e.color_id));
  const HarmonyResult h = harmony(look_descriptor(look), kb, table);
  PreferenceScore score;
  score.harmony = h.harm;
  score.matched_palette_id = h.palette_id;
  if (user != nullptr) score.weighted_scp = weighted_single_color_preference(look, *user);
  score.value = combine_preference(score.weighted_scp, h.harm);
  return score;
}

inline PreferenceScore predict_preference(const Look& look, const std::optional<UserProfile>& user,
                                          const KnowledgeBase& kb, const ColorDistanceTable& table) {
  return predict_preference(look, user ? &*user : nullptr, kb, table);
}

struct RankedCandidate {
  std::size_t index = 0;  // position in the input candidate list
  PreferenceScore score;
};

/// Scores anchor + candidate for every candidate and sorts descending.
/// Equal scores keep their input order.
inline std::vector<RankedCandidate> rank_catalog(const Look& anchor, std::span<const ApparelItem> candidates,
                                                 const UserProfile* user, const KnowledgeBase& kb,
                                                 const ColorDistanceTable& table) {
  if (candidates.empty()) throw ValidationError("no candidates to rank");
  std::vector<RankedCandidate> ranked;
  ranked.reserve(candidates.size());
  Look trial = anchor;
  trial.items.push_back(candidates.front());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    trial.items.back() = candidates[k];
    ranked.push_back({k, predict_preference(trial, user, kb, table)});
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const RankedCandidate& x, const RankedCandidate& y) {
    return x.score.value > y.score.value;
  });
  return ranked;
}

// ---------------------------------------------------------------------------
// Look file: {items:[{role, color_id | descriptor}]}
// Profile file: {user_id, default_rating, ratings:{"<color_id>": r}}

inline nlohmann::json to_json(const ApparelItem& item) {
  nlohmann::json j{{"role", std::string(to_string(item.role))}};
  if (const int* id = std::get_if<int>(&item.color))
    j["color_id"] = *id;
  else
    j["descriptor"] = to_json(std::get<ColorDescriptor>(item.color));
  return j;
}

inline ApparelItem apparel_item_from_json(const nlohmann::json& j, std::size_t color_count = 0) {
  ApparelItem item;
  item.role = parse_role(detail::require_string(j, "role", "look item"));
  const bool has_id = j.contains("color_id"), has_desc = j.contains("descriptor");
  if (has_id == has_desc) throw ParseError("look item needs exactly one of 'color_id' or 'descriptor'");
  if (has_id) {
    const long long id = detail::require_integer(j, "color_id", "look item");
    if (id < 0 || (color_count != 0 && static_cast<std::size_t>(id) >= color_count))
      throw ValidationError("look item references unknown color id " + std::to_string(id));
    item.color = static_cast<int>(id);
  } else {
    item.color = descriptor_from_json(j["descriptor"], color_count);
  }
  return item;
}

inline nlohmann::json to_json(const Look& look) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : look.items) items.push_back(to_json(item));
  nlohmann::json j{{"items", std::move(items)}};
  if (look.id) j["id"] = *look.id;
  return j;
}

inline Look look_from_json(const nlohmann::json& j, std::size_t color_count = 0) {
  Look look;
  for (const auto& item : detail::require_array(j, "items", "look"))
    look.items.push_back(apparel_item_from_json(item, color_count));
  if (j.contains("id") && j["id"].is_string()) look.id = j["id"].get<std::string>();
  look.validate();
  return look;
}

inline nlohmann::json to_json(const UserProfile& u) {
  nlohmann::json ratings = nlohmann::json::object();
  for (const auto& [id, r] : u.ratings) ratings[std::to_string(id)] = r;
  return {{"user_id", u.user_id}, {"default_rating", u.default_rating}, {"ratings", std::move(ratings)}};
}

inline std::map<int, double> ratings_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": ratings must be an object");
  std::map<int, double> out;
  for (const auto& [key, value] : j.items()) {
    int id = 0;
    std::size_t used = 0;
    try {
      id = std::stoi(key, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != key.size() || id < 0) throw ParseError(where + ": rating key '" + key + "' is not a color id");
    if (!value.is_number()) throw ParseError(where + ": rating for color " + key + " must be a number");
    out[id] = value.get<double>();
  }
  return out;
}

inline UserProfile profile_from_json(const nlohmann::json& j) {
  UserProfile u;
  u.user_id = detail::require_string(j, "user_id", "profile");
  if (j.contains("default_rating")) u.default_rating = detail::require_number(j, "default_rating", "profile");
  u.ratings = ratings_from_json(detail::require(j, "ratings", "profile"), "profile " + u.user_id);
  u.validate();
  return u;
}

inline nlohmann::json to_json(const PreferenceScore& s) {
  nlohmann::json components{{"harmony", s.harmony}};
  components["weighted_scp"] = s.weighted_scp ? nlohmann::json(*s.weighted_scp) : nlohmann::json(nullptr);
  return {{"value", s.value},
          {"components", std::move(components)},
          {"matched_palette_id",
           s.matched_palette_id ? nlohmann::json(*s.matched_palette_id) : nlohmann::json(nullptr)}};
}

}  // namespace harmonia
