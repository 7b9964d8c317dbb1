#pragma once

// File-backed persistence for the palette knowledge base, user profiles and
// the apparel catalog.
//
// Layout under the root directory:
//   kb.json            palette knowledge base
//   catalog.json       {version, items:[...]}
//   users/<id>.json    one profile per user
//   .lock              held exclusively while the store is open

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include "harmonia/descriptor.hpp"
#include "harmonia/detail/json_util.hpp"
#include "harmonia/error.hpp"
#include "harmonia/miner.hpp"
#include "harmonia/preference.hpp"

namespace harmonia {

struct CatalogItem {
  std::string item_id;
  ApparelRole role = ApparelRole::dress_costume;
  ColorDescriptor descriptor;
  std::optional<std::string> image_path;
  std::string name;
  std::optional<std::string> label;

  friend bool operator==(const CatalogItem&, const CatalogItem&) = default;

  ApparelItem as_apparel() const { return {role, descriptor}; }
};

struct CatalogFilter {
  std::optional<ApparelRole> role;
  std::optional<std::string> label;

  bool matches(const CatalogItem& item) const {
    if (role && item.role != *role) return false;
    if (label && item.label != label) return false;
    return true;
  }
};

inline nlohmann::json to_json(const CatalogItem& item) {
  nlohmann::json j{{"item_id", item.item_id},
                   {"role", std::string(to_string(item.role))},
                   {"name", item.name},
                   {"descriptor", to_json(item.descriptor)}};
  if (item.image_path) j["image_path"] = *item.image_path;
  if (item.label) j["label"] = *item.label;
  return j;
}

inline CatalogItem catalog_item_from_json(const nlohmann::json& j, std::size_t color_count = 0) {
  CatalogItem item;
  item.item_id = detail::require_string(j, "item_id", "catalog item");
  const std::string where = "catalog item " + item.item_id;
  if (item.item_id.empty()) throw ValidationError("catalog item with empty item_id");
  item.role = parse_role(detail::require_string(j, "role", where));
  item.name = j.contains("name") ? detail::require_string(j, "name", where) : item.item_id;
  try {
    item.descriptor = descriptor_from_json(detail::require(j, "descriptor", where), color_count);
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
  if (j.contains("image_path") && !j["image_path"].is_null())
    item.image_path = detail::require_string(j, "image_path", where);
  if (j.contains("label") && !j["label"].is_null()) item.label = detail::require_string(j, "label", where);
  return item;
}

inline nlohmann::json catalog_to_json(std::span<const CatalogItem> items) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& item : items) arr.push_back(to_json(item));
  return {{"version", "1"}, {"items", std::move(arr)}};
}

inline std::vector<CatalogItem> catalog_from_json(const nlohmann::json& j, std::size_t color_count = 0) {
  std::vector<CatalogItem> items;
  std::map<std::string, std::size_t> seen;
  for (const auto& e : detail::require_array(j, "items", "catalog")) {
    auto item = catalog_item_from_json(e, color_count);
    if (seen.contains(item.item_id)) throw ValidationError("catalog repeats item_id " + item.item_id);
    seen[item.item_id] = items.size();
    items.push_back(std::move(item));
  }
  return items;
}

/// User ids double as file names, so they are restricted to a safe alphabet.
inline void validate_user_id(const std::string& id) {
  if (id.empty() || id.size() > 128 || id.front() == '.')
    throw ValidationError("invalid user id '" + id + "'");
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '-' || c == '.';
    if (!ok) throw ValidationError("invalid user id '" + id + "'");
  }
}

class Store {
 public:
  /// Opens (creating if needed) the store rooted at `root`, validating every
  /// file. Fails if another Store holds the root.
  explicit Store(std::filesystem::path root, std::size_t color_count = 0)
      : root_(std::move(root)), color_count_(color_count) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(root_ / "users", ec);
    if (ec) throw IoError("cannot create store at " + root_.string() + ": " + ec.message());
    lock_fd_ = ::open((root_ / ".lock").c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (lock_fd_ < 0) throw IoError("cannot open lock file in " + root_.string());
    if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(lock_fd_);
      throw InvalidStateError("store " + root_.string() + " is locked by another process");
    }
    try {
      load();
    } catch (...) {
      release_lock();
      throw;
    }
  }

  static std::unique_ptr<Store> open(const std::filesystem::path& root, std::size_t color_count = 0) {
    return std::make_unique<Store>(root, color_count);
  }

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;
  ~Store() { release_lock(); }

  const std::filesystem::path& root() const { return root_; }

  // -- profiles ------------------------------------------------------------

  void put_profile(const UserProfile& profile) {
    profile.validate();
    validate_user_id(profile.user_id);
    auto guard = lock_entity("user:" + profile.user_id);
    detail::write_json_file(user_path(profile.user_id), to_json(profile));
    std::unique_lock lock(mutex_);
    profiles_[profile.user_id] = profile;
  }

  UserProfile get_profile(const std::string& user_id) const {
    std::shared_lock lock(mutex_);
    auto it = profiles_.find(user_id);
    if (it == profiles_.end()) throw NotFoundError("unknown user '" + user_id + "'");
    return it->second;
  }

  std::optional<UserProfile> find_profile(const std::string& user_id) const {
    std::shared_lock lock(mutex_);
    auto it = profiles_.find(user_id);
    if (it == profiles_.end()) return std::nullopt;
    return it->second;
  }

  // -- palettes ------------------------------------------------------------

  void put_palettes(const KnowledgeBase& kb) {
    // Round-trip through the schema so invalid palettes never reach disk.
    const auto doc = to_json(kb);
    (void)knowledge_base_from_json(doc, color_count_);
    auto guard = lock_entity("kb");
    detail::write_json_file(root_ / "kb.json", doc);
    std::unique_lock lock(mutex_);
    kb_ = kb;
  }

  KnowledgeBase knowledge_base() const {
    std::shared_lock lock(mutex_);
    return kb_;
  }

  std::vector<HarmoniousPalette> list_palettes(const std::optional<std::string>& label = std::nullopt) const {
    std::shared_lock lock(mutex_);
    std::vector<HarmoniousPalette> out;
    for (const auto& p : kb_.palettes)
      if (!label || p.label == label) out.push_back(p);
    return out;
  }

  // -- catalog -------------------------------------------------------------

  /// Inserts or replaces items by item_id; existing order is kept and new
  /// items are appended.
  void upsert_catalog(std::span<const CatalogItem> items) {
    for (const auto& item : items) (void)catalog_item_from_json(to_json(item), color_count_);
    auto guard = lock_entity("catalog");
    std::vector<CatalogItem> next;
    {
      std::shared_lock lock(mutex_);
      next = catalog_;
    }
    for (const auto& item : items) {
      auto it = std::find_if(next.begin(), next.end(), [&](const CatalogItem& c) { return c.item_id == item.item_id; });
      if (it != next.end())
        *it = item;
      else
        next.push_back(item);
    }
    detail::write_json_file(root_ / "catalog.json", catalog_to_json(next));
    std::unique_lock lock(mutex_);
    catalog_ = std::move(next);
  }

  std::vector<CatalogItem> list_catalog(const CatalogFilter& filter = {}) const {
    std::shared_lock lock(mutex_);
    std::vector<CatalogItem> out;
    for (const auto& item : catalog_)
      if (filter.matches(item)) out.push_back(item);
    return out;
  }

 private:
  std::filesystem::path user_path(const std::string& id) const { return root_ / "users" / (id + ".json"); }

  template <typename F>
  static auto validated(const std::filesystem::path& file, F&& parse) {
    try {
      return parse(detail::read_json_file(file));
    } catch (const ParseError& e) {
      throw ParseError("corrupt " + file.string() + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("corrupt " + file.string() + ": " + e.what());
    }
  }

  void load() {
    namespace fs = std::filesystem;
    if (fs::exists(root_ / "kb.json"))
      kb_ = validated(root_ / "kb.json", [&](const nlohmann::json& j) { return knowledge_base_from_json(j, color_count_); });
    if (fs::exists(root_ / "catalog.json"))
      catalog_ = validated(root_ / "catalog.json", [&](const nlohmann::json& j) { return catalog_from_json(j, color_count_); });
    for (const auto& entry : fs::directory_iterator(root_ / "users")) {
      if (entry.path().extension() != ".json") continue;
      auto profile = validated(entry.path(), [](const nlohmann::json& j) { return profile_from_json(j); });
      if (profile.user_id != entry.path().stem().string())
        throw ValidationError("corrupt " + entry.path().string() + ": user_id does not match file name");
      profiles_[profile.user_id] = std::move(profile);
    }
  }

  std::unique_lock<std::mutex> lock_entity(const std::string& key) {
    std::mutex* m = nullptr;
    {
      std::lock_guard lock(entity_mutexes_guard_);
      auto& slot = entity_mutexes_[key];
      if (!slot) slot = std::make_unique<std::mutex>();
      m = slot.get();
    }
    return std::unique_lock(*m);
  }

  void release_lock() {
    if (lock_fd_ >= 0) {
      ::flock(lock_fd_, LOCK_UN);
      ::close(lock_fd_);
      lock_fd_ = -1;
    }
  }

  std::filesystem::path root_;
  std::size_t color_count_ = 0;
  int lock_fd_ = -1;

  mutable std::shared_mutex mutex_;
  KnowledgeBase kb_;
  std::vector<CatalogItem> catalog_;
  std::map<std::string, UserProfile> profiles_;

  std::mutex entity_mutexes_guard_;
  std::map<std::string, std::unique_ptr<std::mutex>> entity_mutexes_;
};

}  // namespace harmonia
