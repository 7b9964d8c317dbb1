#pragma once

// JSON-over-HTTP facade. `Api` holds the transport-agnostic endpoint logic
// (JSON in, status + JSON out); `mount` binds it to a cpp-httplib server.
// Handlers are pure over the immutable partition/table plus the store.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "httplib.h"
#include "json.hpp"

#include "harmonia/color_space.hpp"
#include "harmonia/descriptor.hpp"
#include "harmonia/error.hpp"
#include "harmonia/image.hpp"
#include "harmonia/miner.hpp"
#include "harmonia/preference.hpp"
#include "harmonia/similarity.hpp"
#include "harmonia/store.hpp"

namespace harmonia {

enum class ApiErrorCode { bad_request, not_found, invalid_state, internal };

inline std::string_view to_string(ApiErrorCode c) {
  switch (c) {
    case ApiErrorCode::bad_request: return "bad_request";
    case ApiErrorCode::not_found: return "not_found";
    case ApiErrorCode::invalid_state: return "invalid_state";
    case ApiErrorCode::internal: return "internal";
  }
  return "internal";
}

inline int http_status(ApiErrorCode c) {
  switch (c) {
    case ApiErrorCode::bad_request: return 400;
    case ApiErrorCode::not_found: return 404;
    case ApiErrorCode::invalid_state: return 409;
    case ApiErrorCode::internal: return 500;
  }
  return 500;
}

struct ApiError {
  ApiErrorCode code = ApiErrorCode::internal;
  std::string message;
  std::string detail;

  nlohmann::json to_json() const {
    return {{"code", std::string(to_string(code))}, {"message", message}, {"detail", detail}};
  }
};

inline ApiErrorCode api_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse:
    case ErrorKind::validation:
    case ErrorKind::decode: return ApiErrorCode::bad_request;
    case ErrorKind::not_found: return ApiErrorCode::not_found;
    case ErrorKind::invalid_state: return ApiErrorCode::invalid_state;
    case ErrorKind::io: return ApiErrorCode::internal;
  }
  return ApiErrorCode::internal;
}

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

struct ServiceOptions {
  std::string cors_origin = "*";
  std::size_t max_mine_items = 5000;
  DescriptorConfig descriptor;
};

class Api {
 public:
  Api(Partition partition, Store& store, ServiceOptions options = {})
      : partition_(std::move(partition)), table_(partition_), store_(&store), options_(std::move(options)) {}

  const Partition& partition() const { return partition_; }
  const ColorDistanceTable& table() const { return table_; }
  const ServiceOptions& options() const { return options_; }

  /// Runs `f`, mapping library errors onto ApiError responses.
  static ApiResponse guarded(const std::function<nlohmann::json()>& f) {
    try {
      return {200, f()};
    } catch (const Error& e) {
      ApiError err{api_code(e.kind()), e.what(), std::string(to_string(e.kind()))};
      return {http_status(err.code), err.to_json()};
    } catch (const nlohmann::json::exception& e) {
      ApiError err{ApiErrorCode::bad_request, e.what(), "parse"};
      return {400, err.to_json()};
    } catch (const std::exception& e) {
      ApiError err{ApiErrorCode::internal, e.what(), ""};
      return {500, err.to_json()};
    }
  }

  // GET /api/colors
  ApiResponse colors() const {
    return guarded([&] {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& c : partition_.colors()) {
        const Rgb8 rgb = hsi_to_rgb8(c.centroid());
        char hex[8];
        std::snprintf(hex, sizeof hex, "#%02x%02x%02x", rgb.r, rgb.g, rgb.b);
        arr.push_back({{"id", c.id},
                       {"name", c.name},
                       {"achromatic", c.achromatic},
                       {"rgb", {rgb.r, rgb.g, rgb.b}},
                       {"hex", hex}});
      }
      return nlohmann::json{{"version", partition_.version()}, {"colors", std::move(arr)}};
    });
  }

  // PUT /api/users/{id}/ratings; body is a ratings map, or
  // {ratings, default_rating?}. Replaces the user's ratings.
  ApiResponse put_ratings(const std::string& user_id, const nlohmann::json& body) {
    return guarded([&] {
      validate_user_id(user_id);
      UserProfile profile = store_->find_profile(user_id).value_or(UserProfile{user_id, {}, 0.5});
      const bool wrapped = body.is_object() && body.contains("ratings") && body["ratings"].is_object();
      profile.ratings = ratings_from_json(wrapped ? body["ratings"] : body, "ratings");
      if (wrapped && body.contains("default_rating"))
        profile.default_rating = detail::require_number(body, "default_rating", "ratings");
      for (const auto& [id, r] : profile.ratings)
        if (!partition_.contains(id)) throw ValidationError("unknown color id " + std::to_string(id));
      store_->put_profile(profile);
      return to_json(profile);
    });
  }

  // GET /api/users/{id}
  ApiResponse get_profile(const std::string& user_id) const {
    return guarded([&] { return to_json(store_->get_profile(user_id)); });
  }

  // POST /api/descriptor; body is the raw PNG/JPEG payload.
  ApiResponse descriptor(std::string_view image_bytes) const {
    return guarded([&] {
      const auto image = decode_image(
          std::span(reinterpret_cast<const std::uint8_t*>(image_bytes.data()), image_bytes.size()));
      return to_json(extract_descriptor(image, partition_, options_.descriptor));
    });
  }

  // POST /api/harmony {colors:[ids]}
  ApiResponse harmony(const nlohmann::json& body) const {
    return guarded([&] {
      const auto& arr = detail::require_array(body, "colors", "harmony request");
      std::vector<int> ids;
      for (const auto& v : arr) {
        if (!v.is_number_integer()) throw ParseError("harmony request: colors must be integers");
        ids.push_back(v.get<int>());
      }
      const auto kb = store_->knowledge_base();
      const auto h = harmonia::harmony(ids, kb, table_);
      return nlohmann::json{{"harm", h.harm}, {"matched_palette_id", h.palette_id}, {"contained", h.contained}};
    });
  }

  // POST /api/preference {look, user_id? | guest?}
  ApiResponse preference(const nlohmann::json& body) const {
    return guarded([&] {
      const Look look = look_from_json(detail::require(body, "look", "preference request"), partition_.size());
      const auto user = requested_user(body);
      const auto kb = store_->knowledge_base();
      return to_json(predict_preference(look, user, kb, table_));
    });
  }

  // POST /api/rank {anchor, filter?:{role?, label?}, user_id?}
  ApiResponse rank(const nlohmann::json& body) const {
    return guarded([&] {
      const Look anchor = look_from_json(detail::require(body, "anchor", "rank request"), partition_.size());
      CatalogFilter filter;
      if (body.contains("filter") && body["filter"].is_object()) {
        const auto& f = body["filter"];
        if (f.contains("role") && !f["role"].is_null()) filter.role = parse_role(detail::require_string(f, "role", "filter"));
        if (f.contains("label") && !f["label"].is_null()) filter.label = detail::require_string(f, "label", "filter");
      }
      const auto user = requested_user(body);
      const auto items = store_->list_catalog(filter);
      if (items.empty()) throw NotFoundError("no catalog items match the filter");
      std::vector<ApparelItem> candidates;
      for (const auto& item : items) candidates.push_back(item.as_apparel());
      const auto kb = store_->knowledge_base();
      const auto ranked = rank_catalog(anchor, candidates, user ? &*user : nullptr, kb, table_);
      nlohmann::json out = nlohmann::json::array();
      for (const auto& r : ranked) out.push_back({{"item", to_json(items[r.index])}, {"score", to_json(r.score)}});
      return nlohmann::json{{"ranked", std::move(out)}};
    });
  }

  // GET /api/palettes?label=
  ApiResponse palettes(const std::optional<std::string>& label) const {
    return guarded([&] {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& p : store_->list_palettes(label)) arr.push_back(to_json(p));
      return nlohmann::json{{"palettes", std::move(arr)}};
    });
  }

  // POST /api/mine {corpus, config?:{threshold, min_group_size, min_palette_weight}, publish?}
  ApiResponse mine(const nlohmann::json& body) {
    return guarded([&] {
      const std::string corpus_dir = detail::require_string(body, "corpus", "mine request");
      MinerConfig cfg = MinerConfig::desk_scale();
      if (body.contains("config")) {
        const auto& c = body["config"];
        if (c.contains("threshold")) cfg.threshold = detail::require_number(c, "threshold", "config");
        if (c.contains("min_group_size")) {
          const long long n = detail::require_integer(c, "min_group_size", "config");
          if (n < 1) throw ValidationError("min_group_size must be at least 1");
          cfg.min_group_size = static_cast<std::size_t>(n);
        }
        if (c.contains("min_palette_weight"))
          cfg.min_palette_weight = detail::require_number(c, "min_palette_weight", "config");
      }
      cfg.validate();
      const auto items = corpus_from_directory(corpus_dir);
      if (items.size() > options_.max_mine_items)
        throw ValidationError("corpus has " + std::to_string(items.size()) + " items; the limit is " +
                              std::to_string(options_.max_mine_items));
      const auto result = harmonia::mine(items, partition_, table_, cfg, options_.descriptor);
      const bool publish = !body.contains("publish") || body["publish"].get<bool>();
      if (publish) store_->put_palettes(KnowledgeBase{"1", result.palettes});
      auto stats = to_json(result.stats);
      stats["published"] = publish;
      return stats;
    });
  }

 private:
  std::optional<UserProfile> requested_user(const nlohmann::json& body) const {
    const bool guest = body.contains("guest") && body["guest"].is_boolean() && body["guest"].get<bool>();
    const bool has_user = body.contains("user_id") && !body["user_id"].is_null();
    if (guest && has_user) throw ValidationError("request names a user and guest mode");
    if (!has_user) return std::nullopt;
    return store_->get_profile(detail::require_string(body, "user_id", "request"));
  }

  Partition partition_;
  ColorDistanceTable table_;
  Store* store_;
  ServiceOptions options_;
};

namespace detail {

inline void reply(httplib::Response& res, const ApiResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

inline std::optional<nlohmann::json> parse_body(const httplib::Request& req, httplib::Response& res) {
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    reply(res, {400, ApiError{ApiErrorCode::bad_request, std::string("malformed JSON body: ") + e.what(), "parse"}.to_json()});
    return std::nullopt;
  }
}

}  // namespace detail

/// Registers every endpoint (plus CORS handling) on `server`.
inline void mount(httplib::Server& server, Api& api) {
  using httplib::Request;
  using httplib::Response;

  const std::string origin = api.options().cors_origin;
  server.set_post_routing_handler([origin](const Request&, Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  server.Options(R"(/api/.*)", [](const Request&, Response& res) { res.status = 204; });

  server.Get("/api/colors", [&api](const Request&, Response& res) { detail::reply(res, api.colors()); });
  server.Put("/api/users/:id/ratings", [&api](const Request& req, Response& res) {
    if (auto body = detail::parse_body(req, res)) detail::reply(res, api.put_ratings(req.path_params.at("id"), *body));
  });
  server.Get("/api/users/:id", [&api](const Request& req, Response& res) {
    detail::reply(res, api.get_profile(req.path_params.at("id")));
  });
  server.Post("/api/descriptor", [&api](const Request& req, Response& res) {
    detail::reply(res, api.descriptor(req.body));
  });
  server.Post("/api/harmony", [&api](const Request& req, Response& res) {
    if (auto body = detail::parse_body(req, res)) detail::reply(res, api.harmony(*body));
  });
  server.Post("/api/preference", [&api](const Request& req, Response& res) {
    if (auto body = detail::parse_body(req, res)) detail::reply(res, api.preference(*body));
  });
  server.Post("/api/rank", [&api](const Request& req, Response& res) {
    if (auto body = detail::parse_body(req, res)) detail::reply(res, api.rank(*body));
  });
  server.Get("/api/palettes", [&api](const Request& req, Response& res) {
    std::optional<std::string> label;
    if (req.has_param("label")) label = req.get_param_value("label");
    detail::reply(res, api.palettes(label));
  });
  server.Post("/api/mine", [&api](const Request& req, Response& res) {
    if (auto body = detail::parse_body(req, res)) detail::reply(res, api.mine(*body));
  });
  server.set_exception_handler([](const Request&, Response& res, std::exception_ptr ep) {
    std::string what = "unknown error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    detail::reply(res, {500, ApiError{ApiErrorCode::internal, what, ""}.to_json()});
  });
}

}  // namespace harmonia
