#pragma once

// Retrieval and prediction quality metrics.

#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "harmonia/detail/json_util.hpp"
#include "harmonia/error.hpp"

namespace harmonia {

struct QueryResult {
  std::size_t retrieved = 0;
  std::size_t relevant_retrieved = 0;
  std::size_t relevant_in_db = 0;

  double precision() const { return static_cast<double>(relevant_retrieved) / static_cast<double>(retrieved); }
  double recall() const { return static_cast<double>(relevant_retrieved) / static_cast<double>(relevant_in_db); }
};

struct PrecisionRecall {
  double precision = 0.0;  // mean per-query precision
  double recall = 0.0;     // mean per-query recall
  double relevance = 0.0;  // precision / recall
};

struct PreferencePair {
  double real = 0.0;
  double predicted = 0.0;
};

/// Averaged precision and recall over the queries, and their ratio.
inline PrecisionRecall precision_recall(std::span<const QueryResult> results) {
  if (results.empty()) throw ValidationError("precision/recall needs at least one query");
  double p = 0.0, r = 0.0;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& q = results[k];
    const std::string where = "query " + std::to_string(k);
    if (q.retrieved == 0) throw ValidationError(where + ": nothing retrieved");
    if (q.relevant_in_db == 0) throw ValidationError(where + ": no relevant items in the database");
    if (q.relevant_retrieved > q.retrieved || q.relevant_retrieved > q.relevant_in_db)
      throw ValidationError(where + ": relevant_retrieved exceeds retrieved or relevant_in_db");
    p += q.precision();
    r += q.recall();
  }
  const double t = static_cast<double>(results.size());
  PrecisionRecall out{p / t, r / t, 0.0};
  if (out.recall == 0.0) throw ValidationError("relevance is undefined when mean recall is 0");
  out.relevance = out.precision / out.recall;
  return out;
}

/// Mean absolute difference between real and predicted preference.
inline double average_difference(std::span<const PreferencePair> pairs) {
  if (pairs.empty()) throw ValidationError("average difference needs at least one pair");
  double sum = 0.0;
  for (const auto& pr : pairs) {
    if (!(pr.real >= 0.0 && pr.real <= 1.0 && pr.predicted >= 0.0 && pr.predicted <= 1.0))
      throw ValidationError("preference values must lie in [0,1]");
    sum += std::abs(pr.real - pr.predicted);
  }
  return sum / static_cast<double>(pairs.size());
}

// Fixtures: {queries:[{retrieved, relevant_retrieved, relevant_in_db}]} and
// {pairs:[{real, predicted}]}.

inline std::vector<QueryResult> queries_from_json(const nlohmann::json& j) {
  std::vector<QueryResult> out;
  for (const auto& q : detail::require_array(j, "queries", "fixtures")) {
    auto count = [&](const char* key) {
      const long long v = detail::require_integer(q, key, "query");
      if (v < 0) throw ValidationError(std::string("query: '") + key + "' must be non-negative");
      return static_cast<std::size_t>(v);
    };
    out.push_back({count("retrieved"), count("relevant_retrieved"), count("relevant_in_db")});
  }
  return out;
}

inline std::vector<PreferencePair> pairs_from_json(const nlohmann::json& j) {
  std::vector<PreferencePair> out;
  for (const auto& p : detail::require_array(j, "pairs", "fixtures"))
    out.push_back({detail::require_number(p, "real", "pair"), detail::require_number(p, "predicted", "pair")});
  return out;
}

inline nlohmann::json to_json(const PrecisionRecall& pr, std::size_t queries) {
  return {{"queries", queries}, {"precision", pr.precision}, {"recall", pr.recall}, {"relevance", pr.relevance}};
}

inline void write_table(std::ostream& out, std::span<const QueryResult> results, const PrecisionRecall& pr) {
  out << "query  retrieved  relevant_retrieved  relevant_in_db  precision  recall\n";
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& q = results[k];
    out << k << "  " << q.retrieved << "  " << q.relevant_retrieved << "  " << q.relevant_in_db << "  "
        << q.precision() << "  " << q.recall() << '\n';
  }
  out << "P_T=" << pr.precision << "  R_T=" << pr.recall << "  Relevance=" << pr.relevance << '\n';
}

}  // namespace harmonia
