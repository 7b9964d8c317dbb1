#pragma once

// Perceptual differences between fuzzy colors and between descriptors.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <vector>

#include "harmonia/color_space.hpp"
#include "harmonia/descriptor.hpp"
#include "harmonia/error.hpp"

namespace harmonia {

/// Position of a color's centroid in the HSI cylinder (s cos h, s sin h, i).
inline std::array<double, 3> cylinder_point(const HsiPixel& p) {
  const double rad = p.h * std::numbers::pi / 180.0;
  return {p.s * std::cos(rad), p.s * std::sin(rad), p.i};
}

/// Euclidean distance between centroids in the HSI cylinder, divided by the
/// cylinder's largest chord (sqrt 5) so the result lies in [0,1].
inline double color_distance(const FuzzyColor& a, const FuzzyColor& b) {
  const auto pa = cylinder_point(a.centroid());
  const auto pb = cylinder_point(b.centroid());
  const double dx = pa[0] - pb[0], dy = pa[1] - pb[1], dz = pa[2] - pb[2];
  return std::clamp(std::sqrt(dx * dx + dy * dy + dz * dz) / std::sqrt(5.0), 0.0, 1.0);
}

/// Symmetric pairwise color distances, precomputed once per partition.
class ColorDistanceTable {
 public:
  ColorDistanceTable() = default;

  explicit ColorDistanceTable(std::span<const FuzzyColor> colors) : n_(colors.size()), d_(n_ * n_, 0.0) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) d_[i * n_ + j] = d_[j * n_ + i] = color_distance(colors[i], colors[j]);
  }

  explicit ColorDistanceTable(const Partition& p) : ColorDistanceTable(p.colors()) {}

  /// Table from an explicit row-major matrix. Used for fixtures with chosen
  /// distances; the matrix must be symmetric with a zero diagonal.
  static ColorDistanceTable from_matrix(std::size_t n, std::vector<double> values) {
    if (values.size() != n * n) throw ValidationError("distance matrix has wrong size");
    for (std::size_t i = 0; i < n; ++i) {
      if (values[i * n + i] != 0.0) throw ValidationError("distance matrix diagonal must be zero");
      for (std::size_t j = 0; j < n; ++j) {
        const double v = values[i * n + j];
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("distance outside [0,1]");
        if (v != values[j * n + i]) throw ValidationError("distance matrix must be symmetric");
      }
    }
    ColorDistanceTable t;
    t.n_ = n;
    t.d_ = std::move(values);
    return t;
  }

  std::size_t size() const { return n_; }

  double operator()(int a, int b) const {
    return d_[static_cast<std::size_t>(a) * n_ + static_cast<std::size_t>(b)];
  }

  void write_csv(std::ostream& out) const {
    out << "id";
    for (std::size_t j = 0; j < n_; ++j) out << ',' << j;
    out << '\n';
    for (std::size_t i = 0; i < n_; ++i) {
      out << i;
      for (std::size_t j = 0; j < n_; ++j) out << ',' << d_[i * n_ + j];
      out << '\n';
    }
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

namespace detail {

// Sum over `from` of weight times distance to the nearest color of `to`.
inline double directed_nearest(const ColorDescriptor& from, const ColorDescriptor& to,
                               const ColorDistanceTable& table) {
  double sum = 0.0;
  for (const auto& a : from.entries) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : to.entries) best = std::min(best, table(a.color_id, b.color_id));
    sum += a.weight * best;
  }
  return sum;
}

}  // namespace detail

/// Weighted bidirectional nearest-neighbour difference between descriptors:
/// half of each side's weighted distance to the closest color of the other.
inline double descriptor_difference(const ColorDescriptor& p, const ColorDescriptor& q,
                                    const ColorDistanceTable& table) {
  if (p.entries.empty() || q.entries.empty()) throw ValidationError("descriptor has no entries");
  const double dp = 0.5 * detail::directed_nearest(p, q, table) + 0.5 * detail::directed_nearest(q, p, table);
  return std::clamp(dp, 0.0, 1.0);
}

inline double palette_similarity(const ColorDescriptor& p, const ColorDescriptor& q,
                                 const ColorDistanceTable& table) {
  return 1.0 - descriptor_difference(p, q, table);
}

/// Mean descriptor difference between `ch` and every member of a group.
inline double group_mean_difference(const ColorDescriptor& ch, std::span<const ColorDescriptor> members,
                                    const ColorDistanceTable& table) {
  if (members.empty()) throw ValidationError("group has no members");
  double sum = 0.0;
  for (const auto& m : members) sum += descriptor_difference(ch, m, table);
  return sum / static_cast<double>(members.size());
}

}  // namespace harmonia
