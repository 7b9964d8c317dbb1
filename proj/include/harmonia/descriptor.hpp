#pragma once

// Fuzzy dominant color histogram of an image.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "harmonia/color_space.hpp"
#include "harmonia/detail/json_util.hpp"
#include "harmonia/error.hpp"
#include "harmonia/image.hpp"

namespace harmonia {

struct DescriptorEntry {
  int color_id = 0;
  double weight = 0.0;
  friend bool operator==(const DescriptorEntry&, const DescriptorEntry&) = default;
};

struct ImageDims {
  int width = 0;
  int height = 0;
  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

/// Dominant fuzzy colors with normalized weights, heaviest first.
struct ColorDescriptor {
  std::vector<DescriptorEntry> entries;
  std::optional<ImageDims> source_dims;

  friend bool operator==(const ColorDescriptor&, const ColorDescriptor&) = default;

  bool contains(int color_id) const {
    return std::any_of(entries.begin(), entries.end(),
                       [&](const DescriptorEntry& e) { return e.color_id == color_id; });
  }
  double weight_of(int color_id) const {
    for (const auto& e : entries)
      if (e.color_id == color_id) return e.weight;
    return 0.0;
  }
  int dominant() const { return entries.front().color_id; }
};

struct DescriptorConfig {
  double min_share = 0.05;
  std::size_t max_dominant = 8;
  /// Images above this many pixels are box-downsampled before accumulation.
  std::size_t downsample_above = 1'000'000;
};

inline constexpr double kWeightSumTolerance = 1e-9;

namespace detail {

inline void sort_entries(std::vector<DescriptorEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const DescriptorEntry& x, const DescriptorEntry& y) {
    if (x.weight != y.weight) return x.weight > y.weight;
    return x.color_id < y.color_id;
  });
}

inline void normalize_entries(std::vector<DescriptorEntry>& entries) {
  double total = 0.0;
  for (const auto& e : entries) total += e.weight;
  for (auto& e : entries) e.weight /= total;
}

}  // namespace detail

/// Throws ValidationError unless the descriptor satisfies its invariants.
/// `color_count` (when non-zero) bounds the admissible ids.
inline void validate(const ColorDescriptor& d, std::size_t color_count = 0,
                     std::size_t max_dominant = 0) {
  if (d.entries.empty()) throw ValidationError("descriptor has no entries");
  if (max_dominant != 0 && d.entries.size() > max_dominant)
    throw ValidationError("descriptor has more than " + std::to_string(max_dominant) + " entries");
  std::unordered_set<int> seen;
  double total = 0.0;
  for (std::size_t k = 0; k < d.entries.size(); ++k) {
    const auto& e = d.entries[k];
    if (!seen.insert(e.color_id).second)
      throw ValidationError("descriptor repeats color id " + std::to_string(e.color_id));
    if (e.color_id < 0 || (color_count != 0 && static_cast<std::size_t>(e.color_id) >= color_count))
      throw ValidationError("descriptor references unknown color id " + std::to_string(e.color_id));
    if (!(e.weight >= 0.0 && e.weight <= 1.0))
      throw ValidationError("descriptor weight outside [0,1] for color " + std::to_string(e.color_id));
    if (k > 0 && d.entries[k - 1].weight < e.weight)
      throw ValidationError("descriptor entries must be sorted by weight descending");
    total += e.weight;
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance)
    throw ValidationError("descriptor weights sum to " + std::to_string(total) + ", expected 1");
}

/// Builds a descriptor from explicit fuzzy color ids; uniform weights when
/// `weights` is empty.
inline ColorDescriptor descriptor_from_color_ids(std::span<const int> ids, std::span<const double> weights,
                                                 const Partition& partition) {
  if (ids.empty()) throw ValidationError("descriptor needs at least one color id");
  if (!weights.empty() && weights.size() != ids.size())
    throw ValidationError("weights and ids differ in length");
  ColorDescriptor d;
  std::unordered_set<int> seen;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (!partition.contains(ids[k])) throw ValidationError("unknown color id " + std::to_string(ids[k]));
    if (!seen.insert(ids[k]).second) throw ValidationError("duplicate color id " + std::to_string(ids[k]));
    const double w = weights.empty() ? 1.0 : weights[k];
    if (!(w > 0.0) || !std::isfinite(w))
      throw ValidationError("weight for color " + std::to_string(ids[k]) + " must be positive");
    d.entries.push_back({ids[k], w});
  }
  detail::normalize_entries(d.entries);
  detail::sort_entries(d.entries);
  return d;
}

inline ColorDescriptor descriptor_from_color_ids(std::initializer_list<int> ids, const Partition& partition) {
  return descriptor_from_color_ids(std::span<const int>(ids.begin(), ids.size()), {}, partition);
}

namespace detail {

// Breakpoints unwrapped once per extraction; evaluates exactly like
// membership() without re-wrapping every call.
struct CompiledChannel {
  bool circular = false;
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  explicit CompiledChannel(const ChannelMembership& m)
      : circular(m.kind == MembershipKind::trapezoid_circular) {
    const auto u = m.unwrapped();
    a = u[0], b = u[1], c = u[2], d = u[3];
  }

  double operator()(double x) const {
    if (circular) {
      // x and a both lie in [0, 360), so one correction replaces the fmod.
      double off = x - a;
      if (off < 0.0) off += kFullTurn;
      x = a + off;
    }
    if (x >= b && x <= c) return 1.0;
    if (x > a && x < b) return (x - a) / (b - a);
    if (x > c && x < d) return (d - x) / (d - c);
    return 0.0;
  }
};

struct CompiledColor {
  CompiledChannel hue, sat, intensity;
  bool achromatic;

  explicit CompiledColor(const FuzzyColor& c)
      : hue(c.hue), sat(c.sat), intensity(c.intensity), achromatic(c.achromatic) {}

  double operator()(const HsiPixel& p) const {
    double m = std::min(sat(p.s), intensity(p.i));
    if (m <= 0.0) return 0.0;
    if (!achromatic && p.s >= kAchromaticSaturation) m = std::min(m, hue(p.h));
    return std::clamp(m, 0.0, 1.0);
  }
};

}  // namespace detail

/// Membership mass of every fuzzy color, summed over pixels and normalized.
/// Each pixel spreads its graded membership over all colors.
inline std::vector<double> membership_mass(const RgbImage& image, const Partition& partition) {
  // Count distinct pixel values first; identical pixels share one evaluation.
  std::vector<std::uint32_t> packed;
  packed.reserve(image.pixel_count());
  for (const Rgb8& p : image.pixels())
    packed.push_back((std::uint32_t{p.r} << 16) | (std::uint32_t{p.g} << 8) | p.b);
  std::sort(packed.begin(), packed.end());

  std::vector<detail::CompiledColor> colors;
  colors.reserve(partition.size());
  for (const auto& c : partition.colors()) colors.emplace_back(c);

  std::vector<double> mass(partition.size(), 0.0);
  for (std::size_t k = 0; k < packed.size();) {
    std::size_t run = k;
    while (run < packed.size() && packed[run] == packed[k]) ++run;
    const double count = static_cast<double>(run - k);
    const auto v = packed[k];
    const HsiPixel px = rgb_to_hsi(static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 8),
                                   static_cast<std::uint8_t>(v));
    for (std::size_t c = 0; c < colors.size(); ++c) {
      const double m = colors[c](px);
      if (m > 0.0) mass[c] += count * m;
    }
    k = run;
  }
  return mass;
}

/// Fuzzy dominant color histogram: normalized membership mass, colors below
/// `min_share` dropped, truncated to `max_dominant`, renormalized.
inline ColorDescriptor extract_descriptor(const RgbImage& image, const Partition& partition,
                                          const DescriptorConfig& cfg = {}) {
  if (image.empty()) throw ValidationError("cannot describe an empty image");
  if (cfg.max_dominant == 0) throw ValidationError("max_dominant must be at least 1");

  const RgbImage* source = &image;
  RgbImage reduced;
  if (cfg.downsample_above > 0 && image.pixel_count() > cfg.downsample_above) {
    const double ratio = static_cast<double>(image.pixel_count()) / static_cast<double>(cfg.downsample_above);
    reduced = downsample(image, static_cast<int>(std::ceil(std::sqrt(ratio))));
    source = &reduced;
  }

  const auto mass = membership_mass(*source, partition);
  double total = 0.0;
  for (double m : mass) total += m;
  // Coverage of the partition guarantees every pixel has mass >= 0.5.
  if (!(total > 0.0)) throw InvalidStateError("image has zero membership mass under the partition");

  std::vector<DescriptorEntry> entries;
  for (std::size_t c = 0; c < mass.size(); ++c)
    if (mass[c] > 0.0) entries.push_back({static_cast<int>(c), mass[c] / total});
  detail::sort_entries(entries);

  std::vector<DescriptorEntry> kept;
  for (const auto& e : entries) {
    if (kept.size() == cfg.max_dominant) break;
    if (e.weight < cfg.min_share) break;
    kept.push_back(e);
  }
  // A very flat histogram may have nothing above min_share; keep its top color.
  if (kept.empty()) kept.push_back(entries.front());
  detail::normalize_entries(kept);
  detail::sort_entries(kept);

  ColorDescriptor d;
  d.entries = std::move(kept);
  d.source_dims = ImageDims{image.width(), image.height()};
  return d;
}

// ---------------------------------------------------------------------------
// Serialization: {entries:[{id,w}], width, height}

inline nlohmann::json to_json(const ColorDescriptor& d) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : d.entries) entries.push_back({{"id", e.color_id}, {"w", e.weight}});
  nlohmann::json out{{"entries", std::move(entries)}};
  if (d.source_dims) {
    out["width"] = d.source_dims->width;
    out["height"] = d.source_dims->height;
  }
  return out;
}

/// Parses and validates a descriptor. Entries are re-sorted, so documents
/// need not list them in weight order.
inline ColorDescriptor descriptor_from_json(const nlohmann::json& j, std::size_t color_count = 0) {
  ColorDescriptor d;
  for (const auto& e : detail::require_array(j, "entries", "descriptor")) {
    d.entries.push_back({static_cast<int>(detail::require_integer(e, "id", "descriptor entry")),
                         detail::require_number(e, "w", "descriptor entry")});
  }
  detail::sort_entries(d.entries);
  if (j.contains("width") || j.contains("height")) {
    d.source_dims = ImageDims{static_cast<int>(detail::require_integer(j, "width", "descriptor")),
                              static_cast<int>(detail::require_integer(j, "height", "descriptor"))};
  }
  validate(d, color_count);
  return d;
}

}  // namespace harmonia
