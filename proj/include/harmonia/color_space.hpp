#pragma once

// Fuzzy HSI color space: pixel conversion, per-channel trapezoidal
// memberships, fuzzy color categories and the partition that holds them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "harmonia/detail/json_util.hpp"
#include "harmonia/error.hpp"

namespace harmonia {

inline constexpr double kFullTurn = 360.0;

/// Saturation below which hue is treated as undefined and ignored.
inline constexpr double kAchromaticSaturation = 0.05;

struct HsiPixel {
  double h = 0.0;  // degrees, [0, 360)
  double s = 0.0;  // [0, 1]
  double i = 0.0;  // [0, 1]

  friend bool operator==(const HsiPixel&, const HsiPixel&) = default;
};

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

/// Wraps any angle into [0, 360).
inline double wrap_degrees(double deg) {
  double w = std::fmod(deg, kFullTurn);
  if (w < 0.0) w += kFullTurn;
  if (w >= kFullTurn) w = 0.0;
  return w;
}

/// Mean-intensity HSI. Hue is the arccos angle, reflected when b > g; it is
/// stored as 0 for gray pixels where it is undefined.
inline HsiPixel rgb_to_hsi(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
  const double mean = (r + g + b) / 3.0;
  HsiPixel p;
  p.i = mean;
  if (mean <= 0.0) return p;
  p.s = std::clamp(1.0 - std::min({r, g, b}) / mean, 0.0, 1.0);
  if (r8 == g8 && g8 == b8) {
    p.s = 0.0;
    return p;
  }
  const double num = 0.5 * ((r - g) + (r - b));
  const double den = std::sqrt((r - g) * (r - g) + (r - b) * (g - b));
  if (den <= 0.0) return p;
  const double theta = std::acos(std::clamp(num / den, -1.0, 1.0)) * 180.0 / std::numbers::pi;
  p.h = wrap_degrees(b > g ? kFullTurn - theta : theta);
  return p;
}

inline HsiPixel rgb_to_hsi(Rgb8 c) { return rgb_to_hsi(c.r, c.g, c.b); }

/// Inverse sector formula. Channels are returned unclamped in [0,1] units so
/// callers can detect HSI points outside the RGB gamut.
inline std::array<double, 3> hsi_to_rgb_unit(const HsiPixel& p) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double h = wrap_degrees(p.h);
  const double low = p.i * (1.0 - p.s);
  auto lift = [&](double sector_h) {
    return p.i * (1.0 + p.s * std::cos(sector_h * deg) / std::cos((60.0 - sector_h) * deg));
  };
  if (h < 120.0) {
    const double r = lift(h);
    return {r, 3.0 * p.i - (r + low), low};
  }
  if (h < 240.0) {
    const double g = lift(h - 120.0);
    return {low, g, 3.0 * p.i - (low + g)};
  }
  const double b = lift(h - 240.0);
  return {3.0 * p.i - (low + b), low, b};
}

inline bool in_rgb_gamut(const HsiPixel& p, double tol = 1e-9) {
  for (double c : hsi_to_rgb_unit(p))
    if (c < -tol || c > 1.0 + tol) return false;
  return true;
}

inline Rgb8 hsi_to_rgb8(const HsiPixel& p) {
  auto u = hsi_to_rgb_unit(p);
  auto q = [](double c) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
  };
  return {q(u[0]), q(u[1]), q(u[2])};
}

enum class MembershipKind { trapezoid_linear, trapezoid_circular };

inline std::string_view to_string(MembershipKind k) {
  return k == MembershipKind::trapezoid_linear ? "trapezoid-linear" : "trapezoid-circular";
}

/// Trapezoid over one channel: rises a->b, equals 1 on [b,c], falls c->d.
/// Circular memberships live on the hue circle and are read modulo 360.
struct ChannelMembership {
  MembershipKind kind = MembershipKind::trapezoid_linear;
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  friend bool operator==(const ChannelMembership&, const ChannelMembership&) = default;

  static ChannelMembership linear(double a, double b, double c, double d) {
    return {MembershipKind::trapezoid_linear, a, b, c, d};
  }
  static ChannelMembership circular(double a, double b, double c, double d) {
    return {MembershipKind::trapezoid_circular, wrap_degrees(a), wrap_degrees(b),
            wrap_degrees(c), wrap_degrees(d)};
  }
  /// Membership that is 1 over the whole hue circle.
  static ChannelMembership constant_hue() { return linear(0.0, 0.0, kFullTurn, kFullTurn); }

  /// Breakpoints in a monotone frame starting at `a` (identity for linear).
  std::array<double, 4> unwrapped() const {
    if (kind == MembershipKind::trapezoid_linear) return {a, b, c, d};
    const double ub = a + wrap_degrees(b - a);
    const double uc = ub + wrap_degrees(c - b);
    const double ud = uc + wrap_degrees(d - c);
    return {a, ub, uc, ud};
  }

  double operator()(double x) const {
    auto [ua, ub, uc, ud] = unwrapped();
    if (kind == MembershipKind::trapezoid_circular) x = ua + wrap_degrees(x - ua);
    if (x >= ub && x <= uc) return 1.0;
    if (x > ua && x < ub) return (x - ua) / (ub - ua);
    if (x > uc && x < ud) return (ud - x) / (ud - uc);
    return 0.0;
  }

  /// Centroid of the area under the trapezoid; plateau midpoint when the
  /// shape has zero area. Circular centroids are wrapped back into [0,360).
  double centroid() const {
    auto [ua, ub, uc, ud] = unwrapped();
    const double left = (ub - ua) / 2.0, mid = uc - ub, right = (ud - uc) / 2.0;
    const double area = left + mid + right;
    double cx = (ub + uc) / 2.0;
    if (area > 0.0) {
      cx = (left * (ua + 2.0 * (ub - ua) / 3.0) + mid * (ub + uc) / 2.0 +
            right * (uc + (ud - uc) / 3.0)) /
           area;
    }
    return kind == MembershipKind::trapezoid_circular ? wrap_degrees(cx) : cx;
  }
};

struct FuzzyColor {
  int id = 0;
  std::string name;
  ChannelMembership hue = ChannelMembership::constant_hue();
  ChannelMembership sat;
  ChannelMembership intensity;
  bool achromatic = false;

  friend bool operator==(const FuzzyColor&, const FuzzyColor&) = default;

  /// Representative HSI point. Achromatic colors sit on the gray axis.
  HsiPixel centroid() const {
    if (achromatic) return {0.0, 0.0, intensity.centroid()};
    return {hue.centroid(), sat.centroid(), intensity.centroid()};
  }
};

/// Degree to which a pixel belongs to a fuzzy color: min t-norm over the
/// channel memberships. Hue is skipped for achromatic colors and for
/// near-gray pixels.
inline double membership(const FuzzyColor& color, const HsiPixel& p) {
  double m = std::min(color.sat(p.s), color.intensity(p.i));
  if (!color.achromatic && p.s >= kAchromaticSaturation) m = std::min(m, color.hue(p.h));
  return std::clamp(m, 0.0, 1.0);
}

enum class PartitionSource { default_generated, file };

inline std::string_view to_string(PartitionSource s) {
  return s == PartitionSource::default_generated ? "default-generated" : "file";
}

class Partition {
 public:
  /// Validates every invariant; colors are reordered by id.
  static Partition make(std::vector<FuzzyColor> colors, std::string version, PartitionSource source);

  std::span<const FuzzyColor> colors() const { return colors_; }
  std::size_t size() const { return colors_.size(); }
  const FuzzyColor& operator[](int id) const { return colors_.at(static_cast<std::size_t>(id)); }
  bool contains(int id) const { return id >= 0 && static_cast<std::size_t>(id) < colors_.size(); }
  const std::string& version() const { return version_; }
  PartitionSource source() const { return source_; }

  /// Largest membership of `p` over all colors.
  double max_membership(const HsiPixel& p) const {
    double best = 0.0;
    for (const auto& c : colors_) best = std::max(best, membership(c, p));
    return best;
  }

  /// Structural equality: colors and version; provenance is not compared.
  friend bool operator==(const Partition& x, const Partition& y) {
    return x.version_ == y.version_ && x.colors_ == y.colors_;
  }

 private:
  std::vector<FuzzyColor> colors_;
  std::string version_;
  PartitionSource source_ = PartitionSource::default_generated;
};

namespace detail {

inline void check_membership(const FuzzyColor& c, const ChannelMembership& m, const char* channel,
                             double lo, double hi) {
  auto fail = [&](const std::string& why) {
    throw ValidationError("color " + std::to_string(c.id) + " (" + c.name + "): " + channel +
                          " " + why);
  };
  for (double v : {m.a, m.b, m.c, m.d})
    if (!std::isfinite(v)) fail("breakpoint is not finite");
  if (m.kind == MembershipKind::trapezoid_linear) {
    if (!(m.a <= m.b && m.b <= m.c && m.c <= m.d)) fail("breakpoints must satisfy a <= b <= c <= d");
    if (m.a < lo || m.d > hi) fail("breakpoints outside channel domain");
  } else {
    if (hi != kFullTurn) fail("circular membership only allowed on hue");
    for (double v : {m.a, m.b, m.c, m.d})
      if (v < 0.0 || v >= kFullTurn) fail("circular breakpoint outside [0,360)");
    auto u = m.unwrapped();
    if (u[3] - u[0] > kFullTurn) fail("circular support wraps more than once");
    if (u[2] - u[1] >= kFullTurn) fail("circular plateau must be shorter than 360");
  }
}

/// Grid used for the coverage invariant: 36 hues x 10 saturations x 10
/// intensities, endpoints included.
template <typename F>
void for_each_coverage_point(F&& f) {
  for (int hi = 0; hi < 36; ++hi)
    for (int si = 0; si < 10; ++si)
      for (int ii = 0; ii < 10; ++ii) f(HsiPixel{hi * 10.0, si / 9.0, ii / 9.0});
}

}  // namespace detail

inline Partition Partition::make(std::vector<FuzzyColor> colors, std::string version,
                                 PartitionSource source) {
  if (colors.empty()) throw ValidationError("partition has no colors");
  std::sort(colors.begin(), colors.end(),
            [](const FuzzyColor& x, const FuzzyColor& y) { return x.id < y.id; });
  for (std::size_t k = 0; k < colors.size(); ++k) {
    const auto& c = colors[k];
    if (k > 0 && colors[k - 1].id == c.id)
      throw ValidationError("duplicate color id " + std::to_string(c.id));
    if (c.id != static_cast<int>(k))
      throw ValidationError("color ids must be contiguous from 0; unexpected id " +
                            std::to_string(c.id));
    detail::check_membership(c, c.hue, "hue", 0.0, kFullTurn);
    detail::check_membership(c, c.sat, "saturation", 0.0, 1.0);
    detail::check_membership(c, c.intensity, "intensity", 0.0, 1.0);
    if (c.achromatic && !(c.hue.kind == MembershipKind::trapezoid_linear && c.hue.b <= 0.0 &&
                          c.hue.c >= kFullTurn))
      throw ValidationError("color " + std::to_string(c.id) +
                            ": achromatic colors need the constant hue membership");
  }
  Partition p;
  p.colors_ = std::move(colors);
  p.version_ = std::move(version);
  p.source_ = source;
  std::optional<HsiPixel> hole;
  detail::for_each_coverage_point([&](const HsiPixel& px) {
    if (!hole && p.max_membership(px) < 0.5) hole = px;
  });
  if (hole)
    throw ValidationError("partition does not cover h=" + std::to_string(hole->h) +
                          " s=" + std::to_string(hole->s) + " i=" + std::to_string(hole->i) +
                          " with membership >= 0.5");
  return p;
}

/// Layout constants of the generated 92-color partition.
struct DefaultLayout {
  static constexpr int hue_bins = 10;
  static constexpr int sat_bands = 3;
  static constexpr int int_bands = 3;
  static constexpr int chromatic = hue_bins * sat_bands * int_bands;
  static constexpr int black_id = chromatic;
  static constexpr int white_id = chromatic + 1;
  static constexpr int size = chromatic + 2;

  static constexpr double hue_step = kFullTurn / hue_bins;
  static constexpr double hue_ramp = 6.0;  // half-width of the overlap
  static constexpr double sat_ramp = 0.05;
  static constexpr double int_ramp = 0.05;
  static constexpr std::array<double, 4> sat_edges{0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
  static constexpr std::array<double, 4> int_edges{0.2, 0.45, 0.7, 1.0};
  // Grayish colors stop where white starts, so neutral highlights are white.
  static constexpr std::array<double, 4> grayish_int_edges{0.2, 0.4, 0.6, 0.8};
  static constexpr double black_int_edge = 0.2;

  static constexpr int chromatic_id(int hue_bin, int sat_band, int int_band) {
    return (hue_bin * sat_bands + sat_band) * int_bands + int_band;
  }
};

namespace detail {

// Band k of a ramped partition of [edges.front(), edges.back()]: neighbouring
// bands cross at 0.5 exactly on the shared edge. Open ends have no ramp.
inline ChannelMembership band(const std::array<double, 4>& edges, int k, double ramp, bool open_low,
                              bool open_high) {
  const double lo = edges[k], hi = edges[k + 1];
  const bool first = k == 0, last = k + 1 == static_cast<int>(edges.size()) - 1;
  const bool flat_low = first && open_low, flat_high = last && open_high;
  return ChannelMembership::linear(flat_low ? lo : lo - ramp, flat_low ? lo : lo + ramp,
                                   flat_high ? hi : hi - ramp, flat_high ? hi : hi + ramp);
}

}  // namespace detail

/// The generated 92-color partition: 10 hue bins x 3 saturation bands x 3
/// intensity bands, plus black (low intensity, any saturation) and white
/// (high intensity, grayish saturation). Adjacent trapezoids cross at 0.5.
inline Partition default_partition() {
  using L = DefaultLayout;
  static constexpr std::array<std::string_view, L::hue_bins> hue_names{
      "red", "orange", "yellow", "lime", "green", "cyan", "azure", "blue", "violet", "magenta"};
  static constexpr std::array<std::string_view, L::sat_bands> sat_names{"grayish", "muted", "vivid"};
  static constexpr std::array<std::string_view, L::int_bands> int_names{"dark", "medium", "light"};

  std::vector<FuzzyColor> colors;
  colors.reserve(L::size);
  for (int h = 0; h < L::hue_bins; ++h) {
    const double center = h * L::hue_step;
    const double half = L::hue_step / 2.0;
    auto hue = ChannelMembership::circular(center - half - L::hue_ramp, center - half + L::hue_ramp,
                                           center + half - L::hue_ramp, center + half + L::hue_ramp);
    for (int s = 0; s < L::sat_bands; ++s) {
      for (int i = 0; i < L::int_bands; ++i) {
        FuzzyColor c;
        c.id = L::chromatic_id(h, s, i);
        c.name = std::string(sat_names[s]) + " " + std::string(int_names[i]) + " " +
                 std::string(hue_names[h]);
        c.hue = hue;
        c.sat = detail::band(L::sat_edges, s, L::sat_ramp, true, true);
        // Dark bands ramp up out of black; grayish light ramps down into white.
        c.intensity = s == 0 ? detail::band(L::grayish_int_edges, i, L::int_ramp, false, false)
                             : detail::band(L::int_edges, i, L::int_ramp, false, true);
        colors.push_back(std::move(c));
      }
    }
  }
  FuzzyColor black;
  black.id = L::black_id;
  black.name = "black";
  black.achromatic = true;
  black.sat = ChannelMembership::linear(0.0, 0.0, 1.0, 1.0);
  black.intensity = ChannelMembership::linear(0.0, 0.0, L::black_int_edge - L::int_ramp,
                                              L::black_int_edge + L::int_ramp);
  colors.push_back(black);

  FuzzyColor white;
  white.id = L::white_id;
  white.name = "white";
  white.achromatic = true;
  white.sat = detail::band(L::sat_edges, 0, L::sat_ramp, true, true);
  white.intensity = ChannelMembership::linear(L::grayish_int_edges.back() - L::int_ramp,
                                              L::grayish_int_edges.back() + L::int_ramp, 1.0, 1.0);
  colors.push_back(white);

  return Partition::make(std::move(colors), "default-92/1", PartitionSource::default_generated);
}

// ---------------------------------------------------------------------------
// Partition file: {version, colors:[{id, name, achromatic, hue, sat, int}]}

inline nlohmann::json to_json(const ChannelMembership& m) {
  return {{"kind", std::string(to_string(m.kind))}, {"a", m.a}, {"b", m.b}, {"c", m.c}, {"d", m.d}};
}

inline ChannelMembership channel_membership_from_json(const nlohmann::json& j, const std::string& where) {
  const std::string kind = detail::require_string(j, "kind", where);
  ChannelMembership m;
  if (kind == "trapezoid-linear") {
    m.kind = MembershipKind::trapezoid_linear;
  } else if (kind == "trapezoid-circular") {
    m.kind = MembershipKind::trapezoid_circular;
  } else {
    throw ParseError(where + ": unknown membership kind '" + kind + "'");
  }
  m.a = detail::require_number(j, "a", where);
  m.b = detail::require_number(j, "b", where);
  m.c = detail::require_number(j, "c", where);
  m.d = detail::require_number(j, "d", where);
  return m;
}

inline nlohmann::json to_json(const Partition& p) {
  nlohmann::json colors = nlohmann::json::array();
  for (const auto& c : p.colors()) {
    colors.push_back({{"id", c.id},
                      {"name", c.name},
                      {"achromatic", c.achromatic},
                      {"hue", to_json(c.hue)},
                      {"sat", to_json(c.sat)},
                      {"int", to_json(c.intensity)}});
  }
  return {{"version", p.version()}, {"colors", std::move(colors)}};
}

inline Partition partition_from_json(const nlohmann::json& doc, PartitionSource source = PartitionSource::file) {
  const std::string version = detail::require_string(doc, "version", "partition");
  std::vector<FuzzyColor> colors;
  for (const auto& entry : detail::require_array(doc, "colors", "partition")) {
    FuzzyColor c;
    c.id = static_cast<int>(detail::require_integer(entry, "id", "partition color"));
    const std::string where = "partition color " + std::to_string(c.id);
    c.name = detail::require_string(entry, "name", where);
    const auto& achromatic = detail::require(entry, "achromatic", where);
    if (!achromatic.is_boolean()) throw ParseError(where + ": 'achromatic' must be a boolean");
    c.achromatic = achromatic.get<bool>();
    c.hue = channel_membership_from_json(detail::require(entry, "hue", where), where + " hue");
    c.sat = channel_membership_from_json(detail::require(entry, "sat", where), where + " sat");
    c.intensity = channel_membership_from_json(detail::require(entry, "int", where), where + " int");
    colors.push_back(std::move(c));
  }
  return Partition::make(std::move(colors), version, source);
}

inline Partition load_partition(const std::filesystem::path& path) {
  return partition_from_json(detail::read_json_file(path), PartitionSource::file);
}

inline void save_partition(const Partition& p, const std::filesystem::path& path) {
  detail::write_json_file(path, to_json(p));
}

}  // namespace harmonia
