#pragma once

// Planted-palette corpus generator. Images are painted from known palettes
// so a mining run can be scored against the ground truth.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "harmonia/color_space.hpp"
#include "harmonia/descriptor.hpp"
#include "harmonia/detail/json_util.hpp"
#include "harmonia/error.hpp"
#include "harmonia/image.hpp"
#include "harmonia/miner.hpp"
#include "harmonia/similarity.hpp"

namespace harmonia {

struct CorpusSpec {
  std::size_t palettes = 8;
  std::size_t images = 500;
  double noise = 0.05;
  int width = 32;
  int height = 32;
  std::uint64_t seed = 1;
  /// Minimum descriptor difference between any two planted palettes.
  double min_separation = 0.25;
  std::size_t min_colors = 2;
  std::size_t max_colors = 3;
  /// Relative per-image jitter of the palette weights.
  double weight_jitter = 0.2;

  void validate() const {
    if (palettes < 1) throw ValidationError("need at least one planted palette");
    if (!(noise >= 0.0 && noise <= 1.0)) throw ValidationError("noise fraction must lie in [0,1]");
    if (width < 1 || height < 1) throw ValidationError("image dimensions must be positive");
    if (min_colors < 1 || max_colors < min_colors) throw ValidationError("bad palette color range");
    if (!(weight_jitter >= 0.0 && weight_jitter < 1.0)) throw ValidationError("weight_jitter must lie in [0,1)");
  }
};

struct PlantedPalette {
  int id = 0;
  ColorDescriptor descriptor;
};

struct SyntheticImage {
  std::string name;
  int palette = -1;  // planted palette id, -1 for noise
  RgbImage image;
};

struct SyntheticCorpus {
  CorpusSpec spec;
  std::vector<PlantedPalette> palettes;
  std::vector<SyntheticImage> images;
};

/// RGB values whose HSI point belongs to exactly one fuzzy color with
/// membership 1, grouped by color. Colors without such points are empty.
inline std::vector<std::vector<Rgb8>> crisp_color_samples(const Partition& partition, std::mt19937_64& rng,
                                                          std::size_t per_color = 48, std::size_t tries = 600) {
  std::vector<std::vector<Rgb8>> pools(partition.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto inner = [&](const ChannelMembership& m) {
    auto u = m.unwrapped();
    const double lo = u[1], hi = u[2];
    const double margin = 0.2 * (hi - lo);
    double x = lo + margin + unit(rng) * (hi - lo - 2.0 * margin);
    return m.kind == MembershipKind::trapezoid_circular ? wrap_degrees(x) : x;
  };
  for (const auto& color : partition.colors()) {
    auto& pool = pools[static_cast<std::size_t>(color.id)];
    for (std::size_t t = 0; t < tries && pool.size() < per_color; ++t) {
      HsiPixel p{color.achromatic ? 0.0 : inner(color.hue), color.achromatic ? 0.0 : inner(color.sat),
                 inner(color.intensity)};
      if (!color.achromatic && p.s < 2.0 * kAchromaticSaturation) continue;
      if (!in_rgb_gamut(p)) continue;
      const Rgb8 rgb = hsi_to_rgb8(p);
      const HsiPixel back = rgb_to_hsi(rgb);
      bool crisp = membership(color, back) == 1.0;
      for (const auto& other : partition.colors()) {
        if (!crisp) break;
        if (other.id != color.id && membership(other, back) > 0.0) crisp = false;
      }
      if (crisp) pool.push_back(rgb);
    }
  }
  return pools;
}

namespace detail {

inline ColorDescriptor random_palette(const std::vector<int>& candidates, std::size_t k, std::mt19937_64& rng) {
  std::vector<int> pick = candidates;
  std::shuffle(pick.begin(), pick.end(), rng);
  pick.resize(k);
  std::uniform_real_distribution<double> spread(1.0, 2.0);
  ColorDescriptor d;
  for (int id : pick) d.entries.push_back({id, spread(rng)});
  normalize_entries(d.entries);
  sort_entries(d.entries);
  return d;
}

inline RgbImage paint(const ColorDescriptor& palette, const std::vector<std::vector<Rgb8>>& pools,
                      const CorpusSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(1.0 - spec.weight_jitter, 1.0 + spec.weight_jitter);
  std::vector<double> shares;
  double total = 0.0;
  for (const auto& e : palette.entries) {
    shares.push_back(e.weight * jitter(rng));
    total += shares.back();
  }
  // Horizontal bands, one per color, with heights proportional to the shares.
  RgbImage img(spec.width, spec.height);
  std::vector<int> rows;
  int assigned = 0;
  double acc = 0.0;
  for (std::size_t k = 0; k < shares.size(); ++k) {
    acc += shares[k] / total;
    int end = k + 1 == shares.size() ? spec.height : static_cast<int>(std::lround(acc * spec.height));
    end = std::clamp(end, assigned + 1, spec.height);
    rows.push_back(end);
    assigned = end;
  }
  std::size_t band = 0;
  for (int y = 0; y < spec.height; ++y) {
    while (band + 1 < rows.size() && y >= rows[band]) ++band;
    const auto& pool = pools[static_cast<std::size_t>(palette.entries[band].color_id)];
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (int x = 0; x < spec.width; ++x) img.at(x, y) = pool[pick(rng)];
  }
  return img;
}

}  // namespace detail

/// Generates the corpus deterministically from `spec.seed`.
inline SyntheticCorpus generate_corpus(const CorpusSpec& spec, const Partition& partition,
                                       const ColorDistanceTable& table) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const auto pools = crisp_color_samples(partition, rng);
  std::vector<int> candidates;
  for (std::size_t c = 0; c < pools.size(); ++c)
    if (pools[c].size() >= 8) candidates.push_back(static_cast<int>(c));
  if (candidates.size() < spec.max_colors) throw InvalidStateError("partition has too few paintable colors");

  SyntheticCorpus corpus;
  corpus.spec = spec;
  std::uniform_int_distribution<std::size_t> size_dist(spec.min_colors, spec.max_colors);
  // Greedy rejection sampling, restarted from scratch when it paints itself
  // into a corner.
  constexpr std::size_t attempts_per_round = 5000, rounds = 200;
  for (std::size_t round = 0; corpus.palettes.size() < spec.palettes; ++round) {
    if (round == rounds) throw InvalidStateError("cannot plant palettes with the requested separation");
    corpus.palettes.clear();
    for (std::size_t attempt = 0; attempt < attempts_per_round && corpus.palettes.size() < spec.palettes; ++attempt) {
      auto d = detail::random_palette(candidates, size_dist(rng), rng);
      const bool separated = std::all_of(corpus.palettes.begin(), corpus.palettes.end(), [&](const PlantedPalette& p) {
        return descriptor_difference(p.descriptor, d, table) >= spec.min_separation;
      });
      if (separated) corpus.palettes.push_back({static_cast<int>(corpus.palettes.size()), std::move(d)});
    }
  }

  const auto noise_count = static_cast<std::size_t>(std::lround(spec.noise * static_cast<double>(spec.images)));
  std::vector<int> labels(spec.images, -1);
  std::uniform_int_distribution<int> palette_dist(0, static_cast<int>(spec.palettes) - 1);
  for (std::size_t k = noise_count; k < spec.images; ++k) labels[k] = palette_dist(rng);
  std::shuffle(labels.begin(), labels.end(), rng);

  const int digits = std::max<int>(4, static_cast<int>(std::to_string(spec.images).size()));
  for (std::size_t k = 0; k < spec.images; ++k) {
    SyntheticImage img;
    std::string index = std::to_string(k);
    img.name = "img_" + std::string(static_cast<std::size_t>(digits) - std::min(index.size(), static_cast<std::size_t>(digits)), '0') + index + ".png";
    img.palette = labels[k];
    const ColorDescriptor palette = labels[k] >= 0 ? corpus.palettes[static_cast<std::size_t>(labels[k])].descriptor
                                                   : detail::random_palette(candidates, size_dist(rng) + 1, rng);
    img.image = detail::paint(palette, pools, spec, rng);
    corpus.images.push_back(std::move(img));
  }
  return corpus;
}

/// Number of planted palettes matched by some promoted palette with
/// similarity at least `min_similarity`.
inline std::size_t recovered_palettes(const std::vector<PlantedPalette>& planted,
                                      const std::vector<HarmoniousPalette>& promoted, const ColorDistanceTable& table,
                                      double min_similarity = 0.8) {
  std::size_t hits = 0;
  for (const auto& p : planted) {
    double best = 0.0;
    for (const auto& q : promoted) best = std::max(best, palette_similarity(p.descriptor, q.descriptor(), table));
    if (best >= min_similarity) ++hits;
  }
  return hits;
}

inline std::vector<CorpusItem> as_corpus_items(const SyntheticCorpus& corpus) {
  std::vector<CorpusItem> items;
  items.reserve(corpus.images.size());
  for (const auto& img : corpus.images) {
    const RgbImage* raster = &img.image;
    items.push_back({img.name, [raster] { return *raster; }});
  }
  return items;
}

// Manifest: {seed, palettes:[{id, entries}], images:[{file, palette}]}
inline nlohmann::json manifest_json(const SyntheticCorpus& corpus) {
  nlohmann::json palettes = nlohmann::json::array();
  for (const auto& p : corpus.palettes) {
    auto j = to_json(p.descriptor);
    j["id"] = p.id;
    palettes.push_back(std::move(j));
  }
  nlohmann::json images = nlohmann::json::array();
  for (const auto& img : corpus.images) images.push_back({{"file", img.name}, {"palette", img.palette}});
  return {{"seed", corpus.spec.seed},
          {"noise", corpus.spec.noise},
          {"width", corpus.spec.width},
          {"height", corpus.spec.height},
          {"palettes", std::move(palettes)},
          {"images", std::move(images)}};
}

inline std::vector<PlantedPalette> planted_from_manifest(const nlohmann::json& j, std::size_t color_count = 0) {
  std::vector<PlantedPalette> out;
  for (const auto& p : detail::require_array(j, "palettes", "manifest"))
    out.push_back({static_cast<int>(detail::require_integer(p, "id", "manifest palette")),
                   descriptor_from_json(p, color_count)});
  return out;
}

inline void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());
  for (const auto& img : corpus.images) write_png(img.image, dir / img.name);
  detail::write_json_file(dir / "manifest.json", manifest_json(corpus));
}

}  // namespace harmonia
