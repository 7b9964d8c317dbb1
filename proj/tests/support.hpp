#pragma once

#include <random>
#include <vector>

#include "harmonia/harmonia.hpp"

namespace testing {

inline const harmonia::Partition& partition() {
  static const harmonia::Partition p = harmonia::default_partition();
  return p;
}

inline const harmonia::ColorDistanceTable& table() {
  static const harmonia::ColorDistanceTable t(partition());
  return t;
}

inline harmonia::RgbImage solid(int w, int h, harmonia::Rgb8 c) {
  harmonia::RgbImage img(w, h);
  for (auto& px : img.pixels()) px = c;
  return img;
}

/// Random descriptor with 1..max_entries distinct ids below `colors`.
inline harmonia::ColorDescriptor random_descriptor(std::mt19937_64& rng, std::size_t max_entries = 5,
                                                   int colors = harmonia::DefaultLayout::size) {
  std::uniform_int_distribution<std::size_t> count(1, max_entries);
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  std::vector<int> ids(static_cast<std::size_t>(colors));
  for (int k = 0; k < colors; ++k) ids[static_cast<std::size_t>(k)] = k;
  std::shuffle(ids.begin(), ids.end(), rng);
  harmonia::ColorDescriptor d;
  const std::size_t n = std::min(count(rng), ids.size());
  for (std::size_t k = 0; k < n; ++k) d.entries.push_back({ids[k], weight(rng)});
  harmonia::detail::normalize_entries(d.entries);
  harmonia::detail::sort_entries(d.entries);
  return d;
}

inline harmonia::RgbImage random_image(std::mt19937_64& rng, int w, int h) {
  std::uniform_int_distribution<int> byte(0, 255);
  harmonia::RgbImage img(w, h);
  for (auto& px : img.pixels())
    px = {static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
          static_cast<std::uint8_t>(byte(rng))};
  return img;
}

}  // namespace testing
