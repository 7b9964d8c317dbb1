// Minimal end-to-end use of the library: describe two images, mine a tiny
// knowledge base from a synthetic corpus and score a look.

#include <iostream>

#include "harmonia/harmonia.hpp"

using namespace harmonia;

int main() {
  const Partition partition = default_partition();
  const ColorDistanceTable table(partition);

  RgbImage flag(40, 20);
  for (int y = 0; y < flag.height(); ++y)
    for (int x = 0; x < flag.width(); ++x) flag.at(x, y) = x < 20 ? Rgb8{200, 30, 30} : Rgb8{240, 240, 240};
  const ColorDescriptor d = extract_descriptor(flag, partition);
  for (const auto& e : d.entries) std::cout << partition[e.color_id].name << ": " << e.weight << '\n';

  CorpusSpec spec;
  spec.palettes = 3;
  spec.images = 90;
  const auto corpus = generate_corpus(spec, partition, table);
  const auto result = mine(as_corpus_items(corpus), partition, table, MinerConfig::desk_scale());
  const KnowledgeBase kb{"1", result.palettes};
  std::cout << result.palettes.size() << " palettes mined from " << result.stats.items_processed << " images\n";

  const auto& top = result.palettes.front();
  Look look;
  look.items.push_back({ApparelRole::dress_costume, top.entries.front().color_id});
  look.items.push_back({ApparelRole::accessory, top.entries.back().color_id});
  const UserProfile user{"demo", {{top.entries.front().color_id, 0.9}}, 0.5};

  const PreferenceScore score = predict_preference(look, &user, kb, table);
  std::cout << "preference " << score.value << " (harmony " << score.harmony << ")\n";
  return score.harmony == 1.0 ? 0 : 1;
}
