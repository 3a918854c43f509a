#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace hnil {

struct RankEntry {
  std::string id;
  double score = 0.0;

  bool operator==(const RankEntry&) const = default;
};

// Descending score, ties broken by ascending id; at most k entries.
using RankedList = std::vector<RankEntry>;

inline void sort_and_clip(RankedList& list, int k) {
  std::sort(list.begin(), list.end(), [](const RankEntry& a,
                                         const RankEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (k >= 0 && static_cast<int>(list.size()) > k)
    list.resize(static_cast<size_t>(k));
}

}  // namespace hnil
