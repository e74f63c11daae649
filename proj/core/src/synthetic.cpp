#include "popgcn/synthetic.hpp"

#include "popgcn/util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace popgcn {

std::vector<Interaction> generate_interactions(const SyntheticSpec& spec) {
  if (spec.num_users == 0 || spec.num_items == 0 || spec.topics == 0) throw Error("synthetic: empty spec");
  if (spec.min_per_user == 0 || spec.min_per_user > spec.max_per_user) throw Error("synthetic: bad per-user range");

  std::mt19937_64 rng(spec.seed);
  std::vector<Index> rank(spec.num_items);
  std::iota(rank.begin(), rank.end(), 0);
  shuffle(rank, rng);

  std::vector<double> popularity(spec.num_items);
  std::vector<Index> topic(spec.num_items);
  for (Index i = 0; i < spec.num_items; ++i) {
    popularity[i] = std::pow(static_cast<double>(rank[i]) + 1.0, -spec.popularity_exponent);
    topic[i] = static_cast<Index>(uniform_below(rng, spec.topics));
  }

  std::vector<Interaction> out;
  std::vector<std::pair<double, Index>> keys(spec.num_items);
  const double lo = static_cast<double>(spec.min_per_user);
  const double hi = static_cast<double>(spec.max_per_user);
  for (Index u = 0; u < spec.num_users; ++u) {
    const auto primary = static_cast<Index>(uniform_below(rng, spec.topics));
    const auto secondary = static_cast<Index>(uniform_below(rng, spec.topics));
    auto count = static_cast<Index>(std::floor(lo * std::pow(hi / lo, uniform01(rng))));
    count = std::min({std::max(count, spec.min_per_user), spec.max_per_user, spec.num_items});

    // Weighted sampling without replacement: keep the largest ln(U)/w keys.
    for (Index i = 0; i < spec.num_items; ++i) {
      double w = popularity[i];
      if (topic[i] == primary) w *= spec.topic_affinity;
      else if (topic[i] == secondary) w *= 0.5 * spec.topic_affinity;
      const double uval = 1.0 - uniform01(rng);
      keys[i] = {std::log(uval) / w, i};
    }
    std::partial_sort(keys.begin(), keys.begin() + count, keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    std::vector<Index> chosen;
    for (Index r = 0; r < count; ++r) chosen.push_back(keys[r].second);
    std::sort(chosen.begin(), chosen.end());
    for (Index i : chosen) out.push_back({u, i});
  }
  return out;
}

}  // namespace popgcn
