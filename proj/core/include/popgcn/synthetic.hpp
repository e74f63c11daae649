#pragma once

#include "popgcn/dataset.hpp"

#include <cstdint>
#include <vector>

namespace popgcn {

/// Implicit-feedback generator with Zipf item popularity and topical users.
struct SyntheticSpec {
  Index num_users = 600;
  Index num_items = 1200;
  Index topics = 12;
  /// Item weight proportional to rank^-exponent.
  double popularity_exponent = 0.7;
  Index min_per_user = 10;
  Index max_per_user = 60;
  /// Multiplier on items of the user's favourite topics.
  double topic_affinity = 30.0;
  std::uint64_t seed = 7;
};

/// Unique (user, item) pairs; every user gets at least min_per_user items
/// (capped by num_items).
std::vector<Interaction> generate_interactions(const SyntheticSpec& spec);

}  // namespace popgcn
