#pragma once

#include "popgcn/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace popgcn {

struct Interaction {
  Index user = 0;
  Index item = 0;

  friend bool operator==(const Interaction&, const Interaction&) = default;
  friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

/// How raw interaction files are laid out.
struct DelimiterSpec {
  enum class Layout {
    /// "user item [ignored columns...]" per line.
    pairs,
    /// "user item item ..." per line (one adjacency list per user).
    adjacency,
  };

  /// '\0' splits on any run of whitespace.
  char delimiter = '\0';
  Layout layout = Layout::pairs;
};

struct LoadedInteractions {
  std::vector<Interaction> interactions;  // unique, in first-seen order
  Index num_users = 0;
  Index num_items = 0;
  std::size_t lines_read = 0;
  std::size_t duplicates = 0;
  std::vector<std::string> user_tokens;  // dense index -> raw token
  std::vector<std::string> item_tokens;
};

LoadedInteractions load_interactions(const std::filesystem::path& path, const DelimiterSpec& spec = {});

/// Writes "<index>\t<token>" lines, one per dense index.
void write_id_map(const std::filesystem::path& path, const std::vector<std::string>& tokens);

struct PopularityPartition {
  std::vector<Index> popular;  // ascending item index
  std::vector<Index> tail;     // ascending item index
  std::vector<Index> degree;   // per item, train interactions
  std::vector<bool> is_tail;   // per item
  /// Smallest train degree among popular items (0 when there are none).
  Index boundary_degree = 0;

  bool tail_item(Index item) const { return is_tail[item]; }
};

/// Top 20% of items with nonzero train degree are popular, ties broken by
/// ascending item index; everything else, including unseen items, is tail.
PopularityPartition partition_by_popularity(std::span<const Interaction> train, Index num_items);

struct SplitRatios {
  /// Fraction of each user's interactions kept for training (the rest is test).
  double train = 0.8;
  /// Fraction of each user's training portion carved out for validation.
  double validation = 0.2;
};

struct SplitSet {
  Index num_users = 0;
  Index num_items = 0;
  std::uint64_t seed = 0;
  std::vector<Interaction> train;
  std::vector<Interaction> validation;
  std::vector<Interaction> test_overall;
  std::vector<Interaction> test_tail;
  std::vector<Interaction> validation_tail;
  PopularityPartition partition;
};

/// Per-user random split. A user always keeps at least one training
/// interaction; the popularity partition is computed on the final train split
/// and used to derive both tail subsets.
SplitSet split(std::span<const Interaction> data, Index num_users, Index num_items, const SplitRatios& ratios,
               std::uint64_t seed);

/// Keeps only interactions whose item is tail under `partition`.
std::vector<Interaction> filter_tail(std::span<const Interaction> data, const PopularityPartition& partition);

/// Split files: train.txt, validation.txt, test.txt, test_tail.txt,
/// validation_tail.txt ("user item" per line) and manifest.json.
void write_split(const std::filesystem::path& dir, const SplitSet& splits);
SplitSet read_split(const std::filesystem::path& dir);

/// Manifest JSON text (stable key order, no timestamps).
std::string split_manifest(const SplitSet& splits);

/// Reads a "user item" file of already-dense indices.
std::vector<Interaction> read_indexed_interactions(const std::filesystem::path& path);
void write_indexed_interactions(const std::filesystem::path& path, std::span<const Interaction> data);

}  // namespace popgcn
