#pragma once

#include <Eigen/Core>

#include <vector>

#include "epitome/image.hpp"

namespace epitome {

/// One entry of a match list: a candidate patch and its MSE to the block.
struct PatchMatch {
  Origin origin;
  double mse = 0.0;

  friend bool operator==(const PatchMatch&, const PatchMatch&) = default;
};

/// Per-block lists of matching patches, ML(B_i). Lists are in raster order
/// of patch origin and always contain the block's own position.
struct MatchLists {
  int width = 0;
  int height = 0;
  int block_size = 0;
  double threshold = 0.0;  // eps_M, in MSE units
  std::vector<std::vector<PatchMatch>> lists;

  int block_count() const { return static_cast<int>(lists.size()); }
  std::size_t total_matches() const;
};

/// Block membership in a reverse list, RL(M_j).
struct ReverseEntry {
  int block = 0;
  double mse = 0.0;

  friend bool operator==(const ReverseEntry&, const ReverseEntry&) = default;
};

/// Reverse lists indexed densely by patch origin. Every valid patch origin
/// of a width x height plane owns a (possibly empty) list of blocks.
class ReverseLists {
 public:
  ReverseLists(int width, int height, int block_size);

  int block_size() const { return block_size_; }
  int position_rows() const { return rows_; }
  int position_cols() const { return cols_; }
  int position_count() const { return rows_ * cols_; }

  int key(Origin o) const { return o.row * cols_ + o.col; }
  Origin origin(int key) const { return {key / cols_, key % cols_}; }
  bool valid(Origin o) const {
    return o.row >= 0 && o.col >= 0 && o.row < rows_ && o.col < cols_;
  }

  const std::vector<ReverseEntry>& at(Origin o) const { return lists_[key(o)]; }
  const std::vector<ReverseEntry>& at(int key) const { return lists_[key]; }
  std::vector<ReverseEntry>& mutable_at(int key) { return lists_[key]; }

  /// Origins with a non-empty list, raster order.
  std::vector<Origin> keys() const;

 private:
  int block_size_;
  int rows_;
  int cols_;
  std::vector<std::vector<ReverseEntry>> lists_;
};

/// Result of greedy leader clustering over the block grid.
struct BlockClustering {
  double threshold = 0.0;  // eps_A
  std::vector<int> assignment;                // block -> cluster
  std::vector<std::vector<int>> members;      // cluster -> blocks, raster order
  std::vector<Eigen::VectorXd> centroids;     // cluster -> mean patch
  std::vector<int> representatives;           // cluster -> member nearest centroid

  int cluster_count() const { return static_cast<int>(members.size()); }
};

struct SimilarityOptions {
  double matching_threshold = 25.0;  // eps_M
  int search_step = 1;
  int threads = 1;

  /// eps_A is tied to eps_M.
  double assignation_threshold() const { return 0.5 * matching_threshold; }
};

/// Sequential leader clustering in raster order. A block joins the first
/// cluster whose centroid is within `threshold` (MSE) provided the updated
/// centroid stays within `threshold` of every member; otherwise it founds a
/// new cluster.
BlockClustering cluster_blocks(const BlockGrid& grid, const ImagePlane& image,
                               double threshold);

/// Exhaustive scan of every patch origin on a `search_step` lattice.
/// Returns all patches with MSE <= threshold against the block at `block`,
/// raster order; the block's own origin is always included.
std::vector<PatchMatch> match_patches_for_cluster(Origin block, int block_size,
                                                  const ImagePlane& image,
                                                  double threshold,
                                                  int search_step = 1);

/// Two-step search: cluster, match each cluster representative, then
/// re-verify every (member, patch) pair against eps_M.
MatchLists find_self_similarities(const ImagePlane& image, const BlockGrid& grid,
                                  const SimilarityOptions& options);

ReverseLists build_reverse_lists(const MatchLists& ml);

/// SSE between the block_size x block_size regions at `a` and `b`. Stops
/// early and returns a value > limit once the running sum exceeds `limit`.
double region_sse(const ImagePlane& image, Origin a, Origin b, int block_size,
                  double limit);

}  // namespace epitome
