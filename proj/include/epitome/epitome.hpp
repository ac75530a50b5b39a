#pragma once

#include <optional>
#include <set>
#include <vector>

#include "epitome/image.hpp"
#include "epitome/self_similarity.hpp"

namespace epitome {

using LabelPlane = PlaneArray<int>;

/// Summary of one epitome chart. Chart pixels are those whose label equals
/// the chart index in Epitome::labels.
struct EpitomeChart {
  PixelRegion bounds;
  long area = 0;
};

/// Epitome of an image: disjoint charts over the source texture.
/// `labels` holds the chart index per pixel, -1 outside the epitome.
struct Epitome {
  ImagePlane source;
  LabelPlane labels;
  std::vector<EpitomeChart> charts;

  int width() const { return source.width(); }
  int height() const { return source.height(); }
  Mask mask() const { return labels >= 0; }
  long area() const { return (labels >= 0).count(); }
  /// Share of source pixels inside the epitome, in percent.
  double fraction() const {
    return 100.0 * static_cast<double>(area()) / static_cast<double>(source.size());
  }
};

/// For every block of the grid, the origin of the patch reconstructing it.
struct AssignationMap {
  int block_size = 0;
  std::vector<std::optional<Origin>> patches;

  bool complete() const;
};

struct EpitomeResult {
  Epitome epitome;
  AssignationMap assignation;
};

/// Label plane -> charts as 8-connected components, numbered in raster order
/// of their first pixel.
Epitome make_epitome(const ImagePlane& source, const Mask& mask);

/// Greedy chart growth. Each step picks, among the valid candidate patches
/// of the current mode, the one minimizing the global reconstruction MSE
/// (ties: lowest origin). Unreconstructed pixels count as peak^2.
///
/// A candidate is a patch from some match list that is not yet fully inside
/// the epitome. In extension mode it must touch the current chart; in
/// initialization mode it must not touch any chart (8-neighborhood). A
/// candidate is only committed if it makes at least one new block
/// reconstructable, which bounds the number of steps by the block count.
///
/// Scores are cached per candidate and refreshed only where a commit changed
/// the mask or the set of unassigned blocks.
class EpitomeBuilder {
 public:
  enum class Mode { kInitialize, kExtend, kFallback };

  struct Step {
    Origin origin;
    int chart = -1;
    Mode mode = Mode::kInitialize;
    double score = 0.0;  // global MSE after the commit
    int newly_assigned = 0;
  };

  EpitomeBuilder(const ImagePlane& image, const MatchLists& ml,
                 const ReverseLists& rl, int threads = 1);

  bool done() const { return unassigned_ == 0; }
  int unassigned_count() const { return unassigned_; }
  int current_chart() const { return current_chart_; }
  int chart_count() const { return chart_count_; }
  int block_size() const { return block_size_; }

  /// Global MSE of the current reconstruction I'.
  double current_score() const;

  /// Structural candidates: patches from the match lists not fully inside
  /// the epitome that touch `chart` (extension) or touch no chart
  /// (initialization, chart == nullopt). Raster order.
  std::vector<Origin> enumerate_candidates(std::optional<int> chart) const;

  /// Global MSE of I' if the patch at `candidate` were added.
  double score_candidate(Origin candidate) const;

  /// Number of blocks that adding `candidate` would make reconstructable.
  int reconstructable_count(Origin candidate) const;

  /// Commits one greedy step. Precondition: !done().
  Step step();

  /// Runs to completion.
  EpitomeResult finish();

  bool in_epitome(int row, int col) const { return mask_[index(row, col)] != 0; }
  int label(int row, int col) const { return labels_[index(row, col)]; }
  std::optional<Origin> assigned(int block) const;
  const ImagePlane& image() const { return image_; }
  const MatchLists& match_lists() const { return ml_; }

 private:
  struct Gain {
    double value = 0.0;  // sum over new blocks of (peak^2 - mse)
    int count = 0;
  };
  struct RankKey {
    double gain;
    int pos;
    bool operator<(const RankKey& o) const {
      return gain != o.gain ? gain > o.gain : pos < o.pos;
    }
  };
  struct NewBlock {
    int block;
    double mse;
    int pos;
  };

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * width_ + col;
  }
  Origin pos_origin(int pos) const { return rl_.origin(pos); }
  int mask_count(int row, int col, int h, int w) const;
  bool fully_in_mask(int pos) const;
  bool touches_chart(int pos, int chart) const;
  bool touches_any(int pos) const;
  std::vector<NewBlock> gather_new_blocks(int pos) const;
  Gain compute_gain(int pos) const;
  void refresh_dirty();
  void update_rank(int pos);
  void commit(int pos, int chart, Mode mode, Step& record);
  void rebuild_frontier(int chart);
  void rebuild_integral();

  const ImagePlane& image_;
  const MatchLists& ml_;
  const ReverseLists& rl_;
  int threads_;
  int width_;
  int height_;
  int block_size_;
  double peak_sq_;

  std::vector<unsigned char> mask_;
  std::vector<int> labels_;
  std::vector<int> integral_;  // (height+1) x (width+1) prefix sums of mask_
  std::vector<int> assigned_pos_;
  std::vector<double> assigned_mse_;
  int unassigned_;

  std::vector<int> rl_unassigned_;  // per position, unassigned blocks in RL
  std::vector<unsigned char> is_candidate_;
  std::vector<unsigned char> near_;  // touches some chart
  std::vector<Gain> gain_;
  std::vector<unsigned char> dirty_;
  std::vector<int> dirty_list_;
  std::vector<std::optional<RankKey>> ranked_;  // key currently in a set
  std::set<RankKey> far_ranking_;
  std::set<RankKey> near_ranking_;

  int current_chart_ = -1;
  int chart_count_ = 0;
  std::vector<int> frontier_;
  std::vector<unsigned char> in_frontier_;
};

/// Runs EpitomeBuilder to completion.
EpitomeResult grow_epitome(const ImagePlane& image, const MatchLists& ml,
                           const ReverseLists& rl, int threads = 1);

/// Dilates the epitome mask to the union of the codec blocks it touches.
Epitome pad_to_block_grid(const Epitome& epitome, int codec_block);

/// Copies each block's assigned patch from the epitome. Throws
/// IntegrityError for unassigned blocks or patches leaving the epitome.
ImagePlane reconstruct_from_epitome(const Epitome& epitome,
                                    const AssignationMap& assignation);

struct EpitomeOptions {
  int block_size = 8;
  int codec_block = 8;
  SimilarityOptions similarity;
};

/// Self-similarity search + chart growth + padding, with the pre-padding
/// epitome kept for inspection.
struct GeneratedEpitome {
  EpitomeResult grown;
  Epitome padded;
  double reconstruction_mse = 0.0;
};

GeneratedEpitome generate_epitome(const ImagePlane& image,
                                  const EpitomeOptions& options);

/// Same, reusing precomputed match lists (e.g. a cached sidecar).
GeneratedEpitome generate_epitome(const ImagePlane& image, const MatchLists& ml,
                                  const EpitomeOptions& options);

}  // namespace epitome
