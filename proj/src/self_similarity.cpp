#include "epitome/self_similarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "epitome/parallel.hpp"

namespace epitome {

std::size_t MatchLists::total_matches() const {
  std::size_t n = 0;
  for (const auto& l : lists) n += l.size();
  return n;
}

ReverseLists::ReverseLists(int width, int height, int block_size)
    : block_size_(block_size),
      rows_(height - block_size + 1),
      cols_(width - block_size + 1) {
  if (block_size <= 0 || rows_ <= 0 || cols_ <= 0) {
    throw ShapeError("reverse lists: block larger than plane");
  }
  lists_.resize(static_cast<std::size_t>(rows_) * cols_);
}

std::vector<Origin> ReverseLists::keys() const {
  std::vector<Origin> out;
  for (int k = 0; k < position_count(); ++k) {
    if (!lists_[k].empty()) out.push_back(origin(k));
  }
  return out;
}

double region_sse(const ImagePlane& image, Origin a, Origin b, int block_size,
                  double limit) {
  const auto& s = image.samples();
  double sse = 0.0;
  for (int r = 0; r < block_size; ++r) {
    const double* pa = &s(a.row + r, a.col);
    const double* pb = &s(b.row + r, b.col);
    for (int c = 0; c < block_size; ++c) {
      const double d = pa[c] - pb[c];
      sse += d * d;
    }
    if (sse > limit) return sse;
  }
  return sse;
}

BlockClustering cluster_blocks(const BlockGrid& grid, const ImagePlane& image,
                               double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("cluster_blocks: negative threshold");
  const int n = grid.block_size();
  const double dim = static_cast<double>(n) * n;

  BlockClustering out;
  out.threshold = threshold;
  out.assignment.assign(static_cast<std::size_t>(grid.count()), -1);

  std::vector<Eigen::VectorXd> blocks;
  blocks.reserve(static_cast<std::size_t>(grid.count()));
  for (int i = 0; i < grid.count(); ++i) {
    blocks.push_back(extract_patch(image, grid.origin(i), n));
  }

  std::vector<Eigen::VectorXd> sums;
  // Upper bound on the RMS distance of each member to its cluster centroid.
  std::vector<std::vector<double>> bounds;
  std::vector<double> trial;

  auto centroid_mse = [&](const Eigen::VectorXd& b, const Eigen::VectorXd& sum,
                          double count) {
    return (b - sum / count).squaredNorm() / dim;
  };

  const double rms_limit = std::sqrt(threshold);
  for (int b = 0; b < grid.count(); ++b) {
    const Eigen::VectorXd& block = blocks[b];
    int joined = -1;
    for (int c = 0; c < static_cast<int>(sums.size()) && joined < 0; ++c) {
      const double count = static_cast<double>(out.members[c].size());
      const double d = centroid_mse(block, sums[c], count);
      if (d > threshold) continue;

      const Eigen::VectorXd new_sum = sums[c] + block;
      const double shift = std::sqrt(d) / (count + 1.0);
      trial.assign(bounds[c].begin(), bounds[c].end());
      bool ok = true;
      for (std::size_t m = 0; m < trial.size() && ok; ++m) {
        trial[m] += shift;
        if (trial[m] > rms_limit) {
          const double exact =
              centroid_mse(blocks[out.members[c][m]], new_sum, count + 1.0);
          if (exact > threshold) ok = false;
          trial[m] = std::sqrt(exact);
        }
      }
      if (!ok) continue;
      const double own = centroid_mse(block, new_sum, count + 1.0);
      if (own > threshold) continue;
      trial.push_back(std::sqrt(own));
      bounds[c] = trial;
      sums[c] = new_sum;
      out.members[c].push_back(b);
      joined = c;
    }
    if (joined < 0) {
      joined = static_cast<int>(sums.size());
      sums.push_back(block);
      bounds.push_back({0.0});
      out.members.push_back({b});
    }
    out.assignment[b] = joined;
  }

  for (std::size_t c = 0; c < sums.size(); ++c) {
    const double count = static_cast<double>(out.members[c].size());
    out.centroids.push_back(sums[c] / count);
    int best = out.members[c].front();
    double best_d = std::numeric_limits<double>::infinity();
    for (int m : out.members[c]) {
      const double d = (blocks[m] - out.centroids.back()).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = m;
      }
    }
    out.representatives.push_back(best);
  }
  return out;
}

std::vector<PatchMatch> match_patches_for_cluster(Origin block, int block_size,
                                                  const ImagePlane& image,
                                                  double threshold,
                                                  int search_step) {
  if (threshold < 0.0) throw std::invalid_argument("match: negative threshold");
  if (search_step < 1) throw std::invalid_argument("match: search_step must be >= 1");
  const double dim = static_cast<double>(block_size) * block_size;
  const double limit = threshold * dim;
  const int last_row = image.height() - block_size;
  const int last_col = image.width() - block_size;

  std::vector<PatchMatch> out;
  bool has_self = false;
  for (int r = 0; r <= last_row; r += search_step) {
    for (int c = 0; c <= last_col; c += search_step) {
      const Origin o{r, c};
      const double sse = region_sse(image, block, o, block_size, limit);
      const double m = sse / dim;
      if (m <= threshold) {
        out.push_back({o, m});
        has_self = has_self || o == block;
      }
    }
  }
  if (!has_self) {
    const PatchMatch self{block, 0.0};
    out.insert(std::lower_bound(out.begin(), out.end(), self,
                                [](const PatchMatch& a, const PatchMatch& b) {
                                  return a.origin < b.origin;
                                }),
               self);
  }
  return out;
}

MatchLists find_self_similarities(const ImagePlane& image, const BlockGrid& grid,
                                  const SimilarityOptions& options) {
  if (grid.width() != image.width() || grid.height() != image.height()) {
    throw ShapeError("self-similarity: grid does not match image");
  }
  const int n = grid.block_size();
  const double eps_m = options.matching_threshold;
  const BlockClustering clusters =
      cluster_blocks(grid, image, options.assignation_threshold());

  std::vector<std::vector<PatchMatch>> cluster_lists(
      static_cast<std::size_t>(clusters.cluster_count()));
  parallel_for(cluster_lists.size(), options.threads, [&](std::size_t c) {
    cluster_lists[c] = match_patches_for_cluster(
        grid.origin(clusters.representatives[c]), n, image, eps_m,
        options.search_step);
  });

  MatchLists ml;
  ml.width = image.width();
  ml.height = image.height();
  ml.block_size = n;
  ml.threshold = eps_m;
  ml.lists.resize(static_cast<std::size_t>(grid.count()));

  const double dim = static_cast<double>(n) * n;
  parallel_for(ml.lists.size(), options.threads, [&](std::size_t b) {
    const int cluster = clusters.assignment[b];
    const Origin self = grid.origin(static_cast<int>(b));
    const Origin rep = grid.origin(clusters.representatives[cluster]);
    const auto& candidates = cluster_lists[static_cast<std::size_t>(cluster)];
    auto& list = ml.lists[b];
    const bool identical = rep == self || region_sse(image, self, rep, n, 0.0) == 0.0;
    bool has_self = false;
    list.reserve(candidates.size());
    for (const PatchMatch& cand : candidates) {
      double m = cand.mse;
      if (!identical) {
        m = region_sse(image, self, cand.origin, n, eps_m * dim) / dim;
        if (m > eps_m) continue;
      }
      list.push_back({cand.origin, m});
      has_self = has_self || cand.origin == self;
    }
    if (!has_self) {
      const PatchMatch entry{self, 0.0};
      list.insert(std::lower_bound(list.begin(), list.end(), entry,
                                   [](const PatchMatch& a, const PatchMatch& x) {
                                     return a.origin < x.origin;
                                   }),
                  entry);
    }
  });
  return ml;
}

ReverseLists build_reverse_lists(const MatchLists& ml) {
  ReverseLists rl(ml.width, ml.height, ml.block_size);
  for (int b = 0; b < ml.block_count(); ++b) {
    for (const PatchMatch& m : ml.lists[static_cast<std::size_t>(b)]) {
      if (!rl.valid(m.origin)) throw RangeError("reverse lists: patch outside plane");
      auto& entries = rl.mutable_at(rl.key(m.origin));
      if (entries.empty() || entries.back().block != b) {
        entries.push_back({b, m.mse});
      }
    }
  }
  return rl;
}

}  // namespace epitome
