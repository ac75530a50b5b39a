#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include <string>
#include <string_view>
#include <vector>

#include "epitome/errors.hpp"
#include "epitome/image.hpp"

namespace epitome {

enum class RestorationMethod { kLle, kLlm };

std::string_view to_string(RestorationMethod method);
/// Accepts "e-lle" / "e-llm" (case-insensitive). Throws InputError.
RestorationMethod parse_method(std::string_view text);

struct RestorationParams {
  int patch_size = 8;  // N
  int step = 3;        // s
  int neighbors = 20;  // K
  RestorationMethod method = RestorationMethod::kLle;
  double lambda = 1e-3;
  int threads = 1;

  /// Throws std::invalid_argument unless 1 <= step <= patch_size,
  /// neighbors >= 1 and lambda >= 0.
  void validate() const;
};

/// Co-located training pairs, one patch per column (row-major vectorized).
struct PatchDictionary {
  Eigen::MatrixXd base;         // M_y: upsampled base-layer patches
  Eigen::MatrixXd enhancement;  // M_x: enhancement-layer epitome patches
};

struct KnnResult {
  std::vector<Origin> origins;     // ascending distance, ties in scan order
  std::vector<double> distances;   // Euclidean
  bool degraded = false;           // fewer than k candidates existed
};

/// Every n x n patch origin lying fully inside `mask`, searched exactly on
/// `plane`. Candidates are visited by distance of their mean to the query
/// mean and pruned with n^2 (mean difference)^2 <= SSD; results match an
/// exhaustive raster scan, ties included.
class PatchSearchIndex {
 public:
  PatchSearchIndex(const ImagePlane& plane, const Mask& mask, int n);

  KnnResult search(const Eigen::Ref<const Eigen::VectorXd>& query, int k) const;
  const std::vector<Origin>& candidates() const { return candidates_; }
  int patch_size() const { return n_; }

 private:
  const ImagePlane& plane_;
  int n_;
  std::vector<Origin> candidates_;         // raster order
  std::vector<std::pair<double, int>> by_mean_;  // (patch mean, candidate index)
};

KnnResult knn_search(const Eigen::Ref<const Eigen::VectorXd>& query,
                     const ImagePlane& bl_up, const Mask& mask, int k, int n);

PatchDictionary build_dictionary(const ImagePlane& bl_up, const ImagePlane& el,
                                 const std::vector<Origin>& origins, int n);

namespace detail {
// Tikhonov weight: lambda * trace / dim, or lambda itself for a zero trace.
inline double ridge(double lambda, double trace, Eigen::Index dim) {
  return trace > 0.0 ? lambda * trace / static_cast<double>(dim) : lambda;
}
}  // namespace detail

/// Sum-to-one least-squares weights reconstructing `y` from the columns of
/// `base`: solves (D + ridge * I) w = 1 with D the local covariance around y,
/// then rescales w to sum to one.
template <typename Query, typename Base>
Eigen::VectorXd lle_weights(const Eigen::MatrixBase<Query>& y,
                            const Eigen::MatrixBase<Base>& base, double lambda) {
  if (y.cols() != 1 || y.rows() != base.rows()) {
    throw ShapeError("lle_weights: query and dictionary disagree");
  }
  if (lambda < 0.0) throw std::invalid_argument("lle_weights: negative lambda");
  const Eigen::Index k = base.cols();
  if (k == 0) throw ShapeError("lle_weights: empty dictionary");

  const Eigen::MatrixXd centered = base.colwise() - y.col(0);
  Eigen::MatrixXd cov = centered.transpose() * centered;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(k);
  Eigen::VectorXd w;
  if (lambda == 0.0) {
    const auto qr = cov.colPivHouseholderQr();
    if (qr.rank() < k) {
      throw NumericalError("lle_weights: singular local covariance, raise lambda");
    }
    w = qr.solve(ones);
  } else {
    cov.diagonal().array() += detail::ridge(lambda, cov.trace(), k);
    const auto ldlt = cov.ldlt();
    if (ldlt.info() != Eigen::Success) {
      throw NumericalError("lle_weights: factorization failed");
    }
    w = ldlt.solve(ones);
  }
  const double total = w.sum();
  if (!std::isfinite(total) || total == 0.0) {
    throw NumericalError("lle_weights: weights cannot be normalized");
  }
  return w / total;
}

/// Restored patch M_x w.
template <typename Weights, typename Enh>
Eigen::VectorXd lle_restore(const Eigen::MatrixBase<Weights>& w,
                            const Eigen::MatrixBase<Enh>& enhancement) {
  if (w.cols() != 1 || w.rows() != enhancement.cols()) {
    throw ShapeError("lle_restore: weight count differs from dictionary size");
  }
  return enhancement * w;
}

/// Least-squares linear map P from base to enhancement patches:
/// P (M_y M_y^T + ridge * I) = M_x M_y^T.
template <typename Base, typename Enh>
Eigen::MatrixXd llm_map(const Eigen::MatrixBase<Base>& base,
                        const Eigen::MatrixBase<Enh>& enhancement, double lambda) {
  if (base.cols() != enhancement.cols()) {
    throw ShapeError("llm_map: dictionaries have different sizes");
  }
  if (lambda < 0.0) throw std::invalid_argument("llm_map: negative lambda");
  const Eigen::Index dim = base.rows();
  Eigen::MatrixXd gram = base * base.transpose();
  const Eigen::MatrixXd cross = base * enhancement.transpose();  // (M_x M_y^T)^T
  if (lambda == 0.0) {
    const auto qr = gram.colPivHouseholderQr();
    if (qr.rank() < dim) {
      throw NumericalError("llm_map: rank-deficient Gram matrix, raise lambda");
    }
    return qr.solve(cross).transpose();
  }
  gram.diagonal().array() += detail::ridge(lambda, gram.trace(), dim);
  const auto ldlt = gram.ldlt();
  if (ldlt.info() != Eigen::Success) throw NumericalError("llm_map: factorization failed");
  return ldlt.solve(cross).transpose();
}

/// Restored patch P y.
template <typename Map, typename Query>
Eigen::VectorXd llm_restore(const Eigen::MatrixBase<Map>& p,
                            const Eigen::MatrixBase<Query>& y) {
  if (y.cols() != 1 || p.cols() != y.rows()) {
    throw ShapeError("llm_restore: map and patch disagree");
  }
  return p * y;
}

/// Per-patch record for the optional diagnostics output.
struct PatchDiagnostic {
  Origin origin;
  RestorationMethod method;
  std::vector<double> distances;
};

struct RestorationReport {
  int processed_patches = 0;
  int degraded_patches = 0;  // fewer than K neighbors were available
  int skipped_patches = 0;   // no neighbor at all, bl_up kept
  std::vector<PatchDiagnostic> diagnostics;  // filled when requested
};

/// Origins of the overlapping patch lattice: multiples of `step`, plus the
/// last valid origin when the lattice does not reach the border.
std::vector<int> lattice_positions(int extent, int patch_size, int step);

/// Restores the non-epitome part of the enhancement layer. Epitome pixels
/// are copied from `el_epitome`; the rest is the average of all overlapping
/// patch estimates, clamped to [0, peak], falling back to `bl_up` where no
/// estimate exists.
ImagePlane restore_el(const ImagePlane& bl_up, const ImagePlane& el_epitome,
                      const Mask& mask, const RestorationParams& params,
                      RestorationReport* report = nullptr,
                      bool collect_diagnostics = false);

}  // namespace epitome
