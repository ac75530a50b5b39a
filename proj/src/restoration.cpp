#include "epitome/restoration.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <queue>

#include "epitome/parallel.hpp"

namespace epitome {

std::string_view to_string(RestorationMethod method) {
  return method == RestorationMethod::kLle ? "e-lle" : "e-llm";
}

RestorationMethod parse_method(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "e-lle" || lower == "lle") return RestorationMethod::kLle;
  if (lower == "e-llm" || lower == "llm") return RestorationMethod::kLlm;
  throw InputError("unknown restoration method '" + std::string(text) + "'");
}

void RestorationParams::validate() const {
  if (patch_size < 1 || step < 1 || step > patch_size) {
    throw std::invalid_argument("restoration: need 1 <= step <= patch_size");
  }
  if (neighbors < 1) throw std::invalid_argument("restoration: neighbors must be >= 1");
  if (!(lambda >= 0.0)) throw std::invalid_argument("restoration: lambda must be >= 0");
}

PatchSearchIndex::PatchSearchIndex(const ImagePlane& plane, const Mask& mask, int n)
    : plane_(plane), n_(n) {
  if (mask.rows() != plane.height() || mask.cols() != plane.width()) {
    throw ShapeError("knn: mask does not match plane");
  }
  if (n < 1) throw std::invalid_argument("knn: patch size must be >= 1");
  for (int r = 0; r + n <= plane.height(); ++r) {
    for (int c = 0; c + n <= plane.width(); ++c) {
      if (mask.block(r, c, n, n).all()) candidates_.push_back({r, c});
    }
  }
  by_mean_.reserve(candidates_.size());
  for (std::size_t i = 0; i < candidates_.size(); ++i) {
    const Origin o = candidates_[i];
    by_mean_.emplace_back(plane.samples().block(o.row, o.col, n, n).mean(),
                          static_cast<int>(i));
  }
  std::sort(by_mean_.begin(), by_mean_.end());
}

KnnResult PatchSearchIndex::search(const Eigen::Ref<const Eigen::VectorXd>& query,
                                   int k) const {
  if (query.size() != static_cast<Eigen::Index>(n_) * n_) {
    throw ShapeError("knn: query length is not n*n");
  }
  if (k < 1) throw std::invalid_argument("knn: k must be >= 1");
  using Entry = std::pair<double, int>;  // (sse, scan index); ties go to lower index
  std::priority_queue<Entry> heap;       // worst on top
  const auto& s = plane_.samples();
  const auto kk = static_cast<std::size_t>(k);
  const double area = static_cast<double>(n_) * n_;
  const double qmean = query.mean();

  auto visit = [&](int i) {
    const Origin o = candidates_[static_cast<std::size_t>(i)];
    const bool full = heap.size() == kk;
    const double limit = full ? heap.top().first : std::numeric_limits<double>::infinity();
    double sse = 0.0;
    for (int r = 0; r < n_ && sse <= limit; ++r) {
      const double* row = &s(o.row + r, o.col);
      const double* q = query.data() + static_cast<std::ptrdiff_t>(r) * n_;
      for (int c = 0; c < n_; ++c) {
        const double d = row[c] - q[c];
        sse += d * d;
      }
    }
    const Entry e{sse, i};
    if (full && !(e < heap.top())) return;
    if (full) heap.pop();
    heap.push(e);
  };
  // Lower bound on the SSD of a candidate whose mean is m.
  auto bound = [&](double m) { return area * (m - qmean) * (m - qmean); };
  auto pruned = [&](double m) {
    return heap.size() == kk && bound(m) > heap.top().first;
  };

  const auto mid = std::lower_bound(by_mean_.begin(), by_mean_.end(),
                                    std::pair{qmean, std::numeric_limits<int>::min()});
  auto up = mid;
  auto down = std::make_reverse_iterator(mid);
  bool up_open = up != by_mean_.end();
  bool down_open = down != by_mean_.rend();
  while (up_open || down_open) {
    const bool take_up =
        up_open && (!down_open || up->first - qmean <= qmean - down->first);
    if (take_up) {
      if (pruned(up->first)) {
        up_open = false;
        continue;
      }
      visit(up->second);
      up_open = ++up != by_mean_.end();
    } else {
      if (pruned(down->first)) {
        down_open = false;
        continue;
      }
      visit(down->second);
      down_open = ++down != by_mean_.rend();
    }
  }

  KnnResult result;
  result.degraded = heap.size() < kk;
  std::vector<Entry> sorted;
  sorted.reserve(heap.size());
  while (!heap.empty()) {
    sorted.push_back(heap.top());
    heap.pop();
  }
  std::reverse(sorted.begin(), sorted.end());
  for (const auto& [sse, i] : sorted) {
    result.origins.push_back(candidates_[static_cast<std::size_t>(i)]);
    result.distances.push_back(std::sqrt(sse));
  }
  return result;
}

KnnResult knn_search(const Eigen::Ref<const Eigen::VectorXd>& query,
                     const ImagePlane& bl_up, const Mask& mask, int k, int n) {
  return PatchSearchIndex(bl_up, mask, n).search(query, k);
}

PatchDictionary build_dictionary(const ImagePlane& bl_up, const ImagePlane& el,
                                 const std::vector<Origin>& origins, int n) {
  if (!bl_up.same_shape(el)) throw ShapeError("dictionary: planes differ in size");
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * n;
  PatchDictionary dict{Eigen::MatrixXd(dim, static_cast<Eigen::Index>(origins.size())),
                       Eigen::MatrixXd(dim, static_cast<Eigen::Index>(origins.size()))};
  for (std::size_t i = 0; i < origins.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    dict.base.col(col) = extract_patch(bl_up, origins[i], n);
    dict.enhancement.col(col) = extract_patch(el, origins[i], n);
  }
  return dict;
}

std::vector<int> lattice_positions(int extent, int patch_size, int step) {
  std::vector<int> out;
  const int last = extent - patch_size;
  if (last < 0) return out;
  for (int p = 0; p <= last; p += step) out.push_back(p);
  if (out.back() != last) out.push_back(last);
  return out;
}

ImagePlane restore_el(const ImagePlane& bl_up, const ImagePlane& el_epitome,
                      const Mask& mask, const RestorationParams& params,
                      RestorationReport* report, bool collect_diagnostics) {
  params.validate();
  if (!bl_up.same_shape(el_epitome) || mask.rows() != bl_up.height() ||
      mask.cols() != bl_up.width()) {
    throw ShapeError("restore_el: planes and mask must share dimensions");
  }
  const int n = params.patch_size;
  const PatchSearchIndex index(bl_up, mask, n);

  std::vector<Origin> work;
  for (int r : lattice_positions(bl_up.height(), n, params.step)) {
    for (int c : lattice_positions(bl_up.width(), n, params.step)) {
      if (!mask.block(r, c, n, n).all()) work.push_back({r, c});
    }
  }

  struct Estimate {
    std::optional<Eigen::VectorXd> patch;
    KnnResult knn;
  };
  std::vector<Estimate> estimates(work.size());
  parallel_for(work.size(), params.threads, [&](std::size_t i) {
    const Eigen::VectorXd y = extract_patch(bl_up, work[i], n);
    Estimate& est = estimates[i];
    est.knn = index.search(y, params.neighbors);
    if (est.knn.origins.empty()) return;
    const PatchDictionary dict = build_dictionary(bl_up, el_epitome, est.knn.origins, n);
    if (params.method == RestorationMethod::kLle) {
      est.patch = lle_restore(lle_weights(y, dict.base, params.lambda), dict.enhancement);
    } else {
      est.patch = llm_restore(llm_map(dict.base, dict.enhancement, params.lambda), y);
    }
  });

  // Sequential reduction in lattice order keeps the sum independent of the
  // worker schedule.
  ImagePlane::Samples sum = ImagePlane::Samples::Zero(bl_up.height(), bl_up.width());
  PlaneArray<int> count = PlaneArray<int>::Zero(bl_up.height(), bl_up.width());
  RestorationReport local;
  for (std::size_t i = 0; i < work.size(); ++i) {
    const Estimate& est = estimates[i];
    if (est.knn.degraded) ++local.degraded_patches;
    if (collect_diagnostics) {
      local.diagnostics.push_back({work[i], params.method, est.knn.distances});
    }
    if (!est.patch) {
      ++local.skipped_patches;
      continue;
    }
    ++local.processed_patches;
    const Origin o = work[i];
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        if (mask(o.row + r, o.col + c)) continue;
        sum(o.row + r, o.col + c) += (*est.patch)(static_cast<Eigen::Index>(r) * n + c);
        ++count(o.row + r, o.col + c);
      }
    }
  }

  ImagePlane out = el_epitome;
  const double peak = bl_up.peak();
  for (int r = 0; r < out.height(); ++r) {
    for (int c = 0; c < out.width(); ++c) {
      if (mask(r, c)) continue;
      out(r, c) = count(r, c) > 0
                      ? std::clamp(sum(r, c) / count(r, c), 0.0, peak)
                      : bl_up(r, c);
    }
  }
  if (report) *report = std::move(local);
  return out;
}

}  // namespace epitome
