#include "epitome/epitome.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "epitome/parallel.hpp"

namespace epitome {

bool AssignationMap::complete() const {
  return std::all_of(patches.begin(), patches.end(),
                     [](const auto& p) { return p.has_value(); });
}

Epitome make_epitome(const ImagePlane& source, const Mask& mask) {
  if (mask.rows() != source.height() || mask.cols() != source.width()) {
    throw ShapeError("epitome: mask does not match source");
  }
  Epitome e;
  e.source = source;
  e.labels = LabelPlane::Constant(mask.rows(), mask.cols(), -1);
  const int h = source.height();
  const int w = source.width();
  std::deque<Origin> queue;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!mask(r, c) || e.labels(r, c) >= 0) continue;
      const int id = static_cast<int>(e.charts.size());
      EpitomeChart chart{{{r, c}, 1, 1}, 0};
      int top = r, bottom = r, left = c, right = c;
      e.labels(r, c) = id;
      queue.push_back({r, c});
      while (!queue.empty()) {
        const Origin p = queue.front();
        queue.pop_front();
        ++chart.area;
        top = std::min(top, p.row);
        bottom = std::max(bottom, p.row);
        left = std::min(left, p.col);
        right = std::max(right, p.col);
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = p.row + dr;
            const int nc = p.col + dc;
            if (nr < 0 || nc < 0 || nr >= h || nc >= w) continue;
            if (!mask(nr, nc) || e.labels(nr, nc) >= 0) continue;
            e.labels(nr, nc) = id;
            queue.push_back({nr, nc});
          }
        }
      }
      chart.bounds = {{top, left}, bottom - top + 1, right - left + 1};
      e.charts.push_back(chart);
    }
  }
  return e;
}

EpitomeBuilder::EpitomeBuilder(const ImagePlane& image, const MatchLists& ml,
                               const ReverseLists& rl, int threads)
    : image_(image),
      ml_(ml),
      rl_(rl),
      threads_(threads),
      width_(image.width()),
      height_(image.height()),
      block_size_(ml.block_size),
      peak_sq_(image.peak() * image.peak()) {
  if (ml.width != width_ || ml.height != height_ ||
      rl.block_size() != block_size_ ||
      rl.position_cols() != width_ - block_size_ + 1 ||
      rl.position_rows() != height_ - block_size_ + 1) {
    throw ShapeError("epitome builder: match lists do not fit image");
  }
  const BlockGrid grid(width_, height_, block_size_);
  if (grid.count() != ml.block_count()) {
    throw ShapeError("epitome builder: match lists do not cover the block grid");
  }
  for (const auto& list : ml.lists) {
    if (list.empty()) throw IntegrityError("epitome builder: empty match list");
  }

  const std::size_t pixels = static_cast<std::size_t>(width_) * height_;
  mask_.assign(pixels, 0);
  labels_.assign(pixels, -1);
  integral_.assign(static_cast<std::size_t>(width_ + 1) * (height_ + 1), 0);
  assigned_pos_.assign(static_cast<std::size_t>(ml.block_count()), -1);
  assigned_mse_.assign(static_cast<std::size_t>(ml.block_count()), 0.0);
  unassigned_ = ml.block_count();

  const auto positions = static_cast<std::size_t>(rl.position_count());
  rl_unassigned_.resize(positions);
  is_candidate_.resize(positions);
  near_.assign(positions, 0);
  gain_.assign(positions, Gain{});
  dirty_.assign(positions, 0);
  ranked_.assign(positions, std::nullopt);
  in_frontier_.assign(positions, 0);
  for (std::size_t p = 0; p < positions; ++p) {
    rl_unassigned_[p] = static_cast<int>(rl.at(static_cast<int>(p)).size());
    is_candidate_[p] = rl_unassigned_[p] > 0;
    if (is_candidate_[p]) {
      dirty_[p] = 1;
      dirty_list_.push_back(static_cast<int>(p));
    }
  }
}

std::optional<Origin> EpitomeBuilder::assigned(int block) const {
  const int pos = assigned_pos_.at(static_cast<std::size_t>(block));
  if (pos < 0) return std::nullopt;
  return pos_origin(pos);
}

double EpitomeBuilder::current_score() const {
  double sum = 0.0;
  for (std::size_t b = 0; b < assigned_pos_.size(); ++b) {
    sum += assigned_pos_[b] >= 0 ? assigned_mse_[b] : peak_sq_;
  }
  return sum / static_cast<double>(assigned_pos_.size());
}

int EpitomeBuilder::mask_count(int row, int col, int h, int w) const {
  const std::size_t stride = static_cast<std::size_t>(width_) + 1;
  const int r0 = std::max(row, 0);
  const int c0 = std::max(col, 0);
  const int r1 = std::min(row + h, height_);
  const int c1 = std::min(col + w, width_);
  if (r1 <= r0 || c1 <= c0) return 0;
  return integral_[r1 * stride + c1] - integral_[r0 * stride + c1] -
         integral_[r1 * stride + c0] + integral_[r0 * stride + c0];
}

void EpitomeBuilder::rebuild_integral() {
  const std::size_t stride = static_cast<std::size_t>(width_) + 1;
  for (int r = 0; r < height_; ++r) {
    int row_sum = 0;
    for (int c = 0; c < width_; ++c) {
      row_sum += mask_[index(r, c)];
      integral_[(r + 1) * stride + c + 1] = integral_[r * stride + c + 1] + row_sum;
    }
  }
}

bool EpitomeBuilder::fully_in_mask(int pos) const {
  const Origin o = pos_origin(pos);
  return mask_count(o.row, o.col, block_size_, block_size_) ==
         block_size_ * block_size_;
}

bool EpitomeBuilder::touches_any(int pos) const {
  const Origin o = pos_origin(pos);
  return mask_count(o.row - 1, o.col - 1, block_size_ + 2, block_size_ + 2) > 0;
}

bool EpitomeBuilder::touches_chart(int pos, int chart) const {
  const Origin o = pos_origin(pos);
  const int r0 = std::max(o.row - 1, 0);
  const int c0 = std::max(o.col - 1, 0);
  const int r1 = std::min(o.row + block_size_ + 1, height_);
  const int c1 = std::min(o.col + block_size_ + 1, width_);
  for (int r = r0; r < r1; ++r) {
    for (int c = c0; c < c1; ++c) {
      if (labels_[index(r, c)] == chart) return true;
    }
  }
  return false;
}

std::vector<Origin> EpitomeBuilder::enumerate_candidates(std::optional<int> chart) const {
  std::vector<Origin> out;
  for (int pos = 0; pos < rl_.position_count(); ++pos) {
    if (!is_candidate_[static_cast<std::size_t>(pos)] || fully_in_mask(pos)) continue;
    const bool ok = chart ? touches_chart(pos, *chart) : !touches_any(pos);
    if (ok) out.push_back(pos_origin(pos));
  }
  return out;
}

// Blocks that become reconstructable if the patch at `pos` joins the
// epitome: unassigned members of RL(q) for every patch q that would then fit
// entirely inside the epitome. Such q necessarily overlap the candidate,
// because every unassigned block has no match fully inside the current mask.
std::vector<EpitomeBuilder::NewBlock> EpitomeBuilder::gather_new_blocks(int pos) const {
  std::vector<NewBlock> out;
  if (fully_in_mask(pos)) return out;
  const int n = block_size_;
  const Origin o = pos_origin(pos);
  const int q_r0 = std::max(o.row - n + 1, 0);
  const int q_r1 = std::min(o.row + n - 1, rl_.position_rows() - 1);
  const int q_c0 = std::max(o.col - n + 1, 0);
  const int q_c1 = std::min(o.col + n - 1, rl_.position_cols() - 1);
  for (int qr = q_r0; qr <= q_r1; ++qr) {
    for (int qc = q_c0; qc <= q_c1; ++qc) {
      const int q = rl_.key({qr, qc});
      if (rl_unassigned_[static_cast<std::size_t>(q)] == 0) continue;
      const int ir0 = std::max(qr, o.row);
      const int ic0 = std::max(qc, o.col);
      const int ih = std::min(qr, o.row) + n - ir0;
      const int iw = std::min(qc, o.col) + n - ic0;
      const int covered =
          mask_count(qr, qc, n, n) + ih * iw - mask_count(ir0, ic0, ih, iw);
      if (covered != n * n) continue;
      for (const ReverseEntry& e : rl_.at(q)) {
        if (assigned_pos_[static_cast<std::size_t>(e.block)] < 0) {
          out.push_back({e.block, e.mse, q});
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const NewBlock& a, const NewBlock& b) {
    if (a.block != b.block) return a.block < b.block;
    if (a.mse != b.mse) return a.mse < b.mse;
    return a.pos < b.pos;
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const NewBlock& a, const NewBlock& b) {
                          return a.block == b.block;
                        }),
            out.end());
  return out;
}

EpitomeBuilder::Gain EpitomeBuilder::compute_gain(int pos) const {
  Gain g;
  for (const NewBlock& nb : gather_new_blocks(pos)) {
    g.value += peak_sq_ - nb.mse;
    ++g.count;
  }
  return g;
}

int EpitomeBuilder::reconstructable_count(Origin candidate) const {
  if (!rl_.valid(candidate)) throw RangeError("candidate outside plane");
  return compute_gain(rl_.key(candidate)).count;
}

double EpitomeBuilder::score_candidate(Origin candidate) const {
  if (!rl_.valid(candidate)) throw RangeError("candidate outside plane");
  const Gain g = compute_gain(rl_.key(candidate));
  double sum = 0.0;
  for (std::size_t b = 0; b < assigned_pos_.size(); ++b) {
    sum += assigned_pos_[b] >= 0 ? assigned_mse_[b] : peak_sq_;
  }
  return (sum - g.value) / static_cast<double>(assigned_pos_.size());
}

void EpitomeBuilder::update_rank(int pos) {
  const auto p = static_cast<std::size_t>(pos);
  if (ranked_[p]) {
    far_ranking_.erase(*ranked_[p]);
    near_ranking_.erase(*ranked_[p]);
    ranked_[p].reset();
  }
  if (gain_[p].count == 0) return;
  const RankKey key{gain_[p].value, pos};
  (near_[p] ? near_ranking_ : far_ranking_).insert(key);
  ranked_[p] = key;
}

void EpitomeBuilder::refresh_dirty() {
  if (dirty_list_.empty()) return;
  parallel_for(dirty_list_.size(), threads_, [&](std::size_t i) {
    const int pos = dirty_list_[i];
    gain_[static_cast<std::size_t>(pos)] = compute_gain(pos);
  });
  for (int pos : dirty_list_) {
    dirty_[static_cast<std::size_t>(pos)] = 0;
    update_rank(pos);
  }
  dirty_list_.clear();
}

void EpitomeBuilder::rebuild_frontier(int chart) {
  for (int pos : frontier_) in_frontier_[static_cast<std::size_t>(pos)] = 0;
  frontier_.clear();
  for (int pos = 0; pos < rl_.position_count(); ++pos) {
    if (is_candidate_[static_cast<std::size_t>(pos)] && touches_chart(pos, chart)) {
      in_frontier_[static_cast<std::size_t>(pos)] = 1;
      frontier_.push_back(pos);
    }
  }
}

void EpitomeBuilder::commit(int pos, int chart, Mode mode, Step& record) {
  const int n = block_size_;
  const Origin o = pos_origin(pos);
  const std::vector<NewBlock> fresh = gather_new_blocks(pos);

  std::vector<Origin> added;
  for (int r = o.row; r < o.row + n; ++r) {
    for (int c = o.col; c < o.col + n; ++c) {
      const std::size_t i = index(r, c);
      if (mask_[i]) continue;
      mask_[i] = 1;
      labels_[i] = chart;
      added.push_back({r, c});
    }
  }
  rebuild_integral();

  const int rows = rl_.position_rows();
  const int cols = rl_.position_cols();
  int r_min = height_, r_max = -1, c_min = width_, c_max = -1;
  for (const Origin& px : added) {
    r_min = std::min(r_min, px.row);
    r_max = std::max(r_max, px.row);
    c_min = std::min(c_min, px.col);
    c_max = std::max(c_max, px.col);
    // positions whose 8-dilated patch contains px
    for (int pr = std::max(px.row - n, 0); pr <= std::min(px.row + 1, rows - 1); ++pr) {
      for (int pc = std::max(px.col - n, 0); pc <= std::min(px.col + 1, cols - 1); ++pc) {
        const auto p = static_cast<std::size_t>(rl_.key({pr, pc}));
        near_[p] = 1;
        if (is_candidate_[p] && !in_frontier_[p]) {
          in_frontier_[p] = 1;
          frontier_.push_back(static_cast<int>(p));
        }
      }
    }
  }

  auto mark_dirty = [&](int p) {
    if (is_candidate_[static_cast<std::size_t>(p)] && !dirty_[static_cast<std::size_t>(p)]) {
      dirty_[static_cast<std::size_t>(p)] = 1;
      dirty_list_.push_back(p);
    }
  };
  // Mask change: fits() of every patch overlapping the added pixels changed,
  // which affects every candidate overlapping such a patch. The box also
  // covers every position whose near_ flag flipped.
  for (int pr = std::max(r_min - 2 * n, 0); pr <= std::min(r_max + n + 1, rows - 1); ++pr) {
    for (int pc = std::max(c_min - 2 * n, 0); pc <= std::min(c_max + n + 1, cols - 1); ++pc) {
      mark_dirty(rl_.key({pr, pc}));
    }
  }

  // Assignment change: candidates overlapping any patch whose reverse list
  // lost an unassigned block.
  std::vector<int> touched;
  for (const NewBlock& nb : fresh) {
    const auto b = static_cast<std::size_t>(nb.block);
    assigned_pos_[b] = nb.pos;
    assigned_mse_[b] = nb.mse;
    --unassigned_;
    for (const PatchMatch& m : ml_.lists[b]) {
      const int q = rl_.key(m.origin);
      --rl_unassigned_[static_cast<std::size_t>(q)];
      touched.push_back(q);
    }
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  const long window = static_cast<long>(2 * n - 1) * (2 * n - 1);
  if (static_cast<long>(touched.size()) * window < static_cast<long>(rows) * cols) {
    for (int q : touched) {
      const Origin qo = pos_origin(q);
      for (int pr = std::max(qo.row - n + 1, 0); pr <= std::min(qo.row + n - 1, rows - 1); ++pr) {
        for (int pc = std::max(qo.col - n + 1, 0); pc <= std::min(qo.col + n - 1, cols - 1); ++pc) {
          mark_dirty(rl_.key({pr, pc}));
        }
      }
    }
  } else {
    // Box-filter the touched positions with a prefix sum.
    const std::size_t stride = static_cast<std::size_t>(cols) + 1;
    std::vector<int> sums(stride * (rows + 1), 0);
    std::vector<unsigned char> marks(static_cast<std::size_t>(rows) * cols, 0);
    for (int q : touched) marks[static_cast<std::size_t>(q)] = 1;
    for (int r = 0; r < rows; ++r) {
      int acc = 0;
      for (int c = 0; c < cols; ++c) {
        acc += marks[static_cast<std::size_t>(r) * cols + c];
        sums[(r + 1) * stride + c + 1] = sums[r * stride + c + 1] + acc;
      }
    }
    for (int r = 0; r < rows; ++r) {
      const int r0 = std::max(r - n + 1, 0);
      const int r1 = std::min(r + n, rows);
      for (int c = 0; c < cols; ++c) {
        const int c0 = std::max(c - n + 1, 0);
        const int c1 = std::min(c + n, cols);
        const int count = sums[r1 * stride + c1] - sums[r0 * stride + c1] -
                          sums[r1 * stride + c0] + sums[r0 * stride + c0];
        if (count > 0) mark_dirty(rl_.key({r, c}));
      }
    }
  }

  record.origin = o;
  record.chart = chart;
  record.mode = mode;
  record.newly_assigned = static_cast<int>(fresh.size());
  record.score = current_score();
}

EpitomeBuilder::Step EpitomeBuilder::step() {
  if (done()) throw IntegrityError("epitome builder: already complete");
  refresh_dirty();
  Step record;

  if (current_chart_ >= 0) {
    std::optional<RankKey> best;
    std::size_t keep = 0;
    for (int pos : frontier_) {
      const auto p = static_cast<std::size_t>(pos);
      if (fully_in_mask(pos)) {
        in_frontier_[p] = 0;
        continue;
      }
      frontier_[keep++] = pos;
      if (gain_[p].count == 0) continue;
      const RankKey key{gain_[p].value, pos};
      if (!best || key < *best) best = key;
    }
    frontier_.resize(keep);
    if (best) {
      commit(best->pos, current_chart_, Mode::kExtend, record);
      return record;
    }
    current_chart_ = -1;
  }

  if (!far_ranking_.empty()) {
    const int pos = far_ranking_.begin()->pos;
    current_chart_ = chart_count_++;
    for (int f : frontier_) in_frontier_[static_cast<std::size_t>(f)] = 0;
    frontier_.clear();
    commit(pos, current_chart_, Mode::kInitialize, record);
    return record;
  }

  if (!near_ranking_.empty()) {
    // Every remaining candidate touches a chart: extend the lowest-numbered
    // chart adjacent to the best of them.
    const int pos = near_ranking_.begin()->pos;
    const Origin o = pos_origin(pos);
    int chart = std::numeric_limits<int>::max();
    for (int r = std::max(o.row - 1, 0); r < std::min(o.row + block_size_ + 1, height_); ++r) {
      for (int c = std::max(o.col - 1, 0); c < std::min(o.col + block_size_ + 1, width_); ++c) {
        const int l = labels_[index(r, c)];
        if (l >= 0) chart = std::min(chart, l);
      }
    }
    current_chart_ = chart;
    rebuild_frontier(chart);
    commit(pos, chart, Mode::kFallback, record);
    return record;
  }
  throw IntegrityError("epitome builder: no candidate can reconstruct the remaining blocks");
}

EpitomeResult EpitomeBuilder::finish() {
  while (!done()) step();
  Mask mask(height_, width_);
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) mask(r, c) = mask_[index(r, c)] != 0;
  }
  EpitomeResult result{make_epitome(image_, mask), {}};
  result.assignation.block_size = block_size_;
  for (int pos : assigned_pos_) {
    result.assignation.patches.emplace_back(pos_origin(pos));
  }
  return result;
}

EpitomeResult grow_epitome(const ImagePlane& image, const MatchLists& ml,
                           const ReverseLists& rl, int threads) {
  EpitomeBuilder builder(image, ml, rl, threads);
  return builder.finish();
}

Epitome pad_to_block_grid(const Epitome& epitome, int codec_block) {
  if (codec_block <= 0 || epitome.width() % codec_block != 0 ||
      epitome.height() % codec_block != 0) {
    throw ShapeError("pad: codec block must divide the image dimensions");
  }
  const Mask mask = epitome.mask();
  Mask padded = Mask::Constant(mask.rows(), mask.cols(), false);
  for (int r = 0; r < epitome.height(); r += codec_block) {
    for (int c = 0; c < epitome.width(); c += codec_block) {
      if (mask.block(r, c, codec_block, codec_block).any()) {
        padded.block(r, c, codec_block, codec_block).setConstant(true);
      }
    }
  }
  return make_epitome(epitome.source, padded);
}

ImagePlane reconstruct_from_epitome(const Epitome& epitome,
                                    const AssignationMap& assignation) {
  const BlockGrid grid(epitome.width(), epitome.height(), assignation.block_size);
  if (static_cast<int>(assignation.patches.size()) != grid.count()) {
    throw IntegrityError("reconstruct: assignation map does not cover the grid");
  }
  const int n = assignation.block_size;
  ImagePlane out(epitome.width(), epitome.height(), 0.0, epitome.source.peak());
  for (int b = 0; b < grid.count(); ++b) {
    const auto& patch = assignation.patches[static_cast<std::size_t>(b)];
    if (!patch) throw IntegrityError("reconstruct: unassigned block");
    const PixelRegion src = square_region(*patch, n);
    if (src.top() < 0 || src.left() < 0 || src.bottom() > epitome.height() ||
        src.right() > epitome.width()) {
      throw IntegrityError("reconstruct: assigned patch outside image");
    }
    if ((epitome.labels.block(src.top(), src.left(), n, n) < 0).any()) {
      throw IntegrityError("reconstruct: assigned patch leaves the epitome");
    }
    out.block(grid.region(b)) = epitome.source.block(src);
  }
  return out;
}

GeneratedEpitome generate_epitome(const ImagePlane& image,
                                  const EpitomeOptions& options) {
  const BlockGrid grid(image.width(), image.height(), options.block_size);
  return generate_epitome(image, find_self_similarities(image, grid, options.similarity),
                          options);
}

GeneratedEpitome generate_epitome(const ImagePlane& image, const MatchLists& ml,
                                  const EpitomeOptions& options) {
  if (ml.width != image.width() || ml.height != image.height() ||
      ml.block_size != options.block_size) {
    throw ShapeError("generate_epitome: match lists do not fit the image");
  }
  const ReverseLists rl = build_reverse_lists(ml);
  GeneratedEpitome out;
  out.grown = grow_epitome(image, ml, rl, options.similarity.threads);
  out.padded = pad_to_block_grid(out.grown.epitome, options.codec_block);
  out.reconstruction_mse =
      mse(image, reconstruct_from_epitome(out.grown.epitome, out.grown.assignation));
  return out;
}

}  // namespace epitome
