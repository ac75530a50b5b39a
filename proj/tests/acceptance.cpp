// Acceptance runner: one [PASS]/[FAIL] line per criterion, nonzero exit if
// any criterion fails.

#include <Eigen/Dense>
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "epitome/bd_rate.hpp"
#include "epitome/epitome.hpp"
#include "epitome/experiment.hpp"
#include "epitome/fixtures.hpp"
#include "epitome/pgm.hpp"
#include "epitome/pipeline.hpp"
#include "epitome/restoration.hpp"

using namespace epitome;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail.clear();
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// --- epitome soundness -------------------------------------------------------

double direct_block_mse(const ImagePlane& img, Origin a, Origin b, int n) {
  double s = 0.0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double d = img(a.row + r, a.col + c) - img(b.row + r, b.col + c);
      s += d * d;
    }
  }
  return s / (n * n);
}

bool aligned(const Mask& m, int b) {
  for (int r = 0; r < m.rows(); r += b) {
    for (int c = 0; c < m.cols(); c += b) {
      const auto blk = m.block(r, c, std::min(b, int(m.rows()) - r), std::min(b, int(m.cols()) - c));
      if (blk.any() && !blk.all()) return false;
    }
  }
  return true;
}

// Returns an empty string when every invariant holds.
std::string soundness_violations(const ImagePlane& img, double eps) {
  EpitomeOptions o;
  o.similarity.matching_threshold = eps;
  const GeneratedEpitome g = generate_epitome(img, o);
  const Epitome& e = g.grown.epitome;
  const AssignationMap& am = g.grown.assignation;
  const int n = am.block_size;
  const int per_row = img.width() / n;
  if (!am.complete()) return "incomplete assignation";
  for (std::size_t b = 0; b < am.patches.size(); ++b) {
    const Origin blk{int(b) / per_row * n, int(b) % per_row * n};
    const Origin p = *am.patches[b];
    if (direct_block_mse(img, blk, p, n) > eps + 1e-9) return "block MSE above eps";
    if (!(e.labels.block(p.row, p.col, n, n) >= 0).all()) return "assigned patch leaves epitome";
  }
  ImagePlane rec(img.width(), img.height());
  for (std::size_t b = 0; b < am.patches.size(); ++b) {
    const Origin blk{int(b) / per_row * n, int(b) % per_row * n};
    const Origin p = *am.patches[b];
    rec.samples().block(blk.row, blk.col, n, n) = img.samples().block(p.row, p.col, n, n);
  }
  const double total = (rec.samples() - img.samples()).square().mean();
  if (total > eps + 1e-9) return "reconstruction MSE above eps";
  for (int r = 0; r < e.labels.rows(); ++r) {
    for (int c = 0; c < e.labels.cols(); ++c) {
      const int l = e.labels(r, c);
      if (l < 0) continue;
      for (int dr = 0; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr >= e.labels.rows() || cc < 0 || cc >= e.labels.cols()) continue;
          const int m = e.labels(rr, cc);
          if (m >= 0 && m != l) return "distinct charts touch";
        }
      }
    }
  }
  for (std::size_t i = 0; i < e.charts.size(); ++i) {
    if ((e.labels == int(i)).count() != e.charts[i].area) return "chart area mismatch";
  }
  const Mask padded = g.padded.mask();
  if (!aligned(padded, o.codec_block)) return "padded mask not block-aligned";
  if (((e.labels >= 0) && !padded).any()) return "padding dropped epitome pixels";
  return {};
}

Outcome soundness(const fs::path& data) {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::tuple<std::string, ImagePlane, double>> cases{
      {"constant", constant_fixture(128, 128, 77.0), 25.0},
      {"periodic", periodic_fixture(128, 128, 12, 4), 25.0},
      {"noise", noise_fixture(128, 128, 6), 25.0},
      {"camera", read_pnm(data / "camera_256.pgm"), 25.0},
      {"coins", read_pnm(data / "coins_256.pgm"), 25.0},
  };
  for (const auto& [name, img, eps] : cases) {
    const std::string v = soundness_violations(img, eps);
    if (!v.empty()) out.fail(name + ": " + v);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs >= 300.0) out.fail("runtime " + fmt("%.1f s", secs));
  if (out.pass) out.detail = "5 images sound, " + fmt("%.1f s", secs);
  return out;
}

Outcome degenerate() {
  Outcome out;
  EpitomeOptions o;
  o.similarity.matching_threshold = 0.0;
  const GeneratedEpitome noise = generate_epitome(noise_fixture(64, 64, 11), o);
  if (noise.grown.epitome.fraction() != 100.0 || noise.padded.fraction() != 100.0) {
    out.fail("noise fraction " + fmt("%.4f", noise.padded.fraction()));
  }
  o.similarity.matching_threshold = 25.0;
  const GeneratedEpitome flat = generate_epitome(constant_fixture(64, 64, 128.0), o);
  const auto& charts = flat.grown.epitome.charts;
  if (charts.size() != 1 || charts[0].area != 64 || charts[0].bounds.height != 8 ||
      charts[0].bounds.width != 8) {
    out.fail("constant: " + std::to_string(charts.size()) + " charts");
  }
  if (out.pass) out.detail = "noise 100%, constant one 8x8 chart";
  return out;
}

// --- restoration algebra -----------------------------------------------------

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  return Eigen::MatrixXd::NullaryExpr(r, c, [&] { return d(rng); });
}

Outcome lle() {
  Outcome out;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> kdist(1, 30);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int k = kdist(rng);
    const Eigen::MatrixXd base = gaussian(64, k, rng) * 40.0;
    const Eigen::VectorXd y = gaussian(64, 1, rng) * 40.0;
    const Eigen::VectorXd w = lle_weights(y, base, 1e-3);
    worst = std::max(worst, std::abs(w.sum() - 1.0));
  }
  if (worst > 1e-9) out.fail("sum deviation " + fmt("%.3g", worst));
  for (double lambda : {0.0, 1e-3, 1.0}) {
    const Eigen::VectorXd w1 = lle_weights(gaussian(64, 1, rng), gaussian(64, 1, rng), lambda);
    if (w1.size() != 1 || std::abs(w1(0) - 1.0) > 1e-12) out.fail("K=1 weight");
  }
  Eigen::MatrixXd mid(2, 2);
  mid << 0, 2, 4, 0;
  for (double lambda : {1e-3, 0.5}) {
    const Eigen::VectorXd w = lle_weights(Eigen::Vector2d(1, 2), mid, lambda);
    if (std::abs(w(0) - 0.5) > 1e-9 || std::abs(w(1) - 0.5) > 1e-9) out.fail("midpoint weights");
  }
  if (out.pass) out.detail = "max |sum-1| " + fmt("%.2g", worst);
  return out;
}

Outcome llm() {
  Outcome out;
  std::mt19937_64 rng(77);
  double worst_ls = 0.0, worst_gen = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int dim = 16 + t % 3 * 8, k = 3 * dim;
    const Eigen::MatrixXd y = gaussian(dim, k, rng) * 30.0;
    const Eigen::MatrixXd x = gaussian(dim, k, rng) * 30.0;
    // Oracle: per-row least squares min ||Y^T p - x_row|| by SVD.
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(y.transpose(),
                                                Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::MatrixXd oracle = svd.solve(x.transpose()).transpose();
    const Eigen::MatrixXd p = llm_map(y, x, 0.0);
    worst_ls = std::max(worst_ls, (p - oracle).norm() / oracle.norm());

    const Eigen::MatrixXd truth = gaussian(dim, dim, rng);
    const Eigen::MatrixXd rec = llm_map(y, truth * y, 0.0);
    worst_gen = std::max(worst_gen, (rec - truth).cwiseAbs().maxCoeff());
  }
  if (worst_ls > 1e-9) out.fail("least-squares relative error " + fmt("%.3g", worst_ls));
  if (worst_gen > 1e-8) out.fail("generating matrix error " + fmt("%.3g", worst_gen));
  if (out.pass) {
    out.detail = "oracle rel " + fmt("%.2g", worst_ls) + ", generator " + fmt("%.2g", worst_gen);
  }
  return out;
}

// --- end to end --------------------------------------------------------------

constexpr double kTextureEps = 130.0;

Outcome restoration_gain() {
  Outcome out;
  const ImagePlane img = texture_fixture(256, 256, 7);
  EpitomeOptions o;
  o.similarity.matching_threshold = kTextureEps;
  const GeneratedEpitome g = generate_epitome(img, o);
  const Mask mask = g.padded.mask();
  const Mask outside = !mask;
  std::ostringstream detail;
  detail << "epitome " << fmt("%.1f%%", g.padded.fraction());
  for (auto [method, need] : {std::pair{RestorationMethod::kLle, 1.0},
                              std::pair{RestorationMethod::kLlm, 0.5}}) {
    RestorationParams p;
    p.method = method;
    const PipelineResult r = run_pipeline(img, mask, CodecConfig{8.0, 8}, p);
    const double base = masked_psnr(img, r.bl_up, outside, 255.0);
    const double restored = masked_psnr(img, r.restored_el, outside, 255.0);
    const double gain = restored - base;
    detail << ", " << to_string(method) << " " << fmt("%+.2f dB", gain);
    if (gain < need) out.fail(std::string(to_string(method)) + " gain " + fmt("%.2f dB", gain));
  }
  if (out.pass) out.detail = detail.str();
  return out;
}

Outcome direction() {
  Outcome out;
  ExperimentGrid grid;
  grid.thresholds = {130.0, 110.0, 90.0, 60.0};
  const GridReport rep = run_grid({{"texture", texture_fixture(256, 256, 7)}}, grid);
  for (const CellFailure& f : rep.failures) out.fail(f.cell + ": " + f.message);
  std::map<RestorationMethod, std::vector<std::pair<double, double>>> by_method;
  for (const BdSummaryRow& s : rep.summary) {
    if (!s.bd_rate) {
      out.fail("no BD-rate at eps " + fmt("%g", s.eps_m.value_or(-1)) + ": " + s.note);
      continue;
    }
    by_method[s.method].push_back({s.epitome_pct, *s.bd_rate});
  }
  std::ostringstream detail;
  for (auto& [method, pts] : by_method) {
    std::sort(pts.begin(), pts.end());
    detail << to_string(method) << " [";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      detail << (i ? ", " : "") << fmt("%.1f%%", pts[i].first) << ":" << fmt("%.1f", pts[i].second);
      if (i > 0 && !(pts[i].second < pts[i - 1].second)) {
        out.fail(std::string(to_string(method)) + " BD-rate not decreasing at " +
                 fmt("%.1f%%", pts[i].first));
      }
      if (i > 0 && pts[i].first == pts[i - 1].first) out.fail("epitome sizes not distinct");
    }
    detail << "] ";
    if (pts.size() != grid.thresholds.size()) out.fail("missing summary rows");
  }
  if (out.pass) out.detail = detail.str();
  return out;
}

Outcome bd_metric() {
  Outcome out;
  RDCurve ref;
  ref.points = {{0.4, 30.1}, {0.8, 33.4}, {1.5, 36.2}, {2.9, 39.0}};
  RDCurve dbl = ref, half = ref;
  for (RDPoint& p : dbl.points) p.rate *= 2.0;
  for (RDPoint& p : half.points) p.rate *= 0.5;
  const double same = bd_rate(ref, ref), up = bd_rate(dbl, ref), down = bd_rate(half, ref);
  if (fmt("%.2f", same) != "0.00") out.fail("identical " + fmt("%.4f", same));
  if (std::abs(up - 100.0) > 0.1) out.fail("doubled " + fmt("%.4f", up));
  if (std::abs(down + 50.0) > 0.1) out.fail("halved " + fmt("%.4f", down));
  if (out.pass) {
    out.detail = fmt("%.2f", same) + ", " + fmt("%+.2f", up) + ", " + fmt("%+.2f", down);
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int sh(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  Outcome out;
  const fs::path dir = fs::temp_directory_path() / "epitome_acceptance_det";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = std::string("'") + EPITOME_CLI + "'";
  const fs::path img = dir / "img.pgm";
  write_pgm(img, texture_fixture(256, 256, 7));
  const std::vector<std::string> runs{"t1a", "t1b", "t2", "t4"};
  const std::vector<int> threads{1, 1, 2, 4};
  for (const std::string method : {"e-lle", "e-llm"}) {
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const std::string cmd = cli + " pipeline '" + img.string() + "' --eps-m 130 --method " +
                              method + " --threads " + std::to_string(threads[i]) +
                              " --out-dir '" + (dir / (method + runs[i])).string() +
                              "' >/dev/null 2>&1";
      if (sh(cmd) != 0) out.fail("pipeline exited nonzero");
    }
    for (const char* f : {"stats.json", "bl_decoded.pgm", "bl_up.pgm", "el_epitome.pgm",
                          "restored_el.pgm", "epitome_mask.pgm"}) {
      const std::string ref = slurp(dir / (method + runs[0]) / f);
      if (ref.empty()) out.fail(std::string("missing ") + f);
      for (std::size_t i = 1; i < runs.size(); ++i) {
        if (slurp(dir / (method + runs[i]) / f) != ref) {
          out.fail(method + " " + f + " differs for " + runs[i]);
        }
      }
    }
  }
  fs::remove_all(dir);
  if (out.pass) out.detail = "threads 1,1,2,4 identical for both methods";
  return out;
}

Outcome full_epitome(const fs::path& data) {
  Outcome out;
  int checked = 0;
  for (const ImagePlane& img : {texture_fixture(128, 128, 7), read_pnm(data / "camera_256.pgm")}) {
    const Mask full = Mask::Constant(img.height(), img.width(), true);
    for (double q : {4.0, 8.0, 16.0, 32.0}) {
      const CodecConfig cfg{q, 8};
      const BaseLayer bl = code_base_layer(img, cfg);
      const CodedPlane direct = code_full_el(img, bl.upsampled, cfg);
      for (RestorationMethod m : {RestorationMethod::kLle, RestorationMethod::kLlm}) {
        RestorationParams p;
        p.method = m;
        const PipelineResult r = run_pipeline(img, full, cfg, p);
        if (!(r.restored_el.samples() == direct.decoded.samples()).all()) {
          out.fail("samples differ at q " + fmt("%g", q));
        }
        if (r.stats.el_rate != direct.rate_bits) out.fail("rate differs at q " + fmt("%g", q));
        if (r.stats.epitome_fraction != 100.0) out.fail("fraction not 100");
        ++checked;
      }
    }
  }
  if (out.pass) out.detail = std::to_string(checked) + " runs bit-identical to full-EL coding";
  return out;
}

}  // namespace

int main() {
  const fs::path data = EPITOME_DATA_DIR;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"epitome soundness", [&] { return soundness(data); }},
      {"degenerate sizes", degenerate},
      {"LLE correctness", lle},
      {"LLM correctness", llm},
      {"restoration gain", restoration_gain},
      {"pipeline direction", direction},
      {"BD-rate metric", bd_metric},
      {"determinism", determinism},
      {"full-epitome degeneracy", [&] { return full_epitome(data); }},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
