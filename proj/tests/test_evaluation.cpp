#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "epitome/artifact.hpp"
#include "epitome/bd_rate.hpp"
#include "epitome/errors.hpp"
#include "epitome/experiment.hpp"
#include "epitome/fixtures.hpp"
#include "epitome/pgm.hpp"
#include "helpers.hpp"

using namespace epitome;

namespace {

RDCurve make_curve(std::initializer_list<std::pair<double, double>> pts) {
  RDCurve c;
  for (auto [rate, psnr] : pts) c.points.push_back({rate, psnr});
  return c;
}

RDCurve scaled(const RDCurve& c, double factor, double psnr_shift = 0.0) {
  RDCurve out = c;
  for (RDPoint& p : out.points) {
    p.rate *= factor;
    p.psnr += psnr_shift;
  }
  return out;
}

const RDCurve kRef = make_curve({{0.4, 30.1}, {0.8, 33.4}, {1.5, 36.2}, {2.9, 39.0}});

// Normal equations on raw PSNR and composite Simpson integration: shares no
// code with the library's centered QR fit and closed-form integral.
Eigen::Vector4d oracle_fit(const RDCurve& c) {
  Eigen::MatrixXd a(c.points.size(), 4);
  Eigen::VectorXd b(c.points.size());
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    for (int k = 0; k < 4; ++k) a(i, k) = std::pow(c.points[i].psnr, k);
    b(i) = std::log10(c.points[i].rate);
  }
  return (a.transpose() * a).ldlt().solve(a.transpose() * b);
}

double oracle_bd(const RDCurve& test, const RDCurve& ref) {
  const auto range = [](const RDCurve& c) {
    double lo = c.points[0].psnr, hi = lo;
    for (const RDPoint& p : c.points) {
      lo = std::min(lo, p.psnr);
      hi = std::max(hi, p.psnr);
    }
    return std::pair{lo, hi};
  };
  const auto [tl, th] = range(test);
  const auto [rl, rh] = range(ref);
  const double lo = std::max(tl, rl), hi = std::min(th, rh);
  const Eigen::Vector4d pt = oracle_fit(test), pr = oracle_fit(ref);
  const auto diff = [&](double x) {
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += (pt(k) - pr(k)) * std::pow(x, k);
    return s;
  };
  const int n = 2000;
  const double h = (hi - lo) / n;
  double acc = diff(lo) + diff(hi);
  for (int i = 1; i < n; ++i) acc += diff(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  const double avg = acc * h / 3.0 / (hi - lo);
  return (std::pow(10.0, avg) - 1.0) * 100.0;
}

RDCurve random_curve(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> step(0.3, 1.0), gain(1.5, 4.0), start(26.0, 32.0);
  RDCurve c;
  double rate = 0.2 * step(rng), psnr = start(rng);
  for (int i = 0; i < 4; ++i) {
    c.points.push_back({rate, psnr});
    rate *= 1.0 + step(rng) * 1.5;
    psnr += gain(rng);
  }
  return c;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / ("epitome_eval_" + name)) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("bd_rate reference values") {
  CHECK(std::abs(bd_rate(kRef, kRef)) <= 1e-12);
  CHECK(std::abs(bd_rate(scaled(kRef, 2.0), kRef) - 100.0) <= 0.1);
  CHECK(std::abs(bd_rate(scaled(kRef, 0.5), kRef) + 50.0) <= 0.1);
}

TEST_CASE("bd_rate agrees with a numerical oracle") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const RDCurve a = random_curve(rng);
    RDCurve b = random_curve(rng);
    // Force an overlap.
    const double shift = a.points[1].psnr - b.points[1].psnr;
    for (RDPoint& p : b.points) p.psnr += shift;
    const double got = bd_rate(a, b);
    const double want = oracle_bd(a, b);
    CHECK(std::abs(got - want) <= 1e-6 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("bd_rate reciprocity and scale invariance") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const RDCurve a = random_curve(rng);
    RDCurve b = random_curve(rng);
    const double shift = a.points[2].psnr - b.points[1].psnr;
    for (RDPoint& p : b.points) p.psnr += shift;
    const double ab = bd_rate(a, b);
    const double ba = bd_rate(b, a);
    CHECK(std::abs(ab - (-ba / (1.0 + ba / 100.0))) <= 0.1);
    for (double f : {0.001, 3.0, 1000.0}) {
      CHECK(bd_rate(scaled(a, f), scaled(b, f)) == doctest::Approx(ab).epsilon(1e-9));
    }
  }
}

TEST_CASE("bd_rate input validation") {
  SUBCASE("too few points") {
    const RDCurve three = make_curve({{0.4, 30.0}, {0.8, 33.0}, {1.5, 36.0}});
    CHECK_THROWS_AS(bd_rate(three, kRef), InputError);
    CHECK_THROWS_AS(bd_rate(kRef, three), InputError);
  }
  SUBCASE("non-monotone rate") {
    const RDCurve bad = make_curve({{0.4, 30.0}, {0.3, 33.0}, {1.5, 36.0}, {2.9, 39.0}});
    CHECK_THROWS_AS(bd_rate(bad, kRef), InputError);
    const RDCurve dup = make_curve({{0.4, 30.0}, {0.4, 33.0}, {1.5, 36.0}, {2.9, 39.0}});
    CHECK_THROWS_AS(dup.validate(), InputError);
  }
  SUBCASE("non-positive rate") {
    const RDCurve zero = make_curve({{0.0, 30.0}, {0.8, 33.0}, {1.5, 36.0}, {2.9, 39.0}});
    CHECK_THROWS_AS(zero.validate(), InputError);
  }
  SUBCASE("disjoint PSNR ranges") {
    CHECK_THROWS_AS(bd_rate(scaled(kRef, 1.0, 20.0), kRef), EvaluationError);
  }
  SUBCASE("decreasing PSNR warns but computes") {
    const RDCurve odd = make_curve({{0.4, 30.0}, {0.8, 34.0}, {1.5, 33.5}, {2.9, 39.0}});
    CHECK(odd.warnings().size() == 1);
    CHECK(kRef.warnings().empty());
    CHECK_NOTHROW(bd_rate(odd, kRef));
  }
}

TEST_CASE("results CSV round-trips losslessly") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  std::vector<GridRow> rows;
  for (int i = 0; i < 40; ++i) {
    GridRow r;
    r.image = i % 2 ? "alpha" : "beta";
    if (i % 7 != 0) r.eps_m = u(rng);
    r.epitome_pct = u(rng) * 2.0;
    r.method = i % 3 ? RestorationMethod::kLle : RestorationMethod::kLlm;
    r.quant_step = std::ldexp(1.0, i % 5);
    r.bl_rate = u(rng) / 7.0;
    r.el_rate = u(rng) / 3.0;
    r.psnr = 20.0 + u(rng) / 3.0;
    rows.push_back(r);
  }
  std::stringstream ss;
  write_results_csv(ss, rows);
  CHECK(ss.str().rfind("image,eps_m,epitome_pct,method,quant_step,bl_rate,el_rate,psnr\n", 0) == 0);
  const std::vector<GridRow> back = read_results_csv(ss);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].image == rows[i].image);
    CHECK(back[i].eps_m == rows[i].eps_m);
    CHECK(back[i].epitome_pct == rows[i].epitome_pct);
    CHECK(back[i].method == rows[i].method);
    CHECK(back[i].quant_step == rows[i].quant_step);
    CHECK(back[i].rd_point() == rows[i].rd_point());
  }
}

TEST_CASE("read_rd_curve accepts both column layouts") {
  TempDir dir("rd");
  {
    std::ofstream f(dir.path / "a.csv");
    f << "rate,psnr\n1.5,36.2\n0.4,30.1\n2.9,39\n0.8,33.4\n";
  }
  {
    std::ofstream f(dir.path / "b.csv");
    f << "image,quant_step,bl_rate,el_rate,psnr\n"
         "x,4,0.2,2.7,39\nx,8,0.1,1.4,36.2\nx,16,0.1,0.7,33.4\nx,32,0.1,0.3,30.1\n";
  }
  const RDCurve a = read_rd_curve(dir.path / "a.csv");
  const RDCurve b = read_rd_curve(dir.path / "b.csv");
  REQUIRE(a.points.size() == 4);
  REQUIRE(b.points.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a.points[i].rate == kRef.points[i].rate);
    CHECK(a.points[i].psnr == kRef.points[i].psnr);
    CHECK(b.points[i].rate == doctest::Approx(kRef.points[i].rate).epsilon(1e-12));
  }
  CHECK_THROWS_AS(read_rd_curve(dir.path / "missing.csv"), InputError);
}

TEST_CASE("run_grid counts and ordering") {
  const std::vector<NamedImage> images{{"tex", texture_fixture(64, 64, 3)}};
  ExperimentGrid grid;
  grid.thresholds = {60.0};
  grid.full_control = true;
  const GridReport rep = run_grid(images, grid);
  CHECK(rep.failures.empty());
  // One eps plus the control, two methods, four steps.
  REQUIRE(rep.rows.size() == 2 * 2 * 4);
  CHECK(rep.baseline.size() == 4);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(rep.rows[i].eps_m == 60.0);
    CHECK(rep.rows[i].method == (i < 4 ? RestorationMethod::kLle : RestorationMethod::kLlm));
    CHECK(rep.rows[i].quant_step == grid.quant_steps[i % 4]);
  }
  REQUIRE(rep.summary.size() == 4);
  int per_method[2] = {0, 0};
  for (const BdSummaryRow& s : rep.summary) {
    per_method[s.method == RestorationMethod::kLlm]++;
    if (!s.eps_m) {
      REQUIRE(s.bd_rate);
      CHECK(std::abs(*s.bd_rate) <= 0.1);
      CHECK(s.epitome_pct == 100.0);
    }
  }
  CHECK(per_method[0] == 2);
  CHECK(per_method[1] == 2);

  SUBCASE("thread count does not change the report") {
    ExperimentGrid g4 = grid;
    g4.threads = 4;
    const GridReport rep4 = run_grid(images, g4);
    std::stringstream a, b;
    write_results_csv(a, rep.rows);
    write_results_csv(b, rep4.rows);
    CHECK(a.str() == b.str());
  }
  SUBCASE("outputs on disk") {
    TempDir dir("grid");
    write_grid_outputs(rep, dir.path, true);
    for (const char* f : {"results.csv", "baseline.csv", "bd_summary.csv", "rd_curves.dat"}) {
      CHECK(std::filesystem::exists(dir.path / f));
    }
    std::ifstream in(dir.path / "results.csv");
    CHECK(read_results_csv(in).size() == rep.rows.size());
  }
}

TEST_CASE("empty grid axes are rejected") {
  ExperimentGrid g;
  g.quant_steps.clear();
  CHECK_THROWS_AS(g.validate(), InputError);
  g = ExperimentGrid{};
  g.methods.clear();
  CHECK_THROWS_AS(run_grid({{"x", constant_fixture(16, 16)}}, g), InputError);
}

TEST_CASE("epitome artifact save and load") {
  TempDir dir("artifact");
  const ImagePlane img = texture_fixture(64, 64, 9);
  EpitomeOptions o;
  o.similarity.matching_threshold = 60.0;
  const GeneratedEpitome g = generate_epitome(img, o);
  const EpitomeArtifact a = make_artifact(g, o);
  save_artifact(a, dir.path / "m.pgm", dir.path / "e.json");
  const EpitomeArtifact b = load_artifact(dir.path / "m.pgm", dir.path / "e.json");
  CHECK((b.mask == a.mask).all());
  CHECK(artifact_to_json(b) == artifact_to_json(a));

  SUBCASE("misaligned mask") {
    Mask m = a.mask;
    m(3, 3) = !m(3, 3);
    write_mask_pgm(dir.path / "bad.pgm", m);
    CHECK_THROWS_AS(load_artifact(dir.path / "bad.pgm", dir.path / "e.json"), IntegrityError);
  }
  SUBCASE("malformed metadata") {
    std::ofstream(dir.path / "bad.json") << "{ not json";
    CHECK_THROWS_AS(load_artifact(dir.path / "m.pgm", dir.path / "bad.json"), InputError);
  }
}
