#include "epitome/bd_rate.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

#include "epitome/errors.hpp"

namespace epitome {
namespace {

double integrate(const Eigen::Vector4d& p, double lo, double hi) {
  auto antiderivative = [&](double x) {
    return x * (p[0] + x * (p[1] / 2.0 + x * (p[2] / 3.0 + x * p[3] / 4.0)));
  };
  return antiderivative(hi) - antiderivative(lo);
}

}  // namespace

void RDCurve::validate() const {
  if (points.size() < 4) throw InputError("rd curve: need at least 4 points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].rate > 0.0) || !std::isfinite(points[i].psnr)) {
      throw InputError("rd curve: rates must be positive and PSNR finite");
    }
    if (i > 0 && !(points[i].rate > points[i - 1].rate)) {
      throw InputError("rd curve: rates must be strictly increasing");
    }
  }
}

std::vector<std::string> RDCurve::warnings() const {
  std::vector<std::string> out;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].psnr < points[i - 1].psnr) {
      out.push_back("psnr decreases between rate " + std::to_string(points[i - 1].rate) +
                    " and " + std::to_string(points[i].rate));
    }
  }
  return out;
}

Eigen::Vector4d fit_log_rate(const RDCurve& curve, double center) {
  const auto m = static_cast<Eigen::Index>(curve.points.size());
  Eigen::MatrixXd vandermonde(m, 4);
  Eigen::VectorXd log_rate(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double x = curve.points[static_cast<std::size_t>(i)].psnr - center;
    vandermonde.row(i) << 1.0, x, x * x, x * x * x;
    log_rate(i) = std::log10(curve.points[static_cast<std::size_t>(i)].rate);
  }
  return vandermonde.colPivHouseholderQr().solve(log_rate);
}

double bd_rate(const RDCurve& test, const RDCurve& reference) {
  test.validate();
  reference.validate();
  auto range = [](const RDCurve& c) {
    const auto [lo, hi] = std::minmax_element(
        c.points.begin(), c.points.end(),
        [](const RDPoint& a, const RDPoint& b) { return a.psnr < b.psnr; });
    return std::pair{lo->psnr, hi->psnr};
  };
  const auto [test_lo, test_hi] = range(test);
  const auto [ref_lo, ref_hi] = range(reference);
  const double lo = std::max(test_lo, ref_lo);
  const double hi = std::min(test_hi, ref_hi);
  if (!(hi > lo)) throw EvaluationError("bd-rate: PSNR ranges do not overlap");

  const double center = 0.5 * (lo + hi);
  const Eigen::Vector4d p_test = fit_log_rate(test, center);
  const Eigen::Vector4d p_ref = fit_log_rate(reference, center);
  const double avg = (integrate(p_test, lo - center, hi - center) -
                      integrate(p_ref, lo - center, hi - center)) /
                     (hi - lo);
  return (std::pow(10.0, avg) - 1.0) * 100.0;
}

}  // namespace epitome
