#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "epitome/bd_rate.hpp"
#include "epitome/image.hpp"
#include "epitome/restoration.hpp"

namespace epitome {

struct NamedImage {
  std::string name;
  ImagePlane plane;
};

struct ExperimentGrid {
  std::vector<double> thresholds{25.0};                 // eps_M
  std::vector<double> quant_steps{4.0, 8.0, 16.0, 32.0};
  std::vector<RestorationMethod> methods{RestorationMethod::kLle, RestorationMethod::kLlm};
  int block_size = 8;
  int transform_block = 8;
  RestorationParams restoration;  // method is overridden per cell
  /// Adds a 100% epitome control per image and method.
  bool full_control = false;
  int threads = 1;

  /// Throws InputError on an empty axis.
  void validate() const;
};

/// One pipeline run. Rates are in bits per EL pixel.
/// `eps_m` is empty for the full-epitome control.
struct GridRow {
  std::string image;
  std::optional<double> eps_m;
  double epitome_pct = 0.0;
  RestorationMethod method = RestorationMethod::kLle;
  double quant_step = 0.0;
  double bl_rate = 0.0;
  double el_rate = 0.0;
  double psnr = 0.0;

  RDPoint rd_point() const { return {bl_rate + el_rate, psnr}; }
};

/// Full-EL reference coding of one image at one step.
struct BaselineRow {
  std::string image;
  double quant_step = 0.0;
  double bl_rate = 0.0;
  double el_rate = 0.0;
  double psnr = 0.0;
};

struct BdSummaryRow {
  std::string image;
  std::optional<double> eps_m;
  double epitome_pct = 0.0;
  RestorationMethod method = RestorationMethod::kLle;
  std::optional<double> bd_rate;  // empty when the metric failed
  std::string note;
};

struct CellFailure {
  std::string image;
  std::string cell;
  std::string message;
};

struct GridReport {
  std::vector<GridRow> rows;  // image, eps_m, method, quant_step order
  std::vector<BaselineRow> baseline;
  std::vector<BdSummaryRow> summary;
  std::vector<CellFailure> failures;
};

/// Every (image, eps_M, method, step) cell through the pipeline, plus the
/// full-EL baseline and BD-rates against it. Failing cells are recorded and
/// skipped. Output order does not depend on the thread count.
GridReport run_grid(const std::vector<NamedImage>& images, const ExperimentGrid& grid);

/// results.csv columns:
/// image,eps_m,epitome_pct,method,quant_step,bl_rate,el_rate,psnr
/// Numbers use the shortest representation that reads back exactly.
void write_results_csv(std::ostream& out, const std::vector<GridRow>& rows);
std::vector<GridRow> read_results_csv(std::istream& in);

/// baseline.csv: image,quant_step,bl_rate,el_rate,psnr
void write_baseline_csv(std::ostream& out, const std::vector<BaselineRow>& rows);

/// bd_summary.csv: image,eps_m,epitome_pct,method,bd_rate,note
void write_summary_csv(std::ostream& out, const std::vector<BdSummaryRow>& rows);

/// gnuplot data: one block per curve, separated by two blank lines, each
/// headed by a comment naming the curve. Columns: rate psnr.
void write_rd_dat(std::ostream& out, const GridReport& report);

/// Writes results.csv, baseline.csv, bd_summary.csv, failures.csv (when
/// non-empty) and optionally rd_curves.dat into `dir`.
void write_grid_outputs(const GridReport& report, const std::filesystem::path& dir,
                        bool with_dat);

/// Reads an RD curve from CSV. Accepts a header with `rate,psnr` columns or
/// with `bl_rate,el_rate,psnr` (rate = sum). Points are sorted by rate.
RDCurve read_rd_curve(const std::filesystem::path& path);

/// Shortest round-trip decimal form of `value`.
std::string format_number(double value);

}  // namespace epitome
