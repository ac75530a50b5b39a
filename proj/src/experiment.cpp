#include "epitome/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "epitome/epitome.hpp"
#include "epitome/parallel.hpp"
#include "epitome/pipeline.hpp"

namespace epitome {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  for (auto& f : fields) {
    if (!f.empty() && f.back() == '\r') f.pop_back();
  }
  return fields;
}

double parse_number(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw InputError("csv: bad number '" + text + "'");
  return value;
}

std::string checked_name(const std::string& name) {
  if (name.find_first_of(",\n\r\"") != std::string::npos) {
    throw InputError("csv: image name '" + name + "' contains a separator");
  }
  return name;
}

std::string eps_text(const std::optional<double>& eps) {
  return eps ? format_number(*eps) : "full";
}

std::string curve_label(const std::string& image, const std::optional<double>& eps,
                        RestorationMethod method) {
  return image + " eps_m=" + eps_text(eps) + " " + std::string(to_string(method));
}

RDCurve sorted_curve(std::vector<RDPoint> points) {
  std::sort(points.begin(), points.end(),
            [](const RDPoint& a, const RDPoint& b) { return a.rate < b.rate; });
  return RDCurve{std::move(points)};
}

struct ColumnIndex {
  std::map<std::string, std::size_t> columns;

  explicit ColumnIndex(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) columns[header[i]] = i;
  }
  bool has(const std::string& name) const { return columns.count(name) != 0; }
  const std::string& get(const std::vector<std::string>& row, const std::string& name) const {
    const auto it = columns.find(name);
    if (it == columns.end()) throw InputError("csv: missing column '" + name + "'");
    if (it->second >= row.size()) throw InputError("csv: short row");
    return row[it->second];
  }
};

}  // namespace

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void ExperimentGrid::validate() const {
  if (thresholds.empty() && !full_control) throw InputError("grid: no eps_m values");
  if (quant_steps.empty()) throw InputError("grid: no quantization steps");
  if (methods.empty()) throw InputError("grid: no restoration methods");
  for (double t : thresholds) {
    if (!(t >= 0.0)) throw InputError("grid: eps_m must be >= 0");
  }
  for (double q : quant_steps) {
    if (!(q > 0.0)) throw InputError("grid: quantization steps must be > 0");
  }
  restoration.validate();
}

GridReport run_grid(const std::vector<NamedImage>& images, const ExperimentGrid& grid) {
  grid.validate();
  if (images.empty()) throw InputError("grid: no images");
  const int unit = std::lcm(2 * grid.transform_block, grid.block_size);
  std::vector<ImagePlane> planes;
  for (const auto& img : images) {
    checked_name(img.name);
    planes.push_back(crop_to_multiple(img.plane, unit));
  }

  // Epitome masks, one per (image, eps_m); the control column is a full mask.
  const std::size_t n_img = images.size();
  std::vector<std::optional<double>> eps_axis(grid.thresholds.begin(), grid.thresholds.end());
  if (grid.full_control) eps_axis.push_back(std::nullopt);
  const std::size_t n_eps = eps_axis.size();
  struct MaskCell {
    std::optional<Mask> mask;
    double pct = 0.0;
    std::string error;
  };
  std::vector<MaskCell> masks(n_img * n_eps);
  parallel_for(masks.size(), grid.threads, [&](std::size_t k) {
    const ImagePlane& plane = planes[k / n_eps];
    const auto& eps = eps_axis[k % n_eps];
    MaskCell& cell = masks[k];
    if (!eps) {
      cell.mask = Mask::Constant(plane.height(), plane.width(), true);
      cell.pct = 100.0;
      return;
    }
    try {
      EpitomeOptions options;
      options.block_size = grid.block_size;
      options.codec_block = grid.transform_block;
      options.similarity.matching_threshold = *eps;
      const GeneratedEpitome generated = generate_epitome(plane, options);
      cell.mask = generated.padded.mask();
      cell.pct = generated.padded.fraction();
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });

  const std::size_t n_q = grid.quant_steps.size();
  const std::size_t n_m = grid.methods.size();
  GridReport report;

  struct BaselineCell {
    std::optional<BaselineRow> row;
    std::string error;
  };
  std::vector<BaselineCell> baseline(n_img * n_q);
  parallel_for(baseline.size(), grid.threads, [&](std::size_t k) {
    const ImagePlane& plane = planes[k / n_q];
    CodecConfig cfg{grid.quant_steps[k % n_q], grid.transform_block};
    try {
      const BaseLayer bl = code_base_layer(plane, cfg);
      const CodedPlane el = code_full_el(plane, bl.upsampled, cfg);
      const double pixels = static_cast<double>(plane.size());
      baseline[k].row = BaselineRow{images[k / n_q].name, cfg.quant_step,
                                    bl.rate_bits / pixels, el.rate_bits / pixels,
                                    psnr(plane, el.decoded, plane.peak())};
    } catch (const std::exception& e) {
      baseline[k].error = e.what();
    }
  });

  struct RunCell {
    std::optional<GridRow> row;
    std::string error;
  };
  std::vector<RunCell> runs(n_img * n_eps * n_m * n_q);
  parallel_for(runs.size(), grid.threads, [&](std::size_t k) {
    const std::size_t qi = k % n_q;
    const std::size_t mi = (k / n_q) % n_m;
    const std::size_t ei = (k / (n_q * n_m)) % n_eps;
    const std::size_t ii = k / (n_q * n_m * n_eps);
    const MaskCell& mc = masks[ii * n_eps + ei];
    if (!mc.mask) {
      runs[k].error = "epitome: " + mc.error;
      return;
    }
    RestorationParams params = grid.restoration;
    params.method = grid.methods[mi];
    params.threads = 1;
    const CodecConfig cfg{grid.quant_steps[qi], grid.transform_block};
    try {
      const PipelineResult result = run_pipeline(planes[ii], *mc.mask, cfg, params);
      const double pixels = static_cast<double>(planes[ii].size());
      runs[k].row = GridRow{images[ii].name, eps_axis[ei], mc.pct, params.method,
                            cfg.quant_step, result.stats.bl_rate / pixels,
                            result.stats.el_rate / pixels, result.psnr_el};
    } catch (const std::exception& e) {
      runs[k].error = e.what();
    }
  });

  for (std::size_t k = 0; k < baseline.size(); ++k) {
    if (baseline[k].row) {
      report.baseline.push_back(*baseline[k].row);
    } else {
      report.failures.push_back({images[k / n_q].name,
                                 "baseline q=" + format_number(grid.quant_steps[k % n_q]),
                                 baseline[k].error});
    }
  }
  for (std::size_t k = 0; k < runs.size(); ++k) {
    if (runs[k].row) {
      report.rows.push_back(*runs[k].row);
      continue;
    }
    const std::size_t qi = k % n_q;
    const std::size_t mi = (k / n_q) % n_m;
    const std::size_t ei = (k / (n_q * n_m)) % n_eps;
    const std::size_t ii = k / (n_q * n_m * n_eps);
    report.failures.push_back(
        {images[ii].name,
         "eps_m=" + eps_text(eps_axis[ei]) + " " + std::string(to_string(grid.methods[mi])) +
             " q=" + format_number(grid.quant_steps[qi]),
         runs[k].error});
  }

  for (std::size_t ii = 0; ii < n_img; ++ii) {
    std::vector<RDPoint> ref_points;
    for (const auto& b : report.baseline) {
      if (b.image == images[ii].name) ref_points.push_back({b.bl_rate + b.el_rate, b.psnr});
    }
    const RDCurve reference = sorted_curve(std::move(ref_points));
    for (std::size_t ei = 0; ei < n_eps; ++ei) {
      for (std::size_t mi = 0; mi < n_m; ++mi) {
        BdSummaryRow s{images[ii].name, eps_axis[ei], masks[ii * n_eps + ei].pct,
                       grid.methods[mi], std::nullopt, ""};
        std::vector<RDPoint> points;
        for (std::size_t qi = 0; qi < n_q; ++qi) {
          const auto& cell = runs[((ii * n_eps + ei) * n_m + mi) * n_q + qi];
          if (cell.row) points.push_back(cell.row->rd_point());
        }
        try {
          s.bd_rate = bd_rate(sorted_curve(std::move(points)), reference);
        } catch (const std::exception& e) {
          s.note = e.what();
        }
        report.summary.push_back(std::move(s));
      }
    }
  }
  return report;
}

void write_results_csv(std::ostream& out, const std::vector<GridRow>& rows) {
  out << "image,eps_m,epitome_pct,method,quant_step,bl_rate,el_rate,psnr\n";
  for (const auto& r : rows) {
    out << checked_name(r.image) << ',' << eps_text(r.eps_m) << ','
        << format_number(r.epitome_pct) << ',' << to_string(r.method) << ','
        << format_number(r.quant_step) << ',' << format_number(r.bl_rate) << ','
        << format_number(r.el_rate) << ',' << format_number(r.psnr) << '\n';
  }
}

std::vector<GridRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("csv: empty input");
  const ColumnIndex cols(split_csv_line(line));
  std::vector<GridRow> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    GridRow r;
    r.image = cols.get(f, "image");
    const std::string& eps = cols.get(f, "eps_m");
    if (eps != "full") r.eps_m = parse_number(eps);
    r.epitome_pct = parse_number(cols.get(f, "epitome_pct"));
    r.method = parse_method(cols.get(f, "method"));
    r.quant_step = parse_number(cols.get(f, "quant_step"));
    r.bl_rate = parse_number(cols.get(f, "bl_rate"));
    r.el_rate = parse_number(cols.get(f, "el_rate"));
    r.psnr = parse_number(cols.get(f, "psnr"));
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_baseline_csv(std::ostream& out, const std::vector<BaselineRow>& rows) {
  out << "image,quant_step,bl_rate,el_rate,psnr\n";
  for (const auto& r : rows) {
    out << checked_name(r.image) << ',' << format_number(r.quant_step) << ','
        << format_number(r.bl_rate) << ',' << format_number(r.el_rate) << ','
        << format_number(r.psnr) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<BdSummaryRow>& rows) {
  out << "image,eps_m,epitome_pct,method,bd_rate,note\n";
  for (const auto& r : rows) {
    std::string note = r.note;
    std::replace(note.begin(), note.end(), ',', ';');
    out << checked_name(r.image) << ',' << eps_text(r.eps_m) << ','
        << format_number(r.epitome_pct) << ',' << to_string(r.method) << ','
        << (r.bd_rate ? format_number(*r.bd_rate) : "") << ',' << note << '\n';
  }
}

void write_rd_dat(std::ostream& out, const GridReport& report) {
  bool first = true;
  auto begin_block = [&](const std::string& label) {
    if (!first) out << "\n\n";
    first = false;
    out << "# " << label << "\n# rate_bpp psnr_db\n";
  };
  std::vector<std::string> names;
  for (const auto& b : report.baseline) {
    if (std::find(names.begin(), names.end(), b.image) == names.end()) names.push_back(b.image);
  }
  for (const auto& name : names) {
    begin_block(name + " full-el");
    for (const auto& b : report.baseline) {
      if (b.image == name) out << format_number(b.bl_rate + b.el_rate) << ' ' << format_number(b.psnr) << '\n';
    }
  }
  for (std::size_t i = 0; i < report.rows.size();) {
    const GridRow& head = report.rows[i];
    begin_block(curve_label(head.image, head.eps_m, head.method));
    for (; i < report.rows.size() && report.rows[i].image == head.image &&
           report.rows[i].eps_m == head.eps_m && report.rows[i].method == head.method;
         ++i) {
      const RDPoint p = report.rows[i].rd_point();
      out << format_number(p.rate) << ' ' << format_number(p.psnr) << '\n';
    }
  }
}

void write_grid_outputs(const GridReport& report, const std::filesystem::path& dir,
                        bool with_dat) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw InputError("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("results.csv");
    write_results_csv(out, report.rows);
  }
  {
    auto out = open("baseline.csv");
    write_baseline_csv(out, report.baseline);
  }
  {
    auto out = open("bd_summary.csv");
    write_summary_csv(out, report.summary);
  }
  if (!report.failures.empty()) {
    auto out = open("failures.csv");
    out << "image,cell,message\n";
    for (const auto& f : report.failures) {
      std::string msg = f.message;
      std::replace(msg.begin(), msg.end(), ',', ';');
      out << f.image << ',' << f.cell << ',' << msg << '\n';
    }
  }
  if (with_dat) {
    auto out = open("rd_curves.dat");
    write_rd_dat(out, report);
  }
}

RDCurve read_rd_curve(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
  const ColumnIndex cols(split_csv_line(line));
  const bool layered = !cols.has("rate");
  if (layered && !(cols.has("bl_rate") && cols.has("el_rate"))) {
    throw InputError(path.string() + ": need a rate column or bl_rate and el_rate");
  }
  std::vector<RDPoint> points;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    const double rate = layered ? parse_number(cols.get(f, "bl_rate")) +
                                      parse_number(cols.get(f, "el_rate"))
                                : parse_number(cols.get(f, "rate"));
    points.push_back({rate, parse_number(cols.get(f, "psnr"))});
  }
  return sorted_curve(std::move(points));
}

}  // namespace epitome
