// Command-line front end: epitome generation, restoration, the two-layer
// pipeline, grid sweeps and BD-rate evaluation.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include "epitome/artifact.hpp"
#include "epitome/experiment.hpp"
#include "epitome/fixtures.hpp"
#include "epitome/parallel.hpp"
#include "epitome/pgm.hpp"
#include "epitome/pipeline.hpp"
#include "epitome/resample.hpp"

namespace fs = std::filesystem;
using namespace epitome;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct Globals {
  int threads = 0;
  std::uint64_t seed = 1;
};

ImagePlane load_cropped(const fs::path& path, int multiple) {
  const ImagePlane raw = read_pnm(path);
  ImagePlane img = crop_to_multiple(raw, multiple);
  if (!img.same_shape(raw)) {
    std::cerr << "note: " << path.string() << " cropped from " << raw.width() << "x"
              << raw.height() << " to " << img.width() << "x" << img.height() << "\n";
  }
  return img;
}

void write_json_file(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void add_restoration_options(CLI::App* cmd, RestorationParams& params, std::string& method) {
  cmd->add_option("--method", method, "e-lle or e-llm")->capture_default_str();
  cmd->add_option("-K,--neighbors", params.neighbors, "Nearest neighbors per patch")
      ->capture_default_str();
  cmd->add_option("--patch-size", params.patch_size, "Restoration patch size N")
      ->capture_default_str();
  cmd->add_option("--step", params.step, "Patch lattice step s")->capture_default_str();
  cmd->add_option("--lambda", params.lambda, "Tikhonov weight (relative)")
      ->capture_default_str();
}

// --- epitome --------------------------------------------------------------

struct EpitomeArgs {
  fs::path image;
  double eps_m = 25.0;
  int block_size = 8;
  int codec_block = 8;
  fs::path out_dir = ".";
  fs::path save_matches;
  fs::path load_matches;
};

int run_epitome(const EpitomeArgs& a, const Globals& g) {
  const ImagePlane img = load_cropped(a.image, std::lcm(a.block_size, a.codec_block));
  EpitomeOptions options;
  options.block_size = a.block_size;
  options.codec_block = a.codec_block;
  options.similarity.matching_threshold = a.eps_m;
  options.similarity.threads = g.threads;

  MatchLists ml;
  if (!a.load_matches.empty()) {
    ml = load_match_lists(a.load_matches, img);
  } else {
    ml = find_self_similarities(img, BlockGrid(img.width(), img.height(), a.block_size),
                                options.similarity);
  }
  fs::create_directories(a.out_dir);
  if (!a.save_matches.empty()) save_match_lists(ml, a.save_matches);

  const GeneratedEpitome generated = generate_epitome(img, ml, options);
  const EpitomeArtifact artifact = make_artifact(generated, options);
  save_artifact(artifact, a.out_dir / "epitome_mask.pgm", a.out_dir / "epitome.json");

  nlohmann::json summary{{"width", img.width()},
                         {"height", img.height()},
                         {"eps_m", a.eps_m},
                         {"block_size", a.block_size},
                         {"charts", generated.padded.charts.size()},
                         {"epitome_fraction", generated.padded.fraction()},
                         {"grown_fraction", generated.grown.epitome.fraction()},
                         {"reconstruction_mse", generated.reconstruction_mse},
                         {"match_count", ml.total_matches()}};
  std::cout << summary.dump(2) << '\n';
  return 0;
}

// --- restore --------------------------------------------------------------

struct RestoreArgs {
  fs::path bl;
  fs::path el;
  fs::path mask;
  fs::path meta;
  fs::path out = "restored.pgm";
  fs::path diagnostics;
  std::string method = "e-lle";
  RestorationParams params;
};

int run_restore(RestoreArgs a, const Globals& g) {
  const ImagePlane el = read_pnm(a.el);
  Mask mask;
  if (!a.meta.empty()) {
    mask = load_artifact(a.mask, a.meta).mask;
  } else {
    mask = read_mask_pgm(a.mask);
  }
  ImagePlane bl = read_pnm(a.bl);
  if (bl.width() * 2 == el.width() && bl.height() * 2 == el.height()) {
    bl = upsample_2x(bl);
  } else if (!bl.same_shape(el)) {
    throw ShapeError("restore: base layer must be half or full enhancement size");
  }
  a.params.method = parse_method(a.method);
  a.params.threads = g.threads;

  RestorationReport report;
  const ImagePlane restored =
      restore_el(bl, el, mask, a.params, &report, !a.diagnostics.empty());
  write_pgm(a.out, restored);

  if (!a.diagnostics.empty()) {
    std::ofstream out(a.diagnostics);
    if (!out) throw InputError("cannot write " + a.diagnostics.string());
    out << "row,col,method,distances\n";
    for (const auto& d : report.diagnostics) {
      out << d.origin.row << ',' << d.origin.col << ',' << to_string(d.method) << ',';
      for (std::size_t i = 0; i < d.distances.size(); ++i) {
        out << (i ? ";" : "") << format_number(d.distances[i]);
      }
      out << '\n';
    }
  }
  std::cout << nlohmann::json{{"restored_patches", report.processed_patches},
                              {"degraded_patches", report.degraded_patches},
                              {"skipped_patches", report.skipped_patches}}
                   .dump(2)
            << '\n';
  return 0;
}

// --- pipeline -------------------------------------------------------------

struct PipelineArgs {
  fs::path image;
  double eps_m = 25.0;
  double qstep = 8.0;
  int block_size = 8;
  int transform_block = 8;
  fs::path mask;
  fs::path out_dir = "pipeline_out";
  std::string method = "e-lle";
  RestorationParams params;
};

int run_pipeline_cmd(PipelineArgs a, const Globals& g) {
  const ImagePlane img =
      load_cropped(a.image, std::lcm(2 * a.transform_block, a.block_size));
  const CodecConfig cfg{a.qstep, a.transform_block};
  a.params.method = parse_method(a.method);
  a.params.threads = g.threads;

  Mask mask;
  if (!a.mask.empty()) {
    mask = read_mask_pgm(a.mask);
  } else {
    EpitomeOptions options;
    options.block_size = a.block_size;
    options.codec_block = a.transform_block;
    options.similarity.matching_threshold = a.eps_m;
    options.similarity.threads = g.threads;
    mask = generate_epitome(img, options).padded.mask();
  }
  const PipelineResult result = run_pipeline(img, mask, cfg, a.params);

  fs::create_directories(a.out_dir);
  write_pgm(a.out_dir / "bl_decoded.pgm", result.decoded_bl);
  write_pgm(a.out_dir / "bl_up.pgm", result.bl_up);
  write_pgm(a.out_dir / "el_epitome.pgm", result.el_epitome_plane);
  write_pgm(a.out_dir / "restored_el.pgm", result.restored_el);
  write_mask_pgm(a.out_dir / "epitome_mask.pgm", result.epitome_mask);
  nlohmann::json stats = stats_to_json(result);
  stats["eps_m"] = a.mask.empty() ? nlohmann::json(a.eps_m) : nlohmann::json(nullptr);
  stats["quant_step"] = a.qstep;
  stats["method"] = std::string(to_string(a.params.method));
  write_json_file(stats, a.out_dir / "stats.json");
  std::cout << stats.dump(2) << '\n';
  return 0;
}

// --- sweep ----------------------------------------------------------------

struct SweepArgs {
  std::vector<fs::path> images;
  std::vector<double> eps_m{25.0};
  std::vector<double> qsteps{4.0, 8.0, 16.0, 32.0};
  std::vector<std::string> methods{"e-lle", "e-llm"};
  fs::path out_dir = "sweep_out";
  bool dat = false;
  bool full_control = false;
  RestorationParams params;
};

int run_sweep(const SweepArgs& a, const Globals& g) {
  ExperimentGrid grid;
  grid.thresholds = a.eps_m;
  grid.quant_steps = a.qsteps;
  grid.methods.clear();
  for (const auto& m : a.methods) grid.methods.push_back(parse_method(m));
  grid.restoration = a.params;
  grid.full_control = a.full_control;
  grid.threads = g.threads;

  std::vector<NamedImage> images;
  for (const auto& p : a.images) images.push_back({p.stem().string(), read_pnm(p)});
  const GridReport report = run_grid(images, grid);
  write_grid_outputs(report, a.out_dir, a.dat);

  for (const auto& f : report.failures) {
    std::cerr << "failed: " << f.image << " " << f.cell << ": " << f.message << "\n";
  }
  for (const auto& s : report.summary) {
    std::printf("%s eps_m=%s (%.1f%%) %s: ", s.image.c_str(),
                s.eps_m ? format_number(*s.eps_m).c_str() : "full", s.epitome_pct,
                std::string(to_string(s.method)).c_str());
    if (s.bd_rate) {
      std::printf("%.2f%%\n", *s.bd_rate);
    } else {
      std::printf("n/a (%s)\n", s.note.c_str());
    }
  }
  return 0;
}

// --- bdrate / synth ---------------------------------------------------------

int run_bdrate(const fs::path& test, const fs::path& reference) {
  const RDCurve t = read_rd_curve(test);
  const RDCurve r = read_rd_curve(reference);
  for (const auto& w : t.warnings()) std::cerr << "warning: " << test.string() << ": " << w << "\n";
  for (const auto& w : r.warnings()) std::cerr << "warning: " << reference.string() << ": " << w << "\n";
  std::printf("%.2f\n", bd_rate(t, r));
  return 0;
}

int run_synth(const std::string& kind, int width, int height, int period,
              const fs::path& out, const Globals& g) {
  if (height <= 0) height = width;
  ImagePlane img;
  if (kind == "constant") {
    img = constant_fixture(width, height);
  } else if (kind == "periodic") {
    img = periodic_fixture(width, height, period, g.seed);
  } else if (kind == "noise") {
    img = noise_fixture(width, height, g.seed);
  } else if (kind == "city") {
    img = smooth_periodic_fixture(width, height, period, 1.0, g.seed);
  } else if (kind == "texture") {
    img = texture_fixture(width, height, g.seed);
  } else {
    throw InputError("synth: unknown fixture '" + kind + "'");
  }
  write_pgm(out, img);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Epitome-based scalable image coding toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  Globals g;
  app.add_option("--threads", g.threads, "Worker threads (default: EPITOME_THREADS or all cores)");
  app.add_option("--seed", g.seed, "Seed for synthetic fixtures")->capture_default_str();

  EpitomeArgs ea;
  auto* epi = app.add_subcommand("epitome", "Generate an epitome and write mask + metadata");
  epi->add_option("image", ea.image, "Input PGM/PPM")->required()->check(CLI::ExistingFile);
  epi->add_option("--eps-m", ea.eps_m, "Matching threshold (MSE)")->capture_default_str();
  epi->add_option("--block-size", ea.block_size, "Epitome block size")->capture_default_str();
  epi->add_option("--codec-block", ea.codec_block, "Padding block size")->capture_default_str();
  epi->add_option("--out-dir", ea.out_dir, "Output directory")->capture_default_str();
  epi->add_option("--save-matches", ea.save_matches, "Write match lists sidecar JSON");
  epi->add_option("--load-matches", ea.load_matches, "Reuse a match lists sidecar JSON")
      ->check(CLI::ExistingFile);

  RestoreArgs ra;
  auto* res = app.add_subcommand("restore", "Restore the non-epitome part of an EL");
  res->add_option("--bl", ra.bl, "Decoded base layer (half or full size)")
      ->required()->check(CLI::ExistingFile);
  res->add_option("--el", ra.el, "EL plane holding the decoded epitome")
      ->required()->check(CLI::ExistingFile);
  res->add_option("--mask", ra.mask, "Epitome mask PGM")->required()->check(CLI::ExistingFile);
  res->add_option("--meta", ra.meta, "Epitome metadata JSON")->check(CLI::ExistingFile);
  res->add_option("-o,--out", ra.out, "Restored EL PGM")->capture_default_str();
  res->add_option("--diagnostics", ra.diagnostics, "Per-patch diagnostics CSV");
  add_restoration_options(res, ra.params, ra.method);

  PipelineArgs pa;
  auto* pipe = app.add_subcommand("pipeline", "Single two-layer coding run");
  pipe->add_option("image", pa.image, "Input PGM/PPM")->required()->check(CLI::ExistingFile);
  pipe->add_option("--eps-m", pa.eps_m, "Matching threshold (MSE)")->capture_default_str();
  pipe->add_option("--qstep", pa.qstep, "Quantization step")->capture_default_str();
  pipe->add_option("--block-size", pa.block_size, "Epitome block size")->capture_default_str();
  pipe->add_option("--transform-block", pa.transform_block, "Codec transform block")
      ->capture_default_str();
  pipe->add_option("--mask", pa.mask, "Use this epitome mask instead of generating one")
      ->check(CLI::ExistingFile);
  pipe->add_option("--out-dir", pa.out_dir, "Output directory")->capture_default_str();
  add_restoration_options(pipe, pa.params, pa.method);

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep", "Run an eps_m x quant_step x method grid");
  sweep->add_option("images", sa.images, "Input images")->required()->check(CLI::ExistingFile);
  sweep->add_option("--eps-m", sa.eps_m, "Matching thresholds")->capture_default_str();
  sweep->add_option("--qsteps", sa.qsteps, "Quantization steps")->capture_default_str();
  sweep->add_option("--methods", sa.methods, "Restoration methods")->capture_default_str();
  sweep->add_option("--out-dir", sa.out_dir, "Output directory")->capture_default_str();
  sweep->add_flag("--dat", sa.dat, "Also write rd_curves.dat for gnuplot");
  sweep->add_flag("--full-control", sa.full_control, "Add a 100% epitome control column");
  sweep->add_option("-K,--neighbors", sa.params.neighbors, "Nearest neighbors per patch")
      ->capture_default_str();
  sweep->add_option("--lambda", sa.params.lambda, "Tikhonov weight (relative)")
      ->capture_default_str();

  fs::path bd_test, bd_ref;
  auto* bd = app.add_subcommand("bdrate", "BD-rate (%) of a test RD curve against a reference");
  bd->add_option("test", bd_test, "Test curve CSV")->required()->check(CLI::ExistingFile);
  bd->add_option("reference", bd_ref, "Reference curve CSV")->required()->check(CLI::ExistingFile);

  std::string synth_kind;
  int synth_w = 256, synth_h = 0, synth_period = 12;
  fs::path synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic test image");
  synth->add_option("kind", synth_kind, "constant | periodic | city | noise | texture")->required();
  synth->add_option("-o,--out", synth_out, "Output PGM")->required();
  synth->add_option("--width", synth_w, "Width")->capture_default_str();
  synth->add_option("--height", synth_h, "Height (default: width)");
  synth->add_option("--period", synth_period, "Tile period for 'periodic' and 'city'")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitInput;
  }

  try {
    g.threads = resolve_threads(g.threads);
    if (*epi) return run_epitome(ea, g);
    if (*res) return run_restore(ra, g);
    if (*pipe) return run_pipeline_cmd(pa, g);
    if (*sweep) return run_sweep(sa, g);
    if (*bd) return run_bdrate(bd_test, bd_ref);
    if (*synth) return run_synth(synth_kind, synth_w, synth_h, synth_period, synth_out, g);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const EvaluationError& e) {
    std::cerr << "evaluation error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {  // ShapeError and parameter checks
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::out_of_range& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const IntegrityError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
