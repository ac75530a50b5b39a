#include "epitome/artifact.hpp"

#include <fstream>

#include "epitome/codec.hpp"
#include "epitome/pgm.hpp"

namespace epitome {
namespace {

using nlohmann::json;

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json origin_json(Origin o) { return json::array({o.row, o.col}); }

Origin origin_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InputError("origin must be [row, col]");
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

EpitomeArtifact make_artifact(const GeneratedEpitome& generated,
                              const EpitomeOptions& options) {
  EpitomeArtifact a;
  a.width = generated.padded.width();
  a.height = generated.padded.height();
  a.block_size = options.block_size;
  a.codec_block = options.codec_block;
  a.eps_m = options.similarity.matching_threshold;
  a.epitome_fraction = generated.padded.fraction();
  a.mask = generated.padded.mask();
  for (const auto& chart : generated.padded.charts) a.charts.push_back(chart.bounds);
  a.assignation = generated.grown.assignation;
  return a;
}

json artifact_to_json(const EpitomeArtifact& a) {
  json charts = json::array();
  for (const auto& c : a.charts) {
    charts.push_back({{"row", c.top()}, {"col", c.left()},
                      {"height", c.height}, {"width", c.width}});
  }
  json assignation = json::array();
  for (const auto& p : a.assignation.patches) {
    assignation.push_back(p ? origin_json(*p) : json(nullptr));
  }
  return {{"width", a.width},
          {"height", a.height},
          {"block_size", a.block_size},
          {"codec_block", a.codec_block},
          {"eps_m", a.eps_m},
          {"epitome_fraction", a.epitome_fraction},
          {"charts", charts},
          {"assignation", assignation}};
}

void save_artifact(const EpitomeArtifact& artifact, const std::filesystem::path& mask_pgm,
                   const std::filesystem::path& metadata_json) {
  write_mask_pgm(mask_pgm, artifact.mask);
  write_json(artifact_to_json(artifact), metadata_json);
}

EpitomeArtifact load_artifact(const std::filesystem::path& mask_pgm,
                              const std::filesystem::path& metadata_json) {
  const json j = read_json(metadata_json);
  EpitomeArtifact a;
  try {
    a.width = j.at("width").get<int>();
    a.height = j.at("height").get<int>();
    a.block_size = j.at("block_size").get<int>();
    a.codec_block = j.at("codec_block").get<int>();
    a.eps_m = j.at("eps_m").get<double>();
    a.epitome_fraction = j.value("epitome_fraction", 0.0);
    for (const auto& c : j.at("charts")) {
      a.charts.push_back({{c.at("row").get<int>(), c.at("col").get<int>()},
                          c.at("height").get<int>(), c.at("width").get<int>()});
    }
    a.assignation.block_size = a.block_size;
    for (const auto& p : j.at("assignation")) {
      a.assignation.patches.push_back(p.is_null() ? std::nullopt
                                                  : std::optional<Origin>(origin_from(p)));
    }
  } catch (const json::exception& e) {
    throw InputError(metadata_json.string() + ": " + e.what());
  }
  a.mask = read_mask_pgm(mask_pgm);
  if (a.mask.rows() != a.height || a.mask.cols() != a.width) {
    throw IntegrityError("epitome artifact: mask size differs from metadata");
  }
  if (!is_block_aligned(a.mask, a.codec_block)) {
    throw IntegrityError("epitome artifact: mask is not aligned to the codec block");
  }
  return a;
}

json match_lists_to_json(const MatchLists& ml) {
  json lists = json::array();
  for (const auto& list : ml.lists) {
    json entry = json::array();
    for (const auto& m : list) entry.push_back(origin_json(m.origin));
    lists.push_back(std::move(entry));
  }
  return {{"width", ml.width},
          {"height", ml.height},
          {"block_size", ml.block_size},
          {"eps_m", ml.threshold},
          {"lists", lists}};
}

MatchLists match_lists_from_json(const json& j, const ImagePlane& image) {
  MatchLists ml;
  try {
    ml.width = j.at("width").get<int>();
    ml.height = j.at("height").get<int>();
    ml.block_size = j.at("block_size").get<int>();
    ml.threshold = j.at("eps_m").get<double>();
    if (ml.width != image.width() || ml.height != image.height()) {
      throw ShapeError("match lists: sidecar was built for another image size");
    }
    const BlockGrid grid(ml.width, ml.height, ml.block_size);
    const auto& lists = j.at("lists");
    if (static_cast<int>(lists.size()) != grid.count()) {
      throw IntegrityError("match lists: block count differs from the grid");
    }
    const double area = static_cast<double>(ml.block_size) * ml.block_size;
    for (int b = 0; b < grid.count(); ++b) {
      std::vector<PatchMatch> list;
      for (const auto& o : lists[static_cast<std::size_t>(b)]) {
        const Origin origin = origin_from(o);
        if (origin.row < 0 || origin.col < 0 || origin.row + ml.block_size > ml.height ||
            origin.col + ml.block_size > ml.width) {
          throw RangeError("match lists: patch outside the image");
        }
        const double sse = region_sse(image, grid.origin(b), origin, ml.block_size,
                                      std::numeric_limits<double>::infinity());
        list.push_back({origin, sse / area});
      }
      ml.lists.push_back(std::move(list));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("match lists: ") + e.what());
  }
  return ml;
}

void save_match_lists(const MatchLists& ml, const std::filesystem::path& path) {
  write_json(match_lists_to_json(ml), path);
}

MatchLists load_match_lists(const std::filesystem::path& path, const ImagePlane& image) {
  return match_lists_from_json(read_json(path), image);
}

}  // namespace epitome
