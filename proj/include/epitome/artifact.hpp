#pragma once

#include <json.hpp>

#include <filesystem>

#include "epitome/epitome.hpp"

namespace epitome {

/// Epitome as stored on disk: the (padded) mask plus its metadata.
struct EpitomeArtifact {
  int width = 0;
  int height = 0;
  int block_size = 0;
  int codec_block = 0;
  double eps_m = 0.0;
  double epitome_fraction = 0.0;  // percent, padded mask
  Mask mask;
  std::vector<PixelRegion> charts;
  AssignationMap assignation;
};

EpitomeArtifact make_artifact(const GeneratedEpitome& generated,
                              const EpitomeOptions& options);

nlohmann::json artifact_to_json(const EpitomeArtifact& artifact);

/// Writes the mask PGM and the JSON metadata.
void save_artifact(const EpitomeArtifact& artifact, const std::filesystem::path& mask_pgm,
                   const std::filesystem::path& metadata_json);

/// Throws InputError for unreadable or malformed files and IntegrityError
/// when mask and metadata disagree.
EpitomeArtifact load_artifact(const std::filesystem::path& mask_pgm,
                              const std::filesystem::path& metadata_json);

/// Match lists sidecar: {"width", "height", "block_size", "eps_m",
/// "lists": [[[row, col], ...], ...]}. MSE values are not stored; loading
/// recomputes them from `image`.
nlohmann::json match_lists_to_json(const MatchLists& ml);
MatchLists match_lists_from_json(const nlohmann::json& j, const ImagePlane& image);

void save_match_lists(const MatchLists& ml, const std::filesystem::path& path);
MatchLists load_match_lists(const std::filesystem::path& path, const ImagePlane& image);

}  // namespace epitome
