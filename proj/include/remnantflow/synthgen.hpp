#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "remnantflow/geometry.hpp"
#include "remnantflow/image.hpp"

namespace rf {

enum class Texture { flat, brushed, speckled };

/// One concrete remnant: geometry plus render parameters.
struct RemnantSpec {
  Polygon outer_polygon;
  std::vector<Polygon> holes;
  Texture texture = Texture::flat;
  Eigen::Vector2d lighting_gradient = Eigen::Vector2d::Zero();  // shade change per px
  double noise_sigma = 0.0;
  double background_shade = 0.2;
  double material_shade = 0.75;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Sampling ranges for generate_remnant. Every sampled RemnantSpec is drawn
/// from these; `forced_*` fields pin a value when set.
struct SynthConfig {
  Index rows = 256;
  Index cols = 256;
  std::pair<int, int> vertex_count{8, 24};
  std::pair<int, int> hole_count{0, 3};
  std::pair<int, int> bite_count{0, 2};
  Range radius_fraction{0.25, 0.42};   // outer base radius / min(rows, cols)
  Range radial_jitter{0.0, 0.22};      // relative vertex radius perturbation
  Range hole_radius_fraction{0.04, 0.09};
  std::vector<Texture> textures{Texture::flat, Texture::brushed, Texture::speckled};
  double gradient_max = 0.0015;        // |slope| per px, per axis
  Range noise_sigma{0.0, 0.06};
  Range background_shade{0.05, 0.35};
  Range material_shade{0.6, 0.95};
  Range foreground_band{0.15, 0.85};
  int max_attempts = 200;

  void validate() const;
};

struct SamplePair {
  RasterImage photo;  // three channels
  BinaryMask mask;
  std::int64_t spec_seed = 0;
  std::string id;

  friend bool operator==(const SamplePair& a, const SamplePair& b) {
    return a.id == b.id && a.spec_seed == b.spec_seed && a.photo == b.photo &&
           a.mask.rows() == b.mask.rows() && a.mask.cols() == b.mask.cols() && (a.mask == b.mask).all();
  }
};

/// Draws a RemnantSpec satisfying all geometric invariants and the foreground
/// band. Throws ErrorKind::generation_failed naming the most frequent
/// violated constraint after `max_attempts` rejections.
RemnantSpec sample_remnant_spec(std::int64_t seed, const SynthConfig& config);

BinaryMask rasterize_remnant(const RemnantSpec& spec, Index rows, Index cols);

/// Texture + lighting + clamped Gaussian noise. The noise field is drawn from
/// `noise_seed` as unit normals scaled by spec.noise_sigma, so changing sigma
/// at a fixed seed rescales one fixed field.
RasterImage render_photo(const RemnantSpec& spec, const BinaryMask& mask, std::int64_t noise_seed);

SamplePair generate_remnant(std::int64_t seed, const SynthConfig& config);

enum class Split { train, val, test };
std::string to_string(Split split);
Split split_from_string(const std::string& text);

struct ManifestEntry {
  std::string id;
  std::string photo;  // relative to the manifest directory unless absolute
  std::string mask;
  Split split = Split::train;
  std::int64_t seed = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::string root;
  std::string created_with;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;  // where relative entry paths resolve; not serialized

  std::filesystem::path photo_path(const ManifestEntry& e) const;
  std::filesystem::path mask_path(const ManifestEntry& e) const;
  std::vector<ManifestEntry> split(Split s) const;

  friend bool operator==(const DatasetManifest& a, const DatasetManifest& b) {
    return a.root == b.root && a.created_with == b.created_with && a.entries == b.entries;
  }
};

nlohmann::json to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const nlohmann::json& j);

/// Hex digest of the canonical JSON form of `config`.
std::string config_hash(const SynthConfig& config);

/// Floor-partitions n; the remainder goes to train. Throws validation when
/// ratios do not sum to 1 or a non-zero ratio yields an empty split.
std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& ratios);

/// Writes photos/<id>.png, masks/<id>.png and manifest.json under `out`.
/// Entry i uses seed base_seed + i.
DatasetManifest generate_dataset(std::size_t n, const SynthConfig& config, const std::array<double, 3>& ratios,
                                 const std::filesystem::path& out, std::int64_t base_seed = 0);

std::string manifest_to_json(const DatasetManifest& manifest);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
/// Validates unique ids, existing files and a known split per entry.
DatasetManifest load_manifest(const std::filesystem::path& path);

}  // namespace rf
