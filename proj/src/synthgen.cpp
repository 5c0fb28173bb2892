#include "remnantflow/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "remnantflow/png_io.hpp"

namespace rf {
namespace {

using Rng = std::mt19937_64;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kHoleMargin = 2.0;  // px between hole and outer boundary / other holes
constexpr double kMinContrast = 0.25;

double uniform(Rng& rng, double lo, double hi) {
  if (hi <= lo) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double uniform(Rng& rng, const Range& r) { return uniform(rng, r.lo, r.hi); }

int uniform_int(Rng& rng, std::pair<int, int> r) {
  return std::uniform_int_distribution<int>(r.first, std::max(r.first, r.second))(rng);
}

Rng seeded(std::int64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(static_cast<std::uint64_t>(seed) >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

struct Bite {
  double angle;
  double distance;  // bite circle center distance from the shape center
  double radius;
};

/// Radius along `theta` of the star polygon with vertices at sorted `angles`.
double star_radius(const std::vector<double>& angles, const std::vector<double>& radii, double theta) {
  const std::size_t n = angles.size();
  std::size_t k = n - 1;
  for (std::size_t i = 0; i < n; ++i)
    if (angles[i] <= theta) k = i;
  const std::size_t k1 = (k + 1) % n;
  const Eigen::Vector2d p0 = radii[k] * Eigen::Vector2d(std::cos(angles[k]), std::sin(angles[k]));
  const Eigen::Vector2d p1 = radii[k1] * Eigen::Vector2d(std::cos(angles[k1]), std::sin(angles[k1]));
  const Eigen::Vector2d dir(std::cos(theta), std::sin(theta));
  // Solve t * dir = p0 + s * (p1 - p0).
  Eigen::Matrix2d m;
  m << dir, p0 - p1;
  return m.colPivHouseholderQr().solve(p0)(0);
}

/// Entry distance of the ray at `theta` into the bite circle, or +inf.
double bite_entry(const Bite& bite, double theta) {
  const double delta = theta - bite.angle;
  const double perp = bite.distance * std::sin(delta);
  const double along = bite.distance * std::cos(delta);
  if (std::abs(perp) >= bite.radius || along <= 0) return std::numeric_limits<double>::infinity();
  return along - std::sqrt(bite.radius * bite.radius - perp * perp);
}

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0 ? a + kTwoPi : a;
}

Polygon make_outer(Rng& rng, const SynthConfig& config, std::string& violation) {
  const double min_dim = static_cast<double>(std::min(config.rows, config.cols));
  const double base_radius = uniform(rng, config.radius_fraction) * min_dim;
  const Eigen::Vector2d center((config.cols - 1) / 2.0 + uniform(rng, -0.06, 0.06) * min_dim,
                               (config.rows - 1) / 2.0 + uniform(rng, -0.06, 0.06) * min_dim);
  const int n = uniform_int(rng, config.vertex_count);
  const double jitter = uniform(rng, config.radial_jitter);
  const double phase = uniform(rng, 0.0, kTwoPi);
  std::vector<double> angles(n), radii(n);
  for (int k = 0; k < n; ++k) {
    angles[k] = wrap_angle(phase + kTwoPi * (k + uniform(rng, -0.35, 0.35)) / n);
    radii[k] = base_radius * (1.0 + uniform(rng, -jitter, jitter));
  }
  // Keep (angle, radius) pairs aligned while sorting by angle.
  std::vector<std::size_t> order(n);
  for (int k = 0; k < n; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return angles[a] < angles[b]; });
  std::vector<double> sa(n), sr(n);
  for (int k = 0; k < n; ++k) sa[k] = angles[order[k]], sr[k] = radii[order[k]];

  std::vector<Bite> bites;
  const int bite_count = uniform_int(rng, config.bite_count);
  for (int b = 0; b < bite_count; ++b) {
    Bite bite;
    bite.angle = uniform(rng, 0.0, kTwoPi);
    bite.radius = uniform(rng, 0.15, 0.35) * base_radius;
    bite.distance = star_radius(sa, sr, bite.angle) + bite.radius * uniform(rng, -0.5, 0.3);
    bites.push_back(bite);
  }

  std::vector<double> sample_angles = sa;
  for (const auto& bite : bites) {
    if (bite.distance <= bite.radius) {
      violation = "arc bite reaches the shape center";
      return {};
    }
    const double half_width = std::asin(bite.radius / bite.distance);
    constexpr int kArcSamples = 16;
    for (int i = 0; i <= kArcSamples; ++i)
      sample_angles.push_back(wrap_angle(bite.angle - half_width + 2.0 * half_width * i / kArcSamples));
  }
  std::sort(sample_angles.begin(), sample_angles.end());
  sample_angles.erase(std::unique(sample_angles.begin(), sample_angles.end(),
                                  [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                      sample_angles.end());

  Polygon outer;
  for (double theta : sample_angles) {
    double r = star_radius(sa, sr, theta);
    for (const auto& bite : bites) r = std::min(r, bite_entry(bite, theta));
    if (r < 0.35 * base_radius) {
      violation = "arc bite reaches the shape center";
      return {};
    }
    outer.emplace_back(center + r * Eigen::Vector2d(std::cos(theta), std::sin(theta)));
  }
  if (signed_area(outer) < 0) std::reverse(outer.begin(), outer.end());
  return outer;
}

double min_edge_distance(const Polygon& ring, const Point2d& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++)
    best = std::min(best, point_segment_distance(p, ring[j], ring[i]));
  return best;
}

struct HoleShape {
  Polygon ring;
  Point2d center;
  double circumradius;
};

HoleShape make_hole(Rng& rng, const SynthConfig& config, const Point2d& center) {
  const double min_dim = static_cast<double>(std::min(config.rows, config.cols));
  const double radius = uniform(rng, config.hole_radius_fraction) * min_dim;
  HoleShape hole{{}, center, radius};
  if (uniform(rng, 0.0, 1.0) < 0.5) {
    constexpr int kCircleVertices = 32;
    for (int k = 0; k < kCircleVertices; ++k) {
      const double t = kTwoPi * k / kCircleVertices;
      hole.ring.emplace_back(center + radius * Eigen::Vector2d(std::cos(t), std::sin(t)));
    }
  } else {
    const double a = radius * uniform(rng, 0.6, 1.0);
    const double b = radius * uniform(rng, 0.4, 1.0);
    const double rot = uniform(rng, 0.0, std::numbers::pi);
    const Eigen::Rotation2Dd rotation(rot);
    for (const auto& corner : {Eigen::Vector2d(-a, -b), Eigen::Vector2d(a, -b), Eigen::Vector2d(a, b),
                               Eigen::Vector2d(-a, b)})
      hole.ring.emplace_back(center + rotation * corner);
    hole.circumradius = std::hypot(a, b);
  }
  // Holes are clockwise (negative signed area).
  if (signed_area(hole.ring) > 0) std::reverse(hole.ring.begin(), hole.ring.end());
  return hole;
}

bool hole_fits(const HoleShape& hole, const Polygon& outer, const std::vector<HoleShape>& placed) {
  for (const auto& v : hole.ring)
    if (!contains(outer, v) || min_edge_distance(outer, v) <= kHoleMargin) return false;
  for (std::size_t i = 0, j = hole.ring.size() - 1; i < hole.ring.size(); j = i++)
    for (std::size_t k = 0, l = outer.size() - 1; k < outer.size(); l = k++)
      if (segments_intersect(hole.ring[j], hole.ring[i], outer[l], outer[k])) return false;
  for (const auto& other : placed)
    if ((hole.center - other.center).norm() <= hole.circumradius + other.circumradius + kHoleMargin) return false;
  return true;
}

std::optional<RemnantSpec> sample_once(Rng& rng, const SynthConfig& config, std::string& violation) {
  RemnantSpec spec;
  spec.outer_polygon = make_outer(rng, config, violation);
  if (spec.outer_polygon.empty()) return std::nullopt;

  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : spec.outer_polygon) centroid += p;
  centroid /= static_cast<double>(spec.outer_polygon.size());
  double inner_radius = std::numeric_limits<double>::infinity();
  for (const auto& p : spec.outer_polygon) inner_radius = std::min(inner_radius, (p - centroid).norm());

  const int hole_count = uniform_int(rng, config.hole_count);
  std::vector<HoleShape> placed;
  for (int h = 0; h < hole_count; ++h) {
    bool ok = false;
    for (int tries = 0; tries < 40 && !ok; ++tries) {
      const double t = uniform(rng, 0.0, kTwoPi);
      const double d = uniform(rng, 0.0, 0.75) * inner_radius;
      HoleShape hole = make_hole(rng, config, centroid + d * Eigen::Vector2d(std::cos(t), std::sin(t)));
      if (hole_fits(hole, spec.outer_polygon, placed)) {
        placed.push_back(std::move(hole));
        ok = true;
      }
    }
    if (!ok) {
      violation = "holes must lie strictly inside the outer polygon and be pairwise disjoint";
      return std::nullopt;
    }
  }
  for (auto& hole : placed) spec.holes.push_back(std::move(hole.ring));

  spec.texture = config.textures[std::uniform_int_distribution<std::size_t>(0, config.textures.size() - 1)(rng)];
  spec.lighting_gradient = Eigen::Vector2d(uniform(rng, -config.gradient_max, config.gradient_max),
                                           uniform(rng, -config.gradient_max, config.gradient_max));
  spec.noise_sigma = uniform(rng, config.noise_sigma);
  spec.background_shade = uniform(rng, config.background_shade);
  spec.material_shade = uniform(rng, config.material_shade);
  if (std::abs(spec.material_shade - spec.background_shade) < kMinContrast) {
    violation = "material/background shade contrast below 0.25";
    return std::nullopt;
  }

  const BinaryMask mask = rasterize_remnant(spec, config.rows, config.cols);
  const double fraction = static_cast<double>(mask.count()) / static_cast<double>(mask.size());
  if (fraction <= config.foreground_band.lo || fraction >= config.foreground_band.hi ||
      fraction <= 0.0 || fraction >= 1.0) {
    violation = "foreground fraction outside the configured band";
    return std::nullopt;
  }
  return spec;
}

void check_range(const Range& r, double lo, double hi, const char* name) {
  if (!(r.lo <= r.hi) || r.lo < lo || r.hi > hi)
    throw Error(ErrorKind::validation, std::string("synth config range out of bounds: ") + name, name);
}

const char* texture_name(Texture t) {
  switch (t) {
    case Texture::flat: return "flat";
    case Texture::brushed: return "brushed";
    case Texture::speckled: return "speckled";
  }
  return "flat";
}

Texture texture_from_name(const std::string& s) {
  if (s == "flat") return Texture::flat;
  if (s == "brushed") return Texture::brushed;
  if (s == "speckled") return Texture::speckled;
  throw Error(ErrorKind::validation, "unknown texture '" + s + "'");
}

std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << v;
  return out.str();
}

}  // namespace

void SynthConfig::validate() const {
  if (rows < 8 || cols < 8) throw Error(ErrorKind::validation, "synth image must be at least 8x8");
  if (vertex_count.first < 3 || vertex_count.first > vertex_count.second)
    throw Error(ErrorKind::validation, "vertex_count range invalid", "vertex_count");
  if (hole_count.first < 0 || hole_count.first > hole_count.second)
    throw Error(ErrorKind::validation, "hole_count range invalid", "hole_count");
  if (bite_count.first < 0 || bite_count.first > bite_count.second)
    throw Error(ErrorKind::validation, "bite_count range invalid", "bite_count");
  check_range(radius_fraction, 0.01, 0.5, "radius_fraction");
  check_range(radial_jitter, 0.0, 0.5, "radial_jitter");
  check_range(hole_radius_fraction, 0.0, 0.5, "hole_radius_fraction");
  check_range(noise_sigma, 0.0, 0.3, "noise_sigma");
  check_range(background_shade, 0.0, 1.0, "background_shade");
  check_range(material_shade, 0.0, 1.0, "material_shade");
  check_range(foreground_band, 0.0, 1.0, "foreground_band");
  if (textures.empty()) throw Error(ErrorKind::validation, "at least one texture required", "textures");
  if (gradient_max < 0) throw Error(ErrorKind::validation, "gradient_max must be >= 0", "gradient_max");
  if (max_attempts < 1) throw Error(ErrorKind::validation, "max_attempts must be >= 1", "max_attempts");
}

RemnantSpec sample_remnant_spec(std::int64_t seed, const SynthConfig& config) {
  if (seed < 0) throw Error(ErrorKind::validation, "seed must be >= 0");
  config.validate();
  std::map<std::string, int> violations;
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    Rng rng = seeded(seed, static_cast<std::uint64_t>(attempt));
    std::string violation;
    if (auto spec = sample_once(rng, config, violation)) return *spec;
    ++violations[violation];
  }
  auto worst = std::max_element(violations.begin(), violations.end(),
                                [](const auto& a, const auto& b) { return a.second < b.second; });
  throw Error(ErrorKind::generation_failed,
              "remnant generation failed after " + std::to_string(config.max_attempts) +
                  " attempts; most frequent violated constraint: " + worst->first,
              worst->first);
}

BinaryMask rasterize_remnant(const RemnantSpec& spec, Index rows, Index cols) {
  std::vector<Polygon> rings{spec.outer_polygon};
  rings.insert(rings.end(), spec.holes.begin(), spec.holes.end());
  return rasterize(rings, rows, cols);
}

RasterImage render_photo(const RemnantSpec& spec, const BinaryMask& mask, std::int64_t noise_seed) {
  const Index rows = mask.rows(), cols = mask.cols();
  Rng texture_rng = seeded(noise_seed, 0x7e57);
  Plane<double> base(rows, cols);
  const double cx = (cols - 1) / 2.0, cy = (rows - 1) / 2.0;

  Plane<double> texture = Plane<double>::Zero(rows, cols);
  if (spec.texture == Texture::brushed) {
    const double direction = uniform(texture_rng, 0.0, std::numbers::pi);
    const double period = uniform(texture_rng, 3.0, 9.0);
    const double phase = uniform(texture_rng, 0.0, kTwoPi);
    const double amplitude = uniform(texture_rng, 0.03, 0.07);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) {
        const double u = c * std::cos(direction) + r * std::sin(direction);
        texture(r, c) = amplitude * std::sin(kTwoPi * u / period + phase);
      }
  } else if (spec.texture == Texture::speckled) {
    const double amplitude = uniform(texture_rng, 0.04, 0.09);
    const Index cell = 2;
    Plane<double> cells((rows + cell - 1) / cell, (cols + cell - 1) / cell);
    for (Index i = 0; i < cells.size(); ++i) cells.data()[i] = uniform(texture_rng, -1.0, 1.0);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) texture(r, c) = amplitude * cells(r / cell, c / cell);
  }

  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      const double shade = mask(r, c) ? spec.material_shade + texture(r, c) : spec.background_shade;
      base(r, c) = shade + spec.lighting_gradient.x() * (c - cx) + spec.lighting_gradient.y() * (r - cy);
    }

  Rng noise_rng = seeded(noise_seed, 0x9015e);
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  RasterImage photo(rows, cols, 3);
  for (Index ch = 0; ch < 3; ++ch) {
    auto& plane = photo.channel(ch);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) {
        const double z = unit_normal(noise_rng);
        plane(r, c) = std::clamp(base(r, c) + spec.noise_sigma * z, 0.0, 1.0);
      }
  }
  return photo;
}

SamplePair generate_remnant(std::int64_t seed, const SynthConfig& config) {
  const RemnantSpec spec = sample_remnant_spec(seed, config);
  SamplePair pair;
  pair.mask = rasterize_remnant(spec, config.rows, config.cols);
  pair.photo = render_photo(spec, pair.mask, seed);
  pair.spec_seed = seed;
  pair.id = "rem_s" + std::to_string(seed);
  return pair;
}

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  throw Error(ErrorKind::validation, "unknown split '" + text + "'");
}

std::filesystem::path DatasetManifest::photo_path(const ManifestEntry& e) const {
  const std::filesystem::path p(e.photo);
  return p.is_absolute() ? p : base_dir / p;
}

std::filesystem::path DatasetManifest::mask_path(const ManifestEntry& e) const {
  const std::filesystem::path p(e.mask);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<ManifestEntry> DatasetManifest::split(Split s) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(e);
  return out;
}

nlohmann::json to_json(const SynthConfig& c) {
  nlohmann::json textures = nlohmann::json::array();
  for (auto t : c.textures) textures.push_back(texture_name(t));
  auto range = [](const Range& r) { return nlohmann::json::array({r.lo, r.hi}); };
  return {
      {"rows", c.rows},
      {"cols", c.cols},
      {"vertex_count", {c.vertex_count.first, c.vertex_count.second}},
      {"hole_count", {c.hole_count.first, c.hole_count.second}},
      {"bite_count", {c.bite_count.first, c.bite_count.second}},
      {"radius_fraction", range(c.radius_fraction)},
      {"radial_jitter", range(c.radial_jitter)},
      {"hole_radius_fraction", range(c.hole_radius_fraction)},
      {"textures", textures},
      {"gradient_max", c.gradient_max},
      {"noise_sigma", range(c.noise_sigma)},
      {"background_shade", range(c.background_shade)},
      {"material_shade", range(c.material_shade)},
      {"foreground_band", range(c.foreground_band)},
      {"max_attempts", c.max_attempts},
  };
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  auto range = [&](const char* key, Range& r) {
    if (j.contains(key)) r = {j.at(key).at(0).get<double>(), j.at(key).at(1).get<double>()};
  };
  auto int_pair = [&](const char* key, std::pair<int, int>& p) {
    if (j.contains(key)) p = {j.at(key).at(0).get<int>(), j.at(key).at(1).get<int>()};
  };
  try {
    if (j.contains("rows")) c.rows = j.at("rows").get<Index>();
    if (j.contains("cols")) c.cols = j.at("cols").get<Index>();
    int_pair("vertex_count", c.vertex_count);
    int_pair("hole_count", c.hole_count);
    int_pair("bite_count", c.bite_count);
    range("radius_fraction", c.radius_fraction);
    range("radial_jitter", c.radial_jitter);
    range("hole_radius_fraction", c.hole_radius_fraction);
    if (j.contains("textures")) {
      c.textures.clear();
      for (const auto& t : j.at("textures")) c.textures.push_back(texture_from_name(t.get<std::string>()));
    }
    if (j.contains("gradient_max")) c.gradient_max = j.at("gradient_max").get<double>();
    range("noise_sigma", c.noise_sigma);
    range("background_shade", c.background_shade);
    range("material_shade", c.material_shade);
    range("foreground_band", c.foreground_band);
    if (j.contains("max_attempts")) c.max_attempts = j.at("max_attempts").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::validation, std::string("bad synth config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string config_hash(const SynthConfig& config) {
  const std::string canonical = to_json(config).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return "fnv1a64:" + hex64(h);
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& ratios) {
  double sum = 0.0;
  for (double r : ratios) {
    if (r < 0.0 || r > 1.0) throw Error(ErrorKind::validation, "split ratios must lie in [0, 1]");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::validation, "split ratios must sum to 1");
  if (n < 3) throw Error(ErrorKind::validation, "dataset needs n >= 3");
  std::array<std::size_t, 3> sizes{};
  sizes[1] = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios[1] + 1e-9));
  sizes[2] = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios[2] + 1e-9));
  sizes[0] = n - sizes[1] - sizes[2];
  static constexpr const char* kNames[] = {"train", "val", "test"};
  for (int s = 0; s < 3; ++s)
    if (ratios[s] > 0.0 && sizes[s] == 0)
      throw Error(ErrorKind::validation,
                  "n=" + std::to_string(n) + " too small to populate the " + kNames[s] + " split", kNames[s]);
  return sizes;
}

DatasetManifest generate_dataset(std::size_t n, const SynthConfig& config, const std::array<double, 3>& ratios,
                                 const std::filesystem::path& out, std::int64_t base_seed) {
  namespace fs = std::filesystem;
  const auto sizes = split_sizes(n, ratios);
  config.validate();
  std::error_code ec;
  fs::create_directories(out / "photos", ec);
  fs::create_directories(out / "masks", ec);
  if (ec || !fs::is_directory(out / "photos"))
    throw Error(ErrorKind::io, "cannot create dataset directory " + out.string(), out.string());

  DatasetManifest manifest;
  manifest.root = out.string();
  manifest.created_with = config_hash(config);
  manifest.base_dir = out;
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "rem_%05zu", i);
    const std::int64_t seed = base_seed + static_cast<std::int64_t>(i);
    SamplePair pair = generate_remnant(seed, config);
    ManifestEntry entry;
    entry.id = id;
    entry.photo = "photos/" + entry.id + ".png";
    entry.mask = "masks/" + entry.id + ".png";
    entry.split = i < sizes[0] ? Split::train : (i < sizes[0] + sizes[1] ? Split::val : Split::test);
    entry.seed = seed;
    write_png(out / entry.photo, pair.photo);
    write_mask_png(out / entry.mask, pair.mask);
    manifest.entries.push_back(std::move(entry));
  }
  save_manifest(manifest, out / "manifest.json");
  return manifest;
}

std::string manifest_to_json(const DatasetManifest& manifest) {
  nlohmann::ordered_json j;
  j["root"] = manifest.root;
  j["created_with"] = manifest.created_with;
  j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : manifest.entries)
    j["entries"].push_back({{"id", e.id}, {"photo", e.photo}, {"mask", e.mask}, {"split", to_string(e.split)},
                            {"seed", e.seed}});
  return j.dump(2) + "\n";
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  write_file_atomic(path, manifest_to_json(manifest));
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::not_found, "cannot open manifest " + path.string(), path.string());
  DatasetManifest manifest;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    manifest.root = j.at("root").get<std::string>();
    manifest.created_with = j.at("created_with").get<std::string>();
    for (const auto& e : j.at("entries")) {
      ManifestEntry entry;
      entry.id = e.at("id").get<std::string>();
      entry.photo = e.at("photo").get<std::string>();
      entry.mask = e.at("mask").get<std::string>();
      entry.split = split_from_string(e.at("split").get<std::string>());
      entry.seed = e.at("seed").get<std::int64_t>();
      manifest.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::validation, "malformed manifest " + path.string() + ": " + e.what(), path.string());
  }
  manifest.base_dir = path.parent_path();
  std::set<std::string> ids;
  for (const auto& e : manifest.entries) {
    if (!ids.insert(e.id).second) throw Error(ErrorKind::validation, "duplicate manifest id " + e.id, e.id);
    for (const auto& file : {manifest.photo_path(e), manifest.mask_path(e)})
      if (!std::filesystem::exists(file))
        throw Error(ErrorKind::not_found, "manifest entry " + e.id + " references missing file " + file.string(),
                    file.string());
  }
  return manifest;
}

}  // namespace rf
