#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "remnantflow/image.hpp"
#include "remnantflow/synthgen.hpp"

namespace rf {

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;

  void validate() const;
};

/// Normalized 1-D Gaussian taps of the given odd length.
std::vector<double> gaussian_taps(int window, double sigma);

/// Mean local SSIM over every window position fully inside the image. When
/// the image is smaller than the window, the window shrinks to the largest
/// odd size that fits (sigma unchanged).
double ssim(const Plane<double>& a, const Plane<double>& b, const SsimParams& params = {});
/// Luminance of each image, then the plane overload.
double ssim(const RasterImage& a, const RasterImage& b, const SsimParams& params = {});

/// |a and b| / |a or b|; 1.0 when both are empty.
double iou(const BinaryMask& a, const BinaryMask& b);

enum class HausdorffVariant { max, mean };

/// Exact squared Euclidean distance from each pixel to the nearest
/// foreground pixel (two-pass lower-envelope transform).
Plane<double> squared_distance_transform(const BinaryMask& mask);

/// Symmetric Hausdorff distance between foreground pixel sets, in pixels.
/// Throws undefined_metric if either mask has no foreground.
double hausdorff(const BinaryMask& a, const BinaryMask& b, HausdorffVariant variant);

inline constexpr const char* kProxyBackend = "proxy-msssim3";

/// Perceptual distance. The built-in backend `proxy-msssim3` is
/// 1 - mean SSIM over three dyadic scales (2x2 box downsampling). Other
/// backend names throw unavailable_backend.
double perceptual_distance(const RasterImage& a, const RasterImage& b, const std::string& backend = kProxyBackend);

struct SampleMetrics {
  std::string id;
  double ssim = 0.0;
  double perceptual = 0.0;
  double hausdorff_mean = 0.0;
  double hausdorff_max = 0.0;
  double iou = 0.0;
};

struct SampleError {
  std::string id;
  std::string message;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population
};

/// Metric keys in report order.
inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"ssim", "perceptual", "hausdorff_mean", "hausdorff_max", "iou"};
  return names;
}

double metric_value(const SampleMetrics& s, const std::string& name);

struct MetricsReport {
  std::string method_label;
  std::string perceptual_backend = kProxyBackend;
  std::vector<SampleMetrics> per_sample;  // sorted by id
  std::vector<SampleError> errors;
  std::map<std::string, MetricSummary> aggregate;
  std::size_t n = 0;

  /// Recomputes n and aggregate from per_sample.
  void finalize();
};

/// All four metrics on one prediction against its ground truth.
SampleMetrics evaluate_sample(const std::string& id, const BinaryMask& truth, const BinaryMask& prediction,
                              const std::string& backend = kProxyBackend);

/// Evaluates `<predictions_dir>/<id>.png` for every entry of `split`.
/// Missing, unreadable, mis-sized or empty predictions become error entries
/// and are excluded from the aggregates.
MetricsReport evaluate_pairset(const DatasetManifest& manifest, const std::filesystem::path& predictions_dir,
                               const std::string& method_label, Split split = Split::test,
                               const std::string& backend = kProxyBackend);

nlohmann::ordered_json to_json(const MetricsReport& report);
MetricsReport metrics_report_from_json(const nlohmann::json& j);
void save_report(const MetricsReport& report, const std::filesystem::path& path);
MetricsReport load_report(const std::filesystem::path& path);

/// Single-method table: columns `Metric | Value`.
std::string render_table(const MetricsReport& report);
/// Two-method comparison: one column per method, n in the column headers.
std::string render_comparison(const MetricsReport& first, const MetricsReport& second);

}  // namespace rf
