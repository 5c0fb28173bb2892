#include "remnantflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "remnantflow/png_io.hpp"

namespace rf {
namespace {

template <class A, class B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorKind::validation,
                std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                    " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

/// Separable correlation with `taps`, keeping only fully-supported positions.
Plane<double> filter_valid(const Plane<double>& x, const std::vector<double>& taps) {
  const Index w = static_cast<Index>(taps.size());
  const Index rows = x.rows() - w + 1, cols = x.cols() - w + 1;
  Plane<double> horizontal = Plane<double>::Zero(x.rows(), cols);
  for (Index k = 0; k < w; ++k) horizontal += taps[k] * x.middleCols(k, cols);
  Plane<double> out = Plane<double>::Zero(rows, cols);
  for (Index k = 0; k < w; ++k) out += taps[k] * horizontal.middleRows(k, rows);
  return out;
}

Plane<double> downsample2(const Plane<double>& x) {
  const Index rows = x.rows() / 2, cols = x.cols() / 2;
  Plane<double> out(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c)
      out(r, c) = 0.25 * (x(2 * r, 2 * c) + x(2 * r, 2 * c + 1) + x(2 * r + 1, 2 * c) + x(2 * r + 1, 2 * c + 1));
  return out;
}

constexpr double kFar = 1e20;

/// Lower envelope of parabolas (Felzenszwalb-Huttenlocher); replaces f by
/// min_p f[p] + (q - p)^2.
void envelope_1d(std::vector<double>& f, std::vector<double>& d, std::vector<Index>& v, std::vector<double>& z) {
  const Index n = static_cast<Index>(f.size());
  Index k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (Index q = 1; q < n; ++q) {
    double s = 0.0;
    while (true) {
      const Index p = v[k];
      s = ((f[q] + double(q) * double(q)) - (f[p] + double(p) * double(p))) / (2.0 * double(q - p));
      if (s > z[k] || k == 0) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (Index q = 0; q < n; ++q) {
    while (z[k + 1] < double(q)) ++k;
    const double dq = double(q - v[k]);
    d[q] = dq * dq + f[v[k]];
  }
  f.swap(d);
}

double directed(const BinaryMask& from, const Plane<double>& to_sq, HausdorffVariant variant) {
  double best = 0.0, sum = 0.0;
  std::size_t count = 0;
  for (Index r = 0; r < from.rows(); ++r)
    for (Index c = 0; c < from.cols(); ++c)
      if (from(r, c)) {
        const double d = std::sqrt(to_sq(r, c));
        best = std::max(best, d);
        sum += d;
        ++count;
      }
  return variant == HausdorffVariant::max ? best : sum / static_cast<double>(count);
}

std::string fixed4(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << v;
  return out.str();
}

struct TableRow {
  const char* label;
  const char* key;
};

std::vector<TableRow> table_rows() {
  return {{"SSIM", "ssim"},
          {"LPIPS", "perceptual"},
          {"Hausdorff Mean", "hausdorff_mean"},
          {"Hausdorff Max", "hausdorff_max"},
          {"IoU", "iou"}};
}

std::string row_label(const TableRow& row, const std::string& backend) {
  if (std::string(row.key) == "perceptual") return std::string(row.label) + " (" + backend + ")";
  return row.label;
}

std::string render_rows(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    out << '|';
    for (const auto& cell : cells) out << ' ' << cell << " |";
    out << '\n';
  };
  line(header);
  out << '|';
  for (std::size_t i = 0; i < header.size(); ++i) out << (i == 0 ? "---|" : "---:|");
  out << '\n';
  for (const auto& row : rows) line(row);
  return out.str();
}

}  // namespace

void SsimParams::validate() const {
  if (window < 3 || window % 2 == 0) throw Error(ErrorKind::validation, "ssim window must be odd and >= 3");
  if (!(sigma > 0)) throw Error(ErrorKind::validation, "ssim sigma must be > 0");
  if (!(dynamic_range > 0)) throw Error(ErrorKind::validation, "ssim dynamic range must be > 0");
}

std::vector<double> gaussian_taps(int window, double sigma) {
  std::vector<double> taps(static_cast<std::size_t>(window));
  const int half = window / 2;
  double sum = 0.0;
  for (int i = 0; i < window; ++i) {
    const double x = i - half;
    taps[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

double ssim(const Plane<double>& a, const Plane<double>& b, const SsimParams& params) {
  params.validate();
  require_same_shape(a, b, "ssim");
  if (a.size() == 0) throw Error(ErrorKind::validation, "ssim: empty image");
  int window = static_cast<int>(std::min<Index>(params.window, std::min(a.rows(), a.cols())));
  if (window % 2 == 0) --window;
  const auto taps = gaussian_taps(window, params.sigma);
  const double c1 = std::pow(params.k1 * params.dynamic_range, 2);
  const double c2 = std::pow(params.k2 * params.dynamic_range, 2);

  const Plane<double> mu_a = filter_valid(a, taps);
  const Plane<double> mu_b = filter_valid(b, taps);
  // Products are materialized before the sums so that fused multiply-adds
  // cannot round the a == b case away from exactly 1.
  const Plane<double> mu_aa = mu_a * mu_a, mu_bb = mu_b * mu_b, mu_ab = mu_a * mu_b;
  const Plane<double> var_a = filter_valid(a * a, taps) - mu_aa;
  const Plane<double> var_b = filter_valid(b * b, taps) - mu_bb;
  const Plane<double> cov = filter_valid(a * b, taps) - mu_ab;
  const Plane<double> map = ((2.0 * mu_ab + c1) * (2.0 * cov + c2)) / ((mu_aa + mu_bb + c1) * (var_a + var_b + c2));
  return map.mean();
}

double ssim(const RasterImage& a, const RasterImage& b, const SsimParams& params) {
  require_same_shape(a, b, "ssim");
  return ssim(luminance(a), luminance(b), params);
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "iou");
  const auto both = (a && b).count();
  const auto either = (a || b).count();
  return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
}

Plane<double> squared_distance_transform(const BinaryMask& mask) {
  const Index rows = mask.rows(), cols = mask.cols();
  Plane<double> dist(rows, cols);
  const Index n = std::max(rows, cols);
  std::vector<double> f, d(n);
  std::vector<Index> v(n);
  std::vector<double> z(n + 1);
  for (Index c = 0; c < cols; ++c) {
    f.assign(rows, kFar);
    for (Index r = 0; r < rows; ++r)
      if (mask(r, c)) f[r] = 0.0;
    d.resize(rows);
    envelope_1d(f, d, v, z);
    for (Index r = 0; r < rows; ++r) dist(r, c) = f[r];
  }
  for (Index r = 0; r < rows; ++r) {
    f.assign(cols, kFar);
    for (Index c = 0; c < cols; ++c) f[c] = dist(r, c);
    d.resize(cols);
    envelope_1d(f, d, v, z);
    for (Index c = 0; c < cols; ++c) dist(r, c) = f[c];
  }
  return dist;
}

double hausdorff(const BinaryMask& a, const BinaryMask& b, HausdorffVariant variant) {
  require_same_shape(a, b, "hausdorff");
  if (!a.any() || !b.any())
    throw Error(ErrorKind::undefined_metric, "hausdorff distance is undefined for an empty foreground");
  const double ab = directed(a, squared_distance_transform(b), variant);
  const double ba = directed(b, squared_distance_transform(a), variant);
  return variant == HausdorffVariant::max ? std::max(ab, ba) : 0.5 * (ab + ba);
}

double perceptual_distance(const RasterImage& a, const RasterImage& b, const std::string& backend) {
  require_same_shape(a, b, "perceptual_distance");
  if (backend != kProxyBackend)
    throw Error(ErrorKind::unavailable_backend, "perceptual backend '" + backend + "' is not available", backend);
  if (std::min(a.rows(), a.cols()) < 4)
    throw Error(ErrorKind::validation, "perceptual_distance needs images of at least 4x4");
  Plane<double> x = luminance(a), y = luminance(b);
  double total = 0.0;
  for (int scale = 0; scale < 3; ++scale) {
    if (scale > 0) {
      x = downsample2(x);
      y = downsample2(y);
    }
    total += ssim(x, y);
  }
  return 1.0 - total / 3.0;
}

double metric_value(const SampleMetrics& s, const std::string& name) {
  if (name == "ssim") return s.ssim;
  if (name == "perceptual") return s.perceptual;
  if (name == "hausdorff_mean") return s.hausdorff_mean;
  if (name == "hausdorff_max") return s.hausdorff_max;
  if (name == "iou") return s.iou;
  throw Error(ErrorKind::validation, "unknown metric '" + name + "'", name);
}

void MetricsReport::finalize() {
  std::sort(per_sample.begin(), per_sample.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  std::sort(errors.begin(), errors.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  n = per_sample.size();
  aggregate.clear();
  for (const auto& name : metric_names()) {
    MetricSummary summary;
    if (n > 0) {
      double sum = 0.0;
      for (const auto& s : per_sample) sum += metric_value(s, name);
      summary.mean = sum / static_cast<double>(n);
      double sq = 0.0;
      for (const auto& s : per_sample) sq += std::pow(metric_value(s, name) - summary.mean, 2);
      summary.std = std::sqrt(sq / static_cast<double>(n));
    }
    aggregate[name] = summary;
  }
}

SampleMetrics evaluate_sample(const std::string& id, const BinaryMask& truth, const BinaryMask& prediction,
                              const std::string& backend) {
  require_same_shape(truth, prediction, "evaluate_sample");
  const RasterImage t = mask_to_image(truth), p = mask_to_image(prediction);
  SampleMetrics s;
  s.id = id;
  s.ssim = ssim(p, t);
  s.perceptual = perceptual_distance(p, t, backend);
  s.hausdorff_mean = hausdorff(prediction, truth, HausdorffVariant::mean);
  s.hausdorff_max = hausdorff(prediction, truth, HausdorffVariant::max);
  s.iou = iou(prediction, truth);
  return s;
}

MetricsReport evaluate_pairset(const DatasetManifest& manifest, const std::filesystem::path& predictions_dir,
                               const std::string& method_label, Split split, const std::string& backend) {
  if (backend != kProxyBackend)
    throw Error(ErrorKind::unavailable_backend, "perceptual backend '" + backend + "' is not available", backend);
  MetricsReport report;
  report.method_label = method_label;
  report.perceptual_backend = backend;
  for (const auto& entry : manifest.split(split)) {
    const auto pred_path = predictions_dir / (entry.id + ".png");
    if (!std::filesystem::exists(pred_path)) {
      report.errors.push_back({entry.id, "missing prediction " + pred_path.string()});
      continue;
    }
    try {
      const BinaryMask truth = read_mask_png(manifest.mask_path(entry));
      const BinaryMask prediction = read_mask_png(pred_path);
      report.per_sample.push_back(evaluate_sample(entry.id, truth, prediction, backend));
    } catch (const Error& e) {
      report.errors.push_back({entry.id, e.what()});
    }
  }
  report.finalize();
  return report;
}

nlohmann::ordered_json to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["method_label"] = report.method_label;
  j["perceptual_backend"] = report.perceptual_backend;
  j["n"] = report.n;
  nlohmann::ordered_json agg = nlohmann::ordered_json::object();
  for (const auto& name : metric_names()) {
    const auto it = report.aggregate.find(name);
    const MetricSummary s = it == report.aggregate.end() ? MetricSummary{} : it->second;
    agg[name] = {{"mean", s.mean}, {"std", s.std}};
  }
  j["aggregate"] = agg;
  j["per_sample"] = nlohmann::ordered_json::array();
  for (const auto& s : report.per_sample)
    j["per_sample"].push_back({{"id", s.id},
                               {"ssim", s.ssim},
                               {"perceptual", s.perceptual},
                               {"hausdorff_mean", s.hausdorff_mean},
                               {"hausdorff_max", s.hausdorff_max},
                               {"iou", s.iou}});
  j["errors"] = nlohmann::ordered_json::array();
  for (const auto& e : report.errors) j["errors"].push_back({{"id", e.id}, {"message", e.message}});
  return j;
}

MetricsReport metrics_report_from_json(const nlohmann::json& j) {
  MetricsReport report;
  try {
    report.method_label = j.at("method_label").get<std::string>();
    report.perceptual_backend = j.value("perceptual_backend", std::string(kProxyBackend));
    for (const auto& s : j.at("per_sample"))
      report.per_sample.push_back({s.at("id").get<std::string>(), s.at("ssim").get<double>(),
                                   s.at("perceptual").get<double>(), s.at("hausdorff_mean").get<double>(),
                                   s.at("hausdorff_max").get<double>(), s.at("iou").get<double>()});
    if (j.contains("errors"))
      for (const auto& e : j.at("errors"))
        report.errors.push_back({e.at("id").get<std::string>(), e.at("message").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::validation, std::string("malformed metrics report: ") + e.what());
  }
  report.finalize();
  if (j.contains("n") && j.at("n").get<std::size_t>() != report.n)
    throw Error(ErrorKind::validation, "metrics report n does not match per_sample length");
  return report;
}

void save_report(const MetricsReport& report, const std::filesystem::path& path) {
  write_file_atomic(path, to_json(report).dump(2) + "\n");
}

MetricsReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::not_found, "metrics report not found: " + path.string(), path.string());
  try {
    return metrics_report_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::validation, "metrics report " + path.string() + " is not JSON: " + e.what(), path.string());
  }
}

std::string render_table(const MetricsReport& report) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& row : table_rows())
    rows.push_back({row_label(row, report.perceptual_backend), fixed4(report.aggregate.at(row.key).mean)});
  return render_rows({"Metric", "Value"}, rows);
}

std::string render_comparison(const MetricsReport& first, const MetricsReport& second) {
  std::vector<std::vector<std::string>> rows;
  const std::string backend = first.perceptual_backend == second.perceptual_backend
                                  ? first.perceptual_backend
                                  : first.perceptual_backend + " / " + second.perceptual_backend;
  for (const auto& row : table_rows())
    rows.push_back({row_label(row, backend), fixed4(first.aggregate.at(row.key).mean),
                    fixed4(second.aggregate.at(row.key).mean)});
  return render_rows({"Metric", first.method_label + " (n=" + std::to_string(first.n) + ")",
                      second.method_label + " (n=" + std::to_string(second.n) + ")"},
                     rows);
}

}  // namespace rf
