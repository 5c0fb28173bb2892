#include "remnantflow/refine.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "remnantflow/morphology.hpp"

namespace rf {
namespace {

std::uint64_t fnv1a(std::string_view a, std::span<const std::uint8_t> b = {}) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : a) h = (h ^ ch) * 1099511628211ULL;
  for (std::uint8_t ch : b) h = (h ^ ch) * 1099511628211ULL;
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Lower-cased text with every non-alphanumeric run collapsed to one space,
/// padded with spaces so whole-word lookups can search for " word ".
std::string normalize(std::string_view text) {
  std::string out = " ";
  for (unsigned char ch : text) {
    if (std::isalnum(ch)) {
      out.push_back(static_cast<char>(std::tolower(ch)));
    } else if (out.back() != ' ') {
      out.push_back(' ');
    }
  }
  if (out.back() != ' ') out.push_back(' ');
  return out;
}

/// Earliest whole-word position of any phrase, or npos.
std::size_t find_any(const std::string& haystack, std::initializer_list<std::string_view> phrases) {
  std::size_t best = std::string::npos;
  for (auto phrase : phrases) {
    const std::string needle = " " + std::string(phrase) + " ";
    const std::size_t pos = haystack.find(needle);
    if (pos != std::string::npos) best = std::min(best, pos);
  }
  return best;
}

struct ActionRule {
  RefineAction action;
  std::initializer_list<std::string_view> keywords;
};

std::optional<Region> detect_region(const std::string& text) {
  struct RegionRule {
    Region region;
    std::initializer_list<std::string_view> phrases;
  };
  static const RegionRule rules[] = {
      {Region::top_right, {"top right", "upper right", "topright", "northeast", "north east"}},
      {Region::top_left, {"top left", "upper left", "topleft", "northwest", "north west"}},
      {Region::bottom_right, {"bottom right", "lower right", "bottomright", "southeast", "south east"}},
      {Region::bottom_left, {"bottom left", "lower left", "bottomleft", "southwest", "south west"}},
      {Region::center, {"center", "centre", "middle", "central"}},
      {Region::full, {"everywhere", "entire", "whole", "all over", "full"}},
  };
  std::optional<Region> found;
  std::size_t best = std::string::npos;
  for (const auto& rule : rules) {
    const std::size_t pos = find_any(text, rule.phrases);
    if (pos < best) {
      best = pos;
      found = rule.region;
    }
  }
  return found;
}

}  // namespace

// ---------------------------------------------------------------------------
// Templates

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = body.find('{', pos)) != std::string::npos) {
    const std::size_t end = body.find('}', pos);
    if (end == std::string::npos) break;
    std::string name = body.substr(pos + 1, end - pos - 1);
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(std::move(name));
    pos = end + 1;
  }
  return names;
}

void PromptTemplate::validate() const {
  if (id.empty()) throw Error(ErrorKind::validation, "template id is empty");
  if (body.empty()) throw Error(ErrorKind::validation, "template " + id + " has an empty body", id);
  int depth = 0;
  for (char ch : body) {
    if (ch == '{') ++depth;
    if (ch == '}') --depth;
    if (depth < 0 || depth > 1)
      throw Error(ErrorKind::validation, "template " + id + " has unbalanced braces", id);
  }
  if (depth != 0) throw Error(ErrorKind::validation, "template " + id + " has unbalanced braces", id);
  const auto& declared = declared_placeholders();
  for (const auto& name : placeholders())
    if (std::find(declared.begin(), declared.end(), name) == declared.end())
      throw Error(ErrorKind::validation, "template " + id + " references undeclared placeholder {" + name + "}", name);
}

PromptTemplate template_from_json(const nlohmann::json& j) {
  PromptTemplate t;
  try {
    t.id = j.at("id").get<std::string>();
    t.version = j.at("version").get<int>();
    t.body = j.at("body").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::validation, std::string("malformed template: ") + e.what());
  }
  t.validate();
  return t;
}

PromptTemplate load_template(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::not_found, "template not found: " + path.string(), path.string());
  try {
    return template_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::validation, "template " + path.string() + " is not JSON: " + e.what(), path.string());
  }
}

void TemplateLibrary::add(PromptTemplate t) {
  t.validate();
  auto it = templates_.find(t.id);
  if (it == templates_.end() || it->second.version <= t.version) templates_[t.id] = std::move(t);
}

void TemplateLibrary::load_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw Error(ErrorKind::not_found, "template directory not found: " + dir.string(), dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) add(load_template(f));
}

const PromptTemplate& TemplateLibrary::get(const std::string& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw Error(ErrorKind::not_found, "unknown template '" + id + "'", id);
  return it->second;
}

std::vector<std::string> TemplateLibrary::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, t] : templates_) out.push_back(id);
  return out;
}

std::string render_prompt(const PromptTemplate& t, const PromptParams& params) {
  std::string out;
  out.reserve(t.body.size());
  std::size_t pos = 0;
  while (pos < t.body.size()) {
    const std::size_t open = t.body.find('{', pos);
    if (open == std::string::npos) {
      out.append(t.body, pos, std::string::npos);
      break;
    }
    const std::size_t close = t.body.find('}', open);
    if (close == std::string::npos) throw Error(ErrorKind::validation, "template " + t.id + " has unbalanced braces");
    out.append(t.body, pos, open - pos);
    const std::string name = t.body.substr(open + 1, close - open - 1);
    auto it = params.find(name);
    if (it == params.end())
      throw Error(ErrorKind::missing_placeholder, "missing value for placeholder {" + name + "}", name);
    out += it->second;
    pos = close + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chat

std::string to_string(RefineAction a) {
  switch (a) {
    case RefineAction::remove_noise: return "remove_noise";
    case RefineAction::close_gaps: return "close_gaps";
    case RefineAction::uniform_holes: return "uniform_holes";
    case RefineAction::smooth_edges: return "smooth_edges";
  }
  return "remove_noise";
}

std::string to_string(Region r) {
  switch (r) {
    case Region::full: return "full";
    case Region::top_left: return "top_left";
    case Region::top_right: return "top_right";
    case Region::bottom_left: return "bottom_left";
    case Region::bottom_right: return "bottom_right";
    case Region::center: return "center";
  }
  return "full";
}

RefineAction action_from_string(const std::string& s) {
  for (auto a : {RefineAction::remove_noise, RefineAction::close_gaps, RefineAction::uniform_holes,
                 RefineAction::smooth_edges})
    if (to_string(a) == s) return a;
  throw Error(ErrorKind::validation, "unknown action '" + s + "'", s);
}

Region region_from_string(const std::string& s) {
  for (auto r : {Region::full, Region::top_left, Region::top_right, Region::bottom_left, Region::bottom_right,
                 Region::center})
    if (to_string(r) == s) return r;
  throw Error(ErrorKind::validation, "unknown region '" + s + "'", s);
}

ChatOutcome translate_chat(std::string_view text, const ChatContext& context) {
  const std::string norm = normalize(text);
  if (norm.find_first_not_of(' ') == std::string::npos)
    throw Error(ErrorKind::validation, "chat text is empty");

  static const ActionRule rules[] = {
      {RefineAction::remove_noise,
       {"noise", "noisy", "speck", "specks", "speckle", "speckles", "dots", "dust", "blob", "blobs", "artifact",
        "artifacts", "artefacts", "clutter", "stray", "debris"}},
      {RefineAction::close_gaps,
       {"gap", "gaps", "broken", "break", "breaks", "disconnected", "connect", "reconnect", "discontinuous",
        "missing", "close"}},
      {RefineAction::smooth_edges,
       {"smooth", "smoother", "jagged", "rough", "straighten", "straight", "wobbly", "staircase", "stairs"}},
  };

  ChatOutcome outcome;
  std::size_t best = std::string::npos;
  for (const auto& rule : rules) {
    const std::size_t pos = find_any(norm, rule.keywords);
    if (pos < best) {
      best = pos;
      outcome.patch = PromptPatch{rule.action, Region::full};
    }
  }
  // Hole uniformity needs both the subject and a qualifier.
  const std::size_t hole_pos = find_any(norm, {"hole", "holes", "cutout", "cutouts"});
  if (hole_pos != std::string::npos &&
      find_any(norm, {"uniform", "same", "equal", "consistent", "regular", "round", "rounder", "circular",
                      "identical", "even"}) != std::string::npos &&
      hole_pos < best) {
    best = hole_pos;
    outcome.patch = PromptPatch{RefineAction::uniform_holes, Region::full};
  }
  if (!outcome.patch && context.last_patch &&
      find_any(norm, {"again", "repeat", "more", "same again"}) != std::string::npos)
    outcome.patch = context.last_patch;

  if (!outcome.patch) {
    outcome.needs_clarification = true;
    outcome.message =
        "I could not map that request to a contour edit. Try e.g. \"remove noise in the top-right corner\", "
        "\"close the gaps\", \"make all holes uniform\" or \"smooth the edges\".";
    return outcome;
  }
  if (auto region = detect_region(norm)) outcome.patch->region = *region;
  outcome.message = "Applying " + to_string(outcome.patch->action) + " on region " + to_string(outcome.patch->region) + ".";
  return outcome;
}

PromptParams prompt_params(const PromptPatch& patch, const std::string& material) {
  static const std::map<RefineAction, std::string> defects{
      {RefineAction::remove_noise, "Remove isolated specks, noise blobs and stray fragments."},
      {RefineAction::close_gaps, "Close every gap or break so each contour is continuous."},
      {RefineAction::uniform_holes, "Make all holes uniform."},
      {RefineAction::smooth_edges, "Smooth jagged, stair-stepped edges into clean straight lines and arcs."},
  };
  static const std::map<Region, std::string> regions{
      {Region::full, "entire image"},         {Region::top_left, "top-left corner"},
      {Region::top_right, "top-right corner"}, {Region::bottom_left, "bottom-left corner"},
      {Region::bottom_right, "bottom-right corner"}, {Region::center, "center of the image"},
  };
  PromptParams params;
  params["material"] = material;
  params["defects"] = defects.at(patch.action);
  params["region"] = regions.at(patch.region);
  params["hole_policy"] = patch.action == RefineAction::uniform_holes
                              ? "Replace every interior hole with a uniform circular hole of equal area."
                              : "Preserve the position and shape of every interior hole.";
  return params;
}

// ---------------------------------------------------------------------------
// Mock refinement

BinaryMask mock_refine(const BinaryMask& mask, const MockRefineParams& params) {
  BinaryMask out = close(mask, params.close_radius);
  out = remove_small_components(out, params.min_component_area);
  if (!params.hole_roundness_fix) return out;

  const Components holes = interior_holes(out);
  const std::size_t foreground = count_components(out, Connectivity::eight);
  const std::size_t background = label_components(out, Connectivity::four, false).count();
  for (std::size_t k = 0; k < holes.count(); ++k) {
    const auto& stats = holes.stats[k];
    const double radius2 = static_cast<double>(stats.area) / std::numbers::pi;
    BinaryMask candidate = out;
    for (Index r = 0; r < out.rows(); ++r)
      for (Index c = 0; c < out.cols(); ++c) {
        if (holes.labels(r, c) == static_cast<int>(k + 1)) candidate(r, c) = true;
        const double dx = c - stats.centroid_x, dy = r - stats.centroid_y;
        if (dx * dx + dy * dy <= radius2) candidate(r, c) = false;
      }
    if (count_components(candidate, Connectivity::eight) == foreground &&
        label_components(candidate, Connectivity::four, false).count() == background)
      out = std::move(candidate);
  }
  return out;
}

ProviderResponse MockProvider::edit(const ProviderRequest& request) {
  const BinaryMask input = binarize(decode_png(request.image_png));
  MockRefineParams params = params_;
  if (request.prompt.find("uniform circular hole") != std::string::npos) params.hole_roundness_fix = true;
  ProviderResponse response;
  response.image_png = encode_mask_png(mock_refine(input, params));
  response.response_id = "mock-" + hex(fnv1a(request.prompt, request.image_png));
  return response;
}

// ---------------------------------------------------------------------------
// HTTP adapter

HttpProvider::HttpProvider(std::string id, std::string url, std::string api_key)
    : id_(std::move(id)), url_(std::move(url)), api_key_(std::move(api_key)) {}

ProviderResponse HttpProvider::edit(const ProviderRequest& request) {
  // Split scheme://host[:port] from the path.
  const std::size_t scheme_end = url_.find("://");
  const std::size_t path_start = url_.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string origin = path_start == std::string::npos ? url_ : url_.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url_.substr(path_start);

  httplib::Client client(origin);
  const auto seconds = static_cast<time_t>(request.timeout_s);
  const auto micros = static_cast<time_t>((request.timeout_s - static_cast<double>(seconds)) * 1e6);
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  httplib::MultipartFormDataItems items{
      {"image", std::string(request.image_png.begin(), request.image_png.end()), "mask.png", "image/png"},
      {"prompt", request.prompt, "", "text/plain; charset=utf-8"},
  };
  auto res = client.Post(path, headers, items);
  if (!res) throw TransientProviderError("provider " + id_ + " unreachable: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw TransientProviderError("provider " + id_ + " returned HTTP " + std::to_string(res->status));
  std::string response_id = res->get_header_value("X-Response-Id");
  if (response_id.empty()) response_id = id_ + "-" + hex(fnv1a(res->body));
  if (res->status != 200)
    throw Error(ErrorKind::protocol, "provider " + id_ + " rejected the request with HTTP " + std::to_string(res->status),
                response_id);
  return {Bytes(res->body.begin(), res->body.end()), response_id};
}

ProviderRegistry::ProviderRegistry() { providers_["mock"] = std::make_shared<MockProvider>(); }

void ProviderRegistry::add(std::shared_ptr<RefinementProvider> provider) {
  std::lock_guard lock(mutex_);
  providers_[provider->id()] = std::move(provider);
}

std::shared_ptr<RefinementProvider> ProviderRegistry::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  if (auto it = providers_.find(id); it != providers_.end()) return it->second;
  std::string env_id;
  for (unsigned char ch : id) env_id.push_back(ch == '-' ? '_' : static_cast<char>(std::toupper(ch)));
  const char* url = std::getenv(("RF_PROVIDER_" + env_id + "_URL").c_str());
  if (!url || !*url)
    throw Error(ErrorKind::not_found,
                "provider '" + id + "' is not registered (set RF_PROVIDER_" + env_id + "_URL)", id);
  const char* key = std::getenv(("RF_PROVIDER_" + env_id + "_KEY").c_str());
  auto provider = std::make_shared<HttpProvider>(id, url, key ? key : "");
  providers_[id] = provider;
  return provider;
}

void CallLimiter::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [this] { return available_ > 0; });
  --available_;
  peak_ = std::max(peak_, ++in_flight_);
}

void CallLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    ++available_;
    --in_flight_;
  }
  cv_.notify_one();
}

int CallLimiter::in_flight_peak() const {
  std::lock_guard lock(mutex_);
  return peak_;
}

CallLimiter& CallLimiter::global() {
  static CallLimiter limiter(4);
  return limiter;
}

// ---------------------------------------------------------------------------
// Dispatch

void RefinementRequest::validate() const {
  if (prompt.empty()) throw Error(ErrorKind::validation, "refinement prompt is empty");
  if (!(timeout_s > 0)) throw Error(ErrorKind::validation, "timeout_s must be > 0");
  if (max_retries < 0) throw Error(ErrorKind::validation, "max_retries must be >= 0");
  if (input_mask.size() == 0) throw Error(ErrorKind::validation, "refinement input mask is empty");
}

RefinementResult refine(RefinementProvider& provider, const RefinementRequest& request, const BackoffPolicy& backoff,
                        CallLimiter* limiter) {
  request.validate();
  ProviderRequest wire{encode_mask_png(request.input_mask), request.prompt, request.timeout_s};
  std::mt19937_64 jitter(backoff.jitter_seed);
  const auto start = std::chrono::steady_clock::now();
  std::string last_error;
  for (int attempt = 1; attempt <= request.max_retries + 1; ++attempt) {
    ProviderResponse response;
    bool ok = false;
    if (limiter) limiter->acquire();
    try {
      response = provider.edit(wire);
      ok = true;
    } catch (const TransientProviderError& e) {
      last_error = e.what();
    } catch (...) {
      if (limiter) limiter->release();
      throw;
    }
    if (limiter) limiter->release();

    if (ok) {
      RasterImage image;
      try {
        image = decode_png(response.image_png);
      } catch (const Error& e) {
        throw Error(ErrorKind::protocol, "provider " + provider.id() + " returned a malformed image: " + e.what(),
                    response.response_id);
      }
      if (image.empty())
        throw Error(ErrorKind::protocol, "provider " + provider.id() + " returned an empty image", response.response_id);
      image = resize_bilinear(image, request.input_mask.rows(), request.input_mask.cols());
      RefinementResult result;
      result.output = binarize(image, 0.5);
      result.provider_id = provider.id();
      result.attempt_count = attempt;
      result.raw_response_id = response.response_id;
      result.latency_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      return result;
    }
    if (attempt <= request.max_retries) {
      const double ceiling = std::min(backoff.cap_s, backoff.base_s * std::pow(backoff.factor, attempt - 1));
      const double delay = std::uniform_real_distribution<double>(0.0, ceiling)(jitter);
      if (backoff.sleep)
        backoff.sleep(delay);
      else
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
  }
  throw Error(ErrorKind::provider_unavailable,
              "provider " + provider.id() + " unavailable after " + std::to_string(request.max_retries + 1) +
                  " attempts: " + last_error,
              provider.id());
}

}  // namespace rf
