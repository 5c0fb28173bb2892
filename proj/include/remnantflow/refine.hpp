#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "remnantflow/image.hpp"
#include "remnantflow/png_io.hpp"

namespace rf {

// ---------------------------------------------------------------------------
// Prompt templates

/// Placeholder names a template body may reference as `{name}`.
inline const std::vector<std::string>& declared_placeholders() {
  static const std::vector<std::string> names{"material", "defects", "region", "hole_policy"};
  return names;
}

struct PromptTemplate {
  std::string id;
  int version = 1;
  std::string body;

  /// Placeholder names in order of first appearance.
  std::vector<std::string> placeholders() const;
  /// Throws validation if the body references an undeclared placeholder or
  /// has an unbalanced brace.
  void validate() const;
};

PromptTemplate template_from_json(const nlohmann::json& j);
PromptTemplate load_template(const std::filesystem::path& path);

/// Templates keyed by id; later versions of the same id replace earlier ones.
class TemplateLibrary {
 public:
  void add(PromptTemplate t);
  void load_directory(const std::filesystem::path& dir);
  const PromptTemplate& get(const std::string& id) const;
  bool contains(const std::string& id) const { return templates_.count(id) != 0; }
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, PromptTemplate> templates_;
};

using PromptParams = std::map<std::string, std::string>;

/// Substitutes every `{name}`; throws ErrorKind::missing_placeholder naming
/// the first placeholder absent from `params`.
std::string render_prompt(const PromptTemplate& t, const PromptParams& params);

// ---------------------------------------------------------------------------
// Operator chat

enum class RefineAction { remove_noise, close_gaps, uniform_holes, smooth_edges };
enum class Region { full, top_left, top_right, bottom_left, bottom_right, center };

std::string to_string(RefineAction a);
std::string to_string(Region r);
RefineAction action_from_string(const std::string& s);
Region region_from_string(const std::string& s);

struct PromptPatch {
  RefineAction action = RefineAction::remove_noise;
  Region region = Region::full;

  friend bool operator==(const PromptPatch&, const PromptPatch&) = default;
};

struct ChatContext {
  std::optional<PromptPatch> last_patch;
  std::string material = "sheet metal";
};

/// Exactly one of: a patch, or a clarification request.
struct ChatOutcome {
  std::optional<PromptPatch> patch;
  bool needs_clarification = false;
  std::string message;
};

/// Closed-lexicon intent extraction. The earliest action keyword wins; the
/// region defaults to the full image. "again"/"repeat" reuse the context's
/// last patch.
ChatOutcome translate_chat(std::string_view text, const ChatContext& context = {});

/// Template parameters implied by a patch.
PromptParams prompt_params(const PromptPatch& patch, const std::string& material);

enum class ChatRole { operator_, system };

struct ChatTurn {
  ChatRole role = ChatRole::operator_;
  std::string text;
  std::string timestamp;  // ISO-8601 UTC
  std::optional<PromptPatch> derived_prompt_patch;
};

// ---------------------------------------------------------------------------
// Providers

/// Wire contract: image = PNG bytes, prompt = UTF-8 text; response = PNG bytes.
struct ProviderRequest {
  Bytes image_png;
  std::string prompt;
  double timeout_s = 60.0;
};

struct ProviderResponse {
  Bytes image_png;
  std::string response_id;
};

/// Raised by providers for failures worth retrying (timeouts, 5xx, 429,
/// connection errors). Anything else propagates without retry.
class TransientProviderError : public Error {
 public:
  explicit TransientProviderError(const std::string& message)
      : Error(ErrorKind::provider_unavailable, message) {}
};

class RefinementProvider {
 public:
  virtual ~RefinementProvider() = default;
  virtual std::string id() const = 0;
  virtual ProviderResponse edit(const ProviderRequest& request) = 0;
};

struct MockRefineParams {
  int close_radius = 2;
  Index min_component_area = 16;
  bool hole_roundness_fix = false;
};

/// Closing with a disk of `close_radius`, removal of 8-connected components
/// smaller than `min_component_area`, then (optionally) each interior hole
/// replaced by the equal-area disk at its centroid. A hole replacement that
/// would change the number of foreground components or background regions
/// is skipped.
BinaryMask mock_refine(const BinaryMask& mask, const MockRefineParams& params);

/// Offline provider: decodes the mask, runs mock_refine, re-encodes. Turns
/// on the hole fix when the prompt asks for uniform circular holes.
class MockProvider final : public RefinementProvider {
 public:
  explicit MockProvider(MockRefineParams params = {}) : params_(params) {}
  std::string id() const override { return "mock"; }
  ProviderResponse edit(const ProviderRequest& request) override;

 private:
  MockRefineParams params_;
};

/// Thin HTTP adapter for hosted image-edit backends: POST multipart
/// {image, prompt} to the endpoint, expect PNG bytes back.
class HttpProvider final : public RefinementProvider {
 public:
  HttpProvider(std::string id, std::string url, std::string api_key);
  std::string id() const override { return id_; }
  ProviderResponse edit(const ProviderRequest& request) override;

 private:
  std::string id_, url_, api_key_;
};

/// `mock` is always present. Other ids resolve from RF_PROVIDER_<ID>_URL and
/// RF_PROVIDER_<ID>_KEY (ID upper-cased, '-' mapped to '_').
class ProviderRegistry {
 public:
  ProviderRegistry();
  void add(std::shared_ptr<RefinementProvider> provider);
  std::shared_ptr<RefinementProvider> get(const std::string& id) const;

 private:
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::shared_ptr<RefinementProvider>> providers_;
};

/// Bounds the number of provider calls in flight across the process.
class CallLimiter {
 public:
  explicit CallLimiter(int limit) : available_(limit) {}
  void acquire();
  void release();
  int in_flight_peak() const;

  static CallLimiter& global();

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  int available_;
  int in_flight_ = 0;
  int peak_ = 0;
};

struct RefinementRequest {
  BinaryMask input_mask;
  std::string prompt;
  std::string provider_id = "mock";
  double timeout_s = 60.0;
  int max_retries = 3;

  void validate() const;
};

struct RefinementResult {
  BinaryMask output;
  std::string provider_id;
  double latency_ms = 0.0;
  int attempt_count = 0;
  std::string raw_response_id;
};

/// Exponential backoff with full jitter: before retry k (k = 0, 1, ...) sleep
/// uniform(0, min(cap, base * factor^k)) seconds.
struct BackoffPolicy {
  double base_s = 1.0;
  double factor = 2.0;
  double cap_s = 30.0;
  std::uint64_t jitter_seed = 0;
  std::function<void(double seconds)> sleep;  // defaults to a real sleep
};

/// Sends the request, retrying transient failures up to max_retries times.
/// The provider's image is resized to the input's H x W if needed and
/// binarized at 0.5 luminance. Throws provider_unavailable after the last
/// attempt, protocol (detail = response id) on an undecodable payload.
RefinementResult refine(RefinementProvider& provider, const RefinementRequest& request,
                        const BackoffPolicy& backoff = {}, CallLimiter* limiter = &CallLimiter::global());

}  // namespace rf
