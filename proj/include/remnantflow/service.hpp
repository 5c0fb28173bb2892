#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "remnantflow/gan.hpp"
#include "remnantflow/metrics.hpp"
#include "remnantflow/refine.hpp"
#include "remnantflow/vectorize.hpp"

namespace rf {

enum class SessionState { created, preprocessed, generated, refining, accepted };

std::string to_string(SessionState state);
SessionState session_state_from_string(const std::string& text);

/// created -> preprocessed -> generated -> refining -> accepted. An
/// unchanged state (refining looping on itself, a re-run of generate, a
/// ground-truth upload) is not a transition and is always legal.
bool is_legal_transition(SessionState from, SessionState to);

struct Iteration {
  std::size_t index = 0;
  std::string prompt_text;
  std::optional<std::size_t> chat_turn;  // index into Session::chat
  std::optional<PromptPatch> patch;
  std::string template_id;
  std::string input_mask;   // file name inside the session directory
  std::string output_mask;  // file name inside the session directory
  std::string input_digest;
  std::string output_digest;
  std::optional<SampleMetrics> metrics;
  std::string metrics_error;
  std::string provider_id;
  std::string response_id;
  int attempt_count = 0;
  double latency_ms = 0.0;
  std::string timestamp;
};

struct Session {
  std::string id;
  SessionState state = SessionState::created;
  bool upload_complete = false;
  std::string created_at;
  std::string input_photo;         // "" until the upload completes
  std::string standardized_photo;  // "" before preprocessing
  Index standardized_size = 0;
  std::string phase2_mask;
  std::string phase2_digest;
  std::string checkpoint;
  std::string ground_truth;
  std::vector<Iteration> iterations;
  std::optional<std::size_t> accepted_iteration;
  std::vector<ChatTurn> chat;
};

nlohmann::ordered_json to_json(const Session& session);
Session session_from_json(const nlohmann::json& j);

/// Fig.-5 style overlay colors on a white canvas.
struct OverlaySpec {
  std::array<double, 3> ground_truth_color{0.0, 0.0, 0.0};
  std::array<double, 3> generated_color{0.0, 0.0, 1.0};
  std::array<double, 3> refined_color{1.0, 0.0, 0.0};
  std::array<double, 3> background{1.0, 1.0, 1.0};
  int thickness = 1;

  void validate() const;
};

/// Boundary pixels of each mask painted in draw order ground truth, then
/// generated, then refined. Lines thicker than 1 px are boundary pixels
/// dilated by (thickness - 1) / 2.
RasterImage render_overlay(const BinaryMask& ground_truth, const BinaryMask& generated, const BinaryMask& refined,
                           const OverlaySpec& spec = {});

struct ServiceConfig {
  std::filesystem::path data_root = "rf-data";
  std::filesystem::path template_dir = RF_DEFAULT_TEMPLATE_DIR;
  std::string default_template = "standard";
  std::string material = "sheet metal";
  BackoffPolicy backoff;
  double provider_timeout_s = 60.0;
  int provider_max_retries = 3;
  double export_px_per_unit = 1.0;
  double export_epsilon = kDefaultSimplifyEpsilon;
};

struct RefineInput {
  std::optional<std::string> text;  // chat path
  std::string template_id;          // explicit path; empty means the default template
  PromptParams params;              // empty: the default patch; material falls back to the config
  std::string provider_id = "mock";
};

struct RefineOutcome {
  Session session;
  bool needs_clarification = false;
  std::string message;
  std::optional<std::size_t> iteration;
};

struct ExportArtifact {
  std::string content;
  std::string file_name;
  std::string media_type;
};

/// Persistent refinement sessions: one directory per session under
/// `<data_root>/sessions` holding session.json plus PNG artifacts. Every
/// mutation of one session runs under that session's lock and ends with an
/// atomic rewrite of session.json; files not referenced by it are removed on
/// startup.
class Service {
 public:
  explicit Service(ServiceConfig config, std::shared_ptr<ProviderRegistry> providers = nullptr);

  const ServiceConfig& config() const { return config_; }
  ProviderRegistry& providers() { return *providers_; }
  const TemplateLibrary& templates() const { return templates_; }

  /// Decodes first; nothing reaches disk for an undecodable upload.
  std::string create_session(std::span<const std::uint8_t> photo_png,
                             std::optional<std::span<const std::uint8_t>> ground_truth_png = std::nullopt);
  /// Two-step upload: the session exists in state created but cannot be
  /// processed until complete_upload.
  std::string reserve_session();
  Session complete_upload(const std::string& id, std::span<const std::uint8_t> photo_png);
  Session set_ground_truth(const std::string& id, std::span<const std::uint8_t> mask_png);

  Session get(const std::string& id) const;
  std::vector<std::string> list() const;

  Session run_preprocess(const std::string& id, Index size);
  /// Standardizes to the checkpoint's image size when not yet preprocessed,
  /// then stores the thresholded generator output as the phase-2 mask.
  Session run_generate(const std::string& id, const std::filesystem::path& checkpoint);
  RefineOutcome run_refine(const std::string& id, const RefineInput& input);
  RasterImage render_overlay(const std::string& id, std::size_t iteration, const OverlaySpec& spec = {}) const;
  Session accept_iteration(const std::string& id, std::size_t index);
  ExportArtifact export_session(const std::string& id, ExportFormat format);

  /// PNG bytes of a stored artifact: photo, standardized, phase2,
  /// ground_truth or iteration-<n>.
  Bytes artifact(const std::string& id, const std::string& name) const;

  /// Test hook invoked at named persistence points: "iteration_mask_written",
  /// "iteration_persisted" and, after every session.json rewrite, "session_persisted".
  std::function<void(std::string_view)> fault_hook;

 private:
  std::filesystem::path session_dir(const std::string& id) const;
  std::shared_ptr<std::mutex> session_lock(const std::string& id);
  Session load(const std::string& id) const;
  void persist(const Session& before, const Session& after);
  void recover();
  std::string next_id();
  std::shared_ptr<const Pix2Pix> model(const std::filesystem::path& checkpoint);
  BinaryMask latest_mask(const Session& session, const std::filesystem::path& dir) const;
  void fault(std::string_view point) const;

  ServiceConfig config_;
  std::shared_ptr<ProviderRegistry> providers_;
  TemplateLibrary templates_;
  mutable std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
  std::map<std::string, std::shared_ptr<const Pix2Pix>> models_;
  std::uint64_t id_counter_ = 0;
};

}  // namespace rf
