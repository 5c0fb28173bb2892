#include "remnantflow/service.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "remnantflow/morphology.hpp"
#include "remnantflow/png_io.hpp"
#include "remnantflow/preprocess.hpp"

namespace rf {
namespace fs = std::filesystem;

namespace {

constexpr const char* kSessionFile = "session.json";

std::string iso_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex_digest(const BinaryMask& mask) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(digest(mask)));
  return buf;
}

nlohmann::ordered_json patch_json(const std::optional<PromptPatch>& patch) {
  if (!patch) return nullptr;
  return {{"action", to_string(patch->action)}, {"region", to_string(patch->region)}};
}

std::optional<PromptPatch> patch_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return PromptPatch{action_from_string(j.at("action").get<std::string>()),
                     region_from_string(j.at("region").get<std::string>())};
}

int rank(SessionState s) { return static_cast<int>(s); }

}  // namespace

std::string to_string(SessionState state) {
  switch (state) {
    case SessionState::created: return "created";
    case SessionState::preprocessed: return "preprocessed";
    case SessionState::generated: return "generated";
    case SessionState::refining: return "refining";
    case SessionState::accepted: return "accepted";
  }
  return "created";
}

SessionState session_state_from_string(const std::string& text) {
  for (auto s : {SessionState::created, SessionState::preprocessed, SessionState::generated, SessionState::refining,
                 SessionState::accepted})
    if (to_string(s) == text) return s;
  throw Error(ErrorKind::validation, "unknown session state '" + text + "'", text);
}

bool is_legal_transition(SessionState from, SessionState to) {
  if (from == to) return true;
  return rank(to) == rank(from) + 1;
}

nlohmann::ordered_json to_json(const Session& s) {
  nlohmann::ordered_json j;
  j["id"] = s.id;
  j["state"] = to_string(s.state);
  j["upload_complete"] = s.upload_complete;
  j["created_at"] = s.created_at;
  j["input_photo"] = s.input_photo;
  j["standardized_photo"] = s.standardized_photo;
  j["standardized_size"] = s.standardized_size;
  j["phase2_mask"] = s.phase2_mask;
  j["phase2_digest"] = s.phase2_digest;
  j["checkpoint"] = s.checkpoint;
  j["ground_truth"] = s.ground_truth;
  j["iterations"] = nlohmann::ordered_json::array();
  for (const auto& it : s.iterations) {
    nlohmann::ordered_json k;
    k["index"] = it.index;
    k["prompt_text"] = it.prompt_text;
    k["chat_turn"] = it.chat_turn ? nlohmann::ordered_json(*it.chat_turn) : nlohmann::ordered_json(nullptr);
    k["patch"] = patch_json(it.patch);
    k["template_id"] = it.template_id;
    k["input_mask"] = it.input_mask;
    k["output_mask"] = it.output_mask;
    k["input_digest"] = it.input_digest;
    k["output_digest"] = it.output_digest;
    if (it.metrics) {
      k["metrics"] = {{"ssim", it.metrics->ssim},
                      {"perceptual", it.metrics->perceptual},
                      {"hausdorff_mean", it.metrics->hausdorff_mean},
                      {"hausdorff_max", it.metrics->hausdorff_max},
                      {"iou", it.metrics->iou}};
    } else {
      k["metrics"] = nullptr;
    }
    k["metrics_error"] = it.metrics_error;
    k["provider_id"] = it.provider_id;
    k["response_id"] = it.response_id;
    k["attempt_count"] = it.attempt_count;
    k["latency_ms"] = it.latency_ms;
    k["timestamp"] = it.timestamp;
    j["iterations"].push_back(k);
  }
  j["accepted_iteration"] =
      s.accepted_iteration ? nlohmann::ordered_json(*s.accepted_iteration) : nlohmann::ordered_json(nullptr);
  j["chat"] = nlohmann::ordered_json::array();
  for (const auto& turn : s.chat)
    j["chat"].push_back({{"role", turn.role == ChatRole::operator_ ? "operator" : "system"},
                         {"text", turn.text},
                         {"timestamp", turn.timestamp},
                         {"derived_prompt_patch", patch_json(turn.derived_prompt_patch)}});
  return j;
}

Session session_from_json(const nlohmann::json& j) {
  Session s;
  try {
    s.id = j.at("id").get<std::string>();
    s.state = session_state_from_string(j.at("state").get<std::string>());
    s.upload_complete = j.at("upload_complete").get<bool>();
    s.created_at = j.at("created_at").get<std::string>();
    s.input_photo = j.at("input_photo").get<std::string>();
    s.standardized_photo = j.at("standardized_photo").get<std::string>();
    s.standardized_size = j.at("standardized_size").get<Index>();
    s.phase2_mask = j.at("phase2_mask").get<std::string>();
    s.phase2_digest = j.at("phase2_digest").get<std::string>();
    s.checkpoint = j.at("checkpoint").get<std::string>();
    s.ground_truth = j.at("ground_truth").get<std::string>();
    for (const auto& k : j.at("iterations")) {
      Iteration it;
      it.index = k.at("index").get<std::size_t>();
      it.prompt_text = k.at("prompt_text").get<std::string>();
      if (!k.at("chat_turn").is_null()) it.chat_turn = k.at("chat_turn").get<std::size_t>();
      it.patch = patch_from(k.at("patch"));
      it.template_id = k.at("template_id").get<std::string>();
      it.input_mask = k.at("input_mask").get<std::string>();
      it.output_mask = k.at("output_mask").get<std::string>();
      it.input_digest = k.at("input_digest").get<std::string>();
      it.output_digest = k.at("output_digest").get<std::string>();
      if (!k.at("metrics").is_null()) {
        const auto& m = k.at("metrics");
        it.metrics = SampleMetrics{s.id,
                                   m.at("ssim").get<double>(),
                                   m.at("perceptual").get<double>(),
                                   m.at("hausdorff_mean").get<double>(),
                                   m.at("hausdorff_max").get<double>(),
                                   m.at("iou").get<double>()};
      }
      it.metrics_error = k.at("metrics_error").get<std::string>();
      it.provider_id = k.at("provider_id").get<std::string>();
      it.response_id = k.at("response_id").get<std::string>();
      it.attempt_count = k.at("attempt_count").get<int>();
      it.latency_ms = k.at("latency_ms").get<double>();
      it.timestamp = k.at("timestamp").get<std::string>();
      s.iterations.push_back(std::move(it));
    }
    if (!j.at("accepted_iteration").is_null()) s.accepted_iteration = j.at("accepted_iteration").get<std::size_t>();
    for (const auto& t : j.at("chat")) {
      ChatTurn turn;
      turn.role = t.at("role").get<std::string>() == "operator" ? ChatRole::operator_ : ChatRole::system;
      turn.text = t.at("text").get<std::string>();
      turn.timestamp = t.at("timestamp").get<std::string>();
      turn.derived_prompt_patch = patch_from(t.at("derived_prompt_patch"));
      s.chat.push_back(std::move(turn));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io, std::string("corrupt session record: ") + e.what());
  }
  return s;
}

void OverlaySpec::validate() const {
  if (ground_truth_color == generated_color || generated_color == refined_color ||
      ground_truth_color == refined_color)
    throw Error(ErrorKind::validation, "overlay colors must be pairwise distinct");
  if (thickness < 1) throw Error(ErrorKind::validation, "overlay thickness must be >= 1");
}

RasterImage render_overlay(const BinaryMask& ground_truth, const BinaryMask& generated, const BinaryMask& refined,
                           const OverlaySpec& spec) {
  spec.validate();
  const Index rows = refined.rows(), cols = refined.cols();
  for (const BinaryMask* m : {&ground_truth, &generated})
    if (m->rows() != rows || m->cols() != cols)
      throw Error(ErrorKind::validation, "overlay masks must share one size");
  RasterImage canvas(rows, cols, 3);
  for (int ch = 0; ch < 3; ++ch) canvas.channel(ch).setConstant(spec.background[ch]);
  auto paint = [&](const BinaryMask& mask, const std::array<double, 3>& color) {
    BinaryMask line = boundary_pixels(mask);
    if (spec.thickness > 1) line = dilate(line, (spec.thickness - 1) / 2);
    for (int ch = 0; ch < 3; ++ch) canvas.channel(ch) = line.select(color[ch], canvas.channel(ch));
  };
  paint(ground_truth, spec.ground_truth_color);
  paint(generated, spec.generated_color);
  paint(refined, spec.refined_color);
  return canvas;
}

// ---------------------------------------------------------------------------

Service::Service(ServiceConfig config, std::shared_ptr<ProviderRegistry> providers)
    : config_(std::move(config)), providers_(providers ? std::move(providers) : std::make_shared<ProviderRegistry>()) {
  if (fs::is_directory(config_.template_dir)) templates_.load_directory(config_.template_dir);
  fs::create_directories(config_.data_root / "sessions");
  recover();
}

fs::path Service::session_dir(const std::string& id) const {
  const bool safe = !id.empty() && std::all_of(id.begin(), id.end(), [](unsigned char ch) { return std::isalnum(ch); });
  if (!safe) throw Error(ErrorKind::not_found, "unknown session '" + id + "'", id);
  return config_.data_root / "sessions" / id;
}

std::shared_ptr<std::mutex> Service::session_lock(const std::string& id) {
  std::lock_guard lock(registry_mutex_);
  auto& slot = locks_[id];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

void Service::recover() {
  const fs::path root = config_.data_root / "sessions";
  std::vector<fs::path> doomed;
  for (const auto& entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory()) continue;
    if (name.rfind(".tmp-", 0) == 0 || !fs::exists(entry.path() / kSessionFile)) {
      doomed.push_back(entry.path());
      continue;
    }
    if (name.size() > 1 && name[0] == 's')
      id_counter_ = std::max<std::uint64_t>(id_counter_, std::strtoull(name.c_str() + 1, nullptr, 10));
    const Session s = load(name);
    std::vector<std::string> referenced{kSessionFile, s.input_photo, s.standardized_photo, s.phase2_mask,
                                        s.ground_truth};
    for (const auto& it : s.iterations) referenced.push_back(it.output_mask);
    for (const auto& file : fs::directory_iterator(entry.path())) {
      const std::string f = file.path().filename().string();
      const bool export_file = f.rfind("export.", 0) == 0 && f.find(".tmp") == std::string::npos;
      if (!export_file && std::find(referenced.begin(), referenced.end(), f) == referenced.end())
        doomed.push_back(file.path());
    }
  }
  for (const auto& p : doomed) fs::remove_all(p);
}

std::string Service::next_id() {
  std::lock_guard lock(registry_mutex_);
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(++id_counter_));
  return buf;
}

Session Service::load(const std::string& id) const {
  const fs::path file = session_dir(id) / kSessionFile;
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::not_found, "unknown session '" + id + "'", id);
  try {
    return session_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::io, "session " + id + " is unreadable: " + e.what(), id);
  }
}

void Service::persist(const Session& before, const Session& after) {
  if (!is_legal_transition(before.state, after.state))
    throw Error(ErrorKind::wrong_state,
                "illegal transition " + to_string(before.state) + " -> " + to_string(after.state), after.id);
  write_file_atomic(session_dir(after.id) / kSessionFile, to_json(after).dump(2) + "\n");
  fault("session_persisted");
}

void Service::fault(std::string_view point) const {
  if (fault_hook) fault_hook(point);
}

std::string Service::create_session(std::span<const std::uint8_t> photo_png,
                                    std::optional<std::span<const std::uint8_t>> ground_truth_png) {
  RasterImage photo;
  BinaryMask truth;
  try {
    photo = decode_png(photo_png);
    if (ground_truth_png) truth = binarize(decode_png(*ground_truth_png));
  } catch (const Error& e) {
    throw Error(ErrorKind::validation, std::string("upload is not a decodable image: ") + e.what());
  }
  const std::string id = next_id();
  const fs::path tmp = config_.data_root / "sessions" / (".tmp-" + id);
  fs::create_directories(tmp);
  Session s;
  s.id = id;
  s.created_at = iso_now();
  s.upload_complete = true;
  s.input_photo = "photo.png";
  write_file_atomic(tmp / s.input_photo, photo_png);
  if (ground_truth_png) {
    s.ground_truth = "ground_truth.png";
    write_mask_png(tmp / s.ground_truth, truth);
  }
  write_file_atomic(tmp / kSessionFile, to_json(s).dump(2) + "\n");
  fs::rename(tmp, session_dir(id));
  return id;
}

std::string Service::reserve_session() {
  const std::string id = next_id();
  const fs::path tmp = config_.data_root / "sessions" / (".tmp-" + id);
  fs::create_directories(tmp);
  Session s;
  s.id = id;
  s.created_at = iso_now();
  write_file_atomic(tmp / kSessionFile, to_json(s).dump(2) + "\n");
  fs::rename(tmp, session_dir(id));
  return id;
}

Session Service::complete_upload(const std::string& id, std::span<const std::uint8_t> photo_png) {
  auto guard = session_lock(id);
  std::lock_guard lock(*guard);
  const Session before = load(id);
  if (before.upload_complete) throw Error(ErrorKind::wrong_state, "session " + id + " already has a photo", id);
  try {
    (void)decode_png(photo_png);
  } catch (const Error& e) {
    throw Error(ErrorKind::validation, std::string("upload is not a decodable image: ") + e.what(), id);
  }
  Session after = before;
  after.input_photo = "photo.png";
  after.upload_complete = true;
  write_file_atomic(session_dir(id) / after.input_photo, photo_png);
  persist(before, after);
  return after;
}

Session Service::set_ground_truth(const std::string& id, std::span<const std::uint8_t> mask_png) {
  auto guard = session_lock(id);
  std::lock_guard lock(*guard);
  const Session before = load(id);
  if (before.state == SessionState::accepted)
    throw Error(ErrorKind::wrong_state, "session " + id + " is accepted and read-only", id);
  BinaryMask truth;
  try {
    truth = binarize(decode_png(mask_png));
  } catch (const Error& e) {
    throw Error(ErrorKind::validation, std::string("ground truth is not a decodable image: ") + e.what(), id);
  }
  Session after = before;
  after.ground_truth = "ground_truth.png";
  write_mask_png(session_dir(id) / after.ground_truth, truth);
  persist(before, after);
  return after;
}

Session Service::get(const std::string& id) const { return load(id); }

std::vector<std::string> Service::list() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(config_.data_root / "sessions")) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && name.rfind(".tmp-", 0) != 0) ids.push_back(name);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

Session Service::run_preprocess(const std::string& id, Index size) {
  if (size < 1) throw Error(ErrorKind::validation, "standardize size must be >= 1");
  auto guard = session_lock(id);
  std::lock_guard lock(*guard);
  const Session before = load(id);
  if (!before.upload_complete) throw Error(ErrorKind::wrong_state, "session " + id + " has no photo yet", id);
  if (before.state != SessionState::created && before.state != SessionState::preprocessed)
    throw Error(ErrorKind::wrong_state, "session " + id + " is already " + to_string(before.state), id);
  const fs::path dir = session_dir(id);
  Session after = before;
  after.standardized_photo = "standardized.png";
  after.standardized_size = size;
  write_png(dir / after.standardized_photo, standardize(read_png(dir / before.input_photo), size));
  after.state = SessionState::preprocessed;
  persist(before, after);
  return after;
}

std::shared_ptr<const Pix2Pix> Service::model(const fs::path& checkpoint) {
  if (!fs::exists(checkpoint))
    throw Error(ErrorKind::not_found, "checkpoint not found: " + checkpoint.string(), checkpoint.string());
  const std::string key = fs::absolute(checkpoint).string() + "@" +
                          std::to_string(fs::last_write_time(checkpoint).time_since_epoch().count());
  std::lock_guard lock(registry_mutex_);
  auto& slot = models_[key];
  if (!slot) slot = std::make_shared<const Pix2Pix>(Pix2Pix::load(checkpoint));
  return slot;
}

Session Service::run_generate(const std::string& id, const fs::path& checkpoint) {
  auto guard = session_lock(id);
  std::lock_guard lock(*guard);
  Session current = load(id);
  if (!current.upload_complete) throw Error(ErrorKind::wrong_state, "session " + id + " has no photo yet", id);
  if (current.state == SessionState::accepted)
    throw Error(ErrorKind::wrong_state, "session " + id + " is accepted and read-only", id);
  const auto net = model(checkpoint);
  const Index size = net->config().image_size;
  const fs::path dir = session_dir(id);

  if (current.state == SessionState::created || current.standardized_size != size) {
    Session after = current;
    after.standardized_photo = "standardized.png";
    after.standardized_size = size;
    write_png(dir / after.standardized_photo, standardize(read_png(dir / current.input_photo), size));
    if (after.state == SessionState::created) after.state = SessionState::preprocessed;
    persist(current, after);
    current = after;
  }

  const BinaryMask mask = net->infer(read_png(dir / current.standardized_photo));
  Session after = current;
  after.phase2_mask = "phase2.png";
  after.phase2_digest = hex_digest(mask);
  after.checkpoint = fs::absolute(checkpoint).string();
  write_mask_png(dir / after.phase2_mask, mask);
  if (after.state == SessionState::preprocessed) after.state = SessionState::generated;
  persist(current, after);
  return after;
}

BinaryMask Service::latest_mask(const Session& s, const fs::path& dir) const {
  const std::string& file = s.iterations.empty() ? s.phase2_mask : s.iterations.back().output_mask;
  return read_mask_png(dir / file);
}

RefineOutcome Service::run_refine(const std::string& id, const RefineInput& input) {
  auto guard = session_lock(id);
  std::lock_guard lock(*guard);
  const Session before = load(id);
  if (before.state != SessionState::generated && before.state != SessionState::refining)
    throw Error(ErrorKind::wrong_state,
                "session " + id + " is " + to_string(before.state) + "; refine needs generated or refining", id);
  const fs::path dir = session_dir(id);
  Session after = before;
  RefineOutcome outcome;

  std::optional<PromptPatch> patch;
  std::optional<std::size_t> turn_index;
  PromptParams params = input.params;
  if (input.text) {
    ChatContext context;
    context.material = config_.material;
    for (auto it = before.iterations.rbegin(); it != before.iterations.rend(); ++it)
      if (it->patch) {
        context.last_patch = it->patch;
        break;
      }
    const ChatOutcome chat = translate_chat(*input.text, context);
    ChatTurn turn{ChatRole::operator_, *input.text, iso_now(), chat.patch};
    after.chat.push_back(turn);
    turn_index = after.chat.size() - 1;
    if (chat.needs_clarification) {
      after.chat.push_back({ChatRole::system, chat.message, iso_now(), std::nullopt});
      persist(before, after);
      outcome.session = after;
      outcome.needs_clarification = true;
      outcome.message = chat.message;
      return outcome;
    }
    patch = chat.patch;
    params = prompt_params(*patch, config_.material);
    outcome.message = chat.message;
  } else if (params.empty()) {
    patch = PromptPatch{};
    params = prompt_params(*patch, config_.material);
  } else {
    params.emplace("material", config_.material);
  }
  const std::string template_id = input.template_id.empty() ? config_.default_template : input.template_id;
  const std::string prompt = render_prompt(templates_.get(template_id), params);

  const BinaryMask source = latest_mask(before, dir);
  RefinementRequest request;
  request.input_mask = source;
  request.prompt = prompt;
  request.provider_id = input.provider_id;
  request.timeout_s = config_.provider_timeout_s;
  request.max_retries = config_.provider_max_retries;
  RefinementResult result;
  try {
    auto provider = providers_->get(input.provider_id);
    result = refine(*provider, request, config_.backoff);
  } catch (const Error& e) {
    after.chat.push_back({ChatRole::system, std::string("Refinement failed: ") + e.what(), iso_now(), std::nullopt});
    persist(before, after);
    throw;
  }

  Iteration it;
  it.index = before.iterations.size();
  it.prompt_text = prompt;
  it.chat_turn = turn_index;
  it.patch = patch;
  it.template_id = template_id;
  it.input_mask = before.iterations.empty() ? before.phase2_mask : before.iterations.back().output_mask;
  char name[32];
  std::snprintf(name, sizeof name, "iteration_%04zu.png", it.index);
  it.output_mask = name;
  it.input_digest = hex_digest(source);
  it.output_digest = hex_digest(result.output);
  it.provider_id = result.provider_id;
  it.response_id = result.raw_response_id;
  it.attempt_count = result.attempt_count;
  it.latency_ms = result.latency_ms;
  it.timestamp = iso_now();
  if (!before.ground_truth.empty()) {
    try {
      const BinaryMask truth = standardize(read_mask_png(dir / before.ground_truth), result.output.rows());
      if (truth.cols() != result.output.cols())
        throw Error(ErrorKind::validation, "ground truth does not match the mask size");
      it.metrics = evaluate_sample(id, truth, result.output);
    } catch (const Error& e) {
      it.metrics_error = e.what();
    }
  }
  write_mask_png(dir / it.output_mask, result.output);
  fault("iteration_mask_written");
  after.chat.push_back({ChatRole::system,
                        "Iteration " + std::to_string(it.index) + " ready (" + result.provider_id + ").", iso_now(),
                        std::nullopt});
  after.iterations.push_back(std::move(it));
  after.state = SessionState::refining;
  persist(before, after);
  fault("iteration_persisted");
  outcome.session = after;
  outcome.iteration = after.iterations.size() - 1;
  return outcome;
}

RasterImage Service::render_overlay(const std::string& id, std::size_t iteration, const OverlaySpec& spec) const {
  const Session s = load(id);
  if (iteration >= s.iterations.size())
    throw Error(ErrorKind::bad_index,
                "iteration " + std::to_string(iteration) + " does not exist (" + std::to_string(s.iterations.size()) +
                    " iterations)",
                std::to_string(iteration));
  if (s.ground_truth.empty())
    throw Error(ErrorKind::missing_ground_truth, "session " + id + " has no ground truth", id);
  const fs::path dir = session_dir(id);
  const BinaryMask refined = read_mask_png(dir / s.iterations[iteration].output_mask);
  const BinaryMask generated = read_mask_png(dir / s.phase2_mask);
  const BinaryMask truth = standardize(read_mask_png(dir / s.ground_truth), refined.rows());
  return rf::render_overlay(truth, generated, refined, spec);
}

Session Service::accept_iteration(const std::string& id, std::size_t index) {
  auto guard = session_lock(id);
  std::lock_guard lock(*guard);
  const Session before = load(id);
  if (before.state == SessionState::accepted)
    throw Error(ErrorKind::wrong_state, "session " + id + " is already accepted", id);
  if (index >= before.iterations.size())
    throw Error(ErrorKind::bad_index,
                "iteration " + std::to_string(index) + " does not exist (" + std::to_string(before.iterations.size()) +
                    " iterations)",
                std::to_string(index));
  Session after = before;
  after.accepted_iteration = index;
  after.state = SessionState::accepted;
  persist(before, after);
  return after;
}

ExportArtifact Service::export_session(const std::string& id, ExportFormat format) {
  auto guard = session_lock(id);
  std::lock_guard lock(*guard);
  const Session s = load(id);
  if (s.state != SessionState::accepted || !s.accepted_iteration)
    throw Error(ErrorKind::wrong_state, "session " + id + " has no accepted iteration to export", id);
  const fs::path dir = session_dir(id);
  const BinaryMask mask = read_mask_png(dir / s.iterations[*s.accepted_iteration].output_mask);
  const PolySet polys = simplify(trace_contours(mask), config_.export_epsilon);
  ExportArtifact artifact;
  artifact.file_name = "export." + to_string(format);
  if (format == ExportFormat::svg) {
    artifact.content = to_svg(polys, config_.export_px_per_unit);
    artifact.media_type = "image/svg+xml";
  } else {
    artifact.content = to_dxf(polys, config_.export_px_per_unit);
    artifact.media_type = "application/dxf";
  }
  write_file_atomic(dir / artifact.file_name, artifact.content);
  return artifact;
}

Bytes Service::artifact(const std::string& id, const std::string& name) const {
  const Session s = load(id);
  std::string file;
  if (name == "photo") file = s.input_photo;
  if (name == "standardized") file = s.standardized_photo;
  if (name == "phase2") file = s.phase2_mask;
  if (name == "ground_truth") file = s.ground_truth;
  if (name.rfind("iteration-", 0) == 0) {
    std::size_t index = 0;
    try {
      index = std::stoul(name.substr(10));
    } catch (const std::exception&) {
      throw Error(ErrorKind::bad_index, "bad iteration reference '" + name + "'", name);
    }
    if (index >= s.iterations.size())
      throw Error(ErrorKind::bad_index, "iteration " + std::to_string(index) + " does not exist", name);
    file = s.iterations[index].output_mask;
  }
  if (file.empty()) throw Error(ErrorKind::not_found, "session " + id + " has no artifact '" + name + "'", name);
  return read_file(session_dir(id) / file);
}

}  // namespace rf
