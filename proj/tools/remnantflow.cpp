// Command-line front end. Exit codes: 0 ok, 1 validation, 2 runtime or
// provider failure, 3 acceptance threshold not met.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "remnantflow/gan.hpp"
#include "remnantflow/http_api.hpp"
#include "remnantflow/metrics.hpp"
#include "remnantflow/png_io.hpp"
#include "remnantflow/preprocess.hpp"
#include "remnantflow/refine.hpp"
#include "remnantflow/service.hpp"
#include "remnantflow/synthgen.hpp"
#include "remnantflow/vectorize.hpp"

namespace fs = std::filesystem;
using namespace rf;

namespace {

constexpr int kOk = 0, kValidation = 1, kRuntime = 2, kThreshold = 3;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::provider_unavailable:
    case ErrorKind::protocol:
    case ErrorKind::io:
    case ErrorKind::numeric:
    case ErrorKind::generation_failed: return kRuntime;
    default: return kValidation;
  }
}

int fail(std::string_view code, std::string message, int status) {
  for (char& ch : message)
    if (ch == '\n' || ch == '\r') ch = ' ';
  std::cerr << "RF-ERR: " << code << ": " << message << '\n';
  return status;
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::not_found, "cannot open " + path.string(), path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::validation, path.string() + " is not JSON: " + e.what(), path.string());
  }
}

std::array<double, 3> parse_ratios(const std::string& text) {
  std::array<double, 3> ratios{};
  std::istringstream in(text);
  char comma = 0;
  if (!(in >> ratios[0] >> comma >> ratios[1] >> comma >> ratios[2]))
    throw Error(ErrorKind::validation, "--split expects train,val,test ratios, got '" + text + "'", text);
  return ratios;
}

void write_text(const fs::path& path, const std::string& text) { write_file_atomic(path, text); }

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::size_t n = 0;
  fs::path out;
  std::int64_t seed = 0;
  Index size = 256;
  fs::path config;
  std::string split = "0.8,0.1,0.1";
};

int run_synth(const SynthArgs& a) {
  SynthConfig config;
  if (!a.config.empty()) config = synth_config_from_json(read_json_file(a.config));
  else config.rows = config.cols = a.size;
  const DatasetManifest manifest = generate_dataset(a.n, config, parse_ratios(a.split), a.out, a.seed);
  std::cout << "wrote " << manifest.entries.size() << " pairs to " << (a.out / "manifest.json").string() << '\n';
  return kOk;
}

struct PreprocessArgs {
  fs::path in, out;
  Index size = 1024;
  bool mask = false;
};

int run_preprocess(const PreprocessArgs& a) {
  if (a.size < 1) throw Error(ErrorKind::validation, "--size must be >= 1");
  if (a.mask) write_mask_png(a.out, standardize(read_mask_png(a.in), a.size));
  else write_png(a.out, standardize(read_png(a.in), a.size));
  return kOk;
}

struct TrainArgs {
  std::vector<fs::path> manifests;
  fs::path config, checkpoint, log;
  std::optional<std::int64_t> steps, seed;
  bool no_augment = false;
  std::int64_t augment_seed = 0;
  std::int64_t log_every = 1;
};

int run_train(const TrainArgs& a) {
  GanConfig config;
  if (!a.config.empty()) config = gan_config_from_json(read_json_file(a.config));
  if (a.seed) config.seed = *a.seed;
  config.validate();
  std::vector<DatasetManifest> manifests;
  for (const auto& m : a.manifests) manifests.push_back(load_manifest(m));
  const auto pairs = load_pairs(manifests, Split::train, config.image_size);
  TrainOptions options;
  if (a.steps) options.steps = *a.steps;
  if (!a.no_augment) {
    AugmentPolicy policy;
    policy.seed = a.augment_seed;
    options.augment = policy;
  }
  options.log_csv = a.log;
  options.log_every = a.log_every;
  if (!a.log.empty() && fs::exists(a.log)) fs::remove(a.log);
  Pix2Pix model(config);
  const auto trace = train(model, pairs, options);
  model.save(a.checkpoint);
  if (!trace.empty())
    std::cout << "step " << model.step() << " d_loss " << trace.back().d_loss << " g_gan " << trace.back().g_gan
              << " g_l1 " << trace.back().g_l1 << '\n';
  return kOk;
}

struct InferArgs {
  fs::path checkpoint, in, out, manifest;
  std::string split = "test";
};

int run_infer(const InferArgs& a) {
  if (!fs::exists(a.checkpoint))
    throw Error(ErrorKind::not_found, "checkpoint not found: " + a.checkpoint.string(), a.checkpoint.string());
  const Pix2Pix model = Pix2Pix::load(a.checkpoint);
  const Index size = model.config().image_size;
  if (!a.manifest.empty()) {
    const DatasetManifest manifest = load_manifest(a.manifest);
    fs::create_directories(a.out);
    std::size_t count = 0;
    for (const auto& e : manifest.split(split_from_string(a.split))) {
      write_mask_png(a.out / (e.id + ".png"), model.infer(standardize(read_png(manifest.photo_path(e)), size)));
      ++count;
    }
    std::cout << "wrote " << count << " masks to " << a.out.string() << '\n';
    return kOk;
  }
  if (a.in.empty()) throw Error(ErrorKind::validation, "infer needs --in or --manifest");
  write_mask_png(a.out, model.infer(standardize(read_png(a.in), size)));
  return kOk;
}

struct RefineArgs {
  fs::path in, out, templates = RF_DEFAULT_TEMPLATE_DIR;
  std::string template_id = "standard", provider = "mock", text, material = "sheet metal";
  std::vector<std::string> params;
  int max_retries = 3;
  double timeout = 60.0;
};

int run_refine(const RefineArgs& a) {
  TemplateLibrary library;
  library.load_directory(a.templates);
  PromptPatch patch;
  if (!a.text.empty()) {
    const ChatOutcome chat = translate_chat(a.text);
    if (chat.needs_clarification) throw Error(ErrorKind::validation, chat.message, a.text);
    patch = *chat.patch;
  }
  PromptParams params = prompt_params(patch, a.material);
  for (const auto& kv : a.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::validation, "--param expects key=value, got '" + kv + "'", kv);
    params[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  RefinementRequest request;
  request.input_mask = read_mask_png(a.in);
  request.prompt = render_prompt(library.get(a.template_id), params);
  request.provider_id = a.provider;
  request.max_retries = a.max_retries;
  request.timeout_s = a.timeout;
  ProviderRegistry registry;
  auto provider = registry.get(a.provider);
  const RefinementResult result = refine(*provider, request);
  write_mask_png(a.out, result.output);
  std::cout << "provider " << result.provider_id << " attempts " << result.attempt_count << " response "
            << result.raw_response_id << '\n';
  return kOk;
}

struct EvalArgs {
  fs::path manifest, pred, report, compare, table;
  std::string label = "method", split = "test", backend = kProxyBackend;
  std::optional<double> min_ssim, min_iou, max_hausdorff, max_perceptual;
};

int run_eval(const EvalArgs& a) {
  MetricsReport report;
  if (!a.manifest.empty()) {
    if (a.pred.empty()) throw Error(ErrorKind::validation, "eval --manifest needs --pred");
    report = evaluate_pairset(load_manifest(a.manifest), a.pred, a.label, split_from_string(a.split), a.backend);
    if (!a.report.empty()) save_report(report, a.report);
  } else if (!a.report.empty()) {
    report = load_report(a.report);
  } else {
    throw Error(ErrorKind::validation, "eval needs --manifest and --pred, or an existing --report");
  }
  std::string table;
  if (!a.compare.empty()) table = render_comparison(report, load_report(a.compare));
  else table = render_table(report);
  std::cout << table;
  if (!a.table.empty()) write_text(a.table, table);

  for (const auto& e : report.errors) std::cerr << "sample " << e.id << ": " << e.message << '\n';
  if (!report.errors.empty())
    return fail("validation", std::to_string(report.errors.size()) + " sample(s) could not be evaluated", kValidation);
  if (report.n == 0) return fail("validation", "no samples evaluated", kValidation);

  std::vector<std::string> misses;
  auto mean = [&](const char* key) { return report.aggregate.at(key).mean; };
  if (a.min_ssim && mean("ssim") < *a.min_ssim) misses.push_back("ssim");
  if (a.min_iou && mean("iou") < *a.min_iou) misses.push_back("iou");
  if (a.max_hausdorff && mean("hausdorff_mean") > *a.max_hausdorff) misses.push_back("hausdorff_mean");
  if (a.max_perceptual && mean("perceptual") > *a.max_perceptual) misses.push_back("perceptual");
  if (!misses.empty()) {
    std::string names;
    for (const auto& m : misses) names += (names.empty() ? "" : ",") + m;
    return fail("threshold", "acceptance threshold not met: " + names, kThreshold);
  }
  return kOk;
}

struct OverlayArgs {
  fs::path gt, gen, refined, out;
  int thickness = 1;
};

int run_overlay(const OverlayArgs& a) {
  OverlaySpec spec;
  spec.thickness = a.thickness;
  write_png(a.out, render_overlay(read_mask_png(a.gt), read_mask_png(a.gen), read_mask_png(a.refined), spec));
  return kOk;
}

struct ExportArgs {
  fs::path mask, out;
  std::string format = "svg";
  double px_per_unit = 1.0, epsilon = kDefaultSimplifyEpsilon;
};

int run_export(const ExportArgs& a) {
  const ExportFormat format = export_format_from_string(a.format);
  if (a.epsilon < 0) throw Error(ErrorKind::validation, "--epsilon must be >= 0");
  const PolySet polys = simplify(trace_contours(read_mask_png(a.mask)), a.epsilon);
  export_polyset(polys, format, a.out, a.px_per_unit);
  std::cout << polys.outers.size() << " outer(s), " << polys.holes.size() << " hole(s)\n";
  return kOk;
}

struct ServeArgs {
  std::string addr = "127.0.0.1:8080";
  fs::path data_root = "rf-data", templates = RF_DEFAULT_TEMPLATE_DIR;
};

int run_serve(const ServeArgs& a) {
  const auto colon = a.addr.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorKind::validation, "--addr expects host:port", a.addr);
  const std::string host = a.addr.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(a.addr.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorKind::validation, "--addr expects host:port", a.addr);
  }
  ServiceConfig config;
  config.data_root = a.data_root;
  config.template_dir = a.templates;
  Service service(config);
  HttpApi api(service);
  std::cout << "listening on " << host << ':' << port << std::endl;
  if (!api.listen(host, port)) throw Error(ErrorKind::io, "cannot listen on " + a.addr, a.addr);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"remnantflow: photos of sheet remnants to CAD contours"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "remnantflow 0.1.0");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic photo/mask dataset");
  c_synth->add_option("--n", synth.n, "Number of pairs")->required();
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--seed", synth.seed, "Base seed (entry i uses seed + i)");
  c_synth->add_option("--size", synth.size, "Square image size in px (ignored with --config)");
  c_synth->add_option("--config", synth.config, "SynthConfig JSON file");
  c_synth->add_option("--split", synth.split, "train,val,test ratios");

  PreprocessArgs pre;
  auto* c_pre = app.add_subcommand("preprocess", "Center crop/pad an image to a square size");
  c_pre->add_option("--in", pre.in, "Input PNG")->required()->check(CLI::ExistingFile);
  c_pre->add_option("--out", pre.out, "Output PNG")->required();
  c_pre->add_option("--size", pre.size, "Target size in px");
  c_pre->add_flag("--mask", pre.mask, "Treat the input as a binary mask");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train the contour generator");
  c_train->add_option("--manifest", tr.manifests, "Dataset manifest (repeatable; order sets the mix)")->required();
  c_train->add_option("--config", tr.config, "GanConfig JSON file");
  c_train->add_option("--out-checkpoint", tr.checkpoint, "Checkpoint path")->required();
  c_train->add_option("--steps", tr.steps, "Training steps (default 2000)");
  c_train->add_option("--seed", tr.seed, "Overrides the config seed");
  c_train->add_option("--log", tr.log, "Training log CSV");
  c_train->add_option("--log-every", tr.log_every, "Log every k steps");
  c_train->add_flag("--no-augment", tr.no_augment, "Disable flips/rotations/brightness");
  c_train->add_option("--augment-seed", tr.augment_seed, "Augmentation seed");

  InferArgs inf;
  auto* c_infer = app.add_subcommand("infer", "Predict contour masks with a checkpoint");
  c_infer->add_option("--checkpoint", inf.checkpoint, "Checkpoint path")->required();
  c_infer->add_option("--in", inf.in, "Input photo PNG");
  c_infer->add_option("--manifest", inf.manifest, "Predict every entry of --split instead");
  c_infer->add_option("--split", inf.split, "Split for --manifest");
  c_infer->add_option("--out", inf.out, "Output PNG, or directory with --manifest")->required();

  RefineArgs ref;
  auto* c_refine = app.add_subcommand("refine", "Refine a mask through a provider");
  c_refine->add_option("--in", ref.in, "Input mask PNG")->required()->check(CLI::ExistingFile);
  c_refine->add_option("--out", ref.out, "Output mask PNG")->required();
  c_refine->add_option("--template", ref.template_id, "Prompt template id");
  c_refine->add_option("--templates", ref.templates, "Template directory");
  c_refine->add_option("--provider", ref.provider, "Provider id (mock is offline)");
  c_refine->add_option("--text", ref.text, "Operator request translated into template parameters");
  c_refine->add_option("--param", ref.params, "Template parameter key=value (repeatable)");
  c_refine->add_option("--material", ref.material, "Material name for the prompt");
  c_refine->add_option("--max-retries", ref.max_retries, "Retries on transient provider failures");
  c_refine->add_option("--timeout", ref.timeout, "Provider timeout in seconds");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Score predictions against ground truth");
  c_eval->add_option("--manifest", ev.manifest, "Dataset manifest");
  c_eval->add_option("--pred", ev.pred, "Directory of <id>.png predictions");
  c_eval->add_option("--label", ev.label, "Method label");
  c_eval->add_option("--report", ev.report, "Report JSON (written with --manifest, read otherwise)");
  c_eval->add_option("--split", ev.split, "Split to evaluate");
  c_eval->add_option("--backend", ev.backend, "Perceptual backend");
  c_eval->add_option("--compare", ev.compare, "Second report JSON: print a two-method table");
  c_eval->add_option("--table", ev.table, "Also write the table to this file");
  c_eval->add_option("--min-ssim", ev.min_ssim, "Exit 3 if mean SSIM is lower");
  c_eval->add_option("--min-iou", ev.min_iou, "Exit 3 if mean IoU is lower");
  c_eval->add_option("--max-hausdorff", ev.max_hausdorff, "Exit 3 if mean Hausdorff-mean is higher");
  c_eval->add_option("--max-perceptual", ev.max_perceptual, "Exit 3 if mean perceptual distance is higher");

  OverlayArgs ov;
  auto* c_overlay = app.add_subcommand("overlay", "Render a ground-truth/generated/refined contour overlay");
  c_overlay->add_option("--gt", ov.gt, "Ground-truth mask")->required()->check(CLI::ExistingFile);
  c_overlay->add_option("--gen", ov.gen, "Generated mask")->required()->check(CLI::ExistingFile);
  c_overlay->add_option("--refined", ov.refined, "Refined mask")->required()->check(CLI::ExistingFile);
  c_overlay->add_option("--out", ov.out, "Output PNG")->required();
  c_overlay->add_option("--thickness", ov.thickness, "Line thickness in px");

  ExportArgs ex;
  auto* c_export = app.add_subcommand("export", "Vectorize a mask to SVG or DXF");
  c_export->add_option("--mask", ex.mask, "Mask PNG")->required()->check(CLI::ExistingFile);
  c_export->add_option("--format", ex.format, "svg or dxf");
  c_export->add_option("--out", ex.out, "Output file")->required();
  c_export->add_option("--px-per-unit", ex.px_per_unit, "Pixels per drawing unit");
  c_export->add_option("--epsilon", ex.epsilon, "Simplification tolerance in px");

  ServeArgs sv;
  auto* c_serve = app.add_subcommand("serve", "Run the HTTP session service");
  c_serve->add_option("--addr", sv.addr, "host:port");
  c_serve->add_option("--data-root", sv.data_root, "Session storage directory");
  c_serve->add_option("--templates", sv.templates, "Template directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("validation", e.what(), kValidation);
  }

  try {
    if (c_synth->parsed()) return run_synth(synth);
    if (c_pre->parsed()) return run_preprocess(pre);
    if (c_train->parsed()) return run_train(tr);
    if (c_infer->parsed()) return run_infer(inf);
    if (c_refine->parsed()) return run_refine(ref);
    if (c_eval->parsed()) return run_eval(ev);
    if (c_overlay->parsed()) return run_overlay(ov);
    if (c_export->parsed()) return run_export(ex);
    if (c_serve->parsed()) return run_serve(sv);
  } catch (const Error& e) {
    const std::string detail = e.detail().empty() ? "" : " [" + e.detail() + "]";
    return fail(to_string(e.kind()), e.what() + detail, exit_code(e.kind()));
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kRuntime);
  }
  return kValidation;
}
