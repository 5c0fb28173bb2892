#include "remnantflow/gan.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "remnantflow/png_io.hpp"

namespace rf {
namespace {

constexpr char kMagic[] = "RFGAN1";

std::mt19937_64 seeded(std::int64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(static_cast<std::uint64_t>(seed) >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

const char* mode_name(GanMode m) { return m == GanMode::vanilla ? "vanilla" : "least_squares"; }
const char* norm_name(NormKind n) { return n == NormKind::batch ? "batch" : "instance"; }

void require_finite(double value, const char* term, std::int64_t step) {
  if (!std::isfinite(value))
    throw Error(ErrorKind::numeric,
                std::string("non-finite loss term ") + term + " at step " + std::to_string(step), term);
}

nn::Tensor<float> discriminator_input(const nn::Tensor<float>& photos, const nn::Tensor<float>& masks) {
  nn::Tensor<float> m = masks;
  m.data = (masks.data.array() * 2.0f - 1.0f).matrix();
  return nn::concat_channels(photos, m);
}

void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

void GanConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::validation, "invalid GAN config: " + what, what); };
  if (!(learning_rate > 0)) fail("learning_rate must be > 0");
  if (!(l1_weight >= 0)) fail("l1_weight must be >= 0");
  if (generator_depth < 3) fail("generator_depth must be >= 3");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (base_channels < 8) fail("base_channels must be >= 8");
  if (image_size < 1 || (image_size & (image_size - 1)) != 0) fail("image_size must be a power of two");
  if (generator_depth >= 31 || image_size < (1 << generator_depth))
    fail("image_size must be >= 2^generator_depth");
  if (nn::patch_output_size(image_size) < 1) fail("image_size too small for the patch discriminator");
}

nlohmann::json to_json(const GanConfig& c) {
  nlohmann::ordered_json j;
  j["learning_rate"] = c.learning_rate;
  j["l1_weight"] = c.l1_weight;
  j["gan_mode"] = mode_name(c.gan_mode);
  j["generator_depth"] = c.generator_depth;
  j["norm"] = norm_name(c.norm);
  j["batch_size"] = c.batch_size;
  j["image_size"] = c.image_size;
  j["base_channels"] = c.base_channels;
  j["seed"] = c.seed;
  return j;
}

GanConfig gan_config_from_json(const nlohmann::json& j) {
  GanConfig c;
  try {
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("l1_weight")) c.l1_weight = j.at("l1_weight").get<double>();
    if (j.contains("gan_mode")) {
      const auto m = j.at("gan_mode").get<std::string>();
      if (m == "vanilla")
        c.gan_mode = GanMode::vanilla;
      else if (m == "least_squares" || m == "lsgan")
        c.gan_mode = GanMode::least_squares;
      else
        throw Error(ErrorKind::validation, "unknown gan_mode '" + m + "'");
    }
    if (j.contains("generator_depth")) c.generator_depth = j.at("generator_depth").get<int>();
    if (j.contains("norm")) {
      const auto n = j.at("norm").get<std::string>();
      if (n == "batch")
        c.norm = NormKind::batch;
      else if (n == "instance")
        c.norm = NormKind::instance;
      else
        throw Error(ErrorKind::validation, "unknown norm '" + n + "'");
    }
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
    if (j.contains("image_size")) c.image_size = j.at("image_size").get<int>();
    if (j.contains("base_channels")) c.base_channels = j.at("base_channels").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::validation, std::string("bad GAN config: ") + e.what());
  }
  c.validate();
  return c;
}

nn::Tensor<float> photos_to_tensor(std::span<const RasterImage> photos) {
  if (photos.empty()) throw Error(ErrorKind::validation, "empty photo batch");
  const Index h = photos[0].rows(), w = photos[0].cols();
  nn::Tensor<float> t(static_cast<Index>(photos.size()), 3, h, w);
  for (std::size_t b = 0; b < photos.size(); ++b) {
    const RasterImage rgb = to_rgb(photos[b]);
    if (rgb.rows() != h || rgb.cols() != w) throw Error(ErrorKind::validation, "photo batch has mixed sizes");
    for (Index ch = 0; ch < 3; ++ch)
      for (Index y = 0; y < h; ++y)
        for (Index x = 0; x < w; ++x)
          t.data(ch, t.column(static_cast<Index>(b), y, x)) = static_cast<float>(2.0 * rgb(y, x, ch) - 1.0);
  }
  return t;
}

nn::Tensor<float> masks_to_tensor(std::span<const BinaryMask> masks) {
  if (masks.empty()) throw Error(ErrorKind::validation, "empty mask batch");
  const Index h = masks[0].rows(), w = masks[0].cols();
  nn::Tensor<float> t(static_cast<Index>(masks.size()), 1, h, w);
  for (std::size_t b = 0; b < masks.size(); ++b) {
    if (masks[b].rows() != h || masks[b].cols() != w) throw Error(ErrorKind::validation, "mask batch has mixed sizes");
    for (Index y = 0; y < h; ++y)
      for (Index x = 0; x < w; ++x) t.data(0, t.column(static_cast<Index>(b), y, x)) = masks[b](y, x) ? 1.0f : 0.0f;
  }
  return t;
}

std::unique_ptr<Generator> build_generator(const GanConfig& config) {
  config.validate();
  auto rng = seeded(config.seed, 1);
  nn::UNetSpec spec;
  spec.depth = config.generator_depth;
  spec.base_channels = config.base_channels;
  spec.norm = config.norm;
  return std::make_unique<Generator>(spec, rng);
}

std::unique_ptr<Discriminator> build_discriminator(const GanConfig& config) {
  config.validate();
  auto rng = seeded(config.seed, 2);
  nn::PatchSpec spec;
  spec.base_channels = config.base_channels;
  spec.norm = config.norm;
  return std::make_unique<Discriminator>(spec, rng);
}

double gan_loss(GanMode mode, const nn::Tensor<float>& logits, bool is_real) {
  return nn::gan_loss<float>(mode, logits, is_real).loss;
}

Pix2Pix::Pix2Pix(const GanConfig& config)
    : config_(config), generator_(build_generator(config)), discriminator_(build_discriminator(config)) {
  const auto lr = static_cast<float>(config.learning_rate);
  g_opt_ = std::make_unique<nn::Adam<float>>(generator_->params(), lr);
  d_opt_ = std::make_unique<nn::Adam<float>>(discriminator_->params(), lr);
}

Pix2Pix::~Pix2Pix() = default;
Pix2Pix::Pix2Pix(Pix2Pix&&) noexcept = default;
Pix2Pix& Pix2Pix::operator=(Pix2Pix&&) noexcept = default;

StepLosses Pix2Pix::train_step(std::span<const SamplePair> batch) {
  if (batch.empty()) throw Error(ErrorKind::validation, "train_step needs at least one pair");
  std::vector<RasterImage> photos;
  std::vector<BinaryMask> masks;
  for (const auto& pair : batch) {
    if (pair.photo.rows() != config_.image_size || pair.photo.cols() != config_.image_size ||
        pair.mask.rows() != config_.image_size || pair.mask.cols() != config_.image_size)
      throw Error(ErrorKind::validation, "training pair " + pair.id + " is not " + std::to_string(config_.image_size) +
                                             "x" + std::to_string(config_.image_size));
    photos.push_back(pair.photo);
    masks.push_back(pair.mask);
  }
  const nn::Tensor<float> x = photos_to_tensor(photos);
  const nn::Tensor<float> y = masks_to_tensor(masks);

  Generator::Tape g_tape;
  const nn::Tensor<float> fake = generator_->forward(x, &g_tape);
  const nn::Tensor<float> fake_in = discriminator_input(x, fake);
  const nn::Tensor<float> real_in = discriminator_input(x, y);

  // Discriminator: real pair vs detached generated pair.
  d_opt_->zero_grad();
  Discriminator::Tape d_tape;
  auto fake_loss = nn::gan_loss<float>(config_.gan_mode, discriminator_->forward(fake_in, &d_tape), false);
  fake_loss.grad.data *= 0.5f;
  discriminator_->backward(fake_loss.grad, d_tape);
  auto real_loss = nn::gan_loss<float>(config_.gan_mode, discriminator_->forward(real_in, &d_tape), true);
  real_loss.grad.data *= 0.5f;
  discriminator_->backward(real_loss.grad, d_tape);

  StepLosses losses;
  losses.d_loss = 0.5 * (static_cast<double>(fake_loss.loss) + static_cast<double>(real_loss.loss));
  require_finite(losses.d_loss, "d_loss", step_);
  d_opt_->step();

  // Generator: fool the updated discriminator and match the target in L1.
  g_opt_->zero_grad();
  auto adv = nn::gan_loss<float>(config_.gan_mode, discriminator_->forward(fake_in, &d_tape), true);
  const nn::Tensor<float> d_input_grad = discriminator_->backward(adv.grad, d_tape);
  nn::Tensor<float> d_fake = nn::slice_channels(d_input_grad, 3, 1);
  d_fake.data *= 2.0f;
  auto l1 = nn::l1_loss<float>(fake, y);
  if (config_.l1_weight != 0.0) d_fake.data += static_cast<float>(config_.l1_weight) * l1.grad.data;
  losses.g_gan = adv.loss;
  losses.g_l1 = l1.loss;
  require_finite(losses.g_gan, "g_gan", step_);
  require_finite(losses.g_l1, "g_l1", step_);
  generator_->backward(d_fake, g_tape);
  g_opt_->step();

  ++step_;
  const double k = static_cast<double>(step_);
  running_.d_loss += (losses.d_loss - running_.d_loss) / k;
  running_.g_gan += (losses.g_gan - running_.g_gan) / k;
  running_.g_l1 += (losses.g_l1 - running_.g_l1) / k;
  return losses;
}

Plane<double> Pix2Pix::predict(const RasterImage& photo) const {
  if (photo.rows() != config_.image_size || photo.cols() != config_.image_size)
    throw Error(ErrorKind::validation, "photo is " + std::to_string(photo.rows()) + "x" + std::to_string(photo.cols()) +
                                           ", generator expects " + std::to_string(config_.image_size) + "x" +
                                           std::to_string(config_.image_size));
  const RasterImage rgb = to_rgb(photo);
  const nn::Tensor<float> out = generator_->forward(photos_to_tensor(std::span(&rgb, 1)), nullptr);
  Plane<double> soft(out.h, out.w);
  for (Index r = 0; r < out.h; ++r)
    for (Index c = 0; c < out.w; ++c) soft(r, c) = out.data(0, out.column(0, r, c));
  return soft;
}

BinaryMask Pix2Pix::infer(const RasterImage& photo) const { return predict(photo) >= 0.5; }

double Pix2Pix::l1_error(std::span<const SamplePair> pairs) const {
  if (pairs.empty()) throw Error(ErrorKind::validation, "l1_error needs pairs");
  double total = 0.0;
  for (const auto& p : pairs) total += (predict(p.photo) - p.mask.cast<double>()).abs().mean();
  return total / static_cast<double>(pairs.size());
}

void Pix2Pix::save(const std::filesystem::path& path) const {
  std::ostringstream out(std::ios::binary);
  out << kMagic << '\n' << to_json(config_).dump() << '\n';
  write_u64(out, static_cast<std::uint64_t>(step_));
  for (auto params : {generator_->params(), discriminator_->params()}) {
    write_u64(out, params.size());
    for (const auto* p : params) {
      write_u64(out, static_cast<std::uint64_t>(p->value.size()));
      out.write(reinterpret_cast<const char*>(p->value.data()),
                static_cast<std::streamsize>(p->value.size() * sizeof(float)));
    }
  }
  write_file_atomic(path, out.str());
}

Pix2Pix Pix2Pix::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::not_found, "checkpoint not found: " + path.string(), path.string());
  std::string magic, config_line;
  std::getline(in, magic);
  if (magic != kMagic) throw Error(ErrorKind::validation, "not an RFGAN1 checkpoint: " + path.string(), path.string());
  std::getline(in, config_line);
  GanConfig config;
  try {
    config = gan_config_from_json(nlohmann::json::parse(config_line));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::validation, "checkpoint config unreadable: " + std::string(e.what()), path.string());
  }
  Pix2Pix model(config);
  model.step_ = static_cast<std::int64_t>(read_u64(in));
  for (auto params : {model.generator_->params(), model.discriminator_->params()}) {
    if (read_u64(in) != params.size())
      throw Error(ErrorKind::validation, "checkpoint parameter layout mismatch", path.string());
    for (auto* p : params) {
      if (read_u64(in) != static_cast<std::uint64_t>(p->value.size()))
        throw Error(ErrorKind::validation, "checkpoint tensor size mismatch for " + p->name, path.string());
      in.read(reinterpret_cast<char*>(p->value.data()), static_cast<std::streamsize>(p->value.size() * sizeof(float)));
    }
  }
  if (!in) throw Error(ErrorKind::validation, "truncated checkpoint " + path.string(), path.string());
  return model;
}

std::vector<SamplePair> load_pairs(const std::vector<DatasetManifest>& manifests, Split split, Index image_size) {
  std::vector<SamplePair> pairs;
  for (const auto& manifest : manifests)
    for (const auto& e : manifest.entries) {
      if (e.split != split) continue;
      SamplePair pair;
      pair.id = e.id;
      pair.spec_seed = e.seed;
      pair.photo = standardize(read_png(manifest.photo_path(e)), image_size);
      pair.mask = standardize(read_mask_png(manifest.mask_path(e)), image_size);
      pairs.push_back(std::move(pair));
    }
  return pairs;
}

std::vector<StepLosses> train(Pix2Pix& model, const std::vector<SamplePair>& train, const TrainOptions& options) {
  if (train.empty()) throw Error(ErrorKind::validation, "no training pairs");
  const GanConfig& config = model.config();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  std::int64_t epoch = 0;
  std::int64_t sample_counter = 0;
  std::vector<StepLosses> trace;
  trace.reserve(static_cast<std::size_t>(options.steps));
  std::vector<SamplePair> batch;
  for (std::int64_t s = 0; s < options.steps; ++s) {
    batch.clear();
    for (int k = 0; k < config.batch_size; ++k) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), 0);
        auto rng = seeded(config.seed, 0x5eed0000ULL + static_cast<std::uint64_t>(epoch++));
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const SamplePair& pair = train[order[cursor++]];
      batch.push_back(options.augment ? augment(pair, *options.augment, sample_counter) : pair);
      ++sample_counter;
    }
    trace.push_back(model.train_step(batch));
    if (!options.log_csv.empty() && (model.step() % options.log_every == 0))
      append_training_log(options.log_csv, model.step(), trace.back());
  }
  return trace;
}

void append_training_log(const std::filesystem::path& path, std::int64_t step, const StepLosses& losses) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorKind::io, "cannot append to " + path.string(), path.string());
  if (fresh) out << "step,d_loss,g_gan,g_l1\n";
  char line[160];
  std::snprintf(line, sizeof line, "%lld,%.9g,%.9g,%.9g\n", static_cast<long long>(step), losses.d_loss, losses.g_gan,
                losses.g_l1);
  out << line;
}

}  // namespace rf
