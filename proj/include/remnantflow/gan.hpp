#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "remnantflow/image.hpp"
#include "remnantflow/nn/networks.hpp"
#include "remnantflow/preprocess.hpp"
#include "remnantflow/synthgen.hpp"

namespace rf {

using nn::GanMode;
using nn::NormKind;

struct GanConfig {
  double learning_rate = 2e-4;
  double l1_weight = 100.0;
  GanMode gan_mode = GanMode::vanilla;
  int generator_depth = 6;
  NormKind norm = NormKind::batch;
  int batch_size = 1;
  int image_size = 64;
  int base_channels = 64;
  std::int64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const GanConfig& config);
GanConfig gan_config_from_json(const nlohmann::json& j);

struct StepLosses {
  double d_loss = 0.0;
  double g_gan = 0.0;
  double g_l1 = 0.0;
};

using Generator = nn::UNetGenerator<float>;
using Discriminator = nn::PatchDiscriminator<float>;

/// Generator-side conversion helpers. Photos enter the networks as 2x-1.
nn::Tensor<float> photos_to_tensor(std::span<const RasterImage> photos);
nn::Tensor<float> masks_to_tensor(std::span<const BinaryMask> masks);

std::unique_ptr<Generator> build_generator(const GanConfig& config);
std::unique_ptr<Discriminator> build_discriminator(const GanConfig& config);

/// Scalar loss value of gan_loss for the given mode/target.
double gan_loss(GanMode mode, const nn::Tensor<float>& logits, bool is_real);

/// Generator, discriminator and their optimizer state. One instance is one
/// training run; train_step is single-threaded and seed-deterministic.
class Pix2Pix {
 public:
  explicit Pix2Pix(const GanConfig& config);
  ~Pix2Pix();
  Pix2Pix(Pix2Pix&&) noexcept;
  Pix2Pix& operator=(Pix2Pix&&) noexcept;

  const GanConfig& config() const { return config_; }
  std::int64_t step() const { return step_; }
  const StepLosses& running_average() const { return running_; }

  /// One discriminator update then one generator update. Throws
  /// ErrorKind::numeric naming the first non-finite loss term.
  StepLosses train_step(std::span<const SamplePair> batch);

  /// Generator output in [0, 1] for a standardized photo.
  Plane<double> predict(const RasterImage& photo) const;
  /// predict() thresholded at 0.5.
  BinaryMask infer(const RasterImage& photo) const;
  /// Mean |G(x) - y| over the pairs.
  double l1_error(std::span<const SamplePair> pairs) const;

  Generator& generator() { return *generator_; }
  Discriminator& discriminator() { return *discriminator_; }

  /// Header `RFGAN1`, config JSON line, step, then float32 parameters
  /// (generator first). Written via temp file + rename.
  void save(const std::filesystem::path& path) const;
  static Pix2Pix load(const std::filesystem::path& path);

 private:
  GanConfig config_;
  std::unique_ptr<Generator> generator_;
  std::unique_ptr<Discriminator> discriminator_;
  std::unique_ptr<nn::Adam<float>> g_opt_, d_opt_;
  std::int64_t step_ = 0;
  StepLosses running_;
};

struct TrainOptions {
  std::int64_t steps = 2000;
  std::optional<AugmentPolicy> augment;  // nullopt disables augmentation
  std::filesystem::path log_csv;          // empty: no log
  std::int64_t log_every = 1;
};

/// Loads training pairs from manifests in order (hybrid synthetic + real),
/// standardizing each photo/mask to the configured image size.
std::vector<SamplePair> load_pairs(const std::vector<DatasetManifest>& manifests, Split split, Index image_size);

/// Runs `options.steps` steps over `train`, cycling through a per-epoch
/// seeded shuffle. Returns the per-step losses.
std::vector<StepLosses> train(Pix2Pix& model, const std::vector<SamplePair>& train, const TrainOptions& options);

/// Appends `step,d_loss,g_gan,g_l1` (header written when the file is new).
void append_training_log(const std::filesystem::path& path, std::int64_t step, const StepLosses& losses);

}  // namespace rf
