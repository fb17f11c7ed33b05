#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "netforge/checkpoint.hpp"
#include "netforge/executor.hpp"
#include "netforge/graph.hpp"
#include "netforge/params.hpp"

namespace netforge {

struct TrainConfig {
  double lr0 = 0.01;
  double decay_factor = 5.0;
  std::size_t step_epochs = 10;
  std::size_t epochs = 50;
  std::size_t batch_train = 128;
  std::size_t batch_val = 64;
  double momentum = 0.9;
  std::size_t resize = 256;  // source extent images are brought to before cropping
  std::size_t crop = 227;
  bool mirror = true;
  std::array<float, 3> mean{0.0f, 0.0f, 0.0f};
  float pixel_scale = 1.0f;  // applied after mean subtraction
  double weight_decay = 0.0;
  bool halve_weight_decay = false;  // halves weight_decay at every lr step when set
  std::uint64_t seed = 1;
};

// Throws InputError for lr0 <= 0, decay_factor <= 1, crop > resize and other
// unusable values.
void check_config(const TrainConfig& cfg);

nlohmann::ordered_json config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const nlohmann::ordered_json& doc);

// lr0 / decay_factor^floor(epoch / step_epochs)
double lr_at(std::size_t epoch, const TrainConfig& cfg);
double weight_decay_at(std::size_t epoch, const TrainConfig& cfg);

struct CropWindow {
  std::size_t y = 0;
  std::size_t x = 0;
  bool mirror = false;
};

// Center window for eval: offsets floor((extent - crop) / 2), no mirror.
CropWindow center_window(std::size_t extent, const TrainConfig& cfg);
// Uniform offsets in [0, extent - crop] and a fair-coin mirror when cfg.mirror.
CropWindow random_window(std::size_t extent, const TrainConfig& cfg, std::mt19937_64& rng);

// image: [3,S,S] raw pixel values. Returns [3,crop,crop] of
// (pixel - mean) * pixel_scale read through `window`.
Tensor<float> crop_image(const Tensor<float>& image, const TrainConfig& cfg, const CropWindow& window);
Tensor<float> preprocess(const Tensor<float>& image, const TrainConfig& cfg, Mode mode,
                         std::mt19937_64& rng);

// v = momentum * v + lr * (g + decay * w); w -= v. Empty momentum buffers are
// created as zeros. Throws StateError when a weight has no gradient.
void sgd_step(ParamSet<float>& weights, const ParamSet<float>& grads, ParamSet<float>& momentum,
              double lr, double momentum_coeff, double weight_decay = 0.0);

// Fraction of rows whose label ranks among the k largest logits; equal logits
// rank the smaller class index first. k is clamped to the class count.
double topk_accuracy(const Tensor<float>& logits, std::span<const int> labels, std::size_t k);

struct LabeledImages {
  std::vector<Tensor<float>> images;  // [3,S,S] each, raw pixel values
  std::vector<int> labels;

  std::size_t size() const { return images.size(); }
};

struct Dataset {
  LabeledImages train;
  LabeledImages val;
  std::size_t classes = 0;
};

struct EvalStats {
  double loss = 0.0;
  double top1 = 0.0;
  double top5 = 0.0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double lr = 0.0;
  EvalStats train;  // running means over the epoch's mini-batches
  EvalStats val;
};

struct TrainResult {
  std::vector<EpochStats> history;
  Checkpoint checkpoint;
};

// Xavier-uniform everywhere except the output layer feeding the classifier,
// which draws from N(0, 0.01^2).
ParamSet<float> recipe_init(const Graph& graph, std::uint64_t seed);

// Center-crop eval-mode pass in batches of cfg.batch_val.
EvalStats evaluate(const Graph& graph, const ParamSet<float>& weights, const LabeledImages& data,
                   const TrainConfig& cfg);

using EpochCallback = std::function<void(const EpochStats&)>;

// Throws StateError when a mini-batch loss becomes non-finite.
TrainResult train_loop(const Graph& graph, const Dataset& data, const TrainConfig& cfg,
                       const EpochCallback& on_epoch = {});

std::string history_header();
std::string history_row(const EpochStats& row);

}  // namespace netforge
