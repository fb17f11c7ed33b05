#include "netforge/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "netforge/error.hpp"
#include "netforge/kernels.hpp"

namespace netforge {

using nlohmann::ordered_json;

void check_config(const TrainConfig& cfg) {
  auto fail = [](const std::string& what) { throw InputError("training config: " + what); };
  if (!(cfg.lr0 > 0.0)) fail("lr0 must be > 0");
  if (!(cfg.decay_factor > 1.0)) fail("decay_factor must be > 1");
  if (cfg.step_epochs == 0) fail("step_epochs must be >= 1");
  if (cfg.batch_train == 0 || cfg.batch_val == 0) fail("batch sizes must be >= 1");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) fail("momentum must be in [0,1)");
  if (cfg.crop == 0) fail("crop must be >= 1");
  if (cfg.crop > cfg.resize) {
    fail("crop " + std::to_string(cfg.crop) + " exceeds source extent " + std::to_string(cfg.resize));
  }
  if (!(cfg.pixel_scale > 0.0f)) fail("pixel_scale must be > 0");
  if (!(cfg.weight_decay >= 0.0)) fail("weight_decay must be >= 0");
}

ordered_json config_to_json(const TrainConfig& cfg) {
  return {{"lr0", cfg.lr0},
          {"decay_factor", cfg.decay_factor},
          {"step_epochs", cfg.step_epochs},
          {"epochs", cfg.epochs},
          {"batch_train", cfg.batch_train},
          {"batch_val", cfg.batch_val},
          {"momentum", cfg.momentum},
          {"resize", cfg.resize},
          {"crop", cfg.crop},
          {"mirror", cfg.mirror},
          {"mean", cfg.mean},
          {"pixel_scale", cfg.pixel_scale},
          {"weight_decay", cfg.weight_decay},
          {"halve_weight_decay", cfg.halve_weight_decay},
          {"seed", cfg.seed}};
}

TrainConfig config_from_json(const ordered_json& doc) {
  TrainConfig cfg;
  try {
    cfg.lr0 = doc.at("lr0").get<double>();
    cfg.decay_factor = doc.at("decay_factor").get<double>();
    cfg.step_epochs = doc.at("step_epochs").get<std::size_t>();
    cfg.epochs = doc.at("epochs").get<std::size_t>();
    cfg.batch_train = doc.at("batch_train").get<std::size_t>();
    cfg.batch_val = doc.at("batch_val").get<std::size_t>();
    cfg.momentum = doc.at("momentum").get<double>();
    cfg.resize = doc.at("resize").get<std::size_t>();
    cfg.crop = doc.at("crop").get<std::size_t>();
    cfg.mirror = doc.at("mirror").get<bool>();
    cfg.mean = doc.at("mean").get<std::array<float, 3>>();
    cfg.pixel_scale = doc.at("pixel_scale").get<float>();
    cfg.weight_decay = doc.at("weight_decay").get<double>();
    cfg.halve_weight_decay = doc.at("halve_weight_decay").get<bool>();
    cfg.seed = doc.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("training config: ") + e.what());
  }
  return cfg;
}

double lr_at(std::size_t epoch, const TrainConfig& cfg) {
  return cfg.lr0 / std::pow(cfg.decay_factor, static_cast<double>(epoch / cfg.step_epochs));
}

double weight_decay_at(std::size_t epoch, const TrainConfig& cfg) {
  if (!cfg.halve_weight_decay) return cfg.weight_decay;
  return cfg.weight_decay / std::pow(2.0, static_cast<double>(epoch / cfg.step_epochs));
}

CropWindow center_window(std::size_t extent, const TrainConfig& cfg) {
  if (cfg.crop > extent) {
    throw GeometryError("crop " + std::to_string(cfg.crop) + " larger than source extent " +
                        std::to_string(extent));
  }
  const std::size_t offset = (extent - cfg.crop) / 2;
  return {offset, offset, false};
}

CropWindow random_window(std::size_t extent, const TrainConfig& cfg, std::mt19937_64& rng) {
  if (cfg.crop > extent) {
    throw GeometryError("crop " + std::to_string(cfg.crop) + " larger than source extent " +
                        std::to_string(extent));
  }
  std::uniform_int_distribution<std::size_t> offset(0, extent - cfg.crop);
  CropWindow window;
  window.y = offset(rng);
  window.x = offset(rng);
  if (cfg.mirror) window.mirror = std::bernoulli_distribution(0.5)(rng);
  return window;
}

Tensor<float> crop_image(const Tensor<float>& image, const TrainConfig& cfg, const CropWindow& window) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("expected a [3,H,W] image, got " + to_string(image.shape()));
  }
  const std::size_t height = image.dim(1), width = image.dim(2), crop = cfg.crop;
  if (window.y + crop > height || window.x + crop > width) {
    throw GeometryError("crop window " + std::to_string(crop) + " at (" + std::to_string(window.y) +
                        "," + std::to_string(window.x) + ") exceeds image " + to_string(image.shape()));
  }
  Tensor<float> out({3, crop, crop});
  const auto src = image.data();
  auto dst = out.data();
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < crop; ++y) {
      const float* row = &src[(c * height + window.y + y) * width + window.x];
      float* out_row = &dst[(c * crop + y) * crop];
      for (std::size_t x = 0; x < crop; ++x) {
        const float v = window.mirror ? row[crop - 1 - x] : row[x];
        out_row[x] = (v - cfg.mean[c]) * cfg.pixel_scale;
      }
    }
  }
  return out;
}

Tensor<float> preprocess(const Tensor<float>& image, const TrainConfig& cfg, Mode mode,
                         std::mt19937_64& rng) {
  if (image.rank() != 3) throw ShapeError("expected a [3,H,W] image, got " + to_string(image.shape()));
  const std::size_t extent = std::min(image.dim(1), image.dim(2));
  const CropWindow window =
      mode == Mode::train ? random_window(extent, cfg, rng) : center_window(extent, cfg);
  return crop_image(image, cfg, window);
}

void sgd_step(ParamSet<float>& weights, const ParamSet<float>& grads, ParamSet<float>& momentum,
              double lr, double momentum_coeff, double weight_decay) {
  if (momentum.nodes.empty()) momentum = weights.zeros_like();
  const float rate = static_cast<float>(lr);
  const float mu = static_cast<float>(momentum_coeff);
  const float decay = static_cast<float>(weight_decay);
  for (auto& [node, named] : weights.nodes) {
    for (auto& [name, w] : named) {
      const Tensor<float>* g = grads.find(node, name);
      if (!g) throw StateError("node '" + node + "': no gradient for weight '" + name + "'");
      if (g->shape() != w.shape()) {
        throw StateError("node '" + node + "': gradient of '" + name + "' has shape " +
                         to_string(g->shape()) + ", weight has " + to_string(w.shape()));
      }
      Tensor<float>& v = momentum.nodes[node][name];
      if (v.empty()) v = Tensor<float>(w.shape());
      if (v.shape() != w.shape()) {
        throw StateError("node '" + node + "': momentum of '" + name + "' has shape " +
                         to_string(v.shape()) + ", weight has " + to_string(w.shape()));
      }
      auto wd = w.data();
      auto vd = v.data();
      const auto gd = g->data();
      for (std::size_t i = 0; i < wd.size(); ++i) {
        vd[i] = mu * vd[i] + rate * (gd[i] + decay * wd[i]);
        wd[i] -= vd[i];
      }
    }
  }
  ++weights.generation;
}

double topk_accuracy(const Tensor<float>& logits, std::span<const int> labels, std::size_t k) {
  if (logits.rank() != 2) throw ShapeError("top-k expects [N,C] logits, got " + to_string(logits.shape()));
  if (k == 0) throw InputError("top-k needs k >= 1");
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != rows) {
    throw InputError("top-k: " + std::to_string(labels.size()) + " labels for " + std::to_string(rows) +
                     " rows");
  }
  if (rows == 0) return 0.0;
  k = std::min(k, classes);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const int label = labels[r];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw InputError("label " + std::to_string(label) + " out of range for " + std::to_string(classes) +
                       " classes");
    }
    const float target = logits.at(r, static_cast<std::size_t>(label));
    if (!std::isfinite(target)) continue;  // a non-finite score never counts as a hit
    // Rank of the label = classes that strictly beat it, counting ties at smaller indices.
    std::size_t ahead = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      const float v = logits.at(r, c);
      if (v > target || (v == target && c < static_cast<std::size_t>(label)) || std::isnan(v)) ++ahead;
    }
    if (ahead < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rows);
}

ParamSet<float> recipe_init(const Graph& graph, std::uint64_t seed) {
  // Walk back from the classifier through parameter-free nodes to the output layer.
  std::map<std::string, InitScheme> overrides;
  for (const auto& node : graph.nodes) {
    if (node.kind != NodeKind::softmax_output) continue;
    const NodeSpec* cur = &node;
    while (cur && !cur->inputs.empty()) {
      cur = graph.find(cur->inputs.front());
      if (cur && has_params(cur->kind)) {
        if (cur->kind == NodeKind::conv || cur->kind == NodeKind::inner_product) {
          overrides[cur->id] = InitScheme{InitScheme::Kind::gaussian, 0.01, seed};
        }
        break;
      }
    }
  }
  return init_weights(graph, InitScheme{InitScheme::Kind::xavier_uniform, 0.0, seed}, overrides);
}

namespace {

struct BatchMetrics {
  double loss_sum = 0.0;
  double top1_sum = 0.0;
  double top5_sum = 0.0;
  std::size_t count = 0;

  void add(double loss, const Tensor<float>& logits, std::span<const int> labels) {
    const double n = static_cast<double>(labels.size());
    loss_sum += loss * n;
    top1_sum += topk_accuracy(logits, labels, 1) * n;
    top5_sum += topk_accuracy(logits, labels, 5) * n;
    count += labels.size();
  }

  EvalStats mean() const {
    if (count == 0) return {};
    const double n = static_cast<double>(count);
    return {loss_sum / n, top1_sum / n, top5_sum / n};
  }
};

void check_images(const LabeledImages& data, const TrainConfig& cfg, const char* split) {
  if (data.images.size() != data.labels.size()) {
    throw InputError(std::string(split) + " split has mismatched image and label counts");
  }
  for (const auto& image : data.images) {
    if (image.rank() != 3 || image.dim(0) != 3 || std::min(image.dim(1), image.dim(2)) < cfg.crop) {
      throw GeometryError(std::string(split) + " image " + to_string(image.shape()) +
                          " cannot supply a crop of " + std::to_string(cfg.crop));
    }
  }
}

Tensor<float> stack(const std::vector<Tensor<float>>& crops) {
  const Shape& one = crops.front().shape();
  Tensor<float> batch({crops.size(), one[0], one[1], one[2]});
  auto dst = batch.data();
  const std::size_t stride = element_count(one);
  for (std::size_t i = 0; i < crops.size(); ++i) {
    std::copy(crops[i].data().begin(), crops[i].data().end(), dst.begin() + static_cast<std::ptrdiff_t>(i * stride));
  }
  return batch;
}

}  // namespace

EvalStats evaluate(const Graph& graph, const ParamSet<float>& weights, const LabeledImages& data,
                   const TrainConfig& cfg) {
  check_config(cfg);
  check_images(data, cfg, "evaluation");
  BatchMetrics metrics;
  std::mt19937_64 unused(0);
  for (std::size_t start = 0; start < data.size(); start += cfg.batch_val) {
    const std::size_t end = std::min(data.size(), start + cfg.batch_val);
    std::vector<Tensor<float>> crops;
    for (std::size_t i = start; i < end; ++i) {
      crops.push_back(preprocess(data.images[i], cfg, Mode::eval, unused));
    }
    const std::span<const int> labels(data.labels.data() + start, end - start);
    auto fwd = forward(graph, weights, stack(crops), Mode::eval);
    const auto sm = kernels::softmax_xent(fwd.logits, labels);
    metrics.add(sm.loss, fwd.logits, labels);
  }
  return metrics.mean();
}

TrainResult train_loop(const Graph& graph, const Dataset& data, const TrainConfig& cfg,
                       const EpochCallback& on_epoch) {
  check_config(cfg);
  require_valid(graph);
  if (data.train.size() == 0) throw InputError("training split is empty");
  check_images(data.train, cfg, "training");
  check_images(data.val, cfg, "validation");

  TrainResult result;
  Checkpoint& state = result.checkpoint;
  state.weights = recipe_init(graph, cfg.seed);
  state.momentum = state.weights.zeros_like();

  std::mt19937_64 rng(cfg.seed ^ 0x5851f42d4c957f2dULL);
  std::vector<std::size_t> order(data.train.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(epoch, cfg);
    const double decay = weight_decay_at(epoch, cfg);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    BatchMetrics metrics;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_train) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_train);
      std::vector<Tensor<float>> crops;
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        crops.push_back(preprocess(data.train.images[order[i]], cfg, Mode::train, rng));
        labels.push_back(data.train.labels[order[i]]);
      }
      auto fwd = forward(graph, state.weights, stack(crops), Mode::train, &rng);
      const auto sm = kernels::softmax_xent(fwd.logits, std::span<const int>(labels));
      if (!std::isfinite(sm.loss)) {
        throw StateError("training diverged in epoch " + std::to_string(epoch) + " (loss " +
                         std::to_string(sm.loss) + " at lr " + std::to_string(lr) + ")");
      }
      metrics.add(sm.loss, fwd.logits, labels);
      const auto grads = backward(graph, state.weights, fwd.cache,
                                  kernels::softmax_xent_backward(sm.probs, std::span<const int>(labels)));
      sgd_step(state.weights, grads, state.momentum, lr, cfg.momentum, decay);
    }

    EpochStats row{epoch, lr, metrics.mean(), {}};
    if (data.val.size() > 0) row.val = evaluate(graph, state.weights, data.val, cfg);
    result.history.push_back(row);
    state.epoch = static_cast<std::uint32_t>(epoch + 1);
    if (on_epoch) on_epoch(row);
  }
  return result;
}

std::string history_header() { return "epoch,lr,loss,top1,top5,val_loss,val_top1,val_top5"; }

std::string history_row(const EpochStats& row) {
  // 17 significant digits so values read back exactly.
  char buf[512];
  std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", row.epoch, row.lr,
                row.train.loss, row.train.top1, row.train.top5, row.val.loss, row.val.top1, row.val.top5);
  return buf;
}

}  // namespace netforge
