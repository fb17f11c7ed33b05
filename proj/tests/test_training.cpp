#include <doctest.h>

#include <cmath>
#include <fstream>

#include "netforge/architectures.hpp"
#include "netforge/checkpoint.hpp"
#include "netforge/dataset.hpp"
#include "netforge/training.hpp"
#include "oracles.hpp"

using namespace netforge;

namespace {

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.batch_train = 25;
  cfg.batch_val = 16;
  cfg.resize = 32;
  cfg.crop = 32;
  cfg.mirror = false;
  cfg.mean = {50.0f, 50.0f, 50.0f};
  cfg.pixel_scale = 1.0f / 64.0f;
  cfg.seed = 3;
  return cfg;
}

Dataset synthetic(std::size_t classes, std::size_t per_class, std::size_t val_per_class) {
  SynthSpec spec;
  spec.classes = classes;
  spec.per_class = per_class + val_per_class;
  spec.seed = 11;
  Dataset d;
  d.classes = classes;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      auto& split = i < per_class ? d.train : d.val;
      split.images.push_back(to_tensor(synth_image(spec, c, i), spec.extent));
      split.labels.push_back(static_cast<int>(c));
    }
  }
  return d;
}

ParamSet<float> scalar_set(float value) {
  ParamSet<float> p;
  p.nodes["n"]["w"] = Tensor<float>({1}, value);
  return p;
}

}  // namespace

TEST_CASE("learning rate schedule") {
  const TrainConfig cfg;
  CHECK(lr_at(0, cfg) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(lr_at(9, cfg) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(lr_at(10, cfg) == doctest::Approx(0.002).epsilon(1e-14));
  CHECK(lr_at(49, cfg) == doctest::Approx(1.6e-5).epsilon(1e-12));
  for (std::size_t e = 1; e < 50; ++e) {
    INFO(e);
    CHECK(lr_at(e, cfg) <= lr_at(e - 1, cfg));
    if (e % cfg.step_epochs != 0) CHECK(lr_at(e, cfg) == lr_at(e - 1, cfg));
    else CHECK(lr_at(e, cfg) < lr_at(e - 1, cfg));
  }

  TrainConfig wd = cfg;
  wd.weight_decay = 4e-4;
  CHECK(weight_decay_at(25, wd) == 4e-4);
  wd.halve_weight_decay = true;
  CHECK(weight_decay_at(5, wd) == 4e-4);
  CHECK(weight_decay_at(25, wd) == doctest::Approx(1e-4));
}

TEST_CASE("config validation and round trip") {
  TrainConfig cfg = small_config();
  CHECK_NOTHROW(check_config(cfg));
  CHECK(config_to_json(config_from_json(config_to_json(cfg))) == config_to_json(cfg));

  auto bad = cfg;
  bad.lr0 = 0.0;
  CHECK_THROWS_AS(check_config(bad), InputError);
  bad = cfg;
  bad.decay_factor = 1.0;
  CHECK_THROWS_AS(check_config(bad), InputError);
  bad = cfg;
  bad.crop = 33;
  CHECK_THROWS_AS(check_config(bad), InputError);
  bad = cfg;
  bad.batch_train = 0;
  CHECK_THROWS_AS(check_config(bad), InputError);

  auto doc = config_to_json(cfg);
  doc["lr0"] = "fast";
  CHECK_THROWS_AS(config_from_json(doc), FormatError);
}

TEST_CASE("crop windows") {
  const TrainConfig cfg;
  const auto c = center_window(256, cfg);
  CHECK(c.y == 14);
  CHECK(c.x == 14);
  CHECK_FALSE(c.mirror);

  std::mt19937_64 rng(5);
  bool mirrored = false, plain = false;
  for (int i = 0; i < 2000; ++i) {
    const auto w = random_window(256, cfg, rng);
    CHECK(w.y <= 29);
    CHECK(w.x <= 29);
    (w.mirror ? mirrored : plain) = true;
  }
  CHECK(mirrored);
  CHECK(plain);

  TrainConfig no_mirror = cfg;
  no_mirror.mirror = false;
  for (int i = 0; i < 200; ++i) CHECK_FALSE(random_window(256, no_mirror, rng).mirror);

  CHECK_THROWS_AS(center_window(200, cfg), GeometryError);
  CHECK_THROWS_AS(random_window(200, cfg, rng), GeometryError);
}

TEST_CASE("crop and preprocessing") {
  TrainConfig cfg;
  cfg.resize = 8;
  cfg.crop = 5;
  cfg.mirror = false;
  const auto image = oracle::random_tensor<float>({3, 8, 8}, 21, 0.0, 255.0);

  // Zero mean and unit scale: the top-left window is copied unchanged.
  const auto top_left = crop_image(image, cfg, {0, 0, false});
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t y = 0; y < 5; ++y)
      for (std::size_t x = 0; x < 5; ++x) CHECK(top_left[(ch * 5 + y) * 5 + x] == image[(ch * 8 + y) * 8 + x]);

  cfg.mean = {10.0f, 20.0f, 30.0f};
  cfg.pixel_scale = 0.5f;
  const auto shifted = crop_image(image, cfg, {2, 3, true});
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t y = 0; y < 5; ++y)
      for (std::size_t x = 0; x < 5; ++x) {
        const float src = image[(ch * 8 + y + 2) * 8 + (3 + 4 - x)];
        CHECK(shifted[(ch * 5 + y) * 5 + x] == (src - cfg.mean[ch]) * 0.5f);
      }

  // Mirroring twice restores the window.
  TrainConfig identity;
  identity.resize = 5;
  identity.crop = 5;
  const auto once = crop_image(top_left.reshaped({3, 5, 5}), identity, {0, 0, true});
  const auto twice = crop_image(once, identity, {0, 0, true});
  CHECK(twice == top_left.reshaped({3, 5, 5}));

  std::mt19937_64 rng(1);
  const auto e1 = preprocess(image, cfg, Mode::eval, rng);
  const auto e2 = preprocess(image, cfg, Mode::eval, rng);
  CHECK(e1 == e2);
  CHECK(e1 == crop_image(image, cfg, {1, 1, false}));
  CHECK(e1.shape() == Shape{3, 5, 5});

  cfg.crop = 9;
  CHECK_THROWS(preprocess(image, cfg, Mode::eval, rng));
}

TEST_CASE("sgd updates") {
  {
    auto w = scalar_set(3.0f);
    auto v = ParamSet<float>{};
    sgd_step(w, scalar_set(3.0f), v, 1.0, 0.0);
    CHECK(w.at("n", "w")[0] == 0.0f);
  }
  {
    auto w = scalar_set(2.0f);
    auto v = scalar_set(0.5f);
    const auto before = w.generation;
    sgd_step(w, scalar_set(0.0f), v, 0.1, 0.9);
    CHECK(w.at("n", "w")[0] == doctest::Approx(2.0f - 0.45f));
    CHECK(v.at("n", "w")[0] == doctest::Approx(0.45f));
    CHECK(w.generation == before + 1);
  }
  {
    auto w = scalar_set(0.0f);
    ParamSet<float> v;
    sgd_step(w, scalar_set(1.0f), v, 0.1, 0.9);
    sgd_step(w, scalar_set(1.0f), v, 0.1, 0.9);
    CHECK(w.at("n", "w")[0] == doctest::Approx(-0.29).epsilon(1e-6));
  }
  {
    auto w = scalar_set(1.0f);
    ParamSet<float> v;
    sgd_step(w, scalar_set(0.0f), v, 0.5, 0.0, 0.2);
    CHECK(w.at("n", "w")[0] == doctest::Approx(0.9f));
  }
  {
    // Quadratic 0.5 * |w - t|^2 decreases after one small step.
    auto w = ParamSet<float>{};
    w.nodes["q"]["w"] = oracle::random_tensor<float>({16}, 2);
    const auto target = oracle::random_tensor<float>({16}, 3);
    auto loss = [&] {
      double s = 0.0;
      for (std::size_t i = 0; i < 16; ++i) s += 0.5 * std::pow(w.at("q", "w")[i] - target[i], 2);
      return s;
    };
    ParamSet<float> g = w.zeros_like();
    for (std::size_t i = 0; i < 16; ++i) g.at("q", "w")[i] = w.at("q", "w")[i] - target[i];
    const double before = loss();
    ParamSet<float> v;
    sgd_step(w, g, v, 1e-3, 0.0);
    CHECK(loss() < before);
  }
  {
    auto w = scalar_set(1.0f);
    ParamSet<float> v;
    CHECK_THROWS_AS(sgd_step(w, ParamSet<float>{}, v, 0.1, 0.9), StateError);
    ParamSet<float> wrong;
    wrong.nodes["n"]["w"] = Tensor<float>({2});
    CHECK_THROWS_AS(sgd_step(w, wrong, v, 0.1, 0.9), StateError);
  }
}

TEST_CASE("top-k accuracy") {
  const std::vector<int> first{0};
  CHECK(topk_accuracy(Tensor<float>({1, 3}, {5, 1, 2}), first, 1) == 1.0);

  Tensor<float> ramp({1, 10}, {3, 2, 1, 0, -1, -2, -3, -4, -5, -6});
  // Label 4 holds rank 5.
  const std::vector<int> four{4};
  CHECK(topk_accuracy(ramp, four, 5) == 1.0);
  CHECK(topk_accuracy(ramp, four, 4) == 0.0);

  const Tensor<float> ties({1, 4}, 1.0f);
  const std::vector<int> tie_labels{2};
  CHECK(topk_accuracy(ties, tie_labels, 2) == 0.0);
  CHECK(topk_accuracy(ties, tie_labels, 3) == 1.0);
  CHECK(topk_accuracy(ties, tie_labels, 99) == 1.0);

  const Tensor<float> broken({1, 3}, {NAN, 1.0f, 0.0f});
  const std::vector<int> nan_label{0};
  CHECK(topk_accuracy(broken, nan_label, 3) == 0.0);
  const std::vector<int> finite_label{1};
  CHECK(topk_accuracy(broken, finite_label, 1) == 0.0);

  const std::vector<int> bad{12};
  CHECK_THROWS_AS(topk_accuracy(ramp, bad, 1), InputError);
  CHECK_THROWS_AS(topk_accuracy(ramp, four, 0), InputError);

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto logits = oracle::random_tensor<float>({8, 10}, seed);
    // Quantize to force ties.
    for (auto& v : logits.data()) v = std::round(v * 3.0f);
    std::mt19937_64 rng(seed);
    std::vector<int> labels(8);
    for (auto& l : labels) l = static_cast<int>(rng() % 10);
    for (std::size_t k : {1, 2, 5, 10}) {
      std::size_t hits = 0;
      for (std::size_t r = 0; r < 8; ++r) {
        std::vector<float> row(logits.data().begin() + r * 10, logits.data().begin() + (r + 1) * 10);
        hits += oracle::topk_hit(row, labels[r], k);
      }
      CHECK(topk_accuracy(logits, labels, k) == hits / 8.0);
    }
    CHECK(topk_accuracy(logits, labels, 1) <= topk_accuracy(logits, labels, 5));
  }
}

TEST_CASE("checkpoint persistence") {
  const Graph mini = build_residual_squeeze(mini_res_squ_layout(), 10);
  Checkpoint ckpt;
  ckpt.weights = recipe_init(mini, 9);
  ckpt.momentum = ckpt.weights.zeros_like();
  ckpt.momentum.at("conv1", "weight")[3] = -0.125f;
  ckpt.epoch = 7;

  oracle::TempDir dir("ckpt");
  save_checkpoint(ckpt, dir / "a.ckpt");
  const auto back = load_checkpoint(dir / "a.ckpt", mini);
  CHECK(back == ckpt);
  CHECK(serialize_checkpoint(back) == serialize_checkpoint(ckpt));

  const std::string bytes = serialize_checkpoint(ckpt);
  CHECK(bytes.substr(0, 4) == "RSQV");
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{9}, bytes.size() / 2, bytes.size() - 1}) {
    CHECK_THROWS_AS(parse_checkpoint(std::string_view(bytes).substr(0, cut)), FormatError);
  }
  {
    std::ofstream(dir / "short.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() - 5);
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "short.ckpt"), FormatError);
  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(parse_checkpoint(magic), FormatError);
  std::string version = bytes;
  version[4] = 2;
  CHECK_THROWS_AS(parse_checkpoint(version), FormatError);
  CHECK_THROWS_AS(parse_checkpoint(bytes + "x"), FormatError);
  CHECK_THROWS_AS(load_checkpoint(dir / "absent.ckpt"), FormatError);

  Checkpoint head10;
  head10.weights = init_weights(build_res_squ_vgg16(10), {InitScheme::Kind::xavier_uniform, 0.0, 1});
  head10.momentum = head10.weights.zeros_like();
  save_checkpoint(head10, dir / "head10.ckpt");
  try {
    load_checkpoint(dir / "head10.ckpt", build_res_squ_vgg16(365));
    FAIL("expected a compatibility error");
  } catch (const CompatibilityError& e) {
    CHECK(std::string(e.what()).find("conv_out") != std::string::npos);
  }
}

TEST_CASE("training loop") {
  const Graph mini = build_residual_squeeze(mini_res_squ_layout(), 4);
  const Dataset data = synthetic(4, 25, 4);
  TrainConfig cfg = small_config();

  cfg.epochs = 0;
  const auto idle = train_loop(mini, data, cfg);
  CHECK(idle.history.empty());
  CHECK(idle.checkpoint.weights == recipe_init(mini, cfg.seed));
  CHECK(idle.checkpoint.epoch == 0);

  cfg.epochs = 6;
  std::size_t callbacks = 0;
  const auto run = train_loop(mini, data, cfg, [&](const EpochStats&) { ++callbacks; });
  REQUIRE(run.history.size() == 6);
  CHECK(callbacks == 6);
  CHECK(run.checkpoint.epoch == 6);
  CHECK(run.history[5].train.loss < run.history[0].train.loss);
  for (const auto& row : run.history) {
    CHECK(row.train.top1 <= row.train.top5);
    CHECK(row.val.top1 <= row.val.top5);
  }

  const auto again = train_loop(mini, data, cfg);
  for (std::size_t e = 0; e < 6; ++e) CHECK(history_row(again.history[e]) == history_row(run.history[e]));
  CHECK(again.checkpoint == run.checkpoint);

  const auto val = evaluate(mini, run.checkpoint.weights, data.val, cfg);
  CHECK(val.loss == run.history.back().val.loss);
  CHECK(val.top1 == run.history.back().val.top1);

  CHECK(history_header() == "epoch,lr,loss,top1,top5,val_loss,val_top1,val_top5");

  TrainConfig hot = cfg;
  hot.lr0 = 1e6;
  hot.epochs = 2;
  CHECK_THROWS_AS(train_loop(mini, data, hot), StateError);

  Dataset empty = data;
  empty.train = {};
  CHECK_THROWS_AS(train_loop(mini, empty, cfg), InputError);
  TrainConfig big = cfg;
  big.resize = 40;
  big.crop = 40;
  CHECK_THROWS_AS(train_loop(mini, data, big), GeometryError);
}
