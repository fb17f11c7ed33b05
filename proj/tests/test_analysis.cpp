#include <doctest.h>

#include "netforge/analysis.hpp"
#include "netforge/architectures.hpp"
#include "netforge/params.hpp"
#include "oracles.hpp"

using namespace netforge;
namespace k = netforge::kernels;

namespace {

Graph conv_stack(std::size_t channels, const std::vector<std::size_t>& kernels) {
  Graph g{"stack", {channels, 32, 32}, 2, {}};
  g.nodes.push_back({"data", NodeKind::input, std::monostate{}, {}});
  std::string tail = "data";
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    const std::string id = "c" + std::to_string(i + 1);
    g.nodes.push_back({id, NodeKind::conv, k::ConvParams{channels, kernels[i], 1, kernels[i] / 2}, {tail}});
    tail = id;
  }
  g.nodes.push_back({"gap", NodeKind::global_avg_pool, std::monostate{}, {tail}});
  g.nodes.push_back({"prob", NodeKind::softmax_output, std::monostate{}, {"gap"}});
  return g;
}

std::size_t stack_weights(const Graph& g) {
  std::size_t w = 0;
  for (const auto& row : count_params(g).rows)
    if (row.kind == NodeKind::conv) w += row.weights;
  return w;
}

// Closed-form totals, independent of the graph code.
constexpr std::size_t kVggConvWeights = 3 * 64 * 9 + 64 * 64 * 9 + 64 * 128 * 9 + 128 * 128 * 9 + 128 * 256 * 9 +
                                        2 * 256 * 256 * 9 + 256 * 512 * 9 + 5 * 512 * 512 * 9;
constexpr std::size_t kVggFcWeights = 512 * 7 * 7 * 4096 + 4096 * 4096 + 4096 * 365;
constexpr std::size_t kVggBiases = (2 * 64 + 2 * 128 + 3 * 256 + 6 * 512) + (4096 + 4096 + 365);

constexpr std::size_t fire_w(std::size_t in, std::size_t s, std::size_t e) { return in * s + s * e + 9 * s * e; }
constexpr std::size_t kResFireWeights = fire_w(64, 8, 32) + fire_w(64, 16, 64) + fire_w(128, 16, 64) +
                                        fire_w(128, 32, 128) + 2 * fire_w(256, 32, 128) + fire_w(256, 64, 256) +
                                        5 * fire_w(512, 64, 256);
constexpr std::size_t kResWeights = 3 * 64 * 9                            // conv1
                                    + kResFireWeights                      // twelve fire modules
                                    + 64 * 128 + 128 * 256 + 256 * 512     // projections
                                    + 512 * 365                            // output conv
                                    + 64 + 64 + 2 * 128 + 3 * 256 + 6 * 512;  // scale gammas
constexpr std::size_t kResBiases = 64 + (8 + 64) + 2 * (16 + 128) + 3 * (32 + 256) + 6 * (64 + 512) + 128 + 256 +
                                   512 + 365 + (64 + 64 + 2 * 128 + 3 * 256 + 6 * 512);

}  // namespace

TEST_CASE("stacked small kernels against one large kernel") {
  for (std::size_t c : {2, 4, 8, 16}) {
    INFO(c);
    const std::size_t three = stack_weights(conv_stack(c, {3, 3, 3}));
    const std::size_t seven = stack_weights(conv_stack(c, {7}));
    CHECK(three == 27 * c * c);
    CHECK(seven == 49 * c * c);
    const double increase = 100.0 * (static_cast<double>(seven) / three - 1.0);
    CHECK(increase == doctest::Approx(81.0).epsilon(0.5 / 81.0));
  }
}

TEST_CASE("receptive field formula") {
  const std::vector<KernelStride> two{{3, 1}, {3, 1}};
  CHECK(receptive_field(two) == 5);
  const std::vector<KernelStride> three{{3, 1}, {3, 1}, {3, 1}};
  CHECK(receptive_field(three) == 7);
  CHECK_THROWS_AS(receptive_field(std::span<const KernelStride>{}), InputError);

  // Every chain up to length 4 with kernel <= 3 and stride <= 2 against dependency tracing.
  std::vector<std::vector<KernelStride>> chains{{}};
  std::size_t compared = 0;
  for (int len = 1; len <= 4; ++len) {
    std::vector<std::vector<KernelStride>> next;
    for (const auto& prefix : chains)
      for (std::size_t kk = 1; kk <= 3; ++kk)
        for (std::size_t s = 1; s <= 2; ++s) {
          auto chain = prefix;
          chain.push_back({kk, s});
          std::vector<std::pair<std::size_t, std::size_t>> plain;
          for (auto ks : chain) plain.emplace_back(ks.kernel, ks.stride);
          CHECK(receptive_field(chain) == oracle::traced_receptive_field(plain));
          auto shorter = chain;
          shorter.pop_back();
          if (!shorter.empty()) CHECK(receptive_field(chain) >= receptive_field(shorter));
          ++compared;
          next.push_back(std::move(chain));
        }
    chains = std::move(next);
  }
  CHECK(compared == 6 + 36 + 216 + 1296);
}

TEST_CASE("network receptive fields") {
  std::vector<std::pair<std::size_t, std::size_t>> vgg;
  for (int block : {2, 2, 3, 3, 3}) {
    for (int i = 0; i < block; ++i) vgg.emplace_back(3, 1);
    vgg.emplace_back(2, 2);
  }
  const auto report = count_params(build_vgg16(365));
  CHECK(report.receptive_field == oracle::traced_receptive_field(vgg));
  CHECK(report.receptive_field == 212);
  CHECK(report.receptive_field_node == "pool5");
}

TEST_CASE("canonical parameter totals match closed-form sums") {
  const auto vgg = count_params(build_vgg16(365));
  CHECK(vgg.total_weights == kVggConvWeights + kVggFcWeights);
  CHECK(vgg.total_biases == kVggBiases);
  CHECK(vgg.total_params() == 135755949);

  const auto res = count_params(build_res_squ_vgg16(365));
  CHECK(res.total_weights == kResWeights);
  CHECK(res.total_biases == kResBiases);
  CHECK(res.total_weights == 1698112);
  CHECK(res.total_biases == 10229);
  CHECK(res.param_bytes() == 4 * 1708341);

  // The counter agrees with the tensors the initializer allocates.
  for (const Graph& g : {build_vgg16(365), build_res_squ_vgg16(365), build_residual_squeeze(mini_res_squ_layout(), 10)}) {
    const auto slots = weight_slots(g);
    std::size_t weights = 0, biases = 0;
    for (const auto& s : slots) {
      const std::size_t n = element_count(s.shape);
      (s.role == WeightRole::weight || s.role == WeightRole::gamma ? weights : biases) += n;
    }
    const auto r = count_params(g);
    CHECK(r.total_weights == weights);
    CHECK(r.total_biases == biases);
  }
  const Graph mini = build_residual_squeeze(mini_res_squ_layout(), 10);
  CHECK(init_weights(mini, {}).element_count() == count_params(mini).total_params());
}

TEST_CASE("compression comparison") {
  const Graph res = build_res_squ_vgg16(365);
  const Graph vgg = build_vgg16(365);
  const auto c = compare(res, vgg);
  const double expected = 100.0 * (1.0 - static_cast<double>(kResWeights + kResBiases) /
                                             static_cast<double>(kVggConvWeights + kVggFcWeights + kVggBiases));
  CHECK(c.reduction_percent == doctest::Approx(expected).epsilon(1e-12));
  CHECK(c.reduction_percent >= 88.4);
  CHECK(compare(vgg, res).reduction_percent == doctest::Approx(c.reduction_percent).epsilon(1e-15));
  CHECK(compare(res, res).reduction_percent == 0.0);

  std::size_t a = 0, b = 0;
  for (const auto& d : c.blocks) {
    a += d.params_a;
    b += d.params_b;
  }
  CHECK(a == c.a.total_params());
  CHECK(b == c.b.total_params());

  const auto doc = to_json(c);
  CHECK(doc.contains("reduction_percent"));
  CHECK(render_text(c).find("size reduction") != std::string::npos);
}

TEST_CASE("activation tables") {
  const auto res = activation_table(build_res_squ_vgg16(365), {3, 227, 227});
  CHECK(res.first_below_14 == std::optional<std::string>("pool3"));
  const auto vgg = activation_table(build_vgg16(365), {3, 224, 224});
  CHECK(vgg.first_below_14 == std::optional<std::string>("pool5"));
  for (const auto& row : vgg.rows) CHECK(row.elements == row.shape.elements());
  CHECK(vgg.rows.front().shape == ActShape{3, 224, 224});

  const auto report = analyze(build_res_squ_vgg16(365), {3, 227, 227});
  const auto doc = to_json(report);
  CHECK(doc["totals"]["weights"] == 1698112);
  CHECK(render_text(report).find("total parameters") != std::string::npos);
  CHECK_THROWS_AS(analyze(build_res_squ_vgg16(365), {3, 4, 4}), GeometryError);
}
