#include <doctest.h>

#include <map>

#include "netforge/architectures.hpp"
#include "netforge/params.hpp"

using namespace netforge;
namespace k = netforge::kernels;

namespace {

std::map<NodeKind, std::size_t> census(const Graph& g) {
  std::map<NodeKind, std::size_t> out;
  for (const auto& n : g.nodes) ++out[n.kind];
  return out;
}

std::vector<const NodeSpec*> of_kind(const Graph& g, NodeKind kind) {
  std::vector<const NodeSpec*> out;
  for (const auto& n : g.nodes)
    if (n.kind == kind) out.push_back(&n);
  return out;
}

// data -> [conv]* per block, each block closed by a 2x2 pool, then a 1x1 head.
Graph pooled_chain(const std::vector<std::vector<std::size_t>>& blocks, std::size_t extent = 32) {
  Graph g{"pooled", {3, extent, extent}, 4, {}};
  g.nodes.push_back({"data", NodeKind::input, std::monostate{}, {}});
  std::string tail = "data";
  int conv = 0, pool = 0;
  for (const auto& widths : blocks) {
    for (std::size_t w : widths) {
      const std::string c = "c" + std::to_string(++conv);
      g.nodes.push_back({c, NodeKind::conv, k::ConvParams{w, 3, 1, 1}, {tail}});
      g.nodes.push_back({c + "_relu", NodeKind::relu, std::monostate{}, {c}});
      tail = c + "_relu";
    }
    const std::string p = "p" + std::to_string(++pool);
    g.nodes.push_back({p, NodeKind::maxpool, PoolParams{2, 2}, {tail}});
    tail = p;
  }
  g.nodes.push_back({"head", NodeKind::conv, k::ConvParams{4, 1, 1, 0}, {tail}});
  g.nodes.push_back({"gap", NodeKind::global_avg_pool, std::monostate{}, {"head"}});
  g.nodes.push_back({"prob", NodeKind::softmax_output, std::monostate{}, {"gap"}});
  return g;
}

void check_add_operands(const Graph& g) {
  const auto shapes = infer_shapes(g, g.input);
  for (const auto* add : of_kind(g, NodeKind::add)) {
    INFO(add->id);
    CHECK(shapes.at(add->inputs[0]) == shapes.at(add->inputs[1]));
  }
}

}  // namespace

TEST_CASE("fire table matches the published dimensions") {
  const std::array<FireDims, 12> expected{{{8, 32, 32},
                                           {16, 64, 64},
                                           {16, 64, 64},
                                           {32, 128, 128},
                                           {32, 128, 128},
                                           {32, 128, 128},
                                           {64, 256, 256},
                                           {64, 256, 256},
                                           {64, 256, 256},
                                           {64, 256, 256},
                                           {64, 256, 256},
                                           {64, 256, 256}}};
  CHECK(res_squ_vgg16_fire_table() == expected);

  const Graph g = build_res_squ_vgg16(365);
  const auto fires = of_kind(g, NodeKind::fire);
  REQUIRE(fires.size() == 12);
  const std::vector<std::size_t> widths{64, 128, 128, 256, 256, 256, 512, 512, 512, 512, 512, 512};
  for (std::size_t i = 0; i < 12; ++i) {
    INFO(fires[i]->id);
    CHECK(fires[i]->fire() == expected[i]);
    CHECK(fires[i]->fire().s1x1 < fires[i]->fire().out_channels());
    CHECK(fires[i]->fire().out_channels() == widths[i]);
  }
}

TEST_CASE("expand_fire") {
  const auto toy = expand_fire({3, 4, 4}, 5);
  CHECK(toy.out_channels == 8);
  CHECK(toy.squeeze().in_channels == 5);
  CHECK(toy.squeeze().conv == k::ConvParams{3, 1, 1, 0});
  CHECK(toy.expand1x1().in_channels == 3);
  CHECK(toy.expand1x1().conv == k::ConvParams{4, 1, 1, 0});
  CHECK(toy.expand3x3().conv == k::ConvParams{4, 3, 1, 1});

  CHECK(expand_fire({8, 32, 32}, 64).out_channels == 64);
  CHECK_THROWS_AS(expand_fire({8, 4, 4}, 16), ConstructionError);
  CHECK_THROWS_AS(expand_fire({0, 4, 4}, 16), ConstructionError);
  CHECK_THROWS_AS(check_fire_dims({2, 0, 4}), ConstructionError);

  // Spatial extent is preserved across a lattice of inputs.
  for (std::size_t extent : {1, 2, 3, 7, 13, 56}) {
    Graph g{"one-fire", {6, extent, extent}, 2, {}};
    g.nodes = {{"data", NodeKind::input, std::monostate{}, {}},
               {"f", NodeKind::fire, FireDims{2, 3, 5}, {"data"}},
               {"head", NodeKind::conv, k::ConvParams{2, 1, 1, 0}, {"f"}},
               {"gap", NodeKind::global_avg_pool, std::monostate{}, {"head"}},
               {"prob", NodeKind::softmax_output, std::monostate{}, {"gap"}}};
    CHECK(infer_shapes(g, g.input).at("f") == ActShape{8, extent, extent});
  }
}

TEST_CASE("fire parameter counts") {
  CHECK(fire_param_count({8, 32, 32}, 64) == ParamCount{3072, 72});
  CHECK(fire_param_count({64, 256, 256}, 512).weights == 196608);

  // Cross-check against the weight tensors of the expanded module.
  for (const auto& [dims, in] : std::vector<std::pair<FireDims, std::size_t>>{
           {{8, 32, 32}, 64}, {{64, 256, 256}, 512}, {{3, 4, 4}, 5}, {{16, 64, 64}, 128}}) {
    const auto fx = expand_fire(dims, in);
    std::size_t weights = 0, biases = 0;
    for (const auto& s : fx.stages) {
      weights += s.in_channels * s.conv.out_channels * s.conv.kernel * s.conv.kernel;
      biases += s.conv.out_channels;
    }
    CHECK(fire_param_count(dims, in) == ParamCount{weights, biases});
  }

  // A 1x1 filter has nine times fewer weights than a 3x3 filter of the same widths.
  const auto one = expand_fire({4, 16, 1}, 8).expand1x1();
  const auto three = expand_fire({4, 1, 16}, 8).expand3x3();
  const std::size_t w1 = one.in_channels * one.conv.out_channels * one.conv.kernel * one.conv.kernel;
  const std::size_t w3 = three.in_channels * three.conv.out_channels * three.conv.kernel * three.conv.kernel;
  CHECK(w3 == 9 * w1);
}

TEST_CASE("vgg16 census") {
  const Graph g = build_vgg16(365);
  const auto c = census(g);
  CHECK(c.at(NodeKind::conv) == 13);
  CHECK(c.at(NodeKind::inner_product) == 3);
  CHECK(c.at(NodeKind::maxpool) == 5);
  CHECK(c.at(NodeKind::dropout) == 2);
  CHECK(g.input == ActShape{3, 224, 224});
  for (const auto* conv : of_kind(g, NodeKind::conv)) CHECK(conv->conv().kernel == 3);
  CHECK(of_kind(g, NodeKind::inner_product).back()->inner_product().out == 365);
}

TEST_CASE("res-squ-vgg16 census and wiring") {
  const Graph g = build_res_squ_vgg16(365);
  const auto c = census(g);
  CHECK(c.at(NodeKind::fire) == 12);
  // conv1, three projections and the output conv.
  CHECK(c.at(NodeKind::conv) == 5);
  CHECK(c.at(NodeKind::add) == 4);
  CHECK(c.at(NodeKind::maxpool) == 5);
  CHECK(c.at(NodeKind::scale) == 13);
  CHECK(g.find("conv1")->conv() == k::ConvParams{64, 3, 2, 0});
  for (const auto* pool : of_kind(g, NodeKind::maxpool)) CHECK(pool->pool() == PoolParams{3, 2});

  const auto shapes = infer_shapes(g, g.input);
  const std::vector<std::pair<std::size_t, std::size_t>> pairs{{64, 128}, {128, 256}, {256, 512}, {512, 512}};
  const auto adds = of_kind(g, NodeKind::add);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto* add = adds[i];
    const NodeSpec* shortcut = g.find(add->inputs[1]);
    INFO(add->id);
    if (shortcut->kind == NodeKind::conv) {
      CHECK(shortcut->conv() == k::ConvParams{pairs[i].second, 1, 1, 0});
      CHECK(shapes.at(shortcut->inputs[0]).c == pairs[i].first);
    } else {
      CHECK(shortcut->kind == NodeKind::maxpool);
      CHECK(pairs[i].first == pairs[i].second);
    }
    CHECK(shapes.at(add->inputs[0]).c == pairs[i].second);
  }
  CHECK(g.find("pool1_proj")->conv().out_channels == 128);
  check_add_operands(g);
}

TEST_CASE("squeeze plan and transform") {
  const auto layout = res_squ_vgg16_layout();
  const Graph skeleton = build_conv_skeleton(layout, 365);
  CHECK(census(skeleton).at(NodeKind::conv) == 14);
  const auto plan = squeeze_plan(layout);
  CHECK(plan.size() == 12);
  CHECK(plan.at("conv2") == FireDims{8, 32, 32});
  CHECK(plan.at("conv13") == FireDims{64, 256, 256});

  const Graph squeezed = squeeze_transform(skeleton, plan);
  CHECK(validate(squeezed).empty());
  CHECK(census(squeezed).at(NodeKind::fire) == 12);
  CHECK(census(squeezed).count(NodeKind::add) == 0);

  CHECK(squeeze_transform(skeleton, {}) == skeleton);

  CHECK_THROWS_AS(squeeze_transform(skeleton, {{"conv2", {8, 32, 64}}}), PlanError);
  CHECK_THROWS_AS(squeeze_transform(skeleton, {{"conv99", {8, 32, 32}}}), PlanError);
  CHECK_THROWS_AS(squeeze_transform(skeleton, {{"conv_out", {8, 32, 32}}}), PlanError);
}

TEST_CASE("residualize reproduces the four shortcuts and the direct build") {
  const auto layout = res_squ_vgg16_layout();
  const Graph squeezed = squeeze_transform(build_conv_skeleton(layout, 365), squeeze_plan(layout));
  const auto result = residualize(squeezed);
  REQUIRE(result.plans.size() == 4);
  CHECK(result.plans[0].projection_channels == std::optional<std::size_t>(128));
  CHECK(result.plans[1].projection_channels == std::optional<std::size_t>(256));
  CHECK(result.plans[2].projection_channels == std::optional<std::size_t>(512));
  CHECK_FALSE(result.plans[3].projection_channels.has_value());
  CHECK(result.plans[0].source == "pool1");
  CHECK(result.plans[3].source == "pool4");
  CHECK(validate(result.graph).empty());
  check_add_operands(result.graph);

  const Graph direct = build_res_squ_vgg16(365);
  CHECK(structurally_equal(result.graph, direct));
  CHECK(structurally_equal(direct, result.graph));
  CHECK_FALSE(structurally_equal(squeezed, direct));
  CHECK_FALSE(structurally_equal(build_res_squ_vgg16(10), direct));

  CHECK_THROWS_AS(residualize(result.graph), PreconditionError);
  Graph broken = squeezed;
  broken.nodes[1].inputs = {"nowhere"};
  CHECK_THROWS_AS(residualize(broken), PreconditionError);
}

TEST_CASE("residualize on constructed graphs") {
  const Graph singles = pooled_chain({{8}, {8}, {8}});
  const auto none = residualize(singles);
  CHECK(none.plans.empty());
  CHECK(none.graph == singles);

  const auto two = residualize(pooled_chain({{8}, {8, 8}, {8, 8, 8}}));
  REQUIRE(two.plans.size() == 2);
  for (const auto& p : two.plans) CHECK_FALSE(p.projection_channels.has_value());
  CHECK(two.plans[0].source == "p1");
  CHECK(two.plans[0].target == "c3");
  CHECK(two.plans[1].target == "c6");
  check_add_operands(two.graph);

  // Runs after the last pool feed the classifier head.
  const auto tail = residualize(pooled_chain({{8}, {8, 16}, {}}, 16));
  CHECK(tail.plans.size() == 1);
  CHECK(tail.plans[0].projection_channels == std::optional<std::size_t>(16));
  check_add_operands(tail.graph);

  for (const auto& layout : {mini_res_squ_layout(), gradcheck_layout()}) {
    const auto r = residualize(squeeze_transform(build_conv_skeleton(layout, 5), squeeze_plan(layout)));
    CHECK(structurally_equal(r.graph, build_residual_squeeze(layout, 5)));
    check_add_operands(r.graph);
  }
}

TEST_CASE("miniature layouts") {
  const Graph mini = build_residual_squeeze(mini_res_squ_layout(), 10);
  CHECK(validate(mini).empty());
  CHECK(mini.input == ActShape{3, 32, 32});
  CHECK(census(mini).at(NodeKind::fire) == 4);
  CHECK(census(mini).at(NodeKind::add) == 2);
  CHECK(infer_shapes(mini, mini.input).at("conv_out") == ActShape{10, 3, 3});

  const Graph tiny = build_residual_squeeze(gradcheck_layout(), 5);
  CHECK(validate(tiny).empty());
  CHECK(census(tiny).at(NodeKind::fire) == 2);
  CHECK(census(tiny).at(NodeKind::add) == 1);
}
