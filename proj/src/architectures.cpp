#include "netforge/architectures.hpp"

#include "netforge/error.hpp"

namespace netforge {

namespace {

// Appends nodes to a graph, each consuming the previous one unless told otherwise.
class ChainBuilder {
 public:
  ChainBuilder(std::string name, ActShape input, std::size_t classes) {
    graph_.name = std::move(name);
    graph_.input = input;
    graph_.classes = classes;
    append({"data", NodeKind::input, std::monostate{}, {}});
  }

  const std::string& tail() const { return tail_; }

  ChainBuilder& conv(const std::string& id, std::size_t out, std::size_t kernel,
                     std::size_t stride, std::size_t pad) {
    return push(id, NodeKind::conv, kernels::ConvParams{out, kernel, stride, pad});
  }
  ChainBuilder& relu(const std::string& id) { return push(id, NodeKind::relu, std::monostate{}); }
  ChainBuilder& scale(const std::string& id) { return push(id, NodeKind::scale, std::monostate{}); }
  ChainBuilder& pool(const std::string& id, const PoolParams& p) {
    return push(id, NodeKind::maxpool, p);
  }
  ChainBuilder& fire(const std::string& id, const FireDims& dims) {
    check_fire_dims(dims);
    return push(id, NodeKind::fire, dims);
  }
  ChainBuilder& inner_product(const std::string& id, std::size_t out) {
    return push(id, NodeKind::inner_product, InnerProductParams{out});
  }
  ChainBuilder& dropout(const std::string& id, double rate) {
    return push(id, NodeKind::dropout, DropoutParams{rate});
  }
  ChainBuilder& global_avg_pool(const std::string& id) {
    return push(id, NodeKind::global_avg_pool, std::monostate{});
  }
  ChainBuilder& softmax(const std::string& id) {
    return push(id, NodeKind::softmax_output, std::monostate{});
  }
  // Conv reading `from` instead of the tail; the tail is left unchanged.
  void side_conv(const std::string& id, const std::string& from, std::size_t out) {
    graph_.nodes.push_back({id, NodeKind::conv, kernels::ConvParams{out, 1, 1, 0}, {from}});
  }
  ChainBuilder& add(const std::string& id, const std::string& shortcut) {
    append({id, NodeKind::add, std::monostate{}, {tail_, shortcut}});
    return *this;
  }

  Graph finish() { return std::move(graph_); }

 private:
  ChainBuilder& push(const std::string& id, NodeKind kind, NodeParams params) {
    append({id, kind, std::move(params), {tail_}});
    return *this;
  }
  void append(NodeSpec node) {
    tail_ = node.id;
    graph_.nodes.push_back(std::move(node));
  }

  Graph graph_;
  std::string tail_;
};

void require_classes(std::size_t classes) {
  if (classes < 2) throw ConstructionError("a classifier needs at least 2 classes");
}

void stem(ChainBuilder& b, const SqueezeVggLayout& layout) {
  const auto& s = layout.stem;
  b.conv("conv1", s.out_channels, s.kernel, s.stride, s.pad).scale("conv1_scale").relu("conv1_relu");
}

void head(ChainBuilder& b, std::size_t classes) {
  b.conv("conv_out", classes, 1, 1, 0).global_avg_pool("gap").softmax("prob");
}

}  // namespace

const std::array<FireDims, 12>& res_squ_vgg16_fire_table() {
  static const std::array<FireDims, 12> table{{
      {8, 32, 32},
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
      {64, 256, 256},
  }};
  return table;
}

SqueezeVggLayout res_squ_vgg16_layout() {
  const auto& t = res_squ_vgg16_fire_table();
  return {"res-squ-vgg16",
          {3, 227, 227},
          {64, 3, 2, 0},
          {3, 2},
          {{t[0]}, {t[1], t[2]}, {t[3], t[4], t[5]}, {t[6], t[7], t[8]}, {t[9], t[10], t[11]}}};
}

SqueezeVggLayout mini_res_squ_layout() {
  return {"mini-res-squ",
          {3, 32, 32},
          {32, 3, 1, 1},
          {3, 2},
          {{}, {{8, 16, 16}, {8, 16, 16}}, {{16, 32, 32}, {16, 32, 32}}}};
}

SqueezeVggLayout gradcheck_layout() {
  return {"gradcheck-res-squ", {3, 16, 16}, {8, 3, 1, 1}, {3, 2}, {{}, {{4, 6, 6}, {4, 6, 6}}}};
}

Graph build_residual_squeeze(const SqueezeVggLayout& layout, std::size_t classes) {
  require_classes(classes);
  ChainBuilder b(layout.name, layout.input, classes);
  stem(b, layout);
  std::size_t channels = layout.stem.out_channels;
  std::size_t fire_index = 0;
  std::size_t shortcut_index = 0;
  std::string last_pool;
  for (std::size_t block = 0; block < layout.blocks.size(); ++block) {
    const auto& fires = layout.blocks[block];
    for (const auto& dims : fires) {
      const std::string id = "fire" + std::to_string(++fire_index);
      b.fire(id, dims).scale(id + "_scale");
    }
    const std::size_t out_channels = fires.empty() ? channels : fires.back().out_channels();
    if (!last_pool.empty() && fires.size() >= 2) {
      std::string shortcut = last_pool;
      if (out_channels != channels) {
        shortcut = last_pool + "_proj";
        b.side_conv(shortcut, last_pool, out_channels);
      }
      const std::string res = "res" + std::to_string(++shortcut_index);
      b.add(res, shortcut).relu(res + "_relu");
    }
    channels = out_channels;
    last_pool = "pool" + std::to_string(block + 1);
    b.pool(last_pool, layout.pool);
  }
  head(b, classes);
  return b.finish();
}

Graph build_res_squ_vgg16(std::size_t classes) {
  return build_residual_squeeze(res_squ_vgg16_layout(), classes);
}

Graph build_conv_skeleton(const SqueezeVggLayout& layout, std::size_t classes) {
  require_classes(classes);
  ChainBuilder b(layout.name + "-skeleton", layout.input, classes);
  stem(b, layout);
  std::size_t conv_index = 1;
  for (std::size_t block = 0; block < layout.blocks.size(); ++block) {
    for (const auto& dims : layout.blocks[block]) {
      const std::string n = std::to_string(++conv_index);
      b.conv("conv" + n, dims.out_channels(), 3, 1, 1).relu("relu" + n);
    }
    b.pool("pool" + std::to_string(block + 1), layout.pool);
  }
  head(b, classes);
  return b.finish();
}

SqueezePlan squeeze_plan(const SqueezeVggLayout& layout) {
  SqueezePlan plan;
  std::size_t conv_index = 1;
  for (const auto& block : layout.blocks) {
    for (const auto& dims : block) plan["conv" + std::to_string(++conv_index)] = dims;
  }
  return plan;
}

Graph build_vgg16(std::size_t classes) {
  require_classes(classes);
  ChainBuilder b("vgg16", {3, 224, 224}, classes);
  const std::array<std::pair<std::size_t, std::size_t>, 5> blocks{
      {{2, 64}, {2, 128}, {3, 256}, {3, 512}, {3, 512}}};
  for (std::size_t blk = 0; blk < blocks.size(); ++blk) {
    const auto [depth, width] = blocks[blk];
    for (std::size_t layer = 0; layer < depth; ++layer) {
      const std::string n = std::to_string(blk + 1) + "_" + std::to_string(layer + 1);
      b.conv("conv" + n, width, 3, 1, 1).relu("relu" + n);
    }
    b.pool("pool" + std::to_string(blk + 1), {2, 2});
  }
  b.inner_product("fc6", 4096).relu("relu6").dropout("drop6", 0.5);
  b.inner_product("fc7", 4096).relu("relu7").dropout("drop7", 0.5);
  b.inner_product("fc8", classes).softmax("prob");
  return b.finish();
}

}  // namespace netforge
