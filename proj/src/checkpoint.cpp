#include "netforge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "netforge/error.hpp"
#include "netforge/graph_io.hpp"

namespace netforge {

namespace {

constexpr char kMagic[4] = {'R', 'S', 'Q', 'V'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::string_view kMomentumSuffix = ".momentum";

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    out_.append(static_cast<const char*>(data), n);
  }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void tensor(const std::string& name, const Tensor<float>& t) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw FormatError("tensor name too long: " + name);
    }
    u16(static_cast<std::uint16_t>(name.size()));
    bytes(name.data(), name.size());
    u8(kDtypeF32);
    u8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t extent : t.shape()) u32(static_cast<std::uint32_t>(extent));
    for (float v : t.data()) u32(std::bit_cast<std::uint32_t>(v));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw FormatError("checkpoint is truncated");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint16_t u16() {
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(u8()) << (8 * i);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto view = data_.substr(pos_, n);
    pos_ += n;
    return view;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

void write_set(Writer& w, const ParamSet<float>& set, std::string_view suffix) {
  for (const auto& [node, named] : set.nodes) {
    for (const auto& [name, t] : named) w.tensor(node + "." + name + std::string(suffix), t);
  }
}

std::size_t tensor_count(const ParamSet<float>& set) {
  std::size_t n = 0;
  for (const auto& [node, named] : set.nodes) n += named.size();
  return n;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u8(kVersion);
  w.u32(static_cast<std::uint32_t>(tensor_count(ckpt.weights) + tensor_count(ckpt.momentum)));
  write_set(w, ckpt.weights, "");
  write_set(w, ckpt.momentum, kMomentumSuffix);
  w.u32(ckpt.epoch);
  return w.take();
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(4) != std::string_view(kMagic, 4)) throw FormatError("bad checkpoint magic");
  if (const auto version = r.u8(); version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(r.take(r.u16()));
    if (r.u8() != kDtypeF32) throw FormatError("unsupported dtype for tensor '" + name + "'");
    const std::uint8_t rank = r.u8();
    if (rank < 1 || rank > 4) throw FormatError("bad rank for tensor '" + name + "'");
    Shape shape(rank);
    for (auto& extent : shape) extent = r.u32();
    const std::size_t n = element_count(shape);
    r.need(n * 4);
    std::vector<float> values(n);
    for (auto& v : values) v = std::bit_cast<float>(r.u32());

    ParamSet<float>* target = &ckpt.weights;
    if (name.size() > kMomentumSuffix.size() && name.ends_with(kMomentumSuffix)) {
      name.resize(name.size() - kMomentumSuffix.size());
      target = &ckpt.momentum;
    }
    const auto dot = name.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == name.size()) {
      throw FormatError("tensor name '" + name + "' is not <node>.<weight>");
    }
    auto& slot = target->nodes[name.substr(0, dot)][name.substr(dot + 1)];
    if (!slot.empty()) throw FormatError("duplicate tensor '" + name + "'");
    slot = Tensor<float>(std::move(shape), std::move(values));
  }
  ckpt.epoch = r.u32();
  if (!r.done()) throw FormatError("trailing bytes after checkpoint");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes);
}

void check_compatible(const Checkpoint& ckpt, const Graph& graph) {
  if (auto mismatch = find_param_mismatch(graph, ckpt.weights)) throw CompatibilityError(*mismatch);
  if (!ckpt.momentum.nodes.empty()) {
    if (auto mismatch = find_param_mismatch(graph, ckpt.momentum)) {
      throw CompatibilityError("momentum " + *mismatch);
    }
  }
  const auto slots = weight_slots(graph);
  for (const auto* set : {&ckpt.weights, &ckpt.momentum}) {
    for (const auto& [node, named] : set->nodes) {
      for (const auto& [name, t] : named) {
        const bool known = std::any_of(slots.begin(), slots.end(), [&](const WeightSlot& s) {
          return s.node == node && s.name == name;
        });
        if (!known) {
          throw CompatibilityError("node '" + node + "': checkpoint tensor '" + name +
                                   "' has no place in graph '" + graph.name + "'");
        }
      }
    }
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const Graph& graph) {
  Checkpoint ckpt = load_checkpoint(path);
  check_compatible(ckpt, graph);
  return ckpt;
}

}  // namespace netforge
