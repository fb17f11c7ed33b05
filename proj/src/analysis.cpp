#include "netforge/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <map>
#include <sstream>

#include "netforge/error.hpp"

namespace netforge {

using nlohmann::ordered_json;

namespace {

ParamCount node_params(const NodeSpec& node, const ActShape& in) {
  switch (node.kind) {
    case NodeKind::conv: {
      const auto& c = node.conv();
      return {c.out_channels * in.c * c.kernel * c.kernel, c.out_channels};
    }
    case NodeKind::fire:
      return fire_param_count(node.fire(), in.c);
    case NodeKind::scale:
      return {in.c, in.c};
    case NodeKind::inner_product:
      return {in.elements() * node.inner_product().out, node.inner_product().out};
    default:
      return {};
  }
}

struct FieldState {
  std::size_t extent = 1;
  std::size_t jump = 1;
};

std::vector<std::size_t> block_params(const AnalysisReport& report) {
  std::vector<std::size_t> blocks{0};
  for (const auto& row : report.rows) {
    blocks.back() += row.weights + row.biases;
    if (row.kind == NodeKind::maxpool) blocks.push_back(0);
  }
  return blocks;
}

std::string with_commas(std::size_t value) {
  std::string digits = std::to_string(value);
  for (int pos = static_cast<int>(digits.size()) - 3; pos > 0; pos -= 3) {
    digits.insert(static_cast<std::size_t>(pos), ",");
  }
  return digits;
}

ordered_json shape_json(const ActShape& s) { return {s.c, s.h, s.w}; }

}  // namespace

std::size_t receptive_field(std::span<const KernelStride> chain) {
  if (chain.empty()) throw InputError("receptive_field needs a non-empty chain");
  std::size_t rf = 1, jump = 1;
  for (const auto& layer : chain) {
    rf += (layer.kernel - 1) * jump;
    jump *= layer.stride;
  }
  return rf;
}

ActivationTable activation_table(const Graph& graph, const ActShape& input) {
  const auto shapes = infer_shapes(graph, input);
  ActivationTable table;
  for (std::size_t i : topological_order(graph)) {
    const NodeSpec& node = graph.nodes[i];
    const ActShape s = shapes.at(node.id);
    table.rows.push_back({node.id, node.kind, s, s.elements()});
    const bool spatial = node.kind != NodeKind::global_avg_pool &&
                         node.kind != NodeKind::inner_product &&
                         node.kind != NodeKind::softmax_output && node.kind != NodeKind::dropout;
    if (!table.first_below_14 && spatial && std::min(s.h, s.w) < 14) table.first_below_14 = node.id;
  }
  return table;
}

AnalysisReport analyze(const Graph& graph, const ActShape& input) {
  const auto shapes = infer_shapes(graph, input);
  AnalysisReport report;
  report.graph_name = graph.name;
  report.input = input;
  std::map<std::string, FieldState> fields;
  for (std::size_t i : topological_order(graph)) {
    const NodeSpec& node = graph.nodes[i];
    const ActShape in = node.inputs.empty() ? input : shapes.at(node.inputs.front());
    const ActShape out = shapes.at(node.id);
    const ParamCount count = node_params(node, in);
    report.rows.push_back({node.id, node.kind, count.weights, count.biases, out, out.elements()});
    report.total_weights += count.weights;
    report.total_biases += count.biases;

    FieldState field;
    for (const auto& name : node.inputs) {
      const FieldState& f = fields.at(name);
      field.extent = std::max(field.extent, f.extent);
      field.jump = std::max(field.jump, f.jump);
    }
    std::optional<KernelStride> window;
    if (node.kind == NodeKind::conv) window = KernelStride{node.conv().kernel, node.conv().stride};
    if (node.kind == NodeKind::maxpool) window = KernelStride{node.pool().kernel, node.pool().stride};
    if (node.kind == NodeKind::fire) window = KernelStride{3, 1};
    if (window) {
      field.extent += (window->kernel - 1) * field.jump;
      field.jump *= window->stride;
      if (field.extent > report.receptive_field) {
        report.receptive_field = field.extent;
        report.receptive_field_node = node.id;
      }
    }
    fields[node.id] = field;
  }
  report.first_below_14 = activation_table(graph, input).first_below_14;
  return report;
}

AnalysisReport count_params(const Graph& graph) { return analyze(graph, graph.input); }

Comparison compare(const Graph& a, const Graph& b) {
  Comparison cmp{count_params(a), count_params(b), 0.0, {}};
  const double pa = static_cast<double>(cmp.a.param_bytes());
  const double pb = static_cast<double>(cmp.b.param_bytes());
  const double larger = std::max(pa, pb), smaller = std::min(pa, pb);
  cmp.reduction_percent = larger > 0.0 ? 100.0 * (1.0 - smaller / larger) : 0.0;
  const auto ba = block_params(cmp.a), bb = block_params(cmp.b);
  for (std::size_t i = 0; i < std::max(ba.size(), bb.size()); ++i) {
    cmp.blocks.push_back({i, i < ba.size() ? ba[i] : 0, i < bb.size() ? bb[i] : 0});
  }
  return cmp;
}

std::string render_text(const AnalysisReport& report) {
  std::ostringstream out;
  out << "network " << report.graph_name << "  input " << to_string(report.input) << "\n";
  out << std::left << std::setw(16) << "node" << std::setw(16) << "kind" << std::right
      << std::setw(14) << "weights" << std::setw(10) << "biases" << std::setw(18) << "activation"
      << std::setw(14) << "elements" << "\n";
  for (const auto& row : report.rows) {
    out << std::left << std::setw(16) << row.id << std::setw(16) << to_string(row.kind)
        << std::right << std::setw(14) << row.weights << std::setw(10) << row.biases
        << std::setw(18) << to_string(row.shape) << std::setw(14) << row.elements << "\n";
  }
  out << "total weights       " << with_commas(report.total_weights) << "\n";
  out << "total biases        " << with_commas(report.total_biases) << "\n";
  out << "total parameters    " << with_commas(report.total_params()) << "\n";
  out << "weight bytes        " << with_commas(report.weight_bytes()) << " (" << report.bytes_per_value
      << " bytes/value)\n";
  out << "parameter bytes     " << with_commas(report.param_bytes()) << "\n";
  out << "receptive field     " << report.receptive_field << " at " << report.receptive_field_node
      << "\n";
  out << "spatial < 14 from   " << report.first_below_14.value_or("-") << "\n";
  return out.str();
}

std::string render_text(const Comparison& cmp) {
  std::ostringstream out;
  out << render_text(cmp.a) << "\n" << render_text(cmp.b) << "\n";
  out << "comparison " << cmp.a.graph_name << " vs " << cmp.b.graph_name << "\n";
  out << std::left << std::setw(8) << "block" << std::right << std::setw(16) << cmp.a.graph_name.substr(0, 15)
      << std::setw(16) << cmp.b.graph_name.substr(0, 15) << std::setw(16) << "delta" << "\n";
  for (const auto& blk : cmp.blocks) {
    const long long delta = static_cast<long long>(blk.params_a) - static_cast<long long>(blk.params_b);
    out << std::left << std::setw(8) << blk.index << std::right << std::setw(16) << blk.params_a
        << std::setw(16) << blk.params_b << std::setw(16) << delta << "\n";
  }
  char pct[32];
  std::snprintf(pct, sizeof pct, "%.2f", cmp.reduction_percent);
  out << "parameter bytes     " << with_commas(cmp.a.param_bytes()) << " vs "
      << with_commas(cmp.b.param_bytes()) << "\n";
  out << "size reduction      " << pct << "%\n";
  return out.str();
}

ordered_json to_json(const AnalysisReport& report) {
  ordered_json doc;
  doc["name"] = report.graph_name;
  doc["input"] = shape_json(report.input);
  ordered_json rows = ordered_json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"id", row.id},
                    {"kind", std::string(to_string(row.kind))},
                    {"weights", row.weights},
                    {"biases", row.biases},
                    {"activation", shape_json(row.shape)},
                    {"elements", row.elements}});
  }
  doc["layers"] = std::move(rows);
  doc["totals"] = {{"weights", report.total_weights},
                   {"biases", report.total_biases},
                   {"parameters", report.total_params()},
                   {"bytes_per_value", report.bytes_per_value},
                   {"weight_bytes", report.weight_bytes()},
                   {"parameter_bytes", report.param_bytes()}};
  doc["receptive_field"] = {{"extent", report.receptive_field},
                            {"node", report.receptive_field_node}};
  doc["first_below_14"] = report.first_below_14 ? ordered_json(*report.first_below_14) : ordered_json();
  return doc;
}

ordered_json to_json(const Comparison& cmp) {
  ordered_json doc;
  doc["a"] = to_json(cmp.a);
  doc["b"] = to_json(cmp.b);
  ordered_json blocks = ordered_json::array();
  for (const auto& blk : cmp.blocks) {
    blocks.push_back({{"block", blk.index}, {"params_a", blk.params_a}, {"params_b", blk.params_b}});
  }
  doc["blocks"] = std::move(blocks);
  doc["reduction_percent"] = cmp.reduction_percent;
  return doc;
}

}  // namespace netforge
