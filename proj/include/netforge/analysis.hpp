#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "netforge/graph.hpp"

namespace netforge {

struct LayerRow {
  std::string id;
  NodeKind kind;
  std::size_t weights = 0;  // conv/fire/inner-product weights, scale gammas
  std::size_t biases = 0;   // biases, scale betas
  ActShape shape;
  std::size_t elements = 0;
};

struct AnalysisReport {
  std::string graph_name;
  ActShape input;
  std::vector<LayerRow> rows;
  std::size_t total_weights = 0;
  std::size_t total_biases = 0;
  std::size_t bytes_per_value = 4;
  // Largest effective receptive field over conv/fire/pool nodes.
  std::size_t receptive_field = 0;
  std::string receptive_field_node;
  // First node whose spatial extent drops below 14 (late-downsampling check).
  std::optional<std::string> first_below_14;

  std::size_t total_params() const { return total_weights + total_biases; }
  std::size_t weight_bytes() const { return total_weights * bytes_per_value; }
  std::size_t param_bytes() const { return total_params() * bytes_per_value; }
};

// Parameter counts per node with the graph's declared input shape.
// conv: Cout*Cin*k^2 (+Cout biases); inner product: D*M (+M); scale: C gammas
// + C betas; fire: see fire_param_count; every other kind: 0.
AnalysisReport count_params(const Graph& graph);
AnalysisReport analyze(const Graph& graph, const ActShape& input);

struct ActivationRow {
  std::string id;
  NodeKind kind;
  ActShape shape;
  std::size_t elements = 0;
};

struct ActivationTable {
  std::vector<ActivationRow> rows;  // topological order
  std::optional<std::string> first_below_14;
};

ActivationTable activation_table(const Graph& graph, const ActShape& input);

struct KernelStride {
  std::size_t kernel;
  std::size_t stride;
};

// 1 + sum_i (k_i - 1) * prod_{j<i} s_j. Throws InputError on an empty chain.
std::size_t receptive_field(std::span<const KernelStride> chain);

struct BlockDelta {
  std::size_t index = 0;  // pool-delimited block, 0-based
  std::size_t params_a = 0;
  std::size_t params_b = 0;
};

struct Comparison {
  AnalysisReport a;
  AnalysisReport b;
  // 100 * (1 - smaller / larger) over parameter bytes; symmetric in a and b.
  double reduction_percent = 0.0;
  std::vector<BlockDelta> blocks;
};

Comparison compare(const Graph& a, const Graph& b);

std::string render_text(const AnalysisReport& report);
std::string render_text(const Comparison& comparison);
nlohmann::ordered_json to_json(const AnalysisReport& report);
nlohmann::ordered_json to_json(const Comparison& comparison);

}  // namespace netforge
