#include "netforge/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "netforge/architectures.hpp"
#include "netforge/error.hpp"
#include "netforge/executor.hpp"
#include "netforge/kernels.hpp"
#include "netforge/params.hpp"

namespace netforge {

namespace k = kernels;

namespace {

using Tensors = std::vector<Tensor<double>>;
using ForwardFn = std::function<Tensor<double>(const Tensors&)>;
using BackwardFn = std::function<Tensors(const Tensors&, const Tensor<double>&)>;
// True when operand[op][index] lies within the kink margin of a ReLU or max selection.
using KinkFn = std::function<bool(const Tensors& operands, std::size_t op, std::size_t index)>;

constexpr double kKinkMargin = 1e-2;

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  return std::inner_product(a.data().begin(), a.data().end(), b.data().begin(), 0.0);
}

// True when `index` competes for the maximum of some pooling window with
// another element closer than the kink margin.
bool near_max_tie(const Tensor<double>& input, std::size_t kernel, std::size_t stride, std::size_t index) {
  const std::size_t height = input.dim(2), width = input.dim(3);
  const std::size_t plane = height * width;
  const std::size_t base = index / plane * plane;
  const std::size_t y = index % plane / width, x = index % width;
  const std::size_t out_h = k::pool_output_extent(height, kernel, stride);
  const std::size_t out_w = k::pool_output_extent(width, kernel, stride);
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const std::size_t y0 = oy * stride, x0 = ox * stride;
      if (y < y0 || y >= y0 + kernel || x < x0 || x >= x0 + kernel) continue;
      double best = -1e300;
      for (std::size_t wy = y0; wy < y0 + kernel; ++wy) {
        for (std::size_t wx = x0; wx < x0 + kernel; ++wx) best = std::max(best, input[base + wy * width + wx]);
      }
      if (best - input[index] >= kKinkMargin) continue;
      for (std::size_t wy = y0; wy < y0 + kernel; ++wy) {
        for (std::size_t wx = x0; wx < x0 + kernel; ++wx) {
          const std::size_t j = base + wy * width + wx;
          if (j != index && best - input[j] < kKinkMargin) return true;
        }
      }
    }
  }
  return false;
}

struct KernelCase {
  std::string name;
  Tensors operands;
  std::vector<std::string> operand_names;
  ForwardFn forward;
  BackwardFn backward;
  KinkFn kink;
  double tolerance = 0.0;  // 0 selects the suite-wide kernel tolerance
};

// Loss = <projection, f(operands)>; every coordinate of every operand is checked.
CheckResult run_case(KernelCase& kc, std::mt19937_64& rng, const GradcheckOptions& options) {
  CheckResult result{kc.name, 0.0, kc.tolerance > 0.0 ? std::min(kc.tolerance, options.kernel_tolerance)
                                                      : options.kernel_tolerance, 0, 0};
  const Tensor<double> out = kc.forward(kc.operands);
  const Tensor<double> projection = random_tensor(out.shape(), rng);
  Tensors analytic = kc.backward(kc.operands, projection);
  if (analytic.size() != kc.operands.size()) throw StateError(kc.name + ": backward returned wrong arity");
  const double eps = options.kernel_epsilon;
  for (std::size_t op = 0; op < kc.operands.size(); ++op) {
    if (options.perturb) options.perturb(kc.name, analytic[op]);
    if (analytic[op].shape() != kc.operands[op].shape()) {
      throw StateError(kc.name + ": gradient of " + kc.operand_names[op] + " has shape " +
                       to_string(analytic[op].shape()));
    }
    for (std::size_t i = 0; i < kc.operands[op].size(); ++i) {
      if (kc.kink && kc.kink(kc.operands, op, i)) {
        ++result.excluded;
        continue;
      }
      Tensors plus = kc.operands, minus = kc.operands;
      plus[op][i] += eps;
      minus[op][i] -= eps;
      const double numeric = (dot(projection, kc.forward(plus)) - dot(projection, kc.forward(minus))) / (2 * eps);
      result.max_rel_error = std::max(result.max_rel_error, relative_error(analytic[op][i], numeric));
      ++result.checked;
    }
  }
  return result;
}

std::vector<KernelCase> kernel_cases(std::mt19937_64& rng) {
  std::vector<KernelCase> cases;

  auto conv_case = [&](const std::string& name, Shape input, k::ConvParams p) {
    const std::size_t cin = input[1];
    Tensors ops{random_tensor(input, rng), random_tensor({p.out_channels, cin, p.kernel, p.kernel}, rng),
                random_tensor({p.out_channels}, rng)};
    cases.push_back({name, ops, {"input", "weights", "bias"},
                     [p](const Tensors& t) { return k::conv2d_forward(t[0], t[1], t[2], p); },
                     [p](const Tensors& t, const Tensor<double>& up) {
                       auto g = k::conv2d_backward(t[0], t[1], p, up);
                       return Tensors{g.input, g.weights, g.bias};
                     },
                     {}});
  };
  conv_case("conv3x3_pad1", {2, 3, 5, 5}, {4, 3, 1, 1});
  conv_case("conv3x3_stride2", {2, 2, 7, 7}, {3, 3, 2, 0});
  conv_case("conv1x1", {2, 4, 4, 4}, {5, 1, 1, 0});

  {
    Tensor<double> input = random_tensor({2, 2, 7, 7}, rng);
    cases.push_back({"maxpool3s2", {input}, {"input"},
                     [](const Tensors& t) { return k::maxpool_forward(t[0], 3, 2).output; },
                     [](const Tensors& t, const Tensor<double>& up) {
                       const auto fwd = k::maxpool_forward(t[0], 3, 2);
                       return Tensors{k::maxpool_backward(std::span<const std::size_t>(fwd.argmax), up, t[0].shape())};
                     },
                     [](const Tensors& t, std::size_t, std::size_t index) {
                       return near_max_tie(t[0], 3, 2, index);
                     }});
  }

  cases.push_back({"relu", {random_tensor({2, 3, 4, 4}, rng)}, {"input"},
                   [](const Tensors& t) { return k::relu(t[0]); },
                   [](const Tensors& t, const Tensor<double>& up) { return Tensors{k::relu_backward(t[0], up)}; },
                   [](const Tensors& t, std::size_t, std::size_t index) {
                     return std::abs(t[0][index]) < kKinkMargin;
                   }});

  cases.push_back({"scale",
                   {random_tensor({2, 3, 4, 4}, rng), random_tensor({3}, rng), random_tensor({3}, rng)},
                   {"input", "gamma", "beta"},
                   [](const Tensors& t) { return k::scale_forward(t[0], t[1], t[2]); },
                   [](const Tensors& t, const Tensor<double>& up) {
                     auto g = k::scale_backward(t[0], t[1], up);
                     return Tensors{g.input, g.gamma, g.beta};
                   },
                   {}});

  cases.push_back({"eltwise_add", {random_tensor({2, 3, 3, 3}, rng), random_tensor({2, 3, 3, 3}, rng)},
                   {"a", "b"}, [](const Tensors& t) { return k::eltwise_add(t[0], t[1]); },
                   [](const Tensors&, const Tensor<double>& up) { return Tensors{up, up}; }, {}});

  cases.push_back({"global_avg_pool", {random_tensor({2, 3, 4, 5}, rng)}, {"input"},
                   [](const Tensors& t) { return k::global_avg_pool(t[0]); },
                   [](const Tensors& t, const Tensor<double>& up) {
                     return Tensors{k::global_avg_pool_backward(up, t[0].shape())};
                   },
                   {},
                   1e-6});

  cases.push_back({"inner_product",
                   {random_tensor({2, 3, 2, 2}, rng), random_tensor({12, 5}, rng), random_tensor({5}, rng)},
                   {"input", "weights", "bias"},
                   [](const Tensors& t) { return k::inner_product(t[0], t[1], t[2]); },
                   [](const Tensors& t, const Tensor<double>& up) {
                     auto g = k::inner_product_backward(t[0], t[1], up);
                     return Tensors{g.input, g.weights, g.bias};
                   },
                   {}});

  {
    std::vector<int> labels(4);
    std::uniform_int_distribution<int> pick(0, 5);
    for (auto& l : labels) l = pick(rng);
    cases.push_back({"softmax_xent", {random_tensor({4, 6}, rng, -2.0, 2.0)}, {"logits"},
                     [labels](const Tensors& t) {
                       return Tensor<double>({1}, {k::softmax_xent(t[0], std::span<const int>(labels)).loss});
                     },
                     [labels](const Tensors& t, const Tensor<double>& up) {
                       const auto sm = k::softmax_xent(t[0], std::span<const int>(labels));
                       Tensor<double> g = k::softmax_xent_backward(sm.probs, std::span<const int>(labels));
                       for (auto& v : g.data()) v *= up[0];
                       return Tensors{g};
                     },
                     {},
                     1e-6});
  }

  cases.push_back({"concat_channels", {random_tensor({2, 2, 3, 3}, rng), random_tensor({2, 3, 3, 3}, rng)},
                   {"a", "b"}, [](const Tensors& t) { return k::concat_channels(t[0], t[1]); },
                   [](const Tensors&, const Tensor<double>& up) {
                     auto [a, b] = k::split_channels(up, 2);
                     return Tensors{a, b};
                   },
                   {}});
  return cases;
}

// Zero patterns of every rectified activation plus every pooling choice.
std::vector<bool> kink_signature(const Graph& graph, const ForwardCache<double>& cache) {
  std::vector<bool> sig;
  auto add_pattern = [&](const Tensor<double>& t) {
    for (double v : t.data()) sig.push_back(v > 0);
  };
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    if (graph.nodes[i].kind == NodeKind::relu) add_pattern(cache.outputs[i]);
  }
  for (const auto& [i, state] : cache.fire) {
    add_pattern(state.squeezed);
    add_pattern(state.expanded1x1);
    add_pattern(state.expanded3x3);
  }
  for (const auto& [i, argmax] : cache.argmax) {
    for (std::size_t a : argmax) {
      for (int bit = 0; bit < 32; ++bit) sig.push_back((a >> bit) & 1U);
    }
  }
  return sig;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

std::vector<CheckResult> check_kernels(const GradcheckOptions& options) {
  std::mt19937_64 rng(options.seed);
  auto cases = kernel_cases(rng);
  std::vector<CheckResult> results;
  for (auto& kc : cases) results.push_back(run_case(kc, rng, options));
  return results;
}

CheckResult check_whole_graph(const GradcheckOptions& options) {
  const std::string name = "whole_graph";
  CheckResult result{name, 0.0, options.graph_tolerance, 0, 0};
  const Graph graph = build_residual_squeeze(gradcheck_layout(), 5);
  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  ParamSet<double> params = init_weights(graph, {InitScheme::Kind::xavier_uniform, 0.0, options.seed}).cast<double>();
  // Non-trivial scale parameters so their gradients are exercised away from identity.
  for (auto& [node, named] : params.nodes) {
    for (auto& [wname, t] : named) {
      if (wname == "gamma" || wname == "beta" || wname.ends_with("bias")) {
        std::uniform_real_distribution<double> d(wname == "gamma" ? 0.5 : -0.1, wname == "gamma" ? 1.5 : 0.1);
        for (auto& v : t.data()) v = d(rng);
      }
    }
  }
  const ActShape in = graph.input;
  const Tensor<double> batch = random_tensor({2, in.c, in.h, in.w}, rng);
  std::vector<int> labels{1, 3};

  auto loss_of = [&](const ParamSet<double>& p, std::vector<bool>* signature) {
    auto fwd = forward(graph, p, batch, Mode::eval);
    if (signature) *signature = kink_signature(graph, fwd.cache);
    return k::softmax_xent(fwd.logits, std::span<const int>(labels)).loss;
  };

  auto fwd = forward(graph, params, batch, Mode::eval);
  const auto sm = k::softmax_xent(fwd.logits, std::span<const int>(labels));
  ParamSet<double> grads =
      backward(graph, params, fwd.cache, k::softmax_xent_backward(sm.probs, std::span<const int>(labels)));
  for (auto& [node, named] : grads.nodes) {
    for (auto& [wname, t] : named) {
      if (options.perturb) options.perturb(name, t);
    }
  }

  // Every tensor gets at least one sample; the rest are drawn uniformly over all coordinates.
  struct Coord {
    std::string node, weight;
    std::size_t index;
  };
  std::vector<Coord> all;
  for (const auto& [node, named] : params.nodes) {
    for (const auto& [wname, t] : named) {
      for (std::size_t i = 0; i < t.size(); ++i) all.push_back({node, wname, i});
    }
  }
  std::vector<Coord> samples;
  for (const auto& [node, named] : params.nodes) {
    for (const auto& [wname, t] : named) {
      samples.push_back({node, wname, std::uniform_int_distribution<std::size_t>(0, t.size() - 1)(rng)});
    }
  }
  std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
  while (samples.size() < options.graph_samples) samples.push_back(all[pick(rng)]);

  const double eps = options.graph_epsilon;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const Coord c = samples[s];
    ParamSet<double> plus = params, minus = params;
    plus.at(c.node, c.weight)[c.index] += eps;
    minus.at(c.node, c.weight)[c.index] -= eps;
    std::vector<bool> sig_plus, sig_minus;
    const double lp = loss_of(plus, &sig_plus);
    const double lm = loss_of(minus, &sig_minus);
    if (sig_plus != sig_minus) {
      // Replace the excluded coordinate so the checked count stays at the requested size.
      ++result.excluded;
      if (samples.size() < 4 * options.graph_samples) samples.push_back(all[pick(rng)]);
      continue;
    }
    const double numeric = (lp - lm) / (2 * eps);
    result.max_rel_error =
        std::max(result.max_rel_error, relative_error(grads.at(c.node, c.weight)[c.index], numeric));
    ++result.checked;
  }
  return result;
}

std::vector<CheckResult> run_gradcheck(const GradcheckOptions& options) {
  auto results = check_kernels(options);
  results.push_back(check_whole_graph(options));
  return results;
}

std::string render_gradcheck(const std::vector<CheckResult>& results) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-18s %14s %10s %8s %9s  %s\n", "check", "max_rel_error", "tolerance",
                "checked", "excluded", "status");
  out << line;
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-18s %14.6e %10.1e %8zu %9zu  %s\n", r.name.c_str(), r.max_rel_error,
                  r.tolerance, r.checked, r.excluded, r.passed() ? "ok" : "FAIL");
    out << line;
  }
  return out.str();
}

}  // namespace netforge
