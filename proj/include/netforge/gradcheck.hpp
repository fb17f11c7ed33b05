#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "netforge/tensor.hpp"

namespace netforge {

struct CheckResult {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t checked = 0;   // coordinates compared
  std::size_t excluded = 0;  // coordinates whose perturbation crossed a ReLU/max kink

  bool passed() const { return checked > 0 && max_rel_error <= tolerance; }
};

struct GradcheckOptions {
  std::uint64_t seed = 7;
  double kernel_epsilon = 1e-3;
  double kernel_tolerance = 1e-5;
  double graph_epsilon = 1e-5;
  double graph_tolerance = 1e-4;
  std::size_t graph_samples = 64;
  // Called on each analytic gradient before comparison; lets tests inject faults.
  std::function<void(const std::string& check, Tensor<double>& analytic)> perturb;
};

// |a - n| / max(|a|, |n|, 1e-6)
double relative_error(double analytic, double numeric);

// One result per kernel, in a fixed order, 64-bit arithmetic throughout.
std::vector<CheckResult> check_kernels(const GradcheckOptions& options = {});

// Sampled weights of the small residual squeeze network against the softmax loss.
CheckResult check_whole_graph(const GradcheckOptions& options = {});

std::vector<CheckResult> run_gradcheck(const GradcheckOptions& options = {});

std::string render_gradcheck(const std::vector<CheckResult>& results);

}  // namespace netforge
