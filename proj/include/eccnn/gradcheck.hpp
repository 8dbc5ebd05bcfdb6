#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "eccnn/tensor.hpp"

ECCNN_BEGIN_NAMESPACE

struct GradcheckOptions {
  double step = 1e-5;
  // Entries probed per leaf; 0 probes every entry.
  int max_entries = 0;
  std::uint64_t seed = 7;
};

// Worst per-leaf relative error ||g_analytic - g_fd|| / max(||g_analytic||, ||g_fd||)
// between backward() on `loss` and central differences. `loss` must rebuild
// the graph from the current leaf values on every call.
double gradient_error(const std::function<Tensor()>& loss, const std::vector<Tensor>& leaves,
                      const GradcheckOptions& options = {});

// sum(y (.) r) for a fixed random r; a scalar probe with a generic adjoint.
Tensor random_projection(const Tensor& y, std::uint64_t seed);

struct GradcheckResult {
  std::string layer;
  double error = 0;
  double tolerance = 0;
  bool pass() const { return error < tolerance; }
};

// Every differentiable layer of the library plus the full model at 16 x 16.
// Meaningful in 64-bit builds.
std::vector<GradcheckResult> gradcheck_suite(std::uint64_t seed = 7);

// CSV (layer, rel_error, tolerance, status).
std::string gradcheck_table(const std::vector<GradcheckResult>& results);

ECCNN_END_NAMESPACE
