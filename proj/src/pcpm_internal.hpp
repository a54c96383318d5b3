// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "pedrisk/pcpm.hpp"

namespace pedrisk::detail {

struct ForwardCache {
  Matrix x;  // kept query rows
  Matrix q, k, v;
  Matrix a;  // row-softmaxed attention weights
  std::vector<double> abar;      // column means of a
  std::vector<double> pooled_h;  // abar * v
  std::vector<double> xbar;      // linear variant: row mean of x
  std::vector<double> p;         // pooled query feature
  std::vector<double> gap;
  std::vector<double> vis;
  std::vector<std::vector<double>> acts;  // MLP layer inputs, acts[0] = concatenation
  std::vector<std::vector<double>> pre;   // hidden pre-activations
  double out = 0.0;
};

void check_inputs(const PCPMConfig& config, const EmbeddingSet& emb);
double forward_cached(const PCPMParams& p, const PCPMConfig& config, const EmbeddingSet& emb,
                      ForwardCache& c);
// Adds dout * d(out)/d(params) to g.
void backward_cached(const PCPMParams& p, const PCPMConfig& config, const ForwardCache& c,
                     double dout, PCPMParams& g);

}  // namespace pedrisk::detail
