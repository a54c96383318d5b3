// SPDX-License-Identifier: Apache-2.0
#pragma once

// Collision prediction head over detector query embeddings: single-head
// self-attention, mean pooling, optional backbone visual embedding and
// coordinates, then an MLP regressing a scalar count.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pedrisk/linalg.hpp"

namespace pedrisk {

enum class Variant { backbone_only, linear, self_att, self_att_visual };

const char* variant_name(Variant v);
// Throws ValidationError for an unknown name.
Variant parse_variant(const std::string& name);

bool uses_queries(Variant v);
bool uses_attention(Variant v);
bool uses_visual(Variant v);

struct PCPMConfig {
  Variant variant = Variant::self_att_visual;
  std::size_t d_model = 32;
  std::size_t heads = 1;
  // Hidden ReLU layer widths; empty means the head is a single affine map.
  std::vector<std::size_t> mlp_hidden = {32, 32};
  bool include_coords = true;
  std::size_t visual_channels = 32;  // Cb of the backbone map

  // Width of the concatenated MLP input.
  std::size_t input_dim() const;
  // Throws ValidationError on zero widths or heads != 1.
  void validate() const;
};

struct EmbeddingSet {
  std::string image_id;
  Matrix queries;                    // N x d
  std::vector<std::uint8_t> noise_mask;  // 1 = denoising query, excluded
  std::size_t map_h = 0;
  std::size_t map_w = 0;
  std::size_t map_c = 0;
  std::vector<double> backbone_map;  // map_h x map_w x map_c, channel-last
  std::array<double, 2> coords{};
  double label = 0.0;

  std::size_t kept_rows() const;
  double map_at(std::size_t h, std::size_t w, std::size_t c) const {
    return backbone_map[(h * map_w + w) * map_c + c];
  }
  // Throws ValidationError on shape mismatches, non-finite values, or when
  // every query is masked.
  void validate() const;
};

struct PCPMParams {
  Matrix wq, wk, wv, wo;  // d x d; the linear variant uses wv only
  Matrix w_vis;           // Cb x d
  std::vector<Matrix> mlp_w;               // fan_in x fan_out, last is h x 1
  std::vector<std::vector<double>> mlp_b;

  // Visits every tensor in a fixed order as (name, flat values).
  template <typename F>
  void for_each(F&& f) {
    f("wq", std::span<double>(wq.values()));
    f("wk", std::span<double>(wk.values()));
    f("wv", std::span<double>(wv.values()));
    f("wo", std::span<double>(wo.values()));
    f("w_vis", std::span<double>(w_vis.values()));
    for (std::size_t l = 0; l < mlp_w.size(); ++l) {
      f("mlp_w" + std::to_string(l), std::span<double>(mlp_w[l].values()));
      f("mlp_b" + std::to_string(l), std::span<double>(mlp_b[l]));
    }
  }
  template <typename F>
  void for_each(F&& f) const {
    const_cast<PCPMParams*>(this)->for_each([&](const std::string& name, std::span<double> v) {
      f(name, std::span<const double>(v));
    });
  }

  std::size_t size() const;
  // Same shapes, all zeros.
  PCPMParams zeros_like() const;
  bool all_finite() const;
  friend bool operator==(const PCPMParams&, const PCPMParams&) = default;
};

// Exact number of scalar parameters for the configuration.
std::size_t param_count(const PCPMConfig& config);

// Glorot-uniform weights, zero biases; unused tensors are empty.
PCPMParams init_params(const PCPMConfig& config, std::uint64_t seed);

// Throws ValidationError when the tensor shapes do not fit the config.
void check_params(const PCPMParams& params, const PCPMConfig& config);

// Raw (unclamped) prediction. Throws ValidationError for inconsistent shapes,
// non-finite inputs or an all-masked query set.
double forward(const PCPMParams& params, const PCPMConfig& config, const EmbeddingSet& emb);

// Mean of (yhat_i - y_i)^2. Throws ValidationError on empty or mismatched input.
double loss(std::span<const double> yhat, std::span<const double> y);

// Gradient of the single-sample loss (forward - y)^2.
PCPMParams backward(const PCPMParams& params, const PCPMConfig& config, const EmbeddingSet& emb,
                    double y);

// Adds scale * d(forward)/d(params) to `grads`; returns the forward value.
double accumulate_output_gradient(const PCPMParams& params, const PCPMConfig& config,
                                  const EmbeddingSet& emb, double scale, PCPMParams& grads);

// Mirrors the backbone map along its width axis.
EmbeddingSet augment_flip(const EmbeddingSet& emb);

struct TrainConfig {
  int epochs = 20;
  int batch_size = 5;
  double lr = 1e-4;
  int lr_decay_epoch = 15;  // lr is multiplied by lr_decay from this epoch on
  double lr_decay = 0.1;
  bool flip = true;         // random horizontal flips, p = 0.5
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  PCPMParams params;
  std::vector<double> history;  // mean training loss per epoch
};

// Progress callback: (epoch, mean training loss).
using EpochCallback = std::function<void(int, double)>;

// Mini-batch SGD on the L2 loss from init_params(config, seed). Throws
// NumericalError naming the epoch and batch when the loss stops being finite.
TrainResult train(std::span<const EmbeddingSet> data, const PCPMConfig& config,
                  const TrainConfig& tcfg, const EpochCallback& on_epoch = {});

// Continues from given parameters.
TrainResult train_from(PCPMParams params, std::span<const EmbeddingSet> data,
                       const PCPMConfig& config, const TrainConfig& tcfg,
                       const EpochCallback& on_epoch = {});

}  // namespace pedrisk
