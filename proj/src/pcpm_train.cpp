// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pcpm_internal.hpp"
#include "pedrisk/error.hpp"
#include "pedrisk/pcpm.hpp"

namespace pedrisk {

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ValidationError("lr must be a finite value >= 0");
  if (!(lr_decay > 0.0) || !std::isfinite(lr_decay)) throw ValidationError("lr_decay must be positive");
}

TrainResult train(std::span<const EmbeddingSet> data, const PCPMConfig& config,
                  const TrainConfig& tcfg, const EpochCallback& on_epoch) {
  return train_from(init_params(config, tcfg.seed), data, config, tcfg, on_epoch);
}

TrainResult train_from(PCPMParams params, std::span<const EmbeddingSet> data,
                       const PCPMConfig& config, const TrainConfig& tcfg,
                       const EpochCallback& on_epoch) {
  tcfg.validate();
  check_params(params, config);
  if (data.empty()) throw ValidationError("train: empty dataset");
  for (const auto& emb : data) detail::check_inputs(config, emb);

  // Separate streams so toggling flips leaves the batch order unchanged.
  std::mt19937_64 order_rng(tcfg.seed ^ 0x5851f42d4c957f2dULL);
  std::mt19937_64 flip_rng(tcfg.seed ^ 0x14057b7ef767814fULL);
  std::bernoulli_distribution coin(0.5);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const auto bs = static_cast<std::size_t>(tcfg.batch_size);

  TrainResult result;
  PCPMParams grads = params.zeros_like();
  detail::ForwardCache cache;
  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    const double lr = epoch >= tcfg.lr_decay_epoch ? tcfg.lr * tcfg.lr_decay : tcfg.lr;
    std::shuffle(order.begin(), order.end(), order_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += bs, ++batch) {
      const std::size_t end = std::min(order.size(), start + bs);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      grads.for_each([](const std::string&, std::span<double> v) { std::fill(v.begin(), v.end(), 0.0); });
      double batch_loss = 0.0;
      for (std::size_t s = start; s < end; ++s) {
        const EmbeddingSet& src = data[order[s]];
        const bool flip = tcfg.flip && coin(flip_rng);
        const EmbeddingSet flipped = flip ? augment_flip(src) : EmbeddingSet{};
        const EmbeddingSet& emb = flip ? flipped : src;
        const double out = detail::forward_cached(params, config, emb, cache);
        const double err = out - emb.label;
        batch_loss += err * err;
        detail::backward_cached(params, config, cache, 2.0 * err * inv_b, grads);
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch + 1) +
                             ", batch " + std::to_string(batch + 1));
      }
      epoch_loss += batch_loss;
      if (lr != 0.0) {
        std::vector<std::span<double>> dst;
        params.for_each([&](const std::string&, std::span<double> v) { dst.push_back(v); });
        std::size_t t = 0;
        grads.for_each([&](const std::string&, std::span<double> g) { axpy(-lr, g, dst[t++]); });
      }
    }
    const double mean_loss = epoch_loss / static_cast<double>(data.size());
    if (!params.all_finite()) {
      throw NumericalError("training diverged: non-finite parameters after epoch " +
                           std::to_string(epoch + 1));
    }
    result.history.push_back(mean_loss);
    if (on_epoch) on_epoch(epoch + 1, mean_loss);
  }
  result.params = std::move(params);
  return result;
}

}  // namespace pedrisk
