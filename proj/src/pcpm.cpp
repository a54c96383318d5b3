// SPDX-License-Identifier: Apache-2.0
#include "pedrisk/pcpm.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pcpm_internal.hpp"
#include "pedrisk/error.hpp"

namespace pedrisk {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

void check_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ValidationError(std::string("parameter ") + name + " has shape " +
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                          ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

std::vector<std::size_t> layer_dims(const PCPMConfig& c) {
  std::vector<std::size_t> dims{c.input_dim()};
  dims.insert(dims.end(), c.mlp_hidden.begin(), c.mlp_hidden.end());
  dims.push_back(1);
  return dims;
}

void glorot(Matrix& m, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  std::uniform_real_distribution<double> u(-a, a);
  for (double& v : m.values()) v = u(rng);
}

void zero_like(const Matrix& src, Matrix& dst) { dst = Matrix(src.rows(), src.cols()); }

}  // namespace

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::backbone_only:
      return "backbone_only";
    case Variant::linear:
      return "linear";
    case Variant::self_att:
      return "self_att";
    case Variant::self_att_visual:
      return "self_att_visual";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  for (const Variant v : {Variant::backbone_only, Variant::linear, Variant::self_att,
                          Variant::self_att_visual}) {
    if (name == variant_name(v)) return v;
  }
  throw ValidationError("unknown PCPM variant '" + name +
                        "' (expected backbone_only, linear, self_att or self_att_visual)");
}

bool uses_queries(Variant v) { return v != Variant::backbone_only; }
bool uses_attention(Variant v) { return v == Variant::self_att || v == Variant::self_att_visual; }
bool uses_visual(Variant v) { return v == Variant::self_att_visual || v == Variant::backbone_only; }

std::size_t PCPMConfig::input_dim() const {
  std::size_t n = 0;
  if (uses_queries(variant)) n += d_model;
  if (uses_visual(variant)) n += d_model;
  if (include_coords) n += 2;
  return n;
}

void PCPMConfig::validate() const {
  require(d_model > 0, "d_model must be positive");
  require(heads == 1, "only single-head attention is supported (heads = 1)");
  require(!uses_visual(variant) || visual_channels > 0, "visual_channels must be positive");
  require(input_dim() > 0, "the MLP input is empty");
  for (const std::size_t h : mlp_hidden) require(h > 0, "mlp_hidden widths must be positive");
}

std::size_t EmbeddingSet::kept_rows() const {
  return static_cast<std::size_t>(std::count(noise_mask.begin(), noise_mask.end(), 0));
}

void EmbeddingSet::validate() const {
  const std::string who = "embedding '" + image_id + "': ";
  require(queries.rows() >= 1, who + "no queries");
  require(noise_mask.size() == queries.rows(), who + "mask length differs from query count");
  require(kept_rows() >= 1, who + "every query is masked");
  for (const auto m : noise_mask) require(m <= 1, who + "mask bytes must be 0 or 1");
  require(backbone_map.size() == map_h * map_w * map_c, who + "backbone map size mismatch");
  require(map_h * map_w > 0 || map_c == 0, who + "backbone map has no spatial cells");
  for (const double v : queries.values()) require(std::isfinite(v), who + "non-finite query value");
  for (const double v : backbone_map) require(std::isfinite(v), who + "non-finite map value");
  require(std::isfinite(coords[0]) && std::isfinite(coords[1]), who + "non-finite coordinates");
  require(std::isfinite(label) && label >= 0.0, who + "label must be a finite non-negative count");
}

std::size_t PCPMParams::size() const {
  std::size_t n = 0;
  for_each([&](const std::string&, std::span<const double> v) { n += v.size(); });
  return n;
}

PCPMParams PCPMParams::zeros_like() const {
  PCPMParams z;
  zero_like(wq, z.wq);
  zero_like(wk, z.wk);
  zero_like(wv, z.wv);
  zero_like(wo, z.wo);
  zero_like(w_vis, z.w_vis);
  z.mlp_w.resize(mlp_w.size());
  z.mlp_b.resize(mlp_b.size());
  for (std::size_t l = 0; l < mlp_w.size(); ++l) {
    zero_like(mlp_w[l], z.mlp_w[l]);
    z.mlp_b[l].assign(mlp_b[l].size(), 0.0);
  }
  return z;
}

bool PCPMParams::all_finite() const {
  bool ok = true;
  for_each([&](const std::string&, std::span<const double> v) {
    for (const double x : v) ok = ok && std::isfinite(x);
  });
  return ok;
}

std::size_t param_count(const PCPMConfig& config) {
  config.validate();
  const std::size_t d = config.d_model;
  std::size_t n = 0;
  if (uses_attention(config.variant)) n += 4 * d * d;
  if (config.variant == Variant::linear) n += d * d;
  if (uses_visual(config.variant)) n += config.visual_channels * d;
  const auto dims = layer_dims(config);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) n += dims[l] * dims[l + 1] + dims[l + 1];
  return n;
}

PCPMParams init_params(const PCPMConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t d = config.d_model;
  std::mt19937_64 rng(seed);
  PCPMParams p;
  if (uses_attention(config.variant)) {
    for (Matrix* m : {&p.wq, &p.wk, &p.wv, &p.wo}) {
      m->resize(d, d);
      glorot(*m, rng);
    }
  } else if (config.variant == Variant::linear) {
    p.wv.resize(d, d);
    glorot(p.wv, rng);
  }
  if (uses_visual(config.variant)) {
    p.w_vis.resize(config.visual_channels, d);
    glorot(p.w_vis, rng);
  }
  const auto dims = layer_dims(config);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    p.mlp_w.emplace_back(dims[l], dims[l + 1]);
    glorot(p.mlp_w.back(), rng);
    p.mlp_b.emplace_back(dims[l + 1], 0.0);
  }
  return p;
}

void check_params(const PCPMParams& p, const PCPMConfig& config) {
  config.validate();
  const std::size_t d = config.d_model;
  const bool att = uses_attention(config.variant);
  const bool lin = config.variant == Variant::linear;
  check_shape(p.wq, att ? d : 0, att ? d : 0, "wq");
  check_shape(p.wk, att ? d : 0, att ? d : 0, "wk");
  check_shape(p.wv, att || lin ? d : 0, att || lin ? d : 0, "wv");
  check_shape(p.wo, att ? d : 0, att ? d : 0, "wo");
  const bool vis = uses_visual(config.variant);
  check_shape(p.w_vis, vis ? config.visual_channels : 0, vis ? d : 0, "w_vis");
  const auto dims = layer_dims(config);
  require(p.mlp_w.size() == dims.size() - 1 && p.mlp_b.size() == dims.size() - 1,
          "MLP depth does not match mlp_hidden");
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    check_shape(p.mlp_w[l], dims[l], dims[l + 1], "mlp_w");
    require(p.mlp_b[l].size() == dims[l + 1], "MLP bias length mismatch");
  }
}

namespace detail {

void check_inputs(const PCPMConfig& config, const EmbeddingSet& emb) {
  emb.validate();
  if (uses_queries(config.variant)) {
    require(emb.queries.cols() == config.d_model,
            "embedding '" + emb.image_id + "': query width " + std::to_string(emb.queries.cols()) +
                " does not match d_model " + std::to_string(config.d_model));
  }
  if (uses_visual(config.variant)) {
    require(emb.map_c == config.visual_channels,
            "embedding '" + emb.image_id + "': map channels " + std::to_string(emb.map_c) +
                " do not match visual_channels " + std::to_string(config.visual_channels));
    require(emb.map_h * emb.map_w > 0, "embedding '" + emb.image_id + "': empty backbone map");
  }
}

double forward_cached(const PCPMParams& p, const PCPMConfig& config, const EmbeddingSet& emb,
                      ForwardCache& c) {
  const std::size_t d = config.d_model;
  c.acts.assign(1, {});
  c.pre.clear();
  std::vector<double>& z = c.acts[0];
  z.assign(config.input_dim(), 0.0);
  std::size_t off = 0;

  if (uses_queries(config.variant)) {
    const std::size_t n = emb.kept_rows();
    c.x.resize(n, d);
    for (std::size_t i = 0, r = 0; i < emb.queries.rows(); ++i) {
      if (emb.noise_mask[i]) continue;
      std::copy(emb.queries.row(i).begin(), emb.queries.row(i).end(), c.x.row(r).begin());
      ++r;
    }
    c.p.assign(d, 0.0);
    if (config.variant == Variant::linear) {
      c.xbar.assign(d, 0.0);
      for (std::size_t i = 0; i < n; ++i) axpy(1.0 / static_cast<double>(n), c.x.row(i), c.xbar);
      vecmat(c.xbar, p.wv, c.p);
    } else {
      matmul(c.x, p.wq, c.q);
      matmul(c.x, p.wk, c.k);
      matmul(c.x, p.wv, c.v);
      matmul_nt(c.q, c.k, c.a);
      const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
      c.abar.assign(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        auto row = c.a.row(i);
        double mx = -INFINITY;
        for (double& s : row) {
          s *= inv_sqrt_d;
          mx = std::max(mx, s);
        }
        double sum = 0.0;
        for (double& s : row) {
          s = std::exp(s - mx);
          sum += s;
        }
        for (std::size_t j = 0; j < n; ++j) {
          row[j] /= sum;
          c.abar[j] += row[j];
        }
      }
      for (double& v : c.abar) v /= static_cast<double>(n);
      // mean_i (A V Wo)_i = (abar V) Wo
      c.pooled_h.assign(d, 0.0);
      vecmat(c.abar, c.v, c.pooled_h);
      vecmat(c.pooled_h, p.wo, c.p);
    }
    std::copy(c.p.begin(), c.p.end(), z.begin());
    off += d;
  }

  if (uses_visual(config.variant)) {
    const std::size_t cells = emb.map_h * emb.map_w;
    c.gap.assign(emb.map_c, 0.0);
    for (std::size_t s = 0; s < cells; ++s) {
      for (std::size_t ch = 0; ch < emb.map_c; ++ch) c.gap[ch] += emb.backbone_map[s * emb.map_c + ch];
    }
    for (double& v : c.gap) v /= static_cast<double>(cells);
    c.vis.assign(d, 0.0);
    vecmat(c.gap, p.w_vis, c.vis);
    std::copy(c.vis.begin(), c.vis.end(), z.begin() + static_cast<std::ptrdiff_t>(off));
    off += d;
  }
  if (config.include_coords) {
    z[off] = emb.coords[0];
    z[off + 1] = emb.coords[1];
  }

  const std::size_t layers = p.mlp_w.size();
  for (std::size_t l = 0; l < layers; ++l) {
    std::vector<double> h(p.mlp_w[l].cols());
    vecmat(c.acts[l], p.mlp_w[l], h);
    axpy(1.0, p.mlp_b[l], h);
    if (l + 1 == layers) {
      c.out = h[0];
      break;
    }
    c.pre.push_back(h);
    for (double& v : h) v = std::max(0.0, v);
    c.acts.push_back(std::move(h));
  }
  return c.out;
}

void backward_cached(const PCPMParams& p, const PCPMConfig& config, const ForwardCache& c,
                     double dout, PCPMParams& g) {
  const std::size_t d = config.d_model;
  const std::size_t layers = p.mlp_w.size();
  std::vector<double> delta{dout};
  std::vector<double> dact;
  for (std::size_t l = layers; l-- > 0;) {
    add_outer(c.acts[l], delta, g.mlp_w[l]);
    axpy(1.0, delta, g.mlp_b[l]);
    dact.assign(p.mlp_w[l].rows(), 0.0);
    matvec(p.mlp_w[l], delta, dact);
    if (l == 0) break;
    const auto& pre = c.pre[l - 1];
    for (std::size_t j = 0; j < dact.size(); ++j) {
      if (!(pre[j] > 0.0)) dact[j] = 0.0;
    }
    delta.swap(dact);
  }
  // dact is now d(out)/dz.
  std::size_t off = 0;
  if (uses_queries(config.variant)) {
    const std::span<const double> dp(dact.data(), d);
    off += d;
    if (config.variant == Variant::linear) {
      add_outer(c.xbar, dp, g.wv);
    } else {
      const std::size_t n = c.x.rows();
      add_outer(c.pooled_h, dp, g.wo);
      std::vector<double> dph(d, 0.0);
      matvec(p.wo, dp, dph);
      std::vector<double> dabar(n, 0.0);
      matvec(c.v, dph, dabar);
      Matrix dv(n, d);
      add_outer(c.abar, dph, dv);
      // Softmax backward with dA_ij = dabar_j / n.
      const double inv_n = 1.0 / static_cast<double>(n);
      const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
      Matrix ds(n, n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto arow = c.a.row(i);
        const double s = dot(arow, dabar);
        for (std::size_t j = 0; j < n; ++j) ds(i, j) = arow[j] * (dabar[j] - s) * inv_n * inv_sqrt_d;
      }
      Matrix dq, dk, tmp;
      matmul(ds, c.k, dq);
      matmul_tn(ds, c.q, dk);
      matmul_tn(c.x, dq, tmp);
      axpy(1.0, tmp.values(), g.wq.values());
      matmul_tn(c.x, dk, tmp);
      axpy(1.0, tmp.values(), g.wk.values());
      matmul_tn(c.x, dv, tmp);
      axpy(1.0, tmp.values(), g.wv.values());
    }
  }
  if (uses_visual(config.variant)) {
    add_outer(c.gap, std::span<const double>(dact.data() + off, d), g.w_vis);
  }
}

}  // namespace detail

double forward(const PCPMParams& params, const PCPMConfig& config, const EmbeddingSet& emb) {
  check_params(params, config);
  detail::check_inputs(config, emb);
  detail::ForwardCache cache;
  return detail::forward_cached(params, config, emb, cache);
}

double loss(std::span<const double> yhat, std::span<const double> y) {
  if (yhat.empty()) throw ValidationError("loss: empty batch");
  if (yhat.size() != y.size()) throw ValidationError("loss: prediction and label counts differ");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (yhat[i] - y[i]) * (yhat[i] - y[i]);
  return s / static_cast<double>(y.size());
}

double accumulate_output_gradient(const PCPMParams& params, const PCPMConfig& config,
                                  const EmbeddingSet& emb, double scale, PCPMParams& grads) {
  check_params(params, config);
  check_params(grads, config);
  detail::check_inputs(config, emb);
  detail::ForwardCache cache;
  const double out = detail::forward_cached(params, config, emb, cache);
  detail::backward_cached(params, config, cache, scale, grads);
  return out;
}

PCPMParams backward(const PCPMParams& params, const PCPMConfig& config, const EmbeddingSet& emb,
                    double y) {
  check_params(params, config);
  detail::check_inputs(config, emb);
  detail::ForwardCache cache;
  const double out = detail::forward_cached(params, config, emb, cache);
  PCPMParams g = params.zeros_like();
  detail::backward_cached(params, config, cache, 2.0 * (out - y), g);
  return g;
}

EmbeddingSet augment_flip(const EmbeddingSet& emb) {
  EmbeddingSet out = emb;
  for (std::size_t h = 0; h < emb.map_h; ++h) {
    for (std::size_t w = 0; w < emb.map_w; ++w) {
      const std::size_t src = (h * emb.map_w + (emb.map_w - 1 - w)) * emb.map_c;
      const std::size_t dst = (h * emb.map_w + w) * emb.map_c;
      std::copy_n(emb.backbone_map.begin() + static_cast<std::ptrdiff_t>(src), emb.map_c,
                  out.backbone_map.begin() + static_cast<std::ptrdiff_t>(dst));
    }
  }
  return out;
}

}  // namespace pedrisk
