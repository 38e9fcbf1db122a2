#include "wmr/discriminator.hpp"

#include <algorithm>

#include "wmr/errors.hpp"

namespace wmr {

namespace {

constexpr double kLeakySlope = 0.2;
constexpr double kInitStd = 0.02;

nn::ConvGeometry layer_geometry(const DiscriminatorConfig& cfg, int i) {
  return i < cfg.n_layers ? nn::ConvGeometry{4, 2, 1} : nn::ConvGeometry{4, 1, 1};
}
const nn::ConvGeometry kOutputGeometry{4, 1, 1};

std::string layer_name(int i) { return "layer" + std::to_string(i); }

}  // namespace

std::string to_string(DiscriminatorKind kind) {
  return kind == DiscriminatorKind::patch ? "patch" : "image";
}

DiscriminatorKind parse_discriminator_kind(const std::string& text) {
  if (text == "patch" || text == "patch-based") return DiscriminatorKind::patch;
  if (text == "image" || text == "image-based") return DiscriminatorKind::image;
  throw ConfigError("unknown discriminator kind '" + text + "'");
}

void DiscriminatorConfig::validate() const {
  if (n_layers < 1) throw ConfigError("discriminator n_layers must be >= 1");
  if (base_channels < 1) throw ConfigError("discriminator base_channels must be >= 1");
  if (image_channels < 1) throw ConfigError("discriminator image_channels must be >= 1");
}

int DiscriminatorConfig::layer_channels(int i) const {
  const int mult = 1 << std::min(i, 3);
  return base_channels * mult;
}

int score_map_side(const DiscriminatorConfig& cfg, int input_side) {
  int side = input_side;
  for (int i = 0; i <= cfg.n_layers; ++i) side = nn::conv_out_size(side, layer_geometry(cfg, i));
  return nn::conv_out_size(side, kOutputGeometry);
}

int patch_receptive_field(const DiscriminatorConfig& cfg) {
  int rf = 1;
  int jump = 1;
  auto apply = [&](const nn::ConvGeometry& g) {
    rf += (g.kernel - 1) * jump;
    jump *= g.stride;
  };
  for (int i = 0; i <= cfg.n_layers; ++i) apply(layer_geometry(cfg, i));
  apply(kOutputGeometry);
  return rf;
}

DiscriminatorParams init_discriminator(const DiscriminatorConfig& cfg, RngStream rng) {
  cfg.validate();
  DiscriminatorParams params{cfg, {}};
  auto normal_tensor = [&rng](nn::Shape s) {
    nn::Tensor t(s);
    for (double& v : t.data()) v = kInitStd * rng.normal();
    return t;
  };
  int in = cfg.in_channels();
  for (int i = 0; i <= cfg.n_layers; ++i) {
    const int out = cfg.layer_channels(i);
    params.tensors.add(layer_name(i) + ".weight", normal_tensor(nn::Shape{out, in, 4, 4}));
    if (i == 0) {
      params.tensors.add(layer_name(i) + ".bias", nn::Tensor(nn::Shape{1, out, 1, 1}));
    } else {
      params.tensors.add(layer_name(i) + ".gamma", nn::Tensor(nn::Shape{1, out, 1, 1}, 1.0));
      params.tensors.add(layer_name(i) + ".beta", nn::Tensor(nn::Shape{1, out, 1, 1}, 0.0));
    }
    in = out;
  }
  if (cfg.kind == DiscriminatorKind::patch) {
    params.tensors.add("out.weight", normal_tensor(nn::Shape{1, in, 4, 4}));
    params.tensors.add("out.bias", nn::Tensor(nn::Shape{1, 1, 1, 1}));
  } else {
    params.tensors.add("head.weight", normal_tensor(nn::Shape{1, in, 1, 1}));
    params.tensors.add("head.bias", nn::Tensor(nn::Shape{1, 1, 1, 1}));
  }
  return params;
}

nn::Tensor discriminator_logits(const DiscriminatorParams& params, const nn::Tensor& input,
                                DiscriminatorTape* tape) {
  const DiscriminatorConfig& cfg = params.config;
  const nn::ParamSet& p = params.tensors;
  if (input.shape().c != cfg.in_channels()) {
    throw ShapeError("discriminator expects " + std::to_string(cfg.in_channels()) +
                     " input channels, got " + nn::to_string(input.shape()));
  }
  if (score_map_side(cfg, std::min(input.shape().h, input.shape().w)) < 1) {
    throw ShapeError("input " + nn::to_string(input.shape()) + " too small for discriminator");
  }
  if (tape) tape->layers.assign(static_cast<std::size_t>(cfg.n_layers + 1), {});

  nn::Tensor h = input;
  for (int i = 0; i <= cfg.n_layers; ++i) {
    const std::string name = layer_name(i);
    const nn::Tensor& w = p[p.index_of(name + ".weight")];
    nn::Tensor pre;
    nn::NormCache cache;
    if (i == 0) {
      pre = nn::conv2d(h, w, p[p.index_of(name + ".bias")], layer_geometry(cfg, i));
    } else {
      const nn::Tensor zero_bias(nn::Shape{1, w.shape().n, 1, 1});
      nn::Tensor z = nn::conv2d(h, w, zero_bias, layer_geometry(cfg, i));
      pre = nn::instance_norm(z, p[p.index_of(name + ".gamma")], p[p.index_of(name + ".beta")],
                              tape ? &cache : nullptr);
    }
    nn::Tensor out = nn::leaky_relu(pre, kLeakySlope);
    if (tape) {
      auto& layer = tape->layers[static_cast<std::size_t>(i)];
      layer.input = std::move(h);
      layer.pre_activation = std::move(pre);
      layer.norm = std::move(cache);
    }
    h = std::move(out);
  }

  nn::Tensor logits;
  if (cfg.kind == DiscriminatorKind::patch) {
    logits = nn::conv2d(h, p[p.index_of("out.weight")], p[p.index_of("out.bias")], kOutputGeometry);
    if (tape) tape->head_input = std::move(h);
  } else {
    nn::Tensor pooled = nn::global_avg_pool(h);
    logits = nn::conv2d(pooled, p[p.index_of("head.weight")], p[p.index_of("head.bias")],
                        nn::ConvGeometry{1, 1, 0});
    if (tape) {
      tape->head_input = std::move(h);
      tape->pooled = std::move(pooled);
    }
  }
  if (tape) tape->logits = logits;
  return logits;
}

nn::Tensor discriminator_backward(const DiscriminatorParams& params, const DiscriminatorTape& tape,
                                  const nn::Tensor& dlogits, nn::ParamSet& grads) {
  const DiscriminatorConfig& cfg = params.config;
  const nn::ParamSet& p = params.tensors;
  if (!grads.same_layout(p)) {
    throw ShapeError("gradient set does not match discriminator parameters");
  }
  nn::Tensor g;
  if (cfg.kind == DiscriminatorKind::patch) {
    const std::size_t w = p.index_of("out.weight"), b = p.index_of("out.bias");
    nn::conv2d_backward(tape.head_input, p[w], kOutputGeometry, dlogits, &g, &grads[w], &grads[b]);
  } else {
    const std::size_t w = p.index_of("head.weight"), b = p.index_of("head.bias");
    nn::Tensor dpooled;
    nn::conv2d_backward(tape.pooled, p[w], nn::ConvGeometry{1, 1, 0}, dlogits, &dpooled, &grads[w],
                        &grads[b]);
    g = nn::global_avg_pool_backward(tape.head_input.shape(), dpooled);
  }
  for (int i = cfg.n_layers; i >= 0; --i) {
    const auto& layer = tape.layers[static_cast<std::size_t>(i)];
    const std::string name = layer_name(i);
    const std::size_t w = p.index_of(name + ".weight");
    nn::Tensor dpre = nn::leaky_relu_backward(layer.pre_activation, g, kLeakySlope);
    nn::Tensor dz;
    if (i == 0) {
      const std::size_t b = p.index_of(name + ".bias");
      nn::conv2d_backward(layer.input, p[w], layer_geometry(cfg, i), dpre, &g, &grads[w], &grads[b]);
    } else {
      const std::size_t ga = p.index_of(name + ".gamma"), be = p.index_of(name + ".beta");
      nn::instance_norm_backward(layer.norm, p[ga], dpre, &dz, &grads[ga], &grads[be]);
      nn::conv2d_backward(layer.input, p[w], layer_geometry(cfg, i), dz, &g, &grads[w], nullptr);
    }
  }
  return g;
}

nn::Tensor discriminator_input(const DiscriminatorConfig& cfg, const nn::Tensor& condition,
                               const nn::Tensor& candidate) {
  if (!cfg.conditional) return candidate;
  if (!(condition.shape() == candidate.shape())) {
    throw ShapeError("condition " + nn::to_string(condition.shape()) + " and candidate " +
                     nn::to_string(candidate.shape()) + " differ");
  }
  return nn::concat_channels(condition, candidate);
}

namespace {

PatchScoreMap score(const DiscriminatorParams& params, const nn::Tensor& input) {
  PatchScoreMap map;
  map.probabilities = nn::sigmoid(discriminator_logits(params, input));
  map.receptive_field = params.config.kind == DiscriminatorKind::patch
                            ? patch_receptive_field(params.config)
                            : std::max(input.shape().h, input.shape().w);
  return map;
}

}  // namespace

PatchScoreMap discriminator_forward(const DiscriminatorParams& params, const nn::Tensor& condition,
                                    const nn::Tensor& candidate) {
  if (!params.config.conditional) {
    throw ConfigError("discriminator_forward needs a conditional discriminator");
  }
  return score(params, discriminator_input(params.config, condition, candidate));
}

PatchScoreMap unconditional_forward(const DiscriminatorParams& params, const nn::Tensor& candidate) {
  if (params.config.conditional) {
    throw ConfigError("unconditional_forward needs an unconditional discriminator");
  }
  return score(params, candidate);
}

double aggregate_real_probability(const PatchScoreMap& map) {
  const auto d = map.probabilities.data();
  if (d.empty()) throw ShapeError("empty score map");
  double sum = 0.0;
  for (double v : d) sum += v;
  return sum / static_cast<double>(d.size());
}

}  // namespace wmr
