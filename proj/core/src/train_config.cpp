#include "wmr/train_config.hpp"

#include <cmath>
#include <initializer_list>

#include "wmr/errors.hpp"

namespace wmr {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

ExtractorProvenance parse_provenance(const std::string& s) {
  if (s == "pretrained-asset" || s == "pretrained") return ExtractorProvenance::pretrained_asset;
  if (s == "fixed-random") return ExtractorProvenance::fixed_random;
  if (s == "identity") return ExtractorProvenance::identity;
  throw ConfigError("unknown extractor provenance '" + s + "'");
}

}  // namespace

std::string to_string(LossConfig c) {
  switch (c) {
    case LossConfig::l1: return "l1";
    case LossConfig::perceptual: return "perceptual";
    case LossConfig::l1_perceptual: return "l1+perceptual";
    case LossConfig::gan: return "l1+perceptual+gan";
    case LossConfig::cgan: return "l1+perceptual+cgan";
  }
  return "unknown";
}

LossConfig parse_loss_config(const std::string& text) {
  if (text == "l1") return LossConfig::l1;
  if (text == "perceptual") return LossConfig::perceptual;
  if (text == "l1+perceptual") return LossConfig::l1_perceptual;
  if (text == "+gan" || text == "gan" || text == "l1+perceptual+gan") return LossConfig::gan;
  if (text == "+cgan" || text == "cgan" || text == "l1+perceptual+cgan") return LossConfig::cgan;
  throw ConfigError("unknown loss configuration '" + text + "'");
}

std::string table_label(LossConfig c) {
  switch (c) {
    case LossConfig::l1: return "L1";
    case LossConfig::perceptual: return "Perceptual";
    case LossConfig::l1_perceptual: return "L1 + Perceptual";
    case LossConfig::gan: return "L1 + Perceptual + GAN";
    case LossConfig::cgan: return "L1 + Perceptual + cGAN";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and non-negative");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (checkpoint_interval < 0) throw ConfigError("checkpoint_interval must be >= 0");
  weights.validate();
  generator.validate();
  effective_discriminator().validate();
  if (is_adversarial(loss) &&
      score_map_side(effective_discriminator(), generator.input_side) < 1) {
    throw ConfigError("discriminator too deep for input side " +
                      std::to_string(generator.input_side));
  }
}

DiscriminatorConfig TrainConfig::effective_discriminator() const {
  DiscriminatorConfig d = discriminator;
  d.kind = discriminator_kind;
  d.conditional = loss != LossConfig::gan;
  d.image_channels = generator.out_channels;
  return d;
}

json to_json(const GeneratorConfig& c) {
  return {{"depth", c.depth},
          {"base_channels", c.base_channels},
          {"input_side", c.input_side},
          {"in_channels", c.in_channels},
          {"out_channels", c.out_channels},
          {"max_channels", c.max_channels}};
}

json to_json(const DiscriminatorConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"base_channels", c.base_channels},
          {"n_layers", c.n_layers},
          {"conditional", c.conditional},
          {"image_channels", c.image_channels}};
}

json to_json(const ExtractorConfig& c) {
  return {{"provenance", to_string(c.provenance)},
          {"asset_path", c.asset_path.string()},
          {"sha256", c.sha256},
          {"width1", c.width1},
          {"width2", c.width2},
          {"seed", c.seed}};
}

json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"loss_config", to_string(c.loss)},
          {"discriminator_kind", to_string(c.discriminator_kind)},
          {"weights", {{"alpha", c.weights.alpha}, {"beta", c.weights.beta}}},
          {"seed", c.seed},
          {"checkpoint_interval", c.checkpoint_interval},
          {"generator", to_json(c.generator)},
          {"discriminator", to_json(c.discriminator)},
          {"extractor", to_json(c.extractor)}};
}

GeneratorConfig generator_config_from_json(const json& j, GeneratorConfig base) {
  check_keys(j, {"depth", "base_channels", "input_side", "in_channels", "out_channels",
                 "max_channels"},
             "generator");
  read(j, "depth", base.depth);
  read(j, "base_channels", base.base_channels);
  read(j, "input_side", base.input_side);
  read(j, "in_channels", base.in_channels);
  read(j, "out_channels", base.out_channels);
  read(j, "max_channels", base.max_channels);
  return base;
}

DiscriminatorConfig discriminator_config_from_json(const json& j, DiscriminatorConfig base) {
  check_keys(j, {"kind", "base_channels", "n_layers", "conditional", "image_channels"},
             "discriminator");
  if (j.contains("kind")) base.kind = parse_discriminator_kind(j.at("kind").get<std::string>());
  read(j, "base_channels", base.base_channels);
  read(j, "n_layers", base.n_layers);
  read(j, "conditional", base.conditional);
  read(j, "image_channels", base.image_channels);
  return base;
}

ExtractorConfig extractor_config_from_json(const json& j, ExtractorConfig base) {
  check_keys(j, {"provenance", "asset_path", "sha256", "width1", "width2", "seed"}, "extractor");
  if (j.contains("provenance")) {
    base.provenance = parse_provenance(j.at("provenance").get<std::string>());
  }
  if (j.contains("asset_path")) base.asset_path = j.at("asset_path").get<std::string>();
  read(j, "sha256", base.sha256);
  read(j, "width1", base.width1);
  read(j, "width2", base.width2);
  read(j, "seed", base.seed);
  return base;
}

TrainConfig train_config_from_json(const json& j, TrainConfig base) {
  check_keys(j,
             {"learning_rate", "adam_beta1", "adam_beta2", "batch_size", "epochs", "loss_config",
              "discriminator_kind", "weights", "seed", "checkpoint_interval", "generator",
              "discriminator", "extractor", "output_dir"},
             "train");
  read(j, "learning_rate", base.learning_rate);
  read(j, "adam_beta1", base.adam_beta1);
  read(j, "adam_beta2", base.adam_beta2);
  read(j, "batch_size", base.batch_size);
  read(j, "epochs", base.epochs);
  if (j.contains("loss_config")) base.loss = parse_loss_config(j.at("loss_config").get<std::string>());
  if (j.contains("discriminator_kind")) {
    base.discriminator_kind = parse_discriminator_kind(j.at("discriminator_kind").get<std::string>());
  }
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    check_keys(w, {"alpha", "beta"}, "weights");
    read(w, "alpha", base.weights.alpha);
    read(w, "beta", base.weights.beta);
  }
  read(j, "seed", base.seed);
  read(j, "checkpoint_interval", base.checkpoint_interval);
  if (j.contains("generator")) base.generator = generator_config_from_json(j.at("generator"), base.generator);
  if (j.contains("discriminator")) {
    base.discriminator = discriminator_config_from_json(j.at("discriminator"), base.discriminator);
  }
  if (j.contains("extractor")) base.extractor = extractor_config_from_json(j.at("extractor"), base.extractor);
  return base;
}

}  // namespace wmr
