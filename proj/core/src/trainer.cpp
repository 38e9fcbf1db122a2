#include "wmr/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "wmr/errors.hpp"
#include "wmr/losses.hpp"
#include "wmr/ops.hpp"

namespace wmr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json optional_value(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

double mean(const nn::Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v;
  return s / static_cast<double>(t.numel());
}

void require_finite(double v, const char* what, std::int64_t step) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string("non-finite ") + what + " at step " + std::to_string(step));
  }
}

nn::Tensor stack(const std::vector<nn::Tensor>& items) {
  const nn::Shape s = items.front().shape();
  nn::Tensor out(nn::Shape{static_cast<int>(items.size()), s.c, s.h, s.w});
  const std::size_t per = static_cast<std::size_t>(s.c) * s.plane();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!(items[i].shape() == s)) throw ShapeError("batch items differ in shape");
    std::copy_n(items[i].data().data(), per, out.plane(static_cast<int>(i), 0));
  }
  return out;
}

}  // namespace

json to_json(const StepMetrics& m) {
  return {{"type", "step"},
          {"step", m.step},
          {"epoch", m.epoch},
          {"d_loss", optional_value(m.d_loss)},
          {"d_real", optional_value(m.d_real)},
          {"d_fake", optional_value(m.d_fake)},
          {"adv_g", optional_value(m.adv_g)},
          {"l1", m.l1},
          {"perceptual", m.perceptual},
          {"total_g", m.total_g}};
}

json to_json(const EpochMetrics& m) {
  return {{"type", "epoch"},
          {"epoch", m.epoch},
          {"steps", m.steps},
          {"mean_l1", m.mean_l1},
          {"mean_perceptual", m.mean_perceptual},
          {"mean_total_g", m.mean_total_g},
          {"mean_d_loss", optional_value(m.mean_d_loss)}};
}

Trainer::Trainer(const TrainConfig& cfg)
    : cfg_(cfg), extractor_(FeatureExtractor::from_config(cfg.extractor)), rng_(cfg.seed) {
  cfg_.validate();
  g_ = init_generator(cfg_.generator, rng_.derive("generator"));
  d_ = init_discriminator(cfg_.effective_discriminator(), rng_.derive("discriminator"));
  g_opt_ = Adam(cfg_.adam(), g_.tensors);
  d_opt_ = Adam(cfg_.adam(), d_.tensors);
}

Trainer::Trainer(const Checkpoint& ckpt)
    : cfg_(ckpt.config),
      g_(ckpt.generator),
      d_(ckpt.discriminator),
      extractor_(FeatureExtractor::from_config(ckpt.config.extractor)),
      rng_(ckpt.rng),
      step_(ckpt.step) {
  cfg_.validate();
  g_opt_ = Adam(cfg_.adam(), g_.tensors);
  g_opt_.restore(ckpt.generator_optimizer.first_moment, ckpt.generator_optimizer.second_moment,
                 ckpt.generator_optimizer.steps);
  d_opt_ = Adam(cfg_.adam(), d_.tensors);
  d_opt_.restore(ckpt.discriminator_optimizer.first_moment,
                 ckpt.discriminator_optimizer.second_moment, ckpt.discriminator_optimizer.steps);
}

StepMetrics Trainer::train_step(const nn::Tensor& x, const nn::Tensor& y) {
  if (!(x.shape() == y.shape())) {
    throw ShapeError("x " + nn::to_string(x.shape()) + " and y " + nn::to_string(y.shape()) +
                     " differ");
  }
  StepMetrics m;
  m.step = step_ + 1;
  m.epoch = epoch_;
  const bool adversarial = is_adversarial(cfg_.loss);
  const DiscriminatorConfig& dcfg = d_.config;

  GeneratorTape gtape;
  const nn::Tensor fake = generator_forward(g_, x, &gtape);

  if (adversarial) {
    nn::ParamSet d_grads = d_.tensors.zeros_like();
    DiscriminatorTape tape;
    const nn::Tensor real_logits = discriminator_logits(d_, discriminator_input(dcfg, x, y), &tape);
    const nn::Tensor p_real = nn::sigmoid(real_logits);
    (void)discriminator_backward(d_, tape, adversarial_real_logit_grad(p_real), d_grads);
    // G's output enters as a constant: nothing here touches G's tape.
    const nn::Tensor fake_logits =
        discriminator_logits(d_, discriminator_input(dcfg, x, fake), &tape);
    const nn::Tensor p_fake = nn::sigmoid(fake_logits);
    (void)discriminator_backward(d_, tape, adversarial_fake_logit_grad(p_fake), d_grads);
    m.d_loss = adversarial_d_loss(p_real, p_fake);
    m.d_real = mean(p_real);
    m.d_fake = mean(p_fake);
    require_finite(*m.d_loss, "discriminator loss", m.step);
    d_opt_.step(d_.tensors, d_grads);
  }

  const double alpha = uses_l1(cfg_.loss) ? cfg_.weights.alpha : 0.0;
  const double beta = uses_perceptual(cfg_.loss) ? cfg_.weights.beta : 0.0;
  nn::Tensor dfake(fake.shape());

  m.l1 = l1_loss(fake, y);
  if (alpha != 0.0) {
    const nn::Tensor g = l1_loss_grad(fake, y);
    for (std::size_t i = 0; i < g.numel(); ++i) dfake.data()[i] += alpha * g.data()[i];
  }
  if (beta != 0.0) {
    const LossAndGrad per = perceptual_loss_with_grad(extractor_, fake, y);
    m.perceptual = per.value;
    for (std::size_t i = 0; i < per.grad.numel(); ++i) dfake.data()[i] += beta * per.grad.data()[i];
  } else {
    m.perceptual = perceptual_loss(extractor_, fake, y);
  }
  double adv = 0.0;
  if (adversarial) {
    DiscriminatorTape tape;
    const nn::Tensor logits = discriminator_logits(d_, discriminator_input(dcfg, x, fake), &tape);
    const nn::Tensor p = nn::sigmoid(logits);
    adv = adversarial_g_loss(p);
    m.adv_g = adv;
    nn::ParamSet discarded = d_.tensors.zeros_like();
    nn::Tensor din = discriminator_backward(d_, tape, adversarial_g_logit_grad(p), discarded);
    if (dcfg.conditional) din = nn::split_channels(din, x.shape().c).second;
    dfake += din;
  }
  m.total_g = total_generator_loss(adv, m.l1, m.perceptual, LossWeights{alpha, beta});
  require_finite(m.total_g, "generator loss", m.step);

  nn::ParamSet g_grads = g_.tensors.zeros_like();
  (void)generator_backward(g_, gtape, dfake, g_grads);
  g_opt_.step(g_.tensors, g_grads);
  ++step_;
  return m;
}

StepMetrics Trainer::train_step(const PairedSample& sample) {
  return train_step(nn::to_network(to_rgb(sample.x)), nn::to_network(to_rgb(sample.y)));
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.config = cfg_;
  c.generator = g_;
  c.discriminator = d_;
  c.generator_optimizer = {g_opt_.first_moment(), g_opt_.second_moment(), g_opt_.steps()};
  c.discriminator_optimizer = {d_opt_.first_moment(), d_opt_.second_moment(), d_opt_.steps()};
  c.step = step_;
  c.rng = rng_;
  return c;
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, int epoch, std::size_t n) {
  RngStream rng = RngStream(seed).derive("shuffle").derive(static_cast<std::uint64_t>(epoch));
  return shuffled_indices(n, rng);
}

std::uint64_t data_order_hash(std::uint64_t seed, int epochs, std::size_t n) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (int e = 0; e < epochs; ++e) {
    for (std::size_t i : epoch_order(seed, e, n)) {
      for (int b = 0; b < 8; ++b) {
        h ^= (i >> (8 * b)) & 0xFF;
        h *= 0x100000001B3ULL;
      }
    }
  }
  return h;
}

TrainResult train(const DatasetManifest& manifest, const TrainConfig& cfg,
                  const TrainOptions& options) {
  const std::vector<ManifestRow> rows = manifest.rows_in(Split::train);
  if (rows.empty()) throw DataError("training split is empty");
  cfg.validate();

  Trainer trainer = options.resume ? Trainer(*options.resume) : Trainer(cfg);
  const TrainConfig& run_cfg = trainer.config();
  const auto n = rows.size();
  const auto batch = static_cast<std::size_t>(run_cfg.batch_size);
  const auto batches_per_epoch = static_cast<std::int64_t>((n + batch - 1) / batch);
  const std::int64_t total_steps = batches_per_epoch * run_cfg.epochs;
  const std::int64_t stop_at =
      options.max_steps >= 0 ? std::min(options.max_steps, total_steps) : total_steps;

  std::ofstream log;
  if (!options.output_dir.empty()) {
    fs::create_directories(options.output_dir);
    log.open(options.output_dir / "metrics.jsonl", std::ios::app);
    if (!log) throw IoError("cannot open metrics log in " + options.output_dir.string());
  }
  auto emit = [&log](json record) {
    if (!log.is_open()) return;
    record["time"] = std::chrono::duration<double>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    log << record.dump() << '\n';
    log.flush();
  };
  auto load_pair = [&](const ManifestRow& r) {
    return std::pair{nn::to_network(to_rgb(load_image(manifest.resolve(r.x_path)))),
                     nn::to_network(to_rgb(load_image(manifest.resolve(r.y_path))))};
  };

  TrainResult result;
  result.data_order_hash = data_order_hash(run_cfg.seed, run_cfg.epochs, n);
  const auto side = run_cfg.generator.input_side;

  while (trainer.step() < stop_at) {
    const std::int64_t s = trainer.step();
    const int epoch = static_cast<int>(s / batches_per_epoch);
    const std::int64_t b = s % batches_per_epoch;
    const auto order = epoch_order(run_cfg.seed, epoch, n);
    std::vector<nn::Tensor> xs, ys;
    for (std::size_t i = static_cast<std::size_t>(b) * batch;
         i < std::min(n, static_cast<std::size_t>(b + 1) * batch); ++i) {
      auto [x, y] = load_pair(rows[order[i]]);
      if (x.shape().h != side || x.shape().w != side) {
        throw DataError("sample " + rows[order[i]].x_path + " is not " + std::to_string(side) +
                        "x" + std::to_string(side));
      }
      xs.push_back(std::move(x));
      ys.push_back(std::move(y));
    }
    trainer.set_epoch(epoch);
    StepMetrics m;
    try {
      m = trainer.train_step(stack(xs), stack(ys));
    } catch (const NumericError& e) {
      if (!options.output_dir.empty()) {
        std::ofstream dump(options.output_dir / ("nonfinite_step_" + std::to_string(s + 1) + ".json"));
        dump << json{{"error", e.what()},
                     {"step", s + 1},
                     {"epoch", epoch},
                     {"samples", [&] {
                        json a = json::array();
                        for (std::size_t i = static_cast<std::size_t>(b) * batch;
                             i < std::min(n, static_cast<std::size_t>(b + 1) * batch); ++i) {
                          a.push_back(rows[order[i]].x_path);
                        }
                        return a;
                      }()},
                     {"config", to_json(run_cfg)}}
                    .dump(2);
      }
      throw;
    }
    result.steps.push_back(m);
    emit(to_json(m));
    if (options.on_step) options.on_step(m);

    if (!options.output_dir.empty() && run_cfg.checkpoint_interval > 0 &&
        m.step % run_cfg.checkpoint_interval == 0) {
      save_checkpoint(trainer.checkpoint(),
                      options.output_dir / ("checkpoint_" + std::to_string(m.step) + ".ckpt"));
    }
    if (b + 1 == batches_per_epoch) {
      EpochMetrics em;
      em.epoch = epoch;
      double d_sum = 0.0;
      bool have_d = false;
      for (const auto& sm : result.steps) {
        if (sm.epoch != epoch) continue;
        ++em.steps;
        em.mean_l1 += sm.l1;
        em.mean_perceptual += sm.perceptual;
        em.mean_total_g += sm.total_g;
        if (sm.d_loss) {
          d_sum += *sm.d_loss;
          have_d = true;
        }
      }
      // Epoch means are reported over the steps seen by this process.
      if (em.steps > 0) {
        const auto k = static_cast<double>(em.steps);
        em.mean_l1 /= k;
        em.mean_perceptual /= k;
        em.mean_total_g /= k;
        if (have_d) em.mean_d_loss = d_sum / k;
      }
      result.epochs.push_back(em);
      emit(to_json(em));
      if (options.on_epoch) options.on_epoch(em);
    }
  }

  result.completed = trainer.step() >= total_steps;
  result.final_checkpoint = trainer.checkpoint();
  if (!options.output_dir.empty()) {
    save_checkpoint(result.final_checkpoint,
                    options.output_dir / (result.completed ? "final.ckpt" : "latest.ckpt"));
  }
  return result;
}

Image remove_watermark(const GeneratorParams& generator, const Image& x) {
  const int side = generator.config.input_side;
  if (x.height() != side || x.width() != side) {
    throw ShapeError("remove_watermark expects " + std::to_string(side) + "x" +
                     std::to_string(side) + " input, got " + std::to_string(x.height()) + "x" +
                     std::to_string(x.width()));
  }
  const nn::Tensor out = generator_forward(generator, nn::to_network(to_rgb(x)));
  return nn::from_network(out);
}

Image remove_watermark(const Checkpoint& ckpt, const Image& x) {
  return remove_watermark(ckpt.generator, x);
}

Image remove_watermark_resized(const GeneratorParams& generator, const Image& x) {
  const int side = generator.config.input_side;
  if (x.height() == side && x.width() == side) return remove_watermark(generator, x);
  const Image out = remove_watermark(generator, resize(to_rgb(x), side, side));
  return resize(out, x.height(), x.width());
}

}  // namespace wmr
