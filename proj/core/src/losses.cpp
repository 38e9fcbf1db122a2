#include "wmr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wmr/errors.hpp"

namespace wmr {

namespace {

void require_same(const nn::Tensor& a, const nn::Tensor& b, const char* what) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError(std::string(what) + ": " + nn::to_string(a.shape()) + " vs " +
                     nn::to_string(b.shape()));
  }
  if (a.numel() == 0) throw ShapeError(std::string(what) + ": empty input");
}

double clamp_prob(double p) {
  return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

double mean_log(const nn::Tensor& p, bool complement) {
  const auto d = p.data();
  if (d.empty()) throw ShapeError("adversarial loss on an empty map");
  double s = 0.0;
  for (double v : d) {
    const double c = clamp_prob(v);
    s += std::log(complement ? 1.0 - c : c);
  }
  return s / static_cast<double>(d.size());
}

nn::Tensor scaled(const nn::Tensor& p, double offset) {
  nn::Tensor g(p.shape());
  const double inv = 1.0 / static_cast<double>(p.numel());
  auto src = p.data();
  auto dst = g.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (src[i] + offset) * inv;
  return g;
}

}  // namespace

void LossWeights::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw ConfigError("loss weights must be finite and non-negative");
  }
}

double l1_loss(const nn::Tensor& output, const nn::Tensor& target) {
  require_same(output, target, "l1_loss");
  const auto a = output.data();
  const auto b = target.data();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

nn::Tensor l1_loss_grad(const nn::Tensor& output, const nn::Tensor& target) {
  require_same(output, target, "l1_loss_grad");
  nn::Tensor g(output.shape());
  const double inv = 1.0 / static_cast<double>(output.numel());
  const auto a = output.data();
  const auto b = target.data();
  auto dst = g.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    dst[i] = d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
  }
  return g;
}

double perceptual_loss(const FeatureExtractor& extractor, const nn::Tensor& output,
                       const nn::Tensor& target) {
  require_same(output, target, "perceptual_loss");
  const nn::Tensor fa = extractor.features(output);
  const nn::Tensor fb = extractor.features(target);
  const auto a = fa.data();
  const auto b = fb.data();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

LossAndGrad perceptual_loss_with_grad(const FeatureExtractor& extractor, const nn::Tensor& output,
                                      const nn::Tensor& target) {
  require_same(output, target, "perceptual_loss");
  ExtractorTape tape;
  const nn::Tensor fa = extractor.features(output, &tape);
  const nn::Tensor fb = extractor.features(target);
  nn::Tensor dfa(fa.shape());
  const auto a = fa.data();
  const auto b = fb.data();
  auto d = dfa.data();
  const double inv = 1.0 / static_cast<double>(a.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
    d[i] = 2.0 * diff * inv;
  }
  return {s * inv, extractor.backward(tape, dfa)};
}

double adversarial_d_loss(const nn::Tensor& d_real, const nn::Tensor& d_fake) {
  return -(mean_log(d_real, false) + mean_log(d_fake, true));
}

double adversarial_g_loss(const nn::Tensor& d_fake) { return -mean_log(d_fake, false); }

nn::Tensor adversarial_real_logit_grad(const nn::Tensor& d_real) { return scaled(d_real, -1.0); }
nn::Tensor adversarial_fake_logit_grad(const nn::Tensor& d_fake) { return scaled(d_fake, 0.0); }
nn::Tensor adversarial_g_logit_grad(const nn::Tensor& d_fake) { return scaled(d_fake, -1.0); }

double total_generator_loss(double adv, double l1, double per, const LossWeights& w) {
  if (!std::isfinite(adv) || !std::isfinite(l1) || !std::isfinite(per)) {
    throw NumericError("non-finite loss component: adv=" + std::to_string(adv) +
                       " l1=" + std::to_string(l1) + " per=" + std::to_string(per));
  }
  return adv + w.alpha * l1 + w.beta * per;
}

}  // namespace wmr
