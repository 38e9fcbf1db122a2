#include "wmr/adam.hpp"

#include <cmath>

#include "wmr/errors.hpp"

namespace wmr {

Adam::Adam(const AdamConfig& cfg, const nn::ParamSet& like)
    : cfg_(cfg), m_(like.zeros_like()), v_(like.zeros_like()) {}

void Adam::step(nn::ParamSet& params, const nn::ParamSet& grads) {
  if (!params.same_layout(grads) || !params.same_layout(m_)) {
    throw ShapeError("Adam: parameter / gradient layout mismatch");
  }
  ++t_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    const auto g = grads[i].data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      p[j] -= cfg_.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg_.epsilon);
    }
  }
}

void Adam::restore(nn::ParamSet m, nn::ParamSet v, std::int64_t t) {
  if (!m.same_layout(m_) || !v.same_layout(v_)) throw ShapeError("Adam: restored state mismatch");
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

}  // namespace wmr
