#include "wmr/ops.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "wmr/errors.hpp"

namespace wmr::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

// cols row index = (c * K + ky) * K + kx, column index = oy * Wo + ox.
void im2col(const double* x, int channels, int h, int w, const ConvGeometry& g, int ho, int wo,
            double* cols) {
  const int k = g.kernel;
  for (int c = 0; c < channels; ++c) {
    const double* xc = x + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = cols + (static_cast<std::size_t>(c * k + ky) * k + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          double* dst = row + static_cast<std::size_t>(oy) * wo;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, 0.0);
            continue;
          }
          const double* src = xc + static_cast<std::size_t>(iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* cols, int channels, int h, int w, const ConvGeometry& g, int ho, int wo,
            double* x) {
  const int k = g.kernel;
  for (int c = 0; c < channels; ++c) {
    double* xc = x + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row = cols + (static_cast<std::size_t>(c * k + ky) * k + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= h) continue;
          const double* src = row + static_cast<std::size_t>(oy) * wo;
          double* dst = xc + static_cast<std::size_t>(iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void require(bool ok, const char* what, const Shape& a, const Shape& b) {
  if (!ok) throw ShapeError(std::string(what) + ": " + to_string(a) + " vs " + to_string(b));
}

}  // namespace

int conv_out_size(int in, const ConvGeometry& g) {
  return (in + 2 * g.pad - g.kernel) / g.stride + 1;
}

int conv_transpose_out_size(int in, const ConvGeometry& g) {
  return (in - 1) * g.stride - 2 * g.pad + g.kernel;
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, const ConvGeometry& g) {
  const Shape xs = x.shape(), ws = weight.shape();
  require(ws.c == xs.c && ws.h == g.kernel && ws.w == g.kernel, "conv2d weight", ws, xs);
  const int ho = conv_out_size(xs.h, g), wo = conv_out_size(xs.w, g);
  if (ho < 1 || wo < 1 || xs.h + 2 * g.pad < g.kernel || xs.w + 2 * g.pad < g.kernel) {
    throw ShapeError("conv2d input too small: " + to_string(xs));
  }
  const int rows = xs.c * g.kernel * g.kernel;
  const int cols_n = ho * wo;
  Tensor y(Shape{xs.n, ws.n, ho, wo});
  Buffer cols(static_cast<std::size_t>(rows) * cols_n);
  ConstMapMat wm(weight.data().data(), ws.n, rows);
  for (int n = 0; n < xs.n; ++n) {
    im2col(x.plane(n, 0), xs.c, xs.h, xs.w, g, ho, wo, cols.data());
    MapMat ym(y.plane(n, 0), ws.n, cols_n);
    ym.noalias() = wm * ConstMapMat(cols.data(), rows, cols_n);
    for (int c = 0; c < ws.n; ++c) ym.row(c).array() += bias.data()[static_cast<std::size_t>(c)];
  }
  return y;
}

void conv2d_backward(const Tensor& x, const Tensor& weight, const ConvGeometry& g, const Tensor& dy,
                     Tensor* dx, Tensor* dweight, Tensor* dbias) {
  const Shape xs = x.shape(), ws = weight.shape(), ys = dy.shape();
  const int rows = xs.c * g.kernel * g.kernel;
  const int cols_n = ys.h * ys.w;
  Buffer cols(static_cast<std::size_t>(rows) * cols_n);
  ConstMapMat wm(weight.data().data(), ws.n, rows);
  if (dx) *dx = Tensor(xs);
  for (int n = 0; n < xs.n; ++n) {
    ConstMapMat dym(dy.plane(n, 0), ys.c, cols_n);
    if (dweight) {
      im2col(x.plane(n, 0), xs.c, xs.h, xs.w, g, ys.h, ys.w, cols.data());
      MapMat dwm(dweight->data().data(), ws.n, rows);
      dwm.noalias() += dym * ConstMapMat(cols.data(), rows, cols_n).transpose();
    }
    if (dbias) {
      for (int c = 0; c < ys.c; ++c) dbias->data()[static_cast<std::size_t>(c)] += dym.row(c).sum();
    }
    if (dx) {
      MapMat colm(cols.data(), rows, cols_n);
      colm.noalias() = wm.transpose() * dym;
      col2im(cols.data(), xs.c, xs.h, xs.w, g, ys.h, ys.w, dx->plane(n, 0));
    }
  }
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
                        const ConvGeometry& g) {
  const Shape xs = x.shape(), ws = weight.shape();
  require(ws.n == xs.c && ws.h == g.kernel && ws.w == g.kernel, "conv_transpose2d weight", ws, xs);
  const int cout = ws.c;
  const int ho = conv_transpose_out_size(xs.h, g), wo = conv_transpose_out_size(xs.w, g);
  const int rows = cout * g.kernel * g.kernel;
  const int cols_n = xs.h * xs.w;
  Tensor y(Shape{xs.n, cout, ho, wo});
  Buffer cols(static_cast<std::size_t>(rows) * cols_n);
  ConstMapMat wm(weight.data().data(), xs.c, rows);
  for (int n = 0; n < xs.n; ++n) {
    MapMat colm(cols.data(), rows, cols_n);
    colm.noalias() = wm.transpose() * ConstMapMat(x.plane(n, 0), xs.c, cols_n);
    col2im(cols.data(), cout, ho, wo, g, xs.h, xs.w, y.plane(n, 0));
    for (int c = 0; c < cout; ++c) {
      double* p = y.plane(n, c);
      const double b = bias.data()[static_cast<std::size_t>(c)];
      for (std::size_t i = 0; i < y.shape().plane(); ++i) p[i] += b;
    }
  }
  return y;
}

void conv_transpose2d_backward(const Tensor& x, const Tensor& weight, const ConvGeometry& g,
                               const Tensor& dy, Tensor* dx, Tensor* dweight, Tensor* dbias) {
  const Shape xs = x.shape(), ws = weight.shape(), ys = dy.shape();
  const int cout = ws.c;
  const int rows = cout * g.kernel * g.kernel;
  const int cols_n = xs.h * xs.w;
  Buffer cols(static_cast<std::size_t>(rows) * cols_n);
  ConstMapMat wm(weight.data().data(), xs.c, rows);
  if (dx) *dx = Tensor(xs);
  for (int n = 0; n < xs.n; ++n) {
    im2col(dy.plane(n, 0), cout, ys.h, ys.w, g, xs.h, xs.w, cols.data());
    ConstMapMat colm(cols.data(), rows, cols_n);
    if (dx) {
      MapMat dxm(dx->plane(n, 0), xs.c, cols_n);
      dxm.noalias() = wm * colm;
    }
    if (dweight) {
      MapMat dwm(dweight->data().data(), xs.c, rows);
      dwm.noalias() += ConstMapMat(x.plane(n, 0), xs.c, cols_n) * colm.transpose();
    }
    if (dbias) {
      for (int c = 0; c < cout; ++c) {
        const double* p = dy.plane(n, c);
        double s = 0.0;
        for (std::size_t i = 0; i < ys.plane(); ++i) s += p[i];
        dbias->data()[static_cast<std::size_t>(c)] += s;
      }
    }
  }
}

Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, NormCache* cache) {
  const Shape s = x.shape();
  const std::size_t m = s.plane();
  Tensor y(s);
  Tensor xhat(s);
  std::vector<double> inv(static_cast<std::size_t>(s.n) * s.c);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* src = x.plane(n, c);
      double mean = 0.0;
      for (std::size_t i = 0; i < m; ++i) mean += src[i];
      mean /= static_cast<double>(m);
      double var = 0.0;
      for (std::size_t i = 0; i < m; ++i) var += (src[i] - mean) * (src[i] - mean);
      var /= static_cast<double>(m);
      const double is = 1.0 / std::sqrt(var + kNormEpsilon);
      inv[static_cast<std::size_t>(n) * s.c + c] = is;
      const double ga = gamma.data()[static_cast<std::size_t>(c)];
      const double be = beta.data()[static_cast<std::size_t>(c)];
      double* xh = xhat.plane(n, c);
      double* dst = y.plane(n, c);
      for (std::size_t i = 0; i < m; ++i) {
        xh[i] = (src[i] - mean) * is;
        dst[i] = ga * xh[i] + be;
      }
    }
  }
  if (cache) {
    cache->normalized = std::move(xhat);
    cache->inv_std = std::move(inv);
  }
  return y;
}

void instance_norm_backward(const NormCache& cache, const Tensor& gamma, const Tensor& dy,
                            Tensor* dx, Tensor* dgamma, Tensor* dbeta) {
  const Shape s = dy.shape();
  const std::size_t m = s.plane();
  if (dx) *dx = Tensor(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* g = dy.plane(n, c);
      const double* xh = cache.normalized.plane(n, c);
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        sum_g += g[i];
        sum_gx += g[i] * xh[i];
      }
      if (dgamma) dgamma->data()[static_cast<std::size_t>(c)] += sum_gx;
      if (dbeta) dbeta->data()[static_cast<std::size_t>(c)] += sum_g;
      if (dx) {
        const double ga = gamma.data()[static_cast<std::size_t>(c)];
        const double is = cache.inv_std[static_cast<std::size_t>(n) * s.c + c];
        const double md = static_cast<double>(m);
        double* out = dx->plane(n, c);
        for (std::size_t i = 0; i < m; ++i) {
          out[i] = ga * is / md * (md * g[i] - sum_g - xh[i] * sum_gx);
        }
      }
    }
  }
}

Tensor leaky_relu(const Tensor& x, double slope) {
  Tensor y(x.shape());
  auto src = x.data();
  auto dst = y.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? src[i] : slope * src[i];
  return y;
}

Tensor leaky_relu_backward(const Tensor& x, const Tensor& dy, double slope) {
  Tensor dx(x.shape());
  auto src = x.data();
  auto g = dy.data();
  auto dst = dx.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? g[i] : slope * g[i];
  return dx;
}

Tensor tanh(const Tensor& x) {
  Tensor y(x.shape());
  auto src = x.data();
  auto dst = y.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::tanh(src[i]);
  return y;
}

Tensor tanh_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx(y.shape());
  auto out = y.data();
  auto g = dy.data();
  auto dst = dx.data();
  for (std::size_t i = 0; i < out.size(); ++i) dst[i] = g[i] * (1.0 - out[i] * out[i]);
  return dx;
}

Tensor sigmoid(const Tensor& x) {
  Tensor y(x.shape());
  auto src = x.data();
  auto dst = y.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v = src[i];
    if (v >= 0.0) {
      dst[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      dst[i] = e / (1.0 + e);
    }
  }
  return y;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const Shape sa = a.shape(), sb = b.shape();
  require(sa.n == sb.n && sa.h == sb.h && sa.w == sb.w, "concat_channels", sa, sb);
  Tensor y(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
  const std::size_t pa = static_cast<std::size_t>(sa.c) * sa.plane();
  const std::size_t pb = static_cast<std::size_t>(sb.c) * sb.plane();
  for (int n = 0; n < sa.n; ++n) {
    std::copy_n(a.plane(n, 0), pa, y.plane(n, 0));
    std::copy_n(b.plane(n, 0), pb, y.plane(n, sa.c));
  }
  return y;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& x, int first) {
  const Shape s = x.shape();
  if (first < 0 || first > s.c) throw ShapeError("split_channels: bad split point");
  Tensor a(Shape{s.n, first, s.h, s.w});
  Tensor b(Shape{s.n, s.c - first, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    std::copy_n(x.plane(n, 0), static_cast<std::size_t>(first) * s.plane(), a.plane(n, 0));
    std::copy_n(x.plane(n, first), static_cast<std::size_t>(s.c - first) * s.plane(),
                b.plane(n, 0));
  }
  return {std::move(a), std::move(b)};
}

Tensor max_pool2(const Tensor& x, std::vector<std::size_t>* argmax) {
  const Shape s = x.shape();
  const int ho = s.h / 2, wo = s.w / 2;
  if (ho < 1 || wo < 1) throw ShapeError("max_pool2 input too small: " + to_string(s));
  Tensor y(Shape{s.n, s.c, ho, wo});
  if (argmax) argmax->assign(y.numel(), 0);
  std::size_t out_i = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * s.plane();
      const double* src = x.data().data() + base;
      double* dst = y.plane(n, c);
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox, ++out_i) {
          std::size_t best = static_cast<std::size_t>(2 * oy) * s.w + 2 * ox;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t idx = static_cast<std::size_t>(2 * oy + dy) * s.w + 2 * ox + dx;
              if (src[idx] > src[best]) best = idx;
            }
          }
          dst[static_cast<std::size_t>(oy) * wo + ox] = src[best];
          if (argmax) (*argmax)[out_i] = base + best;
        }
      }
    }
  }
  return y;
}

Tensor max_pool2_backward(const Shape& input, const std::vector<std::size_t>& argmax,
                          const Tensor& dy) {
  Tensor dx(input);
  auto g = dy.data();
  auto dst = dx.data();
  for (std::size_t i = 0; i < g.size(); ++i) dst[argmax[i]] += g[i];
  return dx;
}

Tensor global_avg_pool(const Tensor& x) {
  const Shape s = x.shape();
  Tensor y(Shape{s.n, s.c, 1, 1});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* src = x.plane(n, c);
      double sum = 0.0;
      for (std::size_t i = 0; i < s.plane(); ++i) sum += src[i];
      y(n, c, 0, 0) = sum / static_cast<double>(s.plane());
    }
  }
  return y;
}

Tensor global_avg_pool_backward(const Shape& input, const Tensor& dy) {
  Tensor dx(input);
  const double scale = 1.0 / static_cast<double>(input.plane());
  for (int n = 0; n < input.n; ++n) {
    for (int c = 0; c < input.c; ++c) {
      double* dst = dx.plane(n, c);
      const double g = dy(n, c, 0, 0) * scale;
      for (std::size_t i = 0; i < input.plane(); ++i) dst[i] = g;
    }
  }
  return dx;
}

}  // namespace wmr::nn
