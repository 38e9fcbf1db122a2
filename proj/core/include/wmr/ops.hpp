#pragma once

#include <utility>
#include <vector>

#include "wmr/tensor.hpp"

// Differentiable building blocks. Each forward op is a pure function; its
// backward counterpart takes the forward inputs (or outputs, where cheaper)
// and the upstream gradient. Parameter gradients are accumulated (+=) so a
// ParamSet of gradients can collect contributions from several passes.
namespace wmr::nn {

struct ConvGeometry {
  int kernel = 4;
  int stride = 2;
  int pad = 1;
};

[[nodiscard]] int conv_out_size(int in, const ConvGeometry& g);
[[nodiscard]] int conv_transpose_out_size(int in, const ConvGeometry& g);

/// weight: [Cout, Cin, K, K]; bias: [1, Cout, 1, 1].
[[nodiscard]] Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
                            const ConvGeometry& g);
/// Any of dx / dweight / dbias may be null.
void conv2d_backward(const Tensor& x, const Tensor& weight, const ConvGeometry& g,
                     const Tensor& dy, Tensor* dx, Tensor* dweight, Tensor* dbias);

/// weight: [Cin, Cout, K, K]; bias: [1, Cout, 1, 1].
[[nodiscard]] Tensor conv_transpose2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
                                      const ConvGeometry& g);
void conv_transpose2d_backward(const Tensor& x, const Tensor& weight, const ConvGeometry& g,
                               const Tensor& dy, Tensor* dx, Tensor* dweight, Tensor* dbias);

/// Per-(sample, channel) normalization over the spatial extent, followed by
/// a per-channel affine map. gamma / beta: [1, C, 1, 1].
struct NormCache {
  Tensor normalized;
  std::vector<double> inv_std;
};
inline constexpr double kNormEpsilon = 1e-5;
[[nodiscard]] Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                                   NormCache* cache);
void instance_norm_backward(const NormCache& cache, const Tensor& gamma, const Tensor& dy,
                            Tensor* dx, Tensor* dgamma, Tensor* dbeta);

/// slope 0 gives the plain rectifier.
[[nodiscard]] Tensor leaky_relu(const Tensor& x, double slope);
[[nodiscard]] Tensor leaky_relu_backward(const Tensor& x, const Tensor& dy, double slope);

[[nodiscard]] Tensor tanh(const Tensor& x);
[[nodiscard]] Tensor tanh_backward(const Tensor& y, const Tensor& dy);

[[nodiscard]] Tensor sigmoid(const Tensor& x);

[[nodiscard]] Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Splits along channels at `first` -> (channels [0, first), channels [first, C)).
[[nodiscard]] std::pair<Tensor, Tensor> split_channels(const Tensor& x, int first);

/// 2x2 max pooling, stride 2. argmax holds flat input offsets per output.
[[nodiscard]] Tensor max_pool2(const Tensor& x, std::vector<std::size_t>* argmax);
[[nodiscard]] Tensor max_pool2_backward(const Shape& input, const std::vector<std::size_t>& argmax,
                                        const Tensor& dy);

/// Mean over the spatial extent -> [N, C, 1, 1].
[[nodiscard]] Tensor global_avg_pool(const Tensor& x);
[[nodiscard]] Tensor global_avg_pool_backward(const Shape& input, const Tensor& dy);

}  // namespace wmr::nn
