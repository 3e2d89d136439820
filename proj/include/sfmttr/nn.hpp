#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "sfmttr/error.hpp"
#include "sfmttr/tensor.hpp"

namespace sfmttr::nn {

/// 3x3 convolution, zero padding 1, configurable stride.
/// weight layout: [out_ch][in_ch][3][3], bias: [out_ch].
inline Tensor3 conv3x3_forward(const Tensor3& in, std::span<const double> weight,
                               std::span<const double> bias, int out_ch, int stride) {
  const int in_ch = in.channels;
  const int out_h = (in.height + 2 - 3) / stride + 1;
  const int out_w = (in.width + 2 - 3) / stride + 1;
  Tensor3 out(out_ch, out_h, out_w);
  for (int oc = 0; oc < out_ch; ++oc) {
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        double acc = bias[oc];
        for (int ic = 0; ic < in_ch; ++ic) {
          const std::size_t wbase = ((static_cast<std::size_t>(oc) * in_ch) + ic) * 9;
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = oy * stride + ky - 1;
            if (iy < 0 || iy >= in.height) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = ox * stride + kx - 1;
              if (ix < 0 || ix >= in.width) continue;
              acc += weight[wbase + ky * 3 + kx] * in.at(ic, iy, ix);
            }
          }
        }
        out.at(oc, oy, ox) = acc;
      }
    }
  }
  return out;
}

/// Backward pass of conv3x3_forward. Accumulates into grad_weight/grad_bias
/// (which must be pre-sized and may carry gradients from other layers) and
/// returns the gradient with respect to the input.
inline Tensor3 conv3x3_backward(const Tensor3& in, std::span<const double> weight,
                                const Tensor3& grad_out, int stride,
                                std::span<double> grad_weight, std::span<double> grad_bias) {
  const int in_ch = in.channels;
  const int out_ch = grad_out.channels;
  Tensor3 grad_in(in.channels, in.height, in.width);
  for (int oc = 0; oc < out_ch; ++oc) {
    for (int oy = 0; oy < grad_out.height; ++oy) {
      for (int ox = 0; ox < grad_out.width; ++ox) {
        const double g = grad_out.at(oc, oy, ox);
        if (g == 0.0) continue;
        grad_bias[oc] += g;
        for (int ic = 0; ic < in_ch; ++ic) {
          const std::size_t wbase = ((static_cast<std::size_t>(oc) * in_ch) + ic) * 9;
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = oy * stride + ky - 1;
            if (iy < 0 || iy >= in.height) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = ox * stride + kx - 1;
              if (ix < 0 || ix >= in.width) continue;
              grad_weight[wbase + ky * 3 + kx] += g * in.at(ic, iy, ix);
              grad_in.at(ic, iy, ix) += g * weight[wbase + ky * 3 + kx];
            }
          }
        }
      }
    }
  }
  return grad_in;
}

inline Tensor3 relu_forward(const Tensor3& in) {
  Tensor3 out = in;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

inline Tensor3 relu_backward(const Tensor3& pre_activation, const Tensor3& grad_out) {
  Tensor3 grad_in = grad_out;
  for (std::size_t i = 0; i < grad_in.data.size(); ++i) {
    if (pre_activation.data[i] <= 0.0) grad_in.data[i] = 0.0;
  }
  return grad_in;
}

inline Tensor3 upsample2_nearest_forward(const Tensor3& in) {
  Tensor3 out(in.channels, in.height * 2, in.width * 2);
  for (int c = 0; c < in.channels; ++c) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        out.at(c, y, x) = in.at(c, y / 2, x / 2);
      }
    }
  }
  return out;
}

inline Tensor3 upsample2_nearest_backward(const Tensor3& grad_out) {
  Tensor3 grad_in(grad_out.channels, grad_out.height / 2, grad_out.width / 2);
  for (int c = 0; c < grad_out.channels; ++c) {
    for (int y = 0; y < grad_out.height; ++y) {
      for (int x = 0; x < grad_out.width; ++x) {
        grad_in.at(c, y / 2, x / 2) += grad_out.at(c, y, x);
      }
    }
  }
  return grad_in;
}

inline Tensor3 sigmoid_forward(const Tensor3& in) {
  Tensor3 out = in;
  for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  return out;
}

inline Tensor3 sigmoid_backward(const Tensor3& sigmoid_out, const Tensor3& grad_out) {
  Tensor3 grad_in = grad_out;
  for (std::size_t i = 0; i < grad_in.data.size(); ++i) {
    const double s = sigmoid_out.data[i];
    grad_in.data[i] *= s * (1.0 - s);
  }
  return grad_in;
}

}  // namespace sfmttr::nn
