#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "osteotex/cnn/tensor.hpp"

namespace osteotex::cnn {

/// floor((in + 2 pad - k) / stride) + 1, or 0 when the kernel does not fit.
inline int output_extent(int in, int kernel, int stride, int pad) {
  const int padded = in + 2 * pad;
  if (kernel < 1 || stride < 1 || padded < kernel) return 0;
  return (padded - kernel) / stride + 1;
}

/// Cross-correlation plus bias via patch unrolling and one matrix product.
/// Unrolled row order is (channel, ky, kx), matching the filter layout.
template <typename Scalar>
Tensor3<Scalar> conv_forward(const Tensor3<Scalar>& x, const FilterBank<Scalar>& bank, int stride,
                             int pad) {
  if (bank.in_channels != x.channels()) {
    throw std::invalid_argument("conv_forward: filter expects " + std::to_string(bank.in_channels) +
                                " channels, input has " + std::to_string(x.channels()));
  }
  const int oh = output_extent(x.height(), bank.kernel_h, stride, pad);
  const int ow = output_extent(x.width(), bank.kernel_w, stride, pad);
  if (oh < 1 || ow < 1) throw std::invalid_argument("conv_forward: kernel exceeds padded input");

  const Eigen::Index patch = Eigen::Index(bank.in_channels) * bank.kernel_h * bank.kernel_w;
  const Eigen::Index positions = Eigen::Index(oh) * ow;
  RowMatrix<Scalar> cols = RowMatrix<Scalar>::Zero(patch, positions);
  for (int c = 0; c < bank.in_channels; ++c) {
    for (int ky = 0; ky < bank.kernel_h; ++ky) {
      for (int kx = 0; kx < bank.kernel_w; ++kx) {
        const Eigen::Index row = (Eigen::Index(c) * bank.kernel_h + ky) * bank.kernel_w + kx;
        Scalar* dst = cols.row(row).data();
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= x.height()) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < x.width()) dst[Eigen::Index(oy) * ow + ox] = x(iy, ix, c);
          }
        }
      }
    }
  }
  RowMatrix<Scalar> out = bank.weights * cols;
  out.colwise() += bank.biases;
  return Tensor3<Scalar>(oh, ow, std::move(out));
}

template <typename Scalar>
Tensor3<Scalar> relu(Tensor3<Scalar> x) {
  x.data() = x.data().cwiseMax(Scalar(0));
  return x;
}

/// Per-channel windowed maximum; padded positions are never selected.
template <typename Scalar>
Tensor3<Scalar> maxpool(const Tensor3<Scalar>& x, int window, int stride, int pad) {
  if (window < 1 || stride < 1 || pad < 0 || pad >= window) {
    throw std::invalid_argument("maxpool: degenerate window/stride/pad");
  }
  const int oh = output_extent(x.height(), window, stride, pad);
  const int ow = output_extent(x.width(), window, stride, pad);
  if (oh < 1 || ow < 1) throw std::invalid_argument("maxpool: window exceeds padded input");
  Tensor3<Scalar> out(oh, ow, x.channels());
  for (int c = 0; c < x.channels(); ++c) {
    for (int oy = 0; oy < oh; ++oy) {
      const int y0 = std::max(0, oy * stride - pad);
      const int y1 = std::min(x.height(), oy * stride - pad + window);
      for (int ox = 0; ox < ow; ++ox) {
        const int x0 = std::max(0, ox * stride - pad);
        const int x1 = std::min(x.width(), ox * stride - pad + window);
        Scalar best = -std::numeric_limits<Scalar>::infinity();
        for (int iy = y0; iy < y1; ++iy) {
          for (int ix = x0; ix < x1; ++ix) best = std::max(best, x(iy, ix, c));
        }
        out(oy, ox, c) = best;
      }
    }
  }
  return out;
}

/// Cross-channel local response normalization:
/// v / (k + alpha * sum of v^2 over the size-wide channel neighbourhood)^beta.
template <typename Scalar>
Tensor3<Scalar> lrn(const Tensor3<Scalar>& x, int size, double alpha, double beta, double k) {
  if (size < 1 || size % 2 == 0) throw std::invalid_argument("lrn: size must be odd");
  const int half = size / 2;
  const RowMatrix<Scalar> sq = x.data().cwiseAbs2();
  Tensor3<Scalar> out = x;
  for (int c = 0; c < x.channels(); ++c) {
    const int lo = std::max(0, c - half);
    const int hi = std::min(x.channels() - 1, c + half);
    Eigen::Array<Scalar, 1, Eigen::Dynamic> acc = sq.row(lo).array();
    for (int n = lo + 1; n <= hi; ++n) acc += sq.row(n).array();
    const auto denom = (Scalar(k) + Scalar(alpha) * acc).pow(Scalar(beta));
    out.data().row(c) = (x.data().row(c).array() / denom).matrix();
  }
  return out;
}

/// weights * x + biases; x is the flattened (C, H, W) input.
template <typename Scalar, typename Derived>
Vector<Scalar> fc_forward(const Eigen::MatrixBase<Derived>& x, const DenseLayer<Scalar>& layer) {
  if (layer.weights.cols() != x.size()) {
    throw std::invalid_argument("fc_forward: input length " + std::to_string(x.size()) +
                                " does not match weight columns " +
                                std::to_string(layer.weights.cols()));
  }
  if (layer.biases.size() != layer.weights.rows()) {
    throw std::invalid_argument("fc_forward: bias length does not match weight rows");
  }
  Vector<Scalar> out = layer.weights * x;
  out += layer.biases;
  return out;
}

template <typename Scalar>
Vector<Scalar> fc_forward(const Tensor3<Scalar>& x, const DenseLayer<Scalar>& layer) {
  return fc_forward(x.flat(), layer);
}

/// Max-shifted exponential normalization.
template <typename Derived>
auto softmax(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> e = (v.array() - v.maxCoeff()).exp().matrix();
  return Vector<Scalar>(e / e.sum());
}

}  // namespace osteotex::cnn
