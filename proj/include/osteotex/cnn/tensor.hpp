#pragma once

#include <stdexcept>

#include <Eigen/Core>

namespace osteotex::cnn {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Activation volume stored channel-planar: storage row c holds the
/// row-major h x w plane of channel c, so the flat layout is (C, H, W).
template <typename Scalar>
class Tensor3 {
 public:
  using Storage = RowMatrix<Scalar>;

  Tensor3() = default;
  Tensor3(int height, int width, int channels)
      : height_(height), width_(width), data_(Storage::Zero(channels, Eigen::Index(height) * width)) {
    if (height < 1 || width < 1 || channels < 1) {
      throw std::invalid_argument("Tensor3 dimensions must be positive");
    }
  }
  Tensor3(int height, int width, Storage data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (data_.cols() != Eigen::Index(height) * width) {
      throw std::invalid_argument("Tensor3 storage does not match spatial size");
    }
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return static_cast<int>(data_.rows()); }
  Eigen::Index size() const { return data_.size(); }

  Scalar operator()(int y, int x, int c) const { return data_(c, Eigen::Index(y) * width_ + x); }
  Scalar& operator()(int y, int x, int c) { return data_(c, Eigen::Index(y) * width_ + x); }

  const Storage& data() const { return data_; }
  Storage& data() { return data_; }

  /// Flattened (C, H, W) view.
  Eigen::Map<const Vector<Scalar>> flat() const { return {data_.data(), data_.size()}; }

  bool operator==(const Tensor3& o) const {
    return height_ == o.height_ && width_ == o.width_ && data_.rows() == o.data_.rows() &&
           data_ == o.data_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  Storage data_;
};

/// Convolution filters; weights row f holds filter f flattened as (in, kh, kw).
template <typename Scalar>
struct FilterBank {
  int out_channels = 0;
  int in_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  RowMatrix<Scalar> weights;
  Vector<Scalar> biases;

  Scalar weight(int f, int c, int ky, int kx) const {
    return weights(f, (Eigen::Index(c) * kernel_h + ky) * kernel_w + kx);
  }

  /// Keeps only input channels [first, first + count).
  FilterBank slice_input_channels(int first, int count) const {
    FilterBank out{out_channels, count, kernel_h, kernel_w, {}, biases};
    const Eigen::Index plane = Eigen::Index(kernel_h) * kernel_w;
    out.weights = weights.middleCols(first * plane, count * plane);
    return out;
  }
};

/// Fully connected weights (out x in) and biases.
template <typename Scalar>
struct DenseLayer {
  RowMatrix<Scalar> weights;
  Vector<Scalar> biases;
};

}  // namespace osteotex::cnn
