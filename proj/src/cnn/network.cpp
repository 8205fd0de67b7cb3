#include "osteotex/cnn/network.hpp"

#include <cstdio>

namespace osteotex::cnn {

namespace {

Eigen::Map<const RowMatrix<float>> as_matrix(const WeightArray& a, Eigen::Index rows) {
  return {a.values.data(), rows, static_cast<Eigen::Index>(a.values.size()) / rows};
}

Vector<float> bias_or_zero(const WeightStore& store, const std::string& layer, int n) {
  if (const WeightArray* b = store.find(WeightStore::bias_key(layer))) {
    return Eigen::Map<const Vector<float>>(b->values.data(), n);
  }
  return Vector<float>::Zero(n);
}

}  // namespace

Network::Network(NetworkSpec spec, const WeightStore& weights) : spec_(std::move(spec)) {
  if (spec_.shapes.size() != spec_.layers.size()) propagate_shapes(spec_);
  validate_weights(spec_, weights);
  convs_.resize(spec_.layers.size());
  dense_.resize(spec_.layers.size());
  const int first_conv = spec_.first_conv();
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    if (!l.has_weights()) continue;
    const auto dims = expected_weight_dims(spec_, i);
    const WeightArray& w = *weights.find(WeightStore::weight_key(l.name));
    if (l.kind == LayerKind::Conv) {
      FilterBank<float> bank{l.out_channels, static_cast<int>(dims[1]), l.kernel_h, l.kernel_w,
                             as_matrix(w, l.out_channels), bias_or_zero(weights, l.name, l.out_channels)};
      if (static_cast<int>(i) == first_conv && spec_.channel_mode == ChannelMode::FirstSliceOnly) {
        bank = bank.slice_input_channels(0, 1);
      }
      convs_[i] = std::move(bank);
    } else if (l.kind == LayerKind::Fc) {
      dense_[i] = {as_matrix(w, l.out_dim), bias_or_zero(weights, l.name, l.out_dim)};
    }
  }
}

Tensor3<float> Network::prepare_input(const GrayImage& img) const {
  const GrayImage resized = resize_bicubic(img, spec_.input.width, spec_.input.height);
  const bool first_slice = spec_.channel_mode == ChannelMode::FirstSliceOnly;
  const int channels = first_slice ? 1 : spec_.input.channels;
  Tensor3<float> x(spec_.input.height, spec_.input.width, channels);
  const Eigen::Map<const Eigen::Matrix<std::uint8_t, 1, Eigen::Dynamic>> px(resized.pixels().data(),
                                                                            resized.pixels().size());
  for (int c = 0; c < channels; ++c) {
    x.data().row(c) = px.cast<float>().array() - static_cast<float>(spec_.mean[static_cast<std::size_t>(c)]);
  }
  return x;
}

Tensor3<float> Network::forward(Tensor3<float> x, int last_layer) const {
  if (last_layer < 0 || last_layer >= static_cast<int>(spec_.layers.size())) {
    throw std::out_of_range("Network::forward: layer index out of range");
  }
  for (int i = 0; i <= last_layer; ++i) {
    const LayerSpec& l = spec_.layers[static_cast<std::size_t>(i)];
    switch (l.kind) {
      case LayerKind::Conv:
        x = conv_forward(x, convs_[static_cast<std::size_t>(i)], l.stride, l.pad);
        break;
      case LayerKind::Relu:
        x = relu(std::move(x));
        break;
      case LayerKind::MaxPool:
        x = maxpool(x, l.window, l.stride, l.pad);
        break;
      case LayerKind::Lrn:
        x = lrn(x, l.size, l.alpha, l.beta, l.k);
        break;
      case LayerKind::Fc: {
        Vector<float> v = fc_forward(x, dense_[static_cast<std::size_t>(i)]);
        x = Tensor3<float>(1, 1, RowMatrix<float>(Eigen::Map<RowMatrix<float>>(v.data(), v.size(), 1)));
        break;
      }
      case LayerKind::Softmax: {
        Vector<float> v = softmax(x.flat());
        x = Tensor3<float>(1, 1, RowMatrix<float>(Eigen::Map<RowMatrix<float>>(v.data(), v.size(), 1)));
        break;
      }
      case LayerKind::Dropout:
        break;
    }
  }
  return x;
}

Vector<float> Network::features(const GrayImage& img) const {
  const Tensor3<float> out = forward(prepare_input(img), spec_.effective_tap());
  return out.flat();
}

std::vector<std::string> deep_feature_names(std::size_t count) {
  std::vector<std::string> names;
  names.reserve(count);
  const int width = std::max<int>(4, static_cast<int>(std::to_string(count > 0 ? count - 1 : 0).size()));
  for (std::size_t i = 0; i < count; ++i) {
    std::string digits = std::to_string(i);
    digits.insert(0, static_cast<std::size_t>(std::max(0, width - static_cast<int>(digits.size()))), '0');
    names.push_back("deep_" + digits);
  }
  return names;
}

FeatureVector extract_deep_features(const GrayImage& img, const Network& net) {
  FeatureVector fv;
  fv.values = net.features(img).cast<double>();
  fv.names = deep_feature_names(static_cast<std::size_t>(fv.values.size()));
  return fv;
}

FeatureVector extract_deep_features(const GrayImage& img, const NetworkSpec& spec,
                                    const WeightStore& weights) {
  return extract_deep_features(img, Network(spec, weights));
}

}  // namespace osteotex::cnn
