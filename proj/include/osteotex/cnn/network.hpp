#pragma once

#include <vector>

#include "osteotex/cnn/layers.hpp"
#include "osteotex/cnn/network_spec.hpp"
#include "osteotex/cnn/tensor.hpp"
#include "osteotex/cnn/weights.hpp"
#include "osteotex/feature_table.hpp"
#include "osteotex/image.hpp"

namespace osteotex::cnn {

/// A network spec bound to validated float32 weights. Immutable after
/// construction; forward passes may run concurrently.
class Network {
 public:
  Network(NetworkSpec spec, const WeightStore& weights);

  const NetworkSpec& spec() const { return spec_; }

  /// Bicubic resize to the input size, mean subtraction, channel handling.
  Tensor3<float> prepare_input(const GrayImage& img) const;

  /// Runs layers [0, last_layer] and returns the output of last_layer.
  Tensor3<float> forward(Tensor3<float> x, int last_layer) const;

  /// Post-activation output of the feature tap, flattened.
  Vector<float> features(const GrayImage& img) const;

 private:
  NetworkSpec spec_;
  std::vector<FilterBank<float>> convs_;  // indexed by layer; empty for other kinds
  std::vector<DenseLayer<float>> dense_;
};

/// Deep feature vector named deep_0000, deep_0001, ...; all entries >= 0.
FeatureVector extract_deep_features(const GrayImage& img, const Network& net);
FeatureVector extract_deep_features(const GrayImage& img, const NetworkSpec& spec,
                                    const WeightStore& weights);

std::vector<std::string> deep_feature_names(std::size_t count);

}  // namespace osteotex::cnn
