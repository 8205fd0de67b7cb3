#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "osteotex/binary_io.hpp"
#include "osteotex/cnn/network_spec.hpp"

namespace osteotex::cnn {

/// Dense float32 array; values are row-major over dims.
struct WeightArray {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t numel() const;
  bool operator==(const WeightArray&) const = default;
};

/// Named arrays keyed "<layer>.weight" / "<layer>.bias". Conv weights are
/// (out, in, kh, kw); fc weights are (out, in) with in = flattened (C, H, W).
/// A missing bias entry means zero biases.
struct WeightStore {
  std::map<std::string, WeightArray> entries;

  const WeightArray* find(const std::string& name) const;
  static std::string weight_key(const std::string& layer) { return layer + ".weight"; }
  static std::string bias_key(const std::string& layer) { return layer + ".bias"; }
  bool operator==(const WeightStore&) const = default;
};

inline constexpr char kWeightMagic[4] = {'O', 'T', 'W', 'T'};
inline constexpr std::uint32_t kWeightFormatVersion = 1;

/// OTWT container: magic, u32 version, u32 entry count, entries
/// (u16 name length, name, u8 rank, u32 dims, f32 payload), then the CRC32 of
/// the entry records. All integers little-endian.
std::string encode_weights(const WeightStore& store);
WeightStore decode_weights(std::string_view bytes);
void save_weights(const std::filesystem::path& path, const WeightStore& store);
WeightStore load_weights(const std::filesystem::path& path);

/// Expected shape of the weight array for a conv/fc layer.
std::vector<std::uint32_t> expected_weight_dims(const NetworkSpec& spec, std::size_t layer);

/// Throws WeightError listing every missing or mis-shaped entry.
void validate_weights(const NetworkSpec& spec, const WeightStore& store);

class WeightError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// He-uniform random weights (optionally zero biases) for every weighted layer.
WeightStore make_random_weights(const NetworkSpec& spec, std::uint64_t seed, bool zero_bias = false);

}  // namespace osteotex::cnn
