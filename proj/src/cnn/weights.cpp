#include "osteotex/cnn/weights.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace osteotex::cnn {

std::size_t WeightArray::numel() const {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         [](std::size_t a, std::uint32_t b) { return a * b; });
}

const WeightArray* WeightStore::find(const std::string& name) const {
  const auto it = entries.find(name);
  return it == entries.end() ? nullptr : &it->second;
}

std::string encode_weights(const WeightStore& store) {
  ByteWriter records;
  for (const auto& [name, arr] : store.entries) {
    if (name.size() > 0xFFFF) throw FormatError("weight name too long: " + name);
    if (arr.dims.size() > 0xFF) throw FormatError("weight rank too large: " + name);
    if (arr.numel() != arr.values.size()) throw FormatError("weight payload/dims mismatch: " + name);
    records.u16(static_cast<std::uint16_t>(name.size()));
    records.bytes(name);
    records.u8(static_cast<std::uint8_t>(arr.dims.size()));
    for (std::uint32_t d : arr.dims) records.u32(d);
    records.f32_array(arr.values);
  }
  ByteWriter out;
  out.bytes(std::string_view(kWeightMagic, 4));
  out.u32(kWeightFormatVersion);
  out.u32(static_cast<std::uint32_t>(store.entries.size()));
  out.bytes(records.data());
  out.u32(crc32(records.data()));
  return std::move(out.data());
}

WeightStore decode_weights(std::string_view bytes) {
  ByteReader in(bytes);
  if (bytes.size() < 16 || in.bytes(4) != std::string_view(kWeightMagic, 4)) {
    throw FormatError("not an OTWT weight file (bad magic)");
  }
  const std::uint32_t version = in.u32();
  if (version != kWeightFormatVersion) {
    throw FormatError("unsupported OTWT version " + std::to_string(version));
  }
  const std::uint32_t count = in.u32();
  const std::size_t records_begin = in.pos();
  const std::uint32_t stored_crc = ByteReader(bytes.substr(bytes.size() - 4)).u32();
  const std::string_view records = bytes.substr(records_begin, bytes.size() - 4 - records_begin);
  if (crc32(records) != stored_crc) throw FormatError("OTWT CRC mismatch");

  ByteReader rec(records);
  WeightStore store;
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::uint16_t name_len = rec.u16();
    std::string name(rec.bytes(name_len));
    WeightArray arr;
    const std::uint8_t rank = rec.u8();
    for (std::uint8_t r = 0; r < rank; ++r) arr.dims.push_back(rec.u32());
    const std::size_t n = arr.numel();
    if (n > rec.remaining() / sizeof(float)) throw FormatError("OTWT payload truncated: " + name);
    arr.values.resize(n);
    rec.f32_array(arr.values);
    if (!store.entries.emplace(std::move(name), std::move(arr)).second) {
      throw FormatError("OTWT duplicate entry name");
    }
  }
  if (rec.remaining() != 0) throw FormatError("OTWT trailing bytes after entries");
  return store;
}

void save_weights(const std::filesystem::path& path, const WeightStore& store) {
  write_file_bytes(path.string(), encode_weights(store));
}

WeightStore load_weights(const std::filesystem::path& path) {
  return decode_weights(read_file_bytes(path.string()));
}

std::vector<std::uint32_t> expected_weight_dims(const NetworkSpec& spec, std::size_t layer) {
  const LayerSpec& l = spec.layers.at(layer);
  const Shape in = layer == 0 ? spec.input : spec.shapes.at(layer - 1);
  switch (l.kind) {
    case LayerKind::Conv:
      return {static_cast<std::uint32_t>(l.out_channels), static_cast<std::uint32_t>(in.channels),
              static_cast<std::uint32_t>(l.kernel_h), static_cast<std::uint32_t>(l.kernel_w)};
    case LayerKind::Fc:
      return {static_cast<std::uint32_t>(l.out_dim), static_cast<std::uint32_t>(in.numel())};
    default:
      return {};
  }
}

namespace {

std::string dims_str(const std::vector<std::uint32_t>& dims) {
  std::ostringstream s;
  s << '(';
  for (std::size_t i = 0; i < dims.size(); ++i) s << (i ? "," : "") << dims[i];
  s << ')';
  return s.str();
}

}  // namespace

void validate_weights(const NetworkSpec& spec, const WeightStore& store) {
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    if (!l.has_weights()) continue;
    const auto want = expected_weight_dims(spec, i);
    const WeightArray* w = store.find(WeightStore::weight_key(l.name));
    if (!w) {
      problems.push_back("missing entry " + WeightStore::weight_key(l.name));
    } else if (w->dims != want) {
      problems.push_back(WeightStore::weight_key(l.name) + " has shape " + dims_str(w->dims) +
                         ", expected " + dims_str(want));
    }
    if (const WeightArray* b = store.find(WeightStore::bias_key(l.name))) {
      if (b->dims != std::vector<std::uint32_t>{want.front()}) {
        problems.push_back(WeightStore::bias_key(l.name) + " has shape " + dims_str(b->dims) +
                           ", expected (" + std::to_string(want.front()) + ")");
      }
    }
  }
  if (!problems.empty()) {
    std::string msg = "weights do not match network spec '" + spec.name + "':";
    for (const auto& p : problems) msg += "\n  " + p;
    throw WeightError(msg);
  }
}

WeightStore make_random_weights(const NetworkSpec& spec, std::uint64_t seed, bool zero_bias) {
  WeightStore store;
  // Each 64-bit draw supplies two uniform 32-bit values; vgg-sized nets need
  // tens of millions of them.
  std::mt19937_64 gen(seed);
  constexpr double kInv32 = 1.0 / 4294967296.0;
  const auto fill = [&gen](std::vector<float>& out, double lo, double hi) {
    const double scale = (hi - lo) * kInv32;
    for (std::size_t i = 0; i < out.size(); i += 2) {
      const std::uint64_t r = gen();
      out[i] = static_cast<float>(lo + scale * static_cast<double>(r >> 32));
      if (i + 1 < out.size()) out[i + 1] = static_cast<float>(lo + scale * static_cast<double>(r & 0xffffffffu));
    }
  };
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    if (!l.has_weights()) continue;
    WeightArray w;
    w.dims = expected_weight_dims(spec, i);
    const std::size_t fan_in = w.numel() / w.dims.front();
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    w.values.resize(w.numel());
    fill(w.values, -bound, bound);
    WeightArray b;
    b.dims = {w.dims.front()};
    b.values.assign(w.dims.front(), 0.0f);
    if (!zero_bias) fill(b.values, 0.0, 0.01);
    store.entries.emplace(WeightStore::weight_key(l.name), std::move(w));
    store.entries.emplace(WeightStore::bias_key(l.name), std::move(b));
  }
  return store;
}

}  // namespace osteotex::cnn
