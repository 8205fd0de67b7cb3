#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "osteotex/binary_io.hpp"
#include "osteotex/classifiers.hpp"

namespace osteotex {

/// A trained classifier plus what is needed to apply it to a new table:
/// the selected feature names (in model column order) and free-form JSON
/// metadata echoing the training configuration.
struct ModelBundle {
  classifiers::TrainedModel model;
  std::vector<std::string> feature_names;
  std::string metadata_json = "{}";
};

inline constexpr char kModelMagic[4] = {'O', 'T', 'M', 'D'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

/// OTMD container, same framing as OTWT: magic, u32 version, u32 entry
/// count, entries, CRC32 of the entry records. Each entry is u16 name
/// length, name, u8 element type (0 f64, 1 i64, 2 string list), u8 rank,
/// u32 dims, payload (strings as u32 length + UTF-8 bytes).
std::string encode_model(const ModelBundle& bundle);
ModelBundle decode_model(std::string_view bytes);
void save_model(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_model(const std::filesystem::path& path);

}  // namespace osteotex
