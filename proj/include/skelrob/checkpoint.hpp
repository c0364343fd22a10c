#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skelrob/graph.hpp"

namespace skelrob::num {

// Parameter checkpoint format ("SKW1"): magic, u32 parameter count, then per
// parameter: u16 name length, UTF-8 name, u8 rank, u32 dims, f64 values in
// row-major order. All integers and floats little-endian.

std::vector<uint8_t> serialize_params(const ParamStore& params);
ParamStore deserialize_params(const std::vector<uint8_t>& bytes);

void save_params(const ParamStore& params, const std::string& path);
ParamStore load_params(const std::string& path);

// FNV-1a over the serialized bytes; used for provenance records.
uint64_t params_checksum(const ParamStore& params);

std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes);

} // namespace skelrob::num
