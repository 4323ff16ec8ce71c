#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "spanie/parameters.hpp"
#include "spanie/tensor.hpp"

namespace spanie {

// Flat tensor archive.
//
//   magic      8 bytes  "SPIEARC1"
//   count      u64
//   repeated count times:
//     name_len u32, name bytes (UTF-8)
//     rank     u32, dims u64 × rank
//     data     f64 × product(dims), little-endian IEEE-754
//
// Entries are written in lexicographic name order.
using TensorMap = std::map<std::string, Tensor>;

void write_archive(const std::filesystem::path& path, const TensorMap& tensors);
TensorMap read_archive(const std::filesystem::path& path);

TensorMap snapshot(const ParameterStore& store);

}  // namespace spanie
