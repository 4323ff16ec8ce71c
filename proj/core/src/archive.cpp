#include "spanie/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "spanie/errors.hpp"

namespace spanie {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'I', 'E', 'A', 'R', 'C', '1'};

template <typename T>
void write_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const std::filesystem::path& path) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw DataError("truncated archive: " + path.string());
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_archive(const std::filesystem::path& path, const TensorMap& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write archive: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_le<std::uint64_t>(out, tensors.size());
  for (const auto& [name, t] : tensors) {
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) write_le<std::uint64_t>(out, d);
    for (double v : t.data()) write_le<double>(out, v);
  }
  if (!out) throw DataError("failed writing archive: " + path.string());
}

TensorMap read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open archive: " + path.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a tensor archive: " + path.string());
  }
  const auto count = read_le<std::uint64_t>(in, path);
  TensorMap out;
  for (std::uint64_t e = 0; e < count; ++e) {
    const auto name_len = read_le<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw DataError("truncated archive: " + path.string());
    const auto rank = read_le<std::uint32_t>(in, path);
    Shape shape(rank);
    for (auto& d : shape) d = read_le<std::uint64_t>(in, path);
    std::vector<double> data(shape_size(shape));
    for (auto& v : data) v = read_le<double>(in, path);
    out.emplace(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return out;
}

TensorMap snapshot(const ParameterStore& store) {
  TensorMap out;
  for (const auto* p : store.all()) out.emplace(p->name, p->value);
  return out;
}

}  // namespace spanie
