#include "cli/feature_file.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

namespace specgrad::cli {

namespace {

static_assert(sizeof(double) == 8);

template <typename T>
void put_le(std::string& out, T value) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    for (std::size_t i = sizeof(T); i-- > 0;) out.push_back(static_cast<char>(raw[i]));
  } else {
    out.append(reinterpret_cast<const char*>(&value), sizeof(T));
  }
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (in.size() - pos < sizeof(T)) throw std::invalid_argument("feature file is truncated");
  unsigned char raw[sizeof(T)];
  std::memcpy(raw, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(raw[i], raw[sizeof(T) - 1 - i]);
  }
  pos += sizeof(T);
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

}  // namespace

std::string encode_features(const FeatureBatch& batch) {
  std::string out = "GCPF";
  put_le(out, batch.d);
  put_le(out, batch.n);
  put_le(out, static_cast<std::uint32_t>(batch.blocks.size()));
  for (const Matrix& m : batch.blocks) {
    if (m.rows() != batch.d || m.cols() != batch.n)
      throw std::invalid_argument("feature block does not match the batch shape");
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) put_le(out, m(i, j));
  }
  return out;
}

FeatureBatch decode_features(const std::string& bytes) {
  if (bytes.size() < 16 || bytes.compare(0, 4, "GCPF") != 0)
    throw std::invalid_argument("not a GCPF feature file");
  std::size_t pos = 4;
  FeatureBatch batch;
  batch.d = get_le<std::uint32_t>(bytes, pos);
  batch.n = get_le<std::uint32_t>(bytes, pos);
  const auto count = get_le<std::uint32_t>(bytes, pos);
  const std::uint64_t expected = 16 + std::uint64_t{8} * batch.d * batch.n * count;
  if (bytes.size() != expected) throw std::invalid_argument("feature file size does not match its header");
  batch.blocks.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    Matrix m(batch.d, batch.n);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = get_le<double>(bytes, pos);
    batch.blocks.push_back(std::move(m));
  }
  return batch;
}

}  // namespace specgrad::cli
