#include "errl/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace errl {

namespace {

constexpr std::array<char, 8> kMagic = {'E', 'R', 'R', 'L', 'M', 'L', 'P', '1'};

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
    throw std::runtime_error("checkpoint: truncated stream");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Mlp<float>& net) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layer_sizes().size()));
  for (int s : net.layer_sizes()) put<std::uint32_t>(out, static_cast<std::uint32_t>(s));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(net.parameter_count()));
  for (Eigen::Index i = 0; i < net.parameter_count(); ++i) put<float>(out, net.parameters()(i));
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

Mlp<float> read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  const auto n = get<std::uint32_t>(in);
  if (n < 2 || n > 64) throw std::runtime_error("checkpoint: implausible layer count");
  std::vector<int> sizes(n);
  for (auto& s : sizes) s = static_cast<int>(get<std::uint32_t>(in));
  Mlp<float> net(sizes);
  const auto count = get<std::uint64_t>(in);
  if (count != static_cast<std::uint64_t>(net.parameter_count())) {
    throw std::runtime_error("checkpoint: parameter count does not match layer sizes");
  }
  for (Eigen::Index i = 0; i < net.parameter_count(); ++i) net.parameters()(i) = get<float>(in);
  if (!net.parameters().allFinite()) throw std::runtime_error("checkpoint: non-finite parameter");
  return net;
}

void save_checkpoint(const std::filesystem::path& path, const Mlp<float>& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string());
  write_checkpoint(out, net);
}

Mlp<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace errl
