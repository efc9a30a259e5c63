#ifndef ERRL_CHECKPOINT_HPP
#define ERRL_CHECKPOINT_HPP

#include <filesystem>
#include <iosfwd>

#include "errl/mlp.hpp"

namespace errl {

/// Binary layout, all integers and floats little-endian:
///   bytes 0-7   magic "ERRLMLP1"
///   u32         number of layer sizes n
///   u32 x n     layer sizes, input first
///   u64         parameter count p
///   f32 x p     flat parameter vector
void write_checkpoint(std::ostream& out, const Mlp<float>& net);
Mlp<float> read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Mlp<float>& net);
Mlp<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace errl

#endif  // ERRL_CHECKPOINT_HPP
