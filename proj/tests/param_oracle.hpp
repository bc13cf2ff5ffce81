#pragma once

#include <cstddef>
#include <map>
#include <string>

namespace holo::test {

// Closed-form layer counts for the generator, written independently of init_rhm.
inline std::size_t conv_count(std::size_t cin, std::size_t cout, std::size_t k) { return cout * cin * k * k + cout; }

inline std::map<std::string, std::size_t> analytic_block_counts(std::size_t c, std::size_t in = 2, std::size_t out = 2) {
  std::map<std::string, std::size_t> m;
  auto ch = [c](int k) { return c << (k - 1); };
  m["down_conv_1"] = conv_count(in, c, 3) + conv_count(c, c, 3);
  for (int k = 2; k <= 4; ++k) m["down_conv_" + std::to_string(k)] = conv_count(ch(k - 1), ch(k), 3) + conv_count(ch(k), ch(k), 3);
  for (int k = 1; k <= 4; ++k) {
    // two conv GRU layers (three 3x3 gate convolutions over [input, hidden]) and a 1x1 projection
    m["rnn_" + std::to_string(k)] = 2 * 3 * conv_count(2 * ch(k), ch(k), 3) + conv_count(ch(k), ch(k), 1);
  }
  // up_conv_k: 3x3 conv over [upsampled, skip] (the deepest block sees the bridge alone), then a
  // 2x2 transposed conv to the next level's width; the last block adds a 3x3 refinement.
  m["up_conv_4"] = conv_count(ch(4), ch(4), 3) + conv_count(ch(4), ch(3), 2);
  m["up_conv_3"] = conv_count(2 * ch(3), ch(3), 3) + conv_count(ch(3), ch(2), 2);
  m["up_conv_2"] = conv_count(2 * ch(2), ch(2), 3) + conv_count(ch(2), ch(1), 2);
  m["up_conv_1"] = conv_count(2 * ch(1), ch(1), 3) + conv_count(ch(1), ch(1), 2) + conv_count(ch(1), ch(1), 3);
  m["head"] = conv_count(c, out, 1);
  return m;
}

inline std::size_t analytic_total(std::size_t c) {
  std::size_t t = 0;
  for (const auto& [block, n] : analytic_block_counts(c)) t += n;
  return t;
}

inline std::size_t analytic_rnn(std::size_t c) {
  std::size_t t = 0;
  for (const auto& [block, n] : analytic_block_counts(c))
    if (block.rfind("rnn_", 0) == 0) t += n;
  return t;
}

}  // namespace holo::test
