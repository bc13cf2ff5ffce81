#pragma once

#include <span>

#include "holo/field.hpp"

namespace holo::fft {

/// In-place 2-D DFT of a row-major rows x cols array. The forward transform is
/// unnormalised; the inverse divides by rows*cols.
void forward(std::span<cplx> data, int rows, int cols);
void inverse(std::span<cplx> data, int rows, int cols);

inline void forward(Grid<cplx>& g) { forward(g.data(), g.rows(), g.cols()); }
inline void inverse(Grid<cplx>& g) { inverse(g.data(), g.rows(), g.cols()); }

/// DFT-ordered frequency index: 0..n/2-1 then -n/2..-1 (for even n).
inline int signed_index(int k, int n) { return k < (n + 1) / 2 ? k : k - n; }

}  // namespace holo::fft
