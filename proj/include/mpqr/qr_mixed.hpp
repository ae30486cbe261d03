// Mixed-precision QR strategies over a (low, high) format pair. Inputs and
// outputs live in pair.low; the strategies differ in where casting down
// happens: once at the very end (hqr_high_castdown), at every inner product
// (mp_*2, via the mixed dot of the MixedInner context), or once per panel /
// tree block with block-FMA matrix products (mp_*3).
#pragma once

#include "mpqr/qr_core.hpp"

namespace mpqr {

// Factor entirely in pair.high, cast Q and R down once.
QrResult hqr_high_castdown(const Mat& A, const PrecisionPair& pair, RoundEnv env = {});

// Every inner product: exact products, high-precision sum, one castdown; all
// remaining FLOPs in pair.low.
QrResult mp_hqr2(const Mat& A, const PrecisionPair& pair, RoundEnv env = {});
QrResult mp_bqr2(const Mat& A, int r, const PrecisionPair& pair, RoundEnv env = {});
QrResult mp_tsqr2(const Mat& A, int L, const PrecisionPair& pair, RoundEnv env = {});

// Panel hqr and WY construction in pair.high, one castdown of the R panel and
// the (W, Y) factors per panel, trailing and Q updates through bfma_gemm.
// A degenerate pair (same format twice) reproduces bqr in that format bitwise.
QrResult mp_bqr3(const Mat& A, int r, const PrecisionPair& pair, RoundEnv env = {});

// TSQR with each block factored in pair.high and its WY representation cast
// down; stacked R inputs at levels >= 1 are the castdown panels, cast up again
// before each block hqr; Q reconstruction applies the low WY factors with
// bfma_gemm.
QrResult mp_tsqr3(const Mat& A, int L, const PrecisionPair& pair, RoundEnv env = {});

}  // namespace mpqr
