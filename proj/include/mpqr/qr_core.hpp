// Householder QR and its two block variants: column-partitioned BQR with the
// WY aggregated update, and row-partitioned TSQR (the AllReduce binary-tree
// variant). All floating-point work runs through an ArithmeticContext, so the
// same kernels serve uniform fp16/fp32/fp64 and the mixed inner-product regime.
#pragma once

#include <span>
#include <vector>

#include "mpqr/floatsim.hpp"
#include "mpqr/matrix.hpp"

namespace mpqr {

struct ZeroVectorError : MpqrError {
    using MpqrError::MpqrError;
};

struct RankDeficientError : MpqrError {
    RankDeficientError(int col);
    int column;
};

struct InvalidLevelsError : MpqrError {
    using MpqrError::MpqrError;
};

// One reflector: (I - beta v v^T) x = sigma e_1 with v[0] = 1.
struct Householder {
    double beta = 0.0;
    std::vector<double> v;
    double sigma = 0.0;
};

// sigma = -sign(x[0]) ||x||_2 (sign(0) := +1), v = (x - sigma e_1)/(x[0] - sigma),
// beta = -(x[0] - sigma)/sigma. The sign choice makes the subtraction
// cancellation-free. Throws ZeroVectorError when ||x|| rounds to zero in ctx.
Householder hhvec(std::span<const double> x, const ArithmeticContext& ctx);

// col <- col - (beta v^T col) v, the rank-1 form of a reflector application.
void apply_hh_col(const double* v, int len, double beta, double* col,
                  const ArithmeticContext& ctx);
// Reflector applied to every column of B (v.size() == B.rows()).
Mat apply_hh(std::span<const double> v, double beta, const Mat& B, const ArithmeticContext& ctx);

// V holds reflector j in column j (unit diagonal, zeros above), beta the
// constants, R the upper-triangular factor (diagonal entries are the sigmas;
// below-diagonal entries are exact zeros).
struct HouseholderFactors {
    Mat V;
    std::vector<double> beta;
    Mat R;
};

// Column-by-column Householder triangularization of an m x n matrix, m >= n.
HouseholderFactors hqr(const Mat& A, const ArithmeticContext& ctx);

// Q = P_1 ... P_n applied to identity columns in reverse order; thin gives the
// m x n factor, otherwise the full m x m one.
Mat build_q(const HouseholderFactors& f, bool thin, const ArithmeticContext& ctx);

// I - W Y^T aggregation of the reflectors in V; Y is exactly V.
struct WYRep {
    Mat W, Y;
};
WYRep build_wy(const Mat& V, std::span<const double> beta, const ArithmeticContext& ctx);

struct QrResult {
    Mat Q, R;
};

// Blocked QR with panels of width r (last panel may be narrower): panel hqr,
// WY aggregation, two matrix products per trailing update, Q accumulated
// blockwise in reverse.
QrResult bqr(const Mat& A, int r, const ArithmeticContext& ctx);

// Tree index maps (1-based): block j of level i receives the phi(j)-th half of
// block alpha(j) of level i+1, with j = 2(alpha(j) - 1) + phi(j).
int tsqr_alpha(int j);
int tsqr_phi(int j);

// Factor tree of the AllReduce TSQR: level i holds 2^(L-i) HouseholderFactors.
struct TsqrTree {
    int L = 0;
    std::vector<std::vector<HouseholderFactors>> levels;  // levels[0..L]
    std::vector<int> block_rows;                          // level-0 block heights
};

TsqrTree tsqr_factor(const Mat& A, int L, const ArithmeticContext& ctx);

// Row-blocked QR with 2^L leaf blocks and L pairwise reduction levels;
// requires m >= 2^L n so every leaf has at least n rows. Rows are split as
// evenly as possible (first m mod 2^L blocks one row taller).
QrResult tsqr(const Mat& A, int L, const ArithmeticContext& ctx);

}  // namespace mpqr
