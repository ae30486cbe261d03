// Deterministic rounding-error bound calculus: gamma_k = cku/(1-cku) terms,
// accumulation rules for one and two precisions, the per-algorithm bound cells
// for the orthogonal and triangular QR factors, conversion to measurable
// backward/orthogonality bounds, and the feasibility grid.
#pragma once

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "mpqr/floatsim.hpp"

namespace mpqr::bounds {

struct BoundDomainError : MpqrError {
    using MpqrError::MpqrError;
};

// gamma~_k = cku/(1-cku); k is a real op count, c the small tilde constant.
struct GammaTerm {
    double k = 0.0;
    double u = 0.0;
    int c = 1;
};

struct GammaValue {
    double value = 0.0;
    bool stable = true;  // cku < 1/2, i.e. the bound is a meaningful (< 1) relative error
};

// Throws BoundDomainError when cku >= 1 (the bound is undefined there).
GammaValue gamma(double k, double u, int c = 1);
GammaValue value_of(const GammaTerm& g);

// (1 + gamma_k)(1 + gamma_j) - 1 with a shared unit round-off: gamma_{ck*k + cj*j}.
GammaTerm combine_same(const GammaTerm& a, const GammaTerm& b);

// Two-precision accumulation (1 + g_low)(1 + g_high) - 1, kept as a two-term
// sum; the cross term is absorbed into the tilde constant.
struct MixedGamma {
    GammaTerm low, high;
    double value() const;
    bool stable() const;
};
MixedGamma combine_mixed(const GammaTerm& low, const GammaTerm& high);

enum class Algorithm { HQR, BQR, TSQR };
enum class Regime { Uniform, Mixed2, Mixed3, HighThenCastdown };

struct BoundSpec {
    Algorithm alg = Algorithm::HQR;
    Regime regime = Regime::Uniform;
    long m = 0, n = 0;
    int r = 0;  // BQR panel width
    int L = 0;  // TSQR levels
    FpFormat prec = fp64();                              // Uniform regime
    PrecisionPair pair = PrecisionPair::same(fp64());    // mixed regimes
    int c = 1;
};

struct BoundValue {
    double value = 0.0;
    bool stable = true;
};

// Frobenius-norm bound on the error of the orthogonal factor.
BoundValue bound_q(const BoundSpec& s);
// Columnwise coefficient e such that ||dR[:,j]||_2 <= e * ||A[:,j]||_2.
BoundValue bound_r_coeff(const BoundSpec& s);
double bound_r_column(const BoundSpec& s, double column_norm_a);

// (backwardBound, orthBound) = (sqrt(n)(eR + eQ + eR*eQ), 2*eQ).
std::pair<double, double> convert_to_measurables(double eps_r, double eps_q, long n);

// Componentwise mixed inner-product bound (1 + u_l)(1 + gamma^h_{m-1}) - 1.
double mixed_dot_bound(long m, const PrecisionPair& p);
// Componentwise block-FMA GEMM bound u_l + gamma^h_p + u_l * gamma^h_p.
double bfma_gemm_bound(long p, const PrecisionPair& pair);
// Multiplicative overhead 1 + M(L+1)/(n(2^-L m + 2nL)) of the level-3 TSQR
// bound over its high-precision counterpart.
double mp_tsqr3_overhead(long m, long n, int L, double ratio);

enum class FeasScheme { HQR, TSQR };

struct FeasibilityCell {
    long m = 0, n = 0;
    bool feasible = false;
    double log10_bound = 0.0;
};

std::vector<FeasibilityCell> feasibility_map(FeasScheme scheme, int L, std::span<const long> ms,
                                             std::span<const long> ns, const FpFormat& prec,
                                             int c = 1);
// Grid file: header "m n value", one "m n <log10>" row per cell, "inf" when infeasible.
void write_feasibility_grid(std::ostream& os, const std::vector<FeasibilityCell>& cells);

}  // namespace mpqr::bounds
