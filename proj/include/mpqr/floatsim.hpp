// Software simulation of binary floating-point arithmetic on a double carrier:
// round-to-nearest-even into a target format, uniform-precision ops, the
// mixed-precision inner product (exact low-precision products accumulated in
// the high format, one final castdown), and the 4x4 block-FMA GEMM with
// high-precision accumulators.
//
// All simulated values are held as doubles that are exactly representable in
// their claimed format. Double rounding through the carrier is innocuous for
// every constructible format: correctly rounded double results re-rounded to a
// t-bit format are the directly rounded results whenever 2t + 2 <= 53, which
// format construction enforces (t <= 25, or the native double format itself).
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "mpqr/matrix.hpp"

namespace mpqr {

struct MpqrError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FloatDomainError : MpqrError {
    using MpqrError::MpqrError;
};

struct FpFormat {
    int base = 2;
    int t = 0;        // significand bits, implicit bit included
    int emin = 0;     // exponent-code range endpoints; normal exponents
    int emax = 0;     // (in the 1.f * 2^e sense) span [emin+1, emax-1]
    const char* name = "";

    // precomputed by the factories
    double u = 0.0;           // unit round-off, 2^-t
    double max_finite = 0.0;  // (2^t - 1) * 2^(emax - t)
    int kmin = 0;             // smallest quantum exponent, emin + 2 - t
    bool native = false;      // the carrier itself (IEEE binary64)

    double unit_roundoff() const { return u; }
    int min_normal_exp() const { return emin + 1; }
    int max_normal_exp() const { return emax - 1; }
    double min_normal() const { return std::ldexp(1.0, emin + 1); }
    double min_subnormal() const { return std::ldexp(1.0, kmin); }

    bool operator==(const FpFormat& o) const {
        return t == o.t && emin == o.emin && emax == o.emax;
    }
};

// IEEE 754 binary16 / binary32 / binary64
const FpFormat& fp16();
const FpFormat& fp32();
const FpFormat& fp64();

// Custom format; requires 2 <= t <= 25, emin < emax, emin >= -1020, emax <= 1023.
FpFormat make_format(int t, int emin, int emax, const char* name = "custom");

enum class OverflowPolicy { Signal, Saturate };

struct OverflowError : MpqrError {
    OverflowError(double v, const FpFormat& f);
    double value;
    std::string format_name;
};

// Rounding environment: what to do past max_finite, and where to count
// saturations when the policy is Saturate.
struct RoundEnv {
    OverflowPolicy policy = OverflowPolicy::Signal;
    long long* overflow_count = nullptr;
};

namespace detail {

// 2^k for k in [-1022, 1023]
inline double pow2i(int k) {
    return std::bit_cast<double>(static_cast<std::uint64_t>(1023 + k) << 52);
}

double overflow_result(double x, const FpFormat& f, const RoundEnv& env);
[[noreturn]] void throw_nan(const FpFormat& f);

}  // namespace detail

// Round a finite double to the nearest value of f, ties to the even
// significand, with gradual underflow. NaN input is rejected; infinities and
// magnitudes beyond max_finite go through the overflow policy.
inline double round_value(double x, const FpFormat& f, const RoundEnv& env) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    const int be = static_cast<int>((bits >> 52) & 0x7FFu);
    if (be == 0x7FF) {
        if ((bits << 12) != 0) detail::throw_nan(f);
        return detail::overflow_result(x, f, env);
    }
    if (f.native) return x;
    if ((bits << 1) == 0) return x;  // +-0
    const int e = be != 0 ? be - 1023 : std::ilogb(x);
    int k = e - (f.t - 1);
    if (k < f.kmin) k = f.kmin;
    const double r = std::nearbyint(x * detail::pow2i(-k)) * detail::pow2i(k);
    if (r > f.max_finite || r < -f.max_finite) return detail::overflow_result(x, f, env);
    return r;
}

// true iff x is a member of f's value set
inline bool representable(double x, const FpFormat& f) {
    if (std::isnan(x) || std::isinf(x)) return false;
    const RoundEnv sat{OverflowPolicy::Saturate, nullptr};
    return round_value(x, f, sat) == x || (x == 0.0);
}

// A carrier value asserted to lie in `format`'s value set.
struct SimValue {
    double value = 0.0;
    const FpFormat* format = nullptr;
};

SimValue round_to_format(double x, const FpFormat& f, RoundEnv env = {});

enum class SimOp { Add, Sub, Mul, Div };

// Correctly rounded single operation in f: fl(x op y) = (1 + d)(x op y),
// |d| <= u. Inputs must be representable in f.
SimValue sim_op(SimOp op, const SimValue& x, const SimValue& y, const FpFormat& f,
                RoundEnv env = {});

struct PrecisionPair {
    FpFormat low, high;
    double ratio = 1.0;       // M = u_low / u_high
    bool degenerate = false;  // low == high; valid only for block-FMA composition

    // Strict pair: u_low > u_high and every product of two low values is
    // exactly representable in high (significand and exponent range checks).
    static PrecisionPair of(const FpFormat& low, const FpFormat& high);
    // Equal-precision pair; products are rounded, not exact. Not valid for
    // dot_mixed or MixedInner/BlockFMA contexts.
    static PrecisionPair same(const FpFormat& f);
};

// Sequential left-to-right dot product with every multiply and add rounded to f.
inline double dot_uniform_raw(const double* x, const double* y, int m, const FpFormat& f,
                              const RoundEnv& env) {
    if (f.native) {
        double s = x[0] * y[0];
        for (int k = 1; k < m; ++k) s += x[k] * y[k];
        if (std::isinf(s)) return detail::overflow_result(s, f, env);
        if (std::isnan(s)) detail::throw_nan(f);
        return s;
    }
    double s = round_value(x[0] * y[0], f, env);
    for (int k = 1; k < m; ++k) {
        const double p = round_value(x[k] * y[k], f, env);
        s = round_value(s + p, f, env);
    }
    return s;
}

// Mixed inner product: products of low values taken exactly (they are exact in
// the high format for a strict pair), accumulated left-to-right in high, and a
// single castdown to low at the end.
inline double dot_mixed_raw(const double* x, const double* y, int m, const PrecisionPair& p,
                            const RoundEnv& env) {
    double s = x[0] * y[0];
    if (p.high.native) {
        for (int k = 1; k < m; ++k) s += x[k] * y[k];
    } else {
        for (int k = 1; k < m; ++k) s = round_value(s + x[k] * y[k], p.high, env);
    }
    return round_value(s, p.low, env);
}

SimValue dot_uniform(std::span<const double> x, std::span<const double> y, const FpFormat& f,
                     RoundEnv env = {});
SimValue dot_mixed(std::span<const double> x, std::span<const double> y, const PrecisionPair& p,
                   RoundEnv env = {});

enum class ArithMode { Uniform, MixedInner, BlockFMA };

// The evaluation regime for every FLOP of the QR kernels.
class ArithmeticContext {
public:
    static ArithmeticContext uniform(const FpFormat& f, RoundEnv env = {});
    static ArithmeticContext mixed_inner(const PrecisionPair& p, RoundEnv env = {});
    static ArithmeticContext block_fma(const PrecisionPair& p, RoundEnv env = {});

    ArithMode mode() const { return mode_; }
    const FpFormat& working() const { return work_; }
    const PrecisionPair& pair() const { return pair_; }
    const RoundEnv& env() const { return env_; }

    double rnd(double v) const { return round_value(v, work_, env_); }
    double add(double a, double b) const { return rnd(a + b); }
    double sub(double a, double b) const { return rnd(a - b); }
    double mul(double a, double b) const { return rnd(a * b); }
    double div(double a, double b) const { return rnd(a / b); }
    double sqrt(double a) const { return rnd(std::sqrt(a)); }

    double dot(const double* x, const double* y, int m) const {
        if (mode_ == ArithMode::MixedInner) return dot_mixed_raw(x, y, m, pair_, env_);
        return dot_uniform_raw(x, y, m, work_, env_);
    }

private:
    ArithmeticContext(ArithMode m, const FpFormat& w, const PrecisionPair& p, RoundEnv env)
        : mode_(m), work_(w), pair_(p), env_(env) {}
    ArithMode mode_;
    FpFormat work_;
    PrecisionPair pair_;
    RoundEnv env_;
};

// D = fl_high(C + A*B) on 4x4 blocks: the accumulator starts at C and the four
// exact products are added in ascending k, each addition rounded in pair.high.
// Column-major 4x4 buffers.
void bfma_4x4_raw(const double* A, const double* B, const double* C, double* D,
                  const PrecisionPair& p, const RoundEnv& env);
Mat bfma_4x4(const Mat& A, const Mat& B, const Mat& C, const PrecisionPair& p, RoundEnv env = {});

// Z = X*Y with X (m x p), Y (p x n) in pair.low: dimensions zero-padded to
// multiples of 4, 4x4 output tiles chained over k-blocks with the accumulator
// kept in pair.high, one castdown per entry at the end.
Mat bfma_gemm(const Mat& X, const Mat& Y, const PrecisionPair& p, RoundEnv env = {});

// Elementwise rounding of a matrix into f.
Mat castdown(const Mat& A, const FpFormat& f, RoundEnv env = {});

}  // namespace mpqr
