#include "mpqr/floatsim.hpp"

namespace mpqr {

namespace {

FpFormat finish(FpFormat f) {
    f.u = std::ldexp(1.0, -f.t);
    f.max_finite = std::ldexp(std::ldexp(1.0, f.t) - 1.0, f.emax - f.t);
    f.kmin = f.emin + 2 - f.t;
    f.native = (f.t == 53 && f.emin == -1023 && f.emax == 1024);
    return f;
}

FpFormat builtin(int t, int emin, int emax, const char* name) {
    FpFormat f;
    f.t = t;
    f.emin = emin;
    f.emax = emax;
    f.name = name;
    return finish(f);
}

}  // namespace

const FpFormat& fp16() {
    static const FpFormat f = builtin(11, -15, 16, "fp16");
    return f;
}
const FpFormat& fp32() {
    static const FpFormat f = builtin(24, -127, 128, "fp32");
    return f;
}
const FpFormat& fp64() {
    static const FpFormat f = builtin(53, -1023, 1024, "fp64");
    return f;
}

FpFormat make_format(int t, int emin, int emax, const char* name) {
    if (t < 2 || t > 25)
        throw std::invalid_argument("make_format: t must be in [2, 25] for a faithful "
                                    "double-carrier simulation");
    if (emin >= emax) throw std::invalid_argument("make_format: emin must be < emax");
    if (emin < -1020 || emax > 1023)
        throw std::invalid_argument("make_format: exponent range exceeds the carrier");
    FpFormat f;
    f.t = t;
    f.emin = emin;
    f.emax = emax;
    f.name = name;
    return finish(f);
}

OverflowError::OverflowError(double v, const FpFormat& f)
    : MpqrError(std::string("overflow rounding ") + std::to_string(v) + " into " + f.name),
      value(v),
      format_name(f.name) {}

namespace detail {

double overflow_result(double x, const FpFormat& f, const RoundEnv& env) {
    if (env.policy == OverflowPolicy::Saturate) {
        if (env.overflow_count) ++*env.overflow_count;
        return std::copysign(f.max_finite, x);
    }
    throw OverflowError(x, f);
}

void throw_nan(const FpFormat& f) {
    throw FloatDomainError(std::string("NaN operand in simulated ") + f.name + " arithmetic");
}

}  // namespace detail

SimValue round_to_format(double x, const FpFormat& f, RoundEnv env) {
    return SimValue{round_value(x, f, env), &f};
}

SimValue sim_op(SimOp op, const SimValue& x, const SimValue& y, const FpFormat& f, RoundEnv env) {
    if (!representable(x.value, f) || !representable(y.value, f))
        throw std::invalid_argument("sim_op: operand not representable in target format");
    double r;
    switch (op) {
        case SimOp::Add: r = x.value + y.value; break;
        case SimOp::Sub: r = x.value - y.value; break;
        case SimOp::Mul: r = x.value * y.value; break;
        case SimOp::Div: r = x.value / y.value; break;
        default: throw std::invalid_argument("sim_op: unknown op");
    }
    return SimValue{round_value(r, f, env), &f};
}

SimValue dot_uniform(std::span<const double> x, std::span<const double> y, const FpFormat& f,
                     RoundEnv env) {
    if (x.size() != y.size() || x.empty())
        throw std::invalid_argument("dot_uniform: vectors must have equal nonzero length");
    return SimValue{dot_uniform_raw(x.data(), y.data(), static_cast<int>(x.size()), f, env), &f};
}

SimValue dot_mixed(std::span<const double> x, std::span<const double> y, const PrecisionPair& p,
                   RoundEnv env) {
    if (x.size() != y.size() || x.empty())
        throw std::invalid_argument("dot_mixed: vectors must have equal nonzero length");
    if (p.degenerate)
        throw std::invalid_argument("dot_mixed: requires a strict precision pair");
    return SimValue{dot_mixed_raw(x.data(), y.data(), static_cast<int>(x.size()), p, env),
                    &p.low};
}

PrecisionPair PrecisionPair::of(const FpFormat& low, const FpFormat& high) {
    if (!(low.u > high.u))
        throw std::invalid_argument("PrecisionPair: u_low must exceed u_high");
    if (2 * low.t > high.t)
        throw std::invalid_argument("PrecisionPair: low products not exact in high "
                                    "(needs 2*t_low <= t_high)");
    if (2 * low.emax > high.emax || 2 * (low.emin + 2 - low.t) < high.emin + 2 - high.t)
        throw std::invalid_argument("PrecisionPair: product exponent range not covered by high");
    PrecisionPair p;
    p.low = low;
    p.high = high;
    p.ratio = low.u / high.u;
    p.degenerate = false;
    return p;
}

PrecisionPair PrecisionPair::same(const FpFormat& f) {
    PrecisionPair p;
    p.low = f;
    p.high = f;
    p.ratio = 1.0;
    p.degenerate = true;
    return p;
}

ArithmeticContext ArithmeticContext::uniform(const FpFormat& f, RoundEnv env) {
    return ArithmeticContext(ArithMode::Uniform, f, PrecisionPair::same(f), env);
}

ArithmeticContext ArithmeticContext::mixed_inner(const PrecisionPair& p, RoundEnv env) {
    if (p.degenerate)
        throw std::invalid_argument("mixed_inner: requires distinct low/high formats");
    return ArithmeticContext(ArithMode::MixedInner, p.low, p, env);
}

ArithmeticContext ArithmeticContext::block_fma(const PrecisionPair& p, RoundEnv env) {
    if (p.degenerate)
        throw std::invalid_argument("block_fma: requires distinct low/high formats");
    return ArithmeticContext(ArithMode::BlockFMA, p.low, p, env);
}

void bfma_4x4_raw(const double* A, const double* B, const double* C, double* D,
                  const PrecisionPair& p, const RoundEnv& env) {
    const bool exact_products = !p.degenerate;
    const FpFormat& h = p.high;
    for (int j = 0; j < 4; ++j) {
        for (int i = 0; i < 4; ++i) {
            double s = C[4 * j + i];
            for (int k = 0; k < 4; ++k) {
                double prod = A[4 * k + i] * B[4 * j + k];
                if (!exact_products) prod = round_value(prod, h, env);
                s = h.native ? s + prod : round_value(s + prod, h, env);
            }
            D[4 * j + i] = s;
        }
    }
}

Mat bfma_4x4(const Mat& A, const Mat& B, const Mat& C, const PrecisionPair& p, RoundEnv env) {
    if (A.rows() != 4 || A.cols() != 4 || B.rows() != 4 || B.cols() != 4 || C.rows() != 4 ||
        C.cols() != 4)
        throw std::invalid_argument("bfma_4x4: all operands must be 4x4");
    Mat D(4, 4);
    bfma_4x4_raw(A.data(), B.data(), C.data(), D.data(), p, env);
    return D;
}

Mat bfma_gemm(const Mat& X, const Mat& Y, const PrecisionPair& p, RoundEnv env) {
    if (X.cols() != Y.rows()) throw std::invalid_argument("bfma_gemm: inner dimensions differ");
    const int m = X.rows(), kk = X.cols(), n = Y.cols();
    const int mp = (m + 3) & ~3, kp = (kk + 3) & ~3, np = (n + 3) & ~3;
    Mat Xp(mp, kp), Yp(kp, np);
    Xp.set_block(0, 0, X);
    Yp.set_block(0, 0, Y);
    Mat Z(m, n);

    const bool exact_products = !p.degenerate;
    const FpFormat& h = p.high;
    double acc[16];
    for (int bj = 0; bj < np; bj += 4) {
        for (int bi = 0; bi < mp; bi += 4) {
            for (double& a : acc) a = 0.0;
            for (int bk = 0; bk < kp; bk += 4) {
                for (int j = 0; j < 4; ++j) {
                    const double* ycol = Yp.col(bj + j) + bk;
                    for (int i = 0; i < 4; ++i) {
                        double s = acc[4 * j + i];
                        for (int k = 0; k < 4; ++k) {
                            double prod = Xp(bi + i, bk + k) * ycol[k];
                            if (!exact_products) prod = round_value(prod, h, env);
                            s = h.native ? s + prod : round_value(s + prod, h, env);
                        }
                        acc[4 * j + i] = s;
                    }
                }
            }
            for (int j = 0; j < 4 && bj + j < n; ++j)
                for (int i = 0; i < 4 && bi + i < m; ++i)
                    Z(bi + i, bj + j) = round_value(acc[4 * j + i], p.low, env);
        }
    }
    return Z;
}

Mat castdown(const Mat& A, const FpFormat& f, RoundEnv env) {
    Mat R(A.rows(), A.cols());
    const double* src = A.data();
    double* dst = R.data();
    const size_t nn = size_t(A.rows()) * size_t(A.cols());
    for (size_t i = 0; i < nn; ++i) dst[i] = round_value(src[i], f, env);
    return R;
}

}  // namespace mpqr
