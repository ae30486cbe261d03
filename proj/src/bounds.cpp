#include "mpqr/bounds.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace mpqr::bounds {

GammaValue gamma(double k, double u, int c) {
    if (k < 0.0 || u <= 0.0 || c <= 0) throw std::invalid_argument("gamma: need k >= 0, u > 0, c > 0");
    const double cku = double(c) * k * u;
    if (cku >= 1.0) throw BoundDomainError("gamma: cku >= 1, bound undefined");
    return GammaValue{cku / (1.0 - cku), cku < 0.5};
}

GammaValue value_of(const GammaTerm& g) { return gamma(g.k, g.u, g.c); }

GammaTerm combine_same(const GammaTerm& a, const GammaTerm& b) {
    if (a.u != b.u) throw std::invalid_argument("combine_same: unit round-offs differ");
    value_of(a);
    value_of(b);  // both must be defined
    return GammaTerm{double(a.c) * a.k + double(b.c) * b.k, a.u, 1};
}

double MixedGamma::value() const { return value_of(low).value + value_of(high).value; }

bool MixedGamma::stable() const { return value_of(low).stable && value_of(high).stable; }

MixedGamma combine_mixed(const GammaTerm& low, const GammaTerm& high) {
    if (!value_of(low).stable || !value_of(high).stable)
        throw BoundDomainError("combine_mixed: operands must be stable (cku < 1/2)");
    return MixedGamma{low, high};
}

namespace {

struct Acc {
    double value = 0.0;
    bool stable = true;
    // scale * gamma(k, u, c)
    void add(double scale, double k, double u, int c) {
        const GammaValue g = gamma(k, u, c);
        value += scale * g.value;
        stable = stable && g.stable;
    }
    void add_const(double v) { value += v; }
};

void check_shape(const BoundSpec& s) {
    if (s.m < 1 || s.n < 1 || s.m < s.n) throw std::invalid_argument("bound: need m >= n >= 1");
    if (s.alg == Algorithm::BQR && (s.r < 1 || s.r > s.n))
        throw std::invalid_argument("bound: BQR needs 1 <= r <= n");
    if (s.alg == Algorithm::TSQR) {
        if (s.L < 1) throw std::invalid_argument("bound: TSQR needs L >= 1");
        if (double(s.m) < std::ldexp(double(s.n), s.L))
            throw std::invalid_argument("bound: TSQR needs m >= 2^L * n");
    }
    if (s.regime == Regime::HighThenCastdown && s.alg != Algorithm::HQR)
        throw std::invalid_argument("bound: HighThenCastdown is analyzed for HQR only");
    if (s.regime == Regime::Mixed3 && s.alg == Algorithm::HQR)
        throw std::invalid_argument("bound: Mixed3 covers BQR and TSQR; use HighThenCastdown for HQR");
}

// Columnwise coefficient; bound_q is sqrt(n) times this in every cell.
BoundValue r_coeff(const BoundSpec& s) {
    check_shape(s);
    const double n = double(s.n);
    const double m = double(s.m);
    const double mtop = std::ldexp(m, -s.L);  // 2^-L m
    const int c = s.c;
    Acc a;
    switch (s.regime) {
        case Regime::Uniform: {
            const double u = s.prec.u;
            if (s.alg == Algorithm::TSQR) {
                a.add(n, mtop, u, c);
                a.add(n * s.L, 2.0 * n, u, c);
            } else {
                a.add(n, m, u, c);
            }
            break;
        }
        case Regime::Mixed2: {
            const double ul = s.pair.low.u, uh = s.pair.high.u;
            if (s.alg == Algorithm::HQR) {
                a.add(1.0, 10.0 * n, ul, c);
                a.add(n, m, uh, c);
            } else if (s.alg == Algorithm::BQR) {
                const double nb = std::ceil(n / double(s.r));
                a.add(nb, 10.0 * s.r, ul, c);
                a.add(n, m, uh, c);
            } else {
                a.add(s.L + 1.0, 10.0 * n, ul, c);
                a.add(n, mtop, uh, c);
                a.add(n * s.L, 2.0 * n, uh, c);
            }
            break;
        }
        case Regime::Mixed3: {
            const double ul = s.pair.low.u, uh = s.pair.high.u;
            if (s.alg == Algorithm::BQR) {
                const double nb = std::ceil(n / double(s.r));
                a.add(1.0, nb, ul, c);
                a.add(n, m, uh, c);
            } else {
                a.add(1.0, s.L + 1.0, ul, c);
                a.add(n * s.L, 2.0 * n, uh, c);
                a.add(n, mtop, uh, c);
            }
            break;
        }
        case Regime::HighThenCastdown: {
            const double ul = s.pair.low.u, uh = s.pair.high.u;
            const GammaValue gh = gamma(m, uh, c);
            a.add_const(ul);
            a.add_const(n * gh.value * (1.0 + ul));
            a.stable = gh.stable;
            break;
        }
    }
    return BoundValue{a.value, a.stable};
}

}  // namespace

BoundValue bound_r_coeff(const BoundSpec& s) { return r_coeff(s); }

double bound_r_column(const BoundSpec& s, double column_norm_a) {
    if (column_norm_a < 0.0) throw std::invalid_argument("bound_r_column: negative norm");
    return r_coeff(s).value * column_norm_a;
}

BoundValue bound_q(const BoundSpec& s) {
    const BoundValue col = r_coeff(s);
    return BoundValue{std::sqrt(double(s.n)) * col.value, col.stable};
}

std::pair<double, double> convert_to_measurables(double eps_r, double eps_q, long n) {
    if (eps_r < 0.0 || eps_q < 0.0 || n < 1)
        throw std::invalid_argument("convert_to_measurables: eps >= 0 and n >= 1 required");
    const double backward = std::sqrt(double(n)) * (eps_r + eps_q + eps_r * eps_q);
    const double orth = 2.0 * eps_q;
    return {backward, orth};
}

double mixed_dot_bound(long m, const PrecisionPair& p) {
    if (m < 1) throw std::invalid_argument("mixed_dot_bound: m >= 1 required");
    if (p.degenerate) throw std::invalid_argument("mixed_dot_bound: strict pair required");
    const double gh = m > 1 ? gamma(double(m - 1), p.high.u).value : 0.0;
    return (1.0 + p.low.u) * (1.0 + gh) - 1.0;
}

double bfma_gemm_bound(long p, const PrecisionPair& pair) {
    if (p < 1) throw std::invalid_argument("bfma_gemm_bound: p >= 1 required");
    const double gh = gamma(double(p), pair.high.u).value;
    const double ul = pair.low.u;
    return ul + gh + ul * gh;
}

double mp_tsqr3_overhead(long m, long n, int L, double ratio) {
    if (m < 1 || n < 1 || L < 1 || ratio < 1.0)
        throw std::invalid_argument("mp_tsqr3_overhead: bad arguments");
    const double mtop = std::ldexp(double(m), -L);
    return 1.0 + ratio * double(L + 1) / (double(n) * (mtop + 2.0 * double(n) * L));
}

std::vector<FeasibilityCell> feasibility_map(FeasScheme scheme, int L, std::span<const long> ms,
                                             std::span<const long> ns, const FpFormat& prec,
                                             int c) {
    if (scheme == FeasScheme::TSQR && L < 1)
        throw std::invalid_argument("feasibility_map: TSQR needs L >= 1");
    std::vector<FeasibilityCell> cells;
    cells.reserve(ms.size() * ns.size());
    for (long m : ms) {
        for (long n : ns) {
            FeasibilityCell cell{m, n, false, 0.0};
            const bool shape_ok =
                m >= n && n >= 1 &&
                (scheme == FeasScheme::HQR || double(m) >= std::ldexp(double(n), L));
            if (shape_ok) {
                BoundSpec s;
                s.alg = scheme == FeasScheme::HQR ? Algorithm::HQR : Algorithm::TSQR;
                s.regime = Regime::Uniform;
                s.m = m;
                s.n = n;
                s.L = L;
                s.prec = prec;
                s.c = c;
                try {
                    const BoundValue b = bound_q(s);
                    if (b.value < 1.0) {
                        cell.feasible = true;
                        cell.log10_bound = std::log10(b.value);
                    }
                } catch (const BoundDomainError&) {
                    // cku >= 1: bound undefined, cell stays infeasible
                }
            }
            cells.push_back(cell);
        }
    }
    return cells;
}

void write_feasibility_grid(std::ostream& os, const std::vector<FeasibilityCell>& cells) {
    os << "m n value\n";
    char buf[64];
    for (const FeasibilityCell& c : cells) {
        if (c.feasible) {
            std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", c.m, c.n, c.log10_bound);
        } else {
            std::snprintf(buf, sizeof buf, "%ld %ld inf\n", c.m, c.n);
        }
        os << buf;
    }
}

}  // namespace mpqr::bounds
