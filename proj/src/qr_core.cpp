#include "mpqr/qr_core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mpqr {

RankDeficientError::RankDeficientError(int col)
    : MpqrError("rank deficiency detected at column " + std::to_string(col)), column(col) {}

namespace {

void require_level2_ctx(const ArithmeticContext& ctx) {
    if (ctx.mode() == ArithMode::BlockFMA)
        throw std::invalid_argument(
            "qr_core: BlockFMA contexts drive GEMM-level composition (see qr_mixed); "
            "use Uniform or MixedInner here");
}

// C = A (m x k) * B (k x n), every entry accumulated like ctx.dot: uniform
// mode rounds each product and each add in the working format, mixed mode
// keeps exact products with high-precision sums and casts down once. Column
// sweeps over A keep the per-entry operation order identical to a row dot.
Mat ctx_gemm(const Mat& A, const Mat& B, const ArithmeticContext& ctx) {
    const int m = A.rows(), kk = A.cols(), n = B.cols();
    Mat C(m, n);
    const bool mixed = ctx.mode() == ArithMode::MixedInner;
    const FpFormat& w = ctx.working();
    const FpFormat& h = mixed ? ctx.pair().high : w;
    const RoundEnv& env = ctx.env();
    std::vector<double> acc(m);
    for (int j = 0; j < n; ++j) {
        const double* bj = B.col(j);
        const double* a0 = A.col(0);
        if (mixed) {
            for (int i = 0; i < m; ++i) acc[i] = a0[i] * bj[0];
            for (int p = 1; p < kk; ++p) {
                const double* ap = A.col(p);
                const double bpj = bj[p];
                if (h.native) {
                    for (int i = 0; i < m; ++i) acc[i] += ap[i] * bpj;
                } else {
                    for (int i = 0; i < m; ++i) acc[i] = round_value(acc[i] + ap[i] * bpj, h, env);
                }
            }
            double* cj = C.col(j);
            for (int i = 0; i < m; ++i) cj[i] = round_value(acc[i], w, env);
        } else {
            for (int i = 0; i < m; ++i) acc[i] = round_value(a0[i] * bj[0], w, env);
            for (int p = 1; p < kk; ++p) {
                const double* ap = A.col(p);
                const double bpj = bj[p];
                if (w.native) {
                    for (int i = 0; i < m; ++i) acc[i] += ap[i] * bpj;
                } else {
                    for (int i = 0; i < m; ++i)
                        acc[i] = round_value(acc[i] + round_value(ap[i] * bpj, w, env), w, env);
                }
            }
            double* cj = C.col(j);
            for (int i = 0; i < m; ++i) cj[i] = acc[i];
        }
    }
    return C;
}

// T = A^T B with every entry a ctx inner product over contiguous columns.
Mat ctx_gemm_at_b(const Mat& A, const Mat& B, const ArithmeticContext& ctx) {
    const int k = A.cols(), n = B.cols(), m = A.rows();
    Mat T(k, n);
    for (int j = 0; j < n; ++j)
        for (int p = 0; p < k; ++p) T(p, j) = ctx.dot(A.col(p), B.col(j), m);
    return T;
}

void apply_reflectors_in_reverse(const HouseholderFactors& f, Mat& M,
                                 const ArithmeticContext& ctx) {
    const int rows = f.V.rows(), nref = int(f.beta.size());
    for (int i = nref - 1; i >= 0; --i) {
        const int len = rows - i;
        const double* v = f.V.col(i) + i;
        for (int j = 0; j < M.cols(); ++j) apply_hh_col(v, len, f.beta[i], M.col(j) + i, ctx);
    }
}

}  // namespace

Householder hhvec(std::span<const double> x, const ArithmeticContext& ctx) {
    require_level2_ctx(ctx);
    const int m = int(x.size());
    if (m < 1) throw std::invalid_argument("hhvec: empty vector");
    const double norm2 = ctx.dot(x.data(), x.data(), m);
    const double norm = ctx.sqrt(norm2);
    if (norm == 0.0) throw ZeroVectorError("hhvec: vector norm rounds to zero");
    // sign(0) := +1, so sigma = -norm when x[0] = 0 (including -0.0)
    const double sigma = x[0] >= 0.0 ? -norm : norm;
    const double v1 = ctx.sub(x[0], sigma);  // cancellation-free by the sign choice
    Householder h;
    h.sigma = sigma;
    h.beta = -ctx.div(v1, sigma);
    h.v.resize(m);
    h.v[0] = 1.0;
    for (int i = 1; i < m; ++i) h.v[i] = ctx.div(x[i], v1);
    return h;
}

void apply_hh_col(const double* v, int len, double beta, double* col,
                  const ArithmeticContext& ctx) {
    if (beta == 0.0) return;  // identity reflector
    const double s = ctx.dot(v, col, len);
    const double u = ctx.mul(beta, s);
    for (int i = 0; i < len; ++i) col[i] = ctx.sub(col[i], ctx.mul(u, v[i]));
}

Mat apply_hh(std::span<const double> v, double beta, const Mat& B, const ArithmeticContext& ctx) {
    require_level2_ctx(ctx);
    if (int(v.size()) != B.rows()) throw std::invalid_argument("apply_hh: v length != B.rows()");
    Mat Y = B;
    for (int j = 0; j < Y.cols(); ++j) apply_hh_col(v.data(), int(v.size()), beta, Y.col(j), ctx);
    return Y;
}

HouseholderFactors hqr(const Mat& A, const ArithmeticContext& ctx) {
    require_level2_ctx(ctx);
    const int m = A.rows(), n = A.cols();
    if (m < n || n < 1) throw std::invalid_argument("hqr: need m >= n >= 1");
    Mat W = A;
    HouseholderFactors f;
    f.V = Mat(m, n);
    f.beta.resize(n);
    for (int i = 0; i < n; ++i) {
        const int len = m - i;
        Householder h;
        try {
            h = hhvec(std::span<const double>(W.col(i) + i, size_t(len)), ctx);
        } catch (const ZeroVectorError&) {
            throw RankDeficientError(i);
        }
        for (int k = 0; k < len; ++k) f.V(i + k, i) = h.v[k];
        f.beta[i] = h.beta;
        W(i, i) = h.sigma;
        for (int k = i + 1; k < m; ++k) W(k, i) = 0.0;
        for (int j = i + 1; j < n; ++j) apply_hh_col(h.v.data(), len, h.beta, W.col(j) + i, ctx);
    }
    f.R = W.block(0, 0, n, n);
    return f;
}

Mat build_q(const HouseholderFactors& f, bool thin, const ArithmeticContext& ctx) {
    require_level2_ctx(ctx);
    const int m = f.V.rows(), n = f.V.cols();
    Mat Q = Mat::identity(m, thin ? n : m);
    for (int i = n - 1; i >= 0; --i) {
        const int len = m - i;
        const double* v = f.V.col(i) + i;
        // columns j < i are still untouched identity columns with zero overlap
        for (int j = i; j < Q.cols(); ++j) apply_hh_col(v, len, f.beta[i], Q.col(j) + i, ctx);
    }
    return Q;
}

WYRep build_wy(const Mat& V, std::span<const double> beta, const ArithmeticContext& ctx) {
    require_level2_ctx(ctx);
    const int m = V.rows(), r = V.cols();
    if (int(beta.size()) != r) throw std::invalid_argument("build_wy: beta size != V.cols()");
    if (r < 1 || m < r) throw std::invalid_argument("build_wy: need m >= r >= 1");
    WYRep wy;
    wy.Y = V;
    wy.W = Mat(m, r);
    for (int i = 0; i < m; ++i) wy.W(i, 0) = ctx.mul(beta[0], V(i, 0));
    if (r == 1) return wy;
    std::vector<double> t(r);
    for (int j = 1; j < r; ++j) {
        for (int p = 0; p < j; ++p) t[p] = ctx.dot(V.col(p), V.col(j), m);
        // s = W[:, 0:j] * t, the partially built rank update applied to v_j
        const Mat Wj = wy.W.block(0, 0, m, j);
        Mat tm(j, 1);
        for (int p = 0; p < j; ++p) tm(p, 0) = t[p];
        const Mat s = ctx_gemm(Wj, tm, ctx);
        for (int i = 0; i < m; ++i)
            wy.W(i, j) = ctx.mul(beta[j], ctx.sub(V(i, j), s(i, 0)));
    }
    return wy;
}

QrResult bqr(const Mat& A, int r, const ArithmeticContext& ctx) {
    require_level2_ctx(ctx);
    const int m = A.rows(), n = A.cols();
    if (m < n || n < 1) throw std::invalid_argument("bqr: need m >= n >= 1");
    if (r < 1 || r > n) throw std::invalid_argument("bqr: need 1 <= r <= n");
    Mat W = A;
    const int nblocks = (n + r - 1) / r;
    std::vector<Mat> vs(nblocks), ws(nblocks);
    for (int k = 0; k < nblocks; ++k) {
        const int o = k * r;
        const int w = std::min(r, n - o);
        const Mat panel = W.block(o, o, m - o, w);
        HouseholderFactors f;
        try {
            f = hqr(panel, ctx);
        } catch (const RankDeficientError& e) {
            throw RankDeficientError(o + e.column);
        }
        for (int j = 0; j < w; ++j) {
            for (int i = 0; i < w; ++i) W(o + i, o + j) = f.R(i, j);
            for (int i = o + w; i < m; ++i) W(i, o + j) = 0.0;
        }
        WYRep wy = build_wy(f.V, f.beta, ctx);
        if (o + w < n) {
            Mat B = W.block(o, o + w, m - o, n - o - w);
            const Mat T = ctx_gemm_at_b(wy.W, B, ctx);  // W^T B
            const Mat U = ctx_gemm(wy.Y, T, ctx);       // V (W^T B)
            for (int j = 0; j < B.cols(); ++j)
                for (int i = 0; i < B.rows(); ++i) B(i, j) = ctx.sub(B(i, j), U(i, j));
            W.set_block(o, o + w, B);
        }
        vs[k] = std::move(wy.Y);
        ws[k] = std::move(wy.W);
    }
    QrResult out;
    out.R = W.block(0, 0, n, n);
    out.Q = Mat::identity(m, n);
    for (int k = nblocks - 1; k >= 0; --k) {
        const int o = k * r;
        Mat Qs = out.Q.block(o, o, m - o, n - o);
        const Mat T = ctx_gemm_at_b(vs[k], Qs, ctx);  // V^T Q
        const Mat U = ctx_gemm(ws[k], T, ctx);        // W (V^T Q)
        for (int j = 0; j < Qs.cols(); ++j)
            for (int i = 0; i < Qs.rows(); ++i) Qs(i, j) = ctx.sub(Qs(i, j), U(i, j));
        out.Q.set_block(o, o, Qs);
    }
    return out;
}

int tsqr_alpha(int j) { return (j + 1) / 2; }
int tsqr_phi(int j) { return 2 + j - 2 * tsqr_alpha(j); }

TsqrTree tsqr_factor(const Mat& A, int L, const ArithmeticContext& ctx) {
    require_level2_ctx(ctx);
    const int m = A.rows(), n = A.cols();
    if (n < 1) throw std::invalid_argument("tsqr: need n >= 1");
    if (L < 1) throw InvalidLevelsError("tsqr: need L >= 1");
    if (L > 30 || double(m) < std::ldexp(double(n), L))
        throw InvalidLevelsError("tsqr: need m >= 2^L * n");
    const int nb = 1 << L;
    TsqrTree tree;
    tree.L = L;
    tree.levels.resize(L + 1);
    tree.block_rows.resize(nb);
    const int base = m / nb, rem = m % nb;
    int row = 0;
    tree.levels[0].resize(nb);
    for (int j = 0; j < nb; ++j) {
        const int h = base + (j < rem ? 1 : 0);
        tree.block_rows[j] = h;
        tree.levels[0][j] = hqr(A.block(row, 0, h, n), ctx);
        row += h;
    }
    for (int i = 1; i <= L; ++i) {
        const int cnt = 1 << (L - i);
        tree.levels[i].resize(cnt);
        for (int j = 0; j < cnt; ++j) {
            Mat S(2 * n, n);
            S.set_block(0, 0, tree.levels[i - 1][2 * j].R);
            S.set_block(n, 0, tree.levels[i - 1][2 * j + 1].R);
            tree.levels[i][j] = hqr(S, ctx);
        }
    }
    return tree;
}

QrResult tsqr(const Mat& A, int L, const ArithmeticContext& ctx) {
    const int m = A.rows(), n = A.cols();
    const TsqrTree tree = tsqr_factor(A, L, ctx);
    QrResult out;
    out.R = tree.levels[L][0].R;

    // Q reconstruction: start at the root and push partitioned factors down,
    // padding each half with zeros to the receiving block's height.
    std::vector<Mat> qs(1);
    qs[0] = build_q(tree.levels[L][0], true, ctx);
    for (int i = L - 1; i >= 0; --i) {
        const int cnt = 1 << (L - i);
        std::vector<Mat> next(cnt);
        for (int j = 1; j <= cnt; ++j) {
            const int a = tsqr_alpha(j), phi = tsqr_phi(j);
            const int rows = i == 0 ? tree.block_rows[j - 1] : 2 * n;
            Mat M(rows, n);
            M.set_block(0, 0, qs[a - 1].block(phi == 1 ? 0 : n, 0, n, n));
            apply_reflectors_in_reverse(tree.levels[i][j - 1], M, ctx);
            next[j - 1] = std::move(M);
        }
        qs = std::move(next);
    }
    out.Q = Mat(m, n);
    int row = 0;
    for (int j = 0; j < (1 << L); ++j) {
        out.Q.set_block(row, 0, qs[j]);
        row += tree.block_rows[j];
    }
    return out;
}

}  // namespace mpqr
