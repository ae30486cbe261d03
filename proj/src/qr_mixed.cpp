#include "mpqr/qr_mixed.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mpqr {

namespace {

// B <- B - W (Y^T B) evaluated as two block-FMA products with the intermediate
// cast down (bfma_gemm outputs pair.low), then a low-precision subtraction.
void wy_update_bfma(Mat& B, const Mat& Wl, const Mat& Yl, const PrecisionPair& pair,
                    const RoundEnv& env) {
    const Mat T = bfma_gemm(Yl.transposed(), B, pair, env);
    const Mat U = bfma_gemm(Wl, T, pair, env);
    for (int j = 0; j < B.cols(); ++j)
        for (int i = 0; i < B.rows(); ++i)
            B(i, j) = round_value(B(i, j) - U(i, j), pair.low, env);
}

}  // namespace

QrResult hqr_high_castdown(const Mat& A, const PrecisionPair& pair, RoundEnv env) {
    const ArithmeticContext high = ArithmeticContext::uniform(pair.high, env);
    const HouseholderFactors f = hqr(A, high);  // casting up is exact
    QrResult out;
    out.Q = castdown(build_q(f, true, high), pair.low, env);
    out.R = castdown(f.R, pair.low, env);
    return out;
}

QrResult mp_hqr2(const Mat& A, const PrecisionPair& pair, RoundEnv env) {
    const ArithmeticContext ctx = ArithmeticContext::mixed_inner(pair, env);
    const HouseholderFactors f = hqr(A, ctx);
    return QrResult{build_q(f, true, ctx), f.R};
}

QrResult mp_bqr2(const Mat& A, int r, const PrecisionPair& pair, RoundEnv env) {
    return bqr(A, r, ArithmeticContext::mixed_inner(pair, env));
}

QrResult mp_tsqr2(const Mat& A, int L, const PrecisionPair& pair, RoundEnv env) {
    return tsqr(A, L, ArithmeticContext::mixed_inner(pair, env));
}

QrResult mp_bqr3(const Mat& A, int r, const PrecisionPair& pair, RoundEnv env) {
    const int m = A.rows(), n = A.cols();
    if (m < n || n < 1) throw std::invalid_argument("mp_bqr3: need m >= n >= 1");
    if (r < 1 || r > n) throw std::invalid_argument("mp_bqr3: need 1 <= r <= n");
    const ArithmeticContext high = ArithmeticContext::uniform(pair.high, env);
    Mat W = A;
    const int nblocks = (n + r - 1) / r;
    std::vector<Mat> vls(nblocks), wls(nblocks);
    for (int k = 0; k < nblocks; ++k) {
        const int o = k * r;
        const int w = std::min(r, n - o);
        HouseholderFactors f;
        try {
            f = hqr(W.block(o, o, m - o, w), high);
        } catch (const RankDeficientError& e) {
            throw RankDeficientError(o + e.column);
        }
        const Mat rl = castdown(f.R, pair.low, env);
        for (int j = 0; j < w; ++j) {
            for (int i = 0; i < w; ++i) W(o + i, o + j) = rl(i, j);
            for (int i = o + w; i < m; ++i) W(i, o + j) = 0.0;
        }
        const WYRep wy = build_wy(f.V, f.beta, high);
        vls[k] = castdown(wy.Y, pair.low, env);
        wls[k] = castdown(wy.W, pair.low, env);
        if (o + w < n) {
            Mat B = W.block(o, o + w, m - o, n - o - w);
            // R side applies X^T = I - Y W^T: roles of the factors swap
            wy_update_bfma(B, vls[k], wls[k], pair, env);
            W.set_block(o, o + w, B);
        }
    }
    QrResult out;
    out.R = W.block(0, 0, n, n);
    out.Q = Mat::identity(m, n);
    for (int k = nblocks - 1; k >= 0; --k) {
        const int o = k * r;
        Mat Qs = out.Q.block(o, o, m - o, n - o);
        wy_update_bfma(Qs, wls[k], vls[k], pair, env);
        out.Q.set_block(o, o, Qs);
    }
    return out;
}

QrResult mp_tsqr3(const Mat& A, int L, const PrecisionPair& pair, RoundEnv env) {
    const int m = A.rows(), n = A.cols();
    if (n < 1) throw std::invalid_argument("mp_tsqr3: need n >= 1");
    if (L < 1) throw InvalidLevelsError("mp_tsqr3: need L >= 1");
    if (L > 30 || double(m) < std::ldexp(double(n), L))
        throw InvalidLevelsError("mp_tsqr3: need m >= 2^L * n");
    const ArithmeticContext high = ArithmeticContext::uniform(pair.high, env);
    const int nb = 1 << L;

    struct BlockWy {
        Mat Wl, Yl;
    };
    std::vector<std::vector<BlockWy>> wys(L + 1);
    std::vector<std::vector<Mat>> rls(L + 1);
    std::vector<int> block_rows(nb);

    const int base = m / nb, rem = m % nb;
    wys[0].resize(nb);
    rls[0].resize(nb);
    int row = 0;
    for (int j = 0; j < nb; ++j) {
        const int h = base + (j < rem ? 1 : 0);
        block_rows[j] = h;
        const HouseholderFactors f = hqr(A.block(row, 0, h, n), high);
        const WYRep wy = build_wy(f.V, f.beta, high);
        wys[0][j] = BlockWy{castdown(wy.W, pair.low, env), castdown(wy.Y, pair.low, env)};
        rls[0][j] = castdown(f.R, pair.low, env);
        row += h;
    }
    for (int i = 1; i <= L; ++i) {
        const int cnt = 1 << (L - i);
        wys[i].resize(cnt);
        rls[i].resize(cnt);
        for (int j = 0; j < cnt; ++j) {
            Mat S(2 * n, n);  // low-precision stacked panels; casting up is exact
            S.set_block(0, 0, rls[i - 1][2 * j]);
            S.set_block(n, 0, rls[i - 1][2 * j + 1]);
            const HouseholderFactors f = hqr(S, high);
            const WYRep wy = build_wy(f.V, f.beta, high);
            wys[i][j] = BlockWy{castdown(wy.W, pair.low, env), castdown(wy.Y, pair.low, env)};
            rls[i][j] = castdown(f.R, pair.low, env);
        }
    }

    QrResult out;
    out.R = rls[L][0];
    std::vector<Mat> qs(1);
    {
        Mat M = Mat::identity(2 * n, n);
        wy_update_bfma(M, wys[L][0].Wl, wys[L][0].Yl, pair, env);
        qs[0] = std::move(M);
    }
    for (int i = L - 1; i >= 0; --i) {
        const int cnt = 1 << (L - i);
        std::vector<Mat> next(cnt);
        for (int j = 1; j <= cnt; ++j) {
            const int a = tsqr_alpha(j), phi = tsqr_phi(j);
            const int rows = i == 0 ? block_rows[j - 1] : 2 * n;
            Mat M(rows, n);
            M.set_block(0, 0, qs[a - 1].block(phi == 1 ? 0 : n, 0, n, n));
            wy_update_bfma(M, wys[i][j - 1].Wl, wys[i][j - 1].Yl, pair, env);
            next[j - 1] = std::move(M);
        }
        qs = std::move(next);
    }
    out.Q = Mat(m, n);
    row = 0;
    for (int j = 0; j < nb; ++j) {
        out.Q.set_block(row, 0, qs[j]);
        row += block_rows[j];
    }
    return out;
}

}  // namespace mpqr
