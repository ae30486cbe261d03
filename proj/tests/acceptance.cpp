// Acceptance suite: runs every verification criterion end to end at its
// stated tolerance and prints one PASS/FAIL line per criterion. Exit status
// is the number of failed criteria. An optional argv list of criterion
// numbers restricts the run.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mpqr/harness.hpp"

using namespace mpqr;
using harness::ErrorReport;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

char buf_global[512];

std::string fmt(const char* f, ...) {
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf_global, sizeof buf_global, f, ap);
    va_end(ap);
    return buf_global;
}

struct Row {
    std::string alg, regime;
    int m = 0, n = 0, r = 0, L = 0;
    double alpha = 0.0;
    unsigned long long seed = 0;
    double backward = 0.0, orth = 0.0, bb = 0.0, bo = 0.0;
    long long overflows = 0;
};

std::vector<Row> parse_csv(const std::string& csv) {
    std::vector<Row> rows;
    std::stringstream ss(csv);
    std::string line;
    std::getline(ss, line);  // header
    while (std::getline(ss, line)) {
        std::stringstream ls(line);
        std::string cell;
        std::vector<std::string> f;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 13) continue;
        Row r;
        r.alg = f[0];
        r.regime = f[1];
        r.m = std::stoi(f[2]);
        r.n = std::stoi(f[3]);
        r.r = std::stoi(f[4]);
        r.L = std::stoi(f[5]);
        r.alpha = std::stod(f[6]);
        r.seed = std::stoull(f[7]);
        r.backward = std::stod(f[8]);
        r.orth = std::stod(f[9]);
        r.bb = std::stod(f[10]);
        r.bo = std::stod(f[11]);
        r.overflows = std::stoll(f[12]);
        rows.push_back(r);
    }
    return rows;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

Mat random_fp16(int m, int n, std::uint64_t seed) {
    harness::Rng rng(seed);
    Mat a(m, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i) a(i, j) = rng.normal();
    return castdown(a, fp16());
}

Mat sign_normalize(const Mat& R) {
    Mat S = R;
    for (int i = 0; i < S.rows(); ++i)
        if (S(i, i) < 0.0)
            for (int j = 0; j < S.cols(); ++j) S(i, j) = -S(i, j);
    return S;
}

double frob(const Mat& a) {
    double s = 0.0;
    for (int j = 0; j < a.cols(); ++j)
        for (int i = 0; i < a.rows(); ++i) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

double rel_diff(const Mat& a, const Mat& b) {
    double s = 0.0;
    for (int j = 0; j < a.cols(); ++j)
        for (int i = 0; i < a.rows(); ++i) s += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
    return std::sqrt(s) / frob(b);
}

// rows from the sweep criteria, shared with the bound-compliance check
std::vector<Row> g_sweep_rows;

// ---------------------------------------------------------------------------

Outcome criterion1_bound_oracle() {
    bounds::BoundSpec s;
    s.alg = bounds::Algorithm::HQR;
    s.m = 1l << 15;
    s.n = 1l << 6;
    s.prec = fp32();
    const double hqr = bounds::bound_q(s).value;
    s.alg = bounds::Algorithm::TSQR;
    s.L = 8;
    const double tsqr = bounds::bound_q(s).value;
    const bool ok = std::fabs(hqr - 1.002) <= 1e-3 && std::fabs(tsqr - 3.516e-2) <= 1e-4;
    return {ok, fmt("uniform HQR %.6g (want 1.002 +- 1e-3), uniform TSQR L=8 %.6g "
                    "(want 3.516e-2 +- 1e-4)",
                    hqr, tsqr)};
}

Outcome criterion2_dot_experiment() {
    ::setenv("MPQR_THREADS", "1", 1);
    const auto t0 = std::chrono::steady_clock::now();
    harness::DotExperimentConfig cfg;
    cfg.count = 100000;
    cfg.m = 1024;
    cfg.seed = 20240801;
    std::string csv;
    cfg.dist = harness::MatrixKind::GaussianStd;
    const harness::DotSummary sn = harness::run_dot_experiment(cfg, csv);
    cfg.dist = harness::MatrixKind::Uniform01;
    const harness::DotSummary su = harness::run_dot_experiment(cfg, csv);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ::unsetenv("MPQR_THREADS");
    const bool ok = sn.mean >= 5e-5 && sn.mean <= 5e-4 && su.mean >= 2e-3 && su.mean <= 2e-2 &&
                    sn.max < 5e-2 && su.max < 5e-2 && sn.overflow_trials == 0 &&
                    su.overflow_trials == 0 && secs < 300.0;
    return {ok, fmt("normal mean %.4g (want [5e-5, 5e-4]) max %.4g, uniform mean %.4g "
                    "(want [2e-3, 2e-2]) max %.4g, %.1fs single-threaded (limit 300s)",
                    sn.mean, sn.max, su.mean, su.max, secs)};
}

Outcome criterion3_mixed_dot() {
    const PrecisionPair pair = PrecisionPair::of(fp16(), fp32());
    const RoundEnv env;
    harness::Rng rng(333);
    long bound_violations = 0;
    for (const int m : {16, 1024, 8192, 32768}) {
        const double bound = bounds::mixed_dot_bound(m, pair);
        std::vector<double> x(m), y(m);
        for (int trial = 0; trial < 1000; ++trial) {
            for (int k = 0; k < m; ++k) {
                x[k] = round_value(rng.normal(), fp16(), env);
                y[k] = round_value(rng.normal(), fp16(), env);
            }
            long double exact = 0.0L, absdot = 0.0L;
            for (int k = 0; k < m; ++k) {
                exact += static_cast<long double>(x[k]) * y[k];
                absdot += std::fabs(static_cast<long double>(x[k]) * y[k]);
            }
            const double fl = dot_mixed_raw(x.data(), y.data(), m, pair, env);
            if (std::fabs(double(exact - fl)) > bound * double(absdot)) ++bound_violations;
        }
    }
    // low-product exactness over 10^6 random operand pairs (all finite bit patterns)
    std::mt19937_64 g(777);
    long exact_violations = 0;
    const RoundEnv sat{OverflowPolicy::Saturate, nullptr};
    for (long i = 0; i < 1000000; ++i) {
        std::uint16_t ha, hb;
        do { ha = std::uint16_t(g() & 0xFFFF); } while ((ha & 0x7C00) == 0x7C00);
        do { hb = std::uint16_t(g() & 0xFFFF); } while ((hb & 0x7C00) == 0x7C00);
        // decode the half bit patterns through the format itself
        const int ea = (ha >> 10) & 0x1F, eb = (hb >> 10) & 0x1F;
        const double va = (ea ? std::ldexp(1024.0 + (ha & 1023), ea - 15 - 10)
                              : std::ldexp(double(ha & 1023), -24)) *
                          ((ha & 0x8000) ? -1.0 : 1.0);
        const double vb = (eb ? std::ldexp(1024.0 + (hb & 1023), eb - 15 - 10)
                              : std::ldexp(double(hb & 1023), -24)) *
                          ((hb & 0x8000) ? -1.0 : 1.0);
        const double p = va * vb;
        if (std::fabs(p) <= fp32().max_finite && round_value(p, fp32(), sat) != p)
            ++exact_violations;
    }
    const bool ok = bound_violations == 0 && exact_violations == 0;
    return {ok, fmt("bound violations %ld / 4000 trials (m in {16,1024,8192,32768}), "
                    "product-exactness violations %ld / 1e6",
                    bound_violations, exact_violations)};
}

Outcome criterion4_qr_suite() {
    const ArithmeticContext ctx = ArithmeticContext::uniform(fp64());
    double worst_backward = 0.0, worst_orth = 0.0, worst_agree = 0.0;
    int runs = 0, skipped = 0;
    for (const auto [m, n] : {std::array<int, 2>{200, 50}, std::array<int, 2>{512, 64}}) {
        for (const std::uint64_t seed : {11ull, 12ull}) {
            harness::MatrixSpec ms{harness::MatrixKind::GaussianStd, m, n, seed, 0.0, fp64()};
            const Mat a = harness::gen_matrix_fp64(ms);
            const HouseholderFactors fh = hqr(a, ctx);
            const Mat rh = sign_normalize(fh.R);
            std::vector<QrResult> results;
            results.push_back(QrResult{build_q(fh, true, ctx), fh.R});
            for (const int r : {1, 7, 10, n}) results.push_back(bqr(a, r, ctx));
            for (const int L : {1, 2, 3}) {
                if (m >= (n << L)) results.push_back(tsqr(a, L, ctx));
                else ++skipped;  // m < 2^L n is outside tsqr's domain
            }
            bounds::BoundSpec s;
            s.alg = bounds::Algorithm::HQR;
            s.m = m;
            s.n = n;
            s.prec = fp64();
            for (const QrResult& qr : results) {
                const ErrorReport rep = harness::measure(a, qr.Q, qr.R, s);
                worst_backward = std::max(worst_backward, rep.backward);
                worst_orth = std::max(worst_orth, rep.orth);
                worst_agree = std::max(worst_agree, rel_diff(sign_normalize(qr.R), rh));
                ++runs;
            }
        }
    }
    const bool ok = worst_backward <= 1e-13 && worst_orth <= 1e-13 && worst_agree <= 1e-12;
    return {ok, fmt("%d factorizations (skipped %d illegal tsqr shapes): worst backward %.3g "
                    "(<=1e-13), worst orth %.3g (<=1e-13), worst R disagreement %.3g (<=1e-12)",
                    runs, skipped, worst_backward, worst_orth, worst_agree)};
}

Outcome criterion5_wy_oracle() {
    const ArithmeticContext ctx = ArithmeticContext::uniform(fp64());
    double worst_ratio = 0.0;
    for (const auto [m, r] : {std::array<int, 2>{8, 2}, std::array<int, 2>{32, 5},
                              std::array<int, 2>{64, 16}, std::array<int, 2>{128, 16},
                              std::array<int, 2>{128, 3}}) {
        for (const std::uint64_t seed : {21ull, 22ull}) {
            harness::MatrixSpec ms{harness::MatrixKind::GaussianStd, m, r, seed, 0.0, fp64()};
            const Mat a = harness::gen_matrix_fp64(ms);
            const HouseholderFactors f = hqr(a, ctx);
            const WYRep wy = build_wy(f.V, f.beta, ctx);
            // brute-force dense product of the explicit reflector matrices
            Mat X = Mat::identity(m, m);
            for (int k = 0; k < r; ++k) {
                Mat P = Mat::identity(m, m);
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < m; ++j) P(i, j) -= f.beta[k] * f.V(i, k) * f.V(j, k);
                Mat Y(m, m);
                for (int j = 0; j < m; ++j)
                    for (int i = 0; i < m; ++i) {
                        double s = 0.0;
                        for (int p = 0; p < m; ++p) s += X(i, p) * P(p, j);
                        Y(i, j) = s;
                    }
                X = Y;
            }
            const double tol = double(r) * m * 1e-15;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) {
                    double w = (i == j ? 1.0 : 0.0);
                    for (int k = 0; k < r; ++k) w -= wy.W(i, k) * wy.Y(j, k);
                    worst_ratio = std::max(worst_ratio, std::fabs(w - X(i, j)) / tol);
                }
        }
    }
    return {worst_ratio <= 1.0,
            fmt("worst componentwise |(I - W Y^T) - P_1..P_r| at %.3g of the r*m*1e-15 budget",
                worst_ratio)};
}

Outcome criterion6_bfma_bound() {
    const PrecisionPair pair = PrecisionPair::of(fp16(), fp32());
    const double bound = bounds::bfma_gemm_bound(64, pair);
    harness::Rng rng(606);
    const RoundEnv env;
    long violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        Mat x(64, 64), y(64, 64);
        for (int j = 0; j < 64; ++j)
            for (int i = 0; i < 64; ++i) {
                x(i, j) = round_value(rng.normal(), fp16(), env);
                y(i, j) = round_value(rng.normal(), fp16(), env);
            }
        const Mat z = bfma_gemm(x, y, pair, env);
        for (int j = 0; j < 64; ++j)
            for (int i = 0; i < 64; ++i) {
                long double exact = 0.0L, absdot = 0.0L;
                for (int k = 0; k < 64; ++k) {
                    const long double p = static_cast<long double>(x(i, k)) * y(k, j);
                    exact += p;
                    absdot += std::fabs(p);
                }
                if (std::fabs(double(exact - z(i, j))) > bound * double(absdot)) ++violations;
            }
    }
    return {violations == 0,
            fmt("componentwise bound violations %ld over 1000 random 64x64x64 products "
                "(bound coefficient %.4g)",
                violations, bound)};
}

Outcome criterion7_size_sweep() {
    const auto t0 = std::chrono::steady_clock::now();
    harness::SizeSweepConfig cfg;
    cfg.m_list = {1000, 2000, 4000};
    cfg.n = 100;
    cfg.r = 36;
    cfg.L = 2;
    cfg.seeds = 10;
    cfg.seed = 20240802;
    const std::vector<Row> rows = parse_csv(harness::run_size_sweep(cfg));
    g_sweep_rows.insert(g_sweep_rows.end(), rows.begin(), rows.end());
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    bool ordered = true;
    std::string msg;
    for (const int m : {1000, 2000, 4000}) {
        const auto med = [&](const std::string& alg, const std::string& regime) {
            std::vector<double> v;
            for (const Row& r : rows)
                if (r.m == m && r.alg == alg && r.regime == regime && r.overflows == 0)
                    v.push_back(r.backward);
            return median(v);
        };
        double uni = 0.0, m3 = 1e300, m3hi = 0.0, m2 = 1e300;
        for (const char* alg : {"hqr", "bqr", "tsqr"}) uni = std::max(uni, med(alg, "uniform-fp32"));
        for (const char* alg : {"bqr", "tsqr"}) {
            m3 = std::min(m3, med(alg, "mixed3"));
            m3hi = std::max(m3hi, med(alg, "mixed3"));
        }
        for (const char* alg : {"hqr", "bqr", "tsqr"}) m2 = std::min(m2, med(alg, "mixed2"));
        const bool ok = uni < m3 && m3hi < m2;
        ordered = ordered && ok;
        msg += fmt("m=%d: fp32 %.2g < {mp_bqr3, mp_tsqr3} [%.2g, %.2g] < mixed2 %.2g %s; ", m,
                   uni, m3, m3hi, m2, ok ? "ok" : "VIOLATED");
    }
    const bool ok = ordered && secs < 900.0;
    return {ok, msg + fmt("%.0fs (limit 900s)", secs)};
}

Outcome criterion8_block_sweep() {
    harness::BlockSweepConfig cfg;
    cfg.m = 512;
    cfg.n = 64;
    cfg.r_list = {2, 4, 8, 16, 32, 64};
    cfg.seeds = 10;
    cfg.seed = 20240803;
    const std::vector<Row> rows = parse_csv(harness::run_block_sweep(cfg));
    g_sweep_rows.insert(g_sweep_rows.end(), rows.begin(), rows.end());

    std::vector<double> med_by_r;
    double worst_uni = 0.0, worst_m3 = 0.0;
    for (const int r : cfg.r_list) {
        std::vector<double> m3;
        for (const Row& row : rows) {
            if (row.r != r) continue;
            if (row.regime == "mixed3") {
                m3.push_back(row.backward);
                worst_m3 = std::max(worst_m3, row.backward);
            } else {
                worst_uni = std::max(worst_uni, row.backward);
            }
        }
        med_by_r.push_back(median(m3));
    }
    // Spearman rank correlation between r and the mp_bqr3 median
    const int k = int(med_by_r.size());
    std::vector<int> rank(k);
    for (int i = 0; i < k; ++i) {
        int rk = 0;
        for (int j = 0; j < k; ++j)
            if (med_by_r[j] < med_by_r[i] || (med_by_r[j] == med_by_r[i] && j < i)) ++rk;
        rank[i] = rk;
    }
    double d2 = 0.0;
    for (int i = 0; i < k; ++i) d2 += (rank[i] - i) * (rank[i] - i);
    const double spearman = 1.0 - 6.0 * d2 / (k * (double(k) * k - 1.0));

    const bool ok = spearman < 0.0 && worst_uni <= 100.0 * fp32().u && worst_m3 <= 100.0 * fp16().u;
    return {ok, fmt("Spearman(r, median mp_bqr3 backward) = %.3f (<0), fp32 bqr worst %.3g "
                    "(<= %.3g), mp_bqr3 worst %.3g (<= %.3g)",
                    spearman, worst_uni, 100.0 * fp32().u, worst_m3, 100.0 * fp16().u)};
}

Outcome criterion9_cond_sweep() {
    const auto t0 = std::chrono::steady_clock::now();
    harness::CondSweepConfig cfg;
    cfg.m = 1000;
    cfg.n = 50;
    cfg.alpha_list = {1e-3, 1e-2, 1e-1, 1.0};
    cfg.samples = 10;
    cfg.L_list = {1, 2, 3};
    cfg.seed = 20240804;
    const std::vector<Row> rows = parse_csv(harness::run_cond_sweep(cfg));
    g_sweep_rows.insert(g_sweep_rows.end(), rows.begin(), rows.end());
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // crossover at the largest alpha: best of L in {1,2} beats mp_hqr2 per seed
    std::map<unsigned long long, double> hqr_err, tsqr_best;
    for (const Row& r : rows) {
        if (r.alpha != 1.0) continue;
        if (r.alg == "hqr") hqr_err[r.seed] = r.backward;
        if (r.alg == "tsqr" && (r.L == 1 || r.L == 2)) {
            auto it = tsqr_best.find(r.seed);
            if (it == tsqr_best.end() || r.backward < it->second) tsqr_best[r.seed] = r.backward;
        }
    }
    int wins = 0, total = 0;
    for (const auto& [seed, err] : hqr_err) {
        ++total;
        if (tsqr_best.count(seed) && tsqr_best[seed] < err) ++wins;
    }

    // suite-wide bound compliance over every sweep row gathered so far
    long applicable = 0, violations = 0;
    for (const Row& r : g_sweep_rows) {
        if (r.overflows != 0 || std::isnan(r.backward)) continue;
        if (r.bb < 1.0) {
            ++applicable;
            if (r.backward > r.bb) ++violations;
        }
        if (r.bo < 1.0) {
            ++applicable;
            if (r.orth > r.bo) ++violations;
        }
    }
    const bool ok = total == 10 && wins > 5 && violations == 0 && secs < 600.0;
    return {ok, fmt("mpTSQR2 (L in {1,2}) beats mpHQR2 on %d/%d seeds at alpha=1 (need >5); "
                    "bound compliance %ld checks, %ld violations; %.0fs (limit 600s)",
                    wins, total, applicable, violations, secs)};
}

Outcome criterion10_determinism() {
    const auto run_all = [&]() -> std::string {
        std::string all;
        harness::DotExperimentConfig dc;
        dc.count = 200;
        dc.m = 64;
        dc.seed = 5;
        std::string dot_csv;
        (void)harness::run_dot_experiment(dc, dot_csv);
        all += dot_csv;
        harness::SizeSweepConfig sc;
        sc.m_list = {128};
        sc.n = 16;
        sc.r = 5;
        sc.L = 2;
        sc.seeds = 2;
        sc.seed = 6;
        all += harness::run_size_sweep(sc);
        harness::BlockSweepConfig bc;
        bc.m = 64;
        bc.n = 16;
        bc.r_list = {2, 8};
        bc.seeds = 2;
        bc.seed = 7;
        all += harness::run_block_sweep(bc);
        harness::CondSweepConfig cc;
        cc.m = 128;
        cc.n = 8;
        cc.alpha_list = {1e-2, 1.0};
        cc.samples = 2;
        cc.L_list = {1};
        cc.seed = 8;
        all += harness::run_cond_sweep(cc);
        return all;
    };
    ::setenv("MPQR_THREADS", "1", 1);
    const std::string one = run_all();
    ::setenv("MPQR_THREADS", "8", 1);
    const std::string eight = run_all();
    const std::string eight2 = run_all();
    ::unsetenv("MPQR_THREADS");
    const bool ok = one == eight && eight == eight2;
    return {ok, fmt("4 experiment CSVs, %zu bytes: 1-thread vs 8-thread byte-identical: %s, "
                    "rerun byte-identical: %s",
                    one.size(), one == eight ? "yes" : "NO", eight == eight2 ? "yes" : "NO")};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> filter;
    for (int i = 1; i < argc; ++i) filter.insert(std::atoi(argv[i]));
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"bound oracle, fp32 worked numbers", criterion1_bound_oracle},
        {"dot-product experiment statistics", criterion2_dot_experiment},
        {"mixed dot bound and product exactness", criterion3_mixed_dot},
        {"fp64 QR correctness suite", criterion4_qr_suite},
        {"WY brute-force oracle", criterion5_wy_oracle},
        {"block-FMA GEMM componentwise bound", criterion6_bfma_bound},
        {"size-sweep cluster ordering", criterion7_size_sweep},
        {"block-sweep trend", criterion8_block_sweep},
        {"condition-sweep crossover and bound compliance", criterion9_cond_sweep},
        {"experiment determinism across thread counts", criterion10_determinism},
    };
    int failures = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        if (!filter.empty() && !filter.count(int(i + 1))) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %2zu (%s): %s [%.1fs]\n", out.pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].first.c_str(), out.detail.c_str(), secs);
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    return failures;
}
