#include "mpqr/harness.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace mpqr::harness {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Run task(i) for i in [0, count), each filling slot i; worker threads pull
// indices from a shared counter, so the output order is index order no matter
// how work is scheduled.
template <class F>
std::vector<std::string> run_ordered(int count, F&& task) {
    std::vector<std::string> out(count);
    const int threads = std::min(thread_cap(), count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) out[i] = task(i);
        return out;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&] {
        int i;
        while ((i = next.fetch_add(1)) < count) {
            try {
                out[i] = task(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
    return out;
}

using EMat = Eigen::MatrixXd;
using EMap = Eigen::Map<const EMat>;

EMap emap(const Mat& a) { return EMap(a.data(), a.rows(), a.cols()); }

Mat from_eigen(const EMat& e) {
    Mat a(int(e.rows()), int(e.cols()));
    for (int j = 0; j < a.cols(); ++j)
        for (int i = 0; i < a.rows(); ++i) a(i, j) = e(i, j);
    return a;
}

Mat gaussian64(int m, int n, Rng& rng) {
    Mat a(m, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i) a(i, j) = rng.normal();
    return a;
}

Mat uniform64(int m, int n, Rng& rng) {
    Mat a(m, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i) a(i, j) = rng.uniform01();
    return a;
}

EMat thin_orthogonal(const Mat& g, int cols) {
    Eigen::HouseholderQR<EMat> qr(emap(g));
    return qr.householderQ() * EMat::Identity(g.rows(), cols);
}

}  // namespace

int thread_cap() {
    if (const char* env = std::getenv("MPQR_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return int(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw >= 1 ? int(hw) : 1;
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master + 0x9E3779B97F4A7C15ull * (index + 1));
}

Rng::Rng(std::uint64_t seed) : g_(splitmix64(seed)) {}

std::uint64_t Rng::next() { return g_(); }

double Rng::uniform01() { return double(g_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1;
    do {
        u1 = uniform01();
    } while (u1 == 0.0);
    const double u2 = uniform01();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi_v<double> * u2;
    spare_ = rad * std::sin(ang);
    have_spare_ = true;
    return rad * std::cos(ang);
}

Mat gen_matrix_fp64(const MatrixSpec& spec) {
    if (spec.m < 1 || spec.n < 1) throw std::invalid_argument("gen_matrix: need m, n >= 1");
    Rng rng(spec.seed);
    switch (spec.kind) {
        case MatrixKind::GaussianStd: return gaussian64(spec.m, spec.n, rng);
        case MatrixKind::Uniform01: return uniform64(spec.m, spec.n, rng);
        case MatrixKind::LogSpacedSV: {
            if (spec.n < 2) throw std::invalid_argument("gen_matrix: LogSpacedSV needs n >= 2");
            const EMat q1 = thin_orthogonal(gaussian64(spec.m, spec.n, rng), spec.n);
            const EMat q2 = thin_orthogonal(gaussian64(spec.n, spec.n, rng), spec.n);
            Eigen::VectorXd d(spec.n);
            for (int j = 0; j < spec.n; ++j) d(j) = std::pow(10.0, -3.0 * j / (spec.n - 1));
            return from_eigen(q1 * d.asDiagonal() * q2);
        }
        case MatrixKind::Conditioned: {
            if (spec.alpha < 0.0) throw std::invalid_argument("gen_matrix: alpha >= 0 required");
            const EMat qp = thin_orthogonal(uniform64(spec.m, spec.n, rng), spec.n);
            EMat c = EMat::Constant(spec.n, spec.n, spec.alpha);
            c += EMat::Identity(spec.n, spec.n);
            EMat b = qp * c;
            b /= b.norm();
            return from_eigen(b);
        }
    }
    throw std::invalid_argument("gen_matrix: unknown kind");
}

StoredMatrix gen_matrix(const MatrixSpec& spec) {
    return StoredMatrix{castdown(gen_matrix_fp64(spec), spec.storage), spec.storage};
}

ErrorReport measure(const Mat& A, const Mat& Q, const Mat& R, const bounds::BoundSpec& spec) {
    if (Q.rows() != A.rows() || Q.cols() != R.rows() || R.cols() != A.cols())
        throw std::invalid_argument("measure: nonconformal shapes");
    ErrorReport rep;
    rep.m = A.rows();
    rep.n = A.cols();
    const EMap a = emap(A), q = emap(Q), r = emap(R);
    rep.backward = (a - q * r).norm() / a.norm();
    const EMat s = q.transpose() * q - EMat::Identity(Q.cols(), Q.cols());
    Eigen::SelfAdjointEigenSolver<EMat> es(s, Eigen::EigenvaluesOnly);
    rep.orth = es.eigenvalues().cwiseAbs().maxCoeff();
    try {
        const double eps_r = bounds::bound_r_coeff(spec).value;
        const double eps_q = bounds::bound_q(spec).value;
        const auto [bb, bo] = bounds::convert_to_measurables(eps_r, eps_q, spec.n);
        rep.bound_backward = bb;
        rep.bound_orth = bo;
    } catch (const bounds::BoundDomainError&) {
        rep.bound_backward = rep.bound_orth = std::numeric_limits<double>::infinity();
    }
    return rep;
}

std::string csv_header() {
    return "alg,regime,m,n,r,L,alpha,seed,backward,orth,boundBackward,boundOrth,overflows\n";
}

std::string csv_row(const ErrorReport& r) {
    char buf[352];
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%d,%d,%d,%.17g,%llu,%.17g,%.17g,%.17g,%.17g,%lld\n",
                  r.alg.c_str(), r.regime.c_str(), r.m, r.n, r.r, r.L, r.alpha,
                  static_cast<unsigned long long>(r.seed), r.backward, r.orth, r.bound_backward,
                  r.bound_orth, r.overflows);
    return buf;
}

QrResult run_factor(const Mat& A, const FactorRequest& req, long long* overflow_count) {
    const RoundEnv env{req.policy, overflow_count};
    if (req.regime == "uniform") {
        const ArithmeticContext ctx = ArithmeticContext::uniform(req.prec, env);
        if (req.alg == "hqr") {
            const HouseholderFactors f = hqr(A, ctx);
            return QrResult{build_q(f, true, ctx), f.R};
        }
        if (req.alg == "bqr") return bqr(A, req.r, ctx);
        if (req.alg == "tsqr") return tsqr(A, req.L, ctx);
    } else if (req.regime == "mixed2") {
        if (req.alg == "hqr") return mp_hqr2(A, req.pair, env);
        if (req.alg == "bqr") return mp_bqr2(A, req.r, req.pair, env);
        if (req.alg == "tsqr") return mp_tsqr2(A, req.L, req.pair, env);
    } else if (req.regime == "mixed3") {
        if (req.alg == "hqr") return hqr_high_castdown(A, req.pair, env);
        if (req.alg == "bqr") return mp_bqr3(A, req.r, req.pair, env);
        if (req.alg == "tsqr") return mp_tsqr3(A, req.L, req.pair, env);
    } else if (req.regime == "high-castdown") {
        if (req.alg == "hqr") return hqr_high_castdown(A, req.pair, env);
        throw std::invalid_argument("run_factor: high-castdown applies to hqr");
    } else {
        throw std::invalid_argument("run_factor: unknown regime " + req.regime);
    }
    throw std::invalid_argument("run_factor: unknown algorithm " + req.alg);
}

bounds::BoundSpec bound_spec_for(const FactorRequest& req, int m, int n) {
    bounds::BoundSpec s;
    s.m = m;
    s.n = n;
    s.r = req.r;
    s.L = req.L;
    s.c = req.c;
    s.prec = req.prec;
    s.pair = req.pair;
    if (req.alg == "hqr") s.alg = bounds::Algorithm::HQR;
    else if (req.alg == "bqr") s.alg = bounds::Algorithm::BQR;
    else if (req.alg == "tsqr") s.alg = bounds::Algorithm::TSQR;
    else throw std::invalid_argument("bound_spec_for: unknown algorithm");
    if (req.regime == "uniform") s.regime = bounds::Regime::Uniform;
    else if (req.regime == "mixed2") s.regime = bounds::Regime::Mixed2;
    else if (req.regime == "mixed3")
        s.regime = req.alg == "hqr" ? bounds::Regime::HighThenCastdown : bounds::Regime::Mixed3;
    else if (req.regime == "high-castdown") s.regime = bounds::Regime::HighThenCastdown;
    else throw std::invalid_argument("bound_spec_for: unknown regime");
    return s;
}

namespace {

// Factor + measure one cell of a sweep; overflow under Signal yields a row
// with NaN errors and the overflow flagged instead of aborting the sweep.
std::string sweep_row(const Mat& A, const FactorRequest& req, const std::string& regime_label,
                      double alpha, std::uint64_t seed) {
    ErrorReport rep;
    long long overflow_count = 0;
    try {
        const QrResult qr = run_factor(A, req, &overflow_count);
        rep = measure(A, qr.Q, qr.R, bound_spec_for(req, A.rows(), A.cols()));
    } catch (const OverflowError&) {
        rep.m = A.rows();
        rep.n = A.cols();
        rep.backward = rep.orth = std::numeric_limits<double>::quiet_NaN();
        try {
            const bounds::BoundSpec s = bound_spec_for(req, A.rows(), A.cols());
            const auto [bb, bo] = bounds::convert_to_measurables(
                bounds::bound_r_coeff(s).value, bounds::bound_q(s).value, s.n);
            rep.bound_backward = bb;
            rep.bound_orth = bo;
        } catch (const bounds::BoundDomainError&) {
            rep.bound_backward = rep.bound_orth = std::numeric_limits<double>::infinity();
        }
        rep.failed = true;
        overflow_count = std::max(overflow_count, 1ll);
    }
    rep.alg = req.alg;
    rep.regime = regime_label;
    rep.r = req.r;
    rep.L = req.L;
    rep.alpha = alpha;
    rep.seed = seed;
    rep.overflows = overflow_count;
    return csv_row(rep);
}

std::string uniform_label(const FpFormat& f) { return std::string("uniform-") + f.name; }

}  // namespace

DotSummary run_dot_experiment(const DotExperimentConfig& cfg, std::string& csv) {
    if (cfg.count < 1 || cfg.m < 1)
        throw std::invalid_argument("run_dot_experiment: count >= 1 and m >= 1 required");
    if (cfg.dist != MatrixKind::GaussianStd && cfg.dist != MatrixKind::Uniform01)
        throw std::invalid_argument("run_dot_experiment: dist must be GaussianStd or Uniform01");

    std::vector<double> errs(cfg.count);
    auto task = [&](int i) -> std::string {
        Rng rng(split_seed(cfg.seed, std::uint64_t(i)));
        std::vector<double> x(cfg.m), y(cfg.m);
        long long sat = 0;
        const RoundEnv env{cfg.policy, &sat};
        const bool gauss = cfg.dist == MatrixKind::GaussianStd;
        for (int k = 0; k < cfg.m; ++k)
            x[k] = round_value(gauss ? rng.normal() : rng.uniform01(), cfg.pair.low, env);
        for (int k = 0; k < cfg.m; ++k)
            y[k] = round_value(gauss ? rng.normal() : rng.uniform01(), cfg.pair.low, env);
        double exact = 0.0, absdot = 0.0;
        for (int k = 0; k < cfg.m; ++k) {
            exact += x[k] * y[k];
            absdot += std::fabs(x[k]) * std::fabs(y[k]);
        }
        char buf[64];
        try {
            const double fl = dot_uniform_raw(x.data(), y.data(), cfg.m, cfg.pair.low, env);
            const double rel = absdot > 0.0 ? std::fabs(exact - fl) / absdot : 0.0;
            errs[i] = rel;
            std::snprintf(buf, sizeof buf, "%d,%.17g\n", i, rel);
        } catch (const OverflowError&) {
            errs[i] = std::numeric_limits<double>::quiet_NaN();
            std::snprintf(buf, sizeof buf, "%d,overflow\n", i);
        }
        return buf;
    };
    const std::vector<std::string> rows = run_ordered(int(cfg.count), task);

    DotSummary s;
    double sum = 0.0;
    long long ok = 0;
    for (double e : errs) {
        if (std::isnan(e)) {
            ++s.overflow_trials;
            continue;
        }
        sum += e;
        s.max = std::max(s.max, e);
        ++ok;
    }
    s.mean = ok > 0 ? sum / double(ok) : 0.0;
    double ss = 0.0;
    for (double e : errs)
        if (!std::isnan(e)) ss += (e - s.mean) * (e - s.mean);
    s.sd = ok > 1 ? std::sqrt(ss / double(ok - 1)) : 0.0;

    csv.clear();
    csv += "trial,relerr\n";
    for (const std::string& r : rows) csv += r;
    char buf[160];
    std::snprintf(buf, sizeof buf, "summary,%.17g,%.17g,%.17g,%lld\n", s.mean, s.sd, s.max,
                  s.overflow_trials);
    csv += buf;
    return s;
}

std::string run_size_sweep(const SizeSweepConfig& cfg) {
    if (cfg.seeds < 1) throw std::invalid_argument("run_size_sweep: seeds >= 1");
    const int tasks = int(cfg.m_list.size()) * cfg.seeds;
    auto task = [&](int idx) -> std::string {
        const int mi = idx / cfg.seeds;
        const int m = cfg.m_list[mi];
        const std::uint64_t seed = split_seed(cfg.seed, std::uint64_t(idx));
        MatrixSpec ms{MatrixKind::GaussianStd, m, cfg.n, seed, 0.0, fp64()};
        const Mat base = gen_matrix_fp64(ms);
        const Mat a_low = castdown(base, cfg.pair.low);
        const Mat a_uni = castdown(base, cfg.uniform_prec);
        std::string rows;
        for (const char* alg : {"hqr", "bqr", "tsqr"}) {
            for (const char* regime : {"uniform", "mixed2", "mixed3"}) {
                FactorRequest req;
                req.alg = alg;
                req.regime = regime;
                req.r = cfg.r;
                req.L = cfg.L;
                req.prec = cfg.uniform_prec;
                req.pair = cfg.pair;
                req.policy = cfg.policy;
                req.c = cfg.c;
                const bool uniform = req.regime == "uniform";
                const std::string label =
                    uniform ? uniform_label(cfg.uniform_prec) : req.regime;
                rows += sweep_row(uniform ? a_uni : a_low, req, label, 0.0, seed);
            }
        }
        return rows;
    };
    std::string csv = csv_header();
    for (const std::string& chunk : run_ordered(tasks, task)) csv += chunk;
    return csv;
}

std::string run_block_sweep(const BlockSweepConfig& cfg) {
    if (cfg.seeds < 1) throw std::invalid_argument("run_block_sweep: seeds >= 1");
    const int tasks = int(cfg.r_list.size()) * cfg.seeds;
    auto task = [&](int idx) -> std::string {
        const int ri = idx / cfg.seeds;
        const int r = cfg.r_list[ri];
        const std::uint64_t seed = split_seed(cfg.seed, std::uint64_t(idx % cfg.seeds));
        MatrixSpec ms{MatrixKind::LogSpacedSV, cfg.m, cfg.n, seed, 0.0, fp64()};
        const Mat base = gen_matrix_fp64(ms);
        std::string rows;
        for (const char* regime : {"uniform", "mixed3"}) {
            FactorRequest req;
            req.alg = "bqr";
            req.regime = regime;
            req.r = r;
            req.prec = cfg.uniform_prec;
            req.pair = cfg.pair;
            req.policy = cfg.policy;
            req.c = cfg.c;
            const bool uniform = req.regime == "uniform";
            const Mat a = castdown(base, uniform ? cfg.uniform_prec : cfg.pair.low);
            const std::string label = uniform ? uniform_label(cfg.uniform_prec) : req.regime;
            rows += sweep_row(a, req, label, 0.0, seed);
        }
        return rows;
    };
    std::string csv = csv_header();
    for (const std::string& chunk : run_ordered(tasks, task)) csv += chunk;
    return csv;
}

std::string run_cond_sweep(const CondSweepConfig& cfg) {
    if (cfg.samples < 1) throw std::invalid_argument("run_cond_sweep: samples >= 1");
    const int tasks = int(cfg.alpha_list.size()) * cfg.samples;
    auto task = [&](int idx) -> std::string {
        const int ai = idx / cfg.samples;
        const double alpha = cfg.alpha_list[ai];
        const std::uint64_t seed = split_seed(cfg.seed, std::uint64_t(idx));
        MatrixSpec ms{MatrixKind::Conditioned, cfg.m, cfg.n, seed, alpha, cfg.pair.low};
        const Mat a = gen_matrix(ms).a;
        std::string rows;
        FactorRequest req;
        req.alg = "hqr";
        req.regime = "mixed2";
        req.pair = cfg.pair;
        req.policy = cfg.policy;
        req.c = cfg.c;
        rows += sweep_row(a, req, "mixed2", alpha, seed);
        for (int L : cfg.L_list) {
            req.alg = "tsqr";
            req.L = L;
            rows += sweep_row(a, req, "mixed2", alpha, seed);
        }
        return rows;
    };
    std::string csv = csv_header();
    for (const std::string& chunk : run_ordered(tasks, task)) csv += chunk;
    return csv;
}

}  // namespace mpqr::harness
