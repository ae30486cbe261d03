// Matrix generators, error measurement against the bound engine, and the
// experiment drivers that emit CSV artifacts. Trials are sub-seeded from a
// master seed by trial index and buffered in trial order, so output bytes are
// independent of the thread count (capped by MPQR_THREADS).
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mpqr/bounds.hpp"
#include "mpqr/qr_mixed.hpp"

namespace mpqr::harness {

// MPQR_THREADS if set (>= 1), else hardware concurrency.
int thread_cap();

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

// mt19937_64 with project-pinned uniform and normal mappings, so sampled
// streams are reproducible across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    std::uint64_t next();
    double uniform01();  // [0, 1)
    double normal();     // Box-Muller on uniform01 pairs
private:
    std::mt19937_64 g_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

enum class MatrixKind { GaussianStd, Uniform01, LogSpacedSV, Conditioned };

struct MatrixSpec {
    MatrixKind kind = MatrixKind::GaussianStd;
    int m = 0, n = 0;
    std::uint64_t seed = 0;
    double alpha = 0.0;  // Conditioned: kappa_2 = n*alpha + 1
    FpFormat storage = fp64();
};

struct StoredMatrix {
    Mat a;
    FpFormat fmt;
};

// The fp64 matrix before rounding into the storage format. LogSpacedSV builds
// Q1 * diag(logspaced 1..1e-3) * Q2 from fp64 QR factors of random matrices;
// Conditioned builds Q'(alpha*E + I) normalized to unit Frobenius norm.
Mat gen_matrix_fp64(const MatrixSpec& spec);
StoredMatrix gen_matrix(const MatrixSpec& spec);

struct ErrorReport {
    std::string alg;     // hqr | bqr | tsqr
    std::string regime;  // uniform-<prec> | mixed2 | mixed3 | high-castdown
    int m = 0, n = 0, r = 0, L = 0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    double backward = 0.0, orth = 0.0;
    double bound_backward = 0.0, bound_orth = 0.0;
    long long overflows = 0;
    bool failed = false;  // factorization aborted (overflow under Signal)
};

// backward = ||A - QR||_F / ||A||_F and orth = ||Q^T Q - I||_2 in fp64;
// bound fields from the bound engine via convert_to_measurables.
ErrorReport measure(const Mat& A, const Mat& Q, const Mat& R, const bounds::BoundSpec& spec);

std::string csv_header();
std::string csv_row(const ErrorReport& r);

// One factorization dispatched by name; regime "mixed3" maps hqr to the
// high-precision-then-castdown variant.
struct FactorRequest {
    std::string alg = "hqr";
    std::string regime = "uniform";
    int r = 0, L = 0;
    FpFormat prec = fp64();
    PrecisionPair pair = PrecisionPair::same(fp64());
    OverflowPolicy policy = OverflowPolicy::Signal;
    int c = 1;
};
QrResult run_factor(const Mat& A, const FactorRequest& req, long long* overflow_count);
bounds::BoundSpec bound_spec_for(const FactorRequest& req, int m, int n);

struct DotExperimentConfig {
    long count = 100000;
    int m = 1024;
    MatrixKind dist = MatrixKind::GaussianStd;  // GaussianStd or Uniform01
    PrecisionPair pair = PrecisionPair::of(fp16(), fp32());
    std::uint64_t seed = 12345;
    OverflowPolicy policy = OverflowPolicy::Signal;
};

struct DotSummary {
    double mean = 0.0, sd = 0.0, max = 0.0;
    long long overflow_trials = 0;
};

// Relative error |x^T y - fl(x^T y)| / (|x|^T |y|) of the uniform low-precision
// dot against the fp64 reference, one row per trial plus a final summary row.
DotSummary run_dot_experiment(const DotExperimentConfig& cfg, std::string& csv);

struct SizeSweepConfig {
    std::vector<int> m_list{1000, 2000, 4000};
    int n = 250, r = 63, L = 2;
    int seeds = 10;
    std::uint64_t seed = 12345;
    OverflowPolicy policy = OverflowPolicy::Signal;
    int c = 1;
    FpFormat uniform_prec = fp32();
    PrecisionPair pair = PrecisionPair::of(fp16(), fp32());
};
// {hqr, bqr, tsqr} x {uniform, mixed2, mixed3} on Gaussian inputs per (m, seed).
std::string run_size_sweep(const SizeSweepConfig& cfg);

struct BlockSweepConfig {
    int m = 2048, n = 256;
    std::vector<int> r_list{2, 4, 8, 16, 32, 64, 128, 256};
    int seeds = 10;
    std::uint64_t seed = 12345;
    OverflowPolicy policy = OverflowPolicy::Signal;
    int c = 1;
    FpFormat uniform_prec = fp32();
    PrecisionPair pair = PrecisionPair::of(fp16(), fp32());
};
// Uniform bqr and mp_bqr3 per block width on LogSpacedSV inputs.
std::string run_block_sweep(const BlockSweepConfig& cfg);

struct CondSweepConfig {
    int m = 4000, n = 100;
    std::vector<double> alpha_list{1e-4, 1e-3, 1e-2, 1e-1, 1.0};
    int samples = 10;
    std::vector<int> L_list{1, 2, 3, 4, 5};
    std::uint64_t seed = 12345;
    OverflowPolicy policy = OverflowPolicy::Signal;
    int c = 1;
    PrecisionPair pair = PrecisionPair::of(fp16(), fp32());
};
// mp_hqr2 plus mp_tsqr2 for each L on Conditioned(alpha) inputs, rows keyed by
// (alpha, seed) so per-matrix L trajectories can be traced.
std::string run_cond_sweep(const CondSweepConfig& cfg);

}  // namespace mpqr::harness
