// mpqr command-line driver: factor matrices from CSV, evaluate error bounds,
// emit feasibility grids, and run the dot-product / size / block / condition
// experiments as CSV artifacts.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mpqr/harness.hpp"

namespace {

using namespace mpqr;

constexpr int kExitBadArgs = 2;
constexpr int kExitOverflow = 3;

const FpFormat& format_by_name(const std::string& name) {
    if (name == "fp16") return fp16();
    if (name == "fp32") return fp32();
    if (name == "fp64") return fp64();
    throw CLI::ValidationError("--prec", "unknown format " + name);
}

struct GlobalOpts {
    std::uint64_t seed = 12345;
    std::string out = ".";
    std::string policy = "signal";
    int c = 1;

    OverflowPolicy overflow_policy() const {
        return policy == "saturate" ? OverflowPolicy::Saturate : OverflowPolicy::Signal;
    }
};

void write_file(const std::string& dir, const std::string& name, const std::string& text) {
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/" + name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << text;
    std::cout << "wrote " << path << "\n";
}

Mat read_csv_matrix(std::istream& in, const FpFormat& storage) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            size_t pos = 0;
            const double v = std::stod(cell, &pos);
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("ragged CSV input");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("empty matrix input");
    Mat a(int(rows.size()), int(rows.front().size()));
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) {
            const double v = rows[i][j];
            if (!representable(v, storage))
                throw std::runtime_error("matrix entry " + std::to_string(v) +
                                         " is not representable in " + storage.name);
            a(i, j) = v;
        }
    return a;
}

std::string matrix_csv(const Mat& a) {
    std::string out;
    char buf[40];
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", a(i, j));
            out += buf;
            out += j + 1 < a.cols() ? ',' : '\n';
        }
    }
    return out;
}

std::vector<long> parse_long_list(const std::string& s) {
    std::vector<long> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stol(cell));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixed-precision QR laboratory"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "master RNG seed");
    app.add_option("--out", g.out, "output directory for artifacts");
    app.add_option("--overflow-policy", g.policy, "signal|saturate")
        ->check(CLI::IsMember({"signal", "saturate"}));
    app.add_option("--c-constant", g.c, "tilde-gamma constant c")->check(CLI::PositiveNumber);

    // ---- factor ----
    auto* factor = app.add_subcommand("factor", "QR-factor a CSV matrix (stdin or --in)");
    std::string f_alg = "hqr", f_regime = "uniform", f_prec = "fp64", f_low = "fp16",
                f_high = "fp32", f_in;
    int f_r = 0, f_L = 1;
    factor->add_option("--alg", f_alg)->check(CLI::IsMember({"hqr", "bqr", "tsqr"}));
    factor->add_option("--regime", f_regime)
        ->check(CLI::IsMember({"uniform", "mixed2", "mixed3", "high-castdown"}));
    factor->add_option("--prec", f_prec, "uniform-regime format");
    factor->add_option("--low", f_low, "mixed-regime low format");
    factor->add_option("--high", f_high, "mixed-regime high format");
    factor->add_option("--r", f_r, "BQR panel width (default n)");
    factor->add_option("--L", f_L, "TSQR levels");
    factor->add_option("--in", f_in, "input CSV (default stdin)");

    // ---- bounds ----
    auto* bnd = app.add_subcommand("bounds", "evaluate the error-bound cells");
    std::string b_alg = "hqr", b_regime = "uniform", b_prec = "fp32", b_low = "fp16",
                b_high = "fp32";
    long b_m = 0, b_n = 0;
    int b_r = 0, b_L = 1;
    bnd->add_option("--alg", b_alg)->check(CLI::IsMember({"hqr", "bqr", "tsqr"}));
    bnd->add_option("--regime", b_regime)
        ->check(CLI::IsMember({"uniform", "mixed2", "mixed3", "high-castdown"}));
    bnd->add_option("--prec", b_prec);
    bnd->add_option("--low", b_low);
    bnd->add_option("--high", b_high);
    bnd->add_option("--m", b_m)->required();
    bnd->add_option("--n", b_n)->required();
    bnd->add_option("--r", b_r);
    bnd->add_option("--L", b_L);

    // ---- feasibility ----
    auto* feas = app.add_subcommand("feasibility", "emit the allowable-size grid");
    std::string fe_scheme = "hqr", fe_prec = "fp64", fe_ms, fe_ns;
    int fe_L = 2;
    feas->add_option("--scheme", fe_scheme)->check(CLI::IsMember({"hqr", "tsqr"}));
    feas->add_option("--L", fe_L, "TSQR levels");
    feas->add_option("--prec", fe_prec);
    feas->add_option("--m-list", fe_ms, "comma list (default powers of two 2^6..2^20)");
    feas->add_option("--n-list", fe_ns, "comma list (default powers of two 2^2..2^12)");

    // ---- dot-exp ----
    auto* dot = app.add_subcommand("dot-exp", "simulated low-precision dot-product errors");
    std::string d_dist = "normal", d_low = "fp16", d_high = "fp32";
    long d_count = 100000;
    int d_m = 1024;
    dot->add_option("--dist", d_dist)->check(CLI::IsMember({"normal", "uniform"}));
    dot->add_option("--count", d_count)->check(CLI::PositiveNumber);
    dot->add_option("--m", d_m)->check(CLI::PositiveNumber);
    dot->add_option("--low", d_low);
    dot->add_option("--high", d_high);

    // ---- size-sweep ----
    auto* ssw = app.add_subcommand("size-sweep", "errors vs row count for all algorithms");
    std::string s_ms = "1000,1933,3735,7219,13949", s_prec = "fp32";  // geometric 1000..13949
    int s_n = 250, s_r = 63, s_L = 2, s_seeds = 10;
    ssw->add_option("--m-list", s_ms);
    ssw->add_option("--n", s_n);
    ssw->add_option("--r", s_r);
    ssw->add_option("--L", s_L);
    ssw->add_option("--seeds", s_seeds);
    ssw->add_option("--prec", s_prec, "uniform-regime format");

    // ---- block-sweep ----
    auto* bsw = app.add_subcommand("block-sweep", "errors vs panel width for bqr variants");
    std::string bw_rs = "2,4,8,16,32,64,128,256", bw_prec = "fp32";
    int bw_m = 2048, bw_n = 256, bw_seeds = 10;
    bsw->add_option("--m", bw_m);
    bsw->add_option("--n", bw_n);
    bsw->add_option("--r-list", bw_rs);
    bsw->add_option("--seeds", bw_seeds);
    bsw->add_option("--prec", bw_prec);

    // ---- cond-sweep ----
    auto* csw = app.add_subcommand("cond-sweep", "mp_hqr2 vs mp_tsqr2 over condition numbers");
    std::string c_alphas = "0.0001,0.001,0.01,0.1,1", c_Ls = "1,2,3,4,5";
    int c_m = 4000, c_n = 100, c_samples = 10;
    csw->add_option("--m", c_m);
    csw->add_option("--n", c_n);
    csw->add_option("--alpha-list", c_alphas);
    csw->add_option("--samples", c_samples);
    csw->add_option("--L-list", c_Ls);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitBadArgs;
    }

    try {
        if (factor->parsed()) {
            const FpFormat& prec = format_by_name(f_prec);
            const PrecisionPair pair = PrecisionPair::of(format_by_name(f_low),
                                                         format_by_name(f_high));
            const FpFormat& storage = f_regime == "uniform" ? prec : pair.low;
            Mat a;
            if (f_in.empty()) {
                a = read_csv_matrix(std::cin, storage);
            } else {
                std::ifstream in(f_in);
                if (!in) throw std::runtime_error("cannot open " + f_in);
                a = read_csv_matrix(in, storage);
            }
            harness::FactorRequest req;
            req.alg = f_alg;
            req.regime = f_regime;
            req.r = f_r > 0 ? f_r : a.cols();
            req.L = f_L;
            req.prec = prec;
            req.pair = pair;
            req.policy = g.overflow_policy();
            req.c = g.c;
            long long overflows = 0;
            const QrResult qr = harness::run_factor(a, req, &overflows);
            harness::ErrorReport rep =
                harness::measure(a, qr.Q, qr.R, harness::bound_spec_for(req, a.rows(), a.cols()));
            rep.alg = f_alg;
            rep.regime = f_regime;
            rep.r = req.r;
            rep.L = req.L;
            rep.seed = g.seed;
            rep.overflows = overflows;
            write_file(g.out, "Q.csv", matrix_csv(qr.Q));
            write_file(g.out, "R.csv", matrix_csv(qr.R));
            write_file(g.out, "report.csv", harness::csv_header() + harness::csv_row(rep));
            std::printf("backward %.6g orth %.6g boundBackward %.6g boundOrth %.6g overflows %lld\n",
                        rep.backward, rep.orth, rep.bound_backward, rep.bound_orth, rep.overflows);
        } else if (bnd->parsed()) {
            harness::FactorRequest req;
            req.alg = b_alg;
            req.regime = b_regime;
            req.r = b_r > 0 ? b_r : int(b_n);
            req.L = b_L;
            req.prec = format_by_name(b_prec);
            req.pair = PrecisionPair::of(format_by_name(b_low), format_by_name(b_high));
            req.c = g.c;
            const bounds::BoundSpec spec = harness::bound_spec_for(req, int(b_m), int(b_n));
            const bounds::BoundValue q = bounds::bound_q(spec);
            const bounds::BoundValue rc = bounds::bound_r_coeff(spec);
            const auto [bb, bo] = bounds::convert_to_measurables(rc.value, q.value, b_n);
            std::printf("bound_q %.4g\n", q.value);
            std::printf("bound_r_coeff %.4g\n", rc.value);
            std::printf("backward_bound %.4g\n", bb);
            std::printf("orth_bound %.4g\n", bo);
            std::printf("stable %s\n", q.stable ? "yes" : "no");
        } else if (feas->parsed()) {
            std::vector<long> ms = fe_ms.empty() ? std::vector<long>{} : parse_long_list(fe_ms);
            std::vector<long> ns = fe_ns.empty() ? std::vector<long>{} : parse_long_list(fe_ns);
            if (ms.empty())
                for (long m = 64; m <= (1l << 20); m *= 2) ms.push_back(m);
            if (ns.empty())
                for (long n = 4; n <= (1l << 12); n *= 2) ns.push_back(n);
            const auto cells = bounds::feasibility_map(
                fe_scheme == "hqr" ? bounds::FeasScheme::HQR : bounds::FeasScheme::TSQR, fe_L, ms,
                ns, format_by_name(fe_prec), g.c);
            std::ostringstream os;
            bounds::write_feasibility_grid(os, cells);
            write_file(g.out, "feasibility.txt", os.str());
        } else if (dot->parsed()) {
            harness::DotExperimentConfig cfg;
            cfg.count = d_count;
            cfg.m = d_m;
            cfg.dist = d_dist == "normal" ? harness::MatrixKind::GaussianStd
                                          : harness::MatrixKind::Uniform01;
            cfg.pair = PrecisionPair::of(format_by_name(d_low), format_by_name(d_high));
            cfg.seed = g.seed;
            cfg.policy = g.overflow_policy();
            std::string csv;
            const harness::DotSummary s = harness::run_dot_experiment(cfg, csv);
            write_file(g.out, "dot_" + d_dist + ".csv", csv);
            std::printf("mean %.6g sd %.6g max %.6g overflow_trials %lld\n", s.mean, s.sd, s.max,
                        s.overflow_trials);
        } else if (ssw->parsed()) {
            harness::SizeSweepConfig cfg;
            cfg.m_list.clear();
            for (long m : parse_long_list(s_ms)) cfg.m_list.push_back(int(m));
            cfg.n = s_n;
            cfg.r = s_r;
            cfg.L = s_L;
            cfg.seeds = s_seeds;
            cfg.seed = g.seed;
            cfg.policy = g.overflow_policy();
            cfg.c = g.c;
            cfg.uniform_prec = format_by_name(s_prec);
            write_file(g.out, "size_sweep.csv", harness::run_size_sweep(cfg));
        } else if (bsw->parsed()) {
            harness::BlockSweepConfig cfg;
            cfg.m = bw_m;
            cfg.n = bw_n;
            cfg.r_list.clear();
            for (long r : parse_long_list(bw_rs)) cfg.r_list.push_back(int(r));
            cfg.seeds = bw_seeds;
            cfg.seed = g.seed;
            cfg.policy = g.overflow_policy();
            cfg.c = g.c;
            cfg.uniform_prec = format_by_name(bw_prec);
            write_file(g.out, "block_sweep.csv", harness::run_block_sweep(cfg));
        } else if (csw->parsed()) {
            harness::CondSweepConfig cfg;
            cfg.m = c_m;
            cfg.n = c_n;
            cfg.alpha_list.clear();
            {
                std::stringstream ss(c_alphas);
                std::string cell;
                while (std::getline(ss, cell, ',')) cfg.alpha_list.push_back(std::stod(cell));
            }
            cfg.samples = c_samples;
            cfg.L_list.clear();
            for (long L : parse_long_list(c_Ls)) cfg.L_list.push_back(int(L));
            cfg.seed = g.seed;
            cfg.policy = g.overflow_policy();
            cfg.c = g.c;
            write_file(g.out, "cond_sweep.csv", harness::run_cond_sweep(cfg));
        }
    } catch (const OverflowError& e) {
        std::fprintf(stderr, "overflow: %s\n", e.what());
        return kExitOverflow;
    } catch (const CLI::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadArgs;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadArgs;
    }
    return 0;
}
