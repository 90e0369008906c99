// gflow: command-line front end for the gradient-flow and SGD experiments.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "CLI11.hpp"
#include "gflow/config_io.hpp"
#include "gflow/experiments.hpp"
#include "gflow/gradient_flow.hpp"
#include "gflow/landscape.hpp"
#include "gflow/prob_oracles.hpp"

#ifndef GFLOW_VERSION
#define GFLOW_VERSION "dev"
#endif

using namespace gflow;
namespace fs = std::filesystem;

namespace {

struct Globals {
    std::uint64_t seed = 1;
    bool seed_given = false;
    std::string out_dir = ".";
    int threads = 1;
    std::string config;
};

std::string utc_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// keeps only the named sections of an INI text
std::string sections(const std::string& text, std::initializer_list<const char*> keep) {
    namespace pt = boost::property_tree;
    pt::ptree in, out;
    std::istringstream is(text);
    pt::read_ini(is, in);
    for (auto& [sec, sub] : in) {
        bool k = false;
        for (auto s : keep) k |= sec == s;
        if (k) out.add_child(sec, sub);
    }
    std::ostringstream os;
    pt::write_ini(os, out);
    return os.str();
}

// Artifacts go into out_dir; the manifest is written last and lists all of them.
class Run {
public:
    Run(std::string command, const Globals& g, int argc, char** argv)
        : cmd_(std::move(command)), g_(g), started_(utc_now()) {
        for (int i = 0; i < argc; ++i) argv_ += (i ? " " : "") + std::string(argv[i]);
        fs::create_directories(g.out_dir);
    }

    std::uint64_t seed(std::uint64_t config_seed, bool config_has_seed) {
        if (const char* e = std::getenv("GFLOW_SEED")) env_ = e;
        if (g_.seed_given) {
            source_ = "flag";
            return seed_ = g_.seed;
        }
        if (!env_.empty()) {
            std::size_t used = 0;
            seed_ = std::stoull(env_, &used);
            if (used != env_.size()) throw std::invalid_argument("GFLOW_SEED is not an integer: " + env_);
            source_ = "env";
            return seed_;
        }
        if (config_has_seed) {
            source_ = "config";
            return seed_ = config_seed;
        }
        source_ = "default";
        return seed_ = g_.seed;
    }

    std::string path(const std::string& name) const { return (fs::path(g_.out_dir) / name).string(); }

    void write(const std::string& name, const std::string& body) {
        std::ofstream f(path(name), std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + path(name));
        f << body;
        if (!f) throw std::runtime_error("write failed for " + path(name));
        artifacts_.push_back(name);
    }
    void note(const std::string& name) { artifacts_.push_back(name); }
    void set(const std::string& k, const std::string& v) { extra_[k] = v; }

    void manifest(const std::string& config_echo) {
        std::ostringstream m;
        m << "[run]\ncommand = " << cmd_ << "\nargv = " << argv_ << "\nversion = " << GFLOW_VERSION
          << "\nseed = " << seed_ << "\nseed_source = " << source_ << "\nenv_GFLOW_SEED = " << env_
          << "\nthreads = " << g_.threads << "\nstarted = " << started_ << "\nfinished = " << utc_now() << "\n";
        for (auto& [k, v] : extra_) m << k << " = " << v << "\n";
        m << "\n[artifacts]\n";
        for (std::size_t i = 0; i < artifacts_.size(); ++i) m << "file" << i << " = " << artifacts_[i] << "\n";
        m << "\n[config]\n";
        std::istringstream is(config_echo);
        for (std::string line; std::getline(is, line);)
            if (!line.empty()) m << "  " << line << "\n";
        std::ofstream f(path("manifest.txt"), std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + path("manifest.txt"));
        f << m.str();
    }

private:
    std::string cmd_, argv_;
    Globals g_;
    std::string started_, env_, source_ = "default";
    std::uint64_t seed_ = 0;
    std::vector<std::string> artifacts_;
    std::map<std::string, std::string> extra_;
};

// ---------------------------------------------------------------- mc / train

struct McOpts {
    std::string preset = "sec_4_4";
    double scale = 0.1;
    int width = 0, trials = 0, batch = 0;
    bool log_y = false;
};

ExperimentConfig experiment_config(const Globals& g, const McOpts& o, CLI::App* sub, bool& config_seed) {
    ExperimentConfig c;
    config_seed = false;
    if (!g.config.empty()) {
        std::string text = sections(read_file(g.config), {"experiment", "network", "optimizer", "output"});
        c = config_from_ini(text);
        boost::property_tree::ptree t;
        std::istringstream is(text);
        boost::property_tree::read_ini(is, t);
        config_seed = (bool)t.get_optional<std::string>("experiment.seed");
        if (sub->count("--preset") || sub->count("--scale") || sub->count("--width"))
            c = preset(sub->count("--preset") ? o.preset : c.name, sub->count("--scale") ? o.scale : c.scale, o.width);
    } else {
        c = preset(o.preset, o.scale, o.width);
    }
    if (o.trials > 0) c.trials = o.trials;
    if (o.batch > 0) c.batch = o.batch;
    c.threads = g.threads;
    return c;
}

int cmd_mc(const Globals& g, const McOpts& o, CLI::App* sub, int argc, char** argv) {
    bool cs;
    ExperimentConfig c = experiment_config(g, o, sub, cs);
    Run run("mc", g, argc, argv);
    c.seed = run.seed(c.seed, cs);
    AggregateStats s = run_monte_carlo(c);
    std::cout << c.name << " scale " << c.scale << ": " << s.completed() << " of " << c.trials
              << " trials completed, " << s.aborted.size() << " aborted\n";
    run.write("final_losses.csv", final_losses_csv(s));
    if (s.completed() > 0) {
        emit_figure(s, FigureKind::histogram, run.path("histogram"));
        emit_figure(s, FigureKind::grad_norm, run.path("grad_norm"), o.log_y);
        emit_figure(s, FigureKind::distance, run.path("distance"), o.log_y);
        for (auto n : {"histogram", "grad_norm", "distance"}) {
            run.note(std::string(n) + ".csv");
            run.note(std::string(n) + ".svg");
        }
    }
    std::string ini = config_to_ini(c);
    run.write("config.ini", ini);
    run.set("scale", num(c.scale));
    run.set("trials_completed", std::to_string(s.completed()));
    run.set("trials_aborted", std::to_string(s.aborted.size()));
    run.manifest(ini);
    return 0;
}

int cmd_train(const Globals& g, const McOpts& o, CLI::App* sub, int argc, char** argv) {
    bool cs;
    ExperimentConfig c = experiment_config(g, o, sub, cs);
    Run run("train", g, argc, argv);
    c.seed = run.seed(c.seed, cs);
    // the same stream as trial 0 of the Monte-Carlo run
    Rng rng(trial_seed(c.seed, 0));
    FlatParams th0 = init_deep(c.arch(), c.init, rng);
    TrialRecord r = train(c.train_spec(), th0, rng);
    std::string csv = "step,loss,grad_norm,distance\n";
    for (std::size_t k = 0; k < r.checkpoints.size(); ++k)
        csv += std::to_string(r.checkpoints[k]) + "," + num(r.loss[k]) + "," + num(r.grad_norm[k]) + "," +
               (k < r.dist.size() ? num(r.dist[k]) : "") + "\n";
    run.write("train.csv", csv);
    std::string ini = config_to_ini(c);
    run.write("config.ini", ini);
    if (r.aborted) {
        std::cout << "aborted: " << r.error << "\n";
        run.set("aborted", r.error);
    } else {
        std::cout << "initial loss " << num(r.initial_loss) << "\nfinal loss " << num(r.final_loss) << "\n";
        run.set("initial_loss", num(r.initial_loss));
        run.set("final_loss", num(r.final_loss));
    }
    run.set("scale", num(c.scale));
    run.manifest(ini);
    return r.aborted ? 3 : 0;
}

// ---------------------------------------------------------------- gf

struct GfOpts {
    std::string variant = "clipping";
    int width = 16, trials = 50;
    double horizon = 100.0, threshold = 0.02, step = 0.01, eig_tol = 1e-6;
    double alpha = -1, beta = -1, gamma = -1, delta = -1;
    bool trajectory = false;
};

int cmd_gf(const Globals& g, const GfOpts& o, int argc, char** argv) {
    TheoremExperiment e;
    e.variant = parse_variant(o.variant);
    std::string text = g.config.empty() ? "" : sections(read_file(g.config), {"problem"});
    e.data = problem_from_ini(text, e.variant);
    if (e.variant == Variant::clipping)
        e.scheme = InitScheme::clipping(o.alpha < 0 ? 0.875 : o.alpha, o.beta < 0 ? 3.0 : o.beta);
    else
        e.scheme = InitScheme::relu(o.alpha < 0 ? 0.25 : o.alpha, o.beta < 0 ? 0.25 : o.beta,
                                    o.gamma < 0 ? 1.0 : o.gamma, o.delta < 0 ? 1.0 : o.delta);
    e.h = o.width;
    e.trials = o.trials;
    e.horizon = o.horizon;
    e.threshold = o.threshold;
    e.solver = SolverConfig::fixed(o.step);
    e.eig_tol = o.eig_tol;
    e.threads = g.threads;

    Run run("gf", g, argc, argv);
    e.base_seed = run.seed(1, false);
    TheoremResult r = run_theorem_experiment(e);

    std::string csv = theorem_csv_header() + "\n";
    for (std::size_t i = 0; i < r.trials.size(); ++i) csv += theorem_csv_row((int)i, r.trials[i]) + "\n";
    run.write("gf_trials.csv", csv);
    int ok = (int)r.trials.size() - r.failed, nd = 0;
    for (auto& t : r.trials) nd += t.ok && t.converged && t.report.classification == CriticalReport::non_descending;
    std::ostringstream sum;
    sum << "key,value\nvariant," << o.variant << "\nwidth," << e.h << "\ntrials," << e.trials
        << "\nhorizon," << num(e.horizon) << "\ndata_hypotheses_ok," << r.data_hypotheses_ok
        << "\nfailed," << r.failed << "\nconverged," << r.converged << "\nconverged_descending," << r.descending
        << "\nconverged_non_descending," << nd << "\nmedian_risk," << num(r.median_risk)
        << "\nthreshold," << num(e.threshold) << "\nfraction_below," << num(r.fraction_below) << "\n";
    run.write("gf_summary.csv", sum.str());
    std::cout << sum.str().substr(10);

    if (o.trajectory) {
        Rng rng(trial_seed(e.base_seed, 0));
        ShallowParams init = init_shallow(e.scheme, e.h, rng);
        SolverConfig sc = e.solver;
        sc.refine = false;
        run.write("trajectory.csv", trajectory_csv(integrate_gf(init, e.data, e.horizon, sc)));
    }
    std::ostringstream echo;
    echo << "variant = " << o.variant << "\nwidth = " << e.h << "\ntrials = " << e.trials << "\nhorizon = "
         << num(e.horizon) << "\nstep = " << num(o.step) << "\nalpha = " << num(e.scheme.alpha)
         << "\nbeta = " << num(e.scheme.beta) << "\ngamma = " << num(e.scheme.gamma) << "\ndelta = "
         << num(e.scheme.delta) << "\neig_tol = " << num(e.eig_tol) << "\n"
         << problem_to_ini(e.data);
    run.manifest(echo.str());
    return 0;
}

// ---------------------------------------------------------------- landscape

int cmd_landscape(const Globals& g, const std::string& params_file, double eig_tol, int argc, char** argv) {
    std::string text = read_file(params_file);
    ShallowParams P = params_from_ini(sections(text, {"params"}));
    std::string prob = sections(text, {"problem"});
    if (prob.empty() && !g.config.empty()) prob = sections(read_file(g.config), {"problem"});
    ProblemData d = problem_from_ini(prob, P.variant);
    Run run("landscape", g, argc, argv);
    CriticalReport rep = classify(P, d, 1e-7, eig_tol);
    run.write("landscape.csv", csv_header_critical() + "\n" + csv_row(rep) + "\n");
    std::cout << "risk " << num(rep.risk) << "\ngradient_norm " << num(rep.gradient_norm) << "\ncritical "
              << (rep.is_critical ? "yes" : "no") << "\nmin_eigenvalue " << num(rep.min_trainable_eigenvalue)
              << "\nclassification " << to_string(rep.classification) << "\n";
    run.manifest(params_to_ini(P) + problem_to_ini(d));
    return 0;
}

// ---------------------------------------------------------------- oracle

int cmd_oracle(const Globals& g, const std::string& check, long samples, int argc, char** argv) {
    Run run("oracle", g, argc, argv);
    const std::uint64_t seed = run.seed(1, false);
    std::string csv = "check,argument,lhs,rhs,holds\n";
    bool all = true;
    auto row = [&](const std::string& c, double x, double l, double r, bool h) {
        csv += c + "," + num(x) + "," + num(l) + "," + num(r) + "," + (h ? "1" : "0") + "\n";
        all &= h;
    };
    const bool every = check == "all";
    if (every || check == "gaussian-tail") {
        for (int k = 0; k <= 50; ++k) {
            auto r = gaussian_tail_check(0.1 * k);
            row("gaussian-tail", r.argument, r.lhs, r.rhs, r.holds);
        }
    }
    if (every || check == "half-normal-cdf") {
        // Monte-Carlo CDF of XY; rhs is 3 standard errors
        Rng rng(seed);
        const std::vector<double> zs{0.1, 0.5, 1.0, 2.0};
        std::vector<long> hits(zs.size(), 0);
        for (long s = 0; s < samples; ++s) {
            double p = std::abs(sample_normal(rng)) * std::abs(sample_normal(rng));
            for (std::size_t k = 0; k < zs.size(); ++k) hits[k] += p <= zs[k];
        }
        for (std::size_t k = 0; k < zs.size(); ++k) {
            double F = half_normal_product_cdf(zs[k]), mc = (double)hits[k] / samples;
            double se = std::sqrt(std::max(F * (1 - F), 1e-300) / samples);
            row("half-normal-cdf", zs[k], std::abs(F - mc), 3.0 * se, std::abs(F - mc) <= 3.0 * se);
        }
        double F50 = half_normal_product_cdf(50.0);
        row("half-normal-cdf", 50.0, F50, 1.0 - 1e-8, F50 >= 1.0 - 1e-8);
    }
    if (every || check == "bessel-k0") {
        double prev = INFINITY;
        for (double x : {1e-6, 1e-3, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
            double k = bessel_k0(x), ref = boost::math::cyl_bessel_k(0, x);
            double rel = std::abs(k - ref) / ref;
            row("bessel-k0", x, rel, 1e-8, rel <= 1e-8 && k < prev);
            prev = k;
        }
        // K0(x) ~ -log(x/2) - Euler gamma as x -> 0
        double x = 1e-6, asym = -std::log(x / 2) - 0.57721566490153286;
        double rel = std::abs(bessel_k0(x) - asym) / asym;
        row("bessel-k0-log-asymptotic", x, rel, 0.05, rel <= 0.05);
    }
    run.write("oracle.csv", csv);
    std::cout << csv;
    std::cout << (all ? "all checks hold\n" : "some checks FAIL\n");
    std::ostringstream echo;
    echo << "check = " << check << "\nsamples = " << samples << "\n";
    run.set("all_hold", all ? "1" : "0");
    run.manifest(echo.str());
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gflow: gradient-flow and SGD experiments on shallow and deep networks"};
    app.set_version_flag("--version", GFLOW_VERSION);
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "base seed (overrides GFLOW_SEED and the config file)");
    app.add_option("--out-dir", g.out_dir, "directory for artifacts");
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--config", g.config, "INI config file")->check(CLI::ExistingFile);

    McOpts mo;
    std::vector<std::string> presets = preset_names();
    auto add_mc = [&](CLI::App* s) {
        s->add_option("--preset", mo.preset, "experiment preset")->check(CLI::IsMember(presets));
        s->add_option("--scale", mo.scale, "desk-scale factor on trials and steps")->check(CLI::PositiveNumber);
        s->add_option("--width", mo.width, "hidden width of the shallow presets (default: smallest)");
        s->add_option("--trials", mo.trials, "override the trial count");
        s->add_option("--batch", mo.batch, "override the batch size");
    };
    auto* mc = app.add_subcommand("mc", "Monte-Carlo SGD/Adam experiment: histogram, gradient and distance curves");
    add_mc(mc);
    mc->add_flag("--log", mo.log_y, "log-scale curve figures");
    auto* tr = app.add_subcommand("train", "single deep-network training run");
    add_mc(tr);

    GfOpts go;
    auto* gf = app.add_subcommand("gf", "gradient-flow experiment on the shallow networks");
    gf->add_option("--variant", go.variant)->check(CLI::IsMember({"clipping", "relu"}));
    gf->add_option("--width", go.width, "number of neurons h")->check(CLI::PositiveNumber);
    gf->add_option("--trials", go.trials)->check(CLI::PositiveNumber);
    gf->add_option("--horizon", go.horizon, "integration horizon T")->check(CLI::PositiveNumber);
    gf->add_option("--step", go.step, "base RK4 step")->check(CLI::PositiveNumber);
    gf->add_option("--threshold", go.threshold, "risk threshold for the success fraction");
    gf->add_option("--eig-tol", go.eig_tol);
    gf->add_option("--alpha", go.alpha);
    gf->add_option("--beta", go.beta);
    gf->add_option("--gamma", go.gamma);
    gf->add_option("--delta", go.delta);
    gf->add_flag("--trajectory", go.trajectory, "also write the trajectory of trial 0");

    std::string params_file;
    double l_eig = 1e-6;
    auto* ls = app.add_subcommand("landscape", "classify a parameter file");
    ls->add_option("--params", params_file, "INI file with [params] and optionally [problem]")
        ->required()
        ->check(CLI::ExistingFile);
    ls->add_option("--eig-tol", l_eig);

    std::string check = "all";
    long samples = 1000000;
    auto* orc = app.add_subcommand("oracle", "probability oracle checks");
    orc->add_option("--check", check)->check(CLI::IsMember({"all", "gaussian-tail", "half-normal-cdf", "bessel-k0"}));
    orc->add_option("--samples", samples, "Monte-Carlo samples for half-normal-cdf")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    g.seed_given = app.count("--seed") > 0;
    try {
        if (*mc) return cmd_mc(g, mo, mc, argc, argv);
        if (*tr) return cmd_train(g, mo, tr, argc, argv);
        if (*gf) return cmd_gf(g, go, argc, argv);
        if (*ls) return cmd_landscape(g, params_file, l_eig, argc, argv);
        if (*orc) return cmd_oracle(g, check, samples, argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
