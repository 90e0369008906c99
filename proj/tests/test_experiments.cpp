#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <boost/math/distributions/binomial.hpp>

#include "gflow/experiments.hpp"

using namespace gflow;

namespace {

std::set<std::string> ini_keys(const std::string& ini) {
    std::set<std::string> keys;
    std::istringstream is(ini);
    std::string line, sec;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.front() == '[') {
            sec = line.substr(1, line.find(']') - 1);
            continue;
        }
        keys.insert(sec + "." + line.substr(0, line.find('=')));
    }
    return keys;
}

ExperimentConfig small_config() {
    ExperimentConfig c = preset("sec_4_6", 0.02);
    c.batch = 32;
    c.trials = 6;
    c.seed = 11;
    return c;
}

std::string slurp(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Histogram, TwoValuesTwoBins) {
    auto h = histogram({0.0, 1.0}, 2);
    ASSERT_EQ(h.counts.size(), 2u);
    EXPECT_EQ(h.counts[0], 1);
    EXPECT_EQ(h.counts[1], 1);
    EXPECT_DOUBLE_EQ(h.edges.front(), 0.0);
    EXPECT_DOUBLE_EQ(h.edges[1], 0.5);
    EXPECT_DOUBLE_EQ(h.edges.back(), 1.0);
}

TEST(Histogram, ConstantValuesFillOneBin) {
    auto h = histogram(std::vector<double>(17, 2.5), 5);
    int nonzero = 0;
    for (long c : h.counts) nonzero += c != 0;
    EXPECT_EQ(nonzero, 1);
    EXPECT_EQ(*std::max_element(h.counts.begin(), h.counts.end()), 17);
}

// The band is per bin; across 40 bins about one seed in ten puts some bin outside it.
TEST(Histogram, UniformSamplesStayInBinomialBand) {
    std::mt19937_64 g(1);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> v(300);
    for (auto& x : v) x = U(g);
    auto h = histogram(v, 40);
    long total = 0;
    for (long c : h.counts) {
        EXPECT_LE(std::abs(c - 7.5), 3.0 * std::sqrt(300.0 / 40.0));
        total += c;
    }
    EXPECT_EQ(total, 300);
    EXPECT_EQ(h.edges.size(), 41u);
}

TEST(Histogram, BandExceedanceMatchesBinomialTail) {
    // a bin leaves the band iff its count is >= 16; P from the Binomial(300, 1/40) law
    boost::math::binomial_distribution<double> B(300, 1.0 / 40.0);
    const double p = boost::math::cdf(boost::math::complement(B, 15.0));
    std::mt19937_64 g(99);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int reps = 2000;
    long out = 0;
    std::vector<double> v(300);
    for (int r = 0; r < reps; ++r) {
        for (auto& x : v) x = U(g);
        for (long c : histogram(v, 40).counts) out += std::abs(c - 7.5) > 3.0 * std::sqrt(7.5);
    }
    const double n = 40.0 * reps;
    EXPECT_NEAR(out / n, p, 5.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Histogram, Errors) {
    EXPECT_THROW(histogram({}, 3), std::invalid_argument);
    EXPECT_THROW(histogram({1.0}, 0), std::invalid_argument);
    EXPECT_THROW(histogram({1.0, NAN}, 2), std::invalid_argument);
}

TEST(Curves, RmsMatchesHandComputation) {
    // trials (3, 1) and (4, 0): rms = (12.5)^{1/2} and (0.5)^{1/2}
    auto c = rms_curve({1, 21}, {{3.0, 1.0}, {4.0, 0.0}});
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c[0].step, 1);
    EXPECT_NEAR(c[0].value, std::sqrt(12.5), 1e-15);
    EXPECT_NEAR(c[1].value, std::sqrt(0.5), 1e-15);
    // squares 9, 16: sample sd 4.9497, se 3.5, band 3 * 3.5 / (2 rms)
    EXPECT_NEAR(c[0].stderr_band, 3.0 * 3.5 / (2.0 * std::sqrt(12.5)), 1e-12);
}

TEST(Curves, SingleTrialAndZeroGradients) {
    auto one = rms_curve({1, 2, 3}, {{0.5, 0.25, 2.0}});
    EXPECT_DOUBLE_EQ(one[0].value, 0.5);
    EXPECT_DOUBLE_EQ(one[1].value, 0.25);
    EXPECT_DOUBLE_EQ(one[2].value, 2.0);
    auto zero = rms_curve({1, 2}, {{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}});
    for (auto& p : zero) {
        EXPECT_EQ(p.value, 0.0);
        EXPECT_EQ(p.stderr_band, 0.0);
    }
}

TEST(Curves, PermutationInvariant) {
    std::mt19937_64 g(5);
    std::normal_distribution<double> N;
    std::vector<std::vector<double>> s(37, std::vector<double>(4));
    for (auto& r : s)
        for (auto& x : r) x = 1e3 * N(g);
    auto a = rms_curve({1, 2, 3, 4}, s);
    std::shuffle(s.begin(), s.end(), g);
    auto b = rms_curve({1, 2, 3, 4}, s);
    for (int k = 0; k < 4; ++k) {
        EXPECT_EQ(a[k].value, b[k].value);
        EXPECT_EQ(a[k].stderr_band, b[k].stderr_band);
    }
}

TEST(Curves, CurveStatsFromSnapshots) {
    auto c = small_config();
    TrainSpec spec = c.train_spec();
    spec.keep_snapshots = true;
    spec.checkpoints = {1, 11, 21, 31};
    std::vector<TrialRecord> recs;
    for (int i = 0; i < 3; ++i) {
        Rng rng(100 + i);
        recs.push_back(train(spec, init_deep(c.arch(), c.init, rng), rng));
    }
    auto cs = curve_stats(recs, {1, 11, 21, 31}, 21);
    EXPECT_EQ(cs.distance[2].value, 0.0);
    EXPECT_GT(cs.distance[0].value, 0.0);
    // gradient curve is the rms of the recorded norms
    double m = 0.0;
    for (auto& r : recs) m += r.grad_norm[1] * r.grad_norm[1];
    EXPECT_NEAR(cs.grad_norm[1].value, std::sqrt(m / 3.0), 1e-14);
    auto single = curve_stats({recs[0]}, {1, 31}, 31);
    EXPECT_DOUBLE_EQ(single.grad_norm[0].value, recs[0].grad_norm[0]);
    EXPECT_DOUBLE_EQ(single.distance[0].value, (recs[0].snapshots[0] - recs[0].snapshots[3]).norm());
    EXPECT_THROW(curve_stats(recs, {1, 11}, 15), std::invalid_argument);
    EXPECT_THROW(curve_stats(recs, {1, 12}, 21), std::invalid_argument);
    recs[1].snapshots.clear();
    EXPECT_THROW(curve_stats(recs, {1}, 1), std::invalid_argument);
}

TEST(Presets, Sec44MatchesPublishedProtocol) {
    auto c = preset("sec_4_4");
    EXPECT_EQ(c.dims, (std::vector<int>{1, 10, 1}));
    EXPECT_EQ(preset_widths("sec_4_4"), (std::vector<int>{10, 100, 1000}));
    EXPECT_EQ(c.activation, Activation::clipping);
    EXPECT_EQ(c.init.kind, InitScheme::custom_4_4);
    EXPECT_EQ(c.batch, 1024);
    EXPECT_EQ(c.steps, 10000);
    EXPECT_EQ(c.trials, 300);
    EXPECT_EQ(c.bins, 40);
    EXPECT_EQ(c.target, "abs_quarter");
    EXPECT_EQ(c.ref_step, 9981);
    auto cp = c.checkpoints();
    ASSERT_EQ(cp.size(), 499u);
    EXPECT_EQ(cp.front(), 1);
    EXPECT_EQ(cp.back(), 20 * 498 + 1);
    EXPECT_EQ(c.opt.kind, OptimizerConfig::sgd);
    EXPECT_DOUBLE_EQ(c.opt.lr(149), 1e-2);
    EXPECT_DOUBLE_EQ(c.opt.lr(150), 5e-3);
    EXPECT_DOUBLE_EQ(c.opt.lr(300), 2.5e-3);
    // trainable: indices (l, 2l] and 3l + 1
    auto m = trainable_mask(c.arch(), c.trainable);
    for (int i = 1; i <= 31; ++i) EXPECT_EQ(m[i - 1], (i > 10 && i <= 20) || i == 31 ? 1.0 : 0.0) << i;
    EXPECT_DOUBLE_EQ(named_target(c.target)(0.0625), 0.5);
}

TEST(Presets, RemainingSections) {
    auto c5 = preset("sec_4_5", 1.0, 20);
    EXPECT_EQ(c5.dims, (std::vector<int>{1, 20, 1}));
    EXPECT_EQ(c5.bins, 200);
    EXPECT_EQ(c5.ref_step, 9981);
    EXPECT_DOUBLE_EQ(c5.opt.lr(499), 0.1);
    EXPECT_DOUBLE_EQ(c5.opt.lr(500), 0.05);
    auto m5 = trainable_mask(c5.arch(), c5.trainable);
    EXPECT_EQ(m5.sum(), 20.0);
    EXPECT_EQ(m5.segment(20, 20).sum(), 20.0);
    EXPECT_NEAR(named_target("x4_sin")(0.5), 0.0625 * std::sin(0.5), 1e-16);

    for (std::string n : {"sec_4_6", "sec_4_7", "sec_4_8", "sec_4_9", "sec_4_10", "sec_4_11", "sec_4_12", "sec_4_13"}) {
        auto c = preset(n);
        EXPECT_EQ(c.bins, 80) << n;
        EXPECT_EQ(c.ref_step, 9991) << n;
        EXPECT_EQ(c.checkpoints().size(), 999u) << n;
        EXPECT_EQ(c.checkpoints().back(), 9981) << n;
        EXPECT_EQ(c.target, "quadratic") << n;
        EXPECT_EQ(trainable_mask(c.arch(), c.trainable).sum(), (double)c.arch().param_count()) << n;
    }
    EXPECT_EQ(preset("sec_4_7").arch().param_count(), 97);
    EXPECT_EQ(preset("sec_4_8").arch().param_count(), 2701);
    EXPECT_EQ(preset("sec_4_12").arch().param_count(), 2209);
    EXPECT_EQ(preset("sec_4_8").init.kind, InitScheme::xavier_normal);
    EXPECT_EQ(preset("sec_4_9").init.kind, InitScheme::he_normal);
    auto a = preset("sec_4_11");
    EXPECT_EQ(a.opt.kind, OptimizerConfig::adam);
    EXPECT_DOUBLE_EQ(a.opt.alpha, 0.9);
    EXPECT_DOUBLE_EQ(a.opt.beta, 0.999);
    EXPECT_DOUBLE_EQ(a.opt.eps, 1e-8);
    EXPECT_DOUBLE_EQ(a.opt.lr(500), 5e-3);
    EXPECT_EQ(preset("sec_4_8").opt.halve_every, 0);
    EXPECT_EQ(preset_names().size(), 10u);
}

TEST(Presets, ScaleShrinksTrialsAndSteps) {
    auto c = preset("sec_4_4", 0.2);
    EXPECT_EQ(c.trials, 60);
    EXPECT_EQ(c.steps, 2000);
    EXPECT_EQ(c.ref_step, 1981);
    EXPECT_EQ(c.checkpoints().back(), 1961);
    EXPECT_DOUBLE_EQ(c.scale, 0.2);
    EXPECT_THROW(preset("sec_4_4", 0.0), std::invalid_argument);
    EXPECT_THROW(preset("sec_4_4", 1e-4), std::invalid_argument);
    EXPECT_THROW(preset("sec_4_14"), std::invalid_argument);
    EXPECT_THROW(preset("sec_4_8", 1.0, 10), std::invalid_argument);
}

TEST(MonteCarlo, AggregatesEveryTrial) {
    auto c = small_config();
    auto s = run_monte_carlo(c);
    ASSERT_EQ(s.seeds.size(), (std::size_t)c.trials);
    EXPECT_TRUE(s.aborted.empty());
    EXPECT_EQ(s.completed(), c.trials);
    long total = 0;
    for (long k : s.histogram.counts) total += k;
    EXPECT_EQ(total, c.trials);
    EXPECT_EQ(s.histogram.counts.size(), (std::size_t)c.bins);
    EXPECT_EQ(s.grad_norm_curve.size(), c.checkpoints().size());
    EXPECT_EQ(s.distance_curve.size(), c.checkpoints().size());
    for (double f : s.final_losses) EXPECT_TRUE(std::isfinite(f) && f >= 0.0);
    for (int i = 0; i < c.trials; ++i) EXPECT_EQ(s.seeds[i], trial_seed(c.seed, i));
    // a trial rerun by hand reproduces its final loss
    Rng rng(s.seeds[2]);
    auto th0 = init_deep(c.arch(), c.init, rng);
    EXPECT_EQ(train(c.train_spec(), th0, rng).final_loss, s.final_losses[2]);
}

TEST(MonteCarlo, DeterministicAcrossRunsAndThreads) {
    auto c = small_config();
    auto a = run_monte_carlo(c);
    c.threads = 3;
    auto b = run_monte_carlo(c);
    EXPECT_EQ(a.final_losses, b.final_losses);
    EXPECT_EQ(histogram_csv(a.histogram), histogram_csv(b.histogram));
    EXPECT_EQ(curve_csv(a.grad_norm_curve), curve_csv(b.grad_norm_curve));
    EXPECT_EQ(curve_csv(a.distance_curve), curve_csv(b.distance_curve));
    c.seed = 12;
    EXPECT_NE(run_monte_carlo(c).final_losses, a.final_losses);
}

TEST(MonteCarlo, AbortsAreCountedNotResampled) {
    auto c = small_config();
    c.opt.lr0 = 1e6;
    c.trials = 4;
    auto s = run_monte_carlo(c);
    EXPECT_EQ(s.seeds.size(), 4u);
    EXPECT_EQ(s.aborted.size() + s.final_losses.size(), 4u);
    EXPECT_GT(s.aborted.size(), 0u);
    EXPECT_EQ(s.abort_reasons.size(), s.aborted.size());
    if (s.final_losses.empty()) EXPECT_TRUE(s.histogram.counts.empty());
}

TEST(MonteCarlo, GradientCurveFallsInEveryPreset) {
    for (auto& n : preset_names()) {
        auto c = preset(n, 0.05);
        c.batch = 64;
        c.trials = 8;
        c.seed = 3;
        auto s = run_monte_carlo(c);
        ASSERT_EQ(s.completed(), c.trials) << n;
        EXPECT_LT(s.grad_norm_curve.back().value, s.grad_norm_curve.front().value) << n;
    }
}

TEST(MonteCarlo, RejectsBadConfigs) {
    auto c = small_config();
    c.scale = 0.0;
    EXPECT_THROW(run_monte_carlo(c), std::invalid_argument);
    c = small_config();
    c.ref_step = c.steps + 1;
    EXPECT_THROW(run_monte_carlo(c), std::invalid_argument);
    c = small_config();
    c.checkpoint_count = 1000;
    EXPECT_THROW(run_monte_carlo(c), std::invalid_argument);
    c = small_config();
    c.target = "sin";
    EXPECT_THROW(run_monte_carlo(c), std::invalid_argument);
}

TEST(Config, IniRoundTripIsKeyIdentical) {
    for (auto& n : preset_names()) {
        auto c = preset(n, 0.1);
        c.seed = 77;
        std::string ini = config_to_ini(c);
        auto back = config_from_ini(ini);
        std::string again = config_to_ini(back);
        EXPECT_EQ(ini_keys(ini), ini_keys(again)) << n;
        EXPECT_EQ(ini, again) << n;
        EXPECT_EQ(back.seed, 77u);
        EXPECT_EQ(back.dims, c.dims);
    }
    auto c = small_config();
    c.opt.lr0 = 0.1 + 0.2;  // not a short decimal
    EXPECT_EQ(config_from_ini(config_to_ini(c)).opt.lr0, c.opt.lr0);
}

TEST(Config, PartialFilesStartFromThePreset) {
    auto c = config_from_ini("[experiment]\nname=sec_4_4\nscale=0.2\ntrials=7\n");
    EXPECT_EQ(c.trials, 7);
    EXPECT_EQ(c.steps, 2000);
    EXPECT_EQ(c.activation, Activation::clipping);
    EXPECT_THROW(config_from_ini("[experiment]\nbogus=1\n"), std::invalid_argument);
    EXPECT_THROW(config_from_ini("[extra]\nx=1\n"), std::invalid_argument);
    EXPECT_THROW(config_from_ini("[network]\ndims=1,x,1\n"), std::invalid_argument);
    EXPECT_THROW(config_from_ini("[experiment]\ntrials=many\n"), std::invalid_argument);
    EXPECT_THROW(config_from_ini("[optimizer]\nkind=rmsprop\n"), std::invalid_argument);
}

TEST(Figures, EmitSvgAndCsv) {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "gflow_fig_test";
    fs::create_directories(dir);
    AggregateStats s;
    s.config = small_config();
    std::mt19937_64 g(1);
    std::exponential_distribution<double> E(3.0);
    for (int i = 0; i < 300; ++i) s.final_losses.push_back(E(g));
    s.histogram = histogram(s.final_losses, 40);
    std::vector<long> steps;
    std::vector<double> vals;
    for (int k = 0; k < 499; ++k) {
        steps.push_back(20 * k + 1);
        vals.push_back(std::exp(-k / 100.0));
    }
    s.grad_norm_curve = rms_curve(steps, {vals});
    s.distance_curve = s.grad_norm_curve;

    std::string hp = (dir / "hist").string(), cp = (dir / "grad").string();
    emit_figure(s, FigureKind::histogram, hp);
    emit_figure(s, FigureKind::grad_norm, cp, true);
    std::string hsvg = slurp(hp + ".svg"), csvg = slurp(cp + ".svg");
    EXPECT_NE(hsvg.find("<svg"), std::string::npos);
    EXPECT_EQ(std::count(hsvg.begin(), hsvg.end(), '\n') > 40, true);
    EXPECT_NE(csvg.find("<polyline"), std::string::npos);
    std::string hcsv = slurp(hp + ".csv");
    EXPECT_EQ(hcsv.substr(0, hcsv.find('\n')), "edge_lo,edge_hi,count");
    EXPECT_EQ(std::count(hcsv.begin(), hcsv.end(), '\n'), 41);
    std::string ccsv = slurp(cp + ".csv");
    EXPECT_EQ(ccsv.substr(0, ccsv.find('\n')), "step,value,stderr_band");
    EXPECT_EQ(std::count(ccsv.begin(), ccsv.end(), '\n'), 500);

    EXPECT_THROW(emit_figure(s, FigureKind::histogram, "/nonexistent_dir/x/hist"), std::runtime_error);
    AggregateStats empty;
    EXPECT_THROW(emit_figure(empty, FigureKind::histogram, hp), std::invalid_argument);
    fs::remove_all(dir);
}
