#include "gflow/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace gflow {

namespace {

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::vector<int> split_ints(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t used = 0;
        int v = std::stoi(tok, &used);
        while (used < tok.size() && tok[used] == ' ') ++used;
        if (used != tok.size()) throw std::invalid_argument("bad integer list: " + s);
        out.push_back(v);
    }
    return out;
}

}  // namespace

std::string to_string(Trainable t) {
    switch (t) {
        case Trainable::all: return "all";
        case Trainable::biases: return "biases";
        case Trainable::inner_biases: return "inner_biases";
    }
    return "?";
}

Trainable parse_trainable(const std::string& s) {
    for (auto t : {Trainable::all, Trainable::biases, Trainable::inner_biases})
        if (to_string(t) == s) return t;
    throw std::invalid_argument("unknown trainable set: " + s);
}

Eigen::VectorXd trainable_mask(const Architecture& A, Trainable t) {
    A.validate();
    Eigen::VectorXd m = Eigen::VectorXd::Constant(A.param_count(), t == Trainable::all ? 1.0 : 0.0);
    if (t == Trainable::all) return m;
    const int last = t == Trainable::biases ? A.L() : 1;
    for (int k = 1; k <= last; ++k)
        for (int i = 1; i <= A.dims[k]; ++i) m[A.bias_index(k, i) - 1] = 1.0;
    return m;
}

std::function<double(double)> named_target(const std::string& name) {
    if (name == "abs_quarter") return [](double x) { return std::pow(std::abs(x), 0.25); };
    if (name == "x4_sin") return [](double x) { return x * x * x * x * std::sin(x); };
    if (name == "quadratic") return [](double x) { return x * x + 2.0 * x; };
    throw std::invalid_argument("unknown target: " + name);
}

std::vector<long> ExperimentConfig::checkpoints() const {
    std::vector<long> c;
    for (int k = 0; k < checkpoint_count; ++k) c.push_back((long)checkpoint_stride * k + 1);
    return c;
}

void ExperimentConfig::validate() const {
    arch().validate();
    init.validate();
    named_target(target);
    if (!(scale > 0.0)) throw std::invalid_argument("experiment: scale must be positive");
    if (batch < 1 || steps < 1 || trials < 1 || bins < 1 || threads < 1)
        throw std::invalid_argument("experiment: batch, steps, trials, bins and threads must be positive");
    if (checkpoint_stride < 1 || checkpoint_count < 1)
        throw std::invalid_argument("experiment: empty checkpoint grid");
    if ((long)checkpoint_stride * (checkpoint_count - 1) + 1 > steps)
        throw std::invalid_argument("experiment: checkpoints beyond the final step");
    if (ref_step < 0 || ref_step > steps) throw std::invalid_argument("experiment: reference step outside [0, steps]");
    if (!(opt.lr0 > 0.0)) throw std::invalid_argument("experiment: learning rate must be positive");
}

TrainSpec ExperimentConfig::train_spec() const {
    TrainSpec s;
    s.arch = arch();
    s.mask = trainable_mask(s.arch, trainable);
    s.opt = opt;
    s.target = named_target(target);
    s.batch = batch;
    s.steps = steps;
    s.checkpoints = checkpoints();
    s.ref_step = ref_step;
    return s;
}

// ---- presets

namespace {

struct PresetRow {
    const char* name;
    std::vector<int> widths;  // shallow presets; the deep ones fix dims
    std::vector<int> dims;
    Activation act;
    InitScheme::Kind init;
    Trainable trainable;
    OptimizerConfig::Kind opt;
    double lr0;
    int halve_every;
    const char* target;
    int bins;
    int stride;
};

const std::vector<PresetRow>& preset_table() {
    using K = InitScheme;
    using O = OptimizerConfig;
    static const std::vector<PresetRow> t = {
        {"sec_4_4", {10, 100, 1000}, {}, Activation::clipping, K::custom_4_4, Trainable::biases, O::sgd, 1e-2, 150, "abs_quarter", 40, 20},
        {"sec_4_5", {5, 20, 100}, {}, Activation::relu, K::custom_4_5, Trainable::inner_biases, O::sgd, 1e-1, 500, "x4_sin", 200, 20},
        {"sec_4_6", {5, 20, 150}, {}, Activation::relu, K::custom_4_6, Trainable::all, O::sgd, 1e-2, 0, "quadratic", 80, 10},
        {"sec_4_7", {32}, {}, Activation::relu, K::he_normal, Trainable::all, O::sgd, 1e-2, 0, "quadratic", 80, 10},
        {"sec_4_8", {}, {1, 50, 50, 1}, Activation::relu, K::xavier_normal, Trainable::all, O::sgd, 1e-2, 0, "quadratic", 80, 10},
        {"sec_4_9", {}, {1, 50, 50, 1}, Activation::relu, K::he_normal, Trainable::all, O::sgd, 1e-2, 0, "quadratic", 80, 10},
        {"sec_4_10", {}, {1, 50, 50, 1}, Activation::relu, K::xavier_normal, Trainable::all, O::adam, 1e-2, 500, "quadratic", 80, 10},
        {"sec_4_11", {}, {1, 50, 50, 1}, Activation::relu, K::he_normal, Trainable::all, O::adam, 1e-2, 500, "quadratic", 80, 10},
        {"sec_4_12", {}, {1, 32, 32, 32, 1}, Activation::relu, K::xavier_normal, Trainable::all, O::sgd, 1e-2, 0, "quadratic", 80, 10},
        {"sec_4_13", {}, {1, 32, 32, 32, 1}, Activation::relu, K::he_normal, Trainable::all, O::sgd, 1e-2, 0, "quadratic", 80, 10},
    };
    return t;
}

const PresetRow& find_preset(const std::string& name) {
    for (auto& r : preset_table())
        if (name == r.name) return r;
    throw std::invalid_argument("unknown preset: " + name);
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> n;
    for (auto& r : preset_table()) n.push_back(r.name);
    return n;
}

std::vector<int> preset_widths(const std::string& name) {
    auto& r = find_preset(name);
    return r.dims.empty() ? r.widths : std::vector<int>{};
}

ExperimentConfig preset(const std::string& name, double scale, int width) {
    auto& r = find_preset(name);
    if (!(scale > 0.0)) throw std::invalid_argument("preset: scale must be positive");
    ExperimentConfig c;
    c.name = r.name;
    if (r.dims.empty()) {
        int l = width == 0 ? *std::min_element(r.widths.begin(), r.widths.end()) : width;
        if (l < 1) throw std::invalid_argument("preset: width must be positive");
        c.dims = {1, l, 1};
    } else {
        if (width != 0) throw std::invalid_argument("preset: " + name + " has a fixed architecture");
        c.dims = r.dims;
    }
    c.activation = r.act;
    c.init.kind = r.init;
    c.trainable = r.trainable;
    c.opt.kind = r.opt;
    c.opt.lr0 = r.lr0;
    c.opt.halve_every = r.halve_every;
    c.target = r.target;
    c.batch = 1024;
    c.bins = r.bins;
    c.scale = scale;
    c.checkpoint_stride = r.stride;

    // full scale: 10000 steps, 300 trials, last checkpoint 10000 - 2*stride + 1,
    // reference 10000 - stride + 1
    c.steps = std::max(1L, std::lround(10000.0 * scale));
    c.trials = std::max(1, (int)std::lround(300.0 * scale));
    long last = c.steps - 2L * r.stride + 1;
    if (last < 1) throw std::invalid_argument("preset: scale too small for the checkpoint grid");
    c.checkpoint_count = (int)((last - 1) / r.stride) + 1;
    c.ref_step = c.steps - r.stride + 1;
    return c;
}

// ---- statistics

Histogram histogram(const std::vector<double>& values, int bins) {
    if (values.empty()) throw std::invalid_argument("histogram: no values");
    if (bins < 1) throw std::invalid_argument("histogram: bins must be >= 1");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("histogram: non-finite value");
    auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    double lo = *mn, hi = *mx;
    if (hi == lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    Histogram h;
    h.edges.resize(bins + 1);
    for (int k = 0; k <= bins; ++k) h.edges[k] = lo + (hi - lo) * k / bins;
    h.edges[bins] = hi;
    h.counts.assign(bins, 0);
    for (double v : values) {
        int k = (int)std::floor((v - lo) / (hi - lo) * bins);
        h.counts[std::clamp(k, 0, bins - 1)]++;
    }
    return h;
}

std::vector<CurvePoint> rms_curve(const std::vector<long>& steps, const std::vector<std::vector<double>>& series) {
    if (series.empty()) throw std::invalid_argument("rms_curve: no trials");
    for (auto& s : series)
        if (s.size() != steps.size()) throw std::invalid_argument("rms_curve: series length mismatch");
    const double n = (double)series.size();
    std::vector<CurvePoint> out;
    std::vector<double> sq(series.size());
    for (std::size_t k = 0; k < steps.size(); ++k) {
        for (std::size_t i = 0; i < series.size(); ++i) sq[i] = series[i][k] * series[i][k];
        // summing in sorted order keeps the result independent of the trial order
        std::sort(sq.begin(), sq.end());
        double mean = std::accumulate(sq.begin(), sq.end(), 0.0) / n;
        double var = 0.0;
        for (double q : sq) var += (q - mean) * (q - mean);
        var = series.size() > 1 ? var / (n - 1.0) : 0.0;
        double rms = std::sqrt(mean);
        double se_mean = std::sqrt(var / n);
        double band = rms > 0.0 ? 3.0 * se_mean / (2.0 * rms) : 0.0;
        out.push_back({steps[k], rms, band});
    }
    return out;
}

Curves curve_stats(const std::vector<TrialRecord>& records, const std::vector<long>& checkpoints,
                   long reference_step) {
    if (records.empty()) throw std::invalid_argument("curve_stats: no records");
    std::vector<std::vector<double>> g, d;
    for (auto& r : records) {
        auto pos = [&](long n) {
            auto it = std::find(r.checkpoints.begin(), r.checkpoints.end(), n);
            if (it == r.checkpoints.end()) throw std::invalid_argument("curve_stats: missing snapshot at step " + std::to_string(n));
            return (std::size_t)(it - r.checkpoints.begin());
        };
        if (r.snapshots.size() != r.checkpoints.size() || r.grad_norm.size() != r.checkpoints.size())
            throw std::invalid_argument("curve_stats: record without snapshots");
        const auto& ref = r.snapshots[pos(reference_step)];
        std::vector<double> gi, di;
        for (long n : checkpoints) {
            std::size_t k = pos(n);
            gi.push_back(r.grad_norm[k]);
            di.push_back((r.snapshots[k] - ref).norm());
        }
        g.push_back(std::move(gi));
        d.push_back(std::move(di));
    }
    return {rms_curve(checkpoints, g), rms_curve(checkpoints, d)};
}

AggregateStats run_monte_carlo(const ExperimentConfig& cfg) {
    cfg.validate();
    const TrainSpec spec = cfg.train_spec();
    const Architecture A = cfg.arch();
    std::vector<TrialRecord> recs(cfg.trials);

    auto work = [&](int i) {
        const std::uint64_t seed = trial_seed(cfg.seed, (std::uint64_t)i);
        Rng rng(seed);
        TrialRecord r;
        try {
            FlatParams th0 = init_deep(A, cfg.init, rng);
            r = train(spec, th0, rng);
        } catch (const std::exception& e) {
            r.aborted = true;
            r.error = e.what();
        }
        r.seed = seed;
        r.snapshots.clear();
        r.final_params.resize(0);
        recs[i] = std::move(r);
    };
    const int nt = std::max(1, std::min(cfg.threads, cfg.trials));
    if (nt == 1) {
        for (int i = 0; i < cfg.trials; ++i) work(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < nt; ++t)
            pool.emplace_back([&] {
                for (int i; (i = next.fetch_add(1)) < cfg.trials;) work(i);
            });
        for (auto& th : pool) th.join();
    }

    AggregateStats s;
    s.config = cfg;
    std::vector<std::vector<double>> g, d;
    for (int i = 0; i < cfg.trials; ++i) {
        auto& r = recs[i];
        s.seeds.push_back(r.seed);
        if (r.aborted) {
            s.aborted.push_back(i);
            s.abort_reasons.push_back(r.error);
            continue;
        }
        s.initial_losses.push_back(r.initial_loss);
        s.final_losses.push_back(r.final_loss);
        g.push_back(r.grad_norm);
        d.push_back(r.dist);
    }
    if (s.final_losses.empty()) return s;
    s.histogram = histogram(s.final_losses, cfg.bins);
    const auto& steps = recs[0].aborted ? cfg.checkpoints() : recs[0].checkpoints;
    for (auto& r : recs)
        if (!r.aborted && r.checkpoints != steps) throw std::logic_error("run_monte_carlo: checkpoint grids differ");
    s.grad_norm_curve = rms_curve(steps, g);
    s.distance_curve = rms_curve(steps, d);
    return s;
}

// ---- config files

std::string config_to_ini(const ExperimentConfig& c) {
    namespace pt = boost::property_tree;
    pt::ptree t;
    t.put("experiment.name", c.name);
    t.put("experiment.target", c.target);
    t.put("experiment.trials", c.trials);
    t.put("experiment.steps", c.steps);
    t.put("experiment.batch", c.batch);
    t.put("experiment.scale", num(c.scale));
    t.put("experiment.seed", c.seed);
    t.put("experiment.threads", c.threads);
    t.put("network.dims", join(c.dims));
    t.put("network.activation", to_string(c.activation));
    t.put("network.init", to_string(c.init.kind));
    t.put("network.init_alpha", num(c.init.alpha));
    t.put("network.init_beta", num(c.init.beta));
    t.put("network.init_gamma", num(c.init.gamma));
    t.put("network.init_delta", num(c.init.delta));
    t.put("network.init_folded", c.init.folded ? 1 : 0);
    t.put("network.trainable", to_string(c.trainable));
    t.put("optimizer.kind", c.opt.kind == OptimizerConfig::adam ? "adam" : "sgd");
    t.put("optimizer.lr0", num(c.opt.lr0));
    t.put("optimizer.halve_every", c.opt.halve_every);
    t.put("optimizer.alpha", num(c.opt.alpha));
    t.put("optimizer.beta", num(c.opt.beta));
    t.put("optimizer.eps", num(c.opt.eps));
    t.put("output.checkpoint_stride", c.checkpoint_stride);
    t.put("output.checkpoint_count", c.checkpoint_count);
    t.put("output.ref_step", c.ref_step);
    t.put("output.bins", c.bins);
    std::ostringstream os;
    pt::write_ini(os, t);
    return os.str();
}

namespace {

// present keys must parse; absent keys keep the current value
template <class T>
void pick(const boost::property_tree::ptree& t, const std::string& path, T& v) {
    if (t.get_child_optional(path)) v = t.get<T>(path);
}

}  // namespace

ExperimentConfig config_from_ini(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree t;
    std::istringstream is(text);
    try {
        pt::read_ini(is, t);
    } catch (const pt::ini_parser_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    static const std::map<std::string, std::vector<std::string>> known = {
        {"experiment", {"name", "target", "trials", "steps", "batch", "scale", "seed", "threads"}},
        {"network", {"dims", "activation", "init", "init_alpha", "init_beta", "init_gamma", "init_delta",
                     "init_folded", "trainable"}},
        {"optimizer", {"kind", "lr0", "halve_every", "alpha", "beta", "eps"}},
        {"output", {"checkpoint_stride", "checkpoint_count", "ref_step", "bins"}},
    };
    for (auto& [sec, sub] : t) {
        auto it = known.find(sec);
        if (it == known.end()) throw std::invalid_argument("config: unknown section [" + sec + "]");
        for (auto& kv : sub)
            if (std::find(it->second.begin(), it->second.end(), kv.first) == it->second.end())
                throw std::invalid_argument("config: unknown key " + sec + "." + kv.first);
    }
    // missing keys fall back to the defaults of a fresh config, or to the named preset
    ExperimentConfig c;
    std::string nm = t.get<std::string>("experiment.name", c.name);
    bool is_preset = false;
    for (auto& p : preset_names()) is_preset |= p == nm;
    if (is_preset) c = preset(nm, t.get<double>("experiment.scale", 1.0));
    try {
        c.name = nm;
        pick(t, "experiment.target", c.target);
        pick(t, "experiment.trials", c.trials);
        pick(t, "experiment.steps", c.steps);
        pick(t, "experiment.batch", c.batch);
        pick(t, "experiment.scale", c.scale);
        pick(t, "experiment.seed", c.seed);
        pick(t, "experiment.threads", c.threads);
        if (auto v = t.get_optional<std::string>("network.dims")) c.dims = split_ints(*v);
        if (auto v = t.get_optional<std::string>("network.activation")) c.activation = parse_activation(*v);
        if (auto v = t.get_optional<std::string>("network.init")) c.init.kind = parse_init_kind(*v);
        pick(t, "network.init_alpha", c.init.alpha);
        pick(t, "network.init_beta", c.init.beta);
        pick(t, "network.init_gamma", c.init.gamma);
        pick(t, "network.init_delta", c.init.delta);
        int folded = c.init.folded ? 1 : 0;
        pick(t, "network.init_folded", folded);
        c.init.folded = folded != 0;
        if (auto v = t.get_optional<std::string>("network.trainable")) c.trainable = parse_trainable(*v);
        if (auto v = t.get_optional<std::string>("optimizer.kind")) {
            if (*v == "sgd") c.opt.kind = OptimizerConfig::sgd;
            else if (*v == "adam") c.opt.kind = OptimizerConfig::adam;
            else throw std::invalid_argument("config: unknown optimizer " + *v);
        }
        pick(t, "optimizer.lr0", c.opt.lr0);
        pick(t, "optimizer.halve_every", c.opt.halve_every);
        pick(t, "optimizer.alpha", c.opt.alpha);
        pick(t, "optimizer.beta", c.opt.beta);
        pick(t, "optimizer.eps", c.opt.eps);
        pick(t, "output.checkpoint_stride", c.checkpoint_stride);
        pick(t, "output.checkpoint_count", c.checkpoint_count);
        pick(t, "output.ref_step", c.ref_step);
        pick(t, "output.bins", c.bins);
    } catch (const pt::ptree_bad_data& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

// ---- artifacts

std::string histogram_csv(const Histogram& h) {
    std::string s = "edge_lo,edge_hi,count\n";
    for (std::size_t k = 0; k < h.counts.size(); ++k)
        s += num(h.edges[k]) + "," + num(h.edges[k + 1]) + "," + std::to_string(h.counts[k]) + "\n";
    return s;
}

std::string curve_csv(const std::vector<CurvePoint>& c) {
    std::string s = "step,value,stderr_band\n";
    for (auto& p : c) s += std::to_string(p.step) + "," + num(p.value) + "," + num(p.stderr_band) + "\n";
    return s;
}

std::string final_losses_csv(const AggregateStats& s) {
    std::string out = "trial,seed,aborted,initial_loss,final_loss\n";
    std::size_t k = 0, a = 0;
    for (std::size_t i = 0; i < s.seeds.size(); ++i) {
        out += std::to_string(i) + "," + std::to_string(s.seeds[i]) + ",";
        if (a < s.aborted.size() && s.aborted[a] == (int)i) {
            out += "1,,\n";
            ++a;
        } else {
            out += "0," + num(s.initial_losses[k]) + "," + num(s.final_losses[k]) + "\n";
            ++k;
        }
    }
    return out;
}

namespace {

constexpr double W = 640, H = 400, ML = 70, MR = 20, MT = 40, MB = 50;

std::string svg_head(const std::string& title) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" viewBox=\"0 0 %g %g\">\n"
                  "<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n"
                  "<text x=\"%g\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">",
                  W, H, W, H, W / 2);
    std::string s = buf;
    for (char ch : title) {
        if (ch == '<') s += "&lt;";
        else if (ch == '>') s += "&gt;";
        else if (ch == '&') s += "&amp;";
        else s += ch;
    }
    return s + "</text>\n";
}

std::string svg_axes(double x0, double x1, double y0, double y1, bool log_y) {
    char buf[1024];
    std::string s;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n"
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
                  ML, H - MB, W - MR, H - MB, ML, MT, ML, H - MB);
    s += buf;
    auto lab = [&](double v, bool ylab) { return log_y && ylab ? "1e" + num(std::round(v * 100) / 100) : num(std::round(v * 1e4) / 1e4); };
    std::snprintf(buf, sizeof buf,
                  "<g font-family=\"sans-serif\" font-size=\"11\">\n"
                  "<text x=\"%g\" y=\"%g\">%s</text>\n<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%s</text>\n"
                  "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%s</text>\n<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%s</text>\n</g>\n",
                  ML, H - MB + 16, lab(x0, false).c_str(), W - MR, H - MB + 16, lab(x1, false).c_str(), ML - 4, H - MB,
                  lab(y0, true).c_str(), ML - 4, MT + 10, lab(y1, true).c_str());
    s += buf;
    return s;
}

}  // namespace

std::string histogram_svg(const Histogram& h, const std::string& title) {
    if (h.counts.empty()) throw std::invalid_argument("histogram_svg: empty histogram");
    const double lo = h.edges.front(), hi = h.edges.back();
    const long cmax = std::max(1L, *std::max_element(h.counts.begin(), h.counts.end()));
    std::string s = svg_head(title) + svg_axes(lo, hi, 0, (double)cmax, false);
    const double pw = W - ML - MR, ph = H - MT - MB, bw = pw / h.counts.size();
    char buf[256];
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        double bh = ph * h.counts[k] / cmax;
        std::snprintf(buf, sizeof buf,
                      "<rect x=\"%.3f\" y=\"%.3f\" width=\"%.3f\" height=\"%.3f\" fill=\"steelblue\" stroke=\"white\" stroke-width=\"0.5\"/>\n",
                      ML + k * bw, H - MB - bh, bw, bh);
        s += buf;
    }
    return s + "</svg>\n";
}

std::string curve_svg(const std::vector<CurvePoint>& c, const std::string& title, bool log_y) {
    if (c.empty()) throw std::invalid_argument("curve_svg: empty curve");
    auto ty = [&](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };
    double x0 = (double)c.front().step, x1 = (double)c.back().step;
    double y0 = ty(c.front().value), y1 = y0;
    for (auto& p : c) {
        y0 = std::min(y0, ty(p.value));
        y1 = std::max(y1, ty(p.value));
    }
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    std::string s = svg_head(title) + svg_axes(x0, x1, y0, y1, log_y);
    s += "<polyline fill=\"none\" stroke=\"firebrick\" stroke-width=\"1.2\" points=\"";
    char buf[64];
    const double pw = W - ML - MR, ph = H - MT - MB;
    for (auto& p : c) {
        std::snprintf(buf, sizeof buf, "%.3f,%.3f ", ML + pw * (p.step - x0) / (x1 - x0),
                      H - MB - ph * (ty(p.value) - y0) / (y1 - y0));
        s += buf;
    }
    return s + "\"/>\n</svg>\n";
}

void emit_figure(const AggregateStats& s, FigureKind kind, const std::string& path, bool log_y) {
    if (s.final_losses.empty()) throw std::invalid_argument("emit_figure: no completed trials");
    const std::string tag = s.config.name + " (scale " + num(s.config.scale) + ")";
    std::string svg, csv;
    switch (kind) {
        case FigureKind::histogram:
            svg = histogram_svg(s.histogram, tag + ": final loss");
            csv = histogram_csv(s.histogram);
            break;
        case FigureKind::grad_norm:
            svg = curve_svg(s.grad_norm_curve, tag + ": gradient norm", log_y);
            csv = curve_csv(s.grad_norm_curve);
            break;
        case FigureKind::distance:
            svg = curve_svg(s.distance_curve, tag + ": distance to reference", log_y);
            csv = curve_csv(s.distance_curve);
            break;
    }
    for (auto [ext, body] : {std::pair{".svg", &svg}, std::pair{".csv", &csv}}) {
        std::ofstream f(path + ext, std::ios::binary);
        if (!f) throw std::runtime_error("emit_figure: cannot write " + path + ext);
        f << *body;
        if (!f) throw std::runtime_error("emit_figure: write failed for " + path + ext);
    }
}

}  // namespace gflow
