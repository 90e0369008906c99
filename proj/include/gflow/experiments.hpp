#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gflow/deep_sgd.hpp"
#include "gflow/random_init.hpp"

namespace gflow {

// which coordinates SGD may move
enum class Trainable { all, biases, inner_biases };
std::string to_string(Trainable t);
Trainable parse_trainable(const std::string& s);
Eigen::VectorXd trainable_mask(const Architecture& A, Trainable t);

// named targets on [0,1]: abs_quarter |x|^{1/4}, x4_sin x^4 sin x, quadratic x^2 + 2x
std::function<double(double)> named_target(const std::string& name);

struct ExperimentConfig {
    std::string name = "custom";
    std::vector<int> dims{1, 10, 1};
    Activation activation = Activation::relu;
    InitScheme init;
    Trainable trainable = Trainable::all;
    OptimizerConfig opt;
    std::string target = "quadratic";
    int batch = 1024;
    long steps = 10000;
    int trials = 300;
    // checkpoints stride*k + 1 for k = 0..checkpoint_count-1
    int checkpoint_stride = 20;
    int checkpoint_count = 499;
    int bins = 40;
    long ref_step = 9981;
    double scale = 1.0;
    std::uint64_t seed = 1;
    int threads = 1;

    Architecture arch() const { return {dims, activation}; }
    std::vector<long> checkpoints() const;
    TrainSpec train_spec() const;
    void validate() const;
};

std::vector<std::string> preset_names();
// reference widths of the hidden layer for the shallow presets; empty for the deep ones
std::vector<int> preset_widths(const std::string& name);
// Trials and steps are multiplied by scale. The checkpoint grid and the reference
// step keep their distance to the final step. width 0 picks the smallest reference width.
ExperimentConfig preset(const std::string& name, double scale = 1.0, int width = 0);

struct Histogram {
    std::vector<double> edges;  // bins + 1
    std::vector<long> counts;
};

// equal-width bins over [min, max], the last bin closed
Histogram histogram(const std::vector<double>& values, int bins);

struct CurvePoint {
    long step = 0;
    double value = 0.0;   // (mean of squares)^{1/2}
    double stderr_band = 0.0;  // 3 * standard error of the value (delta method)
};

// per-step root mean square of the per-trial values; series[i][k] is trial i at step k
std::vector<CurvePoint> rms_curve(const std::vector<long>& steps,
                                  const std::vector<std::vector<double>>& series);

struct Curves {
    std::vector<CurvePoint> grad_norm, distance;
};

// from kept snapshots: gradient norms as recorded and |Theta_n - Theta_ref| with
// Theta_ref the snapshot at reference_step
Curves curve_stats(const std::vector<TrialRecord>& records, const std::vector<long>& checkpoints,
                   long reference_step);

struct AggregateStats {
    ExperimentConfig config;
    std::vector<std::uint64_t> seeds;   // every trial, in index order
    std::vector<int> aborted;           // indices of aborted trials
    std::vector<std::string> abort_reasons;
    std::vector<double> initial_losses, final_losses;  // completed trials, in index order
    Histogram histogram;                // of final_losses
    std::vector<CurvePoint> grad_norm_curve, distance_curve;
    int completed() const { return (int)final_losses.size(); }
};

AggregateStats run_monte_carlo(const ExperimentConfig& cfg);

// ---- config files (INI, sections experiment / network / optimizer / output)
std::string config_to_ini(const ExperimentConfig& cfg);
ExperimentConfig config_from_ini(const std::string& text);

// ---- artifacts
std::string histogram_csv(const Histogram& h);
std::string curve_csv(const std::vector<CurvePoint>& c);
std::string final_losses_csv(const AggregateStats& s);

enum class FigureKind { histogram, grad_norm, distance };
// writes <path>.svg and <path>.csv; log_y only affects curves
void emit_figure(const AggregateStats& s, FigureKind kind, const std::string& path, bool log_y = false);
std::string histogram_svg(const Histogram& h, const std::string& title);
std::string curve_svg(const std::vector<CurvePoint>& c, const std::string& title, bool log_y);

}  // namespace gflow
