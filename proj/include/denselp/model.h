#pragma once

#include <string>
#include <vector>

#include "denselp/mat.h"

namespace denselp {

// Per-pixel label scores, one row per pixel. Feasible rows live on the
// probability simplex; intermediate solver iterates may be infeasible.
using LabelScores = Mat;

// Row sums are checked in 64-bit; the default tolerance absorbs the 32-bit
// storage of the scores (a 1/m row cannot sum to 1 more tightly than a few
// float ulps).
bool is_feasible(const LabelScores& y, double tol = 1e-6);
bool is_integral(const LabelScores& y);

// Per pixel, mass 1 on the label of maximal score; ties go to the lowest
// label index.
LabelScores argmax_round(const LabelScores& y);

enum class FeatureKind { Spatial, Bilateral };

struct GaussianKernel {
    FeatureKind kind = FeatureKind::Spatial;
    float weight = 1.f;
    std::vector<float> sigmas; // one per feature dimension: 2 spatial, 5 bilateral

    int dim() const { return kind == FeatureKind::Spatial ? 2 : 5; }
    void validate() const; // throws on nonpositive sigma or dimension mismatch
};

GaussianKernel spatial_kernel(float weight, float sigma);
GaussianKernel bilateral_kernel(float weight, float sigma_spatial, float sigma_color);

// Pixel grid with positions (x, y) from top-left and RGB colors in [0, 255].
struct FeatureField {
    int n = 0;
    int width = 0;
    int height = 0;
    std::vector<float> positions; // 2n
    std::vector<float> colors;    // 3n
};

// Kernel features scaled so exp(-|f_a - f_b|^2 / 2) reproduces the configured
// kernel: every raw coordinate is divided by its sigma.
Mat make_features(const FeatureField& image, const GaussianKernel& kernel);

// Unary potentials plus a mixture of Gaussian kernels with Potts
// compatibility.
struct EnergyModel {
    Mat unaries; // n x m
    std::vector<GaussianKernel> kernels;

    int n() const { return unaries.rows; }
    int m() const { return unaries.cols; }
    float kernel_weight_sum() const;
};

struct SolverConfig {
    float lambda = 0.1f;  // proximal strength
    int outer_steps = 10; // K
    int fw_steps = 5;     // T
    int levels = 10;      // H
    float label_prune_threshold = 0.01f;
    float uncertain_threshold = 0.95f;
    float uncertain_fraction_cap = 0.10f;
    int qp_max_iters = 100;
    double qp_tol = 1e-8;
    int accel_switch_step = 2; // outer step after which the accelerated variants restrict
    int mf_iters = 20;
    int sg_iters = 20;
    float sg_step0 = 0.01f;

    void validate() const;
};

// key = value text file with one `kernel = ...` line per Gaussian kernel.
struct RunConfig {
    SolverConfig solver;
    std::vector<GaussianKernel> kernels;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

} // namespace denselp
