#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "denselp/energy.h"
#include "denselp/model.h"
#include "denselp/pairwise.h"

namespace denselp {

// Dual iterate of one proximal problem. alpha is never materialized: only the
// product A alpha is stored, which keeps the state at O(nm).
struct DualState {
    Mat alpha_tilde;         // n x m
    std::vector<float> beta; // n
    Mat gamma;               // n x m, nonnegative

    DualState() = default;
    DualState(int n, int m) : alpha_tilde(n, m), beta(n, 0.f), gamma(n, m) {}
};

struct TraceRow {
    std::string phase;
    int k = 0;
    int t = 0;
    double wall_ms = 0.0;
    double dual_objective = std::numeric_limits<double>::quiet_NaN();
    double lp_energy = std::numeric_limits<double>::quiet_NaN();
    double ip_energy = std::numeric_limits<double>::quiet_NaN();
    int active_labels = 0;
    int uncertain_pixels = 0;

    bool has_energies() const { return !std::isnan(lp_energy); }
};

struct ProxTrace {
    std::vector<TraceRow> rows;
};

enum class AccelVariant { LabelsOnly, LabelsAndPixels };

// beta_a = sum_i (phi_ai - alpha~_ai - gamma_ai) / m, the unique stationary
// point of g in beta.
void solve_beta(const Mat& alpha_tilde, const Mat& gamma, const Mat& phi,
                std::vector<float>& beta);

// Per-pixel nonnegative QP via the multiplicative update; every Q product is
// O(m) through the identity-plus-rank-one structure of Q = lambda (I - 1/m).
// gamma is warm-started from its previous value plus a small positive offset.
void solve_gamma(const Mat& alpha_tilde, const Mat& phi, const Mat& y_k, float lambda,
                 int qp_max_iters, double qp_tol, Mat& gamma);

// y~ = lambda (alpha~ + B beta + gamma - phi) + y_k
Mat recover_primal(const Mat& alpha_tilde, const std::vector<float>& beta, const Mat& gamma,
                   const Mat& phi, const Mat& y_k, float lambda);

// (A s)_ai = -sum_b (K_ab [y~_ai >= y~_bi] - K_ab [y~_ai <= y~_bi]),
// one Geq and one Leq pass of unit values per label channel. The raw overload
// keeps the 64-bit pipeline output for oracle-grade comparisons.
Mat conditional_gradient(const PairwiseOperator& op, const Mat& y_tilde, int levels);
void conditional_gradient(const PairwiseOperator& op, const Mat& y_tilde, int levels,
                          double* out);

// delta = clip_[0,1]( <alpha~ - As, y~> / (lambda |alpha~ - As|^2) ),
// zero when the direction is degenerate.
double optimal_step(const Mat& alpha_tilde, const Mat& As, const Mat& y_tilde, float lambda);

// Euclidean projection of every row onto the probability simplex. The core
// runs in 64-bit (row sums land within 1e-9 of one before storage rounding).
Mat project_simplex(const Mat& y);
void project_simplex_row(const double* in, int m, double* out);
void project_simplex_row(const float* in, int m, float* out);

// Smooth dual objective g evaluated from the stored O(nm) state.
double dual_objective(const DualState& s, const Mat& phi, const Mat& y_k, float lambda);

// Label i stays active iff max_a y_ai >= threshold; the globally best label
// is always retained.
std::vector<int> prune_labels(const LabelScores& y, float threshold);

// Pixels whose top score is below threshold, sorted ascending by top score
// and truncated to ceil(cap_fraction * n).
std::vector<int> select_uncertain(const LabelScores& y, float threshold, float cap_fraction);

std::pair<LabelScores, ProxTrace> prox_solve(const EnergyModel& model,
                                             const PairwiseOperator& op, const LabelScores& y0,
                                             const SolverConfig& cfg);

std::pair<LabelScores, ProxTrace> prox_solve_accelerated(const EnergyModel& model,
                                                         const PairwiseOperator& op,
                                                         const LabelScores& y0,
                                                         const SolverConfig& cfg,
                                                         AccelVariant variant);

} // namespace denselp
