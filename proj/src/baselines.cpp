#include "denselp/baselines.h"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace denselp {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(const Clock::time_point& t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

TraceRow energy_row(const EnergyModel& model, const PairwiseOperator& op, const LabelScores& y,
                    const std::string& phase, int k, const Clock::time_point& t0, int levels) {
    SolverConfig defaults;
    TraceRow row;
    row.phase = phase;
    row.k = k;
    row.t = 0;
    row.wall_ms = elapsed_ms(t0);
    row.lp_energy = lp_energy(model, op, y, levels);
    row.ip_energy = ip_energy(model, op, argmax_round(y));
    row.active_labels = int(prune_labels(y, defaults.label_prune_threshold).size());
    row.uncertain_pixels = int(
        select_uncertain(y, defaults.uncertain_threshold, defaults.uncertain_fraction_cap).size());
    return row;
}

} // namespace

std::pair<LabelScores, ProxTrace> mean_field(const EnergyModel& model,
                                             const PairwiseOperator& op, const LabelScores& y0,
                                             int iters) {
    if (!is_feasible(y0))
        throw std::invalid_argument("mean_field: initial point is not feasible");
    if (!model.unaries.same_shape(y0))
        throw std::invalid_argument("mean_field: unary shape mismatch");

    const auto t0 = Clock::now();
    const int n = y0.rows, m = y0.cols;
    const double w_self = model.kernel_weight_sum();
    SolverConfig defaults;

    ProxTrace trace;
    trace.rows.push_back(energy_row(model, op, y0, "init", -1, t0, defaults.levels));

    LabelScores y = y0;
    std::vector<double> in(std::size_t(n) * m), filtered(std::size_t(n) * m), logits(m);
    for (int it = 0; it < iters; ++it) {
        for (std::size_t i = 0; i < y.size(); ++i)
            in[i] = y.v[i];
        op.filter(in.data(), m, filtered.data());
        for (int a = 0; a < n; ++a) {
            // Potts message with the filter's self term removed; the constant
            // part across labels cancels in the softmax.
            double top = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < m; ++i) {
                logits[i] = -double(model.unaries(a, i)) + filtered[std::size_t(a) * m + i] -
                            w_self * double(y(a, i));
                top = std::max(top, logits[i]);
            }
            double z = 0.0;
            for (int i = 0; i < m; ++i) {
                logits[i] = std::exp(logits[i] - top);
                z += logits[i];
            }
            for (int i = 0; i < m; ++i)
                y(a, i) = float(logits[i] / z);
        }
        trace.rows.push_back(energy_row(model, op, y, "mf", it, t0, defaults.levels));
    }
    return {std::move(y), std::move(trace)};
}

std::pair<LabelScores, ProxTrace> sg_lp(const EnergyModel& model, const PairwiseOperator& op,
                                        const LabelScores& y0, int iters, int levels,
                                        float step0) {
    if (!is_feasible(y0))
        throw std::invalid_argument("sg_lp: initial point is not feasible");
    if (!model.unaries.same_shape(y0))
        throw std::invalid_argument("sg_lp: unary shape mismatch");

    const auto t0 = Clock::now();
    const int n = y0.rows, m = y0.cols;
    ProxTrace trace;
    trace.rows.push_back(energy_row(model, op, y0, "init", -1, t0, levels));

    LabelScores y = y0;
    for (int it = 0; it < iters; ++it) {
        // The pairwise subgradient has the conditional-gradient form with the
        // opposite sign.
        const Mat As = conditional_gradient(op, y, levels);
        const double eta = double(step0) / (1.0 + it);
        for (int a = 0; a < n; ++a) {
            thread_local std::vector<double> step;
            step.resize(m);
            for (int i = 0; i < m; ++i)
                step[i] = double(y(a, i)) -
                          eta * (double(model.unaries(a, i)) - double(As(a, i)));
            project_simplex_row(step.data(), m, step.data());
            for (int i = 0; i < m; ++i)
                y(a, i) = float(step[i]);
        }
        trace.rows.push_back(energy_row(model, op, y, "sglp", it, t0, levels));
    }
    return {std::move(y), std::move(trace)};
}

} // namespace denselp
