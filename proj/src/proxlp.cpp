#include "denselp/proxlp.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace denselp {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(const Clock::time_point& t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

constexpr double kQpOffset = 1e-10; // the paper's 0 < c << 1
constexpr double kStepGuard = 1e-12;

// min_{g >= 0} 1/2 g^T Q g - <g, h> with Q = lambda (I - 1/m), solved by the
// elementwise multiplicative update. Q products use Qx = lambda (x - sum(x)/m).
void gamma_qp_pixel(const float* at_row, const float* phi_row, const float* yk_row, int m,
                    float lambda, int max_iters, double tol, float* gamma_row,
                    std::vector<double>& g, std::vector<double>& h) {
    const double lam = lambda;
    double xsum = 0.0;
    for (int i = 0; i < m; ++i)
        xsum += double(at_row[i]) - double(phi_row[i]);
    for (int i = 0; i < m; ++i) {
        const double x = double(at_row[i]) - double(phi_row[i]);
        h[i] = -(lam * (x - xsum / m) + double(yk_row[i]));
        g[i] = double(gamma_row[i]) + kQpOffset;
    }

    for (int it = 0; it < max_iters; ++it) {
        double s = 0.0;
        for (int i = 0; i < m; ++i)
            s += g[i];
        for (int i = 0; i < m; ++i) {
            const double qneg = lam / m * (s - g[i]);           // (Q^- g)_i
            const double qabs = lam * (1.0 - 1.0 / m) * g[i] + qneg; // (|Q| g)_i
            const double hp = std::max(h[i], 0.0);
            const double hn = std::max(-h[i], 0.0);
            g[i] *= (2.0 * qneg + hp + kQpOffset) / (qabs + hn + kQpOffset);
        }
        // Stop on the projected-gradient fixed-point residual; an
        // objective-change rule stalls long before optimality here.
        double s2 = 0.0;
        for (int i = 0; i < m; ++i)
            s2 += g[i];
        double residual = 0.0;
        for (int i = 0; i < m; ++i) {
            const double grad = lam * (g[i] - s2 / m) - h[i];
            residual = std::max(residual, std::abs(g[i] - std::max(0.0, g[i] - grad)));
        }
        if (residual <= tol)
            break;
    }
    for (int i = 0; i < m; ++i)
        gamma_row[i] = float(g[i]);
}

} // namespace

// Stationarity of g in beta gives beta = B^T(phi - A alpha - gamma) / m: the
// residual alpha~ + B beta + gamma - phi must sum to zero over the labels of
// every pixel (the feasible y_k rows make the remaining terms cancel).
void solve_beta(const Mat& alpha_tilde, const Mat& gamma, const Mat& phi,
                std::vector<float>& beta) {
    const int n = phi.rows, m = phi.cols;
    beta.resize(n);
    for (int a = 0; a < n; ++a) {
        double s = 0.0;
        for (int i = 0; i < m; ++i)
            s += double(phi(a, i)) - double(alpha_tilde(a, i)) - double(gamma(a, i));
        beta[a] = float(s / m);
    }
}

void solve_gamma(const Mat& alpha_tilde, const Mat& phi, const Mat& y_k, float lambda,
                 int qp_max_iters, double qp_tol, Mat& gamma) {
    const int n = phi.rows, m = phi.cols;
    std::vector<double> g(m), h(m);
    for (int a = 0; a < n; ++a)
        gamma_qp_pixel(alpha_tilde.row(a), phi.row(a), y_k.row(a), m, lambda, qp_max_iters,
                       qp_tol, gamma.row(a), g, h);
}

Mat recover_primal(const Mat& alpha_tilde, const std::vector<float>& beta, const Mat& gamma,
                   const Mat& phi, const Mat& y_k, float lambda) {
    const int n = phi.rows, m = phi.cols;
    Mat y(n, m);
    for (int a = 0; a < n; ++a)
        for (int i = 0; i < m; ++i)
            y(a, i) = lambda * (alpha_tilde(a, i) + beta[a] + gamma(a, i) - phi(a, i)) + y_k(a, i);
    return y;
}

void conditional_gradient(const PairwiseOperator& op, const Mat& y_tilde, int levels,
                          double* out) {
    const int n = y_tilde.rows, m = y_tilde.cols;
    std::vector<double> ones(n, 1.0), geq(n), leq(n);
    std::vector<float> scores(n);
    for (int i = 0; i < m; ++i) {
        for (int a = 0; a < n; ++a)
            scores[a] = y_tilde(a, i);
        op.ordered_filter(ones.data(), 1, scores.data(), levels, OrderDirection::Geq, geq.data());
        op.ordered_filter(ones.data(), 1, scores.data(), levels, OrderDirection::Leq, leq.data());
        for (int a = 0; a < n; ++a)
            out[std::size_t(a) * m + i] = leq[a] - geq[a];
    }
}

Mat conditional_gradient(const PairwiseOperator& op, const Mat& y_tilde, int levels) {
    Mat As(y_tilde.rows, y_tilde.cols);
    std::vector<double> out(As.size());
    conditional_gradient(op, y_tilde, levels, out.data());
    for (std::size_t i = 0; i < As.size(); ++i)
        As.v[i] = float(out[i]);
    return As;
}

double optimal_step(const Mat& alpha_tilde, const Mat& As, const Mat& y_tilde, float lambda) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < alpha_tilde.size(); ++i) {
        const double d = double(alpha_tilde.v[i]) - double(As.v[i]);
        num += d * double(y_tilde.v[i]);
        den += d * d;
    }
    den *= double(lambda);
    if (den < kStepGuard)
        return 0.0;
    return std::clamp(num / den, 0.0, 1.0);
}

void project_simplex_row(const double* in, int m, double* out) {
    thread_local std::vector<double> u;
    u.assign(in, in + m);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, tau = 0.0;
    for (int j = 0; j < m; ++j) {
        css += u[j];
        const double t = (css - 1.0) / (j + 1);
        if (u[j] - t > 0.0)
            tau = t;
    }
    for (int i = 0; i < m; ++i)
        out[i] = std::max(in[i] - tau, 0.0);
}

void project_simplex_row(const float* in, int m, float* out) {
    thread_local std::vector<double> din, dout;
    din.assign(in, in + m);
    dout.resize(m);
    project_simplex_row(din.data(), m, dout.data());
    for (int i = 0; i < m; ++i)
        out[i] = float(dout[i]);
}

Mat project_simplex(const Mat& y) {
    Mat out(y.rows, y.cols);
    for (int a = 0; a < y.rows; ++a)
        project_simplex_row(y.row(a), y.cols, out.row(a));
    return out;
}

double dual_objective(const DualState& s, const Mat& phi, const Mat& y_k, float lambda) {
    const int n = phi.rows, m = phi.cols;
    double quad = 0.0, inner = 0.0, bsum = 0.0;
    for (int a = 0; a < n; ++a) {
        for (int i = 0; i < m; ++i) {
            const double r = double(s.alpha_tilde(a, i)) + double(s.beta[a]) +
                             double(s.gamma(a, i)) - double(phi(a, i));
            quad += r * r;
            inner += r * double(y_k(a, i));
        }
        bsum += double(s.beta[a]);
    }
    return 0.5 * double(lambda) * quad + inner - bsum;
}

std::vector<int> prune_labels(const LabelScores& y, float threshold) {
    const int m = y.cols;
    std::vector<float> colmax(m, -std::numeric_limits<float>::infinity());
    for (int a = 0; a < y.rows; ++a)
        for (int i = 0; i < m; ++i)
            colmax[i] = std::max(colmax[i], y(a, i));
    std::vector<int> active;
    for (int i = 0; i < m; ++i)
        if (colmax[i] >= threshold)
            active.push_back(i);
    if (active.empty()) {
        int best = 0;
        for (int i = 1; i < m; ++i)
            if (colmax[i] > colmax[best])
                best = i;
        active.push_back(best);
    }
    return active;
}

std::vector<int> select_uncertain(const LabelScores& y, float threshold, float cap_fraction) {
    const int n = y.rows;
    std::vector<std::pair<float, int>> uncertain;
    for (int a = 0; a < n; ++a) {
        float top = y(a, 0);
        for (int i = 1; i < y.cols; ++i)
            top = std::max(top, y(a, i));
        if (top < threshold)
            uncertain.emplace_back(top, a);
    }
    std::sort(uncertain.begin(), uncertain.end());
    // nudge below the product so a float fraction like 0.1f does not push
    // ceil(0.1 * n) one past the intended cap
    const std::size_t cap = std::size_t(std::ceil(double(cap_fraction) * n - 1e-6));
    if (uncertain.size() > cap)
        uncertain.resize(cap);
    std::vector<int> pixels;
    pixels.reserve(uncertain.size());
    for (const auto& [top, a] : uncertain)
        pixels.push_back(a);
    return pixels;
}

namespace {

// One proximal outer step: T Frank-Wolfe iterations of the dual block descent
// starting from feasible zero duals, then projection of the last primal.
// Rows outside `update` (when given) are frozen: they feed the filters as
// fixed sources but their state never moves.
void prox_outer_step(const Mat& phi, const PairwiseOperator& op, const SolverConfig& cfg,
                     const std::vector<char>* update, Mat& y, ProxTrace* trace,
                     const std::string& phase, int k, const Clock::time_point& t0) {
    const int n = y.rows, m = y.cols;
    DualState s(n, m);
    Mat y_tilde = y;
    std::vector<double> qp_g(m), qp_h(m);

    auto solve_block_and_recover = [&]() {
        for (int a = 0; a < n; ++a) {
            if (update && !(*update)[a])
                continue;
            gamma_qp_pixel(s.alpha_tilde.row(a), phi.row(a), y.row(a), m, cfg.lambda,
                           cfg.qp_max_iters, cfg.qp_tol, s.gamma.row(a), qp_g, qp_h);
            double bs = 0.0;
            for (int i = 0; i < m; ++i)
                bs += double(phi(a, i)) - double(s.alpha_tilde(a, i)) - double(s.gamma(a, i));
            s.beta[a] = float(bs / m);
            for (int i = 0; i < m; ++i)
                y_tilde(a, i) = cfg.lambda * (s.alpha_tilde(a, i) + s.beta[a] + s.gamma(a, i) -
                                              phi(a, i)) +
                                y(a, i);
        }
    };

    for (int t = 0; t < cfg.fw_steps; ++t) {
        solve_block_and_recover();
        const double dual = dual_objective(s, phi, y, cfg.lambda);

        Mat As = conditional_gradient(op, y_tilde, cfg.levels);
        if (update)
            for (int a = 0; a < n; ++a)
                if (!(*update)[a])
                    for (int i = 0; i < m; ++i)
                        As(a, i) = 0.f;

        const double delta = optimal_step(s.alpha_tilde, As, y_tilde, cfg.lambda);
        for (std::size_t i = 0; i < s.alpha_tilde.size(); ++i)
            s.alpha_tilde.v[i] = float((1.0 - delta) * s.alpha_tilde.v[i] + delta * As.v[i]);

        if (trace) {
            TraceRow row;
            row.phase = phase;
            row.k = k;
            row.t = t;
            row.wall_ms = elapsed_ms(t0);
            row.dual_objective = dual;
            trace->rows.push_back(row);
        }
    }

    // The projected primal belongs to the final alpha~, so the beta/gamma
    // block is brought up to date once more before projecting.
    solve_block_and_recover();
    for (int a = 0; a < n; ++a) {
        if (update && !(*update)[a])
            continue;
        project_simplex_row(y_tilde.row(a), m, y.row(a));
    }
}

TraceRow energy_row(const EnergyModel& model, const PairwiseOperator& op, const SolverConfig& cfg,
                    const LabelScores& y, const std::string& phase, int k, int t,
                    const Clock::time_point& t0) {
    TraceRow row;
    row.phase = phase;
    row.k = k;
    row.t = t;
    row.wall_ms = elapsed_ms(t0);
    row.lp_energy = lp_energy(model, op, y, cfg.levels);
    row.ip_energy = ip_energy(model, op, argmax_round(y));
    row.active_labels = int(prune_labels(y, cfg.label_prune_threshold).size());
    row.uncertain_pixels =
        int(select_uncertain(y, cfg.uncertain_threshold, cfg.uncertain_fraction_cap).size());
    return row;
}

} // namespace

std::pair<LabelScores, ProxTrace> prox_solve(const EnergyModel& model,
                                             const PairwiseOperator& op, const LabelScores& y0,
                                             const SolverConfig& cfg) {
    cfg.validate();
    if (!is_feasible(y0))
        throw std::invalid_argument("prox_solve: initial point is not feasible");
    if (!model.unaries.same_shape(y0))
        throw std::invalid_argument("prox_solve: unary shape mismatch");

    const auto t0 = Clock::now();
    ProxTrace trace;
    LabelScores y = y0;
    trace.rows.push_back(energy_row(model, op, cfg, y, "init", -1, -1, t0));

    for (int k = 0; k < cfg.outer_steps; ++k) {
        prox_outer_step(model.unaries, op, cfg, nullptr, y, &trace, "prox", k, t0);
        trace.rows.push_back(energy_row(model, op, cfg, y, "prox", k, cfg.fw_steps - 1, t0));
    }
    return {std::move(y), std::move(trace)};
}

std::pair<LabelScores, ProxTrace> prox_solve_accelerated(const EnergyModel& model,
                                                         const PairwiseOperator& op,
                                                         const LabelScores& y0,
                                                         const SolverConfig& cfg,
                                                         AccelVariant variant) {
    cfg.validate();
    if (!is_feasible(y0))
        throw std::invalid_argument("prox_solve_accelerated: initial point is not feasible");
    if (!model.unaries.same_shape(y0))
        throw std::invalid_argument("prox_solve_accelerated: unary shape mismatch");

    const std::string phase =
        variant == AccelVariant::LabelsOnly ? "prox_l" : "prox_acc";
    const auto t0 = Clock::now();
    ProxTrace trace;
    const int n = y0.rows, m = y0.cols;

    LabelScores y_full = y0;
    trace.rows.push_back(energy_row(model, op, cfg, y_full, "init", -1, -1, t0));

    const int switch_step = std::min(cfg.accel_switch_step, cfg.outer_steps);
    for (int k = 0; k < switch_step; ++k) {
        prox_outer_step(model.unaries, op, cfg, nullptr, y_full, &trace, phase, k, t0);
        trace.rows.push_back(energy_row(model, op, cfg, y_full, phase, k, cfg.fw_steps - 1, t0));
    }
    if (switch_step == cfg.outer_steps)
        return {std::move(y_full), std::move(trace)};

    // Restrict to the labels that carry mass in the intermediate solution;
    // for the fully accelerated variant additionally freeze certain pixels.
    const std::vector<int> active = prune_labels(y_full, cfg.label_prune_threshold);
    const int mm = int(active.size());
    const bool restrict_labels = mm < m;

    std::vector<char> update_mask;
    std::vector<char>* update = nullptr;
    if (variant == AccelVariant::LabelsAndPixels) {
        const std::vector<int> uncertain =
            select_uncertain(y_full, cfg.uncertain_threshold, cfg.uncertain_fraction_cap);
        if (uncertain.empty())
            return {std::move(y_full), std::move(trace)}; // every pixel is certain
        if (int(uncertain.size()) < n) {
            update_mask.assign(n, 0);
            for (int a : uncertain)
                update_mask[a] = 1;
            update = &update_mask;
        }
    }

    if (!restrict_labels && !update) {
        // The restriction is a no-op; continue exactly like prox_solve.
        for (int k = switch_step; k < cfg.outer_steps; ++k) {
            prox_outer_step(model.unaries, op, cfg, nullptr, y_full, &trace, phase, k, t0);
            trace.rows.push_back(
                energy_row(model, op, cfg, y_full, phase, k, cfg.fw_steps - 1, t0));
        }
        return {std::move(y_full), std::move(trace)};
    }

    Mat phi_sub(n, mm);
    Mat y_sub(n, mm);
    for (int a = 0; a < n; ++a) {
        for (int j = 0; j < mm; ++j) {
            phi_sub(a, j) = model.unaries(a, active[j]);
            y_sub(a, j) = y_full(a, active[j]);
        }
        if (!update || update_mask[a])
            project_simplex_row(y_sub.row(a), mm, y_sub.row(a));
    }
    const LabelScores frozen_full = y_full; // frozen rows keep these entries verbatim

    auto expand = [&](LabelScores& dst) {
        for (int a = 0; a < n; ++a) {
            if (update && !update_mask[a]) {
                for (int i = 0; i < m; ++i)
                    dst(a, i) = frozen_full(a, i);
                continue;
            }
            for (int i = 0; i < m; ++i)
                dst(a, i) = 0.f;
            for (int j = 0; j < mm; ++j)
                dst(a, active[j]) = y_sub(a, j);
        }
    };

    for (int k = switch_step; k < cfg.outer_steps; ++k) {
        prox_outer_step(phi_sub, op, cfg, update, y_sub, &trace, phase, k, t0);
        expand(y_full);
        trace.rows.push_back(energy_row(model, op, cfg, y_full, phase, k, cfg.fw_steps - 1, t0));
    }
    expand(y_full);
    return {std::move(y_full), std::move(trace)};
}

} // namespace denselp
