#include "denselp/energy.h"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace denselp {

double ip_energy(const EnergyModel& model, const PairwiseOperator& op, const LabelScores& y) {
    if (!is_integral(y))
        throw std::invalid_argument("ip_energy: labeling is not integral");
    if (!model.unaries.same_shape(y))
        throw std::invalid_argument("ip_energy: unary shape mismatch");
    const int n = y.rows, m = y.cols;

    double unary = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        unary += double(model.unaries.v[i]) * double(y.v[i]);

    // Filter the m indicator channels plus an all-ones channel; the pairwise
    // part is sum_a sum_i y_ai (G_a - F_ai), which drops the self term.
    std::vector<double> in(std::size_t(n) * (m + 1));
    std::vector<double> out(in.size());
    for (int a = 0; a < n; ++a) {
        for (int i = 0; i < m; ++i)
            in[std::size_t(a) * (m + 1) + i] = y(a, i);
        in[std::size_t(a) * (m + 1) + m] = 1.0;
    }
    op.filter(in.data(), m + 1, out.data());

    double pairwise = 0.0;
    for (int a = 0; a < n; ++a) {
        const double g = out[std::size_t(a) * (m + 1) + m];
        for (int i = 0; i < m; ++i)
            if (y(a, i) != 0.f)
                pairwise += g - out[std::size_t(a) * (m + 1) + i];
    }
    return unary + pairwise;
}

double lp_pairwise(const PairwiseOperator& op, const LabelScores& y, int levels) {
    const int n = y.rows, m = y.cols;
    std::vector<double> in(std::size_t(n) * 2);
    std::vector<double> geq(in.size()), leq(in.size());
    std::vector<float> scores(n);

    // Per channel: |y_a - y_b| = (y_a - y_b)[y_a >= y_b] + (y_b - y_a)[y_b >= y_a];
    // pairs sharing a bin cancel between the two passes.
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
        for (int a = 0; a < n; ++a) {
            scores[a] = y(a, i);
            in[std::size_t(a) * 2 + 0] = y(a, i);
            in[std::size_t(a) * 2 + 1] = 1.0;
        }
        op.ordered_filter(in.data(), 2, scores.data(), levels, OrderDirection::Geq, geq.data());
        op.ordered_filter(in.data(), 2, scores.data(), levels, OrderDirection::Leq, leq.data());
        double s = 0.0;
        for (int a = 0; a < n; ++a) {
            const double gv = geq[std::size_t(a) * 2 + 0], g1 = geq[std::size_t(a) * 2 + 1];
            const double lv = leq[std::size_t(a) * 2 + 0], l1 = leq[std::size_t(a) * 2 + 1];
            s += double(y(a, i)) * (g1 - l1) - gv + lv;
        }
        total += s;
    }
    return total / 2.0;
}

double lp_energy(const EnergyModel& model, const PairwiseOperator& op, const LabelScores& y,
                 int levels) {
    if (!is_feasible(y))
        throw std::invalid_argument("lp_energy: point is not feasible");
    if (!model.unaries.same_shape(y))
        throw std::invalid_argument("lp_energy: unary shape mismatch");
    double unary = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        unary += double(model.unaries.v[i]) * double(y.v[i]);
    return unary + lp_pairwise(op, y, levels);
}

double proximal_objective(const EnergyModel& model, const PairwiseOperator& op,
                          const LabelScores& y, const LabelScores& y_prev, float lambda,
                          int levels) {
    if (!(lambda > 0.f))
        throw std::invalid_argument("proximal_objective: lambda must be positive");
    if (!y.same_shape(y_prev))
        throw std::invalid_argument("proximal_objective: shape mismatch");
    double prox = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = double(y.v[i]) - double(y_prev.v[i]);
        prox += d * d;
    }
    return lp_energy(model, op, y, levels) + prox / (2.0 * double(lambda));
}

} // namespace denselp
