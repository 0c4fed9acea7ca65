#pragma once

#include "denselp/model.h"
#include "denselp/pairwise.h"

namespace denselp {

// Integer-program energy of an integral labeling, pairwise part evaluated
// through the filter in complement form (self terms cancel).
double ip_energy(const EnergyModel& model, const PairwiseOperator& op, const LabelScores& y);

// LP relaxation objective of a feasible point. The absolute differences are
// assembled from two ordered-filter passes per label channel, so energies and
// solver gradients share one approximation.
double lp_energy(const EnergyModel& model, const PairwiseOperator& op, const LabelScores& y,
                 int levels);

// Pairwise part of lp_energy alone (nonnegative up to filter noise).
double lp_pairwise(const PairwiseOperator& op, const LabelScores& y, int levels);

// lp_energy(y) + |y - y_prev|^2 / (2 lambda)
double proximal_objective(const EnergyModel& model, const PairwiseOperator& op,
                          const LabelScores& y, const LabelScores& y_prev, float lambda,
                          int levels);

} // namespace denselp
