#pragma once

#include <utility>

#include "denselp/proxlp.h"

namespace denselp {

// Standard dense-CRF mean-field fixed point with Potts compatibility:
// per pixel, y' proportional to exp(-phi + filtered(y) - w_total y), rows
// renormalized. Every iterate is feasible. MF5 is this with iters = 5.
std::pair<LabelScores, ProxTrace> mean_field(const EnergyModel& model,
                                             const PairwiseOperator& op, const LabelScores& y0,
                                             int iters);

// Projected subgradient descent on the LP relaxation with the diminishing
// step eta_t = step0 / (1 + t). Deliberately a weak baseline.
std::pair<LabelScores, ProxTrace> sg_lp(const EnergyModel& model, const PairwiseOperator& op,
                                        const LabelScores& y0, int iters, int levels,
                                        float step0 = 0.01f);

} // namespace denselp
