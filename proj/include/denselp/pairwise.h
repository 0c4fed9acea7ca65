#pragma once

#include <memory>
#include <vector>

#include "denselp/mat.h"
#include "denselp/model.h"
#include "denselp/permutohedral.h"

namespace denselp {

// Pairwise Gaussian sums over all pixel pairs, K_ab = sum_c w_c k_c(f_a, f_b).
// Two backends share this surface: the permutohedral lattice (linear time,
// approximate) and the dense O(n^2) evaluation (exact, guard-limited), so the
// solver and the energies can run against either.
class PairwiseOperator {
public:
    virtual ~PairwiseOperator() = default;

    virtual int point_count() const = 0;

    // out_a = sum_b K_ab v_b, self term included. values/out: n x channels.
    virtual void filter(const double* values, int channels, double* out) const = 0;

    // out_a = sum_b K_ab v_b [score_a >= score_b] (Geq) or [<=] (Leq).
    virtual void ordered_filter(const double* values, int channels, const float* scores,
                                int levels, OrderDirection dir, double* out) const = 0;

    // Convenience wrappers with shape checks.
    Mat filter(const Mat& values) const;
    Mat ordered_filter(const Mat& values, const std::vector<float>& scores, int levels,
                       OrderDirection dir) const;
};

// One lattice per kernel, built once from the image features and reused for
// every level and every solver iteration.
class LatticeOperator : public PairwiseOperator {
public:
    LatticeOperator(const FeatureField& image, const std::vector<GaussianKernel>& kernels);

    int point_count() const override { return n_; }
    int kernel_count() const { return int(lattices_.size()); }
    const PermutohedralLattice& lattice(int c) const { return *lattices_[c]; }

    using PairwiseOperator::filter;
    using PairwiseOperator::ordered_filter;
    void filter(const double* values, int channels, double* out) const override;
    void ordered_filter(const double* values, int channels, const float* scores, int levels,
                        OrderDirection dir, double* out) const override;

private:
    int n_ = 0;
    std::vector<float> weights_;
    std::vector<std::unique_ptr<PermutohedralLattice>> lattices_;
};

// Exact dense sums; the ordered variant compares raw scores, no binning.
class NaiveOperator : public PairwiseOperator {
public:
    static constexpr int kMaxPoints = 10000;

    NaiveOperator(const FeatureField& image, const std::vector<GaussianKernel>& kernels);

    int point_count() const override { return n_; }

    using PairwiseOperator::filter;
    using PairwiseOperator::ordered_filter;
    void filter(const double* values, int channels, double* out) const override;
    void ordered_filter(const double* values, int channels, const float* scores, int levels,
                        OrderDirection dir, double* out) const override;

    double kernel_value(int a, int b) const;

private:
    int n_ = 0;
    std::vector<float> weights_;
    std::vector<Mat> features_; // per kernel, n x d
};

// Exact brute-force references for a single kernel with pre-scaled features.
Mat naive_gaussian_filter(const Mat& features, const Mat& values);
Mat naive_ordered_filter(const Mat& features, const Mat& values, const std::vector<float>& scores,
                         OrderDirection dir);

// Verification oracle: runs the plain filter once per level on inputs masked
// to the bins the ordering constraint admits, then reads each point at its
// own level. By construction this reproduces the ordered filter up to
// floating-point associativity.
Mat level_masked_oracle(const PairwiseOperator& op, const Mat& values,
                        const std::vector<float>& scores, int levels, OrderDirection dir);

} // namespace denselp
