#pragma once

#include <cstddef>
#include <vector>

#include "denselp/mat.h"

namespace denselp {

enum class OrderDirection { Geq, Leq };

// Level index of every score: floor(yhat * (levels-1)) after affinely mapping
// [min, max] to [0, 1]. Degenerate all-equal scores land in bin 0, so the
// ordering constraint is universally satisfied.
std::vector<int> score_bins(const float* scores, int n, int levels);

// Permutohedral-lattice Gaussian filtering. The lattice is immutable after
// construction and reusable across all levels and solver iterations.
//
// Values flow through the pipeline in 64-bit; the splat/slice weights carry a
// per-point gain correction that makes the response of an isolated feature
// point exactly its own value (self kernel 1).
class PermutohedralLattice {
public:
    // features: n x d, finite entries, pre-divided by the kernel sigmas.
    explicit PermutohedralLattice(const Mat& features);

    int point_count() const { return n_; }
    int dim() const { return d_; }
    int lattice_size() const { return m_; }

    // out_a ~= sum_b exp(-|f_a - f_b|^2 / 2) v_b, self term included.
    // values and out are n x channels, interleaved per point.
    void filter(const double* values, int channels, double* out) const;

    // Ordering-constrained variant: point a receives b's value only if
    // bin_a >= bin_b (Geq) or bin_a <= bin_b (Leq). Each of the `levels`
    // banks is blurred independently; a point slices at its own level.
    void ordered_filter(const double* values, int channels, const int* bins, int levels,
                        OrderDirection dir, double* out) const;

    // Splat followed immediately by slice (no blur): symmetric positive
    // operator, exposed for verification.
    void splat_slice(const double* values, int channels, double* out) const;

    const int* simplex(int a) const { return offset_.data() + std::size_t(a) * (d_ + 1); }
    const float* barycentric(int a) const {
        return barycentric_.data() + std::size_t(a) * (d_ + 1);
    }
    float point_scale(int a) const { return scale_[a]; }

private:
    void splat_point(int b, const double* values, int channels, std::vector<double>& bank) const;
    void slice_point(int a, const std::vector<double>& bank, int channels, double* out) const;
    void blur(std::vector<double>& bank, std::vector<double>& scratch, int channels) const;

    int n_ = 0; // feature points
    int d_ = 0; // feature dimension
    int m_ = 0; // lattice points

    std::vector<int> offset_;        // n x (d+1) lattice ids of the enclosing simplex
    std::vector<float> barycentric_; // n x (d+1)
    std::vector<float> scale_;       // n, per-point gain correction
    std::vector<int> blur_n1_;       // (d+1) x m, -1 where the neighbor is absent
    std::vector<int> blur_n2_;
};

} // namespace denselp
