#include "denselp/pairwise.h"

#include <cmath>
#include <stdexcept>

namespace denselp {

Mat PairwiseOperator::filter(const Mat& values) const {
    if (values.rows != point_count())
        throw std::invalid_argument("filter: value row count does not match point count");
    std::vector<double> in(values.size()), out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        in[i] = values.v[i];
    filter(in.data(), values.cols, out.data());
    Mat r(values.rows, values.cols);
    for (std::size_t i = 0; i < r.size(); ++i)
        r.v[i] = float(out[i]);
    return r;
}

Mat PairwiseOperator::ordered_filter(const Mat& values, const std::vector<float>& scores,
                                     int levels, OrderDirection dir) const {
    if (values.rows != point_count() || int(scores.size()) != point_count())
        throw std::invalid_argument("ordered_filter: shape mismatch");
    std::vector<double> in(values.size()), out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        in[i] = values.v[i];
    ordered_filter(in.data(), values.cols, scores.data(), levels, dir, out.data());
    Mat r(values.rows, values.cols);
    for (std::size_t i = 0; i < r.size(); ++i)
        r.v[i] = float(out[i]);
    return r;
}

LatticeOperator::LatticeOperator(const FeatureField& image,
                                 const std::vector<GaussianKernel>& kernels)
    : n_(image.n) {
    for (const auto& k : kernels) {
        k.validate();
        if (k.weight == 0.f)
            continue;
        weights_.push_back(k.weight);
        lattices_.push_back(std::make_unique<PermutohedralLattice>(make_features(image, k)));
    }
}

namespace {
thread_local std::vector<double> t_mix; // kernel mixing buffer, reused across calls
} // namespace

void LatticeOperator::filter(const double* values, int channels, double* out) const {
    std::fill(out, out + std::size_t(n_) * channels, 0.0);
    t_mix.resize(std::size_t(n_) * channels);
    for (std::size_t c = 0; c < lattices_.size(); ++c) {
        lattices_[c]->filter(values, channels, t_mix.data());
        const double w = weights_[c];
        for (std::size_t i = 0; i < t_mix.size(); ++i)
            out[i] += w * t_mix[i];
    }
}

void LatticeOperator::ordered_filter(const double* values, int channels, const float* scores,
                                     int levels, OrderDirection dir, double* out) const {
    std::fill(out, out + std::size_t(n_) * channels, 0.0);
    const std::vector<int> bins = score_bins(scores, n_, levels);
    t_mix.resize(std::size_t(n_) * channels);
    for (std::size_t c = 0; c < lattices_.size(); ++c) {
        lattices_[c]->ordered_filter(values, channels, bins.data(), levels, dir, t_mix.data());
        const double w = weights_[c];
        for (std::size_t i = 0; i < t_mix.size(); ++i)
            out[i] += w * t_mix[i];
    }
}

NaiveOperator::NaiveOperator(const FeatureField& image,
                             const std::vector<GaussianKernel>& kernels)
    : n_(image.n) {
    if (n_ > kMaxPoints)
        throw std::invalid_argument("naive operator guard: n exceeds " +
                                    std::to_string(kMaxPoints));
    for (const auto& k : kernels) {
        k.validate();
        weights_.push_back(k.weight);
        features_.push_back(make_features(image, k));
    }
}

double NaiveOperator::kernel_value(int a, int b) const {
    double k = 0.0;
    for (std::size_t c = 0; c < features_.size(); ++c) {
        const Mat& f = features_[c];
        double d2 = 0.0;
        for (int j = 0; j < f.cols; ++j) {
            double d = double(f(a, j)) - double(f(b, j));
            d2 += d * d;
        }
        k += double(weights_[c]) * std::exp(-0.5 * d2);
    }
    return k;
}

void NaiveOperator::filter(const double* values, int channels, double* out) const {
    for (int a = 0; a < n_; ++a) {
        for (int k = 0; k < channels; ++k)
            out[std::size_t(a) * channels + k] = 0.0;
        for (int b = 0; b < n_; ++b) {
            const double kab = kernel_value(a, b);
            for (int k = 0; k < channels; ++k)
                out[std::size_t(a) * channels + k] += kab * values[std::size_t(b) * channels + k];
        }
    }
}

void NaiveOperator::ordered_filter(const double* values, int channels, const float* scores,
                                   int /*levels*/, OrderDirection dir, double* out) const {
    for (int a = 0; a < n_; ++a) {
        for (int k = 0; k < channels; ++k)
            out[std::size_t(a) * channels + k] = 0.0;
        for (int b = 0; b < n_; ++b) {
            const bool admit = dir == OrderDirection::Geq ? scores[a] >= scores[b]
                                                          : scores[a] <= scores[b];
            if (!admit)
                continue;
            const double kab = kernel_value(a, b);
            for (int k = 0; k < channels; ++k)
                out[std::size_t(a) * channels + k] += kab * values[std::size_t(b) * channels + k];
        }
    }
}

namespace {

Mat naive_apply(const Mat& features, const Mat& values, const float* scores, bool ordered,
                OrderDirection dir) {
    if (features.rows != values.rows)
        throw std::invalid_argument("naive filter: shape mismatch");
    if (features.rows > NaiveOperator::kMaxPoints)
        throw std::invalid_argument("naive filter guard: n exceeds " +
                                    std::to_string(NaiveOperator::kMaxPoints));
    const int n = features.rows, d = features.cols, c = values.cols;
    Mat out(n, c, 0.f);
    std::vector<double> acc(c);
    for (int a = 0; a < n; ++a) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int b = 0; b < n; ++b) {
            if (ordered) {
                const bool admit = dir == OrderDirection::Geq ? scores[a] >= scores[b]
                                                              : scores[a] <= scores[b];
                if (!admit)
                    continue;
            }
            double d2 = 0.0;
            for (int j = 0; j < d; ++j) {
                double df = double(features(a, j)) - double(features(b, j));
                d2 += df * df;
            }
            const double k = std::exp(-0.5 * d2);
            for (int j = 0; j < c; ++j)
                acc[j] += k * values(b, j);
        }
        for (int j = 0; j < c; ++j)
            out(a, j) = float(acc[j]);
    }
    return out;
}

} // namespace

Mat naive_gaussian_filter(const Mat& features, const Mat& values) {
    return naive_apply(features, values, nullptr, false, OrderDirection::Geq);
}

Mat naive_ordered_filter(const Mat& features, const Mat& values, const std::vector<float>& scores,
                         OrderDirection dir) {
    if (int(scores.size()) != features.rows)
        throw std::invalid_argument("naive ordered filter: score count mismatch");
    return naive_apply(features, values, scores.data(), true, dir);
}

Mat level_masked_oracle(const PairwiseOperator& op, const Mat& values,
                        const std::vector<float>& scores, int levels, OrderDirection dir) {
    if (levels < 2)
        throw std::invalid_argument("level_masked_oracle needs at least 2 levels");
    if (values.rows != op.point_count() || int(scores.size()) != op.point_count())
        throw std::invalid_argument("level_masked_oracle: shape mismatch");
    const int n = values.rows, c = values.cols;
    const std::vector<int> bins = score_bins(scores.data(), n, levels);
    Mat out(n, c, 0.f);
    Mat masked(n, c);
    for (int h = 0; h < levels; ++h) {
        bool any = false;
        for (int a = 0; a < n; ++a)
            any = any || bins[a] == h;
        if (!any)
            continue;
        for (int a = 0; a < n; ++a) {
            const bool keep = dir == OrderDirection::Geq ? bins[a] <= h : bins[a] >= h;
            for (int j = 0; j < c; ++j)
                masked(a, j) = keep ? values(a, j) : 0.f;
        }
        Mat filtered = op.filter(masked);
        for (int a = 0; a < n; ++a)
            if (bins[a] == h)
                for (int j = 0; j < c; ++j)
                    out(a, j) = filtered(a, j);
    }
    return out;
}

} // namespace denselp
