#include "denselp/permutohedral.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace denselp {

namespace {

// Open-addressing table for lattice coordinates. Keys are the first d
// coordinates of a zero-sum (d+1)-vector; ids are assigned in insertion
// order, which keeps lattice construction deterministic.
class CoordHash {
public:
    CoordHash(int key_size, std::size_t expected)
        : key_size_(key_size), capacity_(std::max<std::size_t>(16, 2 * expected)), table_(capacity_, -1) {
        keys_.reserve(expected * key_size_);
    }

    int size() const { return filled_; }
    const int* key(int id) const { return keys_.data() + std::size_t(id) * key_size_; }

    int find(const int* k, bool create) {
        if (2 * std::size_t(filled_) >= capacity_)
            grow();
        std::size_t h = hash(k) % capacity_;
        while (true) {
            int e = table_[h];
            if (e == -1) {
                if (!create)
                    return -1;
                keys_.insert(keys_.end(), k, k + key_size_);
                table_[h] = filled_;
                return filled_++;
            }
            if (std::equal(k, k + key_size_, key(e)))
                return e;
            h = (h + 1 == capacity_) ? 0 : h + 1;
        }
    }

private:
    std::size_t hash(const int* k) const {
        std::size_t r = 0;
        for (int i = 0; i < key_size_; ++i) {
            r += std::size_t(std::uint32_t(k[i]));
            r *= 2654435761u;
        }
        return r;
    }

    void grow() {
        capacity_ *= 2;
        table_.assign(capacity_, -1);
        for (int e = 0; e < filled_; ++e) {
            std::size_t h = hash(key(e)) % capacity_;
            while (table_[h] >= 0)
                h = (h + 1 == capacity_) ? 0 : h + 1;
            table_[h] = e;
        }
    }

    int key_size_;
    std::size_t capacity_;
    int filled_ = 0;
    std::vector<int> table_;
    std::vector<int> keys_;
};

} // namespace

std::vector<int> score_bins(const float* scores, int n, int levels) {
    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    for (int a = 0; a < n; ++a) {
        if (!std::isfinite(scores[a]))
            throw std::invalid_argument("score_bins: non-finite score");
        lo = std::min(lo, scores[a]);
        hi = std::max(hi, scores[a]);
    }
    std::vector<int> bins(n, 0);
    const double range = double(hi) - double(lo);
    if (range <= 0.0)
        return bins;
    for (int a = 0; a < n; ++a) {
        double yhat = (double(scores[a]) - lo) / range;
        int h = int(std::floor(yhat * (levels - 1)));
        bins[a] = std::clamp(h, 0, levels - 1);
    }
    return bins;
}

PermutohedralLattice::PermutohedralLattice(const Mat& features) {
    n_ = features.rows;
    d_ = features.cols;
    if (n_ < 1 || d_ < 1)
        throw std::invalid_argument("lattice needs n >= 1 and d >= 1");
    for (float f : features.v)
        if (!std::isfinite(f))
            throw std::invalid_argument("lattice features must be finite");

    offset_.assign(std::size_t(n_) * (d_ + 1), -1);
    barycentric_.assign(std::size_t(n_) * (d_ + 1), 0.f);
    scale_.assign(n_, 1.f);

    CoordHash table(d_, std::size_t(n_));

    // Expected blur standard deviation compensation and the diagonal of the
    // elevation matrix. The width calibration narrows the realized kernel so
    // its off-diagonal mass matches the target Gaussian on occupied lattices
    // (the raw splat/blur/slice kernel runs measurably wide).
    static const double width_calibration[6] = {1.0, 1.18, 1.14, 1.105, 1.086, 1.019};
    std::vector<double> scale_factor(d_);
    const double inv_std_dev =
        std::sqrt(2.0 / 3.0) * (d_ + 1) * (d_ <= 5 ? width_calibration[d_] : 1.0);
    for (int i = 0; i < d_; ++i)
        scale_factor[i] = inv_std_dev / std::sqrt(double(i + 1) * (i + 2));

    std::vector<int> canonical(std::size_t(d_ + 1) * (d_ + 1));
    for (int i = 0; i <= d_; ++i) {
        for (int j = 0; j <= d_ - i; ++j)
            canonical[std::size_t(i) * (d_ + 1) + j] = i;
        for (int j = d_ - i + 1; j <= d_; ++j)
            canonical[std::size_t(i) * (d_ + 1) + j] = i - (d_ + 1);
    }

    std::vector<double> elevated(d_ + 1), rem0(d_ + 1), bary(d_ + 2);
    std::vector<int> rank(d_ + 1), key(d_ + 1);
    std::vector<double> chain(d_ + 1), chain_next(d_ + 1);

    for (int a = 0; a < n_; ++a) {
        const float* f = features.row(a);

        // Embed in the zero-sum hyperplane.
        double sm = 0.0;
        for (int j = d_; j > 0; --j) {
            double cf = f[j - 1] * scale_factor[j - 1];
            elevated[j] = sm - j * cf;
            sm += cf;
        }
        elevated[0] = sm;

        // Round to the nearest remainder-0 lattice point.
        int sum = 0;
        for (int i = 0; i <= d_; ++i) {
            double v = elevated[i] / (d_ + 1);
            double up = std::ceil(v) * (d_ + 1);
            double down = std::floor(v) * (d_ + 1);
            double rd = (up - elevated[i] < elevated[i] - down) ? up : down;
            rem0[i] = rd;
            sum += int(std::lround(rd)) / (d_ + 1);
        }

        // Rank coordinates by their residual.
        std::fill(rank.begin(), rank.end(), 0);
        for (int i = 0; i < d_; ++i) {
            double di = elevated[i] - rem0[i];
            for (int j = i + 1; j <= d_; ++j) {
                if (di < elevated[j] - rem0[j])
                    ++rank[i];
                else
                    ++rank[j];
            }
        }

        // Walk back onto the plane if the rounded point missed it.
        for (int i = 0; i <= d_; ++i) {
            rank[i] += sum;
            if (rank[i] < 0) {
                rank[i] += d_ + 1;
                rem0[i] += d_ + 1;
            } else if (rank[i] > d_) {
                rank[i] -= d_ + 1;
                rem0[i] -= d_ + 1;
            }
        }

        // Barycentric coordinates inside the enclosing simplex.
        std::fill(bary.begin(), bary.end(), 0.0);
        for (int i = 0; i <= d_; ++i) {
            double v = (elevated[i] - rem0[i]) / (d_ + 1);
            bary[d_ - rank[i]] += v;
            bary[d_ - rank[i] + 1] -= v;
        }
        bary[0] += 1.0 + bary[d_ + 1];

        for (int remainder = 0; remainder <= d_; ++remainder) {
            for (int i = 0; i < d_; ++i)
                key[i] = int(std::lround(rem0[i])) + canonical[std::size_t(remainder) * (d_ + 1) + rank[i]];
            offset_[std::size_t(a) * (d_ + 1) + remainder] = table.find(key.data(), true);
            barycentric_[std::size_t(a) * (d_ + 1) + remainder] = float(bary[remainder]);
        }

        // Gain correction: the blur response of this point on its isolated
        // simplex. The simplex vertices form a cycle: axis j joins remainders
        // (d - rank_j, d - rank_j + 1 mod d+1); every other stencil tap falls
        // outside the simplex and contributes zero.
        for (int r = 0; r <= d_; ++r)
            chain[r] = bary[r];
        for (int j = 0; j <= d_; ++j) {
            for (int r = 0; r <= d_; ++r)
                chain_next[r] = 0.5 * chain[r];
            const int r = d_ - rank[j];
            const int r2 = r == d_ ? 0 : r + 1;
            chain_next[r] += 0.25 * chain[r2];
            chain_next[r2] += 0.25 * chain[r];
            std::swap(chain, chain_next);
        }
        double gain = 0.0;
        for (int r = 0; r <= d_; ++r)
            gain += bary[r] * chain[r];
        scale_[a] = float(1.0 / std::sqrt(gain));
    }

    m_ = table.size();

    // Two blur neighbors per lattice point per axis.
    blur_n1_.assign(std::size_t(d_ + 1) * m_, -1);
    blur_n2_.assign(std::size_t(d_ + 1) * m_, -1);
    std::vector<int> n1(d_ + 1), n2(d_ + 1);
    for (int j = 0; j <= d_; ++j) {
        for (int l = 0; l < m_; ++l) {
            const int* k = table.key(l);
            for (int i = 0; i < d_; ++i) {
                n1[i] = k[i] - 1;
                n2[i] = k[i] + 1;
            }
            if (j < d_) {
                n1[j] = k[j] + d_;
                n2[j] = k[j] - d_;
            }
            blur_n1_[std::size_t(j) * m_ + l] = table.find(n1.data(), false);
            blur_n2_[std::size_t(j) * m_ + l] = table.find(n2.data(), false);
        }
    }
}

void PermutohedralLattice::splat_point(int b, const double* values, int channels,
                                       std::vector<double>& bank) const {
    const double s = scale_[b];
    const int* ids = simplex(b);
    const float* w = barycentric(b);
    for (int r = 0; r <= d_; ++r) {
        double* slot = bank.data() + std::size_t(ids[r] + 1) * channels;
        const double ws = double(w[r]) * s;
        for (int k = 0; k < channels; ++k)
            slot[k] += ws * values[std::size_t(b) * channels + k];
    }
}

void PermutohedralLattice::slice_point(int a, const std::vector<double>& bank, int channels,
                                       double* out) const {
    const double s = scale_[a];
    const int* ids = simplex(a);
    const float* w = barycentric(a);
    for (int k = 0; k < channels; ++k)
        out[std::size_t(a) * channels + k] = 0.0;
    for (int r = 0; r <= d_; ++r) {
        const double* slot = bank.data() + std::size_t(ids[r] + 1) * channels;
        const double ws = double(w[r]) * s;
        for (int k = 0; k < channels; ++k)
            out[std::size_t(a) * channels + k] += ws * slot[k];
    }
}

// Truncated Gaussian [1,2,1]/4 along each lattice axis; absent neighbors
// contribute zero. Slot 0 of the bank is the shared zero slot.
void PermutohedralLattice::blur(std::vector<double>& bank, std::vector<double>& scratch,
                                int channels) const {
    for (int j = 0; j <= d_; ++j) {
        for (int l = 0; l < m_; ++l) {
            const double* cur = bank.data() + std::size_t(l + 1) * channels;
            const double* a1 = bank.data() + std::size_t(blur_n1_[std::size_t(j) * m_ + l] + 1) * channels;
            const double* a2 = bank.data() + std::size_t(blur_n2_[std::size_t(j) * m_ + l] + 1) * channels;
            double* dst = scratch.data() + std::size_t(l + 1) * channels;
            for (int k = 0; k < channels; ++k)
                dst[k] = 0.5 * cur[k] + 0.25 * (a1[k] + a2[k]);
        }
        std::swap(bank, scratch);
    }
}

namespace {
// Lattice banks are reused across calls; every path zero-fills before use.
thread_local std::vector<double> t_bank;
thread_local std::vector<double> t_scratch;
} // namespace

void PermutohedralLattice::filter(const double* values, int channels, double* out) const {
    t_bank.assign(std::size_t(m_ + 1) * channels, 0.0);
    t_scratch.assign(std::size_t(m_ + 1) * channels, 0.0);
    for (int b = 0; b < n_; ++b)
        splat_point(b, values, channels, t_bank);
    blur(t_bank, t_scratch, channels);
    for (int a = 0; a < n_; ++a)
        slice_point(a, t_bank, channels, out);
}

void PermutohedralLattice::splat_slice(const double* values, int channels, double* out) const {
    t_bank.assign(std::size_t(m_ + 1) * channels, 0.0);
    for (int b = 0; b < n_; ++b)
        splat_point(b, values, channels, t_bank);
    for (int a = 0; a < n_; ++a)
        slice_point(a, t_bank, channels, out);
}

void PermutohedralLattice::ordered_filter(const double* values, int channels, const int* bins,
                                          int levels, OrderDirection dir, double* out) const {
    if (levels < 2)
        throw std::invalid_argument("ordered_filter needs at least 2 levels");

    // Stable bucket order by bin: level h of the Geq pass splats bins 0..h,
    // the Leq pass bins h..levels-1; either set is a contiguous run.
    std::vector<int> start(levels + 1, 0);
    for (int a = 0; a < n_; ++a)
        ++start[bins[a] + 1];
    for (int h = 0; h < levels; ++h)
        start[h + 1] += start[h];
    std::vector<int> order(n_);
    {
        std::vector<int> cursor(start.begin(), start.end() - 1);
        for (int a = 0; a < n_; ++a)
            order[cursor[bins[a]]++] = a;
    }

    t_bank.resize(std::size_t(m_ + 1) * channels);
    t_scratch.resize(std::size_t(m_ + 1) * channels);
    for (int h = 0; h < levels; ++h) {
        const int lo = dir == OrderDirection::Geq ? 0 : start[h];
        const int hi = dir == OrderDirection::Geq ? start[h + 1] : n_;
        if (start[h] == start[h + 1])
            continue; // nobody slices at this level
        std::fill(t_bank.begin(), t_bank.end(), 0.0);
        std::fill(t_scratch.begin(), t_scratch.end(), 0.0);
        for (int idx = lo; idx < hi; ++idx)
            splat_point(order[idx], values, channels, t_bank);
        blur(t_bank, t_scratch, channels);
        for (int idx = start[h]; idx < start[h + 1]; ++idx)
            slice_point(order[idx], t_bank, channels, out);
    }
}

} // namespace denselp
