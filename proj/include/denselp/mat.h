#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace denselp {

// Row-major float matrix. Bulk solver state is 32-bit; reductions and the
// filter pipeline accumulate in 64-bit.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<float> v;

    Mat() = default;
    Mat(int r, int c, float fill = 0.f) : rows(r), cols(c), v(std::size_t(r) * c, fill) {}

    float& operator()(int r, int c) { return v[std::size_t(r) * cols + c]; }
    float operator()(int r, int c) const { return v[std::size_t(r) * cols + c]; }

    float* row(int r) { return v.data() + std::size_t(r) * cols; }
    const float* row(int r) const { return v.data() + std::size_t(r) * cols; }

    float* data() { return v.data(); }
    const float* data() const { return v.data(); }
    std::size_t size() const { return v.size(); }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

} // namespace denselp
