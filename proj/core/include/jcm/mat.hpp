#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace jcm {

// Dense row-major matrix of doubles. Row and column vectors are 1xN / Nx1.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
    Mat(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != static_cast<std::size_t>(r) * c)
            throw std::invalid_argument("Mat: data size does not match shape");
    }

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    const double& operator()(int r, int c) const {
        return data[static_cast<std::size_t>(r) * cols + c];
    }

    int size() const { return rows * cols; }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    static Mat zeros(int r, int c) { return Mat(r, c); }
    static Mat full(int r, int c, double v) {
        Mat m(r, c);
        for (auto& x : m.data) x = v;
        return m;
    }
};

}  // namespace jcm
