#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace dpi {

// Row-major dense matrix of doubles. Small and allocation-friendly; the
// models here are tiny enough that plain loops beat any BLAS setup cost.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }
    double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
    void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

}
