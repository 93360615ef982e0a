#ifndef DBC_MATRIX_HPP
#define DBC_MATRIX_HPP

#include <cstddef>
#include <vector>

namespace dbc {

// Dense row-major matrix of doubles. Small enough to live by value;
// all engine-level math runs on 64-bit reals.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    bool operator==(const Matrix& other) const = default;
};

}  // namespace dbc

#endif
