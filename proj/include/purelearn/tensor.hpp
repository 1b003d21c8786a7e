#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace pl {

// Dense row-major f64 matrix. Vectors are 1xN or Nx1 as convenient.
// All produced values are checked finite by the ops that create them;
// a non-finite result raises NumericalError rather than propagating.
class Tensor {
public:
    Tensor() = default;
    Tensor(size_t rows, size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Tensor from(size_t rows, size_t cols, std::vector<double> values);

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }
    size_t size() const { return data_.size(); }

    double& at(size_t r, size_t c) { return data_[r * cols_ + c]; }
    double at(size_t r, size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    // Throws NumericalError naming `where` if any entry is NaN/Inf.
    void check_finite(const std::string& where) const;

private:
    size_t rows_ = 0;
    size_t cols_ = 0;
    std::vector<double> data_;
};

// C = A * B              (m x k) (k x n) -> m x n
Tensor matmul(const Tensor& a, const Tensor& b);
// C = A * B^T            (m x k) (n x k) -> m x n
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// C = A^T * B            (k x m) (k x n) -> m x n
Tensor matmul_tn(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double s);
// Adds a 1 x n row vector to every row of an m x n matrix.
Tensor add_rowvec(const Tensor& a, const Tensor& row);

Tensor relu(const Tensor& a);
Tensor transpose(const Tensor& a);

double sum(const Tensor& a);
double mean(const Tensor& a);

// Column sums -> 1 x n.
Tensor colsum(const Tensor& a);

}  // namespace pl
