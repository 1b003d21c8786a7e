#include "purelearn/tensor.hpp"

#include <cmath>
#include <stdexcept>

#include "purelearn/errors.hpp"

namespace pl {

Tensor Tensor::from(size_t rows, size_t cols, std::vector<double> values) {
    if (values.size() != rows * cols) {
        throw Error("tensor: value count " + std::to_string(values.size()) +
                    " does not match shape " + std::to_string(rows) + "x" +
                    std::to_string(cols));
    }
    Tensor t(rows, cols);
    t.data_ = std::move(values);
    return t;
}

void Tensor::check_finite(const std::string& where) const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            throw NumericalError("non-finite value in " + where);
        }
    }
}

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw Error(std::string("tensor: shape mismatch in ") + what);
}

}  // namespace

// ikj loop order: streams B rows while accumulating into C rows, which keeps
// the inner loop vectorizable and cache-friendly without blocking.
Tensor matmul(const Tensor& a, const Tensor& b) {
    require(a.cols() == b.rows(), "matmul");
    const size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor c(m, n);
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    for (size_t i = 0; i < m; ++i) {
        for (size_t p = 0; p < k; ++p) {
            const double av = pa[i * k + p];
            const double* brow = pb + p * n;
            double* crow = pc + i * n;
            for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require(a.cols() == b.cols(), "matmul_nt");
    // Materializing B^T lets the accumulation run down contiguous rows, which
    // vectorizes; the per-element summation order matches the direct form.
    return matmul(a, transpose(b));
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    require(a.rows() == b.rows(), "matmul_tn");
    const size_t k = a.rows(), m = a.cols(), n = b.cols();
    Tensor c(m, n);
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    for (size_t p = 0; p < k; ++p) {
        const double* arow = pa + p * m;
        const double* brow = pb + p * n;
        for (size_t i = 0; i < m; ++i) {
            const double av = arow[i];
            double* crow = pc + i * n;
            for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b), "add");
    Tensor c = a;
    for (size_t i = 0; i < c.size(); ++i) c[i] += b[i];
    return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b), "sub");
    Tensor c = a;
    for (size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
    return c;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b), "mul");
    Tensor c = a;
    for (size_t i = 0; i < c.size(); ++i) c[i] *= b[i];
    return c;
}

Tensor scale(const Tensor& a, double s) {
    Tensor c = a;
    for (size_t i = 0; i < c.size(); ++i) c[i] *= s;
    return c;
}

Tensor add_rowvec(const Tensor& a, const Tensor& row) {
    require(row.rows() == 1 && row.cols() == a.cols(), "add_rowvec");
    Tensor c = a;
    for (size_t i = 0; i < a.rows(); ++i)
        for (size_t j = 0; j < a.cols(); ++j) c.at(i, j) += row[j];
    return c;
}

Tensor relu(const Tensor& a) {
    Tensor c = a;
    for (size_t i = 0; i < c.size(); ++i)
        if (c[i] < 0.0) c[i] = 0.0;
    return c;
}

Tensor transpose(const Tensor& a) {
    Tensor c(a.cols(), a.rows());
    for (size_t i = 0; i < a.rows(); ++i)
        for (size_t j = 0; j < a.cols(); ++j) c.at(j, i) = a.at(i, j);
    return c;
}

double sum(const Tensor& a) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i];
    return s;
}

double mean(const Tensor& a) {
    if (a.size() == 0) throw Error("tensor: mean of empty tensor");
    return sum(a) / static_cast<double>(a.size());
}

Tensor colsum(const Tensor& a) {
    Tensor c(1, a.cols());
    for (size_t i = 0; i < a.rows(); ++i)
        for (size_t j = 0; j < a.cols(); ++j) c[j] += a.at(i, j);
    return c;
}

}  // namespace pl
