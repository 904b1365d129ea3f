#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace dnim::nn {

// Dense row-major matrix of doubles. Vectors are 1 x n (row) or n x 1.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);
    Tensor(std::initializer_list<std::initializer_list<double>> rows);

    static Tensor row(std::span<const double> values);
    static Tensor column(std::span<const double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::array<std::size_t, 2> shape() const noexcept { return {rows_, cols_}; }
    std::size_t size() const noexcept { return data_.size(); }
    bool same_shape(const Tensor& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    const double& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    const double& operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    std::span<double> row_span(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row_span(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    bool all_finite() const noexcept;
    void fill(double v) noexcept;
    Tensor& operator+=(const Tensor& o);

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// out = a * b (shapes checked by caller).
void gemm(const Tensor& a, const Tensor& b, Tensor& out);
// out += a^T * b
void gemm_tn_acc(const Tensor& a, const Tensor& b, Tensor& out);
// out += a * b^T
void gemm_nt_acc(const Tensor& a, const Tensor& b, Tensor& out);

}  // namespace dnim::nn
