#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace topnrank {

/// Dense row-major matrix; one entity (user or item) per contiguous row.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    std::span<const double> row(std::size_t i) const { return std::span{data_}.subspan(i * cols_, cols_); }
    std::span<double> row(std::size_t i) { return std::span{data_}.subspan(i * cols_, cols_); }

    double& operator()(std::size_t i, std::size_t t) { return data_[i * cols_ + t]; }
    double operator()(std::size_t i, std::size_t t) const { return data_[i * cols_ + t]; }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) sum += a[t] * b[t];
    return sum;
}

/// x += a * v
inline void axpy(double a, std::span<const double> v, std::span<double> x) {
    for (std::size_t t = 0; t < x.size(); ++t) x[t] += a * v[t];
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

struct LatentFactorModel {
    Matrix user_factors;
    Matrix item_factors;

    LatentFactorModel() = default;
    LatentFactorModel(std::size_t n_users, std::size_t n_items, std::size_t k)
        : user_factors(n_users, k), item_factors(n_items, k) {}

    std::size_t k() const { return user_factors.cols(); }
    std::size_t n_users() const { return user_factors.rows(); }
    std::size_t n_items() const { return item_factors.rows(); }

    std::span<const double> user(std::size_t u) const { return user_factors.row(u); }
    std::span<double> user(std::size_t u) { return user_factors.row(u); }
    std::span<const double> item(std::size_t i) const { return item_factors.row(i); }
    std::span<double> item(std::size_t i) { return item_factors.row(i); }

    bool operator==(const LatentFactorModel&) const = default;
};

/// f_ui = <user row u, item row i>. Throws std::out_of_range on bad indices.
double predict_score(const LatentFactorModel& model, std::size_t u, std::size_t i);
std::vector<double> predict_scores_for(const LatentFactorModel& model, std::size_t u, std::span<const std::size_t> items);

/// Width b of the U(0, b) initialization that keeps rectifier-smoothed ranks
/// well scaled: b = 2 / (7k)^(1/4), chosen so three standard deviations of a
/// fresh score equal 1.
double relu_init_width(std::size_t k);

struct InitSpec {
    double width = 0.0;
    std::uint64_t seed = 0;
};

/// Every entry i.i.d. uniform on [0, width). Same seed, same matrices.
LatentFactorModel init_model(std::size_t n_users, std::size_t n_items, std::size_t k, const InitSpec& spec);

} // namespace topnrank
