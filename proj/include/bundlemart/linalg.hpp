#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace bundlemart {

/// Largest coordinate dimension handled anywhere (E over the Hopf bundle with fiber C^2 is 6).
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

enum class ErrorKind {
    ChartEscape,
    DegenerateMetric,
    NoOverlap,
    NonConvergence,
    FiberMismatch,
    InvalidArgument,
    NonHorizontal,
};

const char* to_string(ErrorKind kind);

class GeometryError : public std::runtime_error {
public:
    GeometryError(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Connection coefficients Gamma^i_{jk}, stored densely for dim <= kMaxDim.
class Christoffel {
public:
    Christoffel() = default;
    explicit Christoffel(int dim) : dim_(dim) { data_.fill(0.0); }

    int dim() const noexcept { return dim_; }

    double& operator()(int i, int j, int k) { return data_[(i * kMaxDim + j) * kMaxDim + k]; }
    double operator()(int i, int j, int k) const { return data_[(i * kMaxDim + j) * kMaxDim + k]; }

    /// Gamma^i(u, w) = Gamma^i_{jk} u^j w^k.
    Vec contract(const Vec& u, const Vec& w) const;

    /// Symmetric part in the lower indices; the stochastic integrals only see this part.
    Christoffel symmetrized() const;

    double max_abs_difference(const Christoffel& other) const;

private:
    int dim_ = 0;
    std::array<double, kMaxDim * kMaxDim * kMaxDim> data_{};
};

Vec make_vec(std::initializer_list<double> values);

/// Symmetric positive-definite square root of the inverse: S with S S^T = A^{-1}.
/// Throws DegenerateMetric when A has a non-positive eigenvalue.
Mat inverse_sqrt_spd(const Mat& a);

bool is_positive_definite(const Mat& a);

}  // namespace bundlemart
