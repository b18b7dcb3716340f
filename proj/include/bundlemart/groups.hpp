#pragma once

#include "bundlemart/linalg.hpp"

#include <string>

namespace bundlemart {

enum class GroupKind { U1, SO2, O2, SO3 };

std::string to_string(GroupKind k);
GroupKind group_kind_from_string(const std::string& s);

/// Compact matrix group with the bi-invariant metric h(X, Y) = scale * <X, Y> on Lie-algebra
/// coordinates (angle for U1/SO2/O2, axis-angle vector for SO3). U(1) is represented by its real
/// 2x2 rotation matrices.
class MatrixGroup {
public:
    explicit MatrixGroup(GroupKind kind, double metric_scale = 1.0);

    GroupKind kind() const noexcept { return kind_; }
    std::string name() const { return to_string(kind_); }
    /// Lie-algebra dimension.
    int dim() const noexcept { return kind_ == GroupKind::SO3 ? 3 : 1; }
    int matrix_size() const noexcept { return kind_ == GroupKind::SO3 ? 3 : 2; }
    bool is_abelian() const noexcept { return kind_ != GroupKind::SO3 && kind_ != GroupKind::O2; }

    Mat identity() const { return Mat::Identity(matrix_size(), matrix_size()); }
    /// Algebra coordinates -> matrix generator.
    Mat hat(const Vec& xi) const;
    Vec vee(const Mat& a) const;
    Mat exp(const Vec& xi) const;
    /// Principal logarithm; throws InvalidArgument for elements outside the identity component.
    Vec log(const Mat& g) const;
    bool in_identity_component(const Mat& g) const;
    Mat inverse(const Mat& g) const { return g.transpose(); }

    /// Ad_g xi = vee(g hat(xi) g^{-1}).
    Vec adjoint(const Mat& g, const Vec& xi) const;
    double inner(const Vec& a, const Vec& b) const { return metric_scale_ * a.dot(b); }
    /// Geodesic distance |log(a^{-1} b)|_h; elements in different components are infinitely far.
    double distance(const Mat& a, const Mat& b) const;

    /// Reflection diag(1, -1) of O(2).
    Mat reflection() const;

private:
    GroupKind kind_;
    double metric_scale_;
};

}  // namespace bundlemart
