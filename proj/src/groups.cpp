#include "bundlemart/groups.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace bundlemart {

std::string to_string(GroupKind k) {
    switch (k) {
    case GroupKind::U1: return "U1";
    case GroupKind::SO2: return "SO2";
    case GroupKind::O2: return "O2";
    case GroupKind::SO3: return "SO3";
    }
    return "?";
}

GroupKind group_kind_from_string(const std::string& s) {
    if (s == "U1") return GroupKind::U1;
    if (s == "SO2") return GroupKind::SO2;
    if (s == "O2") return GroupKind::O2;
    if (s == "SO3") return GroupKind::SO3;
    throw GeometryError(ErrorKind::InvalidArgument, "unknown group '" + s + "'");
}

MatrixGroup::MatrixGroup(GroupKind kind, double metric_scale) : kind_(kind), metric_scale_(metric_scale) {
    if (!(metric_scale > 0.0)) throw GeometryError(ErrorKind::InvalidArgument, "group metric scale must be positive");
}

Mat MatrixGroup::hat(const Vec& xi) const {
    if (kind_ == GroupKind::SO3) {
        Mat a(3, 3);
        a << 0, -xi[2], xi[1], xi[2], 0, -xi[0], -xi[1], xi[0], 0;
        return a;
    }
    Mat a(2, 2);
    a << 0, -xi[0], xi[0], 0;
    return a;
}

Vec MatrixGroup::vee(const Mat& a) const {
    if (kind_ == GroupKind::SO3) return make_vec({0.5 * (a(2, 1) - a(1, 2)), 0.5 * (a(0, 2) - a(2, 0)), 0.5 * (a(1, 0) - a(0, 1))});
    return make_vec({0.5 * (a(1, 0) - a(0, 1))});
}

Mat MatrixGroup::exp(const Vec& xi) const {
    if (kind_ == GroupKind::SO3) {
        const double th = xi.norm();
        const Mat k = hat(xi);
        if (th < 1e-8) return identity() + k + 0.5 * k * k;
        return identity() + std::sin(th) / th * k + (1 - std::cos(th)) / (th * th) * k * k;
    }
    Mat r(2, 2);
    r << std::cos(xi[0]), -std::sin(xi[0]), std::sin(xi[0]), std::cos(xi[0]);
    return r;
}

bool MatrixGroup::in_identity_component(const Mat& g) const { return g.determinant() > 0.0; }

Vec MatrixGroup::log(const Mat& g) const {
    if (!in_identity_component(g))
        throw GeometryError(ErrorKind::InvalidArgument, "logarithm outside the identity component");
    if (kind_ == GroupKind::SO3) {
        const double c = std::clamp(0.5 * (g.trace() - 1.0), -1.0, 1.0);
        const double th = std::acos(c);
        if (th < 1e-8) return vee(0.5 * (g - g.transpose()));
        if (std::numbers::pi - th < 1e-6) {
            // axis from the symmetric part near a half turn
            const Mat b = 0.5 * (g + identity());
            Eigen::Index i = 0;
            b.diagonal().maxCoeff(&i);
            Vec axis = b.col(i) / std::sqrt(std::max(b(i, i), 1e-300));
            const Vec s = vee(0.5 * (g - g.transpose()));
            if (axis.dot(s) < 0) axis = -axis;
            return th * axis.normalized();
        }
        return th / (2 * std::sin(th)) * vee(g - g.transpose());
    }
    return make_vec({std::atan2(g(1, 0), g(0, 0))});
}

Vec MatrixGroup::adjoint(const Mat& g, const Vec& xi) const {
    return vee(g * hat(xi) * g.transpose());
}

double MatrixGroup::distance(const Mat& a, const Mat& b) const {
    const Mat rel = inverse(a) * b;
    if (!in_identity_component(rel)) return std::numeric_limits<double>::infinity();
    const Vec l = log(rel);
    return std::sqrt(inner(l, l));
}

Mat MatrixGroup::reflection() const {
    if (kind_ != GroupKind::O2) throw GeometryError(ErrorKind::InvalidArgument, "reflection only exists in O2");
    Mat r(2, 2);
    r << 1, 0, 0, -1;
    return r;
}

}  // namespace bundlemart
