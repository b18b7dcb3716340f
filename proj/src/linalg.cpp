#include "bundlemart/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace bundlemart {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::ChartEscape: return "chart-escape";
    case ErrorKind::DegenerateMetric: return "degenerate-metric";
    case ErrorKind::NoOverlap: return "no-overlap";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::FiberMismatch: return "fiber-mismatch";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::NonHorizontal: return "non-horizontal";
    }
    return "unknown";
}

Vec Christoffel::contract(const Vec& u, const Vec& w) const {
    Vec out = Vec::Zero(dim_);
    for (int i = 0; i < dim_; ++i) {
        double s = 0.0;
        for (int j = 0; j < dim_; ++j) {
            if (u[j] == 0.0) continue;
            for (int k = 0; k < dim_; ++k) s += (*this)(i, j, k) * u[j] * w[k];
        }
        out[i] = s;
    }
    return out;
}

Christoffel Christoffel::symmetrized() const {
    Christoffel out(dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j)
            for (int k = 0; k < dim_; ++k) out(i, j, k) = 0.5 * ((*this)(i, j, k) + (*this)(i, k, j));
    return out;
}

double Christoffel::max_abs_difference(const Christoffel& other) const {
    double m = 0.0;
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j)
            for (int k = 0; k < dim_; ++k) m = std::max(m, std::abs((*this)(i, j, k) - other(i, j, k)));
    return m;
}

Vec make_vec(std::initializer_list<double> values) {
    Vec v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

Mat inverse_sqrt_spd(const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es(a);
    if (es.info() != Eigen::Success)
        throw GeometryError(ErrorKind::DegenerateMetric, "eigendecomposition failed");
    Vec ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (!(ev[i] > 0.0)) throw GeometryError(ErrorKind::DegenerateMetric, "metric is not positive definite");
        ev[i] = 1.0 / std::sqrt(ev[i]);
    }
    const Mat& q = es.eigenvectors();
    return q * ev.asDiagonal() * q.transpose();
}

bool is_positive_definite(const Mat& a) {
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff())) return false;
    Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
    return es.info() == Eigen::Success && es.eigenvalues().minCoeff() > 0.0;
}

}  // namespace bundlemart
