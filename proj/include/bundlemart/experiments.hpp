#pragma once

#include "bundlemart/coupling.hpp"

#include <string>
#include <vector>

namespace bundlemart {

inline constexpr double kConstancyThreshold = 1e-6;

/// Martingale verdict of a section next to the direct check that its fiber components are constant.
struct ConstancyResult {
    std::string section;
    std::vector<DriftVerdict> verdicts;
    Decision martingale_decision = Decision::Inconclusive;
    double gradient_max = 0.0;
    bool constant = false;
    bool agree() const { return (martingale_decision == Decision::MartingaleConsistent) == constant; }
};

ConstancyResult parallel_section_test(const Section& s, const PathEnsemble& base, const std::vector<PointRef>& points,
                                      double resolution = kDefaultResolution, double fd_step = kDefaultFdStep);

/// zero, constant (1, 0.5), sin and mixed sections on a torus TM model.
std::vector<Section> torus_test_sections(const AssociatedPtr& tm);

/// Family c grad(height) on the Sasaki TM over S^2, one Liouville scan.
LiouvilleReport sasaki_experiment(const std::vector<double>& coefficients, const LiouvilleOptions& options);

/// |estimate - predicted| <= 2 CI widths on every form.
bool drift_matches_prediction(const LiouvilleRow& row);

struct HopfExperimentReport {
    LiouvilleReport scan;
    /// rank of rho(g) - I for g = i; full rank means the origin is the only fixed point.
    int fixed_point_rank = 0;
    int fiber_dim = 0;
    bool fixed_point_unique() const { return fixed_point_rank == fiber_dim; }
};

/// Tapered sections with xi = (|xi|, 0, ...) on the Hopf C^m bundle, plus the fixed point check.
HopfExperimentReport hopf_experiment(int m, const std::vector<double>& norms, const LiouvilleOptions& options);

}  // namespace bundlemart
