#include "bundlemart/experiments.hpp"
#include "bundlemart/models.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace bundlemart {

namespace {

std::string number_label(const std::string& prefix, double v) {
    std::ostringstream os;
    os << prefix << '=' << v;
    return os.str();
}

}  // namespace

ConstancyResult parallel_section_test(const Section& s, const PathEnsemble& base, const std::vector<PointRef>& points,
                                      double resolution, double fd_step) {
    ConstancyResult out;
    out.section = s.name;
    out.verdicts = vertical_martingale_test(s, base, resolution);
    out.martingale_decision = combine(out.verdicts);
    out.gradient_max = component_gradient_max(s, points, fd_step);
    out.constant = out.gradient_max <= kConstancyThreshold;
    return out;
}

std::vector<Section> torus_test_sections(const AssociatedPtr& tm) {
    return {zero_section(tm), constant_section(tm, make_vec({1.0, 0.5})), torus_sin_section(tm),
            torus_mixed_section(tm)};
}

LiouvilleReport sasaki_experiment(const std::vector<double>& coefficients, const LiouvilleOptions& options) {
    const auto tm = build_tm_connection("sphere2", ConnectionKind::Sasaki);
    std::vector<FamilyMember> family;
    for (double c : coefficients) family.push_back({number_label("c", c), c, sphere_height_gradient_section(tm, c)});
    return liouville_experiment(tm, family, options);
}

bool drift_matches_prediction(const LiouvilleRow& row) {
    if (row.predicted_drift.size() != row.verdicts.size()) return false;
    for (std::size_t a = 0; a < row.verdicts.size(); ++a) {
        const auto& v = row.verdicts[a];
        if (std::abs(v.drift_estimate - row.predicted_drift[a]) > 2 * (v.ci_high - v.ci_low)) return false;
    }
    return true;
}

HopfExperimentReport hopf_experiment(int m, const std::vector<double>& norms, const LiouvilleOptions& options) {
    const auto e = make_hopf_associated(m);
    std::vector<FamilyMember> family;
    for (double r : norms) {
        Vec xi = Vec::Zero(2 * m);
        xi[0] = r;
        family.push_back({number_label("|xi|", r), r, hopf_tapered_section(e, xi)});
    }
    HopfExperimentReport out;
    out.scan = liouville_experiment(e, family, options);
    out.fiber_dim = 2 * m;
    const Mat fix = e->rho(std::numbers::pi / 2) - Mat::Identity(2 * m, 2 * m);
    out.fixed_point_rank = static_cast<int>(Eigen::FullPivLU<Mat>(fix).rank());
    return out;
}

}  // namespace bundlemart
