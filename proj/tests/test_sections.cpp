#include "bundlemart/models.hpp"
#include "bundlemart/sections.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace bundlemart;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double h = kDefaultFdStep;

const PointRef torus_start{kCover, make_vec({pi / 2, 0.0})};
const PointRef sphere_start{kNorth, make_vec({0.5, 0.0})};

double max_abs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST_CASE("sections project to the identity") {
    const auto tm = build_tm_connection("sphere2", ConnectionKind::Sasaki);
    const auto hopf = make_hopf_associated(1);
    for (const Section& s : {sphere_height_gradient_section(tm, 0.7), hopf_tapered_section(hopf, make_vec({0.3, 0.4}))}) {
        for (const auto& x : sample_points(s.bundle->base(), 100, 3)) {
            const PointRef e = s.at(x);
            CHECK((s.bundle->project(e).x - x.x).norm() <= 1e-10);
        }
    }
}

TEST_CASE("section chart descriptions agree under transitions") {
    const auto tm = build_tm_connection("sphere2", ConnectionKind::Sasaki);
    const auto hopf = make_hopf_associated(2);
    for (const Section& s :
         {sphere_height_gradient_section(tm, -0.5), hopf_tapered_section(hopf, make_vec({0.3, 0.4, -0.2, 0.1}))}) {
        for (const auto& x : sample_points(s.bundle->base(), 100, 4)) {
            if (x.x.norm() < 0.3) continue;
            const PointRef other = s.bundle->base().transition(x, kSouth);
            const PointRef mapped = s.bundle->total().transition(s.at(x), kSouth);
            CHECK((mapped.x - s.at(other).x).norm() < 1e-12);
        }
    }
}

TEST_CASE("equivariant lift") {
    const auto tm = build_tm_connection("sphere2", ConnectionKind::Sasaki);
    SUBCASE("zero section lifts to zero") {
        for (const auto& p : sample_frames(tm->principal(), 20, 5)) CHECK(equivariant_lift(zero_section(tm), p).norm() == 0.0);
    }
    SUBCASE("vector field section gives frame components") {
        const Section s = sphere_height_gradient_section(tm, 1.0);
        for (const auto& p : sample_frames(tm->principal(), 50, 6)) {
            const PointRef b = tm->principal().project(p);
            // frame vectors u_a = L rho(v) e_a as columns
            const Mat frame = tm->frame(b.chart, b.x) * tm->rho(tm->principal().angle(p));
            const Vec expected = frame.fullPivLu().solve(s.fiber(b.chart, b.x));
            CHECK((equivariant_lift(s, p) - expected).norm() < 1e-12);
            // frames are g-orthonormal
            CHECK((frame.transpose() * tm->base().metric(b) * frame - Mat::Identity(2, 2)).norm() < 1e-12);
        }
    }
    SUBCASE("F(p g) = g^{-1} F(p)") {
        const auto hopf = make_hopf_associated(2);
        const Section s = hopf_tapered_section(hopf, make_vec({0.3, -0.1, 0.2, 0.4}));
        std::mt19937_64 rng(8);
        double worst = 0.0;
        for (const auto& p : sample_frames(hopf->principal(), 100, 7)) {
            const double a = testing_support::random_vec(rng, 1, -pi, pi)[0];
            const Mat g = hopf->principal().group().exp(make_vec({a}));
            const PointRef pg = hopf->principal().right_action(p, g);
            worst = std::max(worst, (equivariant_lift(s, pg) - hopf->rho(-a) * equivariant_lift(s, p)).norm());
        }
        CHECK(worst <= 1e-10);
    }
}

TEST_CASE("vertical tension oracles") {
    const auto s2 = build_tm_connection("sphere2", ConnectionKind::Sasaki);
    const auto torus = build_tm_connection("torus2", ConnectionKind::Horizontal);
    for (const auto& x : sample_points(s2->base(), 20, 9)) CHECK(max_abs(vertical_tension(zero_section(s2), x).vertical) < 2 * h * h);
    for (const auto& x : sample_points(torus->base(), 20, 10)) {
        CHECK(max_abs(vertical_tension(constant_section(torus, make_vec({1.0, -0.5})), x).vertical) < 2 * h * h);
        const TensionReport rep = vertical_tension(torus_sin_section(torus), x);
        CHECK(std::abs(rep.vertical[0] + std::sin(x.x[0])) < 2 * h * h);
        CHECK(std::abs(rep.vertical[1]) < 2 * h * h);
        CHECK(rep.estimated_error < 2 * h * h);
    }
}

TEST_CASE("horizontal tension matches the frame-transported vertical tension") {
    const auto torus = build_tm_connection("torus2", ConnectionKind::Horizontal);
    const auto s2 = build_tm_connection("sphere2", ConnectionKind::Sasaki);
    for (const auto& p : sample_frames(torus->principal(), 20, 11)) {
        const Section sin_field = torus_sin_section(torus);
        const TensionReport hor = horizontal_tension(sin_field, p);
        const PointRef b = torus->principal().project(p);
        const Vec expected = frame_components(*torus, p, vertical_tension(sin_field, b).vertical);
        CHECK((hor.horizontal - expected).cwiseAbs().maxCoeff() < 2 * h * h);
        CHECK(max_abs(horizontal_tension(constant_section(torus, make_vec({0.2, 0.3})), p).horizontal) < 2 * h * h);
    }
    for (const auto& p : sample_frames(s2->principal(), 20, 12)) {
        CHECK(max_abs(horizontal_tension(zero_section(s2), p).horizontal) == 0.0);
        const Section grad = sphere_height_gradient_section(s2, 1.0);
        const PointRef b = s2->principal().project(p);
        const Vec expected = frame_components(*s2, p, vertical_tension(grad, b).vertical);
        CHECK((horizontal_tension(grad, p).horizontal - expected).cwiseAbs().maxCoeff() < 1e-4);
    }
}

TEST_CASE("vertical martingale test") {
    const auto s2 = build_tm_connection("sphere2", ConnectionKind::Sasaki);
    const auto torus = build_tm_connection("torus2", ConnectionKind::Horizontal);
    const auto s2_paths = simulate_brownian(s2->base(), sphere_start, 1.0, 1e-2, 200, 31);
    const auto t_paths = simulate_brownian(torus->base(), torus_start, 1.0, 1e-2, 400, 32);

    CHECK(combine(vertical_martingale_test(zero_section(s2), s2_paths)) == Decision::MartingaleConsistent);
    CHECK(combine(vertical_martingale_test(constant_section(torus, make_vec({1.0, 2.0})), t_paths)) ==
          Decision::MartingaleConsistent);

    const Section sin_field = torus_sin_section(torus);
    const auto verdicts = vertical_martingale_test(sin_field, t_paths);
    CHECK(verdicts[0].decision == Decision::DriftDetected);
    CHECK(verdicts[0].drift_estimate < 0.0);
    const auto predicted = predicted_vertical_drift(sin_field, t_paths);
    const double width = verdicts[0].ci_high - verdicts[0].ci_low;
    CHECK(std::abs(verdicts[0].drift_estimate - predicted[0]) <= 2 * width);
    CHECK(std::abs(predicted[1]) < 1e-6);
}

TEST_CASE("horizontally harmonic test agrees with the vertical test") {
    const auto torus = build_tm_connection("torus2", ConnectionKind::Horizontal);
    const auto s2 = build_tm_connection("sphere2", ConnectionKind::Sasaki);
    const auto t_paths = simulate_brownian(torus->base(), torus_start, 1.0, 1e-2, 400, 33);
    const auto s2_paths = simulate_brownian(s2->base(), sphere_start, 1.0, 1e-2, 200, 34);

    CHECK(combine(horizontally_harmonic_test(constant_section(torus, make_vec({1.0, 2.0})), t_paths)) ==
          Decision::MartingaleConsistent);
    CHECK(combine(horizontally_harmonic_test(zero_section(s2), s2_paths)) == Decision::MartingaleConsistent);
    const Section sin_field = torus_sin_section(torus);
    CHECK(combine(horizontally_harmonic_test(sin_field, t_paths)) == Decision::DriftDetected);
    CHECK(combine(horizontally_harmonic_test(sin_field, t_paths)) == combine(vertical_martingale_test(sin_field, t_paths)));
}

TEST_CASE("vertical semimartingale iff its fiber process is a martingale") {
    const auto torus = build_tm_connection("torus2", ConnectionKind::Horizontal);
    const auto base = simulate_brownian(torus->base(), torus_start, 1.0, 1e-2, 500, 41);
    const auto horizontal = torus->principal().horizontal_lift(base, 0.0);
    // pure Brownian fiber processes need a resolution of order 4/sqrt(n)
    const double resolution = 0.4;

    const auto still = fiber_processes(2, base, make_vec({0.1, 0.2}), Vec::Zero(2), 42);
    const FiberMartingaleResult a = fiber_martingale_check(*torus, horizontal, still, resolution);
    CHECK(a.vertical_decision == Decision::MartingaleConsistent);
    CHECK(a.agree());

    const auto drifting = fiber_processes(2, base, make_vec({0.1, 0.2}), make_vec({0.5, 0.0}), 42);
    const FiberMartingaleResult b = fiber_martingale_check(*torus, horizontal, drifting, resolution);
    CHECK(b.vertical_decision == Decision::DriftDetected);
    CHECK(b.agree());
    CHECK(b.vertical[0].drift_estimate == doctest::Approx(b.fiber[0].drift_estimate).epsilon(1e-9));

    const auto s2 = build_tm_connection("sphere2", ConnectionKind::Sasaki);
    for (double dt : {1e-2, 1e-3}) {
        const auto sb = simulate_brownian(s2->base(), sphere_start, 0.5, dt, 400, 43);
        const auto sh = s2->principal().horizontal_lift(sb, 0.0);
        const auto xi = fiber_processes(2, sb, make_vec({0.2, 0.0}), Vec::Zero(2), 44);
        CHECK(fiber_martingale_check(*s2, sh, xi, resolution * 3).agree());
    }
}

TEST_CASE("parallelism and component constancy") {
    const auto torus = build_tm_connection("torus2", ConnectionKind::Horizontal);
    auto pts = sample_points(torus->base(), 20, 50);
    pts.push_back({kCover, make_vec({0.0, 1.0})});
    CHECK(parallelism_check(zero_section(torus), pts) == 0.0);
    CHECK(parallelism_check(constant_section(torus, make_vec({0.3, 0.3})), pts) < 1e-12);
    CHECK(parallelism_check(torus_sin_section(torus), pts) == doctest::Approx(1.0).epsilon(2 * h * h));
    CHECK(component_gradient_max(torus_sin_section(torus), pts) == doctest::Approx(1.0).epsilon(2 * h * h));

    const auto s2 = build_tm_connection("sphere2", ConnectionKind::Sasaki);
    const auto spts = sample_points(s2->base(), 20, 51);
    CHECK(parallelism_check(zero_section(s2), spts) == 0.0);
    CHECK(parallelism_check(sphere_height_gradient_section(s2, 0.5), spts) > 0.1);
}
