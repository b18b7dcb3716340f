#include "bundlemart/bundles.hpp"
#include "bundlemart/models.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace bundlemart;
using testing_support::random_in_ball;
using testing_support::random_vec;

namespace {

constexpr double pi = std::numbers::pi;

SamplePath join(const std::vector<SamplePath>& legs) {
    SamplePath out;
    for (const auto& leg : legs) {
        const double t0 = out.time.empty() ? 0.0 : out.time.back();
        for (std::size_t k = out.time.empty() ? 0 : 1; k < leg.size(); ++k) {
            out.time.push_back(t0 + leg.time[k]);
            out.states.push_back(leg.states[k]);
        }
    }
    return out;
}

SamplePath latitude_loop(double radius, int steps) {
    SamplePath loop;
    for (int k = 0; k <= steps; ++k) {
        const double t = 2 * pi * k / steps;
        loop.time.push_back(t);
        loop.states.push_back({kNorth, make_vec({radius * std::cos(t), radius * std::sin(t)})});
    }
    return loop;
}

Vec with_tail(const Vec& head, const Vec& tail) {
    Vec out(head.size() + tail.size());
    out << head, tail;
    return out;
}

}  // namespace

TEST_CASE("gauge maps are mutually inverse") {
    std::mt19937_64 rng(1);
    for (const auto& p : {make_frame_bundle_sphere(), make_hopf_bundle()}) {
        for (int k = 0; k < 100; ++k) {
            const Vec x = random_in_ball(rng, 2, 3.0);
            if (x.norm() < 0.2) continue;
            const PointRef a = p->point({kNorth, x}, random_vec(rng, 1, -pi, pi)[0]);
            const PointRef b = p->total().transition(a, kSouth);
            CHECK((p->total().transition(b, kNorth).x - a.x).norm() < 1e-12);
        }
    }
}

TEST_CASE("Hopf total space is the round unit S^3") {
    const auto hopf = make_hopf_bundle();
    std::mt19937_64 rng(2);
    for (int k = 0; k < 100; ++k) {
        const PointRef p{k % 2, with_tail(random_in_ball(rng, 2, 1.4), random_vec(rng, 1, -pi, pi))};
        const Vec u = hopf_embed(p);
        CHECK(u.norm() == doctest::Approx(1.0).epsilon(1e-14));
        const Mat j = fd_jacobian([&](const Vec& y) { return hopf_embed({p.chart, y}); }, p.x, 1e-4);
        CHECK((hopf->total().metric(p) - j.transpose() * j).cwiseAbs().maxCoeff() < 1e-8);

        const PointRef back = hopf_point(u);
        CHECK((hopf_embed(back) - u).norm() < 1e-12);
        // chart transitions agree with the embedding
        if (p.x.head(2).norm() > 0.2) {
            const PointRef q = hopf->total().transition(p, 1 - p.chart);
            CHECK((hopf_embed(q) - u).norm() < 1e-12);
        }
    }
}

TEST_CASE("connection form, fundamental field and horizontal space") {
    std::mt19937_64 rng(3);
    for (const auto& p : {make_frame_bundle_sphere(), make_hopf_bundle(), make_frame_bundle_torus()}) {
        for (int k = 0; k < 50; ++k) {
            const PointRef u = p->point({kNorth, random_in_ball(rng, 2, 1.4)}, random_vec(rng, 1, -pi, pi)[0]);
            const Vec a = p->fundamental_field(u, 1.0);
            CHECK(p->connection_form(u, a) == doctest::Approx(1.0));
            const Vec w = random_vec(rng, 2, -1, 1);
            const Vec hw = p->horizontal_lift_vector(u, w);
            CHECK(std::abs(p->connection_form(u, hw)) < 1e-14);
            const Mat kk = p->total().metric(u);
            CHECK(std::abs(hw.dot(kk * a)) < 1e-10);
            // submersion: horizontal vectors keep their length
            CHECK(std::sqrt(hw.dot(kk * hw)) == doctest::Approx(p->base().norm(p->project(u), w)).epsilon(1e-8));
            CHECK(p->kaluza_klein(u, hw, hw) == doctest::Approx(hw.dot(kk * hw)).epsilon(1e-12));
        }
    }
}

TEST_CASE("holonomy equals enclosed area") {
    const auto frame = make_frame_bundle_sphere();
    SUBCASE("latitude circle") {
        const double r = 0.7;
        const double colat = 2 * std::atan(r);
        const SamplePath lift = frame->horizontal_lift_path(latitude_loop(r, 20000), 0.0);
        CHECK(frame->angle(lift.states.back()) == doctest::Approx(2 * pi * (1 - std::cos(colat))).epsilon(1e-7));
    }
    SUBCASE("octant geodesic triangle") {
        const auto& s2 = frame->base();
        const double len = pi / 2, step = 1e-4;
        const SamplePath a = geodesic_shoot(s2, {kNorth, make_vec({0.0, 0.0})}, make_vec({1.0, 0.0}), len, step);
        const SamplePath b = geodesic_shoot(s2, a.states.back(), make_vec({0.0, 1.0}), len, step);
        const SamplePath c = geodesic_shoot(s2, b.states.back(), make_vec({0.0, -1.0}), len, step);
        const SamplePath loop = join({a, b, c});
        CHECK(loop.states.back().x.norm() < 1e-6);
        const SamplePath lift = frame->horizontal_lift_path(loop, 0.0);
        CHECK(std::abs(frame->angle(lift.states.back()) - pi / 2) < 1e-3);
    }
    SUBCASE("loop through both charts") {
        // a great circle through both poles encloses a hemisphere: rotation by 2 pi
        const auto& s2 = frame->base();
        const SamplePath g = geodesic_shoot(s2, {kNorth, make_vec({0.0, 0.0})}, make_vec({1.0, 0.0}), 2 * pi, 1e-3);
        CHECK(g.states.back().chart == kNorth);
        const SamplePath lift = frame->horizontal_lift_path(g, 0.3);
        const double turn = frame->angle(lift.states.back()) - 0.3;
        CHECK(std::abs(std::remainder(turn, 2 * pi)) < 1e-6);
    }
}

TEST_CASE("fiber distance on the Hopf bundle equals the circle distance") {
    const auto hopf = make_hopf_bundle();
    const PointRef u = hopf->point({kNorth, make_vec({0.3, -0.2})}, 0.4);
    for (double theta : {0.1, 0.5, 1.0, 3.0}) {
        const FiberDistance d =
            fiber_distance_check(*hopf, u, hopf->group().identity(), hopf->group().exp(make_vec({theta})));
        CHECK(d.converged);
        CHECK(d.group_distance == doctest::Approx(theta));
        CHECK(std::abs(d.total_distance - d.group_distance) < 1e-3);
    }
}

TEST_CASE("tangent bundle transitions are the base Jacobian") {
    const auto tm = build_tm_connection("sphere2", ConnectionKind::Sasaki);
    std::mt19937_64 rng(4);
    for (int k = 0; k < 100; ++k) {
        const Vec x = random_in_ball(rng, 2, 3.0);
        if (x.norm() < 0.2) continue;
        const Vec nu = random_vec(rng, 2, -2, 2);
        const PointRef e{kNorth, with_tail(x, nu)};
        const PointRef f = tm->total().transition(e, kSouth);
        const Mat jac = tm->base().transition_jacobian({kNorth, x}, kSouth);
        CHECK((f.x.tail(2) - jac * nu).norm() < 1e-9);
    }
}

TEST_CASE("tangent bundle connection tables") {
    std::mt19937_64 rng(5);
    const auto s2_h = build_tm_connection("sphere2", ConnectionKind::Horizontal);
    const auto s2_c = build_tm_connection("sphere2", ConnectionKind::Complete);
    const auto s2_s = build_tm_connection("sphere2", ConnectionKind::Sasaki);
    const auto t_h = build_tm_connection("torus2", ConnectionKind::Horizontal);
    const auto t_c = build_tm_connection("torus2", ConnectionKind::Complete);

    for (int k = 0; k < 30; ++k) {
        const Vec x = random_in_ball(rng, 2, 1.4);
        const Vec nu = random_vec(rng, 2, -2, 2);
        const PointRef e{kNorth, with_tail(x, nu)};
        const Christoffel h = s2_h->connection(e);
        const Christoffel c = s2_c->connection(e);
        const Christoffel s = s2_s->connection(e);
        const Christoffel gm = s2_h->base().christoffel({kNorth, x});
        const Mat g = s2_h->base().metric({kNorth, x});
        const auto a = s2_h->connection_matrices(kNorth, x);

        for (int i = 0; i < 4; ++i)
            for (int al = 2; al < 4; ++al)
                for (int be = 2; be < 4; ++be) {
                    CHECK(h(i, al, be) == 0.0);
                    CHECK(c(i, al, be) == 0.0);
                    CHECK(std::abs(s(i, al, be)) < 1e-6);
                }
        for (int i = 0; i < 2; ++i)
            for (int al = 0; al < 2; ++al)
                for (int be = 0; be < 2; ++be) {
                    // the closed-form A_i are the Levi-Civita coefficients of the base
                    CHECK(a[static_cast<std::size_t>(i)](be, al) == doctest::Approx(gm(be, i, al)).epsilon(1e-12));
                    CHECK(c(2 + be, i, 2 + al) == doctest::Approx(h(2 + be, i, 2 + al)).epsilon(1e-12));
                }
        // complete - horizontal = R(nu, d_i) d_j = g_ij nu - g(nu, d_j) d_i
        for (int be = 0; be < 2; ++be)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    const double curv = g(i, j) * nu[be] - (g.row(j).dot(nu)) * (be == i ? 1.0 : 0.0);
                    CHECK(std::abs(c(2 + be, i, j) - h(2 + be, i, j) - curv) < 1e-6);
                }
        // Sasaki: horizontal vectors keep their length
        const Vec w = random_vec(rng, 2, -1, 1);
        const Mat proj = s2_s->horizontal_projector(e);
        Vec lift = with_tail(w, Vec::Zero(2));
        lift = proj * lift;
        const Mat ge = s2_s->total().metric(e);
        CHECK(std::sqrt(lift.dot(ge * lift)) == doctest::Approx(s2_s->base().norm({kNorth, x}, w)).epsilon(1e-8));
        CHECK(metric_compatibility_defect(s2_s->total(), e) < 1e-5);

        const PointRef et{kCover, with_tail(random_vec(rng, 2, 0, 2 * pi), nu)};
        CHECK(t_h->connection(et).max_abs_difference(Christoffel(4)) == 0.0);
        CHECK(t_c->connection(et).max_abs_difference(t_h->connection(et)) == 0.0);
    }
}

TEST_CASE("fibers are totally geodesic for the horizontal lift") {
    const auto tm = build_tm_connection("sphere2", ConnectionKind::Horizontal);
    const PointRef e{kNorth, make_vec({0.4, -0.3, 0.5, 1.0})};
    const Vec v = make_vec({0.0, 0.0, 1.0, -2.0});
    const Christoffel gam = tm->connection(e);
    CHECK(gam.contract(v, v).norm() == 0.0);
}

TEST_CASE("mu, its inverse and equivariance") {
    std::mt19937_64 rng(6);
    for (const auto& e : {build_tm_connection("sphere2", ConnectionKind::Sasaki), make_hopf_associated(2)}) {
        const auto& p = e->principal();
        const int r = e->fiber_dim();
        for (int k = 0; k < 100; ++k) {
            const PointRef u = p.point({k % 2, random_in_ball(rng, 2, 1.4)}, random_vec(rng, 1, -pi, pi)[0]);
            const Vec xi = random_vec(rng, r, -1, 1);
            const PointRef x = e->mu(u, xi);
            CHECK((e->mu_inverse(u, x) - xi).norm() < 1e-12);
            const double s = random_vec(rng, 1, -pi, pi)[0];
            const PointRef ug = p.right_action(u, p.group().exp(make_vec({s})));
            CHECK((e->mu(ug, e->rho(-s) * xi).x - x.x).norm() < 1e-12);
            // same fiber point seen from the other chart
            if (u.x.head(2).norm() > 0.2) {
                const PointRef u2 = p.total().transition(u, 1 - u.chart);
                CHECK((e->mu_inverse(u2, x) - xi).norm() < 1e-10);
            }
        }
        const PointRef u = p.point({kNorth, make_vec({0.1, 0.1})}, 0.0);
        const PointRef elsewhere = e->point({kNorth, make_vec({0.5, 0.1})}, Vec::Zero(r));
        CHECK_THROWS_AS(e->mu_inverse(u, elsewhere), GeometryError);
    }
}

TEST_CASE("horizontal lifts of Brownian paths are horizontal") {
    const auto frame = make_frame_bundle_sphere();
    const auto ens = simulate_brownian(frame->base(), {kNorth, make_vec({0.5, 0.0})}, 1.0, 1e-2, 20, 99);
    const auto lifted = frame->horizontal_lift(ens, 0.0);
    for (const auto& path : lifted.paths) {
        const RealPath om = stratonovich_integral(frame->total(), frame->connection_one_form(), path);
        for (double v : om.values) CHECK(std::abs(v) < 1e-10);
    }
}

TEST_CASE("pullback identity rejects non-horizontal inputs") {
    const auto tm = build_tm_connection("torus2", ConnectionKind::Horizontal);
    const auto frame = make_frame_bundle_sphere();
    const auto e = build_tm_connection("sphere2", ConnectionKind::Horizontal);
    const auto base = simulate_brownian(frame->base(), {kNorth, make_vec({0.5, 0.0})}, 0.5, 1e-2, 1, 5);
    SamplePath vertical_drift = frame->horizontal_lift_path(base.paths[0], 0.0);
    for (std::size_t k = 0; k < vertical_drift.size(); ++k) vertical_drift.states[k].x[2] += 0.1 * k;
    const std::vector<Vec> xi(vertical_drift.size(), make_vec({1.0, 0.0}));
    CHECK_THROWS_AS(horizontal_pullback_identity_check(*e, vertical_drift, xi, e->vertical_form(0)), GeometryError);
    (void)tm;
}

TEST_CASE("models: manifests, names and errors") {
    for (const auto& name : model_names()) {
        CHECK(is_known_model(name));
        const auto j = model_manifest(name);
        CHECK(j["model"] == name);
        CHECK(j.contains("charts"));
        CHECK(j.contains("oracles"));
        CHECK(manifold_by_name(name) != nullptr);
    }
    CHECK_FALSE(is_known_model("klein-bottle"));
    CHECK_THROWS_AS(model_manifest("klein-bottle"), GeometryError);
    CHECK_THROWS_AS(build_tm_connection("sphere3", ConnectionKind::Sasaki), GeometryError);
    CHECK_THROWS_AS(make_hopf_associated(1, ConnectionKind::Complete), GeometryError);
    CHECK_THROWS_AS(connection_kind_from_string("parallel"), GeometryError);
    CHECK(connection_kind_from_string("complete_lift") == ConnectionKind::Complete);
    CHECK(model_manifest("hopf")["group"] == "U1");
    CHECK(model_manifest("tm-s2-complete")["connection"] == "complete");
}

TEST_CASE("Hopf action has the origin as its only fixed point") {
    const auto e = make_hopf_associated(2);
    const Mat g = e->rho(pi / 2);  // multiplication by i
    const Mat fix = g - Mat::Identity(4, 4);
    CHECK(Eigen::FullPivLU<Mat>(fix).rank() == 4);
    // Hermitian product preserved
    CHECK((g.transpose() * g - Mat::Identity(4, 4)).norm() < 1e-14);
}
