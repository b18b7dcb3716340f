#include "bundlemart/models.hpp"

#include <cmath>
#include <numbers>

namespace bundlemart {

namespace {

double arg(const Vec& x) { return std::atan2(x[1], x[0]); }

Mat rotation_generator() {
    Mat j(2, 2);
    j << 0, -1, 1, 0;
    return j;
}

// omega_i for the Levi-Civita connection of g = e^{2f} delta in two dimensions
Vec conformal_frame_connection(const Vec& grad_f) { return make_vec({-grad_f[1], grad_f[0]}); }

Vec sphere_log_factor_grad(const Vec& x) { return -2.0 * x / (1.0 + x.squaredNorm()); }

}  // namespace

Mat complex_structure(int m) {
    Mat j = Mat::Zero(2 * m, 2 * m);
    for (int k = 0; k < m; ++k) {
        j(2 * k, 2 * k + 1) = -1;
        j(2 * k + 1, 2 * k) = 1;
    }
    return j;
}

PrincipalPtr make_frame_bundle_sphere() {
    PrincipalBundleSpec spec;
    spec.name = "frame-s2";
    spec.base = make_sphere(2, 1.0);
    spec.group = GroupKind::SO2;
    spec.connection = [](ChartId, const Vec& x) { return conformal_frame_connection(sphere_log_factor_grad(x)); };
    // dy/dx of the inversion is multiplication by -1/w^2, which rotates frames by pi - 2 arg w
    spec.gauge[{kNorth, kSouth}] = [](const Vec& x) { return std::numbers::pi - 2.0 * arg(x); };
    spec.gauge[{kSouth, kNorth}] = [](const Vec& y) { return -std::numbers::pi - 2.0 * arg(y); };
    return std::make_shared<PrincipalBundle>(std::move(spec));
}

PrincipalPtr make_frame_bundle_torus() {
    PrincipalBundleSpec spec;
    spec.name = "frame-torus";
    spec.base = make_torus();
    spec.group = GroupKind::SO2;
    return std::make_shared<PrincipalBundle>(std::move(spec));
}

PrincipalPtr make_hopf_bundle() {
    PrincipalBundleSpec spec;
    spec.name = "hopf";
    spec.base = make_sphere(2, 0.5);
    spec.group = GroupKind::U1;
    spec.connection = [](ChartId, const Vec& x) { return Vec(make_vec({x[1], -x[0]}) / (1.0 + x.squaredNorm())); };
    // s_S = e^{i arg w} s_N
    spec.gauge[{kNorth, kSouth}] = [](const Vec& x) { return -arg(x); };
    spec.gauge[{kSouth, kNorth}] = [](const Vec& y) { return -arg(y); };
    return std::make_shared<PrincipalBundle>(std::move(spec));
}

PrincipalPtr make_trivial_bundle(ManifoldPtr base, GroupKind group) {
    PrincipalBundleSpec spec;
    spec.name = "trivial-" + base->name();
    spec.base = std::move(base);
    spec.group = group;
    return std::make_shared<PrincipalBundle>(std::move(spec));
}

AssociatedPtr build_tm_connection(const std::string& base, ConnectionKind kind) {
    AssociatedBundleSpec spec;
    spec.fiber_dim = 2;
    spec.generator = rotation_generator();
    spec.connection = kind;
    spec.tangent_bundle = true;
    if (base == "sphere2" || base == "s2") {
        spec.name = "tm-s2-" + to_string(kind);
        spec.principal = make_frame_bundle_sphere();
        spec.frame = [](ChartId, const Vec& x) { return Mat(Mat::Identity(2, 2) * (0.5 * (1.0 + x.squaredNorm()))); };
        spec.connection_matrices = [](ChartId, const Vec& x) {
            // A_i = d_i f I + omega_i J, the Levi-Civita coefficients Gamma^a_{i b}
            const Vec df = sphere_log_factor_grad(x);
            const Vec w = conformal_frame_connection(df);
            const Mat j = rotation_generator();
            return std::vector<Mat>{df[0] * Mat::Identity(2, 2) + w[0] * j, df[1] * Mat::Identity(2, 2) + w[1] * j};
        };
    } else if (base == "torus2" || base == "torus") {
        spec.name = "tm-torus-" + to_string(kind);
        spec.principal = make_frame_bundle_torus();
        spec.connection_matrices = [](ChartId, const Vec&) {
            return std::vector<Mat>{Mat::Zero(2, 2), Mat::Zero(2, 2)};
        };
    } else {
        throw GeometryError(ErrorKind::InvalidArgument, "tangent bundle base must be sphere2 or torus2, got '" + base + "'");
    }
    return std::make_shared<AssociatedBundle>(std::move(spec));
}

AssociatedPtr make_hopf_associated(int m, ConnectionKind kind) {
    if (m < 1 || m > 2) throw GeometryError(ErrorKind::InvalidArgument, "Hopf fiber C^m needs m in {1, 2}");
    if (kind == ConnectionKind::Complete)
        throw GeometryError(ErrorKind::InvalidArgument, "complete lift is defined for tangent bundles only");
    AssociatedBundleSpec spec;
    spec.name = "hopf-c" + std::to_string(m) + (kind == ConnectionKind::Sasaki ? "" : "-" + to_string(kind));
    spec.principal = make_hopf_bundle();
    spec.fiber_dim = 2 * m;
    spec.generator = complex_structure(m);
    spec.connection = kind;
    const PrincipalPtr p = spec.principal;
    const Mat j = spec.generator;
    spec.connection_matrices = [p, j](ChartId c, const Vec& x) {
        const Vec w = p->connection_coeffs(c, x);
        return std::vector<Mat>{w[0] * j, w[1] * j};
    };
    return std::make_shared<AssociatedBundle>(std::move(spec));
}

Vec hopf_embed(const PointRef& p) {
    const double x1 = p.x[0], x2 = p.x[1], phi = p.x[2];
    const double rho = std::sqrt(1.0 + x1 * x1 + x2 * x2);
    const double c = std::cos(phi), s = std::sin(phi);
    Vec u(4);
    if (p.chart == kNorth) {
        // (e^{i phi}, conj(w) e^{i phi}) / rho
        u << c, s, x1 * c + x2 * s, x1 * s - x2 * c;
    } else {
        // (conj(y) e^{i phi}, e^{i phi}) / rho
        u << x1 * c + x2 * s, x1 * s - x2 * c, c, s;
    }
    return u / rho;
}

PointRef hopf_point(const Vec& u) {
    const double a1 = u[0], b1 = u[1], a2 = u[2], b2 = u[3];
    if (a1 * a1 + b1 * b1 >= a2 * a2 + b2 * b2) {
        // w = conj(z2 / z1), phi = arg z1
        const double d = a1 * a1 + b1 * b1;
        const double re = (a2 * a1 + b2 * b1) / d;
        const double im = (b2 * a1 - a2 * b1) / d;
        return {kNorth, make_vec({re, -im, std::atan2(b1, a1)})};
    }
    const double d = a2 * a2 + b2 * b2;
    const double re = (a1 * a2 + b1 * b2) / d;
    const double im = (b1 * a2 - a1 * b2) / d;
    return {kSouth, make_vec({re, -im, std::atan2(b2, a2)})};
}

std::vector<std::string> manifold_names() {
    return {"flat-r1", "flat-r2", "flat-r3", "sphere2", "sphere2-half", "sphere3", "torus2", "circle"};
}

std::vector<std::string> bundle_names() {
    return {"frame-s2",         "frame-torus",         "hopf",           "trivial-r2",
            "tm-s2-sasaki",     "tm-s2-complete",      "tm-s2-horizontal", "tm-torus-sasaki",
            "tm-torus-complete", "tm-torus-horizontal", "hopf-c1",        "hopf-c2"};
}

std::vector<std::string> model_names() {
    auto out = manifold_names();
    for (auto& b : bundle_names()) out.push_back(b);
    return out;
}

bool is_known_model(const std::string& name) {
    for (const auto& n : model_names())
        if (n == name) return true;
    return false;
}

ManifoldPtr manifold_by_name(const std::string& name) {
    if (name == "flat-r1") return make_flat(1);
    if (name == "flat-r2") return make_flat(2);
    if (name == "flat-r3") return make_flat(3);
    if (name == "sphere2") return make_sphere(2, 1.0);
    if (name == "sphere2-half") return make_sphere(2, 0.5);
    if (name == "sphere3") return make_sphere(3, 1.0);
    if (name == "torus2") return make_torus();
    if (name == "circle") return make_circle();
    if (auto p = principal_by_name(name)) return p->total_ptr();
    if (auto e = associated_by_name(name)) return e->total_ptr();
    return nullptr;
}

PrincipalPtr principal_by_name(const std::string& name) {
    if (name == "frame-s2") return make_frame_bundle_sphere();
    if (name == "frame-torus") return make_frame_bundle_torus();
    if (name == "hopf") return make_hopf_bundle();
    if (name == "trivial-r2") return make_trivial_bundle(make_flat(2));
    return nullptr;
}

AssociatedPtr associated_by_name(const std::string& name) {
    for (const char* base : {"s2", "torus"})
        for (auto kind : {ConnectionKind::Sasaki, ConnectionKind::Complete, ConnectionKind::Horizontal})
            if (name == std::string("tm-") + base + "-" + to_string(kind)) return build_tm_connection(base, kind);
    if (name == "hopf-c1") return make_hopf_associated(1);
    if (name == "hopf-c2") return make_hopf_associated(2);
    return nullptr;
}

nlohmann::json model_manifest(const std::string& name) {
    using nlohmann::json;
    json j;
    j["model"] = name;
    auto charts_of = [](const ChartedManifold& m) {
        json c = json::array();
        for (const auto& ch : m.atlas()) {
            json t = json::array();
            for (const auto& [id, map] : ch.transitions) t.push_back(m.chart(id).name);
            c.push_back({{"name", ch.name}, {"dim", ch.dim}, {"transitions", t}});
        }
        return c;
    };
    if (auto p = principal_by_name(name)) {
        j["kind"] = "principal-bundle";
        j["base"] = p->base().name();
        j["group"] = p->group().name();
        j["fiber_metric"] = p->fiber_metric();
        j["charts"] = charts_of(p->total());
        j["connection"] = name == "hopf"       ? "omega = dphi + (x2 dx1 - x1 dx2)/(1+|x|^2)"
                          : name == "frame-s2" ? "Levi-Civita: omega = dv - f_y dx1 + f_x dx2, f = log(2/(1+|x|^2))"
                                               : "flat";
        json oracles = json::array();
        if (name == "hopf") oracles.push_back("Kaluza-Klein metric equals the round S^3 metric; fiber distance = |theta|");
        if (name == "frame-s2") oracles.push_back("holonomy of a counterclockwise loop = enclosed area");
        j["oracles"] = oracles;
        return j;
    }
    if (auto e = associated_by_name(name)) {
        j["kind"] = "associated-bundle";
        j["base"] = e->base().name();
        j["principal"] = e->principal().name();
        j["group"] = e->principal().group().name();
        j["fiber_dim"] = e->fiber_dim();
        j["connection"] = to_string(e->connection_kind());
        j["charts"] = charts_of(e->total());
        json oracles = json::array();
        if (e->is_tangent_bundle()) {
            oracles.push_back("vertical-vertical Christoffel symbols vanish");
            oracles.push_back("complete - horizontal = R(nu, d_i) d_j; zero on the torus");
        } else {
            oracles.push_back("fixed points of z -> g z: only the origin for g != 1");
        }
        j["oracles"] = oracles;
        return j;
    }
    if (auto m = manifold_by_name(name)) {
        j["kind"] = "manifold";
        j["dim"] = m->dim();
        j["charts"] = charts_of(*m);
        json oracles = json::array();
        if (name.rfind("sphere", 0) == 0) {
            oracles.push_back("g = 4R^2/(1+|x|^2)^2 delta, Gamma closed form");
            oracles.push_back("E cos(colatitude)(B_t) = e^{-t} cos(colatitude)(B_0) on the unit S^2");
        } else {
            oracles.push_back("flat: Gamma = 0");
        }
        j["oracles"] = oracles;
        return j;
    }
    throw GeometryError(ErrorKind::InvalidArgument, "unknown model '" + name + "'");
}

}  // namespace bundlemart
