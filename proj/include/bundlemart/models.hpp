#pragma once

#include "bundlemart/bundles.hpp"

#include <string>
#include <vector>

#include <json.hpp>

namespace bundlemart {

/// Oriented orthonormal frame bundle of the unit sphere, structure group SO(2). The fiber angle v
/// is the angle of the first frame vector against the first coordinate axis of the chart.
PrincipalPtr make_frame_bundle_sphere();

/// Orthonormal frame bundle of the flat torus (trivial, zero connection).
PrincipalPtr make_frame_bundle_torus();

/// Hopf bundle S^3 -> S^2(1/2) with structure group U(1), sections s_N(w) = (1, conj w)/sqrt(1+|w|^2)
/// and s_S(y) = (conj y, 1)/sqrt(1+|y|^2); h = 1 makes the Kaluza-Klein metric the round S^3.
PrincipalPtr make_hopf_bundle();

/// Product bundle base x G with the flat connection.
PrincipalPtr make_trivial_bundle(ManifoldPtr base, GroupKind group = GroupKind::U1);

/// TM as OM x_SO(2) R^2 with natural fiber coordinates, over "sphere2" or "torus2".
AssociatedPtr build_tm_connection(const std::string& base, ConnectionKind kind);

/// E = S^3 x_U(1) C^m (m = 1, 2) as R^{2m}, induced metric, chosen connection (Sasaki = Levi-Civita
/// of the induced metric).
AssociatedPtr make_hopf_associated(int m, ConnectionKind kind = ConnectionKind::Sasaki);

/// Point of S^3 in C^2 = R^4 for a Hopf bundle point.
Vec hopf_embed(const PointRef& p);
/// Hopf bundle point (north chart when |z1| >= |z2|) of a unit vector in R^4.
PointRef hopf_point(const Vec& u);

/// Complex structure on R^{2m}: multiplication by i on each C factor.
Mat complex_structure(int m);

/// Names of the manifolds and bundles known to make_model_manifest.
std::vector<std::string> manifold_names();
std::vector<std::string> bundle_names();
std::vector<std::string> model_names();
bool is_known_model(const std::string& name);

ManifoldPtr manifold_by_name(const std::string& name);
/// Principal bundles: frame-s2, frame-torus, hopf, trivial-r2.
PrincipalPtr principal_by_name(const std::string& name);
/// Associated bundles: tm-s2-{sasaki,complete,horizontal}, tm-torus-{...}, hopf-c1, hopf-c2.
AssociatedPtr associated_by_name(const std::string& name);

/// Charts, group, connection choice and oracle formulas of a model.
nlohmann::json model_manifest(const std::string& name);

}  // namespace bundlemart
