#include <catch2/catch_amalgamated.hpp>

#include <smmslab/smms.hpp>

#include <cmath>
#include <functional>
#include <numbers>

using namespace smmslab;

namespace {
constexpr double pi = std::numbers::pi;

Field grid_field(const DiscreteDomain& d, const std::function<double(double, double)>& f) {
  Field u(d.node_count());
  for (int i = 0; i < d.node_count(); ++i) u[i] = f(d.coord_r(i), d.coord_t(i));
  return u;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}
}  // namespace

TEST_CASE("structure constants derive from k = n + m - 2") {
  const StructureConstants a = structure_constants(3, 0.0);
  REQUIRE(a.k == 1.0);
  REQUIRE(a.c == 8.0);
  REQUIRE(a.kappa == 0.125);
  REQUIRE(a.q_exp == 5.0);
  REQUIRE(a.s_exp == 3.0);
  REQUIRE(a.p_exp == 4.0);
  REQUIRE(a.vol_exp == 6.0);
  REQUIRE(a.area_exp == 4.0);

  const StructureConstants b = structure_constants(3, 1.0);
  REQUIRE(b.k == 2.0);
  REQUIRE(b.c == 6.0);
  REQUIRE(b.q_exp == 3.0);
  REQUIRE(b.s_exp == 2.0);
  REQUIRE(b.p_exp == 3.0);

  const StructureConstants c = structure_constants(4, 2.0);
  REQUIRE(c.k == 4.0);
  REQUIRE(c.c == 5.0);
  REQUIRE(std::abs(c.kappa - 0.2) < 1e-15);
  REQUIRE(std::abs(c.s_exp - 1.5) < 1e-15);

  REQUIRE_THROWS_AS(structure_constants(1, 1.0), invalid_input_error);
  REQUIRE_THROWS_AS(structure_constants(3, -0.1), invalid_input_error);
  REQUIRE_THROWS_AS(structure_constants(2, 0.0), invalid_input_error);  // k = 0
}

TEST_CASE("background construction validates sizes, dimensions, and the m = 0 weight") {
  const DiscreteDomain d = build_interval_domain(11, 1.0, 3, 0.0);
  const int nn = d.node_count();

  REQUIRE_THROWS_AS(
      make_background(d, Field(nn, 0.5), Field(nn, 0.0), BoundaryField(2, 0.0), 3, 0.0),
      invalid_input_error);  // m = 0 forces phi0 == 0
  REQUIRE_THROWS_AS(
      make_background(d, Field(nn - 1, 0.0), Field(nn, 0.0), BoundaryField(2, 0.0), 3, 1.0),
      invalid_input_error);
  REQUIRE_THROWS_AS(
      make_background(d, Field(nn, 0.0), Field(nn + 3, 0.0), BoundaryField(2, 0.0), 3, 1.0),
      invalid_input_error);
  REQUIRE_THROWS_AS(
      make_background(d, Field(nn, 0.0), Field(nn, 0.0), BoundaryField(1, 0.0), 3, 1.0),
      invalid_input_error);

  // A Cartesian strip (grid dim 2) may realize a formal dim_n >= 3 ambient
  // space, but dim_n below 3 is rejected.
  const DiscreteDomain strip = build_halfspace_cylinder_domain(6, 6, 1.0, 1.0, 2, 1.0);
  const int sn = strip.node_count();
  const int sb = static_cast<int>(strip.boundary_nodes.size());
  REQUIRE_NOTHROW(
      make_background(strip, Field(sn, 0.0), Field(sn, 0.0), BoundaryField(sb, 0.0), 3, 1.0));
  REQUIRE_THROWS_AS(
      make_background(strip, Field(sn, 0.0), Field(sn, 0.0), BoundaryField(sb, 0.0), 2, 1.0),
      invalid_input_error);
}

TEST_CASE("weighted curvature cache is exact for quadratic weights") {
  const DiscreteDomain d = build_interval_domain(51, 1.0, 3, 2.0);
  const Field phi0 = grid_field(d, [](double x, double) { return 0.05 * x * x; });
  const Field R0 = grid_field(d, [](double x, double) { return 1.0 + 0.4 * x; });
  const BoundaryField H0 = {0.7, -0.3};
  const SmmsBackground bg = make_background(d, phi0, R0, H0, 3, 2.0);

  // Rm = R + 2 lap(phi) - (3/2) |grad phi|^2 with lap = 0.1, grad = 0.1 x.
  for (int i = 0; i < bg.node_count(); ++i) {
    const double x = d.rc[i];
    const double expect = R0[i] + 0.2 - 1.5 * 0.01 * x * x;
    REQUIRE(std::abs(bg.Rm[i] - expect) < 1e-10);
  }
  // Hm = H - dphi/dnu: slope is zero at x = 0, +0.1 at x = 1.
  REQUIRE(std::abs(bg.Hm[0] - 0.7) < 1e-12);
  REQUIRE(std::abs(bg.Hm[1] - (-0.3 - 0.1)) < 1e-10);
}

TEST_CASE("weighted curvature cache converges at second order on the ball") {
  const double a = 0.2;
  const auto cache_err = [&](int nodes) {
    const DiscreteDomain d = build_radial_ball_domain(nodes, 3, 1.0);
    const Field phi0 = grid_field(d, [&](double r, double) { return a * std::cos(pi * r); });
    const SmmsBackground bg =
        make_background(d, phi0, Field(d.node_count(), 0.0), BoundaryField(1, 2.0), 3, 1.0);
    double worst = 0.0;
    for (int i = 0; i < d.node_count(); ++i) {
      const double r = d.rc[i];
      if (r < 0.2) continue;
      const double lap = -a * pi * pi * std::cos(pi * r) - 2.0 * a * pi * std::sin(pi * r) / r;
      const double g2 = a * a * pi * pi * std::sin(pi * r) * std::sin(pi * r);
      worst = std::max(worst, std::abs(bg.Rm[i] - (2.0 * lap - 2.0 * g2)));
    }
    return worst;
  };
  const double e1 = cache_err(101), e2 = cache_err(201);
  REQUIRE(e1 < 0.05);
  REQUIRE(e1 / e2 > 3.3);
  REQUIRE(e1 / e2 < 4.7);
}

TEST_CASE("m = 0 reduces the weighted curvatures to the Riemannian data") {
  const DiscreteDomain d = build_radial_ball_domain(31, 3, 0.0);
  const Field R0 = grid_field(d, [](double r, double) { return 2.0 - r * r; });
  const SmmsBackground bg =
      make_background(d, Field(d.node_count(), 0.0), R0, BoundaryField(1, 2.0), 3, 0.0);
  REQUIRE(max_abs_diff(bg.Rm, R0) == 0.0);
  REQUIRE(bg.Hm[0] == 2.0);
}

TEST_CASE("covariant operators act on constants through the cached curvatures") {
  const DiscreteDomain d = build_interval_domain(41, 1.0, 4, 1.5);
  const Field phi0 = grid_field(d, [](double x, double) { return 0.3 * std::cos(pi * x); });
  const Field R0 = grid_field(d, [](double x, double) { return std::sin(2.0 * x); });
  const SmmsBackground bg = make_background(d, phi0, R0, BoundaryField{0.4, -0.9}, 4, 1.5);

  const Field a(bg.node_count(), 1.3);
  const Field La = apply_L(bg, a);
  const BoundaryField Ba = apply_B(bg, a);
  const Field Lba = apply_Lbar(bg, a);
  const BoundaryField Bba = apply_Bbar(bg, a);
  const double inv = 1.0 / (4.0 + 1.5 - 1.0);
  for (int i = 0; i < bg.node_count(); ++i) {
    REQUIRE(std::abs(La[i] - 1.3 * bg.Rm[i]) < 1e-11);
    REQUIRE(std::abs(Lba[i] + inv * 1.3 * bg.Rm[i]) < 1e-11);
  }
  for (int k = 0; k < bg.boundary_count(); ++k) {
    REQUIRE(std::abs(Ba[k] - 1.3 * bg.Hm[k]) < 1e-11);
    REQUIRE(std::abs(Bba[k] + inv * 1.3 * bg.Hm[k]) < 1e-11);
  }
}

TEST_CASE("conformal change: identity factor and constant scaling laws") {
  const DiscreteDomain d = build_radial_ball_domain(51, 3, 1.0);
  const Field phi0 = grid_field(d, [](double r, double) { return 0.2 * std::cos(pi * r); });
  const Field R0 = grid_field(d, [](double r, double) { return 1.0 + r * r; });
  const SmmsBackground bg = make_background(d, phi0, R0, BoundaryField(1, 2.0), 3, 1.0);
  const double k = bg.cs.k;

  const ConformalData id = conformal_transform(bg, Field(bg.node_count(), 1.0));
  REQUIRE(max_abs_diff(id.R_new, bg.Rm) < 1e-12);
  REQUIRE(max_abs_diff(id.H_new, bg.Hm) < 1e-12);
  REQUIRE(max_abs_diff(id.phi_new, bg.phi0) < 1e-15);
  for (double v : id.vol_weight) REQUIRE(v == 1.0);
  for (double v : id.area_weight) REQUIRE(v == 1.0);

  const double c0 = 1.7;
  const ConformalData sc = conformal_transform(bg, Field(bg.node_count(), c0));
  for (int i = 0; i < bg.node_count(); ++i) {
    REQUIRE(std::abs(sc.R_new[i] - std::pow(c0, -4.0 / k) * bg.Rm[i]) < 1e-12);
    REQUIRE(std::abs(sc.vol_weight[i] - std::pow(c0, bg.cs.vol_exp)) < 1e-12);
    REQUIRE(std::abs(sc.phi_new[i] - (bg.phi0[i] - (2.0 * bg.cs.m / k) * std::log(c0))) <
            1e-13);
  }
  for (int b = 0; b < bg.boundary_count(); ++b)
    REQUIRE(std::abs(sc.H_new[b] - std::pow(c0, -2.0 / k) * bg.Hm[b]) < 1e-12);

  REQUIRE_THROWS_AS(conformal_transform(bg, Field(bg.node_count(), -1.0)), positivity_error);
}

TEST_CASE("transformation law agrees with the direct deformed curvatures") {
  const auto law_gap = [](int nodes) {
    const DiscreteDomain d = build_interval_domain(nodes, 1.0, 3, 2.0);
    const Field phi0 = grid_field(d, [](double x, double) { return 0.1 * std::cos(pi * x); });
    const Field R0 = grid_field(d, [](double x, double) { return 0.5 + std::cos(2.0 * pi * x); });
    const SmmsBackground bg = make_background(d, phi0, R0, BoundaryField{0.2, -0.4}, 3, 2.0);
    const Field w = grid_field(d, [](double x, double) { return 1.0 + 0.1 * std::cos(pi * x); });
    const ConformalData via_ops = conformal_transform(bg, w);
    const CurvaturePair direct = deformed_curvatures_direct(bg, w);
    return std::max(max_abs_diff(via_ops.R_new, direct.R),
                    max_abs_diff(via_ops.H_new, direct.H));
  };
  const double e1 = law_gap(101), e2 = law_gap(201);
  REQUIRE(e1 < 5e-3);
  REQUIRE(e1 / e2 > 3.3);
  REQUIRE(e1 / e2 < 4.7);
}

TEST_CASE("w == 1 solves the constant-curvature system identically") {
  const DiscreteDomain d = build_radial_ball_domain(41, 3, 1.0);
  const Field phi0 = grid_field(d, [](double r, double) { return 0.3 * std::cos(pi * r); });
  const Field R0 = grid_field(d, [](double r, double) { return 2.0 * r; });
  const SmmsBackground bg = make_background(d, phi0, R0, BoundaryField(1, -1.0), 3, 1.0);

  const ResidualPair res = yamabe_residual(bg, Field(bg.node_count(), 1.0));
  REQUIRE(residual_norm(bg, res) < 1e-13);
  for (double v : res.interior) REQUIRE(std::abs(v) < 1e-13);

  REQUIRE_THROWS_AS(yamabe_residual(bg, Field(bg.node_count(), 0.0)), positivity_error);
}

TEST_CASE("residual norm reads boundary rows from the boundary equation only") {
  const DiscreteDomain d = build_interval_domain(11, 1.0, 3, 0.0);
  const SmmsBackground bg = make_background(d);
  ResidualPair r;
  r.interior.assign(bg.node_count(), 0.0);
  r.boundary.assign(2, 0.0);
  r.interior[0] = 100.0;  // trace node: interior row is replaced there
  r.interior[5] = 0.25;
  r.boundary[1] = 0.5;
  REQUIRE(residual_norm(bg, r) == 0.5);
}

TEST_CASE("weighted measures integrate e^{-phi0}") {
  const DiscreteDomain d = build_interval_domain(101, 1.0, 3, 1.0);
  const Field phi0 = grid_field(d, [](double x, double) { return std::log(1.0 + x); });
  const SmmsBackground bg =
      make_background(d, phi0, Field(d.node_count(), 0.0), BoundaryField(2, 0.0), 3, 1.0);
  REQUIRE(std::abs(weighted_volume(bg) - std::log(2.0)) < 1e-5);
  REQUIRE(std::abs(weighted_boundary_area(bg) - 1.5) < 1e-14);
}
