#include <catch2/catch_amalgamated.hpp>

#include <smmslab/domain.hpp>
#include <smmslab/spectral.hpp>

#include <cmath>
#include <map>
#include <numbers>
#include <utility>

using namespace smmslab;

namespace {
constexpr double pi = std::numbers::pi;

Field grid_field(const DiscreteDomain& d, double (*f)(double, double)) {
  Field u(d.node_count());
  for (int i = 0; i < d.node_count(); ++i) u[i] = f(d.coord_r(i), d.coord_t(i));
  return u;
}
}  // namespace

TEST_CASE("domain builders reject malformed requests") {
  REQUIRE_THROWS_AS(build_interval_domain(2, 1.0, 3, 0.0), invalid_domain_error);
  REQUIRE_THROWS_AS(build_interval_domain(11, 0.0, 3, 0.0), invalid_domain_error);
  REQUIRE_THROWS_AS(build_interval_domain(11, -2.0, 3, 0.0), invalid_domain_error);
  REQUIRE_THROWS_AS(build_interval_domain(11, 1.0, 2, 0.0), invalid_domain_error);
  REQUIRE_THROWS_AS(build_interval_domain(11, 1.0, 3, -0.5), invalid_domain_error);

  REQUIRE_THROWS_AS(build_radial_ball_domain(2, 3, 0.0), invalid_domain_error);
  REQUIRE_THROWS_AS(build_radial_ball_domain(11, 2, 0.0), invalid_domain_error);
  REQUIRE_THROWS_AS(build_radial_ball_domain(11, 3, -1.0), invalid_domain_error);

  REQUIRE_THROWS_AS(build_halfspace_cylinder_domain(3, 11, 1.0, 1.0, 3, 0.0),
                    invalid_domain_error);
  REQUIRE_THROWS_AS(build_halfspace_cylinder_domain(11, 3, 1.0, 1.0, 3, 0.0),
                    invalid_domain_error);
  REQUIRE_THROWS_AS(build_halfspace_cylinder_domain(11, 11, -1.0, 1.0, 3, 0.0),
                    invalid_domain_error);
  REQUIRE_THROWS_AS(build_halfspace_cylinder_domain(11, 11, 1.0, 0.0, 3, 0.0),
                    invalid_domain_error);
  REQUIRE_THROWS_AS(build_halfspace_cylinder_domain(11, 11, 1.0, 1.0, 1, 0.0),
                    invalid_domain_error);
}

TEST_CASE("interval bookkeeping and quadrature") {
  const DiscreteDomain d = build_interval_domain(101, 2.5, 3, 1.0);
  REQUIRE(d.node_count() == 101);
  REQUIRE(d.boundary_nodes.size() == 2);
  REQUIRE(d.boundary_nodes[0] == 0);
  REQUIRE(d.boundary_nodes[1] == 100);
  REQUIRE(d.faces.size() == 100);

  // dx measure: constants integrate exactly, both trace points carry weight 1.
  const Field one(d.node_count(), 1.0);
  REQUIRE(std::abs(integrate_volume(d, one) - 2.5) < 1e-13);
  REQUIRE(std::abs(integrate_boundary(d, BoundaryField(2, 1.0)) - 2.0) < 1e-15);

  // Trapezoid weights are exact on affine integrands.
  const Field lin = grid_field(d, [](double r, double) { return 3.0 * r + 1.0; });
  REQUIRE(std::abs(integrate_volume(d, lin) - (3.0 * 2.5 * 2.5 / 2.0 + 2.5)) < 1e-12);
}

TEST_CASE("ball measure carries the full spherical area factor") {
  const DiscreteDomain d = build_radial_ball_domain(101, 3, 0.0);
  REQUIRE(d.boundary_nodes.size() == 1);
  REQUIRE(d.boundary_nodes[0] == 100);
  REQUIRE(std::abs(d.extent_r - 1.0) < 1e-15);

  // Unit sphere area of S^2 sits on the single trace node.
  REQUIRE(std::abs(integrate_boundary(d, BoundaryField(1, 1.0)) - 4.0 * pi) < 1e-12);

  // Volume converges to 4pi/3 at second order.
  const auto vol_err = [](int nodes) {
    const DiscreteDomain b = build_radial_ball_domain(nodes, 3, 0.0);
    return std::abs(integrate_volume(b, Field(b.node_count(), 1.0)) - 4.0 * pi / 3.0);
  };
  const double e1 = vol_err(51), e2 = vol_err(101);
  REQUIRE(e1 < 4.0 * pi * 0.02 * 0.02);
  REQUIRE(e1 / e2 > 3.8);
  REQUIRE(e1 / e2 < 4.2);
}

TEST_CASE("cylinder measure: linear density integrates exactly, trace is the t=0 row") {
  const double R = 2.0, T = 1.5;
  const DiscreteDomain d = build_halfspace_cylinder_domain(33, 25, R, T, 3, 1.0);
  REQUIRE(static_cast<int>(d.boundary_nodes.size()) == d.nr);
  for (int i = 0; i < d.nr; ++i) {
    REQUIRE(d.boundary_nodes[i] == d.index(i, 0));
    REQUIRE(d.on_boundary[d.index(i, 0)] == 1);
    if (d.nt > 1) REQUIRE(d.on_boundary[d.index(i, 1)] == 0);
  }

  // Density 2*pi*r is affine in r, so the trapezoid weights are exact.
  const Field one(d.node_count(), 1.0);
  REQUIRE(std::abs(integrate_volume(d, one) - pi * R * R * T) < 1e-12);
  REQUIRE(std::abs(integrate_boundary(d, BoundaryField(d.nr, 1.0)) - pi * R * R) < 1e-12);
}

TEST_CASE("interval laplacian is exact on quadratics including the endpoints") {
  const DiscreteDomain d = build_interval_domain(41, 1.7, 3, 2.0);
  const Field u = grid_field(d, [](double r, double) { return 3.0 + 2.0 * r + 5.0 * r * r; });
  const Field lap = laplacian(d, u);
  for (int i = 0; i < d.node_count(); ++i) REQUIRE(std::abs(lap[i] - 10.0) < 1e-9);
}

TEST_CASE("ball laplacian of r^2: exact at axis and trace, second order in between") {
  const int n = 3;
  const DiscreteDomain d = build_radial_ball_domain(101, n, 0.0);
  const Field u = grid_field(d, [](double r, double) { return r * r; });
  const Field lap = laplacian(d, u);

  REQUIRE(std::abs(lap[0] - 2.0 * n) < 1e-10);
  REQUIRE(std::abs(lap[d.nr - 1] - 2.0 * n) < 1e-8);

  // Conservative stencil against the density r^{n-1}: pointwise defect
  // h^2/(2 r^2), so second order at any fixed radius.
  double worst = 0.0;
  for (int i = 1; i + 1 < d.nr; ++i)
    if (d.rc[i] >= 0.25) worst = std::max(worst, std::abs(lap[i] - 2.0 * n));
  REQUIRE(worst < 10.0 * d.hr * d.hr);

  const auto mid_err = [](int nodes) {
    const DiscreteDomain b = build_radial_ball_domain(nodes, 3, 0.0);
    Field v(b.node_count());
    for (int i = 0; i < b.node_count(); ++i) v[i] = b.rc[i] * b.rc[i];
    return std::abs(laplacian(b, v)[nodes / 2] - 6.0);
  };
  REQUIRE(mid_err(51) / mid_err(101) > 3.5);
  REQUIRE(mid_err(51) / mid_err(101) < 4.5);
}

TEST_CASE("cylinder laplacian is exact on r^2 + t^2 away from truncation faces") {
  const DiscreteDomain d = build_halfspace_cylinder_domain(17, 13, 2.0, 1.5, 3, 1.0);
  const Field u =
      grid_field(d, [](double r, double t) { return 5.0 + r * r + t * t + 2.0 * t; });
  const Field lap = laplacian(d, u);
  // Interior, axis, and trace rows: (1/r)(r u_r)_r + u_tt reproduces 6
  // exactly; the r = r_max / t = t_max faces use the zero-flux mirror and are
  // excluded on purpose.
  for (int j = 0; j + 1 < d.nt; ++j)
    for (int i = 0; i + 1 < d.nr; ++i)
      REQUIRE(std::abs(lap[d.index(i, j)] - 6.0) < 1e-9);
}

TEST_CASE("gradient inner product is exact for affine fields") {
  const DiscreteDomain d1 = build_interval_domain(31, 1.0, 3, 0.0);
  const Field a1 = grid_field(d1, [](double r, double) { return 1.0 + 2.0 * r; });
  const Field b1 = grid_field(d1, [](double r, double) { return 3.0 - r; });
  const Field g1 = gradient_inner(d1, a1, b1);
  for (double v : g1) REQUIRE(std::abs(v + 2.0) < 1e-12);

  const DiscreteDomain d2 = build_halfspace_cylinder_domain(13, 11, 2.0, 1.0, 3, 1.0);
  const Field a2 = grid_field(d2, [](double r, double t) { return 2.0 * r + 3.0 * t + 1.0; });
  const Field b2 = grid_field(d2, [](double r, double t) { return r - t + 4.0; });
  const Field g2 = gradient_inner(d2, a2, b2);
  for (double v : g2) REQUIRE(std::abs(v + 1.0) < 1e-12);
}

TEST_CASE("normal derivative is outward and exact on quadratics") {
  const DiscreteDomain d1 = build_interval_domain(21, 2.0, 3, 0.0);
  const Field u1 = grid_field(d1, [](double r, double) { return (r - 0.3) * (r - 0.3); });
  const BoundaryField nd1 = normal_derivative(d1, u1);
  REQUIRE(std::abs(nd1[0] - 0.6) < 1e-10);   // -u'(0)
  REQUIRE(std::abs(nd1[1] - 3.4) < 1e-10);   // +u'(2)

  const DiscreteDomain d2 = build_radial_ball_domain(51, 3, 0.0);
  const Field u2 = grid_field(d2, [](double r, double) { return r * r; });
  REQUIRE(std::abs(normal_derivative(d2, u2)[0] - 2.0) < 1e-10);

  const DiscreteDomain d3 = build_halfspace_cylinder_domain(9, 17, 1.0, 2.0, 3, 1.0);
  const Field u3 = grid_field(d3, [](double, double t) { return 3.0 * t + t * t; });
  const BoundaryField nd3 = normal_derivative(d3, u3);
  for (double v : nd3) REQUIRE(std::abs(v + 3.0) < 1e-10);  // outward normal is -t
}

TEST_CASE("weighted stiffness: symmetric, annihilates constants, Dirichlet energy") {
  const DiscreteDomain d = build_interval_domain(101, 1.0, 3, 0.0);
  const Field one(d.node_count(), 1.0);
  const std::vector<Triplet> t = assemble_weighted_stiffness(d, one);

  std::map<std::pair<int, int>, double> entries;
  std::vector<double> row_sum(d.node_count(), 0.0);
  for (const Triplet& e : t) {
    entries[{e.r, e.c}] += e.v;
    row_sum[e.r] += e.v;
  }
  for (const auto& [rc, v] : entries)
    REQUIRE(std::abs(v - entries.at({rc.second, rc.first})) < 1e-12);
  for (double s : row_sum) REQUIRE(std::abs(s) < 1e-10);

  const auto quad_form = [&](const Field& u) {
    double s = 0.0;
    for (const Triplet& e : t) s += u[e.r] * e.v * u[e.c];
    return s;
  };
  const Field x = grid_field(d, [](double r, double) { return r; });
  REQUIRE(std::abs(quad_form(x) - 1.0) < 1e-12);  // int of (x')^2 over [0,1]

  const Field x2 = grid_field(d, [](double r, double) { return r * r; });
  REQUIRE(std::abs(quad_form(x2) - 4.0 / 3.0) < 2.0 * d.hr * d.hr);

  Field wig(d.node_count());
  for (int i = 0; i < d.node_count(); ++i) wig[i] = std::cos(7.0 * i) + 0.1 * i;
  REQUIRE(quad_form(wig) >= 0.0);
}

TEST_CASE("positive mass weights only patch degenerate axis nodes") {
  const DiscreteDomain ball = build_radial_ball_domain(41, 3, 0.0);
  REQUIRE(ball.vol_w[0] == 0.0);
  const Field mw = positive_mass_weights(ball);
  REQUIRE(mw[0] > 0.0);
  for (int i = 1; i < ball.node_count(); ++i) REQUIRE(mw[i] == ball.vol_w[i]);

  const DiscreteDomain cyl = build_halfspace_cylinder_domain(9, 7, 1.0, 1.0, 3, 1.0);
  const Field mc = positive_mass_weights(cyl);
  for (int j = 0; j < cyl.nt; ++j) {
    REQUIRE(cyl.vol_w[cyl.index(0, j)] == 0.0);
    REQUIRE(mc[cyl.index(0, j)] > 0.0);
  }

  // Cartesian strips (dim_n = 2) have unit density: nothing to patch.
  const DiscreteDomain strip = build_halfspace_cylinder_domain(9, 7, 1.0, 1.0, 2, 1.0);
  const Field ms = positive_mass_weights(strip);
  for (int i = 0; i < strip.node_count(); ++i) REQUIRE(ms[i] == strip.vol_w[i]);
}
