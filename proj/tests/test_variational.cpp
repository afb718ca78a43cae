#include <catch2/catch_amalgamated.hpp>

#include <smmslab/rng.hpp>
#include <smmslab/variational.hpp>

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

SmmsBackground flat_unit_ball(int nodes) {
  const DiscreteDomain d = build_radial_ball_domain(nodes, 3, 0.0);
  return make_background(d, Field(d.node_count(), 0.0), Field(d.node_count(), 0.0),
                         BoundaryField(1, 2.0), 3, 0.0);
}
}  // namespace

TEST_CASE("sphere areas and sharp trace constants from the gamma function") {
  REQUIRE(std::abs(std::exp(log_unit_sphere_area(0.0)) - 2.0) < 1e-14);
  REQUIRE(std::abs(std::exp(log_unit_sphere_area(1.0)) - 2.0 * pi) < 1e-13);
  REQUIRE(std::abs(std::exp(log_unit_sphere_area(2.0)) - 4.0 * pi) < 1e-13);

  REQUIRE(std::abs(lambda_mn(0.0, 3) - std::sqrt(pi)) < 1e-13);

  // Two independent closed forms of the (m, n) = (1, 3) constant.
  const double l13 = lambda_mn(1.0, 3);
  REQUIRE(std::abs(l13 - (2.0 / 3.0) * std::cbrt(4.0 * pi / 3.0)) < 1e-14);
  REQUIRE(std::abs(l13 - 4.0 * std::cbrt(pi / 162.0)) < 1e-14);

  REQUIRE(std::abs(lambda_mn(2.0, 4) - 1.236306598700129) < 1e-12);
  REQUIRE(std::abs(lambda_mn(0.5, 5) - 2.696503068684652) < 1e-12);

  REQUIRE_THROWS_AS(lambda_mn(-0.1, 3), invalid_input_error);
  REQUIRE_THROWS_AS(lambda_mn(1.0, 2), invalid_input_error);
}

TEST_CASE("extremal profile: exact scaling and symmetry about its center") {
  for (const auto& [m, n] : {std::pair<double, int>{1.0, 3}, {2.0, 4}}) {
    const double expn = 0.5 * (m + n - 2.0);
    const GnsExtremal w1 = gns_extremal(1.0, 0.0, m, n);
    for (double eps : {0.5, 2.0}) {
      const GnsExtremal we = gns_extremal(eps, 0.0, m, n);
      for (double r = 0.0; r <= 3.0; r += 0.37)
        for (double t = 0.0; t <= 3.0; t += 0.41) {
          const double lhs = std::pow(eps, expn) * we(eps * r, eps * t);
          const double rhs = w1(r, t);
          REQUIRE(std::abs(lhs - rhs) < 1e-12 * rhs);
        }
    }
  }

  const GnsExtremal off = gns_extremal(1.0, 2.0, 1.0, 3);
  for (double s : {0.3, 1.1, 1.9})
    REQUIRE(std::abs(off(2.0 + s, 0.7) - off(2.0 - s, 0.7)) < 1e-14);

  REQUIRE_THROWS_AS(gns_extremal(0.0, 0.0, 1.0, 3), invalid_input_error);
}

TEST_CASE("truncation tail follows the far-field decay rate") {
  // (R/eps)^{-(n+2m-2)}; doubling the radius divides the tail by 2^{n+2m-2}.
  REQUIRE(std::abs(gns_truncation_tail(1.0, 3, 1.0, 10.0) - 1e-3) < 1e-16);
  for (const auto& [m, n] : {std::pair<double, int>{1.0, 3}, {0.5, 5}, {2.0, 4}}) {
    const double rate = std::pow(2.0, -(n + 2.0 * m - 2.0));
    const double r1 = gns_truncation_tail(m, n, 0.7, 11.0);
    const double r2 = gns_truncation_tail(m, n, 0.7, 22.0);
    REQUIRE(std::abs(r2 / r1 - rate) < 1e-12);
    REQUIRE(r2 < r1);
  }
  REQUIRE_THROWS_AS(gns_truncation_tail(1.0, 3, 0.0, 1.0), invalid_input_error);
  REQUIRE_THROWS_AS(gns_truncation_tail(1.0, 3, 1.0, -2.0), invalid_input_error);
}

TEST_CASE("trace quotient: scale invariance and input guards") {
  const DiscreteDomain d = build_halfspace_cylinder_domain(41, 41, 8.0, 8.0, 3, 1.0);
  Rng rng(777);
  for (int trial = 0; trial < 20; ++trial) {
    Field w(d.node_count());
    const double a1 = rng.uniform(-0.4, 0.4), a2 = rng.uniform(-0.2, 0.2);
    for (int i = 0; i < d.node_count(); ++i) {
      const double x = d.coord_r(i) / d.extent_r, y = d.coord_t(i) / d.extent_t;
      w[i] = 1.0 + a1 * std::cos(pi * x) + a2 * std::cos(pi * y);
    }
    const double c = rng.uniform(0.1, 7.0);
    Field cw = w;
    for (double& v : cw) v *= c;
    const double q0 = trace_gns_quotient(d, w, 1.0, 3);
    const double q1 = trace_gns_quotient(d, cw, 1.0, 3);
    REQUIRE(std::abs(q1 - q0) < 1e-10 * q0);
  }

  const DiscreteDomain interval = build_interval_domain(11, 1.0, 3, 1.0);
  REQUIRE_THROWS_AS(trace_gns_quotient(interval, Field(11, 1.0), 1.0, 3),
                    invalid_input_error);
  const Field vanishing = grid_field(d, [](double, double t) { return t; });
  REQUIRE_THROWS_AS(trace_gns_quotient(d, vanishing, 1.0, 3), invalid_input_error);
  REQUIRE_THROWS_AS(trace_gns_quotient(d, Field(3, 1.0), 1.0, 3), invalid_input_error);
}

TEST_CASE("truncated extremal sits a few percent above the sharp constant") {
  const DiscreteDomain d = build_halfspace_cylinder_domain(51, 51, 10.0, 10.0, 3, 1.0);
  const GnsExtremal bubble = gns_extremal(1.0, 0.0, 1.0, 3);
  const Field w = grid_field(d, [&](double r, double t) { return bubble(r, t); });
  const double q = trace_gns_quotient(d, w, 1.0, 3);
  const double lam = lambda_mn(1.0, 3);
  REQUIRE(q > 0.99 * lam);
  REQUIRE(q < 1.03 * lam);
}

TEST_CASE("flat unit ball: constants are exact and w == 1 is discretely critical") {
  const SmmsBackground bg = flat_unit_ball(101);
  const Field one(bg.node_count(), 1.0);

  const double A = escobar_A(bg, one);
  const double B = escobar_B(bg, one);
  REQUIRE(std::abs(A - 2.0 * pi) < 1e-12);
  REQUIRE(std::abs(B - 1.0 / std::sqrt(4.0 * pi)) < 1e-15);
  REQUIRE(std::abs(escobar_quotient(bg, one) - std::sqrt(pi)) < 1e-12);

  const ElResidual res = el_residual(bg, one, std::sqrt(pi));
  for (double v : res.interior) REQUIRE(std::abs(v) < 1e-10);
  for (double v : res.boundary) REQUIRE(std::abs(v) < 1e-10);

  const QuotientReport rep = quotient_report(bg, one, "unit");
  REQUIRE(rep.trial_id == "unit");
  REQUIRE(std::abs(rep.Q_value - rep.A_value * rep.B_value) < 1e-15);
  REQUIRE(rep.el_interior_residual < 1e-10);
  REQUIRE(rep.el_boundary_residual < 1e-10);
}

TEST_CASE("quadratic form matrix reproduces the energy; B scales like c^-2") {
  const DiscreteDomain d = build_interval_domain(101, 1.0, 3, 2.0);
  const Field phi0 = grid_field(d, [](double x, double) { return 0.3 * std::cos(pi * x); });
  const Field R0 = grid_field(d, [](double x, double) { return 1.0 + 0.5 * std::cos(2.0 * pi * x); });
  const SmmsBackground bg = make_background(d, phi0, R0, BoundaryField{0.3, -0.2}, 3, 2.0);

  const CsrMatrix K = escobar_form_matrix(bg);
  Rng rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    Field w(bg.node_count());
    for (double& x : w) x = 1.0 + rng.uniform(-0.5, 0.5);
    const Vec Kw = K.multiply(w);
    double quad = 0.0;
    for (int i = 0; i < bg.node_count(); ++i) quad += w[i] * Kw[i];
    const double A = escobar_A(bg, w);
    REQUIRE(std::abs(A - quad) < 1e-12 * (1.0 + std::abs(A)));

    const double c = rng.uniform(0.2, 5.0);
    Field cw = w;
    for (double& x : cw) x *= c;
    REQUIRE(std::abs(escobar_B(bg, cw) - escobar_B(bg, w) / (c * c)) <
            1e-12 * escobar_B(bg, w));
    REQUIRE(std::abs(escobar_quotient(bg, cw) - escobar_quotient(bg, w)) <
            1e-10 * (1.0 + std::abs(escobar_quotient(bg, w))));
  }

  REQUIRE_THROWS_AS(escobar_A(bg, Field(3, 1.0)), invalid_input_error);
  REQUIRE_THROWS_AS(escobar_B(bg, Field(3, 1.0)), invalid_input_error);
}

TEST_CASE("quotient gradient agrees with central finite differences") {
  const DiscreteDomain d = build_interval_domain(61, 1.0, 3, 2.0);
  const Field phi0 = grid_field(d, [](double x, double) { return 0.3 * std::cos(pi * x); });
  const Field R0 =
      grid_field(d, [](double x, double) { return 1.0 + 0.5 * std::cos(2.0 * pi * x); });
  const SmmsBackground bg = make_background(d, phi0, R0, BoundaryField{0.3, -0.2}, 3, 2.0);
  const Field w =
      grid_field(d, [](double x, double) { return 1.0 + 0.1 * std::cos(pi * x) + 0.02 * x; });

  const CsrMatrix K = escobar_form_matrix(bg);
  const detail::PNormData pn = detail::escobar_pnorms(bg, w);
  const double B = escobar_B(bg, w);
  const double Q = escobar_quotient(bg, w);
  const Vec g = detail::escobar_gradient(bg, K, w, B, Q, pn);
  const double gmax = detail::max_abs(g);

  double worst = 0.0;
  for (int i = 0; i < bg.node_count(); ++i) {
    const double step = 1e-6 * std::max(1.0, std::abs(w[i]));
    Field wp = w, wm = w;
    wp[i] += step;
    wm[i] -= step;
    const double fd = (escobar_quotient(bg, wp) - escobar_quotient(bg, wm)) / (2.0 * step);
    worst = std::max(worst, std::abs(fd - g[i]));
  }
  REQUIRE(worst < 1e-5 * (1.0 + gmax));
}

TEST_CASE("projected descent reaches the sharp constant on the flat ball") {
  const SmmsBackground bg = flat_unit_ball(51);
  Field w0(bg.node_count());
  for (int i = 0; i < bg.node_count(); ++i)
    w0[i] = 1.0 + 0.1 * std::cos(pi * bg.domain.rc[i]);

  const MinimizeResult mr = minimize_escobar(bg, ConformalFactor(w0), 1e-6, 40000);
  REQUIRE(mr.converged);
  REQUIRE_FALSE(mr.stalled);
  REQUIRE_FALSE(mr.floor_was_active);
  REQUIRE(mr.Lambda_estimate <= std::sqrt(pi) * 1.02);
  REQUIRE(mr.report.el_interior_residual <= 1e-6);
  REQUIRE(mr.report.el_boundary_residual <= 1e-6);
  for (std::size_t k = 1; k < mr.q_history.size(); ++k)
    REQUIRE(mr.q_history[k] <= mr.q_history[k - 1] + 1e-12);

  REQUIRE_THROWS_AS(minimize_escobar(bg, ConformalFactor(w0), -1.0, 10), invalid_input_error);
  REQUIRE_THROWS_AS(minimize_escobar(bg, ConformalFactor(w0), 1e-6, 0), invalid_input_error);
  REQUIRE_THROWS_AS(minimize_escobar(bg, ConformalFactor(Field(3, 1.0)), 1e-6, 10),
                    invalid_input_error);
}

TEST_CASE("lower-bound constant estimator: oracle trial, ordering, determinism") {
  const DiscreteDomain d = build_halfspace_cylinder_domain(31, 31, 6.0, 6.0, 3, 1.0);
  const double m = 1.0;
  const int n = 3;

  // Constant trial: no gradient term, p = 3, a = 1/3, b = 1, so the required
  // constant is S_p / (V_p^{1/3} (V_2 + S_2)) with plain cylinder measures.
  const double R = d.extent_r, T = d.extent_t;
  const double trp = pi * R * R, volp = pi * R * R * T;
  const double expected = trp / (std::pow(volp, 1.0 / 3.0) * (volp + trp));
  const AubinReport single =
      estimate_aubin_constant(d, m, n, 0.5, {{"const", Field(d.node_count(), 1.0)}});
  REQUIRE(single.trials.size() == 1);
  REQUIRE(std::abs(single.C_estimate - expected) < 1e-12);
  REQUIRE(std::abs(single.lambda - lambda_mn(m, n)) < 1e-15);

  const std::vector<AubinTrial> fam = make_aubin_trial_family(d, m, n);
  REQUIRE(fam.size() == 8);
  REQUIRE(fam[0].name == "v1-const");
  REQUIRE(fam[1].name == "v1-bubble-0.5");
  REQUIRE(fam[4].name == "v1-bubble-4.0");
  REQUIRE(fam[7].name == "v1-bump-2");
  const std::vector<AubinTrial> fam2 = make_aubin_trial_family(d, m, n);
  for (std::size_t j = 0; j < fam.size(); ++j) {
    REQUIRE(fam[j].name == fam2[j].name);
    REQUIRE(fam[j].w == fam2[j].w);
  }

  const AubinReport rep = estimate_aubin_constant(d, m, n, 1.0, fam);
  double max_required = -1e300;
  for (const AubinTrialResult& t : rep.trials) {
    REQUIRE(t.slack >= -1e-15);
    REQUIRE(std::abs(t.slack - (rep.C_estimate - t.required_C)) < 1e-13);
    max_required = std::max(max_required, t.required_C);
  }
  REQUIRE(rep.C_estimate == max_required);

  // More gradient allowance can only lower the certified requirement.
  const AubinReport looser = estimate_aubin_constant(d, m, n, 2.0, fam);
  REQUIRE(looser.C_estimate <= rep.C_estimate + 1e-14);

  REQUIRE_THROWS_AS(estimate_aubin_constant(d, m, n, 0.0, fam), invalid_input_error);
  REQUIRE_THROWS_AS(estimate_aubin_constant(d, m, n, 1.0, {}), invalid_input_error);
  REQUIRE_THROWS_AS(estimate_aubin_constant(d, m, n, 1.0, {{"bad", Field(3, 1.0)}}),
                    invalid_input_error);
}
