#include <catch2/catch_amalgamated.hpp>

#include <smmslab/flow.hpp>

#include <cmath>
#include <functional>
#include <numbers>

using namespace smmslab;

namespace {
constexpr double pi = std::numbers::pi;

SmmsBackground constant_curvature_interval(int nodes, double rho, int n, double m) {
  const DiscreteDomain d = build_interval_domain(nodes, 1.0, n, m);
  return make_background(d, Field(d.node_count(), 0.0), Field(d.node_count(), rho),
                         BoundaryField{0.0, 0.0}, n, m);
}
}  // namespace

TEST_CASE("unnormalized flow from constants follows the exact power-law decay") {
  // Constant data R == rho, H == 0: the flow stays spatially constant and
  // obeys w' = -(k/4) rho w^{2-q}, solved by w(t) = (1 - rho t)^{k/4}.
  struct Case {
    int n;
    double m, rho, t_end, tol;
  };
  // The explicit stepper needs dt within the parabolic stability bound
  // ~ h^2 / (c k); 11 nodes with dt = 5e-4 leaves a comfortable margin for
  // every case below.
  for (const Case& c : {Case{3, 1.0, 2.0, 0.25, 1e-10},   // square-root decay
                        Case{3, 1.0, -1.0, 0.5, 1e-10},   // square-root growth
                        Case{4, 2.0, 1.5, 0.25, 1e-12}}) {  // k = 4: exactly linear
    const SmmsBackground bg = constant_curvature_interval(11, c.rho, c.n, c.m);
    FlowState st = make_flow_state(bg, Field(bg.node_count(), 1.0));
    const double dt = 5e-4;
    while (st.time < c.t_end - 0.5 * dt) st = step_unnormalized(st, dt);

    const double expect = std::pow(1.0 - c.rho * st.time, bg.cs.k / 4.0);
    double spread = 0.0, err = 0.0;
    for (double x : st.w.w) {
      spread = std::max(spread, std::abs(x - st.w.w[0]));
      err = std::max(err, std::abs(x - expect));
    }
    REQUIRE(spread < 1e-12);
    REQUIRE(err < c.tol);
  }
}

TEST_CASE("normalized flow is stationary at constant data") {
  const SmmsBackground bg = constant_curvature_interval(41, 2.0, 3, 1.0);
  FlowState st = make_flow_state(bg, Field(bg.node_count(), 1.0));
  const double vol0 = integrate_volume(bg.domain, bg.exp_neg_phi);
  for (int k = 0; k < 100; ++k) st = step_normalized(st, 1e-2);
  for (double x : st.w.w) REQUIRE(std::abs(x - 1.0) < 1e-13);

  double vol = 0.0;
  for (int i = 0; i < bg.node_count(); ++i)
    vol += std::pow(st.w.w[i], bg.cs.vol_exp) * bg.exp_neg_phi[i] * bg.domain.vol_w[i];
  REQUIRE(std::abs(vol - vol0) < 1e-13 * vol0);
}

TEST_CASE("energies decrease along their flows and the trace records it") {
  const DiscreteDomain d = build_interval_domain(13, 1.0, 3, 1.0);
  Field phi0(d.node_count()), w0(d.node_count());
  for (int i = 0; i < d.node_count(); ++i) {
    const double x = d.rc[i];
    phi0[i] = 0.3 * (1.0 - x * x) * (1.0 - x * x);
    w0[i] = 1.0 + 0.04 * std::cos(pi * x);
  }
  const SmmsBackground bg = make_background(d, phi0, Field(d.node_count(), 0.0),
                                            BoundaryField{0.0, 0.0}, 3, 1.0);
  const double dt = 1e-3;

  FlowState un = make_flow_state(bg, w0);
  const FlowTrace tu = run_unnormalized(un, 0.3, dt, 10);
  REQUIRE(tu.times.size() > 10);
  for (std::size_t k = 1; k < tu.energy.size(); ++k)
    REQUIRE(tu.energy[k] <= tu.energy[k - 1] + 5.0 * dt);

  FlowState no = make_flow_state(bg, w0);
  const FlowTrace tn = run_normalized(no, 0.5, dt, 10);
  for (std::size_t k = 1; k < tn.energy_normalized.size(); ++k)
    REQUIRE(tn.energy_normalized[k] <= tn.energy_normalized[k - 1] + 5.0 * dt);
  const double v0 = tn.volume.front();
  for (double v : tn.volume) REQUIRE(std::abs(v - v0) <= 1e-2 * v0);

  // Sampled trace arrays stay aligned.
  REQUIRE(tn.times.size() == tn.energy.size());
  REQUIRE(tn.times.size() == tn.volume.size());
  REQUIRE(tn.times.size() == tn.average_curvature.size());
  REQUIRE(tn.times.size() == tn.max_boundary_residual.size());
  for (std::size_t k = 0; k < tn.times.size(); ++k)
    REQUIRE(tn.min_curvature[k] <= tn.max_curvature[k]);
}

TEST_CASE("normalized flow is the volume-rescaled unnormalized flow") {
  const DiscreteDomain d = build_interval_domain(11, 1.0, 3, 1.0);
  Field w0(d.node_count());
  for (int i = 0; i < d.node_count(); ++i) w0[i] = 1.0 + 0.1 * std::cos(pi * d.rc[i]);
  const SmmsBackground bg = make_background(d, Field(d.node_count(), 0.0),
                                            Field(d.node_count(), 4.0),
                                            BoundaryField{0.0, 0.0}, 3, 1.0);

  const ReparametrizationReport coarse = reparametrization_check(bg, w0, 0.1, 1e-3);
  REQUIRE(coarse.samples_compared > 50);
  REQUIRE(coarse.overlap_t_end > 0.05);
  REQUIRE(coarse.max_deviation < 1e-3);

  // The comparison defect is dominated by time discretization: it shrinks
  // with dt.
  const ReparametrizationReport fine = reparametrization_check(bg, w0, 0.1, 5e-4);
  REQUIRE(coarse.max_deviation / fine.max_deviation > 1.8);
}

TEST_CASE("flow guards: positivity under blow-down, argument validation") {
  const SmmsBackground bg = constant_curvature_interval(21, 2.0, 3, 1.0);
  FlowState st = make_flow_state(bg, Field(bg.node_count(), 1.0));
  // w(t) = sqrt(1 - 2t) hits zero at t = 1/2, so a single step of size 0.6
  // must push an intermediate stage negative; the stepper refuses rather
  // than continuing through the sign change.
  REQUIRE_THROWS_AS(step_unnormalized(st, 0.6), step_size_error);

  FlowState ok = make_flow_state(bg, Field(bg.node_count(), 1.0));
  REQUIRE_THROWS_AS(step_unnormalized(ok, -1e-3), invalid_input_error);
  REQUIRE_THROWS_AS(step_normalized(ok, 0.0), invalid_input_error);
  REQUIRE_THROWS_AS(make_flow_state(bg, Field(3, 1.0)), invalid_input_error);
  REQUIRE_THROWS_AS(reparametrization_check(bg, Field(bg.node_count(), 1.0), -0.1, 1e-3),
                    invalid_input_error);
}

TEST_CASE("gradient soliton residuals: linear weight section and lambda sensitivity") {
  // Cartesian strip section of a formal (n, m) = (3, 1) half-space: weight
  // grows linearly along the section, potential vanishes.  Then
  // Rm == -(m+1)/m a^2 everywhere and (f, lambda) = (0, Rm) solves the
  // soliton system exactly on the grid.
  const double a = 0.3;
  const DiscreteDomain d = build_halfspace_cylinder_domain(41, 41, 2.0, 2.0, 2, 1.0);
  Field phi0(d.node_count());
  for (int i = 0; i < d.node_count(); ++i) phi0[i] = a * d.coord_r(i);
  const SmmsBackground bg =
      make_background(d, phi0, Field(d.node_count(), 0.0),
                      BoundaryField(d.boundary_nodes.size(), 0.0), 3, 1.0);
  const double lambda = -2.0 * a * a;
  for (double r : bg.Rm) REQUIRE(std::abs(r - lambda) < 1e-11);

  const Field f(d.node_count(), 0.0);
  const SolitonReport ok = check_gradient_soliton(bg, f, lambda);
  REQUIRE(ok.hessian_residual < 1e-11);
  REQUIRE(ok.coupling_residual < 1e-11);
  REQUIRE(ok.boundary_curvature_residual < 1e-11);
  REQUIRE(ok.potential_flux_residual < 1e-11);

  // Shifting lambda by delta moves every pointwise target by exactly delta.
  const double delta = 1e-3;
  const SolitonReport off = check_gradient_soliton(bg, f, lambda + delta);
  REQUIRE(std::abs(off.hessian_residual - delta) < 1e-12);
  REQUIRE(std::abs(off.coupling_residual - delta) < 1e-12);

  REQUIRE_THROWS_AS(check_gradient_soliton(bg, Field(3, 0.0), lambda), invalid_input_error);
}
