#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "crowdscale/macro.hpp"
#include "crowdscale/wasserstein.hpp"

using namespace crowdscale;

namespace {

KernelProfile<1> zero_profile() {
  KernelProfile<1> p;
  p.name = "zero";
  p.support_radius = 1.0;
  p.lipschitz_const = 0.0;
  p.evaluator = [](const Vec<1>&) { return vec1(0.0); };
  p.deriv1d = [](double) { return 0.0; };
  return p;
}

double grid_mass(const GridDensity1D& g) { return total_mass(g); }

}  // namespace

TEST_CASE("measure velocity") {
  const ScaledKernel<1> fig3{profile_fig3()};
  const auto vd = DesiredVelocity<1>::constant(vec1(1.0));

  SECTION("uniform density: v = v_d - (N/L) int K") {
    // N = 4, L = 2: 1 - 2 * (2/15) = 11/15
    const auto g = uniform_grid(4.0, 2.0, 2000);
    const double v = macro_velocity(CrowdMeasure<1>{g}, vec1(0.77), vd, fig3)[0];
    CHECK_THAT(v, Catch::Matchers::WithinAbs(11.0 / 15.0, 1e-5));
    // quadrature route for the same quantity
    CHECK_THAT(uniform_equilibrium_speed(4, 2.0, 1.0, fig3),
               Catch::Matchers::WithinAbs(11.0 / 15.0, 1e-10));
  }

  SECTION("outside the sensory reach of the crowd") {
    AtomicMeasure<1> atoms;
    atoms.positions = {vec1(0.0), vec1(0.25)};
    CHECK(macro_velocity(CrowdMeasure<1>{atoms}, vec1(5.0), vd, fig3,
                         Domain<1>::free())[0] == 1.0);
    const auto bumps = make_bumps(atoms, 0.05, bump_profile("indicator"));
    CHECK(macro_velocity(CrowdMeasure<1>{bumps}, vec1(5.0), vd, fig3,
                         Domain<1>::free())[0] == 1.0);
  }

  SECTION("atomic measures specialize to the particle velocity bit for bit") {
    const auto dom = Domain<1>::periodic(2.0);
    const auto s = lattice_state(5, 2.0);
    AtomicMeasure<1> atoms{s.positions};
    for (int i = 0; i < 5; ++i)
      CHECK(macro_velocity(CrowdMeasure<1>{atoms}, s.positions[i], vd, fig3,
                           dom)[0] == micro_velocity(s, i, vd, fig3, dom)[0]);
  }

  SECTION("bump quadrature approaches the atomic value as r shrinks") {
    AtomicMeasure<1> atoms;
    atoms.positions = {vec1(0.4), vec1(0.9)};
    const auto bumps = make_bumps(atoms, 1e-4, bump_profile("indicator"));
    const double va =
        macro_velocity(CrowdMeasure<1>{atoms}, vec1(0.1), vd, fig3)[0];
    const double vb = macro_velocity(CrowdMeasure<1>{bumps}, vec1(0.1), vd,
                                     fig3, Domain<1>::free(), 16)[0];
    CHECK_THAT(vb, Catch::Matchers::WithinAbs(va, 1e-6));
    CHECK_THROWS_AS(macro_velocity(CrowdMeasure<1>{bumps}, vec1(0.1), vd, fig3,
                                   Domain<1>::free(), 0),
                    std::invalid_argument);
  }
}

TEST_CASE("characteristics solver") {
  SECTION("free transport: every point translates by c t") {
    const ScaledKernel<1> none{zero_profile()};
    AtomicMeasure<1> one;
    one.positions = {vec1(0.5)};
    const auto bumps = make_bumps(one, 0.25, bump_profile("indicator"));
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.t_final = 1.0;
    cfg.points_per_bump = 12;
    const auto vd = DesiredVelocity<1>::constant(vec1(0.7));
    const auto traj =
        integrate_characteristics(bumps, vd, none, Domain<1>::free(), cfg);
    REQUIRE_FALSE(traj.aborted);
    const auto& start = traj.snapshots.front().cloud;
    const auto& end = traj.final_state().cloud;
    for (std::size_t i = 0; i < end.points.size(); ++i)
      CHECK_THAT(end.points[i][0],
                 Catch::Matchers::WithinAbs(start.points[i][0] + 0.7, 1e-12));
  }

  SECTION("single repulsive bump spreads symmetrically") {
    const ScaledKernel<1> tent{profile_tent<1>(1.0)};
    AtomicMeasure<1> one;
    one.positions = {vec1(0.0)};
    const auto bumps = make_bumps(one, 0.25, bump_profile("cosine"));
    SimConfig cfg;
    cfg.dt = 0.005;
    cfg.t_final = 1.0;
    cfg.points_per_bump = 24;
    const auto traj = integrate_characteristics(
        bumps, DesiredVelocity<1>::zero(), tent, Domain<1>::free(), cfg);
    REQUIRE_FALSE(traj.aborted);
    auto com = [](const QuadratureCloud<1>& c) {
      KahanSum s;
      for (std::size_t i = 0; i < c.points.size(); ++i)
        s.add(c.weights[i] * c.points[i][0]);
      return s.value();
    };
    CHECK(std::abs(com(traj.final_state().cloud)) <= 1e-8);
    // spreading: the spatial extent grows
    auto extent = [](const QuadratureCloud<1>& c) {
      double lo = 1e300, hi = -1e300;
      for (const auto& p : c.points) {
        lo = std::min(lo, p[0]);
        hi = std::max(hi, p[0]);
      }
      return hi - lo;
    };
    CHECK(extent(traj.final_state().cloud) >
          extent(traj.snapshots.front().cloud));
  }

  SECTION("resolution refinement converges in W1") {
    const ScaledKernel<1> k(profile_fig5());
    AtomicMeasure<1> one;
    one.positions = {vec1(0.0)};
    const auto bumps = make_bumps(one, 0.3, bump_profile("cosine"));
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.t_final = 0.5;
    const auto vd = DesiredVelocity<1>::constant(vec1(0.2));
    auto terminal = [&](int ppb) {
      SimConfig c = cfg;
      c.points_per_bump = ppb;
      return integrate_characteristics(bumps, vd, k, Domain<1>::free(), c)
          .final_state()
          .cloud;
    };
    const auto finest = terminal(64);
    auto dist = [&](int ppb) {
      const auto c = terminal(ppb);
      return w1_lp_oracle(c.points, c.weights, finest.points, finest.weights)
          .value;
    };
    const double d4 = dist(4), d8 = dist(8), d16 = dist(16);
    CHECK(d4 >= d8);
    CHECK(d8 >= d16);
    CHECK(d4 > d16);
  }

  SECTION("non-Lipschitz kernels are rejected") {
    AtomicMeasure<1> one;
    one.positions = {vec1(0.0)};
    const auto bumps = make_bumps(one, 0.1, bump_profile("indicator"));
    SimConfig cfg;
    cfg.t_final = 0.1;
    CHECK_THROWS_AS(
        integrate_characteristics(bumps, DesiredVelocity<1>::zero(),
                                  ScaledKernel<1>{profile_fig3()},
                                  Domain<1>::free(), cfg),
        std::invalid_argument);
  }
}

TEST_CASE("finite volume solver") {
  const auto vd = DesiredVelocity<1>::constant(vec1(1.0));

  SECTION("uniform density is a machine-level steady state") {
    const ScaledKernel<1> fig3{profile_fig3()};
    SimConfig cfg;
    cfg.t_final = 1.0;
    cfg.snapshot_stride = 25;
    const FVState s0{0.0, uniform_grid(4.0, 2.0, 100)};
    const auto traj = integrate_fv(s0, vd, fig3, cfg);
    REQUIRE_FALSE(traj.aborted);
    for (const auto& snap : traj.snapshots)
      for (double rho : snap.grid.cell_averages)
        CHECK_THAT(rho, Catch::Matchers::WithinAbs(2.0, 1e-12));
  }

  SECTION("pure advection converges at first order") {
    const ScaledKernel<1> none{zero_profile()};
    AtomicMeasure<1> one;
    one.positions = {vec1(0.6)};
    const auto bumps = make_bumps(one, 0.2, bump_profile("cosine"));
    const double t_final = 0.5;
    auto l1_error = [&](int cells) {
      SimConfig cfg;
      cfg.t_final = t_final;
      cfg.snapshot_stride = 1 << 20;
      const FVState s0{0.0, grid_from_bumps(bumps, 2.0, cells)};
      const auto traj = integrate_fv(s0, vd, none, cfg);
      REQUIRE_FALSE(traj.aborted);
      auto shifted = bumps;
      shifted.centers[0][0] += t_final;  // exact solution of the advection
      const auto exact = grid_from_bumps(shifted, 2.0, cells);
      double err = 0.0;
      const auto& got = traj.final_state().grid;
      for (int i = 0; i < cells; ++i)
        err += std::abs(got.cell_averages[i] - exact.cell_averages[i]) *
               got.dx();
      return err;
    };
    const double e100 = l1_error(100);
    const double e200 = l1_error(200);
    const double e400 = l1_error(400);
    CHECK(e100 / e200 > 1.4);
    CHECK(e200 / e400 > 1.4);
    CHECK(e400 < 0.05);
  }

  SECTION("mass is conserved to rounding at every snapshot") {
    const ScaledKernel<1> fig5{profile_fig5()};
    AtomicMeasure<1> two;
    two.positions = {vec1(0.7), vec1(1.2)};
    const auto bumps = make_bumps(two, 0.2, bump_profile("cosine"));
    SimConfig cfg;
    cfg.t_final = 0.5;
    cfg.snapshot_stride = 10;
    const FVState s0{0.0, grid_from_bumps(bumps, 3.0, 300)};
    const double mass0 = grid_mass(s0.grid);
    const auto traj = integrate_fv(s0, vd, fig5, cfg);
    REQUIRE_FALSE(traj.aborted);
    for (const auto& snap : traj.snapshots) {
      CHECK(relative_diff(grid_mass(snap.grid), mass0) < 1e-12);
      for (double rho : snap.grid.cell_averages) CHECK(rho > -1e-12);
    }
  }

  SECTION("oversized steps are reduced to the CFL bound and recorded") {
    const ScaledKernel<1> fig5{profile_fig5()};
    SimConfig cfg;
    cfg.dt = 10.0;
    cfg.t_final = 0.2;
    const FVState s0{0.0, uniform_grid(2.0, 2.0, 50)};
    const auto traj = integrate_fv(s0, vd, fig5, cfg);
    REQUIRE_FALSE(traj.aborted);
    CHECK(traj.cfl_reduced);
    CHECK_THAT(grid_mass(traj.final_state().grid),
               Catch::Matchers::WithinAbs(2.0, 1e-12));
  }
}

TEST_CASE("macroscopic stability spectrum") {
  const ScaledKernel<1> fig3{profile_fig3()};

  SECTION("all modes strictly damped for a stationarity-assumption kernel") {
    for (double re : macro_stability_spectrum(4, 2.0, fig3, 64))
      CHECK(re < 0.0);
  }

  SECTION("even in the mode index") {
    for (int mode : {1, 3, 7})
      CHECK(macro_mode_growth_rate(4, 2.0, mode, fig3) ==
            macro_mode_growth_rate(4, 2.0, -mode, fig3));
  }

  SECTION("zero kernel: neutral modes") {
    const ScaledKernel<1> none{zero_profile()};
    for (double re : macro_stability_spectrum(4, 2.0, none, 8))
      CHECK(re == 0.0);
  }
}

TEST_CASE("uniform equilibrium speed edge cases") {
  const ScaledKernel<1> fig5{profile_fig5()};
  CHECK(uniform_equilibrium_speed(0, 2.0, 1.0, fig5) == 1.0);
  // N = L: v_d - int_0^1 z(1-z)/2 dz = v_d - 1/12
  CHECK_THAT(uniform_equilibrium_speed(2, 2.0, 1.0, fig5),
             Catch::Matchers::WithinAbs(1.0 - 1.0 / 12.0, 1e-10));
}

TEST_CASE("grid construction from bumps") {
  AtomicMeasure<1> two;
  two.positions = {vec1(0.7), vec1(1.3)};
  const auto bumps = make_bumps(two, 0.25, bump_profile("cosine"));
  const auto g = grid_from_bumps(bumps, 2.0, 250);
  CHECK(relative_diff(total_mass(g), 2.0) < 1e-14);
  // cell averages track the density at cell centers
  double worst = 0.0;
  for (int i = 0; i < g.cells(); ++i)
    worst = std::max(worst, std::abs(g.cell_averages[i] -
                                     bumps.density(vec1(g.cell_center(i)))));
  CHECK(worst < 0.05);
  SECTION("supports must fit the interval") {
    CHECK_THROWS_AS(grid_from_bumps(bumps, 1.0, 100), std::invalid_argument);
  }
}
