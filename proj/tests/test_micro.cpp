#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstring>

#include "crowdscale/micro.hpp"

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

/// Eigenvalues of the explicitly assembled circulant linearization matrix
/// A[i][i+h mod N] = -K'(h L / N), A[i][i] = sum_h K'(h L / N): independent
/// route to the mode growth rates.
std::vector<double> circulant_spectrum_re(int n, double length,
                                          const ScaledKernel<1>& k) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int h = 1; h < n; ++h) {
    const double kp = k.deriv1d(h * length / n);
    for (int i = 0; i < n; ++i) {
      a(i, (i + h) % n) -= kp;
      a(i, i) += kp;
    }
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(a);
  std::vector<double> re;
  for (int i = 0; i < n; ++i) re.push_back(solver.eigenvalues()[i].real());
  std::sort(re.begin(), re.end());
  return re;
}

}  // namespace

TEST_CASE("microscopic velocity") {
  const ScaledKernel<1> fig3{profile_fig3()};
  const auto dom = Domain<1>::periodic(2.0);
  const auto vd = DesiredVelocity<1>::constant(vec1(1.0));

  SECTION("equispaced crowd of four on [0, 2)") {
    // every agent sees gaps 0.5, 1, 1.5 (and its own K(0) = 0):
    // v = 1 - (K(0.5) + K(1) + K(1.5)) = 1 - 0.15 = 0.85
    const auto s = lattice_state(4, 2.0);
    for (int i = 0; i < 4; ++i)
      CHECK_THAT(micro_velocity(s, i, vd, fig3, dom)[0],
                 Catch::Matchers::WithinAbs(0.85, 1e-15));
  }

  SECTION("a single agent keeps its desired velocity") {
    MicroState<1> s{0.0, {vec1(0.3)}};
    CHECK(micro_velocity(s, 0, vd, fig3, dom)[0] == 1.0);
  }

  SECTION("agents outside each other's sensory region") {
    MicroState<1> s{0.0, {vec1(0.0), vec1(5.0)}};
    const auto free = Domain<1>::free();
    CHECK(micro_velocity(s, 0, vd, fig3, free)[0] == 1.0);
    CHECK(micro_velocity(s, 1, vd, fig3, free)[0] == 1.0);
  }

  SECTION("periodic forward gap picks up agents behind the seam") {
    MicroState<1> s{0.0, {vec1(1.9), vec1(0.4)}};  // forward gap 0.5
    CHECK_THAT(micro_velocity(s, 0, vd, fig3, dom)[0],
               Catch::Matchers::WithinAbs(1.0 - 0.15, 1e-15));
  }

  SECTION("ill-posed support on a periodic domain") {
    const ScaledKernel<1> wide(profile_fig5(), 0.0, 1.0, 4);  // support 4 >= 2
    MicroState<1> s{0.0, {vec1(0.0)}};
    CHECK_THROWS_AS(micro_velocity(s, 0, vd, wide, dom),
                    std::invalid_argument);
  }
}

TEST_CASE("lattice equilibrium speed") {
  const ScaledKernel<1> fig3{profile_fig3()};
  CHECK_THAT(lattice_equilibrium_speed(4, 2.0, 1.0, fig3),
             Catch::Matchers::WithinAbs(0.85, 1e-15));
  CHECK(lattice_equilibrium_speed(1, 2.0, 1.0, fig3) == 1.0);
  // all sum arguments outside the support: h L / N = 2, 4, ... > R = 1
  CHECK(lattice_equilibrium_speed(2, 4.0, 1.0, fig3) == 1.0);
}

TEST_CASE("integrating the particle system") {
  const ScaledKernel<1> fig3{profile_fig3()};
  const auto dom = Domain<1>::periodic(2.0);
  const auto vd = DesiredVelocity<1>::constant(vec1(1.0));

  SECTION("the equispaced lattice travels rigidly at speed w") {
    const int n = 4;
    SimConfig cfg;
    cfg.dt = 0.005;
    cfg.t_final = 1.0;
    cfg.snapshot_stride = 50;
    const auto traj = integrate_micro(lattice_state(n, 2.0), vd, fig3, dom, cfg);
    REQUIRE_FALSE(traj.aborted);
    const double w = lattice_equilibrium_speed(n, 2.0, 1.0, fig3);
    CHECK(w == 0.85);
    for (int i = 0; i < n; ++i) {
      const double expected = std::fmod(i * 0.5 + w * 1.0, 2.0);
      CHECK_THAT(traj.final_state().positions[i][0],
                 Catch::Matchers::WithinAbs(expected, 1e-8));
    }
    for (std::size_t s = 0; s < traj.times.size(); ++s)
      for (double h : forward_headways(traj.snapshots[s], 2.0))
        CHECK_THAT(h, Catch::Matchers::WithinAbs(0.5, 1e-8));
  }

  SECTION("zero velocity field freezes the state") {
    const ScaledKernel<1> none{zero_profile()};
    SimConfig cfg;
    cfg.dt = 0.1;
    cfg.t_final = 1.0;
    MicroState<1> s0{0.0, {vec1(0.1), vec1(0.7)}};
    const auto traj = integrate_micro(s0, DesiredVelocity<1>::zero(), none,
                                      Domain<1>::free(), cfg);
    CHECK(traj.final_state().positions == s0.positions);
  }

  SECTION("fourth-order step refinement (Richardson)") {
    auto terminal = [&](double dt, int order) {
      SimConfig cfg;
      cfg.dt = dt;
      cfg.t_final = 0.5;
      cfg.rk_order = order;
      cfg.snapshot_stride = 1 << 20;  // only initial and final states
      // irregular crowd so the dynamics is genuinely nonlinear
      MicroState<1> s0{0.0, {vec1(0.0), vec1(0.31), vec1(0.5), vec1(1.17)}};
      const ScaledKernel<1> k(profile_fig5());
      return integrate_micro(s0, vd, k, Domain<1>::free(), cfg)
          .final_state()
          .positions;
    };
    auto err = [&](double dt, int order) {
      const auto a = terminal(dt, order);
      const auto b = terminal(dt / 2.0, order);
      double e = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i)
        e += std::abs(a[i][0] - b[i][0]);
      return e;
    };
    const double e1 = err(0.02, 4);
    const double e2 = err(0.01, 4);
    CHECK(e1 / e2 > 12.0);  // ~16 for a 4th order scheme
    CHECK(e1 / e2 < 22.0);
    const double r1 = err(0.02, 1) / err(0.01, 1);
    CHECK(r1 > 1.7);
    CHECK(r1 < 2.4);
  }

  SECTION("translation equivariance with constant desired velocity") {
    // exact in real arithmetic (the velocity sees only differences); the
    // position updates reassociate under the shift, so compare to rounding
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.t_final = 0.5;
    const ScaledKernel<1> k(profile_fig5());
    MicroState<1> s0{0.0, {vec1(0.25), vec1(0.5), vec1(1.25)}};
    MicroState<1> shifted = s0;
    for (auto& p : shifted.positions) p[0] += 7.5;
    const auto base = integrate_micro(s0, vd, k, Domain<1>::free(), cfg);
    const auto moved = integrate_micro(shifted, vd, k, Domain<1>::free(), cfg);
    for (std::size_t s = 0; s < base.times.size(); ++s)
      for (int i = 0; i < 3; ++i)
        CHECK_THAT(moved.snapshots[s].positions[i][0],
                   Catch::Matchers::WithinAbs(
                       base.snapshots[s].positions[i][0] + 7.5, 1e-12));
  }

  SECTION("bitwise reproducibility") {
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.t_final = 0.3;
    const auto a = integrate_micro(lattice_state(8, 2.0), vd, fig3, dom, cfg);
    const auto b = integrate_micro(lattice_state(8, 2.0), vd, fig3, dom, cfg);
    REQUIRE(a.times == b.times);
    for (std::size_t s = 0; s < a.times.size(); ++s)
      CHECK(a.snapshots[s].positions == b.snapshots[s].positions);
  }

  SECTION("divergence aborts with the last valid state kept") {
    SimConfig cfg;
    cfg.dt = 0.5;
    cfg.t_final = 50.0;
    cfg.snapshot_stride = 1000;  // abort lands between scheduled snapshots
    const ScaledKernel<1> none{zero_profile()};
    const auto blowup = DesiredVelocity<1>::affine(vec1(0.0), 50.0);
    MicroState<1> s0{0.0, {vec1(1.0)}};
    const auto traj = integrate_micro(s0, blowup, none, Domain<1>::free(), cfg);
    CHECK(traj.aborted);
    REQUIRE(traj.snapshots.size() >= 2);
    for (const auto& s : traj.snapshots)
      CHECK(std::isfinite(s.positions[0][0]));
    CHECK(traj.times.back() > 0.0);  // the pre-abort state was preserved
  }
}

TEST_CASE("microscopic stability spectrum") {
  SECTION("short-range kernel: all modes neutral") {
    const ScaledKernel<1> fig3{profile_fig3()};
    // R = 1 <= L / N = 2
    for (double re : micro_stability_spectrum(2, 4.0, fig3)) CHECK(re == 0.0);
  }

  SECTION("interacting lattice: strictly damped modes") {
    const ScaledKernel<1> fig3{profile_fig3()};
    for (double re : micro_stability_spectrum(8, 2.0, fig3)) CHECK(re < 0.0);
    for (double re : micro_stability_spectrum(16, 2.0, fig3)) CHECK(re < 0.0);
  }

  SECTION("matches the circulant matrix eigenvalue oracle") {
    const ScaledKernel<1> fig3{profile_fig3()};
    for (int n : {8, 16}) {
      auto formula = micro_stability_spectrum(n, 2.0, fig3);
      formula.push_back(0.0);  // the rigid translation mode
      std::sort(formula.begin(), formula.end());
      const auto oracle = circulant_spectrum_re(n, 2.0, fig3);
      REQUIRE(formula.size() == oracle.size());
      for (std::size_t i = 0; i < formula.size(); ++i)
        CHECK_THAT(formula[i], Catch::Matchers::WithinAbs(oracle[i], 1e-9));
    }
  }

  SECTION("mode symmetry k <-> N - k") {
    const ScaledKernel<1> fig3{profile_fig3()};
    const auto spec = micro_stability_spectrum(12, 2.0, fig3);
    for (int k = 1; k < 12; ++k)
      CHECK_THAT(spec[static_cast<std::size_t>(k - 1)],
                 Catch::Matchers::WithinAbs(
                     spec[static_cast<std::size_t>(12 - k - 1)], 1e-13));
  }
}

TEST_CASE("perturbation decay matches the slowest linear mode") {
  const ScaledKernel<1> fig3{profile_fig3()};

  SECTION("lattice gaps inside the smooth region: rates agree tightly") {
    // N = 15 on L = 2 puts no lattice gap at the support edge z = R.
    const auto decay =
        lattice_perturbation_decay(15, 2.0, 1.0, fig3, 1e-3, 1234, 2.0, 0.005);
    CHECK(decay.predicted_rate < 0.0);
    CHECK(std::abs(decay.measured_rate - decay.predicted_rate) <=
          0.01 * std::abs(decay.predicted_rate));
  }

  SECTION("a lattice gap at the support edge adds one-sided damping") {
    // N = 16 on L = 2 puts the gap h = 8 exactly at z = R = 1, where K' is
    // -0.4 from the left and 0 from the right. The dynamics there is
    // piecewise linear: the mode-k rate picks up the half-activated edge
    // term -0.2 (1 - cos(pi k)) on top of the two-sided formula. The
    // lattice is still attractive, strictly faster than the formula says.
    const auto decay =
        lattice_perturbation_decay(16, 2.0, 1.0, fig3, 1e-3, 1234, 2.0, 0.005);
    CHECK(decay.measured_rate < decay.predicted_rate);  // extra damping
    const double edge_term =
        -0.2 * (1.0 - std::cos(3.14159265358979323846 * decay.slowest_mode));
    CHECK(std::abs(decay.measured_rate - (decay.predicted_rate + edge_term)) <=
          0.02 * std::abs(decay.predicted_rate + edge_term));
  }
}
