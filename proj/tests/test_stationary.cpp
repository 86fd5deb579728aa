#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "crowdscale/stationary.hpp"

using namespace crowdscale;

TEST_CASE("speed diagram rows") {
  const ScaledKernel<1> fig3{profile_fig3()};

  SECTION("hand values at N = 4, L = 2") {
    const auto d = speed_diagram(2.0, {4}, 1.0, fig3);
    REQUIRE(d.rows.size() == 1);
    CHECK_THAT(d.rows[0].v_micro, Catch::Matchers::WithinAbs(0.85, 1e-15));
    CHECK_THAT(d.rows[0].v_macro,
               Catch::Matchers::WithinAbs(11.0 / 15.0, 1e-10));
    CHECK_THAT(d.rows[0].dv,
               Catch::Matchers::WithinAbs(0.85 - 11.0 / 15.0, 1e-10));
    CHECK_THAT(d.rows[0].dv_over_k0p,
               Catch::Matchers::WithinAbs((0.85 - 11.0 / 15.0) / 0.2, 1e-9));
  }

  SECTION("single-pedestrian row") {
    const auto d = speed_diagram(2.0, {1}, 1.0, fig3);
    CHECK(d.rows[0].v_micro == 1.0);  // empty sum
    CHECK_THAT(d.rows[0].v_macro,
               Catch::Matchers::WithinAbs(1.0 - (2.0 / 15.0) / 2.0, 1e-10));
    CHECK(d.rows[0].dv > 0.0);
    // with self-interaction the single walker can fall behind the continuum
    const ScaledKernel<1> rc{with_value_at_zero(profile_fig3(), 0.2)};
    const auto drc = speed_diagram(2.0, {1}, 1.0, rc);
    CHECK(drc.rows[0].dv < 0.0);
  }

  SECTION("both branches are nonincreasing in N") {
    for (const auto* profile : {"fig3", "fig5"}) {
      const ScaledKernel<1> k{std::string(profile) == "fig3" ? profile_fig3()
                                                             : profile_fig5()};
      std::vector<int> ns;
      for (int n = 1; n <= 64; ++n) ns.push_back(n);
      const auto d = speed_diagram(2.0, ns, 1.0, k);
      for (std::size_t i = 1; i < d.rows.size(); ++i) {
        CHECK(d.rows[i].v_micro <= d.rows[i - 1].v_micro + 1e-13);
        CHECK(d.rows[i].v_macro <= d.rows[i - 1].v_macro + 1e-13);
      }
    }
  }

  SECTION("the continuum branch is exactly affine in N") {
    const auto d = speed_diagram(2.0, {2, 4, 8}, 1.0, fig3);
    const double s1 = (d.rows[1].v_macro - d.rows[0].v_macro) / 2.0;
    const double s2 = (d.rows[2].v_macro - d.rows[1].v_macro) / 4.0;
    CHECK_THAT(s1, Catch::Matchers::WithinAbs(s2, 1e-12));
  }
}

TEST_CASE("partition evaluation of dv") {
  const ScaledKernel<1> fig3{profile_fig3()};

  SECTION("three pieces sum to the direct difference") {
    for (int n : {4, 16, 64, 256}) {
      const auto part = delta_v_partition(n, 2.0, fig3);
      const double direct = delta_v_direct(n, 2.0, fig3);
      INFO("N = " << n);
      CHECK_THAT(part.total(), Catch::Matchers::WithinAbs(direct, 1e-9));
    }
    // also on a domain with R = L
    for (int n : {8, 32}) {
      const auto part = delta_v_partition(n, 1.0, fig3);
      CHECK_THAT(part.total(),
                 Catch::Matchers::WithinAbs(delta_v_direct(n, 1.0, fig3), 1e-9));
    }
  }

  SECTION("the trailing half cell empties once it leaves the support") {
    // L = 2: the trailing interval [2 - 1/N, 2] never meets [0, 1]
    for (int n : {4, 16})
      CHECK(delta_v_partition(n, 2.0, fig3).piece_last == 0.0);
    // L = 1 = R: it always overlaps, so the piece stays positive
    CHECK(delta_v_partition(8, 1.0, fig3).piece_last > 0.0);
  }

  SECTION("interior cells obey the Taylor bound |piece| <= |K''| L^2 / 24 N^2") {
    // The bound needs the cell inside (0, R) where the profile is smooth.
    const double k2_max = 0.4;  // |K''| of fig3
    for (int n : {16, 64}) {
      const auto part = delta_v_partition(n, 2.0, fig3);
      const double bound = 0.5 * k2_max * 4.0 / (12.0 * n * n);
      const double h = 2.0 / n;
      for (std::size_t idx = 0; idx < part.middle_pieces.size(); ++idx) {
        const double x_i = (idx + 1) * h;  // i = idx + 2 -> X_i = (i-1) h
        if (x_i - 0.5 * h <= 0.0 || x_i + 0.5 * h >= 1.0) continue;
        CHECK(std::abs(part.middle_pieces[idx]) <= bound + 1e-15);
      }
    }
  }

  SECTION("first piece tends to K(0+)/2") {
    const auto part = delta_v_partition(4096, 2.0, fig3);
    CHECK_THAT(part.piece_first, Catch::Matchers::WithinAbs(0.1, 1e-4));
  }
}

TEST_CASE("non-convergence of the speed diagrams") {
  const ScaledKernel<1> fig3{profile_fig3()};

  SECTION("dv / K(0+) approaches 1/2 for every corridor length") {
    for (double length : {1.0, 2.0, 4.0}) {
      const auto lim = delta_v_limit_check(fig3, length, 4096);
      const double ratio = lim.dv.back() / 0.2;
      INFO("L = " << length);
      CHECK(std::abs(ratio - 0.5) < 0.02);
      // Richardson extrapolation sharpens the terminal estimate
      CHECK(std::abs(lim.extrapolated_limit - 0.1) <=
            std::abs(lim.dv.back() - 0.1) + 1e-12);
    }
  }

  SECTION("vanishing K(0+): dv decays to zero") {
    const ScaledKernel<1> fig5{profile_fig5()};
    const auto lim = delta_v_limit_check(fig5, 2.0, 4096);
    CHECK(lim.predicted_limit == 0.0);
    CHECK(std::abs(lim.dv.back()) < 1e-3);
    // decreasing magnitude from N >= 8 along the doubling sequence
    for (std::size_t i = 0; i + 1 < lim.ns.size(); ++i)
      if (lim.ns[i] >= 8)
        CHECK(std::abs(lim.dv[i + 1]) < std::abs(lim.dv[i]));
  }

  SECTION("right-continuous variant drifts to -K(0)/2") {
    const ScaledKernel<1> rc{with_value_at_zero(profile_fig3(), 0.2)};
    const auto lim = delta_v_limit_check(rc, 2.0, 4096);
    CHECK(lim.predicted_limit == -0.1);
    CHECK(std::abs(lim.dv.back() + 0.1) < 1e-3);
    // partition identity still holds with the self-interaction term
    const auto part = delta_v_partition(64, 2.0, rc);
    CHECK_THAT(part.total(),
               Catch::Matchers::WithinAbs(delta_v_direct(64, 2.0, rc), 1e-9));
  }
}
