// crowdscale -- command line laboratory for first-order crowd models at the
// particle and continuum scales: speed diagrams, stability spectra,
// Wasserstein distances, stability bounds, scaling equivalence and the
// discrete-vs-continuous convergence experiment.
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 numerical abort.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crowdscale/cloud.hpp"
#include "crowdscale/convergence.hpp"
#include "crowdscale/csv.hpp"
#include "crowdscale/estimates.hpp"
#include "crowdscale/macro.hpp"
#include "crowdscale/measure.hpp"
#include "crowdscale/micro.hpp"
#include "crowdscale/parallel.hpp"
#include "crowdscale/stationary.hpp"
#include "crowdscale/svg.hpp"
#include "crowdscale/wasserstein.hpp"

namespace cs = crowdscale;
using nlohmann::json;

namespace {

struct NumericalAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- shared option bundles -------------------------------------------------

struct KernelOpts {
  std::string name = "fig3";
  double alpha = 0.0;
  double beta = 0.0;

  void attach(CLI::App* app) {
    app->add_option("--kernel", name,
                    "kernel profile: fig3 | fig5 | tent[:R] | table:<csv>")
        ->capture_default_str();
    app->add_option("--alpha", alpha, "kernel strength exponent")
        ->capture_default_str();
    app->add_option("--beta", beta, "kernel support exponent")
        ->capture_default_str();
  }
};

template <int D>
cs::KernelProfile<D> make_profile(const std::string& spec) {
  if (spec == "fig3") {
    if constexpr (D == 1) return cs::profile_fig3();
    throw std::invalid_argument("kernel fig3 is one-dimensional");
  }
  if (spec == "fig5") {
    if constexpr (D == 1) return cs::profile_fig5();
    throw std::invalid_argument("kernel fig5 is one-dimensional");
  }
  if (spec.rfind("tent", 0) == 0) {
    double radius = 1.0;
    if (spec.size() > 5 && spec[4] == ':') radius = std::stod(spec.substr(5));
    return cs::profile_tent<D>(radius);
  }
  if (spec.rfind("table:", 0) == 0) {
    if constexpr (D == 1) {
      const std::string path = spec.substr(6);
      std::ifstream is(path);
      if (!is)
        throw std::invalid_argument("cannot open kernel table: " + path);
      std::vector<double> zs, ks;
      std::string line;
      while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (cs::detail::is_comment_or_blank(line)) continue;
        const auto f = cs::detail::split_csv_line(line);
        if (f.size() != 2)
          throw std::invalid_argument(
              "kernel tables are z,k rows (one magnitude column): " + path);
        zs.push_back(std::stod(f[0]));
        ks.push_back(std::stod(f[1]));
      }
      return cs::tabulated_profile(std::move(zs), std::move(ks));
    }
    throw std::invalid_argument("tabulated kernels are one-dimensional");
  }
  throw std::invalid_argument("unknown kernel '" + spec + "'");
}

/// Parses "a:f:b" as the geometric sequence a, a*f, ... <= b, or a comma
/// list of values.
std::vector<int> parse_count_range(const std::string& spec) {
  std::vector<int> out;
  if (spec.find(':') != std::string::npos) {
    const auto p1 = spec.find(':');
    const auto p2 = spec.find(':', p1 + 1);
    if (p2 == std::string::npos)
      throw std::invalid_argument("count range is start:factor:stop");
    const long start = std::stol(spec.substr(0, p1));
    const long factor = std::stol(spec.substr(p1 + 1, p2 - p1 - 1));
    const long stop = std::stol(spec.substr(p2 + 1));
    if (start < 1 || factor < 2 || stop < start)
      throw std::invalid_argument("count range needs start >= 1, factor >= 2");
    for (long n = start; n <= stop; n *= factor)
      out.push_back(static_cast<int>(n));
  } else {
    std::stringstream ss(spec);
    std::string field;
    while (std::getline(ss, field, ','))
      out.push_back(std::stoi(field));
  }
  if (out.empty()) throw std::invalid_argument("empty count list");
  return out;
}

/// Effective options of the invoked subcommand, one key=value line each.
std::vector<std::string> config_echo(const CLI::App& sub,
                                     const std::string& subcommand) {
  std::vector<std::string> echo;
  echo.push_back("tool=crowdscale subcommand=" + subcommand);
  std::stringstream ss(sub.config_to_str(true, false));
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty() && line[0] != '[') echo.push_back(line);
  return echo;
}

// --- subcommand runners ------------------------------------------------

int run_speed_diagram(const CLI::App& app, const KernelOpts& kopts,
                      double length, const std::string& n_spec, double v_d,
                      const std::string& out, const std::string& svg,
                      int threads) {
  const auto ns = parse_count_range(n_spec);
  const auto base = make_profile<1>(kopts.name);
  std::vector<cs::SpeedDiagramRow> rows(ns.size());
  cs::parallel_for(
      static_cast<int>(ns.size()), threads, [&](int i) {
        const int n = ns[static_cast<std::size_t>(i)];
        const cs::ScaledKernel<1> k(base, kopts.alpha, kopts.beta, n);
        cs::SpeedDiagramRow row;
        row.n = n;
        row.v_micro = cs::lattice_equilibrium_speed(n, length, v_d, k);
        row.v_macro = cs::uniform_equilibrium_speed(n, length, v_d, k);
        row.dv = row.v_micro - row.v_macro;
        const double k0p = k.right_limit_at_zero();
        if (k0p > 0.0) row.dv_over_k0p = row.dv / k0p;
        rows[static_cast<std::size_t>(i)] = row;
      });

  const auto echo = config_echo(app, "speed-diagram");
  std::vector<std::vector<double>> table;
  for (const auto& r : rows)
    table.push_back({static_cast<double>(r.n), r.v_micro, r.v_macro, r.dv,
                     r.dv_over_k0p});
  cs::write_csv(out, echo, "N,v_micro,v_macro,dv,dv_over_K0p", table);

  if (!svg.empty()) {
    cs::SvgSeries micro{"v_micro", {}, {}}, macro{"v_macro", {}, {}};
    for (const auto& r : rows) {
      micro.x.push_back(r.n);
      micro.y.push_back(r.v_micro);
      macro.x.push_back(r.n);
      macro.y.push_back(r.v_macro);
    }
    cs::write_svg_chart(svg, echo, "speed diagram", {micro, macro}, true,
                        false);
  }
  std::cout << "wrote " << out << " (" << rows.size() << " rows)\n";
  return 0;
}

int run_stability(const CLI::App& app, const KernelOpts& kopts,
                  const std::string& model, int n, double length, int kmax,
                  double perturb, unsigned seed, double t_final,
                  const std::string& out) {
  const auto base = make_profile<1>(kopts.name);
  const cs::ScaledKernel<1> k(base, kopts.alpha, kopts.beta, n);
  auto echo = config_echo(app, "stability");
  std::vector<std::vector<double>> table;
  if (model == "micro") {
    const auto spec = cs::micro_stability_spectrum(n, length, k);
    for (std::size_t i = 0; i < spec.size(); ++i)
      table.push_back({static_cast<double>(i + 1), spec[i]});
    if (perturb > 0.0) {
      const auto decay = cs::lattice_perturbation_decay(n, length, 1.0, k,
                                                        perturb, seed, t_final);
      echo.push_back("perturbation_measured_rate=" +
                     cs::format_double(decay.measured_rate));
      echo.push_back("perturbation_predicted_rate=" +
                     cs::format_double(decay.predicted_rate));
      std::cout << "perturbation decay: measured " << decay.measured_rate
                << ", predicted " << decay.predicted_rate << " (mode "
                << decay.slowest_mode << ")\n";
    }
  } else if (model == "macro") {
    const auto spec = cs::macro_stability_spectrum(n, length, k, kmax);
    for (std::size_t i = 0; i < spec.size(); ++i)
      table.push_back({static_cast<double>(i + 1), spec[i]});
  } else {
    throw std::invalid_argument("stability --model must be micro or macro");
  }
  cs::write_csv(out, echo, "k,re_sigma", table);
  std::cout << "wrote " << out << " (" << table.size() << " modes)\n";
  return 0;
}

int run_converge(const CLI::App& app, const KernelOpts& kopts, int d,
                 double h, int kmin, int kmax, double t_final, double v_d,
                 const std::string& out, const std::string& svg, int threads) {
  cs::ConvergenceConfig cfg;
  cfg.h = h;
  cfg.k_min = kmin;
  cfg.k_max = kmax;
  cfg.alpha = kopts.alpha;
  cfg.beta = kopts.beta;
  cfg.t_final = t_final;
  cfg.v_d = v_d;

  const auto echo = config_echo(app, "converge");
  auto run = [&](auto dim_tag) {
    constexpr int D = decltype(dim_tag)::value;
    cs::require(cfg.alpha + cfg.beta >= 1.0,
                "discrete-continuous comparison requires alpha + beta >= 1");
    cs::require(cfg.h > D - 1,
                "discrete-continuous comparison requires h > d - 1");
    const auto base = make_profile<D>(kopts.name);
    // Levels are independent; compute them in parallel, assemble in order.
    const double xi_star =
        2.0 * std::max(0.0, base.lipschitz_const);
    const int n_levels = cfg.k_max - cfg.k_min + 1;
    std::vector<cs::ConvergenceLevel> levels(
        static_cast<std::size_t>(n_levels));
    cs::parallel_for(n_levels, threads, [&](int i) {
      levels[static_cast<std::size_t>(i)] =
          cs::run_convergence_level(cfg, base, cfg.k_min + i, xi_star);
    });
    std::vector<std::vector<double>> table;
    cs::SvgSeries series{"terminal W1", {}, {}};
    for (const auto& lev : levels) {
      table.push_back({static_cast<double>(lev.k_level),
                       static_cast<double>(lev.n), lev.r, lev.w1_initial,
                       lev.w1_terminal, lev.ceiling.back()});
      series.x.push_back(lev.n);
      series.y.push_back(lev.w1_terminal);
    }
    cs::write_csv(out, echo, "k,N,r,w1_initial,w1_terminal,ceiling", table);
    if (!svg.empty())
      cs::write_svg_chart(svg, echo, "discrete-continuous convergence",
                          {series}, true, true);
    std::vector<double> ns, ws;
    for (const auto& lev : levels) {
      ns.push_back(lev.n);
      ws.push_back(lev.w1_terminal);
    }
    if (ns.size() >= 3)
      std::cout << "fitted decay slope "
                << cs::fit_decay_exponent(ns, ws, nullptr) << "\n";
  };
  if (d == 1)
    run(std::integral_constant<int, 1>{});
  else if (d == 2)
    run(std::integral_constant<int, 2>{});
  else
    throw std::invalid_argument("converge supports d = 1 or 2");
  std::cout << "wrote " << out << "\n";
  return 0;
}

int run_scaling_equiv(const CLI::App& app, const KernelOpts& kopts,
                      double alpha2, double beta2, int n, double t_final,
                      double dt, unsigned seed, const std::string& out) {
  const auto base = make_profile<1>(kopts.name);
  cs::AtomicMeasure<1> mu0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < n; ++i)
    mu0.positions.push_back(cs::vec1((i + 0.5) / n + 0.1 * unit(rng) / n));

  cs::SimConfig cfg;
  cfg.dt = dt;
  cfg.t_final = t_final;
  cfg.snapshot_stride =
      std::max(1, static_cast<int>(std::lround(t_final / dt)) / 20);
  const auto report = cs::verify_scaling_equivalence(
      mu0, kopts.alpha, kopts.beta, alpha2, beta2, base,
      cs::DesiredVelocity<1>::zero(), cfg);

  json j;
  j["config"] = config_echo(app, "scaling-equiv");
  j["scale_factor"] = report.scale_factor;
  j["times"] = report.times;
  j["observed"] = report.discrepancy;
  j["ceiling"] = report.error_ceiling;
  j["terminal"] = report.terminal();
  std::ofstream os(out, std::ios::binary);
  os << j.dump(2) << "\n";
  std::cout << "terminal W1(nu_t, U#mu_t) = " << report.terminal() << "\n";
  std::cout << "wrote " << out << "\n";
  return 0;
}

int run_w1(const std::string& file_a, const std::string& file_b,
           const std::string& method, int cells_per_bump) {
  const int da = cs::measure_file_dim(file_a);
  const int db = cs::measure_file_dim(file_b);
  if (da != db)
    throw std::invalid_argument("measure files have different dimensions");

  auto compute = [&](auto dim_tag) -> cs::W1Result {
    constexpr int D = decltype(dim_tag)::value;
    const auto ma = cs::load_measure<D>(file_a);
    const auto mb = cs::load_measure<D>(file_b);
    if (method == "cdf") {
      if constexpr (D == 1) {
        return cs::w1_1d(ma, mb);
      } else {
        throw std::invalid_argument("--method cdf is one-dimensional");
      }
    }
    if (method == "semidiscrete") {
      const auto* atoms = std::get_if<cs::AtomicMeasure<D>>(&ma);
      const auto* bumps = std::get_if<cs::BumpMeasure<D>>(&mb);
      if (!atoms) {
        atoms = std::get_if<cs::AtomicMeasure<D>>(&mb);
        bumps = std::get_if<cs::BumpMeasure<D>>(&ma);
      }
      if (!atoms || !bumps)
        throw std::invalid_argument(
            "--method semidiscrete needs one atomic and one bump measure");
      return cs::w1_semidiscrete(*atoms, *bumps);
    }
    if (method == "lp") {
      auto as_cloud = [&](const cs::CrowdMeasure<D>& m) {
        return std::visit(
            [&](const auto& v) -> cs::QuadratureCloud<D> {
              using T = std::decay_t<decltype(v)>;
              cs::QuadratureCloud<D> c;
              if constexpr (std::is_same_v<T, cs::AtomicMeasure<D>>) {
                c.points = v.positions;
                c.weights.assign(v.positions.size(), 1.0);
                c.provenance.resize(v.positions.size());
                for (std::size_t i = 0; i < v.positions.size(); ++i)
                  c.provenance[i] = static_cast<int>(i);
                return c;
              } else if constexpr (std::is_same_v<T, cs::BumpMeasure<D>>) {
                if constexpr (D <= 2) {
                  return cs::discretize_bumps_cells(v, cells_per_bump);
                } else {
                  throw std::invalid_argument(
                      "bump discretization covers d = 1, 2");
                }
              } else {
                if constexpr (D == 1) {
                  return cs::grid_points(v);
                } else {
                  throw std::invalid_argument(
                      "grid densities are one-dimensional");
                }
              }
            },
            m);
      };
      const auto ca = as_cloud(ma);
      const auto cb = as_cloud(mb);
      return cs::w1_lp_oracle(ca.points, ca.weights, cb.points, cb.weights);
    }
    throw std::invalid_argument("--method must be cdf, semidiscrete or lp");
  };

  cs::W1Result res;
  if (da == 1)
    res = compute(std::integral_constant<int, 1>{});
  else if (da == 2)
    res = compute(std::integral_constant<int, 2>{});
  else if (da == 3)
    res = compute(std::integral_constant<int, 3>{});
  else
    throw std::invalid_argument("measures must live in d = 1, 2 or 3");

  std::cout << "w1 = " << cs::format_double(res.value)
            << " certified_error = " << cs::format_double(res.certified_error)
            << " method = "
            << (res.method == cs::W1Method::cdf1d
                    ? "cdf1d"
                    : res.method == cs::W1Method::semidiscrete ? "semidiscrete"
                                                               : "lp_oracle")
            << "\n";
  return 0;
}

int run_stability_bound(const CLI::App& app, const KernelOpts& kopts, int n,
                        int pairs, double perturb, double t_final, double dt,
                        unsigned seed, const std::string& out) {
  const auto base = make_profile<1>(kopts.name);
  const cs::ScaledKernel<1> k(base, kopts.alpha, kopts.beta, n);
  const auto vd = cs::DesiredVelocity<1>::constant(cs::vec1(1.0));
  const auto dom = cs::Domain<1>::free();

  cs::SimConfig cfg;
  cfg.dt = dt;
  cfg.t_final = t_final;
  cfg.snapshot_stride =
      std::max(1, static_cast<int>(std::lround(t_final / dt)) / 20);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  json runs = json::array();
  bool all_ok = true;
  for (int p = 0; p < pairs; ++p) {
    cs::AtomicMeasure<1> mu0, nu0;
    for (int i = 0; i < n; ++i) {
      const double x = (i + 0.5) / n;
      mu0.positions.push_back(cs::vec1(x));
      nu0.positions.push_back(cs::vec1(x + perturb * unit(rng)));
    }
    const auto rep = cs::verify_continuous_dependence(mu0, nu0, vd, k, dom, cfg);
    json jr;
    jr["xi_n"] = rep.xi_n;
    jr["satisfied"] = rep.satisfied;
    json ts = json::array(), obs = json::array(), ceil = json::array();
    for (const auto& s : rep.snapshots) {
      ts.push_back(s.t);
      obs.push_back(s.observed);
      ceil.push_back(s.ceiling);
    }
    jr["times"] = ts;
    jr["observed"] = obs;
    jr["ceiling"] = ceil;
    runs.push_back(jr);
    all_ok = all_ok && rep.satisfied;
  }
  json j;
  j["config"] = config_echo(app, "stability-bound");
  j["runs"] = runs;
  j["all_satisfied"] = all_ok;
  std::ofstream os(out, std::ios::binary);
  os << j.dump(2) << "\n";
  std::cout << (all_ok ? "all pairs within the ceiling\n"
                       : "CEILING VIOLATION\n");
  std::cout << "wrote " << out << "\n";
  return all_ok ? 0 : 3;
}

int run_simulate(const CLI::App& app, const KernelOpts& kopts,
                 const std::string& model, const std::string& init,
                 int equispaced_n, const std::string& domain_kind,
                 double length, double dt, double t_final, int stride,
                 double bump_r, const std::string& profile, int grid_cells,
                 double v_d, const std::string& out) {
  const auto base = make_profile<1>(kopts.name);
  const auto echo = config_echo(app, "simulate");
  const auto vd = cs::DesiredVelocity<1>::constant(cs::vec1(v_d));

  cs::SimConfig cfg;
  if (dt > 0.0) cfg.dt = dt;
  cfg.t_final = t_final;
  cfg.snapshot_stride = stride;

  auto make_domain = [&]() {
    if (domain_kind == "periodic") return cs::Domain<1>::periodic(length);
    if (domain_kind == "free") return cs::Domain<1>::free();
    throw std::invalid_argument("--domain must be free or periodic");
  };
  auto initial_atoms = [&]() -> cs::AtomicMeasure<1> {
    if (!init.empty()) {
      auto m = cs::load_measure<1>(init);
      if (auto* a = std::get_if<cs::AtomicMeasure<1>>(&m)) return *a;
      throw std::invalid_argument("--init must be an atomic measure here");
    }
    cs::require(equispaced_n > 0, "need --init or --equispaced N");
    cs::AtomicMeasure<1> a;
    for (int i = 0; i < equispaced_n; ++i)
      a.positions.push_back(cs::vec1(i * length / equispaced_n));
    return a;
  };

  if (model == "micro") {
    const auto atoms = initial_atoms();
    const cs::ScaledKernel<1> k(base, kopts.alpha, kopts.beta, atoms.count());
    const auto traj = cs::integrate_micro(
        cs::MicroState<1>{0.0, atoms.positions}, vd, k, make_domain(), cfg);
    cs::save_trajectory(out, traj, echo);
    if (traj.aborted) throw NumericalAbort(traj.abort_reason);
  } else if (model == "characteristics") {
    cs::BumpMeasure<1> bumps;
    if (!init.empty()) {
      auto m = cs::load_measure<1>(init);
      if (auto* b = std::get_if<cs::BumpMeasure<1>>(&m))
        bumps = *b;
      else
        throw std::invalid_argument("--init must be a bump measure here");
    } else {
      bumps = cs::make_bumps(initial_atoms(), bump_r, cs::bump_profile(profile));
    }
    const cs::ScaledKernel<1> k(base, kopts.alpha, kopts.beta, bumps.count());
    const auto traj =
        cs::integrate_characteristics(bumps, vd, k, make_domain(), cfg);
    cs::save_trajectory(out, traj, echo);
    if (traj.aborted) throw NumericalAbort(traj.abort_reason);
  } else if (model == "fv") {
    cs::GridDensity1D grid;
    if (!init.empty()) {
      auto m = cs::load_measure<1>(init);
      if (auto* g = std::get_if<cs::GridDensity1D>(&m))
        grid = *g;
      else if (auto* b = std::get_if<cs::BumpMeasure<1>>(&m))
        grid = cs::grid_from_bumps(*b, length, grid_cells);
      else
        throw std::invalid_argument("--init must be a grid or bump measure");
    } else {
      cs::require(equispaced_n > 0, "need --init or --equispaced N");
      grid = cs::uniform_grid(equispaced_n, length, grid_cells);
    }
    const int n_mass =
        static_cast<int>(std::lround(cs::total_mass(grid)));
    const cs::ScaledKernel<1> k(base, kopts.alpha, kopts.beta,
                                std::max(1, n_mass));
    const auto traj = cs::integrate_fv(cs::FVState{0.0, grid}, vd, k, cfg);
    cs::save_trajectory(out, traj, echo);
    if (traj.aborted) throw NumericalAbort(traj.abort_reason);
  } else {
    throw std::invalid_argument(
        "--model must be micro, characteristics or fv");
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crowdscale: discrete and continuous crowd-model laboratory"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a config file");
  app.allow_config_extras(CLI::config_extras_mode::error);

  int threads = 1;
  app.add_option("--threads", threads,
                 "max worker threads for independent experiment cells")
      ->capture_default_str();

  // speed-diagram
  auto* sd = app.add_subcommand("speed-diagram",
                                "lattice vs uniform equilibrium speeds per N");
  KernelOpts sd_k;
  sd_k.attach(sd);
  double sd_len = 2.0, sd_vd = 1.0;
  std::string sd_n = "2:2:4096", sd_out = "diagram.csv", sd_svg;
  sd->add_option("--L", sd_len, "corridor length")->capture_default_str();
  sd->add_option("--N", sd_n, "agent counts, start:factor:stop or list")
      ->capture_default_str();
  sd->add_option("--vd", sd_vd, "desired speed")->capture_default_str();
  sd->add_option("--out", sd_out, "output CSV")->capture_default_str();
  sd->add_option("--svg", sd_svg, "optional SVG chart");

  // stability
  auto* st = app.add_subcommand("stability",
                                "linear stability spectrum of the equilibria");
  KernelOpts st_k;
  st_k.attach(st);
  std::string st_model = "micro", st_out = "spectrum.csv";
  int st_n = 16, st_kmax = 64;
  double st_len = 2.0, st_perturb = 0.0, st_T = 2.0;
  unsigned st_seed = 1;
  st->add_option("--model", st_model, "micro | macro")->capture_default_str();
  st->add_option("--N", st_n, "agent count")->capture_default_str();
  st->add_option("--L", st_len, "corridor length")->capture_default_str();
  st->add_option("--kmax", st_kmax, "macro modes to compute")
      ->capture_default_str();
  st->add_option("--perturb", st_perturb,
                 "micro only: run a decay experiment with this amplitude");
  st->add_option("--seed", st_seed, "perturbation seed")->capture_default_str();
  st->add_option("--T", st_T, "perturbation run final time")
      ->capture_default_str();
  st->add_option("--out", st_out, "output CSV")->capture_default_str();

  // converge
  auto* cv = app.add_subcommand(
      "converge", "discrete vs continuous convergence across lattice levels");
  cv->set_help_flag("--help", "print help");  // frees -h for the exponent
  KernelOpts cv_k;
  cv_k.name = "fig5";
  cv_k.alpha = 1.0;
  cv_k.attach(cv);
  int cv_d = 1, cv_kmin = 2, cv_kmax = 5;
  double cv_h = 1.0, cv_T = 1.0, cv_vd = 0.0;
  std::string cv_out = "converge.csv", cv_svg;
  cv->add_option("--d", cv_d, "dimension (1 or 2)")->capture_default_str();
  cv->add_option("--h", cv_h, "radius exponent, needs h > d-1")
      ->capture_default_str();
  cv->add_option("--kmin", cv_kmin, "first lattice level")
      ->capture_default_str();
  cv->add_option("--kmax", cv_kmax, "last lattice level")
      ->capture_default_str();
  cv->add_option("--T", cv_T, "final time")->capture_default_str();
  cv->add_option("--vd", cv_vd, "constant desired speed")
      ->capture_default_str();
  cv->add_option("--out", cv_out, "output CSV")->capture_default_str();
  cv->add_option("--svg", cv_svg, "optional SVG chart");

  // scaling-equiv
  auto* se = app.add_subcommand(
      "scaling-equiv", "scaling equivalence of kernel family members");
  KernelOpts se_k;
  se_k.name = "fig5";
  se_k.alpha = 1.0;
  se_k.attach(se);
  double se_a2 = 0.0, se_b2 = 1.0, se_T = 1.0, se_dt = 1e-3;
  int se_n = 8;
  unsigned se_seed = 1;
  std::string se_out = "scaling.json";
  se->add_option("--alpha2", se_a2, "second member strength exponent")
      ->capture_default_str();
  se->add_option("--beta2", se_b2, "second member support exponent")
      ->capture_default_str();
  se->add_option("--N", se_n, "agent count")->capture_default_str();
  se->add_option("--T", se_T, "final time")->capture_default_str();
  se->add_option("--dt", se_dt, "time step")->capture_default_str();
  se->add_option("--seed", se_seed, "initial data seed")->capture_default_str();
  se->add_option("--out", se_out, "output JSON")->capture_default_str();

  // w1
  auto* w1 = app.add_subcommand("w1", "Wasserstein distance of two measures");
  std::string w1_a, w1_b, w1_method = "cdf";
  int w1_cells = 64;
  w1->add_option("file_a", w1_a, "first measure CSV")->required();
  w1->add_option("file_b", w1_b, "second measure CSV")->required();
  w1->add_option("--method", w1_method, "cdf | semidiscrete | lp")
      ->capture_default_str();
  w1->add_option("--cells-per-bump", w1_cells,
                 "bump discretization for --method lp")
      ->capture_default_str();

  // stability-bound
  auto* sb = app.add_subcommand(
      "stability-bound", "continuous dependence ceiling on perturbed pairs");
  KernelOpts sb_k;
  sb_k.name = "fig5";
  sb_k.alpha = 1.0;
  sb_k.attach(sb);
  int sb_n = 8, sb_pairs = 20;
  double sb_perturb = 1e-3, sb_T = 1.0, sb_dt = 0.01;
  unsigned sb_seed = 1;
  std::string sb_out = "bound.json";
  sb->add_option("--N", sb_n, "agent count")->capture_default_str();
  sb->add_option("--pairs", sb_pairs, "number of perturbed pairs")
      ->capture_default_str();
  sb->add_option("--perturb", sb_perturb, "perturbation amplitude")
      ->capture_default_str();
  sb->add_option("--T", sb_T, "final time")->capture_default_str();
  sb->add_option("--dt", sb_dt, "time step")->capture_default_str();
  sb->add_option("--seed", sb_seed, "pair seed")->capture_default_str();
  sb->add_option("--out", sb_out, "output JSON")->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "run one solver, dump snapshots");
  KernelOpts sim_k;
  sim_k.attach(sim);
  std::string sim_model = "micro", sim_init, sim_domain = "periodic",
              sim_out = "trajectory.csv", sim_profile = "indicator";
  int sim_n = 0, sim_stride = 10, sim_cells = 400;
  double sim_len = 2.0, sim_dt = 0.0, sim_T = 1.0, sim_r = 0.01, sim_vd = 1.0;
  sim->add_option("--model", sim_model, "micro | characteristics | fv")
      ->capture_default_str();
  sim->add_option("--init", sim_init, "initial measure CSV");
  sim->add_option("--equispaced", sim_n, "equispaced agents instead of --init");
  sim->add_option("--domain", sim_domain, "free | periodic")
      ->capture_default_str();
  sim->add_option("--L", sim_len, "domain length")->capture_default_str();
  sim->add_option("--dt", sim_dt, "time step (0 = solver default)")
      ->capture_default_str();
  sim->add_option("--t_final", sim_T, "final time")->capture_default_str();
  sim->add_option("--snapshot_stride", sim_stride, "steps between snapshots")
      ->capture_default_str();
  sim->add_option("--r", sim_r, "bump radius for built-up bump data")
      ->capture_default_str();
  sim->add_option("--profile", sim_profile, "bump profile")
      ->capture_default_str();
  sim->add_option("--cells", sim_cells, "finite volume cells")
      ->capture_default_str();
  sim->add_option("--vd", sim_vd, "constant desired speed")
      ->capture_default_str();
  sim->add_option("--out", sim_out, "output CSV")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sd->parsed())
      return run_speed_diagram(*sd, sd_k, sd_len, sd_n, sd_vd, sd_out, sd_svg,
                               threads);
    if (st->parsed())
      return run_stability(*st, st_k, st_model, st_n, st_len, st_kmax,
                           st_perturb, st_seed, st_T, st_out);
    if (cv->parsed())
      return run_converge(*cv, cv_k, cv_d, cv_h, cv_kmin, cv_kmax, cv_T, cv_vd,
                          cv_out, cv_svg, threads);
    if (se->parsed())
      return run_scaling_equiv(*se, se_k, se_a2, se_b2, se_n, se_T, se_dt,
                               se_seed, se_out);
    if (w1->parsed()) return run_w1(w1_a, w1_b, w1_method, w1_cells);
    if (sb->parsed())
      return run_stability_bound(*sb, sb_k, sb_n, sb_pairs, sb_perturb, sb_T,
                                 sb_dt, sb_seed, sb_out);
    if (sim->parsed())
      return run_simulate(*sim, sim_k, sim_model, sim_init, sim_n, sim_domain,
                          sim_len, sim_dt, sim_T, sim_stride, sim_r,
                          sim_profile, sim_cells, sim_vd, sim_out);
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
