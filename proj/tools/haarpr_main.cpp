// Command-line surface: variational values, free-energy curves, threshold
// scans, model simulation, and the numerical verification suites.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <fstream>

#include "haarpr/clt_verify.hpp"
#include "haarpr/csv.hpp"
#include "haarpr/errors.hpp"
#include "haarpr/free_energy.hpp"
#include "haarpr/parallel.hpp"
#include "haarpr/rng.hpp"
#include "haarpr/simulator.hpp"
#include "haarpr/variational.hpp"

namespace {

using haarpr::CsvTable;
using haarpr::format_double;

std::string out_path(const std::string& explicit_path, const std::string& def) {
  if (!explicit_path.empty()) return explicit_path;
  const char* dir = std::getenv("HAARPR_OUT_DIR");
  if (dir && dir[0]) return std::string(dir) + "/" + def;
  return def;
}

haarpr::SimConfig::Ensemble parse_ensemble(const std::string& s) {
  if (s == "haar") return haarpr::SimConfig::Ensemble::haar;
  if (s == "haar-explicit") return haarpr::SimConfig::Ensemble::haar_explicit;
  if (s == "cdp") return haarpr::SimConfig::Ensemble::cdp;
  if (s == "gaussian") return haarpr::SimConfig::Ensemble::gaussian;
  throw haarpr::param_error("unknown ensemble: " + s);
}

struct VerifyTable {
  CsvTable csv;
  bool all_pass = true;
  void row(const std::string& experiment, double m, double trials,
           double statistic, double tolerance, bool pass) {
    // numeric experiment id kept alongside the printable log line
    csv.rows.push_back({static_cast<double>(csv.rows.size()), m, trials,
                        statistic, tolerance, pass ? 1.0 : 0.0});
    std::cout << (pass ? "pass " : "FAIL ") << experiment
              << "  statistic=" << format_double(statistic)
              << "  tolerance=" << format_double(tolerance) << "\n";
    all_pass = all_pass && pass;
  }
};

int run_verify(const std::string& suite, std::int64_t m, std::int64_t trials,
               double sigma, double q, std::uint64_t seed,
               const std::string& out) {
  VerifyTable t;
  t.csv.header = {"experiment", "m", "trials", "statistic", "tolerance", "pass"};
  if (suite == "identities") {
    const double lambdas[3] = {-0.5, 0.0, 0.7};
    double worst_spread = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
      haarpr::SimConfig cfg;
      cfg.n = 4;
      cfg.delta = 2.0;
      cfg.sigma = sigma;
      cfg.ensemble = haarpr::SimConfig::Ensemble::haar;
      cfg.seed = seed + 1000 + inst;
      auto sim = haarpr::simulate(cfg);  // m = 8
      double lo = 1e300, hi = -1e300;
      for (double l : lambdas) {
        const double v = haarpr::script_l_via_tilt_log(sim.y, l, sigma);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      worst_spread = std::max(worst_spread, hi - lo);
    }
    t.row("tilt-representation-spread-m8", 8, 50, worst_spread, 1e-5,
          worst_spread <= 1e-5);

    double worst_direct = 0.0;
    for (int inst = 0; inst < 10; ++inst) {
      haarpr::Rng rng(seed + inst);
      const double y1 = 2.0 * rng.next_double() + 0.2;
      const double y2 = 2.0 * rng.next_double() + 0.2;
      const double direct = haarpr::script_l_direct_log(y1, y2, sigma);
      for (double l : lambdas) {
        const double v = haarpr::script_l_via_tilt_log({y1, y2}, l, sigma);
        worst_direct = std::max(worst_direct, std::fabs(v - direct));
      }
    }
    t.row("tilt-vs-direct-m2", 2, 10, worst_direct, 1e-6, worst_direct <= 1e-6);
  } else if (suite == "clt1d") {
    auto rep = haarpr::local_clt_error_1d(sigma, m, trials, seed);
    t.row("clt1d-density-rel-gap", static_cast<double>(m),
          static_cast<double>(trials), rep.rel_gap, 0.1,
          !rep.inconclusive && rep.rel_gap <= 0.1);
    t.row("clt1d-sum-mean", static_cast<double>(m), static_cast<double>(trials),
          std::fabs(rep.sum_mean - static_cast<double>(m)),
          4.0 * rep.sum_mean_se, rep.mean_pass);
  } else if (suite == "clt4d") {
    auto rep = haarpr::local_clt_error_4d(sigma, q, m, trials, seed);
    t.row("clt4d-pair-mean", static_cast<double>(m), static_cast<double>(trials),
          std::fabs(rep.pair_mean - 2.0), 4.0 * rep.pair_mean_se, rep.mean_pass);
    t.row("clt4d-cov-rel-gap", static_cast<double>(m),
          static_cast<double>(trials), rep.cov_rel_gap, 0.05,
          rep.cov_rel_gap <= 0.05);
    t.row("clt4d-density-rel-gap", static_cast<double>(m),
          static_cast<double>(trials), rep.density_rel_gap, 0.5,
          rep.density_rel_gap <= 0.5);
  } else if (suite == "wlln") {
    haarpr::SimConfig cfg;
    cfg.n = static_cast<std::int64_t>(m / 1.5);
    cfg.delta = static_cast<double>(m) / static_cast<double>(cfg.n);
    cfg.sigma = sigma;
    cfg.ensemble = haarpr::SimConfig::Ensemble::haar;
    cfg.seed = seed;
    auto sim = haarpr::simulate(cfg);
    auto rep = haarpr::wlln_report(sim, {1, 2, 3, 4});
    for (const auto& row : rep.rows)
      t.row("wlln-moment-k" + std::to_string(row.k), static_cast<double>(m), 1,
            row.gap, row.tol, row.pass);
    t.row("wlln-logz-sup-gap", static_cast<double>(m), 1, rep.logz_sup_gap,
          rep.logz_tol, rep.logz_pass);

    // CDP vs haar moment agreement (tolerance is an artifact calibration,
    // not a theorem)
    haarpr::SimConfig cdp;
    cdp.n = 1024;
    cdp.cdp_masks = 4;
    cdp.delta = 4.0;
    cdp.sigma = 0.25;
    cdp.ensemble = haarpr::SimConfig::Ensemble::cdp;
    cdp.seed = seed + 7;
    auto sim_cdp = haarpr::simulate(cdp);
    haarpr::SimConfig hr = cdp;
    hr.ensemble = haarpr::SimConfig::Ensemble::haar;
    auto sim_h = haarpr::simulate(hr);
    for (int k = 1; k <= 3; ++k) {
      double a = 0, b = 0;
      for (double v : sim_cdp.y) a += std::pow(v, k);
      for (double v : sim_h.y) b += std::pow(v, k);
      a /= static_cast<double>(sim_cdp.y.size());
      b /= static_cast<double>(sim_h.y.size());
      t.row("cdp-vs-haar-moment-k" + std::to_string(k) + "-calibrated-tol",
            static_cast<double>(cdp.m()), 1, std::fabs(a - b), 0.02,
            std::fabs(a - b) <= 0.02);
    }
  } else if (suite == "overlap") {
    const double ks10 = haarpr::overlap_law_check(10, 100000, seed);
    t.row("overlap-beta-ks-n10", 10, 100000, ks10, 0.01, ks10 <= 0.01);
    const double ks2 = haarpr::overlap_law_check(2, 100000, seed + 1);
    t.row("overlap-uniform-ks-n2", 2, 100000, ks2, 0.01, ks2 <= 0.01);

    haarpr::SimConfig cdp;
    cdp.n = 256;
    cdp.cdp_masks = 4;
    cdp.delta = 4.0;
    cdp.sigma = 0.25;
    cdp.ensemble = haarpr::SimConfig::Ensemble::cdp;
    cdp.seed = seed + 2;
    const double defect = haarpr::cdp_orthogonality_defect(cdp);
    t.row("cdp-orthogonality", 1024, 1, defect, 1e-12, defect <= 1e-12);

    std::vector<double> ya, yb;
    for (int rep_i = 0; rep_i < 800; ++rep_i) {
      haarpr::SimConfig a;
      a.n = 64;
      a.delta = 2.0;
      a.sigma = 0.3;
      a.seed = seed + 10000 + rep_i;
      a.ensemble = haarpr::SimConfig::Ensemble::haar;
      auto sa = haarpr::simulate(a);
      ya.insert(ya.end(), sa.y.begin(), sa.y.end());
      a.ensemble = haarpr::SimConfig::Ensemble::haar_explicit;
      a.seed = seed + 20000 + rep_i;
      auto sb = haarpr::simulate(a);
      yb.insert(yb.end(), sb.y.begin(), sb.y.end());
    }
    const double ks2s = haarpr::two_sample_ks(ya, yb);
    t.row("haar-shortcut-vs-explicit-ks", 128, 800, ks2s, 0.01, ks2s <= 0.01);
  } else {
    throw haarpr::param_error("unknown verify suite: " + suite);
  }
  t.csv.write(out_path(out, "verify_" + suite + ".csv"));
  return t.all_pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weak-recovery threshold machinery for phase retrieval with "
               "column-orthogonal sensing ensembles"};
  app.set_config("--config", "", "plain key=value file; flags override");
  int threads = 0;
  app.add_option("--threads", threads, "worker cap (count; 0 = hardware)");

  // xi1
  auto* xi1 = app.add_subcommand("xi1", "solve the 1-tilt variational value");
  double sigma = 0.3;
  xi1->add_option("--sigma", sigma, "noise level (std dev, dimensionless)")
      ->required();

  // xi2
  auto* xi2 = app.add_subcommand("xi2", "solve the 2-tilt variational value");
  double x2_sigma = 0.3, x2_q = 0.0;
  xi2->add_option("--sigma", x2_sigma, "noise level (std dev, dimensionless)")
      ->required();
  xi2->add_option("--q", x2_q, "overlap in [0,1) (dimensionless)")->required();

  // free-energy
  auto* fe = app.add_subcommand("free-energy", "evaluate the exponent curve");
  double fe_sigma = 0.3, fe_delta = 1.5, fe_Delta = 0.0, fe_qmax = 0.99;
  int fe_points = 200;
  std::string fe_empirical, fe_out;
  fe->add_option("--sigma", fe_sigma, "noise level (std dev, dimensionless)")
      ->required();
  fe->add_option("--delta", fe_delta, "sampling ratio m/n (dimensionless)")
      ->required();
  fe->add_option("--Delta", fe_Delta, "side-information rate (dimensionless)")
      ->required();
  fe->add_option("--empirical", fe_empirical,
                 "CSV of measurements (header 'y'); population law if absent");
  fe->add_option("--points", fe_points, "grid size (count)");
  fe->add_option("--q-max", fe_qmax, "grid upper endpoint (dimensionless)");
  fe->add_option("--out", fe_out, "output CSV path");

  // threshold
  auto* th = app.add_subcommand("threshold", "bisection for the largest "
                                             "delta with the condition");
  double th_sigma = 0.01, th_Delta = 0.001, th_tol = 0.01;
  bool th_gauss = false;
  std::string th_out;
  th->add_option("--sigma", th_sigma, "noise level (std dev, dimensionless)")
      ->required();
  th->add_option("--Delta", th_Delta, "side-information rate (dimensionless)")
      ->required();
  th->add_option("--tol", th_tol, "delta tolerance (dimensionless, >= 1e-4)");
  th->add_flag("--gaussian", th_gauss, "scan the i.i.d.-sensing baseline");
  th->add_option("--out", th_out, "output JSON path");

  // zero-noise
  auto* zn = app.add_subcommand("zero-noise", "Bessel-limit curve");
  int zn_points = 50;
  double zn_qmax = 0.95;
  std::string zn_out;
  zn->add_option("--q-grid", zn_points, "number of grid points (count)");
  zn->add_option("--q-max", zn_qmax, "grid upper endpoint (dimensionless)");
  zn->add_option("--out", zn_out, "output CSV path");

  // simulate
  auto* sim = app.add_subcommand("simulate", "sample the measurement model");
  std::int64_t sm_n = 64;
  double sm_delta = 2.0, sm_sigma = 0.3;
  std::string sm_ensemble = "haar", sm_out;
  std::uint64_t sm_seed = 1;
  int sm_masks = 0;
  sim->add_option("--n", sm_n, "signal dimension (count)")->required();
  sim->add_option("--delta", sm_delta, "sampling ratio m/n (dimensionless)")
      ->required();
  sim->add_option("--sigma", sm_sigma, "noise level (std dev, dimensionless)")
      ->required();
  sim->add_option("--ensemble", sm_ensemble,
                  "haar | haar-explicit | cdp | gaussian");
  sim->add_option("--masks", sm_masks, "CDP mask count L (count; cdp only)");
  sim->add_option("--seed", sm_seed, "RNG seed (64-bit)");
  sim->add_option("--out", sm_out, "output CSV path");

  // verify
  auto* vf = app.add_subcommand("verify", "numerical verification suites");
  std::string vf_suite, vf_out;
  std::int64_t vf_m = 100000, vf_trials = 10000000;
  double vf_sigma = 0.3, vf_q = 0.5;
  std::uint64_t vf_seed = 17;
  vf->add_option("--suite", vf_suite,
                 "identities | clt1d | clt4d | wlln | overlap")
      ->required();
  vf->add_option("--m", vf_m, "instance size (count)");
  vf->add_option("--trials", vf_trials, "Monte Carlo trials (count)");
  vf->add_option("--sigma", vf_sigma, "noise level (std dev, dimensionless)");
  vf->add_option("--q", vf_q, "overlap (dimensionless; clt4d)");
  vf->add_option("--seed", vf_seed, "RNG seed (64-bit)");
  vf->add_option("--out", vf_out, "output CSV path");

  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  haarpr::set_max_threads(threads);

  try {
    if (xi1->parsed()) {
      auto measure = haarpr::YMeasure::population(sigma);
      auto sol = haarpr::solve_xi1(measure);
      std::cout << "xi1 " << format_double(sol.value) << "\n"
                << "lambda1 " << format_double(sol.argmax[0]) << "\n";
    } else if (xi2->parsed()) {
      auto measure = haarpr::YMeasure::population(x2_sigma);
      auto sol = haarpr::solve_xi2(x2_q, measure);
      const double dd = haarpr::xi2_second_derivative(
          x2_q, measure, std::array<double, 2>{sol.argmax[0], sol.argmax[1]});
      std::cout << "xi2 " << format_double(sol.value) << "\n"
                << "lambda2 " << format_double(sol.argmax[0]) << "\n"
                << "phi " << format_double(sol.argmax[1]) << "\n"
                << "d2xi2_dq2 " << format_double(dd) << "\n";
    } else if (fe->parsed()) {
      haarpr::ModelParams p{fe_sigma, fe_delta, fe_Delta};
      haarpr::GridSpec spec{fe_points, fe_qmax};
      haarpr::YMeasure measure =
          fe_empirical.empty()
              ? haarpr::YMeasure::population(fe_sigma)
              : haarpr::YMeasure::empirical(haarpr::load_y_csv(fe_empirical),
                                            fe_sigma);
      auto curve = haarpr::check_condition(p, measure, spec);
      CsvTable t;
      t.header = {"q", "F", "xi2", "xi1", "lambda2", "phi"};
      for (std::size_t i = 0; i < curve.grid.size(); ++i)
        t.rows.push_back({curve.grid[i], curve.values[i], curve.xi2[i],
                          curve.xi1, curve.lambda2[i], curve.phi[i]});
      const std::string path = out_path(fe_out, "free_energy_curve.csv");
      t.write(path);
      std::cout << "curve " << path << "\n"
                << "curvature_at_zero " << format_double(curve.curvature_at_zero)
                << "\n"
                << "min_interior " << format_double(curve.min_interior) << "\n"
                << "verdict "
                << (curve.condition_holds
                        ? "condition-holds"
                        : "condition-fails(" + curve.fail_reason + ")")
                << "\n";
    } else if (th->parsed()) {
      auto res = haarpr::threshold_scan(th_Delta, th_sigma, th_tol, th_gauss);
      nlohmann::json j;
      j["delta_star"] = res.delta_star;
      j["sigma"] = res.sigma;
      j["Delta"] = res.Delta;
      j["gaussian"] = res.gaussian;
      j["tol"] = res.tol;
      const std::string path = out_path(th_out, "threshold.json");
      std::ofstream f(path);
      f << j.dump(2) << "\n";
      std::cout << "delta_star " << format_double(res.delta_star) << "\n"
                << "summary " << path << "\n";
    } else if (zn->parsed()) {
      CsvTable t;
      t.header = {"q", "xi2_zero_noise", "phi2"};
      for (int i = 0; i < zn_points; ++i) {
        const double q = zn_qmax * i / (zn_points - 1);
        auto v = haarpr::zero_noise_xi2(q);
        t.rows.push_back({q, v.value, v.phi2});
      }
      const std::string path = out_path(zn_out, "zero_noise.csv");
      t.write(path);
      std::cout << "curve " << path << "\n";
    } else if (sim->parsed()) {
      haarpr::SimConfig cfg;
      cfg.n = sm_n;
      cfg.delta = sm_delta;
      cfg.sigma = sm_sigma;
      cfg.seed = sm_seed;
      cfg.ensemble = parse_ensemble(sm_ensemble);
      if (cfg.ensemble == haarpr::SimConfig::Ensemble::cdp) {
        cfg.cdp_masks = sm_masks > 0 ? sm_masks
                                     : static_cast<int>(std::llround(sm_delta));
      }
      auto out = haarpr::simulate(cfg);
      const std::string path = out_path(sm_out, "measurements.csv");
      haarpr::write_y_csv(path, out.y);
      std::cout << "measurements " << path << "\n"
                << "m " << out.y.size() << "\n";
    } else if (vf->parsed()) {
      return run_verify(vf_suite, vf_m, vf_trials, vf_sigma, vf_q, vf_seed,
                        vf_out);
    } else {
      std::cout << app.help() << "\n";
      return 1;
    }
  } catch (const haarpr::param_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const haarpr::accuracy_error& e) {
    std::cerr << "numerical-accuracy error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
