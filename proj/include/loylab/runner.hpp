#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "config.hpp"
#include "csv.hpp"
#include "diagnostics.hpp"
#include "evolution.hpp"
#include "random_models.hpp"

namespace loylab {

namespace run_detail {

inline std::string formula_for(const std::string& method) {
  static const std::map<std::string, std::string> table = {
      {"loy0", "m0*P - Sigma0(m0)"},
      {"loy", "m0*P - Sigma(m0)"},
      {"improved",
       "PHP - (1/2)*Sigma(m0+h0+kappa)*[(1-h0/kappa)P + PH1P/kappa]"
       " - (1/2)*Sigma(m0+h0-kappa)*[(1+h0/kappa)P - PH1P/kappa]"},
      {"spectral", "PHP - sum_j Sigma(lambda_j)*P_j"},
      {"iterate",
       "fixed point of V = -i lim_T int_0^T PHQ e^{-is*QHQ} QHP "
       "e^{+is*(PHP+V)} ds, from V=0"},
      {"onedim", "<psi|H|psi> - Sigma_psi(<psi|H|psi>)"}};
  return table.at(method);
}

struct MethodResult {
  EffectiveHamiltonian heff;
  std::vector<double> history;  // iterate only
  bool converged = true;
};

inline MethodResult compute_method(const std::string& method,
                                   const FullModel& model,
                                   const RunConfig& cfg) {
  MethodResult r{EffectiveHamiltonian{}, {}, true};
  if (method == "loy0") {
    r.heff = h_loy0(model, cfg.eta);
  } else if (method == "loy") {
    r.heff = h_loy(model, cfg.eta);
  } else if (method == "improved") {
    r.heff = h_loy_imp(model, cfg.eta);
  } else if (method == "spectral") {
    const double eta = cfg.eta.value_or(model.default_eta());
    Matrix m = model.php() + v_spectral(model, model.php(), eta);
    r.heff = {std::move(m), "spectral", eta};
  } else if (method == "iterate") {
    const double eta = cfg.eta.value_or(model.default_eta());
    auto it = iterate_v(model, cfg.iterate.max_iter, cfg.iterate.tol, eta);
    if (it.status == IterationStatus::failed)
      throw NumericalError("iterate: " + it.message);
    r.history = it.history;
    r.converged = it.status == IterationStatus::converged;
    Matrix m = model.php() + it.v;
    r.heff = {std::move(m), "iterate", eta};
  } else if (method == "onedim") {
    const Vector a0 = cfg.initial_amplitudes(model.parallel_dim());
    Vector psi = Vector::Zero(model.full_dim());
    psi.head(model.parallel_dim()) = a0 / a0.norm();
    r.heff = h_1d(model, psi, cfg.eta);
  } else {
    throw ConfigError("unknown method '" + method + "'");
  }
  return r;
}

inline void write_heff_csv(const std::filesystem::path& path,
                           const MethodResult& r, const FullModel& model) {
  CsvWriter csv(path);
  csv.comment("units", "model (hbar = 1)");
  csv.comment("method", r.heff.method);
  csv.comment("formula", formula_for(r.heff.method));
  csv.comment("eta", r.heff.eta);
  csv.comment("grid_points", static_cast<double>(model.q_dim()));
  csv.comment("grid_median_spacing", model.median_grid_spacing());
  if (!r.history.empty())
    csv.comment("iterate_converged", r.converged ? "yes" : "no");
  csv.row({"kind", "i", "j", "re", "im"});
  const Matrix& h = r.heff.matrix;
  const Matrix m = r.heff.mass_part();
  const Matrix g = r.heff.decay_part();
  auto emit = [&](const char* kind, const Matrix& mat) {
    for (Eigen::Index i = 0; i < mat.rows(); ++i)
      for (Eigen::Index j = 0; j < mat.cols(); ++j)
        csv.row({kind, std::to_string(i), std::to_string(j),
                 fmt17(std::real(mat(i, j))), fmt17(std::imag(mat(i, j)))});
  };
  emit("H", h);
  emit("M", m);
  emit("Gamma", g);
  Eigen::ComplexEigenSolver<Matrix> es(h);
  for (Eigen::Index i = 0; i < h.rows(); ++i)
    csv.row({"eigenvalue", std::to_string(i), "",
             fmt17(std::real(es.eigenvalues()[i])),
             fmt17(std::imag(es.eigenvalues()[i]))});
  if (h.rows() == 2) {
    const Complex d = h(0, 0) - h(1, 1);
    csv.row({"diag_difference", "", "", fmt17(std::real(d)),
             fmt17(std::imag(d))});
  }
}

inline void write_trajectory_csv(const std::filesystem::path& path,
                                 const Trajectory& tr,
                                 const SubspacePartition& part,
                                 double eta_used) {
  CsvWriter csv(path);
  csv.comment("units", "model (hbar = 1)");
  csv.comment("eta", eta_used);
  if (!tr.warning.empty()) csv.comment("warning", tr.warning);
  const Eigen::Index n = part.n();
  std::vector<std::string> head{"time"};
  for (Eigen::Index k = 0; k < n; ++k) {
    head.push_back("re_a" + std::to_string(k + 1));
    head.push_back("im_a" + std::to_string(k + 1));
  }
  head.push_back("p");
  head.push_back("norm_sq");
  csv.row(head);
  auto project = [&](const Vector& s) {
    if (s.size() == n) return s;
    Vector a(n);
    for (Eigen::Index i = 0; i < n; ++i)
      a[i] = s[part.parallel[static_cast<size_t>(i)]];
    return a;
  };
  const Vector ref = project(tr.states.front());
  for (size_t i = 0; i < tr.states.size(); ++i) {
    const Vector a = project(tr.states[i]);
    std::vector<std::string> cells{fmt17(tr.times[static_cast<Eigen::Index>(i)])};
    for (Eigen::Index k = 0; k < n; ++k) {
      cells.push_back(fmt17(std::real(a[k])));
      cells.push_back(fmt17(std::imag(a[k])));
    }
    cells.push_back(fmt17(std::norm(ref.dot(a))));
    cells.push_back(fmt17(tr.norm_track[static_cast<Eigen::Index>(i)]));
    csv.row(cells);
  }
}

}  // namespace run_detail

inline void cmd_heff(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  const FullModel model = cfg.build_model();
  fs::create_directories(cfg.out_dir);
  std::ofstream report(fs::path(cfg.out_dir) / "report.txt");
  report << "effective Hamiltonians, units: model (hbar = 1)\n";
  report << "parallel dim " << model.parallel_dim() << ", Q dim "
         << model.q_dim() << ", m0 " << fmt17(model.m0()) << "\n\n";
  for (const auto& method : cfg.methods) {
    const auto r = run_detail::compute_method(method, model, cfg);
    run_detail::write_heff_csv(
        fs::path(cfg.out_dir) / ("heff_" + method + ".csv"), r, model);
    report << "method " << method << "\n  formula: "
           << run_detail::formula_for(method) << "\n  eta: "
           << fmt17(r.heff.eta) << "\n";
    const Matrix& h = r.heff.matrix;
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      report << "  ";
      for (Eigen::Index j = 0; j < h.cols(); ++j)
        report << "(" << fmt17(std::real(h(i, j))) << ", "
               << fmt17(std::imag(h(i, j))) << ") ";
      report << "\n";
    }
    if (h.rows() == 2) {
      const Complex d = h(0, 0) - h(1, 1);
      report << "  diag difference: (" << fmt17(std::real(d)) << ", "
             << fmt17(std::imag(d)) << ")\n";
    }
    if (!r.history.empty()) {
      report << "  iterate history (||dV|| per step):";
      for (double v : r.history) report << " " << fmt17(v);
      report << (r.converged ? "  [converged]\n" : "  [not converged]\n");
      CsvWriter hist(fs::path(cfg.out_dir) / "iterate_history.csv");
      hist.comment("method", "iterate");
      hist.comment("tol", cfg.iterate.tol);
      hist.row({"iteration", "delta_v_norm"});
      for (size_t i = 0; i < r.history.size(); ++i)
        hist.row({std::to_string(i + 1), fmt17(r.history[i])});
    }
    report << "\n";
  }
}

inline void cmd_evolve(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.times.size() == 0)
    throw ConfigError("evolve needs a 'times' section");
  const FullModel model = cfg.build_model();
  fs::create_directories(cfg.out_dir);
  const Eigen::Index n = model.parallel_dim();
  const Vector a0 = cfg.initial_amplitudes(n);
  Vector psi0 = Vector::Zero(model.full_dim());
  psi0.head(n) = a0;

  const Trajectory exact = evolve_exact(model, psi0, cfg.times);
  run_detail::write_trajectory_csv(fs::path(cfg.out_dir) / "trajectory_exact.csv",
                                   exact, model.partition(), 0.0);

  // evenness table when the grid pairs t with -t
  {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
    for (Eigen::Index i = 0; i < cfg.times.size(); ++i) {
      if (cfg.times[i] <= 0.0) continue;
      for (Eigen::Index j = 0; j < cfg.times.size(); ++j)
        if (cfg.times[j] == -cfg.times[i]) {
          pairs.emplace_back(i, j);
          break;
        }
    }
    if (!pairs.empty()) {
      CsvWriter csv(fs::path(cfg.out_dir) / "evenness.csv");
      csv.comment("definition", "p(t) vs p(-t) under exact evolution");
      csv.row({"time", "p_plus", "p_minus", "difference"});
      const Vector ref = psi0;
      for (auto [i, j] : pairs) {
        const double pp = std::norm(ref.dot(exact.states[static_cast<size_t>(i)]));
        const double pm = std::norm(ref.dot(exact.states[static_cast<size_t>(j)]));
        csv.row({fmt17(cfg.times[i]), fmt17(pp), fmt17(pm), fmt17(pp - pm)});
      }
    }
  }

  // effective trajectories live on the nonnegative part of the grid
  std::vector<Eigen::Index> nonneg;
  for (Eigen::Index i = 0; i < cfg.times.size(); ++i)
    if (cfg.times[i] >= 0.0) nonneg.push_back(i);
  RealVector tpos(static_cast<Eigen::Index>(nonneg.size()));
  for (size_t k = 0; k < nonneg.size(); ++k)
    tpos[static_cast<Eigen::Index>(k)] = cfg.times[nonneg[k]];
  if (tpos.size() == 0) return;

  Trajectory exact_pos;
  exact_pos.times = tpos;
  exact_pos.norm_track.resize(tpos.size());
  for (size_t k = 0; k < nonneg.size(); ++k) {
    exact_pos.states.push_back(exact.states[static_cast<size_t>(nonneg[k])]);
    exact_pos.norm_track[static_cast<Eigen::Index>(k)] =
        exact.norm_track[nonneg[k]];
  }

  for (const auto& method : cfg.methods) {
    const auto r = run_detail::compute_method(method, model, cfg);
    if (r.heff.dim() != n) continue;  // onedim reductions have no n-component track
    const Trajectory eff = evolve_effective(r.heff, a0, tpos);
    run_detail::write_trajectory_csv(
        fs::path(cfg.out_dir) / ("trajectory_" + method + ".csv"), eff,
        model.partition(), r.heff.eta);
    const auto metrics = compare_trajectories(exact_pos, eff, model.partition());
    CsvWriter csv(fs::path(cfg.out_dir) / ("comparison_" + method + ".csv"));
    csv.comment("method", method);
    csv.comment("max_amplitude_error", metrics.max_amplitude_error);
    csv.comment("max_decay_law_error", metrics.max_decay_law_error);
    csv.row({"time", "amplitude_error", "decay_law_error"});
    for (const auto& row : metrics.rows)
      csv.row({fmt17(row.time), fmt17(row.amplitude_error),
               fmt17(row.decay_law_error)});
  }
}

inline void cmd_fl_estimate(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.kind != RunConfig::Kind::friedrichs_lee)
    throw ConfigError("fl-estimate needs a friedrichs_lee model section");
  fs::create_directories(cfg.out_dir);
  const auto analytic = fl_diag_difference_analytic(cfg.fl);
  const auto cv = fl_cross_validate(cfg.fl, cfg.eta);
  const double im_m12 = std::imag(cfg.fl.mass(0, 1));

  CsvWriter csv(fs::path(cfg.out_dir) / "fl_values.csv");
  csv.comment("units", "model (hbar = 1); kaon rows in MeV");
  csv.comment("eta", cv.eta);
  csv.comment("grid_points", static_cast<double>(cv.grid_points));
  csv.comment("width_normalization",
              "Gamma_jk = 2*pi*sum_n g_jn(w*) conj(g_kn(w*)), w* = m0 - mu");
  csv.row({"name", "re", "im"});
  auto put = [&](const std::string& name, Complex v) {
    csv.row({name, fmt17(std::real(v)), fmt17(std::imag(v))});
  };
  put("diag_difference_exact", analytic.exact);
  put("diag_difference_leading", analytic.approx2);
  put("diag_difference_re_im_split", analytic.approx3);
  put("diag_difference_width_form", analytic.approx4);
  put("gamma_s", analytic.gamma_s);
  put("gamma_l", analytic.gamma_l);
  put("numeric_diag_difference", cv.numeric);
  put("relative_gap", cv.relative_gap);
  put("kaon_coefficient_per_mev", fl_estimate_kaon(1.0));

  std::ofstream report(fs::path(cfg.out_dir) / "fl_report.txt");
  report << "Friedrichs-Lee sector estimates (model units, hbar = 1)\n";
  report << "mass gap m0 - mu: " << fmt17(analytic.mass_gap) << "\n";
  report << "on-shell widths: gamma_s " << fmt17(analytic.gamma_s)
         << ", gamma_l " << fmt17(analytic.gamma_l) << "\n";
  report << "diagonal splitting, exact bracket: ("
         << fmt17(std::real(analytic.exact)) << ", "
         << fmt17(std::imag(analytic.exact)) << ")\n";
  report << "diagonal splitting, leading order: ("
         << fmt17(std::real(analytic.approx2)) << ", "
         << fmt17(std::imag(analytic.approx2)) << ")\n";
  report << "width form: " << fmt17(analytic.approx4) << "\n";
  report << "numeric (improved Hamiltonian): ("
         << fmt17(std::real(cv.numeric)) << ", " << fmt17(std::imag(cv.numeric))
         << ")\n";
  report << "relative gap numeric vs exact: " << fmt17(cv.relative_gap) << "\n";
  report << "kaon scale: with tau_s = 0.89e-10 s and m0 - mu = 200 MeV the "
            "splitting is "
         << fmt17(fl_estimate_kaon(1.0))
         << " MeV per MeV of Im(m12); for this config's Im(m12) it is "
         << fmt17(fl_estimate_kaon(im_m12)) << " MeV\n";
}

inline void cmd_diagnose(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.times.size() == 0)
    throw ConfigError("diagnose needs a 'times' section");
  for (Eigen::Index i = 0; i < cfg.times.size(); ++i)
    if (cfg.times[i] < 0.0)
      throw ConfigError("diagnose probes t >= 0 only");
  const FullModel model = cfg.build_model();
  fs::create_directories(cfg.out_dir);
  Vector a0 = cfg.initial_amplitudes(model.parallel_dim());
  a0 /= a0.norm();
  const auto report = diagnose_loy_conditions(model, a0, cfg.times);
  CsvWriter csv(fs::path(cfg.out_dir) / "diagnose.csv");
  csv.comment("units", "model (hbar = 1)");
  csv.comment("definition",
              "violated means ||PH1P psi_par|| >= ||PH1Q psi_perp|| > 0 "
              "fails to hold, i.e. ratio >= 1 with a nonzero parallel term");
  csv.row({"time", "parallel_term", "perpendicular_term", "ratio", "violated",
           "php_term", "phq_term"});
  for (const auto& row : report.rows)
    csv.row({fmt17(row.time), fmt17(row.parallel_term),
             fmt17(row.perpendicular_term),
             std::isinf(row.ratio) ? "inf" : fmt17(row.ratio),
             row.violated ? "1" : "0", fmt17(row.php_term),
             fmt17(row.phq_term)});
}

inline void cmd_sweep(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  Rng rng(cfg.seed);
  struct Row {
    int index;
    std::string method;
    Complex diag;
    double rel;
  };
  std::vector<Row> rows;
  double worst_loy = 0.0, worst_loy0 = 0.0;
  for (int i = 0; i < cfg.sweep_count; ++i) {
    const FullModel model = random_cpt_model(rng);
    for (const auto& method : cfg.methods) {
      const auto r = run_detail::compute_method(method, model, cfg);
      if (r.heff.dim() != 2) continue;
      const Complex d = diag_difference(r.heff);
      const double rel = std::abs(d) / r.heff.matrix.norm();
      rows.push_back({i, method, d, rel});
      if (method == "loy") worst_loy = std::max(worst_loy, rel);
      if (method == "loy0") worst_loy0 = std::max(worst_loy0, rel);
    }
  }
  CsvWriter csv(fs::path(cfg.out_dir) / "sweep.csv");
  csv.comment("family", "random CPT-invariant two-level models");
  csv.comment("seed", static_cast<double>(cfg.seed));
  csv.comment("count", static_cast<double>(cfg.sweep_count));
  csv.comment("max_rel_diag_difference_loy", worst_loy);
  csv.comment("max_rel_diag_difference_loy0", worst_loy0);
  csv.row({"model", "method", "diag_re", "diag_im", "rel_abs"});
  for (const auto& r : rows)
    csv.row({std::to_string(r.index), r.method, fmt17(std::real(r.diag)),
             fmt17(std::imag(r.diag)), fmt17(r.rel)});
}

inline void run_command(const std::string& name, const RunConfig& cfg) {
  if (name == "heff")
    cmd_heff(cfg);
  else if (name == "evolve")
    cmd_evolve(cfg);
  else if (name == "fl-estimate")
    cmd_fl_estimate(cfg);
  else if (name == "diagnose")
    cmd_diagnose(cfg);
  else if (name == "sweep")
    cmd_sweep(cfg);
  else
    throw ConfigError("unknown command '" + name + "'");
}

}  // namespace loylab
