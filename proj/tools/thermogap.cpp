#include "thermogap/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

namespace tg = thermogap;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitUsage = 1;
constexpr int kExitValidationFail = 2;
constexpr int kExitClosedGap = 3;

struct CommonOpts {
  std::string out;
  std::string format;  // json | csv; inferred from --out extension if empty
  uint64_t seed = 7;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--out", c.out, "output file (default: stdout)");
  cmd->add_option("--format", c.format, "output format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--threads", c.threads,
                  "worker threads (overrides THERMOGAP_THREADS)");
  // documented here; the file is expanded into options before parsing
  static std::string config_doc;
  cmd->add_option("--config", config_doc, "key = value config file, # comments");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Replace `--config FILE` with the file's `key = value` lines as `--key value`
/// tokens placed right before the explicit flags, so the command line wins.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  if (path.empty()) return args;
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot open config file: " + path);
  std::vector<std::string> injected;
  std::string line;
  while (std::getline(file, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line is not key = value: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config line has an empty key: " + line);
    injected.push_back("--" + key);
    if (!value.empty()) injected.push_back(value);
  }
  // insert after the subcommand token
  const size_t at = args.empty() ? 0 : 1;
  args.insert(args.begin() + at, injected.begin(), injected.end());
  return args;
}

std::string resolve_format(const CommonOpts& c) {
  if (!c.format.empty()) return c.format;
  if (c.out.size() >= 4 && c.out.substr(c.out.size() - 4) == ".csv")
    return "csv";
  return "json";
}

void apply_threads(const CommonOpts& c) {
  if (c.threads > 0)
    setenv("THERMOGAP_THREADS", std::to_string(c.threads).c_str(), 1);
}

int emit(const CommonOpts& c, const tg::OutputRecord& rec,
         const std::vector<std::string>& extra_row_json = {}) {
  const std::string fmt = resolve_format(c);
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!c.out.empty()) {
    file.open(c.out);
    if (!file) {
      std::cerr << "cannot open output file: " << c.out << "\n";
      return kExitUsage;
    }
    os = &file;
  }
  if (fmt == "csv")
    tg::write_csv(*os, rec.table);
  else
    tg::write_json(*os, rec, extra_row_json);
  return 0;
}

tg::OutputRecord make_record(const std::string& command, const CommonOpts& c) {
  tg::OutputRecord rec;
  rec.meta_str("version", kVersion);
  rec.meta_str("command", command);
  rec.meta_int("seed", static_cast<long long>(c.seed));
  rec.meta_int("threads", c.threads);
  rec.meta_str("format", resolve_format(c));
  return rec;
}

struct LMGOpts {
  double s = 2;
  double beta_tilde = 0;
  double h_z = 1, j_x = 1, j_y = 0;
  double big_gamma = 1;
};

void add_lmg(CLI::App* cmd, LMGOpts& o, bool require_s) {
  auto* s = cmd->add_option("--s", o.s, "spin length (2s integer)");
  if (require_s) s->required();
  cmd->add_option("--beta-tilde", o.beta_tilde, "rescaled inverse temperature");
  cmd->add_option("--hz", o.h_z, "field coupling h_z");
  cmd->add_option("--jx", o.j_x, "coupling J_x");
  cmd->add_option("--jy", o.j_y, "coupling J_y");
  cmd->add_option("--gamma", o.big_gamma, "rate unit Gamma");
}

tg::LMGParams to_params(const LMGOpts& o) {
  tg::LMGParams p;
  p.s = o.s;
  p.beta_tilde = o.beta_tilde;
  p.h_z = o.h_z;
  p.j_x = o.j_x;
  p.j_y = o.j_y;
  p.big_gamma = o.big_gamma;
  return p;
}

void echo_lmg(tg::OutputRecord& rec, const LMGOpts& o) {
  rec.meta_num("s", o.s);
  rec.meta_num("beta_tilde", o.beta_tilde);
  rec.meta_num("hz", o.h_z);
  rec.meta_num("jx", o.j_x);
  rec.meta_num("jy", o.j_y);
  rec.meta_num("gamma", o.big_gamma);
}

struct KIOpts {
  int n = 10;
  double eta = -1, epsilon = -1, beta = -1;
  double coupling = 1;
  double delta = 0;
  double big_gamma = 1;
};

void add_ki(CLI::App* cmd, KIOpts& o, bool with_delta = true) {
  cmd->add_option("--n", o.n, "number of sites");
  auto* eta = cmd->add_option("--eta", o.eta, "eta = tanh(beta J)");
  auto* eps = cmd->add_option("--epsilon", o.epsilon,
                              "epsilon = sqrt(1 - tanh(2 beta J)^2)");
  auto* beta = cmd->add_option("--beta", o.beta, "inverse temperature");
  eta->excludes(eps)->excludes(beta);
  eps->excludes(beta);
  cmd->add_option("--j", o.coupling, "Ising coupling J (with --beta)");
  if (with_delta) cmd->add_option("--delta", o.delta, "kinetic coefficient");
  cmd->add_option("--gamma", o.big_gamma, "rate unit Gamma");
}

tg::ClassicalIsingChain to_chain(const KIOpts& o) {
  if (o.eta >= 0) return tg::ClassicalIsingChain::from_eta(o.n, o.eta);
  if (o.epsilon >= 0)
    return tg::ClassicalIsingChain::from_epsilon(o.n, o.epsilon);
  if (o.beta >= 0)
    return tg::ClassicalIsingChain::from_beta(o.n, o.coupling, o.beta);
  throw CLI::ValidationError("temperature",
                             "one of --eta, --epsilon, --beta is required");
}

void echo_ki(tg::OutputRecord& rec, const KIOpts& o,
             const tg::ClassicalIsingChain& chain) {
  rec.meta_int("n", o.n);
  rec.meta_num("eta", chain.eta);
  rec.meta_num("epsilon", chain.epsilon);
  rec.meta_num("delta", o.delta);
  rec.meta_num("gamma", o.big_gamma);
}

std::string gamma_json(const tg::Matrix& g) {
  std::string out = "\"gamma_opt\": [";
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    out += i == 0 ? "[" : ", [";
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      if (j) out += ", ";
      out += "[" + tg::json_number(g(i, j).real()) + ", " +
             tg::json_number(g(i, j).imag()) + "]";
    }
    out += "]";
  }
  out += "]";
  return out;
}

// ---------------------------------------------------------------------------
// validate suites

struct CheckRow {
  std::string suite, name;
  double value = 0, threshold = 0;
  bool pass = false;
};

void check(std::vector<CheckRow>& rows, const std::string& suite,
           const std::string& name, double value, double threshold) {
  rows.push_back({suite, name, value, threshold, value <= threshold});
}

void suite_quantum_db(std::vector<CheckRow>& rows) {
  for (double bt : {0.0, 5.0}) {
    tg::LMGParams p;
    p.s = 2;
    p.beta_tilde = bt;
    p.j_y = -1;
    tg::GibbsState g(tg::lmg_hamiltonian(p), p.beta());
    auto run = [&](const tg::KineticMatrix& km, const std::string& tag) {
      auto asmb = tg::lmg_assembly(p, km);
      check(rows, "quantum-db", "db_residual_bt" + std::to_string(int(bt)) + tag,
            tg::detailed_balance_residual(asmb, g), 1e-10);
      check(rows, "quantum-db", "steady_bt" + std::to_string(int(bt)) + tag,
            asmb.diagnostics.steady_state_residual, 1e-9);
    };
    run(tg::KineticMatrix::identity(3), "_canonical");
    std::mt19937_64 rng(42);
    std::normal_distribution<double> nd;
    tg::Matrix b(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) b(i, j) = tg::Complex(nd(rng), nd(rng));
    run({tg::Matrix(b.adjoint() * b)}, "_random");
  }
}

void suite_parent(std::vector<CheckRow>& rows) {
  tg::LMGParams p;
  p.s = 2;
  p.beta_tilde = 5;
  auto asmb = tg::lmg_assembly(p, tg::KineticMatrix::identity(3));
  check(rows, "parent", "hermiticity", asmb.diagnostics.parent_hermiticity,
        1e-10 * asmb.parent.norm());
  check(rows, "parent", "tfd_annihilation", asmb.diagnostics.tfd_residual,
        1e-9 * asmb.parent.norm());
  auto hp = tg::hermitian_spectrum(asmb.parent);
  check(rows, "parent", "psd", -hp.values.minCoeff(), 1e-10 * asmb.parent.norm());
  // -L and H are similar: sorted spectra agree
  Eigen::ComplexEigenSolver<tg::Matrix> ces(-asmb.lindbladian);
  tg::RealVector lv = ces.eigenvalues().real();
  std::sort(lv.data(), lv.data() + lv.size());
  double imag_max = ces.eigenvalues().imag().cwiseAbs().maxCoeff();
  check(rows, "parent", "lindbladian_real_spectrum", imag_max,
        1e-8 * asmb.parent.norm());
  check(rows, "parent", "spectra_match",
        (lv - hp.values).cwiseAbs().maxCoeff(), 1e-8 * asmb.parent.norm());
}

void suite_classical(std::vector<CheckRow>& rows) {
  auto chain = tg::ClassicalIsingChain::from_epsilon(6, 0.5);
  tg::KineticParamsKI kp{1.0, 0.3};
  auto gen = tg::build_ki1d(chain, kp);
  tg::RealVector colsum = tg::RealVector(gen.liouvillian.transpose() *
                                         tg::RealVector::Ones(gen.liouvillian.rows()));
  check(rows, "classical", "column_sums", colsum.cwiseAbs().maxCoeff(), 1e-12);
  double min_offdiag = 0;
  for (int k = 0; k < gen.liouvillian.outerSize(); ++k)
    for (tg::SparseReal::InnerIterator it(gen.liouvillian, k); it; ++it)
      if (it.row() != it.col()) min_offdiag = std::min(min_offdiag, it.value());
  check(rows, "classical", "offdiag_nonneg", -min_offdiag, 1e-14);
  tg::RealVector sq = tg::sqrt_equilibrium_vector(chain);
  tg::RealVector p = sq.array().square();
  check(rows, "classical", "stationary",
        tg::RealVector(gen.liouvillian * p).cwiseAbs().maxCoeff(), 1e-11);
  // multiflip builder must reproduce the Pauli-string construction
  tg::ClassicalHamiltonian ham;
  ham.n_sites = 6;
  for (int i = 0; i < 6; ++i) {
    tg::ClassicalTerm t;
    t.sites = {i, (i + 1) % 6};
    t.energy = [i, &chain](uint64_t cfg) {
      return -chain.coupling *
             tg::ClassicalIsingChain::spin(cfg, i, 6) *
             tg::ClassicalIsingChain::spin(cfg, i + 1, 6);
    };
    ham.terms.push_back(std::move(t));
  }
  std::vector<tg::FlipCollection> flips;
  for (int i = 0; i < 6; ++i) flips.push_back({{i}});
  auto rate = [&](int nu, uint64_t from, uint64_t) {
    const int sl = tg::ClassicalIsingChain::spin(from, nu - 1, 6);
    const int sr = tg::ClassicalIsingChain::spin(from, nu + 1, 6);
    const double pref = kp.big_gamma * (1 + kp.delta * sl * sr);
    return sl == sr ? pref / std::cosh(2 * chain.beta * chain.coupling) : pref;
  };
  auto gen2 = tg::build_multiflip(ham, chain.beta, flips, rate);
  check(rows, "classical", "multiflip_match",
        tg::RealMatrix(gen.liouvillian - gen2.liouvillian).cwiseAbs().maxCoeff(),
        1e-13);
}

void suite_bounds(std::vector<CheckRow>& rows) {
  auto chain = tg::ClassicalIsingChain::from_eta(8, 0.5);
  tg::KineticParamsKI kp{1.0, -0.2};
  auto gen = tg::build_ki1d(chain, kp, false);
  auto quotient = [&](int which) {
    tg::RealVector v = tg::variational_state(chain, which);
    return v.dot(tg::RealVector(gen.parent * v));
  };
  check(rows, "bounds", "psi3_identity",
        std::abs(quotient(3) -
                 8 * (1 + kp.delta) * (1 - chain.gamma_eq)),
        1e-10);
  check(rows, "bounds", "psi4_identity",
        std::abs(quotient(4) - 4 * (1 - kp.delta)), 1e-10);
  auto [d_opt, gap_opt] = tg::optimal_coefficients(0.5);
  double best = -1e300, best_d = 0;
  for (int i = 0; i <= 40000; ++i) {
    const double d = -4.0 + 5.0 * i / 40000.0;
    const double g = tg::delta12_bound(0.5, d);
    if (g > best) {
      best = g;
      best_d = d;
    }
  }
  check(rows, "bounds", "closed_form_delta_opt", std::abs(best_d - d_opt), 2e-4);
  check(rows, "bounds", "closed_form_gap_opt",
        std::abs(tg::delta12_bound(0.5, d_opt) - gap_opt), 1e-10);
  const double dt = tg::transition_delta(0.3);
  check(rows, "bounds", "transition_identity",
        std::abs(tg::delta12_bound(0.3, dt) - 4 * (1 - dt)), 1e-9);
}

void suite_sectors(std::vector<CheckRow>& rows) {
  auto chain = tg::ClassicalIsingChain::from_epsilon(8, 0.4);
  tg::KineticParamsKI kp{1.0, 0.2};
  auto gen = tg::build_ki1d(chain, kp, false);
  Eigen::Index total = 0;
  for (int parity : {1, -1})
    for (int k = 0; k < 8; ++k)
      total += tg::sector_basis(8, {parity, k}).cols();
  check(rows, "sectors", "dimension_sum", std::abs(double(total - 256)), 0.5);
  auto full = tg::gap_dense(tg::Matrix(gen.parent.cast<tg::Complex>()), 1);
  auto sect = tg::ki_full_gap(chain, kp);
  check(rows, "sectors", "gap_match", std::abs(full.gap - sect.gap),
        1e-9 * std::max(1.0, full.gap));
}

void suite_single_body(std::vector<CheckRow>& rows) {
  double worst_q = 0, worst_c = 0;
  for (int d = 2; d <= 8; ++d) {
    tg::RealVector e(d);
    for (int i = 0; i < d; ++i) e(i) = double(i) / (d - 1);
    tg::GibbsState g(tg::Matrix(e.cast<tg::Complex>().asDiagonal()), 1.0);
    auto q = tg::single_body_optimal(g, 1.0, tg::SystemKind::kQuantum);
    auto c = tg::single_body_optimal(g, 1.0, tg::SystemKind::kClassical);
    worst_q = std::max(worst_q,
                       std::abs(tg::gap_dense(q.parent, 1).gap -
                                double(d * d) / (d * d - 1)));
    worst_c = std::max(worst_c, std::abs(tg::gap_dense(c.parent, 1).gap -
                                         double(d) / (d - 1)));
  }
  check(rows, "single-body", "quantum_gap", worst_q, 1e-10);
  check(rows, "single-body", "classical_gap", worst_c, 1e-10);
}

std::vector<CheckRow> run_suites(const std::string& suite) {
  std::vector<CheckRow> rows;
  const bool all = suite == "all";
  if (all || suite == "quantum-db") suite_quantum_db(rows);
  if (all || suite == "parent") suite_parent(rows);
  if (all || suite == "classical") suite_classical(rows);
  if (all || suite == "bounds") suite_bounds(rows);
  if (all || suite == "sectors") suite_sectors(rows);
  if (all || suite == "single-body") suite_single_body(rows);
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thermogap: thermalization-gap toolkit for detailed-balance "
               "generators and their parent Hamiltonians"};
  app.require_subcommand(1);
  int exit_code = 0;

  // ---- lmg-gap -----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "lmg-gap", "spectral gap of the collective spin model, canonical "
                   "kinetic coefficients");
    auto common = std::make_shared<CommonOpts>();
    auto lmg = std::make_shared<LMGOpts>();
    auto residual = std::make_shared<bool>(false);
    add_common(cmd, *common);
    add_lmg(cmd, *lmg, true);
    cmd->add_flag("--with-residual", *residual,
                  "also compute the detailed-balance residual (slow for "
                  "large s)");
    cmd->callback([&exit_code, common, lmg, residual] {
      apply_threads(*common);
      auto rec = make_record("lmg-gap", *common);
      echo_lmg(rec, *lmg);
      auto p = to_params(*lmg);
      tg::LMGGapEngine engine(p);
      const double gap = engine.canonical_gap();
      rec.table.columns = {"s", "gap", "cost"};
      std::vector<double> row{lmg->s, gap, p.cost_target()};
      if (*residual) {
        auto asmb = tg::lmg_assembly(p, tg::KineticMatrix::identity(3));
        tg::GibbsState g(tg::lmg_hamiltonian(p), p.beta());
        rec.table.columns.push_back("db_residual");
        row.push_back(tg::detailed_balance_residual(asmb, g));
      }
      rec.table.add_row(row);
      exit_code = emit(*common, rec);
      if (exit_code == 0 && gap <= 1e-12 * p.cost_target())
        exit_code = kExitClosedGap;
    });
  }

  // ---- lmg-optimize ------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "lmg-optimize", "maximize the gap over kinetic coefficients at fixed "
                        "cost");
    auto common = std::make_shared<CommonOpts>();
    auto lmg = std::make_shared<LMGOpts>();
    auto restarts = std::make_shared<int>(8);
    auto budget = std::make_shared<int>(300);
    add_common(cmd, *common);
    add_lmg(cmd, *lmg, true);
    cmd->add_option("--restarts", *restarts, "optimizer restarts");
    cmd->add_option("--budget", *budget, "evaluations per restart");
    cmd->callback([&exit_code, common, lmg, restarts, budget] {
      apply_threads(*common);
      auto rec = make_record("lmg-optimize", *common);
      echo_lmg(rec, *lmg);
      rec.meta_int("restarts", *restarts);
      rec.meta_int("budget", *budget);
      auto rep = tg::lmg_optimize(to_params(*lmg), *restarts, *budget,
                                  common->seed);
      rec.table.columns = {"canonical_gap", "optimized_gap", "ratio",
                           "g00", "g01", "g02", "g11", "g12", "g22"};
      const tg::Matrix& g = rep.gamma_opt;
      rec.table.add_row({rep.canonical_gap, rep.optimized_gap, rep.ratio,
                         g(0, 0).real(), g(0, 1).real(), g(0, 2).real(),
                         g(1, 1).real(), g(1, 2).real(), g(2, 2).real()});
      exit_code = emit(*common, rec, {gamma_json(g)});
    });
  }

  // ---- ki-gap ------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "ki-gap", "full-space Liouvillian gap of the kinetic Ising chain");
    auto common = std::make_shared<CommonOpts>();
    auto ki = std::make_shared<KIOpts>();
    add_common(cmd, *common);
    add_ki(cmd, *ki);
    cmd->callback([&exit_code, common, ki] {
      apply_threads(*common);
      auto rec = make_record("ki-gap", *common);
      auto chain = to_chain(*ki);
      echo_ki(rec, *ki, chain);
      tg::KineticParamsKI kp{ki->big_gamma, ki->delta};
      auto rep = tg::ki_full_gap(chain, kp);
      rec.table.columns = {"n", "eta", "delta", "gap", "zero_modes"};
      rec.table.add_row({double(ki->n), chain.eta, ki->delta, rep.gap,
                         double(rep.zero_modes_found)});
      exit_code = emit(*common, rec);
      if (exit_code == 0 &&
          (rep.status == tg::GapStatus::kNonUniqueSteadyState ||
           rep.gap <= 1e-12 * ki->big_gamma))
        exit_code = kExitClosedGap;
    });
  }

  // ---- ki-bounds ---------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "ki-bounds", "closed-form gap bounds along a delta grid");
    auto common = std::make_shared<CommonOpts>();
    auto ki = std::make_shared<KIOpts>();
    auto grid_text = std::make_shared<std::string>();
    add_common(cmd, *common);
    add_ki(cmd, *ki, false);
    cmd->add_option("--delta-grid", *grid_text,
                    "delta grid start:stop:step")->required();
    cmd->callback([&exit_code, common, ki, grid_text] {
      apply_threads(*common);
      auto rec = make_record("ki-bounds", *common);
      auto chain = to_chain(*ki);
      echo_ki(rec, *ki, chain);
      rec.meta_str("delta_grid", *grid_text);
      rec.table.columns = {"delta", "Delta12", "Delta3", "Delta4", "full_min"};
      for (double delta : tg::parse_grid(*grid_text)) {
        try {
          auto b = tg::analytic_bounds(chain, {ki->big_gamma, delta}, ki->n);
          rec.table.add_row({delta, b.delta12, b.delta3, b.delta4, b.full_min});
        } catch (const std::exception& e) {
          rec.table.add_failed({delta}, e.what());
        }
      }
      exit_code = emit(*common, rec);
    });
  }

  // ---- ki-optimize -------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "ki-optimize", "maximize the exact finite-chain gap over delta");
    auto common = std::make_shared<CommonOpts>();
    auto ki = std::make_shared<KIOpts>();
    auto budget = std::make_shared<int>(120);
    add_common(cmd, *common);
    add_ki(cmd, *ki, false);
    cmd->add_option("--budget", *budget, "polish evaluations after the grid");
    cmd->callback([&exit_code, common, ki, budget] {
      apply_threads(*common);
      auto rec = make_record("ki-optimize", *common);
      auto chain = to_chain(*ki);
      echo_ki(rec, *ki, chain);
      tg::OptimizationProblem prob;
      prob.parametrization = tg::Parametrization::kScalarDelta;
      prob.budget = *budget;
      prob.gap_of_delta = [&](double delta) {
        return tg::ki_full_gap(chain, {ki->big_gamma, delta}).gap;
      };
      auto res = tg::optimize(prob);
      auto [d12, g12] = tg::optimal_coefficients(chain.eta);
      rec.table.columns = {"n", "eta", "delta_opt", "gap_opt",
                           "delta_opt_12", "gap_opt_12"};
      rec.table.add_row({double(ki->n), chain.eta, res.best_delta,
                         res.best_gap, d12, g12 * ki->big_gamma});
      exit_code = emit(*common, rec);
    });
  }

  // ---- single-body-opt ---------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "single-body-opt", "closed-form optimal generator for one body");
    auto common = std::make_shared<CommonOpts>();
    auto d = std::make_shared<int>(2);
    auto beta = std::make_shared<double>(1.0);
    auto span = std::make_shared<double>(1.0);
    auto gamma = std::make_shared<double>(1.0);
    auto kind = std::make_shared<std::string>("quantum");
    add_common(cmd, *common);
    cmd->add_option("--d", *d, "local dimension")->required();
    cmd->add_option("--beta", *beta, "inverse temperature");
    cmd->add_option("--span", *span, "energy span of the flat spectrum");
    cmd->add_option("--gamma", *gamma, "cost constraint Gamma");
    cmd->add_option("--kind", *kind, "quantum or classical")
        ->check(CLI::IsMember({"quantum", "classical"}));
    cmd->callback([&exit_code, common, d, beta, span, gamma, kind] {
      apply_threads(*common);
      auto rec = make_record("single-body-opt", *common);
      rec.meta_int("d", *d);
      rec.meta_num("beta", *beta);
      rec.meta_num("span", *span);
      rec.meta_num("gamma", *gamma);
      rec.meta_str("kind", *kind);
      if (*d < 2) throw CLI::ValidationError("--d", "need d >= 2");
      tg::RealVector e(*d);
      for (int i = 0; i < *d; ++i) e(i) = *span * double(i) / (*d - 1);
      tg::GibbsState g(tg::Matrix(e.cast<tg::Complex>().asDiagonal()), *beta);
      auto opt = tg::single_body_optimal(
          g, *gamma,
          *kind == "quantum" ? tg::SystemKind::kQuantum
                             : tg::SystemKind::kClassical);
      const double measured = tg::gap_dense(opt.parent, 1).gap;
      rec.table.columns = {"d", "gap", "gap_closed_form"};
      rec.table.add_row({double(*d), measured, opt.gap});
      exit_code = emit(*common, rec);
    });
  }

  // ---- validate ----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("validate", "run invariant suites");
    auto common = std::make_shared<CommonOpts>();
    auto suite = std::make_shared<std::string>("all");
    add_common(cmd, *common);
    cmd->add_option("--suite", *suite, "suite name or 'all'")
        ->check(CLI::IsMember({"all", "quantum-db", "parent", "classical",
                               "bounds", "sectors", "single-body"}));
    cmd->callback([&exit_code, common, suite] {
      apply_threads(*common);
      auto rec = make_record("validate", *common);
      rec.meta_str("suite", *suite);
      auto checks = run_suites(*suite);
      rec.table.columns = {"value", "threshold", "passed"};
      std::vector<std::string> extra;
      bool all_pass = true;
      for (const auto& c : checks) {
        rec.table.add_row({c.value, c.threshold, c.pass ? 1.0 : 0.0});
        extra.push_back("\"suite\": \"" + tg::json_escape(c.suite) +
                        "\", \"check\": \"" + tg::json_escape(c.name) + "\"");
        all_pass = all_pass && c.pass;
      }
      if (resolve_format(*common) == "csv") {
        // custom CSV so the check names survive
        std::ofstream file;
        std::ostream* os = &std::cout;
        if (!common->out.empty()) {
          file.open(common->out);
          os = &file;
        }
        *os << "suite,check,value,threshold,passed\n";
        for (const auto& c : checks)
          *os << c.suite << "," << c.name << "," << tg::format_double(c.value)
              << "," << tg::format_double(c.threshold) << ","
              << (c.pass ? 1 : 0) << "\n";
      } else {
        exit_code = emit(*common, rec, extra);
      }
      if (exit_code == 0 && !all_pass) exit_code = kExitValidationFail;
    });
  }

  // ---- sweep -------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("sweep", "figure-reproduction sweeps");
    auto common = std::make_shared<CommonOpts>();
    auto recipe = std::make_shared<std::string>();
    auto lmg = std::make_shared<LMGOpts>();
    auto opt_flag = std::make_shared<bool>(false);
    auto restarts = std::make_shared<int>(8);
    auto budget = std::make_shared<int>(300);
    auto n = std::make_shared<int>(10);
    auto epsilon = std::make_shared<double>(0.5);
    auto delta = std::make_shared<double>(-0.99);
    auto s_grid = std::make_shared<std::string>("2:20:1");
    auto delta_grid = std::make_shared<std::string>("-1:1:0.05");
    auto eps_grid = std::make_shared<std::string>("0.05:0.95:0.05");
    auto y_grid = std::make_shared<std::string>("0.05:1.95:0.05");
    auto n_grid = std::make_shared<std::string>("4:12:2");
    add_common(cmd, *common);
    cmd->add_option("--recipe", *recipe, "fig2 | fig3 | fig3b | fig4")
        ->required()
        ->check(CLI::IsMember({"fig2", "fig3", "fig3b", "fig4"}));
    add_lmg(cmd, *lmg, false);
    cmd->add_flag("--optimize", *opt_flag, "optimize per point (fig2)");
    cmd->add_option("--restarts", *restarts, "optimizer restarts");
    cmd->add_option("--budget", *budget, "evaluations per restart");
    cmd->add_option("--n", *n, "chain length (fig3/fig3b)");
    cmd->add_option("--epsilon", *epsilon, "temperature parameter (fig3/fig4)");
    cmd->add_option("--delta", *delta, "kinetic coefficient (fig4)");
    cmd->add_option("--s-grid", *s_grid, "spin grid (fig2)");
    cmd->add_option("--delta-grid", *delta_grid, "delta grid (fig3)");
    cmd->add_option("--eps-grid", *eps_grid, "epsilon grid (fig3b)");
    cmd->add_option("--y-grid", *y_grid, "y = 1 - delta grid (fig3b)");
    cmd->add_option("--n-grid", *n_grid, "chain-length grid (fig4)");
    cmd->callback([&exit_code, common, recipe, lmg, opt_flag, restarts, budget,
                   n, epsilon, delta, s_grid, delta_grid, eps_grid, y_grid,
                   n_grid] {
      apply_threads(*common);
      auto rec = make_record("sweep", *common);
      rec.meta_str("recipe", *recipe);
      if (*recipe == "fig2") {
        echo_lmg(rec, *lmg);
        rec.meta_str("s_grid", *s_grid);
        rec.meta_int("optimize", *opt_flag ? 1 : 0);
        rec.table = tg::fig2_sweep(tg::parse_grid(*s_grid), lmg->beta_tilde,
                                   lmg->h_z, lmg->j_x, lmg->j_y,
                                   lmg->big_gamma, *opt_flag, common->seed,
                                   *restarts, *budget);
      } else if (*recipe == "fig3") {
        rec.meta_int("n", *n);
        rec.meta_num("epsilon", *epsilon);
        rec.meta_str("delta_grid", *delta_grid);
        rec.table = tg::fig3_sweep(*n, *epsilon, tg::parse_grid(*delta_grid),
                                   lmg->big_gamma);
      } else if (*recipe == "fig3b") {
        rec.meta_int("n", *n);
        rec.meta_str("eps_grid", *eps_grid);
        rec.meta_str("y_grid", *y_grid);
        rec.table = tg::fig3b_surface(tg::parse_grid(*eps_grid),
                                      tg::parse_grid(*y_grid), *n,
                                      lmg->big_gamma);
      } else {
        rec.meta_num("delta", *delta);
        rec.meta_num("epsilon", *epsilon);
        rec.meta_str("n_grid", *n_grid);
        rec.table = tg::fig4_sweep(tg::parse_grid(*n_grid), *delta, *epsilon,
                                   lmg->big_gamma);
      }
      exit_code = emit(*common, rec);
    });
  }

  // config values may repeat an option the command line also sets; the last
  // occurrence (the explicit flag) wins
  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    for (CLI::Option* opt : sub->get_options())
      opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return exit_code;
}
