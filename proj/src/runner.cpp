#include "gravdec/runner.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gravdec/clifford.hpp"
#include "gravdec/fwsym.hpp"

#ifndef GRAVDEC_VERSION
#define GRAVDEC_VERSION "unknown"
#endif

namespace gravdec::runner {

namespace fs = std::filesystem;
using config::ConfigError;
using config::ExperimentConfig;
using config::format_double;
using config::InitialState;
using config::Mode;
using dynamics::Matrix;
using dynamics::System;

namespace {

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

std::string fmt(double x) { return format_double(x); }
std::string fmt(std::size_t x) { return std::to_string(x); }

struct RunContext {
  const ExperimentConfig& cfg;
  const Overrides& o;
  Outcome& out;
  fs::path dir;
  std::vector<std::string> files;

  fs::path file(const std::string& name) {
    files.push_back(name);
    return dir / name;
  }
  void check(std::string name, double value, double limit, bool pass) {
    out.checks.push_back({std::move(name), value, limit, pass});
  }
  void note(std::string s) { out.notes.push_back(std::move(s)); }
};

System make_system(const ExperimentConfig& cfg) {
  dynamics::SystemOptions so;
  so.h0.include_rest_mass = cfg.run.include_rest_mass;
  so.include_Hr = cfg.run.include_hr;
  so.couplings = cfg.run.couplings;
  return System(cfg.make_grid(), cfg.units(), cfg.make_em(), so);
}

std::size_t wrap(int k, int n) { return static_cast<std::size_t>(((k % n) + n) % n); }

double max_abs_field(const std::array<std::vector<double>, 3>& f) {
  double m = 0;
  for (std::size_t s = 0; !f[0].empty() && s < f[0].size(); ++s) {
    double sq = 0;
    for (const auto& c : f)
      if (!c.empty()) sq += c[s] * c[s];
    m = std::max(m, std::sqrt(sq));
  }
  return m;
}

double expectation(const dynamics::Operator& H, const CVec& v) {
  const CVec w = H.apply(v);
  cplx e = 0;
  for (std::size_t i = 0; i < v.size(); ++i) e += std::conj(v[i]) * w[i];
  return e.real();
}

diagnostics::StateSummary summarize(const ExperimentConfig& cfg, const System& sys) {
  const Grid g = sys.grid();
  const auto& st = cfg.state;
  diagnostics::StateSummary s;
  s.A = max_abs_field(sys.em().A);
  s.B = max_abs_field(sys.em().B);
  switch (st.kind) {
    case InitialState::superposition: {
      const auto a = static_cast<std::size_t>(st.site_a), b = static_cast<std::size_t>(st.site_b);
      s.delta_E = std::abs(expectation(sys.H(), dynamics::position_state(g, a, st.spin)) -
                           expectation(sys.H(), dynamics::position_state(g, b, st.spin)));
      const auto off = g.offset(a, b);
      double d2 = 0;
      for (int ax = 0; ax < g.dim; ++ax) {
        const int o = std::min(off[static_cast<std::size_t>(ax)], g.n - off[static_cast<std::size_t>(ax)]);
        d2 += static_cast<double>(o) * o;
      }
      s.delta_x = std::sqrt(d2) * g.spacing;
      break;
    }
    case InitialState::plane_wave:
    case InitialState::plane_wave_pair: {
      const double ka = std::abs(g.wavenumber(static_cast<int>(wrap(st.k_a, g.n))));
      const double kb = std::abs(g.wavenumber(static_cast<int>(wrap(st.k_b, g.n))));
      s.p = sys.units().hbar * (st.kind == InitialState::plane_wave ? ka : std::max(ka, kb));
      if (st.kind == InitialState::plane_wave_pair)
        s.delta_E = std::abs(expectation(sys.H(), dynamics::plane_wave(g, {st.k_a, 0, 0}, st.spin)) -
                             expectation(sys.H(), dynamics::plane_wave(g, {st.k_b, 0, 0}, st.spin)));
      break;
    }
    case InitialState::position: break;
  }
  return s;
}

// ---------------------------------------------------------------------------
// CSV helpers

void write_rho(Csv& csv, double t, const Matrix& rho) {
  for (Eigen::Index i = 0; i < rho.rows(); ++i)
    for (Eigen::Index j = 0; j < rho.cols(); ++j)
      csv.row({fmt(t), std::to_string(i), std::to_string(j), fmt(rho(i, j).real()), fmt(rho(i, j).imag())});
}

void write_coherence_and_fit(RunContext& rc, const System& sys, const Preparation& prep,
                             const std::vector<double>& times, const std::vector<Matrix>& snaps) {
  const auto series = diagnostics::coherence_series(times, snaps, prep.basis, prep.pair, sys);
  {
    Csv csv(rc.file("coherence.csv"), {"t", "coherence"});
    for (std::size_t k = 0; k < series.times.size(); ++k) csv.row({fmt(series.times[k]), fmt(series.values[k])});
  }
  rc.note("coherence pair (" + std::to_string(prep.pair.first) + ", " + std::to_string(prep.pair.second) + ") in the " +
          diagnostics::basis_name(prep.basis) + " basis");
  try {
    const auto f = diagnostics::fit_decay_rate(series);
    Csv csv(rc.file("fit.csv"), {"basis", "a", "b", "gamma", "ci95", "r2", "points", "truncated"});
    csv.row({diagnostics::basis_name(prep.basis), fmt(prep.pair.first), fmt(prep.pair.second), fmt(f.gamma), fmt(f.ci95),
             fmt(f.r2), fmt(f.points), f.truncated ? "true" : "false"});
    rc.note("fitted decay rate " + fmt(f.gamma) + " +- " + fmt(f.ci95));
  } catch (const std::invalid_argument& e) {
    rc.note(std::string("decay fit skipped: ") + e.what());
  }
}

void master_checks(RunContext& rc, const dynamics::MasterResult& r) {
  rc.check("trace_drift", r.max_trace_drift, 1e-10, r.max_trace_drift < 1e-10);
  rc.check("hermiticity_drift", r.max_hermiticity_drift, 1e-10, r.max_hermiticity_drift < 1e-10);
  rc.check("min_eigenvalue", r.min_eigenvalue, -1e-8, r.min_eigenvalue >= -1e-8);
}

std::vector<double> record_times(const ExperimentConfig& cfg) {
  const auto steps = static_cast<std::size_t>(std::llround(cfg.run.T / cfg.run.dt));
  std::vector<double> t;
  for (std::size_t k = 0; k <= steps; k += cfg.run.record_every) t.push_back(static_cast<double>(k) * cfg.run.dt);
  if (steps % cfg.run.record_every != 0) t.push_back(static_cast<double>(steps) * cfg.run.dt);
  return t;
}

// ---------------------------------------------------------------------------
// Modes

void run_trajectories(RunContext& rc) {
  const auto& cfg = rc.cfg;
  const System sys = make_system(cfg);
  const auto prep = prepare_state(cfg);
  const auto r = dynamics::ensemble_average(prep.psi, cfg.noise, sys, cfg.run.T, cfg.run.dt, cfg.run.seed,
                                            cfg.run.n_traj, 0, rc.o.threads);
  {
    Csv csv(rc.file("rho.csv"), {"t", "i", "j", "re", "im", "se_re", "se_im"});
    for (Eigen::Index i = 0; i < r.mean.rows(); ++i)
      for (Eigen::Index j = 0; j < r.mean.cols(); ++j)
        csv.row({fmt(cfg.run.T), std::to_string(i), std::to_string(j), fmt(r.mean(i, j).real()),
                 fmt(r.mean(i, j).imag()), fmt(r.se_re(i, j)), fmt(r.se_im(i, j))});
  }
  const Matrix rho0 = dynamics::projector(prep.psi);
  {
    const diagnostics::BasisMap map(sys, prep.basis);
    Csv csv(rc.file("coherence.csv"), {"t", "coherence"});
    for (const auto& [t, rho] : {std::pair<double, const Matrix*>{0.0, &rho0}, {cfg.run.T, &r.mean}}) {
      const Matrix m = map.transform(*rho);
      csv.row({fmt(t), fmt(std::abs(m(static_cast<Eigen::Index>(prep.pair.first), static_cast<Eigen::Index>(prep.pair.second))))});
    }
  }
  const double steps = cfg.run.T / cfg.run.dt;
  const double limit = 1e-8 * std::max(1.0, steps / 1000.0);
  rc.check("norm_drift", r.max_norm_drift, limit, r.max_norm_drift < limit);
  rc.note("trajectories " + std::to_string(r.n_traj) + ", threads " + std::to_string(rc.o.threads));
}

dynamics::MasterOptions master_options(const ExperimentConfig& cfg) {
  dynamics::MasterOptions mo;
  mo.T = cfg.run.T;
  mo.dt = cfg.run.dt;
  mo.record_every = cfg.run.record_every;
  return mo;
}

void write_master(RunContext& rc, const System& sys, const Preparation& prep, const dynamics::MasterResult& r) {
  {
    Csv csv(rc.file("rho.csv"), {"t", "i", "j", "re", "im"});
    for (std::size_t k = 0; k < r.times.size(); ++k) write_rho(csv, r.times[k], r.snapshots[k]);
  }
  write_coherence_and_fit(rc, sys, prep, r.times, r.snapshots);
  master_checks(rc, r);
}

void run_master(RunContext& rc) {
  const System sys = make_system(rc.cfg);
  const auto prep = prepare_state(rc.cfg);
  const auto r = dynamics::evolve_master(dynamics::projector(prep.psi), rc.cfg.noise, sys, master_options(rc.cfg));
  write_master(rc, sys, prep, r);
}

void run_position_limit(RunContext& rc) {
  const auto& cfg = rc.cfg;
  const System sys = make_system(cfg);
  const auto regime = diagnostics::classify_regime(cfg.noise, summarize(cfg, sys), sys.units());
  if (regime != diagnostics::Regime::position)
    rc.note("warning: the configuration classifies as " + diagnostics::regime_name(regime) + ", not position");
  const auto prep = prepare_state(cfg);
  const auto r = dynamics::evolve_position_limit(dynamics::projector(prep.psi), cfg.noise, sys, master_options(cfg));
  write_master(rc, sys, prep, r);
  if (cfg.state.kind == InitialState::superposition && cfg.noise.lambda_rule == noise::LambdaRule::fixed &&
      max_abs_field(sys.em().B) == 0.0)
    rc.note("closed-form rate " + fmt(dynamics::position_decay_rate(cfg.noise, sys, static_cast<std::size_t>(cfg.state.site_a),
                                                                   static_cast<std::size_t>(cfg.state.site_b),
                                                                   cfg.noise.lambda_fixed)));
}

void run_momentum_limit(RunContext& rc) {
  const auto& cfg = rc.cfg;
  const System sys = make_system(cfg);
  const auto prep = prepare_state(cfg);
  const Matrix rho0 = dynamics::projector(prep.psi);
  dynamics::MasterResult r;
  r.times = record_times(cfg);
  r.min_eigenvalue = 1.0;
  for (double t : r.times) {
    r.snapshots.push_back(dynamics::evolve_momentum_limit(rho0, cfg.noise, sys, t));
    const Matrix& m = r.snapshots.back();
    r.max_trace_drift = std::max(r.max_trace_drift, std::abs(m.trace() - 1.0));
    r.max_hermiticity_drift = std::max(r.max_hermiticity_drift, (m - m.adjoint()).cwiseAbs().maxCoeff());
    r.min_eigenvalue = std::min(r.min_eigenvalue, Eigen::SelfAdjointEigenSolver<Matrix>(m, Eigen::EigenvaluesOnly).eigenvalues()(0));
  }
  r.rho = r.snapshots.back();
  write_master(rc, sys, prep, r);
}

void emit_match(Csv& csv, const std::string& check, const fwsym::TermMatch& m) {
  for (const auto& s : m.matched) csv.row({check, "matched", "\"" + s + "\""});
  for (const auto& s : m.missing) csv.row({check, "missing", "\"" + s + "\""});
  for (const auto& s : m.unexpected) csv.row({check, "unexpected", "\"" + s + "\""});
}

void run_fw_verify(RunContext& rc) {
  using namespace fwsym;
  Csv csv(rc.file("terms.csv"), {"check", "status", "term"});

  const auto free = compare_terms(fw_reduce(dirac_hamiltonian({false, false}), 4), free_kinetic_tower());
  emit_match(csv, "free", free);
  rc.check("free_mismatches", static_cast<double>(free.missing.size() + free.unexpected.size()), 0, free.pass());

  const auto reduced = project_large_component(fw_reduce(dirac_hamiltonian({true, false}), 4));
  const auto gravity = compare_terms(sector(reduced, 1, false, false, 2),
                                     sector(boson_fermion_gravity_coupling(), 1, false, false));
  emit_match(csv, "gravity", gravity);
  rc.check("gravity_mismatches", static_cast<double>(gravity.missing.size() + gravity.unexpected.size()), 0,
           gravity.pass());

  const auto charge = charge_transform_check();
  for (const auto& t : charge.residue.terms()) csv.row({"charge", "residue", "\"" + t.to_string() + "\""});
  rc.check("charge_residue_terms", static_cast<double>(charge.residue.size()), 0, charge.pass);
}

void run_identities(RunContext& rc) {
  const auto r = clifford::verify_identity_suite();
  Csv csv(rc.file("identities.csv"), {"checks", "failures"});
  csv.row({std::to_string(r.checks), std::to_string(r.failures.size())});
  for (const auto& f : r.failures) rc.note("identity failed: " + f);
  rc.check("identity_failures", static_cast<double>(r.failures.size()), 0, r.pass);
}

void run_noise_stats(RunContext& rc) {
  const auto& cfg = rc.cfg;
  const Grid g = cfg.make_grid();
  const double lambda = noise::lambda_of(cfg.noise, cfg.run.T);
  noise::StatisticsAccumulator acc(cfg.noise, g, cfg.run.dt, lambda);
  for (std::uint64_t k = 0; k < cfg.run.samples; ++k)
    acc.add(noise::sample_step(cfg.noise, g, cfg.run.dt, {cfg.run.seed, 0}, k, lambda));
  const auto r = acc.report();
  {
    Csv csv(rc.file("stats.csv"), {"component", "quantity", "displacement", "value", "se", "expected", "z"});
    for (const auto& c : r.components) {
      const auto name = noise::component_name(c.component);
      csv.row({name, "mean", "0", fmt(c.mean.value), fmt(c.mean.se), fmt(c.mean.expected), fmt(c.mean.z())});
      for (std::size_t d = 0; d < c.two_point.size(); ++d) {
        const auto& e = c.two_point[d];
        csv.row({name, "two_point", fmt(d), fmt(e.value), fmt(e.se), fmt(e.expected), fmt(e.z())});
      }
      rc.check("two_point_p_" + name, c.two_point_p, 0.0027, c.two_point_p > 0.0027);
    }
  }
  {
    Csv csv(rc.file("cross.csv"), {"a", "b", "value", "se", "z", "flagged"});
    for (const auto& x : r.cross)
      csv.row({noise::component_name(x.a), noise::component_name(x.b), fmt(x.covariance.value), fmt(x.covariance.se),
               fmt(x.covariance.z()), x.flagged ? "true" : "false"});
  }
  rc.check("mean_p", r.mean_p, 0.0027, r.mean_p > 0.0027);
  rc.check("cross_p", r.cross_p, 0.0027, r.cross_p > 0.0027);
  rc.note("samples " + std::to_string(r.samples));
}

void run_compare_models(RunContext& rc) {
  const auto& cfg = rc.cfg;
  const Grid g = cfg.make_grid();
  const auto em = cfg.make_em();
  const double lambda = noise::lambda_of(cfg.noise, cfg.run.T);
  std::vector<diagnostics::TermDiff> worst;
  double max_diff = 0;
  for (std::uint64_t k = 0; k < cfg.run.n_traj; ++k) {
    const auto h = noise::sample_step(cfg.noise, g, cfg.run.dt, {cfg.run.seed, 0}, k, lambda);
    const auto r = diagnostics::compare_models(g, cfg.units(), em, h);
    if (worst.empty()) worst = r.terms;
    for (std::size_t i = 0; i < worst.size(); ++i) worst[i].diff = std::max(worst[i].diff, r.terms[i].diff);
    max_diff = std::max(max_diff, r.max_abs_diff);
  }
  Csv csv(rc.file("terms.csv"), {"term", "diff"});
  for (const auto& t : worst) csv.row({t.term, fmt(t.diff)});
  csv.row({"total", fmt(max_diff)});
  rc.check("max_abs_diff", max_diff, 1e-12, max_diff < 1e-12);
  rc.note("samples " + std::to_string(cfg.run.n_traj));
}

void write_manifest(RunContext& rc) {
  std::ofstream m(rc.dir / "manifest.ini", std::ios::binary);
  m << "[manifest]\n"
    << "version = " << GRAVDEC_VERSION << "\n"
    << "mode = " << config::mode_name(rc.cfg.run.mode) << "\n"
    << "seed = " << rc.cfg.run.seed << "\n"
    << "threads = " << rc.o.threads << "\n"
    << "outputs =";
  for (const auto& f : rc.files) m << " " << f;
  m << "\n\n" << config::serialize(rc.cfg);
}

void write_summary(const fs::path& dir, const ExperimentConfig& cfg, const Outcome& out) {
  std::ofstream s(dir / "summary.txt", std::ios::binary);
  s << "mode: " << config::mode_name(cfg.run.mode) << "\n";
  for (const auto& c : out.checks)
    s << "check " << c.name << " = " << fmt(c.value) << " (limit " << fmt(c.limit) << ") " << (c.pass ? "PASS" : "FAIL")
      << "\n";
  for (const auto& n : out.notes) s << "note: " << n << "\n";
  if (!out.error.empty()) s << "error: " << out.error << "\n";
  s << "result: " << (out.exit_code == kExitOk ? "PASS" : "FAIL") << " (exit " << out.exit_code << ")\n";
}

}  // namespace

Preparation prepare_state(const ExperimentConfig& cfg) {
  const Grid g = cfg.make_grid();
  const auto& st = cfg.state;
  const std::size_t N = g.sites();
  const std::size_t off = static_cast<std::size_t>(st.spin) * N;
  Preparation p;
  auto sum = [](const CVec& a, const CVec& b) {
    CVec v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i] + b[i];
    return dynamics::normalized(v);
  };
  switch (st.kind) {
    case InitialState::superposition:
      p.psi = sum(dynamics::position_state(g, static_cast<std::size_t>(st.site_a), st.spin),
                  dynamics::position_state(g, static_cast<std::size_t>(st.site_b), st.spin));
      p.pair = {off + static_cast<std::size_t>(st.site_a), off + static_cast<std::size_t>(st.site_b)};
      break;
    case InitialState::position:
      p.psi = dynamics::position_state(g, static_cast<std::size_t>(st.site_a), st.spin);
      p.pair = {off + static_cast<std::size_t>(st.site_a), off + static_cast<std::size_t>(st.site_b)};
      break;
    case InitialState::plane_wave:
      p.psi = dynamics::plane_wave(g, {st.k_a, 0, 0}, st.spin);
      p.basis = diagnostics::Basis::momentum;
      p.pair = {off + wrap(st.k_a, g.n), off + wrap(st.k_b, g.n)};
      break;
    case InitialState::plane_wave_pair:
      p.psi = sum(dynamics::plane_wave(g, {st.k_a, 0, 0}, st.spin), dynamics::plane_wave(g, {st.k_b, 0, 0}, st.spin));
      p.basis = diagnostics::Basis::momentum;
      p.pair = {off + wrap(st.k_a, g.n), off + wrap(st.k_b, g.n)};
      break;
  }
  return p;
}

std::string resolve_out_dir(const ExperimentConfig& cfg, const Overrides& o) {
  if (o.out_dir && !o.out_dir->empty()) return *o.out_dir;
  if (!cfg.output.directory.empty()) return cfg.output.directory;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "gravdec-out";
}

Outcome run(ExperimentConfig cfg, const Overrides& o) {
  if (o.seed) cfg.run.seed = *o.seed;
  Outcome out;
  out.out_dir = resolve_out_dir(cfg, o);
  RunContext rc{cfg, o, out, fs::path(out.out_dir), {}};
  try {
    fs::create_directories(rc.dir);
  } catch (const std::exception& e) {
    out.exit_code = kExitError;
    out.error = e.what();
    return out;
  }
  try {
    switch (cfg.run.mode) {
      case Mode::trajectories: run_trajectories(rc); break;
      case Mode::master: run_master(rc); break;
      case Mode::position_limit: run_position_limit(rc); break;
      case Mode::momentum_limit: run_momentum_limit(rc); break;
      case Mode::fw_verify: run_fw_verify(rc); break;
      case Mode::identities: run_identities(rc); break;
      case Mode::noise_stats: run_noise_stats(rc); break;
      case Mode::compare_models: run_compare_models(rc); break;
    }
    for (const auto& c : out.checks)
      if (!c.pass) out.exit_code = kExitInvariant;
  } catch (const ConfigError& e) {
    out.exit_code = kExitSchema;
    out.error = e.what();
  } catch (const noise::SpecError& e) {
    out.exit_code = kExitSchema;
    out.error = e.what();
  } catch (const dynamics::GuardError& e) {
    out.exit_code = kExitGuard;
    out.error = e.what();
  } catch (const dynamics::StepSizeError& e) {
    out.exit_code = kExitGuard;
    out.error = e.what();
  } catch (const dynamics::InvariantError& e) {
    out.exit_code = kExitInvariant;
    out.error = e.what();
  } catch (const std::exception& e) {
    out.exit_code = kExitError;
    out.error = e.what();
  }
  write_manifest(rc);
  write_summary(rc.dir, cfg, out);
  return out;
}

Outcome run_file(const std::string& path, const Overrides& o) {
  try {
    return run(config::load(path), o);
  } catch (const ConfigError& e) {
    Outcome out;
    out.exit_code = kExitSchema;
    out.error = e.what();
    return out;
  }
}

double spectral_radius(const System& sys, int iterations) {
  CVec v(sys.dim());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = {std::cos(0.7 * static_cast<double>(i)) + 1.1, std::sin(1.3 * static_cast<double>(i))};
  v = dynamics::normalized(v);
  double est = 0;
  for (int it = 0; it < iterations; ++it) {
    CVec w = sys.H().apply(v);
    double n2 = 0;
    for (const auto& z : w) n2 += std::norm(z);
    est = std::sqrt(n2);
    if (est == 0) return 0;
    for (auto& z : w) z /= est;
    v = std::move(w);
  }
  return est;
}

std::string Validation::text() const {
  std::ostringstream s;
  for (const auto& e : errors) s << "error: " << e << "\n";
  for (const auto& w : warnings) s << "warning: " << w << "\n";
  for (const auto& n : notes) s << "note: " << n << "\n";
  if (errors.empty()) s << "ok\n";
  return s.str();
}

Validation validate(const ExperimentConfig& cfg) {
  Validation v;
  const Grid g = cfg.make_grid();
  const std::size_t dim = 2 * g.sites();
  const Mode mode = cfg.run.mode;
  const bool dynamic = mode == Mode::trajectories || config::needs_dense(mode);

  if (config::needs_dense(mode) && dim > dynamics::kMaxDenseDim) {
    v.errors.push_back("dense guard: 2N = " + std::to_string(dim) + " exceeds " + std::to_string(dynamics::kMaxDenseDim) +
                       " for mode " + config::mode_name(mode));
    v.exit_code = kExitGuard;
    return v;
  }
  const auto em = cfg.make_em();
  if ((mode == Mode::momentum_limit || mode == Mode::compare_models) && !(max_abs_field(em.A) == 0 && max_abs_field(em.B) == 0)) {
    v.errors.push_back("mode " + config::mode_name(mode) + " requires A = 0 and B = 0");
    v.exit_code = kExitGuard;
    return v;
  }
  if (!dynamic) return v;

  const System sys = make_system(cfg);
  const double rho = spectral_radius(sys);
  v.notes.push_back("coherent spectral radius estimate " + fmt(rho));
  const double u = cfg.units().hbar;
  if (cfg.run.dt * rho / u > 1.0) {
    const double target = 0.5 * u / rho;
    const double steps = std::ceil(cfg.run.T / target);
    v.suggested_dt = cfg.run.T / steps;
    v.warnings.push_back("dt = " + fmt(cfg.run.dt) + " does not resolve hbar/|H| = " + fmt(u / rho) +
                         "; suggested dt = " + fmt(*v.suggested_dt));
  }
  const auto regime = diagnostics::classify_regime(cfg.noise, summarize(cfg, sys), sys.units());
  v.notes.push_back("regime " + diagnostics::regime_name(regime));
  if (mode == Mode::position_limit && regime != diagnostics::Regime::position)
    v.warnings.push_back("position-limit run outside the position regime (" + diagnostics::regime_name(regime) + ")");
  if (mode == Mode::momentum_limit && regime != diagnostics::Regime::momentum)
    v.warnings.push_back("momentum-limit run outside the momentum regime (" + diagnostics::regime_name(regime) + ")");
  return v;
}

Validation validate_file(const std::string& path) {
  try {
    return validate(config::load(path));
  } catch (const ConfigError& e) {
    Validation v;
    v.errors.push_back(std::string("schema: ") + e.what());
    v.exit_code = kExitSchema;
    return v;
  }
}

}  // namespace gravdec::runner
