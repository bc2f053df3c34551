#include "gravdec/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace gravdec::config {

namespace pt = boost::property_tree;
using noise::Component;
using noise::KernelType;

std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

namespace {

template <class E>
struct Names {
  std::vector<std::pair<E, std::string>> table;

  const std::string& name(E e) const {
    for (const auto& [k, v] : table)
      if (k == e) return v;
    throw std::logic_error("unnamed enumerator");
  }
  E value(const std::string& s, const std::string& key) const {
    for (const auto& [k, v] : table)
      if (v == s) return k;
    std::string allowed;
    for (const auto& [k, v] : table) allowed += (allowed.empty() ? "" : ", ") + v;
    throw ConfigError(key + ": '" + s + "' is not one of " + allowed);
  }
};

const Names<Mode> kModes{{{Mode::trajectories, "trajectories"},
                          {Mode::master, "master"},
                          {Mode::position_limit, "position-limit"},
                          {Mode::momentum_limit, "momentum-limit"},
                          {Mode::fw_verify, "fw-verify"},
                          {Mode::identities, "identities"},
                          {Mode::noise_stats, "noise-stats"},
                          {Mode::compare_models, "compare-models"}}};
const Names<EMPreset> kPresets{{{EMPreset::off, "off"},
                                {EMPreset::uniform_b, "uniform-B"},
                                {EMPreset::coulomb_like, "coulomb-like"}}};
const Names<InitialState> kStates{{{InitialState::superposition, "superposition"},
                                   {InitialState::plane_wave, "plane-wave"},
                                   {InitialState::plane_wave_pair, "plane-wave-pair"},
                                   {InitialState::position, "position"}}};
const Names<KernelType> kKernels{{{KernelType::gaussian, "gaussian"},
                                  {KernelType::exponential, "exponential"},
                                  {KernelType::delta, "delta"}}};
const Names<noise::LambdaRule> kLambda{{{noise::LambdaRule::min_tau_t, "min"}, {noise::LambdaRule::fixed, "fixed"}}};
const Names<dynamics::CouplingSet> kCouplings{
    {{dynamics::CouplingSet::hamiltonian, "hamiltonian"}, {dynamics::CouplingSet::xi, "xi"}}};

const std::array<std::string, 3> kBlockSuffix{"00", "0i", "ij"};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& s, const std::string& key) {
  const std::string v = trim(s);
  double x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || r.ec != std::errc{} || r.ptr != v.data() + v.size() || !std::isfinite(x))
    throw ConfigError(key + ": '" + s + "' is not a finite number");
  return x;
}

template <class I>
I to_integer(const std::string& s, const std::string& key) {
  const std::string v = trim(s);
  I x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || r.ec != std::errc{} || r.ptr != v.data() + v.size())
    throw ConfigError(key + ": '" + s + "' is not an integer in range");
  return x;
}

bool to_bool(const std::string& s, const std::string& key) {
  const std::string v = trim(s);
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": '" + s + "' is not true or false");
}

std::array<double, 3> to_vec3(const std::string& s, const std::string& key) {
  std::istringstream in(s);
  std::array<double, 3> v{};
  std::string tok;
  int n = 0;
  while (in >> tok) {
    if (n == 3) throw ConfigError(key + ": expected three numbers");
    v[static_cast<std::size_t>(n++)] = to_double(tok, key);
  }
  if (n != 3) throw ConfigError(key + ": expected three numbers");
  return v;
}

std::array<bool, noise::kComponents> to_active(const std::string& s, const std::string& key) {
  std::array<bool, noise::kComponents> a{};
  std::istringstream in(s);
  std::string tok;
  bool any = false;
  while (in >> tok) {
    any = true;
    if (tok == "none") continue;
    if (tok == "all") {
      a.fill(true);
      continue;
    }
    bool found = false;
    for (int c = 0; c < noise::kComponents; ++c)
      if (noise::component_name(static_cast<Component>(c)) == tok) {
        a[static_cast<std::size_t>(c)] = true;
        found = true;
      }
    if (!found) throw ConfigError(key + ": unknown component '" + tok + "'");
  }
  if (!any) throw ConfigError(key + ": empty (use 'none')");
  return a;
}

std::string active_string(const std::array<bool, noise::kComponents>& a) {
  std::string out;
  for (int c = 0; c < noise::kComponents; ++c)
    if (a[static_cast<std::size_t>(c)]) out += (out.empty() ? "" : " ") + noise::component_name(static_cast<Component>(c));
  return out.empty() ? "none" : out;
}

// One entry per accepted key: how to read it and how to write it back.
struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> read;
  std::function<std::string(const ExperimentConfig&)> write;
};

using Schema = std::vector<std::pair<std::string, std::vector<Field>>>;

template <class T>
Field dbl(std::string key, T getter) {
  return {key, [getter](ExperimentConfig& c, const std::string& v, const std::string& k) { getter(c) = to_double(v, k); },
          [getter](const ExperimentConfig& c) { return format_double(getter(c)); }};
}

template <class I, class T>
Field integer(std::string key, T getter) {
  return {key, [getter](ExperimentConfig& c, const std::string& v, const std::string& k) { getter(c) = to_integer<I>(v, k); },
          [getter](const ExperimentConfig& c) { return std::to_string(getter(c)); }};
}

template <class T>
Field boolean(std::string key, T getter) {
  return {key, [getter](ExperimentConfig& c, const std::string& v, const std::string& k) { getter(c) = to_bool(v, k); },
          [getter](const ExperimentConfig& c) { return std::string(getter(c) ? "true" : "false"); }};
}

template <class E, class T>
Field named(std::string key, const Names<E>& names, T getter) {
  return {key,
          [&names, getter](ExperimentConfig& c, const std::string& v, const std::string& k) { getter(c) = names.value(trim(v), k); },
          [&names, getter](const ExperimentConfig& c) { return names.name(getter(c)); }};
}

const Schema& schema() {
  static const Schema s = [] {
    Schema sc;
    sc.push_back({"grid",
                  {integer<int>("dim", [](auto& c) -> auto& { return c.grid.dim; }),
                   integer<int>("n", [](auto& c) -> auto& { return c.grid.n; }),
                   dbl("spacing", [](auto& c) -> auto& { return c.grid.spacing; })}});
    sc.push_back({"scales",
                  {dbl("hbar", [](auto& c) -> auto& { return c.scales.hbar; }),
                   dbl("c", [](auto& c) -> auto& { return c.scales.c; }),
                   dbl("m", [](auto& c) -> auto& { return c.scales.m; }),
                   dbl("e", [](auto& c) -> auto& { return c.scales.e; }),
                   dbl("mass", [](auto& c) -> auto& { return c.scales.mass; }),
                   dbl("length", [](auto& c) -> auto& { return c.scales.length; }),
                   dbl("time", [](auto& c) -> auto& { return c.scales.time; })}});
    sc.push_back({"em",
                  {named("preset", kPresets, [](auto& c) -> auto& { return c.em.preset; }),
                   {"B", [](ExperimentConfig& c, const std::string& v, const std::string& k) { c.em.B = to_vec3(v, k); },
                    [](const ExperimentConfig& c) {
                      return format_double(c.em.B[0]) + " " + format_double(c.em.B[1]) + " " + format_double(c.em.B[2]);
                    }},
                   dbl("charge", [](auto& c) -> auto& { return c.em.charge; }),
                   dbl("softening", [](auto& c) -> auto& { return c.em.softening; })}});
    std::vector<Field> nf{
        dbl("alpha", [](auto& c) -> auto& { return c.noise.alpha; }),
        dbl("tau_c", [](auto& c) -> auto& { return c.noise.tau_c; }),
        named("lambda_rule", kLambda, [](auto& c) -> auto& { return c.noise.lambda_rule; }),
        dbl("lambda", [](auto& c) -> auto& { return c.noise.lambda_fixed; }),
        {"active", [](ExperimentConfig& c, const std::string& v, const std::string& k) { c.noise.active = to_active(v, k); },
         [](const ExperimentConfig& c) { return active_string(c.noise.active); }}};
    for (std::size_t b = 0; b < 3; ++b) {
      nf.push_back(named("kernel_" + kBlockSuffix[b], kKernels,
                         [b](auto& c) -> auto& { return c.noise.kernels[b].type; }));
      nf.push_back(dbl("ell_" + kBlockSuffix[b], [b](auto& c) -> auto& { return c.noise.kernels[b].ell; }));
      nf.push_back(dbl("scale_" + kBlockSuffix[b], [b](auto& c) -> auto& { return c.noise.block_scale[b]; }));
    }
    sc.push_back({"noise", nf});
    sc.push_back({"state",
                  {named("kind", kStates, [](auto& c) -> auto& { return c.state.kind; }),
                   integer<int>("site_a", [](auto& c) -> auto& { return c.state.site_a; }),
                   integer<int>("site_b", [](auto& c) -> auto& { return c.state.site_b; }),
                   integer<int>("k_a", [](auto& c) -> auto& { return c.state.k_a; }),
                   integer<int>("k_b", [](auto& c) -> auto& { return c.state.k_b; }),
                   integer<int>("spin", [](auto& c) -> auto& { return c.state.spin; })}});
    sc.push_back({"run",
                  {named("mode", kModes, [](auto& c) -> auto& { return c.run.mode; }),
                   dbl("T", [](auto& c) -> auto& { return c.run.T; }),
                   dbl("dt", [](auto& c) -> auto& { return c.run.dt; }),
                   integer<std::uint64_t>("n_traj", [](auto& c) -> auto& { return c.run.n_traj; }),
                   integer<std::uint64_t>("seed", [](auto& c) -> auto& { return c.run.seed; }),
                   integer<std::uint64_t>("record_every", [](auto& c) -> auto& { return c.run.record_every; }),
                   integer<std::uint64_t>("samples", [](auto& c) -> auto& { return c.run.samples; }),
                   named("couplings", kCouplings, [](auto& c) -> auto& { return c.run.couplings; }),
                   boolean("include_hr", [](auto& c) -> auto& { return c.run.include_hr; }),
                   boolean("include_rest_mass", [](auto& c) -> auto& { return c.run.include_rest_mass; })}});
    sc.push_back({"output",
                  {{"directory", [](ExperimentConfig& c, const std::string& v, const std::string&) { c.output.directory = trim(v); },
                    [](const ExperimentConfig& c) { return c.output.directory; }},
                   {"formats", [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                      if (trim(v) != "csv") throw ConfigError(k + ": only 'csv' is supported");
                      c.output.formats = "csv";
                    },
                    [](const ExperimentConfig& c) { return c.output.formats; }}}});
    return sc;
  }();
  return s;
}

void check_ranges(const ExperimentConfig& c) {
  try {
    c.make_grid().validate();
    c.noise.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto& s = c.scales;
  for (double x : {s.hbar, s.c, s.m, s.mass, s.length, s.time})
    if (!(x > 0)) throw ConfigError("scales: hbar, c, m, mass, length and time must be positive");
  if (!(c.run.T > 0) || !(c.run.dt > 0)) throw ConfigError("run: T and dt must be positive");
  const double steps = std::round(c.run.T / c.run.dt);
  if (std::abs(steps * c.run.dt - c.run.T) > 1e-9 * std::max(1.0, c.run.T))
    throw ConfigError("run: T must be an integer multiple of dt");
  if (c.run.n_traj == 0) throw ConfigError("run.n_traj must be at least 1");
  if (c.run.record_every == 0) throw ConfigError("run.record_every must be at least 1");
  if (c.run.mode == Mode::noise_stats && c.run.samples < noise::kMinStatisticsSamples)
    throw ConfigError("run.samples must be at least " + std::to_string(noise::kMinStatisticsSamples));
  if (!(c.em.softening > 0)) throw ConfigError("em.softening must be positive");
  const int N = static_cast<int>(c.make_grid().sites());
  const auto& st = c.state;
  if (st.site_a < 0 || st.site_a >= N || st.site_b < 0 || st.site_b >= N) throw ConfigError("state: site out of range");
  if (st.kind == InitialState::superposition && st.site_a == st.site_b)
    throw ConfigError("state: superposition needs two distinct sites");
  if (st.kind == InitialState::plane_wave_pair && (st.k_a - st.k_b) % c.grid.n == 0)
    throw ConfigError("state: plane-wave-pair needs two distinct modes");
  if (st.spin != 0 && st.spin != 1) throw ConfigError("state.spin must be 0 or 1");
}

}  // namespace

Grid ExperimentConfig::make_grid() const { return Grid{grid.dim, grid.n, grid.spacing}; }

dynamics::Physical ExperimentConfig::units() const { return {scales.hbar, scales.c, scales.m, scales.e}; }

dynamics::EMField ExperimentConfig::make_em() const {
  const Grid g = make_grid();
  switch (em.preset) {
    case EMPreset::off: return dynamics::EMField::off(g);
    case EMPreset::uniform_b: return dynamics::EMField::uniform_magnetic(g, em.B);
    case EMPreset::coulomb_like: return dynamics::EMField::coulomb_like(g, em.charge, em.softening);
  }
  return dynamics::EMField::off(g);
}

ExperimentConfig parse(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("syntax: ") + e.what());
  }
  ExperimentConfig c;
  const auto& sc = schema();
  for (const auto& [section, node] : tree) {
    if (!node.data().empty()) throw ConfigError("key '" + section + "' outside any section");
    const auto it = std::find_if(sc.begin(), sc.end(), [&](const auto& s) { return s.first == section; });
    if (it == sc.end()) throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, value] : node) {
      const auto f = std::find_if(it->second.begin(), it->second.end(), [&](const Field& x) { return x.key == key; });
      if (f == it->second.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
      f->read(c, value.data(), section + "." + key);
    }
  }
  check_ranges(c);
  return c;
}

ExperimentConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string serialize(const ExperimentConfig& c) {
  std::string out;
  for (const auto& [section, fields] : schema()) {
    out += "[" + section + "]\n";
    for (const auto& f : fields) out += f.key + " = " + f.write(c) + "\n";
    out += "\n";
  }
  return out;
}

std::string mode_name(Mode m) { return kModes.name(m); }

bool needs_dense(Mode m) {
  return m == Mode::master || m == Mode::position_limit || m == Mode::momentum_limit;
}

}  // namespace gravdec::config
