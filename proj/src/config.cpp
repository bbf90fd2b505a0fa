#include "spme/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace spme {

double ConfigValue::number(const std::string& key) const {
  if (is_string || nums.size() != 1)
    throw std::runtime_error("config key '" + key + "' must be a single number");
  return nums[0];
}

int ConfigValue::integer(const std::string& key) const {
  const double v = number(key);
  const int i = static_cast<int>(std::lround(v));
  if (std::abs(v - i) > 1e-12)
    throw std::runtime_error("config key '" + key + "' must be an integer");
  return i;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

double parse_number(const std::string& tok, int line) {
  std::string t = trim(tok);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  if (t == "true") return 1.0;
  if (t == "false") return 0.0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end == t.c_str() || *end != '\0') throw ParseError("bad number '" + t + "'", line);
  return v;
}

ConfigValue parse_value(const std::string& raw, int line) {
  ConfigValue v;
  const std::string s = trim(raw);
  if (s.empty()) throw ParseError("missing value", line);
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') throw ParseError("unterminated string", line);
    v.is_string = true;
    v.str = s.substr(1, s.size() - 2);
    return v;
  }
  if (s.front() == '[') {
    if (s.back() != ']') throw ParseError("unterminated array", line);
    std::string body = s.substr(1, s.size() - 2);
    std::stringstream ss(body);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      if (tok.empty()) continue;
      v.nums.push_back(parse_number(tok, line));
    }
    return v;
  }
  v.nums.push_back(parse_number(s, line));
  return v;
}

}  // namespace

ConfigTable parse_toml(const std::string& text) {
  ConfigTable table;
  std::string section;
  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ParseError("unterminated section header", line);
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) throw ParseError("empty section name", line);
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line);
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", line);
    const std::string full = section.empty() ? key : section + "." + key;
    if (table.count(full)) throw ParseError("duplicate key '" + full + "'", line);
    table[full] = parse_value(s.substr(eq + 1), line);
  }
  return table;
}

namespace {

const ConfigValue* find(const ConfigTable& t, const std::string& key) {
  auto it = t.find(key);
  return it == t.end() ? nullptr : &it->second;
}

const ConfigValue& require(const ConfigTable& t, const std::string& key) {
  const ConfigValue* v = find(t, key);
  if (!v) throw std::runtime_error("config: missing required key '" + key + "'");
  return *v;
}

double get_num(const ConfigTable& t, const std::string& key, double fallback) {
  const ConfigValue* v = find(t, key);
  return v ? v->number(key) : fallback;
}

int get_int(const ConfigTable& t, const std::string& key, int fallback) {
  const ConfigValue* v = find(t, key);
  return v ? v->integer(key) : fallback;
}

std::string get_str(const ConfigTable& t, const std::string& key,
                    const std::string& fallback) {
  const ConfigValue* v = find(t, key);
  if (!v) return fallback;
  if (!v->is_string) throw std::runtime_error("config key '" + key + "' must be a string");
  return v->str;
}

CoeffFn get_fn(const ConfigTable& t, const std::string& prefix) {
  CoeffFn fn;
  fn.kind = get_str(t, prefix + "_kind", "zero");
  if (const ConfigValue* v = find(t, prefix + "_params")) {
    if (v->is_string) throw std::runtime_error("config key '" + prefix + "_params' must be numeric");
    fn.params = v->nums;
  }
  return fn;
}

}  // namespace

ExperimentConfig config_from_table(const ConfigTable& t) {
  ExperimentConfig cfg;
  ProblemSpec& spec = cfg.spec;

  spec.dim = get_int(t, "domain.d", 1);
  if (spec.dim != 1 && spec.dim != 2)
    throw std::runtime_error("config: domain.d must be 1 or 2");
  auto axis_vals = [&](const std::string& key, double fallback) {
    std::array<double, 2> out{fallback, fallback};
    if (const ConfigValue* v = find(t, key)) {
      if (v->is_string || v->nums.empty()) throw std::runtime_error("config key '" + key + "' must be numeric");
      out[0] = v->nums[0];
      out[1] = v->nums.size() > 1 ? v->nums[1] : v->nums[0];
    }
    return out;
  };
  spec.box_a = axis_vals("domain.a", 0.0);
  spec.box_b = axis_vals("domain.b", 1.0);
  spec.horizon = get_num(t, "domain.T", 1.0);
  if (!(spec.horizon > 0.0)) throw std::runtime_error("config: domain.T must be positive");

  const std::string phi_kind = get_str(t, "phi.kind", "powerlaw");
  if (phi_kind == "powerlaw") {
    spec.phi.kind = PhiSpec::Kind::PowerLaw;
    spec.phi.m = get_num(t, "phi.m", 2.0);
  } else if (phi_kind == "tabulated") {
    spec.phi.kind = PhiSpec::Kind::Tabulated;
    spec.phi.m = get_num(t, "phi.m", 2.0);
    spec.phi.r_samples = require(t, "phi.r").nums;
    spec.phi.phi_samples = require(t, "phi.phi").nums;
  } else {
    throw std::runtime_error("config: phi.kind must be 'powerlaw' or 'tabulated'");
  }
  spec.phi.cap = get_num(t, "phi.cap", std::numeric_limits<double>::infinity());

  spec.coeffs.b[0] = get_fn(t, "coefficients.b1");
  spec.coeffs.b[1] = get_fn(t, "coefficients.b2");
  spec.coeffs.c = get_fn(t, "coefficients.c");
  spec.coeffs.f = get_fn(t, "coefficients.f");
  spec.coeffs.sigma = get_num(t, "coefficients.sigma", 0.0);

  spec.coeffs.k_noise = get_int(t, "noise.K", 0);
  if (spec.coeffs.k_noise < 0) throw std::runtime_error("config: noise.K must be >= 0");
  for (int k = 1; k <= spec.coeffs.k_noise; ++k) {
    spec.coeffs.nu.push_back(get_fn(t, "noise.nu" + std::to_string(k)));
    spec.coeffs.g.push_back(get_fn(t, "noise.g" + std::to_string(k)));
  }

  const std::string xi_kind = get_str(t, "data.xi_kind", "fn");
  if (xi_kind == "fn") {
    spec.xi.kind = InitialCondition::Kind::Function;
    spec.xi.fn = get_fn(t, "data.xi_fn");
  } else if (xi_kind == "random_signs") {
    spec.xi.kind = InitialCondition::Kind::RandomSigns;
    spec.xi.l2_norm = get_num(t, "data.xi_l2", 1.0);
  } else {
    throw std::runtime_error("config: data.xi_kind must be 'fn' or 'random_signs'");
  }

  spec.epsilon = get_num(t, "experiment.epsilon", 0.0);
  if (const ConfigValue* v = find(t, "experiment.mu")) {
    if (v->is_string) {
      if (v->str != "inf") throw std::runtime_error("config: experiment.mu must be a number or 'inf'");
      spec.mu = std::numeric_limits<double>::infinity();
    } else {
      spec.mu = v->number("experiment.mu");
    }
  }
  spec.alpha = get_num(t, "experiment.alpha", 2.0);

  cfg.solver.dt = get_num(t, "experiment.dt", 1e-3);
  cfg.solver.n_interior = get_int(t, "experiment.n", 63);
  cfg.solver.record_every = get_int(t, "experiment.record_every", 1);
  cfg.solver.seed = static_cast<std::uint64_t>(get_num(t, "noise.seed", 0.0));
  const std::string scheme = get_str(t, "experiment.scheme", "fd");
  if (scheme == "fd") {
    cfg.solver.scheme = Scheme::FiniteDifference;
  } else if (scheme == "galerkin") {
    cfg.solver.scheme = Scheme::GalerkinSpectral;
    cfg.solver.n_modes = get_int(t, "experiment.n_modes", 0);
  } else {
    throw std::runtime_error("config: experiment.scheme must be 'fd' or 'galerkin'");
  }

  cfg.paths = get_int(t, "experiment.paths", 100);
  if (const ConfigValue* v = find(t, "experiment.eps_list")) cfg.eps_list = v->nums;
  if (const ConfigValue* v = find(t, "experiment.rho_list")) cfg.rho_list = v->nums;
  cfg.p = get_num(t, "experiment.p", 2.0);
  cfg.statistic = get_str(t, "experiment.statistic", "sup_inf");
  return cfg;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg = config_from_table(parse_toml(text));
  cfg.raw = text;
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace spme
