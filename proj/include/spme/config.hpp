// Experiment configuration files: a small TOML subset (sections, scalar and
// array values, strings, numbers, inf) mapped onto ProblemSpec/SolverConfig.
#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "spme/model.hpp"
#include "spme/solver.hpp"

namespace spme {

struct ParseError : std::runtime_error {
  int line;
  ParseError(const std::string& msg, int line_)
      : std::runtime_error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

struct ConfigValue {
  bool is_string = false;
  std::string str;
  std::vector<double> nums;  // scalar = single entry

  double number(const std::string& key) const;
  int integer(const std::string& key) const;
};

// Flat view keyed "section.key"; insertion errors carry line numbers.
using ConfigTable = std::map<std::string, ConfigValue>;

ConfigTable parse_toml(const std::string& text);

struct ExperimentConfig {
  ProblemSpec spec;
  SolverConfig solver;
  int paths = 100;
  std::vector<double> eps_list;
  std::vector<double> rho_list;
  double p = 2.0;
  std::string statistic = "sup_inf";
  std::string raw;  // original config bytes, hashed into the manifest
};

ExperimentConfig config_from_table(const ConfigTable& table);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace spme
