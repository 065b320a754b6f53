#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gformula/geo.hpp"
#include "gformula/link.hpp"
#include "gformula/simulation.hpp"
#include "gformula/types.hpp"

namespace gformula {

// Configuration files are JSON objects with nested sections. Unknown keys
// and ill-typed values raise Error(config). Relative paths resolve against
// the directory of the file they were read from.

struct AnalysisConfig {
  std::filesystem::path individuals;  // individual-level CSV, clustered here
  std::filesystem::path clusters;     // or a cluster-level CSV
  std::vector<std::string> covariates;

  OutcomeDefinition outcome_def = OutcomeDefinition::overall;
  LinkKind link = LinkKind::logit;
  bool strata = false;
  bool include_s = true;
  bool standardize = false;  // z-score covariates before fitting

  std::vector<double> alphas;
  std::vector<std::pair<double, double>> contrasts;

  double threshold_km = 10.0;
  Linkage linkage = Linkage::single;

  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool ordered = true;
  std::filesystem::path output_dir = "out";

  void validate() const;
};

struct SimulationConfig {
  DgpConfig dgp = standard_dgp_config();
  std::vector<double> alphas{0.4, 0.5, 0.6};
  std::vector<std::pair<double, double>> contrasts{{0.6, 0.4}, {0.6, 0.5}, {0.5, 0.4}};
  std::size_t replicates = 1000;
  StudyOptions study;
  std::filesystem::path output;  // study CSV; empty writes to stdout

  void validate() const;
};

AnalysisConfig analysis_config_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const AnalysisConfig& config);

SimulationConfig simulation_config_from_json(const nlohmann::json& j,
                                             const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const SimulationConfig& config);
nlohmann::json to_json(const DgpConfig& config);

nlohmann::json read_json_file(const std::filesystem::path& path);

// A run manifest is accepted too: its "config" section is used.
AnalysisConfig load_analysis_config(const std::filesystem::path& path);
SimulationConfig load_simulation_config(const std::filesystem::path& path);

}  // namespace gformula
