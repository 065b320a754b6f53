#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gformula/config.hpp"
#include "gformula/estimator.hpp"
#include "gformula/types.hpp"

namespace gformula {

struct PreparedData {
  Dataset data;
  std::vector<std::string> covariate_names;
  std::size_t households = 0;  // zero for cluster-level input
  std::size_t clusters_formed = 0;
  std::size_t dropped = 0;     // clusters without outcome-eligible members
  // Shift and scale applied to each covariate (0 and 1 unless standardized).
  std::vector<double> covariate_shift;
  std::vector<double> covariate_scale;
};

// Ingest, cluster and aggregate as the config directs.
PreparedData prepare_data(const AnalysisConfig& config);

EstimationOptions estimation_options(const AnalysisConfig& config);

std::string estimates_csv(const EstimateReport& report);
std::string contrasts_csv(const EstimateReport& report);

// Coefficient tables and convergence diagnostics of both models.
nlohmann::json fits_json(const EstimateReport& report, const std::vector<std::string>& covariates);
// In strata mode `treatment` is the stratum-1 model and ends with the S2 slope.
nlohmann::json fits_json(const TreatmentModelFit& treatment,
                         const std::optional<TreatmentModelFit>& stratum2_treatment,
                         const OutcomeModelFit& outcome, const std::vector<std::string>& covariates);

struct AnalysisResult {
  PreparedData prepared;
  EstimateReport report;
  nlohmann::json manifest;
  std::filesystem::path estimates_path;
  std::filesystem::path contrasts_path;
  std::filesystem::path manifest_path;
};

// ingest -> cluster -> aggregate -> fit -> solve -> estimate -> sandwich,
// then writes estimates.csv, contrasts.csv and manifest.json into the
// output directory. A failing stage throws an Error tagged with the stage
// name and leaves no outputs behind.
AnalysisResult run_analysis(const AnalysisConfig& config);

}  // namespace gformula
