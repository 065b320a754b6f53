#include "gformula/analysis.hpp"

#include <cmath>

#include "gformula/csv.hpp"
#include "gformula/error.hpp"
#include "gformula/geo.hpp"
#include "gformula/ingest.hpp"

namespace gformula {
namespace {

using nlohmann::json;

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("[") + name + "] " + e.what());
  }
}

void standardize(PreparedData& p) {
  const std::size_t dim = p.covariate_names.size();
  const double m = static_cast<double>(p.data.size());
  for (std::size_t c = 0; c < dim; ++c) {
    double mean = 0.0;
    for (const auto& r : p.data) mean += r.covariates[c];
    mean /= m;
    double ss = 0.0;
    for (const auto& r : p.data) ss += (r.covariates[c] - mean) * (r.covariates[c] - mean);
    const double sd = std::sqrt(ss / m);
    const double scale = sd > 0.0 ? sd : 1.0;
    for (auto& r : p.data) r.covariates[c] = (r.covariates[c] - mean) / scale;
    p.covariate_shift[c] = mean;
    p.covariate_scale[c] = scale;
  }
}

json coef_table(const Eigen::VectorXd& coef, const std::vector<std::string>& names) {
  json t = json::object();
  for (Eigen::Index i = 0; i < coef.size(); ++i) t[names[static_cast<std::size_t>(i)]] = coef[i];
  return t;
}

json treatment_json(const TreatmentModelFit& f, std::vector<std::string> names, bool with_s2) {
  names.insert(names.begin(), "intercept");
  if (with_s2) names.push_back("S2");
  return {{"link", std::string(to_string(f.link.kind()))},
          {"coefficients", coef_table(f.rho, names)},
          {"converged", f.converged},
          {"iterations", f.iterations},
          {"loglik", f.loglik},
          {"max_abs_score", f.max_abs_score}};
}

}  // namespace

PreparedData prepare_data(const AnalysisConfig& config) {
  PreparedData p;
  p.covariate_names = config.covariates;
  if (!config.clusters.empty()) {
    const CsvTable table = stage("ingest", [&] { return CsvTable::read(config.clusters); });
    p.data = stage("ingest", [&] { return read_cluster_table(table, config.covariates, config.strata); });
    p.clusters_formed = p.data.size();
    for (const auto& r : p.data)
      if (outcome_denominator(config.outcome_def, r.n, r.s) != r.y_denominator)
        throw Error(ErrorKind::data, "[ingest] cluster " + r.id + ": y_denominator does not match outcome " +
                                         std::string(to_string(config.outcome_def)));
  } else {
    const auto points = stage("ingest", [&] {
      const CsvTable table = CsvTable::read(config.individuals);
      return read_households(table, config.covariates);
    });
    p.households = points.size();
    const auto assignment = stage("cluster", [&] {
      return cluster_households(points, config.threshold_km, config.linkage);
    });
    p.clusters_formed = static_cast<std::size_t>(cluster_count(assignment));
    auto agg = stage("aggregate", [&] {
      return aggregate_clusters(points, assignment, {config.outcome_def, config.strata});
    });
    p.data = std::move(agg.data);
    p.dropped = agg.dropped;
  }
  p.covariate_shift.assign(p.covariate_names.size(), 0.0);
  p.covariate_scale.assign(p.covariate_names.size(), 1.0);
  if (config.standardize) standardize(p);
  stage("aggregate", [&] { return validate_dataset(p.data); });
  return p;
}

EstimationOptions estimation_options(const AnalysisConfig& config) {
  EstimationOptions o;
  o.outcome_def = config.outcome_def;
  o.treatment_link = LinkFunction(config.link);
  o.outcome_link = LinkFunction(config.link);
  o.include_s = config.include_s;
  o.strata = config.strata;
  o.alphas = config.alphas;
  o.contrasts = config.contrasts;
  o.exec.threads = config.threads;
  o.exec.ordered = config.ordered;
  return o;
}

std::string estimates_csv(const EstimateReport& report) {
  std::vector<std::string> header{"alpha", "gamma0"};
  if (report.strata) header.push_back("gamma0_stratum2");
  for (const char* h : {"mu", "se", "ci_lower", "ci_upper"}) header.emplace_back(h);
  CsvWriter out(header);
  for (const auto& p : report.policies) {
    std::vector<std::string> row{format_double(p.alpha), format_double(p.gamma0)};
    if (report.strata) row.push_back(format_double(p.gamma0_strata2.value_or(0.0)));
    for (double v : {p.mu, p.se, p.ci_lower, p.ci_upper}) row.push_back(format_double(v));
    out.row(row);
  }
  return out.str();
}

std::string contrasts_csv(const EstimateReport& report) {
  CsvWriter out({"alpha", "alpha_prime", "delta", "se", "ci_lower", "ci_upper"});
  for (const auto& c : report.contrasts)
    out.row({format_double(c.alpha), format_double(c.alpha_prime), format_double(c.delta),
             format_double(c.se), format_double(c.ci_lower), format_double(c.ci_upper)});
  return out.str();
}

json fits_json(const TreatmentModelFit& treatment,
               const std::optional<TreatmentModelFit>& stratum2_treatment,
               const OutcomeModelFit& outcome, const std::vector<std::string>& covariates) {
  std::vector<std::string> names{"intercept"};
  names.insert(names.end(), covariates.begin(), covariates.end());
  if (outcome.terms.s) names.push_back("S");
  if (outcome.terms.s2) names.push_back("S2");
  json out = {{"link", std::string(to_string(outcome.link.kind()))},
              {"outcome", std::string(to_string(outcome.outcome_def))},
              {"coefficients", coef_table(outcome.beta, names)},
              {"converged", outcome.converged},
              {"iterations", outcome.iterations},
              {"loglik", outcome.loglik},
              {"max_abs_score", outcome.max_abs_score}};
  json j = {{"treatment", treatment_json(treatment, covariates, stratum2_treatment.has_value())},
            {"outcome", out}};
  if (stratum2_treatment) j["treatment_stratum2"] = treatment_json(*stratum2_treatment, covariates, false);
  return j;
}

json fits_json(const EstimateReport& report, const std::vector<std::string>& covariates) {
  return fits_json(report.treatment, report.stratum2_treatment, report.outcome, covariates);
}

AnalysisResult run_analysis(const AnalysisConfig& config) {
  namespace fs = std::filesystem;
  stage("config", [&] { config.validate(); });

  AnalysisResult result;
  result.prepared = prepare_data(config);
  result.report = stage("estimate", [&] {
    return estimate_policies(result.prepared.data, estimation_options(config));
  });

  const auto& rep = result.report;
  json policies = json::array();
  for (const auto& p : rep.policies) {
    json entry = {{"alpha", p.alpha}, {"gamma0", p.gamma0}, {"residual", p.residual}};
    if (p.gamma0_strata2) entry["gamma0_stratum2"] = *p.gamma0_strata2;
    policies.push_back(entry);
  }
  result.manifest = {
      {"config", to_json(config)},
      {"data",
       {{"households", result.prepared.households},
        {"clusters_formed", result.prepared.clusters_formed},
        {"clusters_dropped", result.prepared.dropped},
        {"clusters_used", result.prepared.data.size()},
        {"covariate_shift", result.prepared.covariate_shift},
        {"covariate_scale", result.prepared.covariate_scale}}},
      {"fits", fits_json(rep, config.covariates)},
      {"policies", policies},
      {"sandwich", {{"dimension", rep.sandwich.sigma.rows()}, {"condition_number", rep.sandwich.condition_number}}},
  };

  const fs::path dir = config.output_dir;
  result.estimates_path = dir / "estimates.csv";
  result.contrasts_path = dir / "contrasts.csv";
  result.manifest_path = dir / "manifest.json";
  stage("write", [&] {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::config, "cannot create " + dir.string() + ": " + ec.message());
    const std::vector<std::pair<fs::path, std::string>> files{
        {result.estimates_path, estimates_csv(rep)},
        {result.contrasts_path, contrasts_csv(rep)},
        {result.manifest_path, result.manifest.dump(2) + "\n"}};
    std::vector<fs::path> written;
    try {
      for (const auto& [path, text] : files) {
        write_file_atomic(path, text);
        written.push_back(path);
      }
    } catch (...) {
      for (const auto& p : written) fs::remove(p, ec);
      throw;
    }
  });
  return result;
}

}  // namespace gformula
