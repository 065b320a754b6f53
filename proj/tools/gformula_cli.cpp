#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gformula/analysis.hpp"
#include "gformula/config.hpp"
#include "gformula/csv.hpp"
#include "gformula/error.hpp"
#include "gformula/ingest.hpp"
#include "gformula/mle.hpp"
#include "gformula/simulation.hpp"

namespace fs = std::filesystem;
using namespace gformula;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool ordered = false;
  bool unordered = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
  auto* opt = cmd->add_option("-c,--config", f.config, "JSON config file");
  if (config_required) opt->required();
  opt->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "override the configured seed");
  cmd->add_option("-j,--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
  auto* o = cmd->add_flag("--ordered", f.ordered, "sequential compensated summation (default)");
  cmd->add_flag("--unordered", f.unordered, "allow parallel reductions")->excludes(o);
}

AnalysisConfig analysis_config(const CommonFlags& f) {
  AnalysisConfig c = load_analysis_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.threads) c.threads = *f.threads;
  if (f.ordered) c.ordered = true;
  if (f.unordered) c.ordered = false;
  return c;
}

SimulationConfig simulation_config(const CommonFlags& f) {
  SimulationConfig c = f.config.empty() ? SimulationConfig{} : load_simulation_config(f.config);
  if (f.seed) c.dgp.seed = *f.seed;
  if (f.threads) c.study.threads = *f.threads;
  return c;
}

void emit(const fs::path& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file_atomic(path, text);
  }
}

int cmd_truth(const CommonFlags& f) {
  const SimulationConfig c = simulation_config(f);
  CsvWriter out({"estimand", "truth", "gamma0", "quadrature_order"});
  for (double a : c.alphas) {
    const TruthResult t = analytic_policy_truth(c.dgp, a);
    out.row({estimand_label(a), format_double(t.mu), format_double(t.gamma0),
             std::to_string(t.quadrature_order)});
  }
  for (const auto& [a, b] : c.contrasts) {
    const double d = analytic_truth(c.dgp, a) - analytic_truth(c.dgp, b);
    out.row({estimand_label(a, b), format_double(d), "", ""});
  }
  std::cout << out.str();
  return 0;
}

int cmd_simulate(const CommonFlags& f, std::optional<std::size_t> replicates, const std::string& output) {
  SimulationConfig c = simulation_config(f);
  if (replicates) c.replicates = *replicates;
  if (!output.empty()) c.output = output;
  c.validate();
  const SimStudyResult r = run_study(c.dgp, c.alphas, c.contrasts, c.replicates, c.study);
  emit(c.output, study_csv(r));
  std::fprintf(stderr, "replicates %zu, used %zu, failures %zu (%.2f%%)\n", r.replicates, r.used,
               r.failures, 100.0 * r.failure_rate());
  return 0;
}

int cmd_fit(const CommonFlags& f) {
  const AnalysisConfig c = analysis_config(f);
  const PreparedData p = prepare_data(c);
  const LinkFunction link(c.link);
  nlohmann::json j;
  if (c.strata) {
    const auto t1 = fit_stratum1_treatment_model(p.data, link);
    const auto t2 = fit_stratum2_treatment_model(p.data, link);
    const auto o = fit_outcome_model(p.data, c.outcome_def, link, {true, true});
    j = fits_json(t1, t2, o, c.covariates);
  } else {
    const auto t = fit_treatment_model(p.data, link);
    const auto o = fit_outcome_model(p.data, c.outcome_def, link, {c.include_s, false});
    j = fits_json(t, std::nullopt, o, c.covariates);
  }
  j["clusters"] = p.data.size();
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_estimate(const CommonFlags& f) {
  const AnalysisResult r = run_analysis(analysis_config(f));
  std::cout << r.estimates_path.string() << "\n"
            << r.contrasts_path.string() << "\n"
            << r.manifest_path.string() << "\n";
  return 0;
}

int cmd_cluster(const CommonFlags& f, const std::string& output, const std::string& assignment_out) {
  const AnalysisConfig c = analysis_config(f);
  if (c.individuals.empty())
    throw Error(ErrorKind::config, "cluster-geo needs input.individuals in the config");
  const CsvTable table = CsvTable::read(c.individuals);
  const auto points = read_households(table, c.covariates);
  const auto assignment = cluster_households(points, c.threshold_km, c.linkage);
  const auto agg = aggregate_clusters(points, assignment, {c.outcome_def, c.strata});
  if (!assignment_out.empty()) {
    CsvWriter a({"household_id", "cluster"});
    for (std::size_t i = 0; i < points.size(); ++i)
      a.row({points[i].household_id, std::to_string(assignment[i])});
    emit(assignment_out, a.str());
  }
  emit(output, cluster_table_csv(agg.data, c.covariates));
  std::fprintf(stderr, "households %zu, clusters %d, kept %zu, dropped %zu\n", points.size(),
               cluster_count(assignment), agg.data.size(), agg.dropped);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parametric g-formula estimation under partial interference"};
  app.require_subcommand(1);

  CommonFlags truth_f, sim_f, fit_f, est_f, geo_f;
  std::optional<std::size_t> replicates;
  std::string sim_output, geo_output, geo_assignment;

  auto* truth = app.add_subcommand("truth", "analytic policy means of a simulation design");
  add_common(truth, truth_f, false);
  auto* simulate = app.add_subcommand("simulate", "run a simulation study");
  add_common(simulate, sim_f, false);
  simulate->add_option("-r,--replicates", replicates, "number of simulated datasets");
  simulate->add_option("-o,--output", sim_output, "study CSV path (default stdout)");
  auto* fit = app.add_subcommand("fit", "fit the treatment and outcome models");
  add_common(fit, fit_f, true);
  auto* estimate = app.add_subcommand("estimate", "estimate policy means and contrasts");
  add_common(estimate, est_f, true);
  auto* geo = app.add_subcommand("cluster-geo", "cluster households and write cluster-level data");
  add_common(geo, geo_f, true);
  geo->add_option("-o,--output", geo_output, "cluster CSV path (default stdout)");
  geo->add_option("--assignment", geo_assignment, "household-to-cluster CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::config);
  }

  try {
    if (*truth) return cmd_truth(truth_f);
    if (*simulate) return cmd_simulate(sim_f, replicates, sim_output);
    if (*fit) return cmd_fit(fit_f);
    if (*estimate) return cmd_estimate(est_f);
    if (*geo) return cmd_cluster(geo_f, geo_output, geo_assignment);
  } catch (const Error& e) {
    std::cerr << "gformula: " << to_string(e.kind()) << " error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "gformula: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
