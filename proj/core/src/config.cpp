#include "gformula/config.hpp"

#include <fstream>
#include <set>

#include "gformula/error.hpp"

namespace gformula {
namespace {

using nlohmann::json;

// View of one JSON object that rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }
  ~Section() = default;

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }
  const json& at(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }
  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = at(key).get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorKind::config, "config: '" + name(key) + "' has the wrong type");
    }
  }

  Section child(const std::string& key) { return Section(at(key), name(key)); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.contains(it.key()))
        throw Error(ErrorKind::config, "config: unknown key '" + name(it.key()) + "'");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::config, "config: '" + (path_.empty() ? std::string("<root>") : path_) +
                                       "': " + what);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::string& text, const std::filesystem::path& base) {
  if (text.empty()) return {};
  std::filesystem::path p(text);
  return p.is_relative() && !base.empty() ? base / p : p;
}

std::vector<std::pair<double, double>> read_contrasts(Section& s, const std::string& key) {
  std::vector<std::pair<double, double>> out;
  if (!s.has(key)) return out;
  const json& arr = s.at(key);
  if (!arr.is_array()) s.fail(key + " must be a list of [alpha, alpha_prime] pairs");
  for (const auto& pair : arr) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
      s.fail(key + " must be a list of [alpha, alpha_prime] pairs");
    out.emplace_back(pair[0].get<double>(), pair[1].get<double>());
  }
  return out;
}

json contrasts_json(const std::vector<std::pair<double, double>>& contrasts) {
  json arr = json::array();
  for (const auto& [a, b] : contrasts) arr.push_back({a, b});
  return arr;
}

void check_alpha(double a, const std::string& what) {
  if (!(a > 0.0 && a < 1.0))
    throw Error(ErrorKind::config, "config: " + what + " " + std::to_string(a) + " is outside (0,1)");
}

MassFunction read_mass(Section s) {
  MassFunction m;
  s.get("values", m.values);
  s.get("probabilities", m.probabilities);
  s.finish();
  return m;
}

json mass_json(const MassFunction& m) {
  return {{"values", m.values}, {"probabilities", m.probabilities}};
}

DgpConfig read_dgp(Section s) {
  DgpConfig c = standard_dgp_config();
  s.get("m", c.m);
  if (s.has("outcome")) c.outcome_def = parse_outcome_definition(s.at("outcome").get<std::string>());
  if (s.has("link")) c.link = parse_link_kind(s.at("link").get<std::string>());
  s.get("seed", c.seed);
  if (s.has("size_law")) c.size_law = read_mass(s.child("size_law"));
  if (s.has("l2_law")) c.l2_law = read_mass(s.child("l2_law"));
  if (s.has("l1")) {
    Section l1 = s.child("l1");
    l1.get("mean", c.l1_mean);
    l1.get("sd", c.l1_sd);
    l1.finish();
  }
  if (s.has("rho")) {
    Section r = s.child("rho");
    r.get("intercept", c.rho.intercept);
    r.get("l1", c.rho.l1);
    r.get("l2", c.rho.l2);
    r.finish();
  }
  if (s.has("beta")) {
    Section b = s.child("beta");
    b.get("intercept", c.beta.intercept);
    b.get("l1", c.beta.l1);
    b.get("s", c.beta.s);
    b.get("l2", c.beta.l2);
    b.finish();
  }
  s.finish();
  return c;
}

}  // namespace

void AnalysisConfig::validate() const {
  if (individuals.empty() == clusters.empty())
    throw Error(ErrorKind::config, "config: give exactly one of input.individuals and input.clusters");
  if (alphas.empty() && contrasts.empty())
    throw Error(ErrorKind::config, "config: no policies requested");
  for (double a : alphas) check_alpha(a, "alpha");
  for (const auto& [a, b] : contrasts) {
    check_alpha(a, "contrast alpha");
    check_alpha(b, "contrast alpha");
  }
  if (!(threshold_km > 0.0)) throw Error(ErrorKind::config, "config: threshold_km must be positive");
  if (threads < 1) throw Error(ErrorKind::config, "config: threads must be at least 1");
  if (strata && !include_s)
    throw Error(ErrorKind::config, "config: strata mode needs the S term in the outcome model");
}

void SimulationConfig::validate() const {
  dgp.validate();
  if (replicates < 1) throw Error(ErrorKind::config, "config: replicates must be at least 1");
  if (alphas.empty() && contrasts.empty()) throw Error(ErrorKind::config, "config: no estimands");
  for (double a : alphas) check_alpha(a, "alpha");
  for (const auto& [a, b] : contrasts) {
    check_alpha(a, "contrast alpha");
    check_alpha(b, "contrast alpha");
  }
  if (study.threads < 1) throw Error(ErrorKind::config, "config: threads must be at least 1");
}

AnalysisConfig analysis_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  AnalysisConfig c;
  try {
    Section root(j, "");
    if (root.has("input")) {
      Section in = root.child("input");
      std::string individuals, clusters;
      in.get("individuals", individuals);
      in.get("clusters", clusters);
      c.individuals = resolve(individuals, base_dir);
      c.clusters = resolve(clusters, base_dir);
      in.get("covariates", c.covariates);
      in.finish();
    }
    if (root.has("model")) {
      Section m = root.child("model");
      if (m.has("outcome")) c.outcome_def = parse_outcome_definition(m.at("outcome").get<std::string>());
      if (m.has("link")) c.link = parse_link_kind(m.at("link").get<std::string>());
      m.get("strata", c.strata);
      m.get("include_s", c.include_s);
      m.get("standardize", c.standardize);
      m.finish();
    }
    if (root.has("policies")) {
      Section p = root.child("policies");
      p.get("alphas", c.alphas);
      c.contrasts = read_contrasts(p, "contrasts");
      p.finish();
    }
    if (root.has("clustering")) {
      Section g = root.child("clustering");
      g.get("threshold_km", c.threshold_km);
      if (g.has("linkage")) c.linkage = parse_linkage(g.at("linkage").get<std::string>());
      g.finish();
    }
    if (root.has("run")) {
      Section r = root.child("run");
      r.get("seed", c.seed);
      r.get("threads", c.threads);
      r.get("ordered", c.ordered);
      std::string out;
      r.get("output_dir", out);
      if (!out.empty()) c.output_dir = resolve(out, base_dir);
      r.finish();
    }
    root.finish();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const AnalysisConfig& c) {
  auto abs = [](const std::filesystem::path& p) {
    return p.empty() ? std::string() : std::filesystem::absolute(p).lexically_normal().string();
  };
  json input = {{"covariates", c.covariates}};
  if (!c.individuals.empty()) input["individuals"] = abs(c.individuals);
  if (!c.clusters.empty()) input["clusters"] = abs(c.clusters);
  return {
      {"input", input},
      {"model",
       {{"outcome", std::string(to_string(c.outcome_def))},
        {"link", std::string(to_string(c.link))},
        {"strata", c.strata},
        {"include_s", c.include_s},
        {"standardize", c.standardize}}},
      {"policies", {{"alphas", c.alphas}, {"contrasts", contrasts_json(c.contrasts)}}},
      {"clustering", {{"threshold_km", c.threshold_km}, {"linkage", std::string(to_string(c.linkage))}}},
      {"run",
       {{"seed", c.seed}, {"threads", c.threads}, {"ordered", c.ordered}, {"output_dir", abs(c.output_dir)}}},
  };
}

SimulationConfig simulation_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  SimulationConfig c;
  try {
    Section root(j, "");
    if (root.has("dgp")) c.dgp = read_dgp(root.child("dgp"));
    if (root.has("study")) {
      Section s = root.child("study");
      s.get("alphas", c.alphas);
      if (s.has("contrasts")) c.contrasts = read_contrasts(s, "contrasts");
      s.get("replicates", c.replicates);
      s.get("threads", c.study.threads);
      s.get("max_failure_rate", c.study.max_failure_rate);
      s.finish();
    }
    std::string out;
    root.get("output", out);
    c.output = resolve(out, base_dir);
    root.finish();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const DgpConfig& c) {
  return {
      {"m", c.m},
      {"outcome", std::string(to_string(c.outcome_def))},
      {"link", std::string(to_string(c.link))},
      {"seed", c.seed},
      {"size_law", mass_json(c.size_law)},
      {"l1", {{"mean", c.l1_mean}, {"sd", c.l1_sd}}},
      {"l2_law", mass_json(c.l2_law)},
      {"rho", {{"intercept", c.rho.intercept}, {"l1", c.rho.l1}, {"l2", c.rho.l2}}},
      {"beta", {{"intercept", c.beta.intercept}, {"l1", c.beta.l1}, {"s", c.beta.s}, {"l2", c.beta.l2}}},
  };
}

json to_json(const SimulationConfig& c) {
  json j = {
      {"dgp", to_json(c.dgp)},
      {"study",
       {{"alphas", c.alphas},
        {"contrasts", contrasts_json(c.contrasts)},
        {"replicates", c.replicates},
        {"threads", c.study.threads},
        {"max_failure_rate", c.study.max_failure_rate}}},
  };
  if (!c.output.empty()) j["output"] = std::filesystem::absolute(c.output).lexically_normal().string();
  return j;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open config " + path.string());
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config, path.string() + ": " + e.what());
  }
}

AnalysisConfig load_analysis_config(const std::filesystem::path& path) {
  json j = read_json_file(path);
  if (j.is_object() && j.contains("config") && j.contains("fits")) j = j.at("config");
  return analysis_config_from_json(j, path.parent_path());
}

SimulationConfig load_simulation_config(const std::filesystem::path& path) {
  return simulation_config_from_json(read_json_file(path), path.parent_path());
}

}  // namespace gformula
