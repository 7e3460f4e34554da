#include "nzprop/run_config.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "nzprop/matrix_io.hpp"
#include "nzprop/version.hpp"

namespace nzprop {

namespace {

using Json = nlohmann::ordered_json;

Json parse_json(const std::string& text, const char* what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    std::ostringstream msg;
    msg << "invalid " << what << ": " << e.what();
    throw ValidationError(msg.str());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> known,
                         const char* where) {
  for (const auto& [key, value] : obj.items()) {
    bool found = false;
    for (const char* k : known) {
      if (key == k) {
        found = true;
        break;
      }
    }
    if (!found) {
      std::ostringstream msg;
      msg << "unknown key '" << key << "' in " << where;
      throw ValidationError(msg.str());
    }
  }
}

double get_number(const Json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) {
    throw ValidationError(std::string("'") + key + "' must be a number");
  }
  return obj[key].get<double>();
}

int get_int(const Json& obj, const char* key, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) {
    throw ValidationError(std::string("'") + key + "' must be an integer");
  }
  return obj[key].get<int>();
}

}  // namespace

void RunConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ValidationError("config: delta must be in (0, 1)");
  }
  mcp.validate();
  phase_config().validate();
  if (threads < 0) throw ValidationError("config: threads must be >= 0");
}

int RunConfig::resolved_threads() const {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

RunConfig parse_run_config_text(const std::string& text) {
  const Json root = parse_json(text, "config");
  if (!root.is_object()) throw ValidationError("config must be a JSON object");
  reject_unknown_keys(root,
                      {"delta", "gamma", "mcp", "phase", "threads", "seed",
                       "output_format"},
                      "config");
  RunConfig cfg;
  cfg.delta = get_number(root, "delta", cfg.delta);
  cfg.gamma = get_number(root, "gamma", cfg.gamma);
  if (root.contains("mcp")) {
    const Json& m = root["mcp"];
    if (!m.is_object()) throw ValidationError("'mcp' must be an object");
    reject_unknown_keys(
        m, {"a", "n_lambda", "lambda_min_ratio", "tol", "max_outer_iters"},
        "config.mcp");
    cfg.mcp.a = get_number(m, "a", cfg.mcp.a);
    cfg.mcp.n_lambda = get_int(m, "n_lambda", cfg.mcp.n_lambda);
    cfg.mcp.lambda_min_ratio =
        get_number(m, "lambda_min_ratio", cfg.mcp.lambda_min_ratio);
    cfg.mcp.tol = get_number(m, "tol", cfg.mcp.tol);
    cfg.mcp.max_outer_iters =
        get_int(m, "max_outer_iters", cfg.mcp.max_outer_iters);
  }
  if (root.contains("phase")) {
    const Json& p = root["phase"];
    if (!p.is_object()) throw ValidationError("'phase' must be an object");
    reject_unknown_keys(p, {"n_quad", "sigma_floor"}, "config.phase");
    cfg.n_quad = get_int(p, "n_quad", cfg.n_quad);
    cfg.sigma_floor = get_number(p, "sigma_floor", cfg.sigma_floor);
  }
  if (root.contains("threads")) {
    const Json& t = root["threads"];
    if (t.is_string()) {
      if (t.get<std::string>() != "auto") {
        throw ValidationError("'threads' must be an integer or \"auto\"");
      }
      cfg.threads = 0;
    } else if (t.is_number_integer()) {
      cfg.threads = t.get<int>();
    } else {
      throw ValidationError("'threads' must be an integer or \"auto\"");
    }
  }
  if (root.contains("seed")) {
    if (!root["seed"].is_number_integer()) {
      throw ValidationError("'seed' must be an integer");
    }
    cfg.seed = root["seed"].get<std::uint64_t>();
  }
  if (root.contains("output_format")) {
    const std::string f = root["output_format"].is_string()
                              ? root["output_format"].get<std::string>()
                              : std::string();
    if (f == "json") {
      cfg.output_format = OutputFormat::Json;
    } else if (f == "csv") {
      cfg.output_format = OutputFormat::Csv;
    } else {
      throw ValidationError("'output_format' must be \"csv\" or \"json\"");
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_run_config_file(const std::string& path) {
  return parse_run_config_text(read_file(path));
}

std::string run_config_to_text(const RunConfig& cfg) {
  Json root;
  root["delta"] = cfg.delta;
  root["gamma"] = cfg.gamma;
  root["mcp"] = Json{{"a", cfg.mcp.a},
                     {"n_lambda", cfg.mcp.n_lambda},
                     {"lambda_min_ratio", cfg.mcp.lambda_min_ratio},
                     {"tol", cfg.mcp.tol},
                     {"max_outer_iters", cfg.mcp.max_outer_iters}};
  root["phase"] = Json{{"n_quad", cfg.n_quad},
                       {"sigma_floor", cfg.sigma_floor}};
  if (cfg.threads == 0) {
    root["threads"] = "auto";
  } else {
    root["threads"] = cfg.threads;
  }
  root["seed"] = cfg.seed;
  root["output_format"] =
      cfg.output_format == OutputFormat::Json ? "json" : "csv";
  return root.dump(2) + "\n";
}

SimGrid parse_sim_grid_text(const std::string& text) {
  const Json root = parse_json(text, "grid config");
  if (!root.is_object()) {
    throw ValidationError("grid config must be a JSON object");
  }
  reject_unknown_keys(root, {"config", "scenarios"}, "grid config");
  SimGrid grid;
  if (root.contains("config")) {
    grid.config = parse_run_config_text(root["config"].dump());
  }
  if (!root.contains("scenarios") || !root["scenarios"].is_array()) {
    throw ValidationError("grid config needs a 'scenarios' array");
  }
  size_t index = 0;
  for (const Json& entry : root["scenarios"]) {
    try {
      if (!entry.is_object()) {
        throw ValidationError("scenario must be an object");
      }
      reject_unknown_keys(
          entry, {"kind", "pi", "mu_star", "m", "replications", "seed"},
          "scenario");
      if (!entry.contains("kind") || !entry["kind"].is_string()) {
        throw ValidationError("scenario needs a string 'kind'");
      }
      SimScenario s;
      s.kind = dependence_kind_from_string(entry["kind"].get<std::string>());
      if (!entry.contains("pi") || !entry.contains("mu_star")) {
        throw ValidationError("scenario needs 'pi' and 'mu_star'");
      }
      s.pi = get_number(entry, "pi", s.pi);
      s.mu_star = get_number(entry, "mu_star", s.mu_star);
      s.m = get_int(entry, "m", s.m);
      s.replications = get_int(entry, "replications", s.replications);
      if (entry.contains("seed")) {
        if (!entry["seed"].is_number_integer()) {
          throw ValidationError("'seed' must be an integer");
        }
        s.seed = entry["seed"].get<std::uint64_t>();
      }
      validate_scenario(s);
      grid.scenarios.push_back(s);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "scenario " << index << ": " << e.what();
      grid.rejects.push_back(msg.str());
    }
    ++index;
  }
  return grid;
}

SimGrid parse_sim_grid_file(const std::string& path) {
  return parse_sim_grid_text(read_file(path));
}

namespace {

Json estimate_result_json(const EstimateResult& r, Eigen::Index m) {
  Json root;
  root["pi_tilde"] = r.pi_tilde;
  root["pi0_tilde"] = r.pi0_tilde;
  root["pi_tilde_clipped"] = r.pi_tilde_clipped;
  root["k"] = r.k_used;
  root["t_star"] = r.t_star;
  root["gamma_m"] = r.gamma_m;
  root["lambda_star"] = r.lambda_star;
  root["cppls_converged"] = r.cppls_converged;
  root["m"] = static_cast<long long>(m);
  root["warnings"] = r.warnings;
  root["version"] = kVersion;
  return root;
}

}  // namespace

std::string estimate_result_to_json(const EstimateResult& result,
                                    Eigen::Index m) {
  return estimate_result_json(result, m).dump(2) + "\n";
}

EstimateResult estimate_result_from_json(const std::string& text) {
  const Json root = parse_json(text, "estimate result");
  EstimateResult r;
  r.pi_tilde = root.at("pi_tilde").get<double>();
  r.pi0_tilde = root.at("pi0_tilde").get<double>();
  r.pi_tilde_clipped = root.at("pi_tilde_clipped").get<double>();
  r.k_used = root.at("k").get<int>();
  r.t_star = root.at("t_star").get<double>();
  r.gamma_m = root.at("gamma_m").get<double>();
  r.lambda_star = root.at("lambda_star").get<double>();
  r.cppls_converged = root.at("cppls_converged").get<bool>();
  r.warnings = root.at("warnings").get<std::vector<std::string>>();
  return r;
}

std::string estimate_result_to_csv(const EstimateResult& result,
                                   Eigen::Index m) {
  std::ostringstream out;
  out << "pi_tilde,pi0_tilde,pi_tilde_clipped,k,t_star,gamma_m,lambda_star,"
         "cppls_converged,m,warnings,version\n";
  std::string joined;
  for (size_t i = 0; i < result.warnings.size(); ++i) {
    if (i > 0) joined += "; ";
    joined += result.warnings[i];
  }
  out << format_double(result.pi_tilde) << ','
      << format_double(result.pi0_tilde) << ','
      << format_double(result.pi_tilde_clipped) << ',' << result.k_used << ','
      << format_double(result.t_star) << ',' << format_double(result.gamma_m)
      << ',' << format_double(result.lambda_star) << ','
      << (result.cppls_converged ? "true" : "false") << ',' << m << ",\""
      << joined << "\"," << kVersion << '\n';
  return out.str();
}

std::string sim_table_header() {
  return "kind,pi,mu_star,m,reps,seed,estimator,bias,std_dev\n";
}

std::string sim_raw_header() {
  return "kind,pi,mu_star,m,seed,estimator,rep,estimate\n";
}

std::string sim_raw_rows(const SimSummary& summary) {
  const SimScenario& s = summary.scenario;
  std::ostringstream out;
  auto series = [&](const char* name, const std::vector<double>& xs) {
    for (size_t i = 0; i < xs.size(); ++i) {
      out << to_string(s.kind) << ',' << format_double(s.pi) << ','
          << format_double(s.mu_star) << ',' << s.m << ',' << s.seed << ','
          << name << ',' << summary.rep_indices[i] << ','
          << format_double(xs[i]) << '\n';
    }
  };
  series("New", summary.new_raw);
  series("Benjamini", summary.benjamini_raw);
  return out.str();
}

std::string sim_summary_rows(const SimSummary& summary) {
  const SimScenario& s = summary.scenario;
  auto row = [&](const char* name, const EstimatorStats& stats) {
    std::ostringstream out;
    out << to_string(s.kind) << ',' << format_double(s.pi) << ','
        << format_double(s.mu_star) << ',' << s.m << ',' << s.replications
        << ',' << s.seed << ',' << name << ',' << format_double(stats.bias)
        << ',';
    if (stats.std_dev == stats.std_dev) {  // NaN sentinel prints empty
      out << format_double(stats.std_dev);
    }
    out << '\n';
    return out.str();
  };
  return row("New", summary.new_estimator) + row("Benjamini", summary.benjamini);
}

}  // namespace nzprop
