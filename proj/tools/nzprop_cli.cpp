// Command-line driver: estimate the proportion of nonzero Normal means from
// files, run simulation grids, or inspect a correlation spectrum.
//
// Exit codes: 0 success, 1 I/O failure, 2 validation failure, 3 partial
// failure (rejected or empty scenario list).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nzprop/matrix_io.hpp"
#include "nzprop/pipeline.hpp"
#include "nzprop/run_config.hpp"
#include "nzprop/simgen.hpp"
#include "nzprop/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;
constexpr int kExitPartial = 3;

int thread_override(int configured) {
  if (const char* env = std::getenv("NZPROP_THREADS")) {
    try {
      const int t = std::stoi(env);
      if (t >= 1) return t;
    } catch (...) {
    }
    std::cerr << "warning: ignoring invalid NZPROP_THREADS='" << env << "'\n";
  }
  return configured;
}

int cmd_estimate(const std::string& z_path, const std::string& sigma_path,
                 const std::string& config_path) {
  nzprop::RunConfig cfg;
  if (!config_path.empty()) cfg = nzprop::parse_run_config_file(config_path);

  const Eigen::VectorXd z = nzprop::read_vector(z_path);
  const Eigen::MatrixXd s = nzprop::read_matrix_csv(sigma_path);
  if (s.rows() != s.cols() || s.rows() != z.size()) {
    std::ostringstream msg;
    msg << "dimension mismatch: z has " << z.size() << " entries, sigma is "
        << s.rows() << "x" << s.cols();
    throw nzprop::ValidationError(msg.str());
  }
  const nzprop::CorrelationMatrix sigma{s};
  const nzprop::EstimateResult result = nzprop::estimate_pi(
      z, sigma, cfg.delta, cfg.mcp, cfg.phase_config());
  if (cfg.output_format == nzprop::OutputFormat::Json) {
    std::cout << nzprop::estimate_result_to_json(result, z.size());
  } else {
    std::cout << nzprop::estimate_result_to_csv(result, z.size());
  }
  return kExitOk;
}

int cmd_simulate(const std::string& grid_path, const std::string& out_path,
                 const std::string& raw_path) {
  nzprop::SimGrid grid = nzprop::parse_sim_grid_file(grid_path);

  nzprop::RunOptions opts;
  opts.delta = grid.config.delta;
  opts.mcp = grid.config.mcp;
  opts.phase = grid.config.phase_config();
  opts.threads = thread_override(grid.config.resolved_threads());

  std::ofstream out(out_path);
  if (!out) throw nzprop::IoError("cannot write file: " + out_path);
  std::ofstream raw;
  if (!raw_path.empty()) {
    raw.open(raw_path);
    if (!raw) throw nzprop::IoError("cannot write file: " + raw_path);
    raw << nzprop::sim_raw_header();
  }
  out << nzprop::sim_table_header();
  for (const nzprop::SimScenario& s : grid.scenarios) {
    const nzprop::SimSummary summary = nzprop::run_scenario(s, opts);
    out << nzprop::sim_summary_rows(summary);
    if (raw.is_open()) raw << nzprop::sim_raw_rows(summary);
    for (const std::string& err : summary.errors) {
      std::cerr << "warning: " << nzprop::to_string(s.kind) << " pi=" << s.pi
                << " mu_star=" << s.mu_star << ": " << err << '\n';
    }
    std::cout << nzprop::to_string(s.kind) << " pi=" << s.pi
              << " mu_star=" << s.mu_star << " m=" << s.m << ": New bias="
              << nzprop::format_double(summary.new_estimator.bias)
              << " std=" << nzprop::format_double(summary.new_estimator.std_dev)
              << " (ok " << summary.n_ok << "/" << s.replications << ")\n";
  }
  for (const std::string& reject : grid.rejects) {
    out << "# reject: " << reject << '\n';
    std::cerr << "reject: " << reject << '\n';
  }
  if (!out) throw nzprop::IoError("write failed: " + out_path);
  if (!grid.rejects.empty() || grid.scenarios.empty()) {
    if (grid.scenarios.empty()) std::cerr << "no valid scenarios\n";
    return kExitPartial;
  }
  return kExitOk;
}

int cmd_spectrum(const std::string& sigma_path, int top_n) {
  const Eigen::MatrixXd s = nzprop::read_matrix_csv(sigma_path);
  if (s.rows() != s.cols()) {
    std::ostringstream msg;
    msg << "sigma must be square, got " << s.rows() << "x" << s.cols();
    throw nzprop::ValidationError(msg.str());
  }
  const nzprop::CorrelationMatrix sigma{s};
  const nzprop::Spectrum spectrum = nzprop::eigendecompose(sigma);
  const int m = static_cast<int>(spectrum.dim());
  if (top_n > m) {
    std::cerr << "warning: top " << top_n << " clipped to m = " << m << '\n';
    top_n = m;
  }
  for (int i = 0; i < top_n; ++i) {
    std::cout << "lambda[" << (i + 1)
              << "] = " << nzprop::format_double(spectrum.eigenvalues(i))
              << '\n';
  }
  for (const double delta : {0.3, 0.5, 0.7}) {
    std::cout << "k(delta=" << nzprop::format_double(delta)
              << ") = " << nzprop::choose_num_factors(spectrum, delta) << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proportion of nonzero Normal means under strong correlation"};
  app.set_version_flag("--version", nzprop::kVersion);
  app.require_subcommand(1);

  std::string z_path, sigma_path, config_path, grid_path, out_path, raw_path;
  int top_n = 20;

  CLI::App* estimate =
      app.add_subcommand("estimate", "Estimate the nonzero-mean proportion");
  estimate->add_option("--z", z_path, "observation vector, one value per line")
      ->required();
  estimate->add_option("--sigma", sigma_path, "correlation matrix CSV")
      ->required();
  estimate->add_option("--config", config_path, "run configuration JSON");

  CLI::App* simulate =
      app.add_subcommand("simulate", "Run a scenario grid and tabulate bias/std");
  simulate->add_option("--grid", grid_path, "scenario grid JSON")->required();
  simulate->add_option("--out", out_path, "output CSV path")->required();
  simulate->add_option("--raw", raw_path,
                       "also write per-replication estimates to this CSV");

  CLI::App* spectrum =
      app.add_subcommand("spectrum", "Print leading eigenvalues and factor counts");
  spectrum->add_option("--sigma", sigma_path, "correlation matrix CSV")
      ->required();
  spectrum->add_option("--top", top_n, "how many eigenvalues to print");

  try {
    app.parse(argc, argv);
    if (estimate->parsed()) {
      return cmd_estimate(z_path, sigma_path, config_path);
    }
    if (simulate->parsed()) {
      return cmd_simulate(grid_path, out_path, raw_path);
    }
    if (spectrum->parsed()) return cmd_spectrum(sigma_path, top_n);
    return kExitValidation;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const nzprop::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const nzprop::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}
