#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nzprop/cppls.hpp"
#include "nzprop/ftm.hpp"
#include "nzprop/pipeline.hpp"
#include "nzprop/simgen.hpp"

namespace nzprop {

enum class OutputFormat { Json, Csv };

/// Run-wide settings. Parsing is strict: unknown keys anywhere in the config
/// file are rejected so a typo cannot silently fall back to a default.
struct RunConfig {
  double delta = 0.5;
  double gamma = 0.3;
  McpConfig mcp;
  int n_quad = 2000;
  double sigma_floor = 1e-12;
  int threads = 0;  // 0 = auto (hardware concurrency)
  std::uint64_t seed = 0;
  OutputFormat output_format = OutputFormat::Json;

  PhaseConfig phase_config() const {
    PhaseConfig p;
    p.gamma = gamma;
    p.n_quad = n_quad;
    p.sigma_floor = sigma_floor;
    return p;
  }
  void validate() const;
  int resolved_threads() const;  // applies the auto rule
};

RunConfig parse_run_config_file(const std::string& path);
RunConfig parse_run_config_text(const std::string& text);
std::string run_config_to_text(const RunConfig& cfg);

/// Scenario list for the simulation driver. Invalid entries are kept as
/// human-readable reject messages; the valid ones still run.
struct SimGrid {
  std::vector<SimScenario> scenarios;
  RunConfig config;
  std::vector<std::string> rejects;
};

SimGrid parse_sim_grid_file(const std::string& path);
SimGrid parse_sim_grid_text(const std::string& text);

/// Flattened result records with a software version tag; both formats
/// round-trip doubles losslessly.
std::string estimate_result_to_json(const EstimateResult& result,
                                    Eigen::Index m);
std::string estimate_result_to_csv(const EstimateResult& result,
                                   Eigen::Index m);
EstimateResult estimate_result_from_json(const std::string& text);

std::string sim_table_header();
std::string sim_summary_rows(const SimSummary& summary);

/// Per-replication estimate series for external plotting:
/// kind,pi,mu_star,m,seed,estimator,rep,estimate rows.
std::string sim_raw_header();
std::string sim_raw_rows(const SimSummary& summary);

}  // namespace nzprop
