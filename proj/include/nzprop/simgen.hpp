#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "nzprop/cppls.hpp"
#include "nzprop/ftm.hpp"
#include "nzprop/spectral.hpp"

namespace nzprop {

enum class DependenceKind { Block, EqualCorr, ThreeFactors, TwoComponents, Unstructured };

const char* to_string(DependenceKind kind);
DependenceKind dependence_kind_from_string(const std::string& name);

/// One cell of the simulation grid.
struct SimScenario {
  DependenceKind kind = DependenceKind::EqualCorr;
  int m = 2000;
  double pi = 0.1;
  double mu_star = 3.0;
  int replications = 100;
  std::uint64_t seed = 0;
};

struct EstimatorStats {
  double bias = 0.0;
  double std_dev = 0.0;  // sample (n-1) divisor; NaN when n_ok < 2
};

struct SimSummary {
  SimScenario scenario;
  EstimatorStats new_estimator;
  EstimatorStats benjamini;
  std::vector<double> new_raw;        // per-replication raw estimates
  std::vector<double> benjamini_raw;
  std::vector<int> rep_indices;       // replication index behind each entry
  std::map<int, int> k_counts;        // observed factor counts
  std::vector<std::string> errors;    // "rep <r>: <message>" for failed reps
  int n_ok = 0;
};

using Rng = std::mt19937_64;

/// Sub-seed for replication r: splitmix64-style mix of
/// scenario_seed + (r + 1) * 0x9E3779B97F4A7C15, so individual replications
/// are reproducible in isolation and independent of execution order.
std::uint64_t replication_seed(std::uint64_t scenario_seed, int replication);

/// Sparse mean vector: the first round(m * (1 - pi)) entries are 0; each
/// remaining entry has magnitude Uniform[mu_star, mu_star + 1] and an
/// independent +/-1 sign. Per nonzero coordinate, the magnitude is drawn
/// before the sign.
Eigen::VectorXd gen_mu(int m, double pi, double mu_star, Rng& rng);

/// The exact correlation matrix of a structured dependence kind (Block,
/// EqualCorr, ThreeFactors, TwoComponents). Throws for Unstructured, whose
/// matrix is drawn per replication.
CorrelationMatrix structured_sigma(DependenceKind kind, int m);

/// Throws ValidationError when a scenario is malformed (ranges, replication
/// count, Block integrality constraints on m).
void validate_scenario(const SimScenario& scenario);

/// One draw from a structured kind's factor construction (unit-variance
/// coordinates, correlation structured_sigma(kind, m)). Throws for
/// Unstructured. Noise consumption order per kind: Block m, EqualCorr 1 + m,
/// ThreeFactors 3 + m, TwoComponents m, always front to back.
Eigen::VectorXd draw_structured(DependenceKind kind, int m, Rng& rng);

struct DependenceDraw {
  Eigen::VectorXd z_star;
  CorrelationMatrix sigma;
};

/// One standardized draw together with its exact correlation matrix.
/// Structured kinds use their defining factor constructions (each coordinate
/// divided by its theoretical standard deviation); Unstructured draws a fresh
/// m x 4 matrix Q, forms sigma = 0.4 H + 0.6 I from the zero-mean row
/// correlations of Q, and samples via the symmetric square root.
DependenceDraw gen_dependence(DependenceKind kind, int m, Rng& rng);

struct RunOptions {
  double delta = 0.5;
  McpConfig mcp;
  PhaseConfig phase;
  int threads = 1;  // number of worker threads for replications
};

/// Runs the replication protocol for one scenario: per replication draw mu,
/// draw (z_star, sigma), form z = mu + z_star, apply the phase-function
/// estimator and the median-based baseline, then aggregate bias and sample
/// standard deviation. Structured correlation matrices are decomposed once
/// and shared across replications. Failed replications are recorded without
/// aborting the scenario. Results are independent of the thread count.
SimSummary run_scenario(const SimScenario& scenario, const RunOptions& opts);

}  // namespace nzprop
