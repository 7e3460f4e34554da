#include "nzprop/simgen.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>
#include <utility>

#include "nzprop/pipeline.hpp"

namespace nzprop {

const char* to_string(DependenceKind kind) {
  switch (kind) {
    case DependenceKind::Block: return "Block";
    case DependenceKind::EqualCorr: return "EqualCorr";
    case DependenceKind::ThreeFactors: return "ThreeFactors";
    case DependenceKind::TwoComponents: return "TwoComponents";
    case DependenceKind::Unstructured: return "Unstructured";
  }
  return "?";
}

DependenceKind dependence_kind_from_string(const std::string& name) {
  if (name == "Block") return DependenceKind::Block;
  if (name == "EqualCorr") return DependenceKind::EqualCorr;
  if (name == "ThreeFactors") return DependenceKind::ThreeFactors;
  if (name == "TwoComponents") return DependenceKind::TwoComponents;
  if (name == "Unstructured") return DependenceKind::Unstructured;
  throw ValidationError("unknown dependence kind: " + name);
}

std::uint64_t replication_seed(std::uint64_t scenario_seed, int replication) {
  std::uint64_t z = scenario_seed +
                    (static_cast<std::uint64_t>(replication) + 1) *
                        0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Eigen::VectorXd gen_mu(int m, double pi, double mu_star, Rng& rng) {
  if (m < 1) throw ValidationError("gen_mu: m must be >= 1");
  if (!(pi >= 0.0 && pi <= 1.0)) {
    throw ValidationError("gen_mu: pi must be in [0, 1]");
  }
  if (!(mu_star > 0.0)) throw ValidationError("gen_mu: mu_star must be > 0");

  // Round-half-up on the null count; the standard grids make it integral.
  const int m0 = static_cast<int>(
      std::floor(static_cast<double>(m) * (1.0 - pi) + 0.5));
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(m);
  std::uniform_real_distribution<double> magnitude(mu_star, mu_star + 1.0);
  std::bernoulli_distribution negative(0.5);
  for (int j = m0; j < m; ++j) {
    const double mag = magnitude(rng);
    mu(j) = negative(rng) ? -mag : mag;
  }
  return mu;
}

namespace {

constexpr double kEqualCorrRho = 0.5;

struct BlockLayout {
  int c0;          // number of shared noise terms, 0.01 m
  int tail_start;  // first dependent coordinate, 0.95 m
  double idio_sd;  // sqrt(1 - 0.04 c0)
};

BlockLayout block_layout(int m) {
  const double c0d = 0.01 * static_cast<double>(m);
  const double td = 0.95 * static_cast<double>(m);
  const double c0r = std::round(c0d);
  const double tdr = std::round(td);
  if (std::abs(c0d - c0r) > 1e-9 || std::abs(td - tdr) > 1e-9 || c0r < 1.0) {
    std::ostringstream msg;
    msg << "Block dependence needs 0.01*m and 0.95*m integral, got m = " << m;
    throw ValidationError(msg.str());
  }
  BlockLayout b;
  b.c0 = static_cast<int>(c0r);
  b.tail_start = static_cast<int>(tdr);
  const double shared_var = 0.04 * static_cast<double>(b.c0);
  if (shared_var >= 1.0) {
    std::ostringstream msg;
    msg << "Block dependence needs 0.2^2 * c0 < 1, got c0 = " << b.c0;
    throw ValidationError(msg.str());
  }
  b.idio_sd = std::sqrt(1.0 - shared_var);
  return b;
}

// Alternating +/-0.2 shared-noise coefficient, +0.2 first.
double block_coef(int j) { return (j % 2 == 0) ? 0.2 : -0.2; }

// Raw per-coordinate variance of the three-factor construction.
constexpr double kThreeFactorVar = 1.0 + 0.0625 + 0.04 + 0.015625;  // 1.118125
constexpr double kThreeFactorCov = 0.0625 + 0.04 + 0.015625;        // 0.118125

Eigen::MatrixXd structured_sigma_entries(DependenceKind kind, int m) {
  Eigen::MatrixXd s;
  switch (kind) {
    case DependenceKind::Block: {
      const BlockLayout b = block_layout(m);
      s = Eigen::MatrixXd::Identity(m, m);
      const double within = 0.04 * static_cast<double>(b.c0);
      for (int l = b.tail_start; l < m; ++l) {
        for (int j = 0; j < b.c0; ++j) {
          s(j, l) = block_coef(j);
          s(l, j) = block_coef(j);
        }
        for (int l2 = b.tail_start; l2 < m; ++l2) {
          if (l2 != l) s(l, l2) = within;
        }
      }
      break;
    }
    case DependenceKind::EqualCorr: {
      s = Eigen::MatrixXd::Constant(m, m, 1.0 - kEqualCorrRho);
      s.diagonal().setOnes();
      break;
    }
    case DependenceKind::ThreeFactors: {
      s = Eigen::MatrixXd::Constant(m, m, kThreeFactorCov / kThreeFactorVar);
      s.diagonal().setOnes();
      break;
    }
    case DependenceKind::TwoComponents: {
      s = Eigen::MatrixXd::Constant(m, m, 0.5);
      const double r = -1.0 / std::sqrt(2.0);
      s.row(0).setConstant(r);
      s.col(0).setConstant(r);
      s.diagonal().setOnes();
      break;
    }
    case DependenceKind::Unstructured:
      throw ValidationError(
          "Unstructured has no fixed correlation matrix; it is drawn per "
          "replication");
  }
  return s;
}

Eigen::VectorXd draw_structured_impl(DependenceKind kind, int m, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(m);
  switch (kind) {
    case DependenceKind::Block: {
      const BlockLayout b = block_layout(m);
      Eigen::VectorXd eps(m);
      for (int i = 0; i < m; ++i) eps(i) = normal(rng);
      double shared = 0.0;
      for (int j = 0; j < b.c0; ++j) shared += block_coef(j) * eps(j);
      for (int i = 0; i < b.tail_start; ++i) z(i) = eps(i);
      for (int i = b.tail_start; i < m; ++i) {
        z(i) = shared + b.idio_sd * eps(i);
      }
      break;
    }
    case DependenceKind::EqualCorr: {
      // Exact one-factor representation of rho I + (1 - rho) 1 1^T.
      const double common = std::sqrt(1.0 - kEqualCorrRho) * normal(rng);
      const double idio = std::sqrt(kEqualCorrRho);
      for (int i = 0; i < m; ++i) z(i) = common + idio * normal(rng);
      break;
    }
    case DependenceKind::ThreeFactors: {
      const double f1 = normal(rng);
      const double f2 = normal(rng);
      const double f3 = normal(rng);
      const double scale = 1.0 / std::sqrt(kThreeFactorVar);
      const double shared = -0.25 * f1 + 0.2 * f2 - 0.125 * f3;
      for (int i = 0; i < m; ++i) {
        z(i) = (shared + normal(rng)) * scale;
      }
      break;
    }
    case DependenceKind::TwoComponents: {
      const double e1 = normal(rng);
      z(0) = e1;
      const double scale = 1.0 / std::sqrt(2.0);
      for (int i = 1; i < m; ++i) {
        z(i) = (-e1 + normal(rng)) * scale;
      }
      break;
    }
    case DependenceKind::Unstructured:
      throw ValidationError(
          "draw_structured: Unstructured draws carry their own sigma; use "
          "gen_dependence");
  }
  return z;
}

struct UnstructuredDraw {
  Eigen::VectorXd z_star;
  CorrelationMatrix sigma;
  Spectrum spectrum;
};

// Q is drawn row-major (4 entries per coordinate), then the sampling noise.
UnstructuredDraw draw_unstructured(int m, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd q(m, 4);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < 4; ++j) q(i, j) = normal(rng);
  }
  // Zero-mean row correlations: H = R R^T with R the row-normalized Q. This
  // keeps H rank 4, which is what gives sigma its 4 dominant eigenvalues.
  Eigen::MatrixXd r = q;
  for (int i = 0; i < m; ++i) {
    const double n = r.row(i).norm();
    if (n > 0.0) r.row(i) /= n;
  }
  Eigen::MatrixXd s = 0.4 * (r * r.transpose());
  s += 0.6 * Eigen::MatrixXd::Identity(m, m);
  s.diagonal().setOnes();
  // r r^T is symmetric only up to round-off; make it exact.
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) s(j, i) = s(i, j);
  }

  UnstructuredDraw out{Eigen::VectorXd(), CorrelationMatrix(std::move(s)),
                       Spectrum()};
  out.spectrum = eigendecompose(out.sigma);

  Eigen::VectorXd eps(m);
  for (int i = 0; i < m; ++i) eps(i) = normal(rng);
  // Symmetric square root: V diag(sqrt(lambda)) V^T eps.
  Eigen::VectorXd u = out.spectrum.eigenvectors.transpose() * eps;
  for (int j = 0; j < m; ++j) {
    u(j) *= std::sqrt(std::max(out.spectrum.eigenvalues(j), 0.0));
  }
  out.z_star = out.spectrum.eigenvectors * u;
  return out;
}

// Structured correlation matrices are fixed given (kind, m), so their
// decompositions are memoized; a grid touching the same structure at several
// signal levels pays for one solve.
const Spectrum& cached_structured_spectrum(DependenceKind kind, int m) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, Spectrum> cache;
  const std::pair<int, int> key{static_cast<int>(kind), m};
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, eigendecompose(structured_sigma(kind, m))).first;
  }
  return it->second;
}

double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

CorrelationMatrix structured_sigma(DependenceKind kind, int m) {
  if (m < 2) throw ValidationError("structured_sigma: m must be >= 2");
  return CorrelationMatrix(structured_sigma_entries(kind, m));
}

Eigen::VectorXd draw_structured(DependenceKind kind, int m, Rng& rng) {
  if (m < 2) throw ValidationError("draw_structured: m must be >= 2");
  return draw_structured_impl(kind, m, rng);
}

DependenceDraw gen_dependence(DependenceKind kind, int m, Rng& rng) {
  if (m < 2) throw ValidationError("gen_dependence: m must be >= 2");
  if (kind == DependenceKind::Unstructured) {
    UnstructuredDraw d = draw_unstructured(m, rng);
    return DependenceDraw{std::move(d.z_star), std::move(d.sigma)};
  }
  DependenceDraw out{draw_structured(kind, m, rng),
                     structured_sigma(kind, m)};
  return out;
}

void validate_scenario(const SimScenario& scenario) {
  if (scenario.replications < 1) {
    throw ValidationError("scenario: replications must be >= 1");
  }
  if (scenario.m < 2) throw ValidationError("scenario: m must be >= 2");
  if (!(scenario.pi >= 0.0 && scenario.pi <= 1.0)) {
    throw ValidationError("scenario: pi must be in [0, 1]");
  }
  if (!(scenario.mu_star > 0.0)) {
    throw ValidationError("scenario: mu_star must be > 0");
  }
  if (scenario.kind == DependenceKind::Block) {
    block_layout(scenario.m);
  }
}

SimSummary run_scenario(const SimScenario& scenario, const RunOptions& opts) {
  validate_scenario(scenario);
  opts.mcp.validate();
  opts.phase.validate();
  if (!(opts.delta > 0.0 && opts.delta < 1.0)) {
    throw ValidationError("run_scenario: delta must be in (0, 1)");
  }

  const int n = scenario.replications;
  const bool structured = scenario.kind != DependenceKind::Unstructured;

  // Fixed matrices are decomposed once and shared read-only by the workers.
  const Spectrum* shared_spectrum = nullptr;
  if (structured) {
    shared_spectrum =
        &cached_structured_spectrum(scenario.kind, scenario.m);
  }

  std::vector<double> new_raw(static_cast<size_t>(n),
                              std::numeric_limits<double>::quiet_NaN());
  std::vector<double> ben_raw(static_cast<size_t>(n),
                              std::numeric_limits<double>::quiet_NaN());
  std::vector<int> ks(static_cast<size_t>(n), -1);
  std::vector<std::string> rep_errors(static_cast<size_t>(n));

  auto run_rep = [&](int r) {
    try {
      Rng rng(replication_seed(scenario.seed, r));
      const Eigen::VectorXd mu =
          gen_mu(scenario.m, scenario.pi, scenario.mu_star, rng);
      Eigen::VectorXd z_star;
      EstimateResult est;
      if (structured) {
        z_star = draw_structured(scenario.kind, scenario.m, rng);
        const Eigen::VectorXd z = mu + z_star;
        est = estimate_pi(z, *shared_spectrum, opts.delta, opts.mcp,
                          opts.phase);
        ben_raw[static_cast<size_t>(r)] =
            1.0 - benjamini_pi0(z_to_pvalues(z));
      } else {
        UnstructuredDraw d = draw_unstructured(scenario.m, rng);
        const Eigen::VectorXd z = mu + d.z_star;
        est = estimate_pi(z, d.spectrum, opts.delta, opts.mcp, opts.phase);
        ben_raw[static_cast<size_t>(r)] =
            1.0 - benjamini_pi0(z_to_pvalues(z));
      }
      new_raw[static_cast<size_t>(r)] = est.pi_tilde;
      ks[static_cast<size_t>(r)] = est.k_used;
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "rep " << r << ": " << e.what();
      rep_errors[static_cast<size_t>(r)] = msg.str();
    }
  };

  const int threads = std::max(1, opts.threads);
  if (threads == 1 || n == 1) {
    for (int r = 0; r < n; ++r) run_rep(r);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int r = next.fetch_add(1); r < n; r = next.fetch_add(1)) {
        run_rep(r);
      }
    };
    std::vector<std::thread> pool;
    const int nw = std::min(threads, n);
    pool.reserve(static_cast<size_t>(nw));
    for (int i = 0; i < nw; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SimSummary summary;
  summary.scenario = scenario;
  for (int r = 0; r < n; ++r) {
    if (!rep_errors[static_cast<size_t>(r)].empty()) {
      summary.errors.push_back(rep_errors[static_cast<size_t>(r)]);
      continue;
    }
    summary.new_raw.push_back(new_raw[static_cast<size_t>(r)]);
    summary.benjamini_raw.push_back(ben_raw[static_cast<size_t>(r)]);
    summary.rep_indices.push_back(r);
    summary.k_counts[ks[static_cast<size_t>(r)]]++;
  }
  summary.n_ok = static_cast<int>(summary.new_raw.size());

  auto aggregate = [&](const std::vector<double>& xs) {
    EstimatorStats stats;
    if (xs.empty()) {
      stats.bias = std::numeric_limits<double>::quiet_NaN();
      stats.std_dev = std::numeric_limits<double>::quiet_NaN();
      return stats;
    }
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    stats.bias = mean - scenario.pi;
    stats.std_dev = sample_std(xs, mean);
    return stats;
  };
  summary.new_estimator = aggregate(summary.new_raw);
  summary.benjamini = aggregate(summary.benjamini_raw);
  return summary;
}

}  // namespace nzprop
