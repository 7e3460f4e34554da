#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "nzprop/cppls.hpp"
#include "support/oracles.hpp"

using namespace nzprop;

namespace {

Spectrum equicorr_spectrum(int m) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(m, m, 0.5);
  s.diagonal().setOnes();
  return eigendecompose(CorrelationMatrix(s));
}

// Hand-assembled single-factor decomposition; unlike build_pfa it does not
// insist the implied major variances stay below 1, so synthetic cases like
// lambda = 4 with rho = e1 are expressible.
PfaDecomposition one_factor_pfa(double lambda1, const Eigen::VectorXd& rho1) {
  PfaDecomposition pfa;
  const Eigen::Index m = rho1.size();
  pfa.k = 1;
  pfa.loadings = std::sqrt(lambda1) * rho1;
  pfa.factor_variances = Eigen::VectorXd::Constant(1, lambda1);
  pfa.sigma_major_sq = lambda1 * rho1.array().square();
  pfa.minor_sd =
      (1.0 - pfa.sigma_major_sq.array()).max(0.0).sqrt().matrix();
  const double max_sd = pfa.minor_sd.maxCoeff();
  pfa.a_min = max_sd > 0.0 ? 1.0 / max_sd
                           : std::numeric_limits<double>::infinity();
  pfa.gamma_m = max_sd * std::sqrt(2.0 * std::log(static_cast<double>(m)));
  pfa.delta = 0.5;
  return pfa;
}

}  // namespace

TEST_CASE("mcp penalty values") {
  CHECK(mcp_penalty(0.0, 1.0, 3.7) == 0.0);
  // Saturated region: a*lambda^2/2.
  CHECK(mcp_penalty(10.0, 1.0, 3.7) == doctest::Approx(1.85).epsilon(1e-12));
  // Interior: lambda*t - t^2/(2a).
  CHECK(mcp_penalty(1.0, 1.0, 3.7) ==
        doctest::Approx(1.0 - 1.0 / 7.4).epsilon(1e-12));
  CHECK_THROWS_AS(mcp_penalty(-0.1, 1.0, 3.7), ValidationError);
  CHECK_THROWS_AS(mcp_penalty(1.0, -1.0, 3.7), ValidationError);
  CHECK_THROWS_AS(mcp_penalty(1.0, 1.0, 0.9), ValidationError);
}

TEST_CASE("mcp penalty matches numeric integration of its derivative") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> tdist(0.0, 12.0);
  std::uniform_real_distribution<double> ldist(0.0, 3.0);
  std::uniform_real_distribution<double> adist(1.1, 6.0);
  for (int i = 0; i < 200; ++i) {
    const double t = tdist(rng);
    const double lambda = ldist(rng);
    const double a = adist(rng);
    const double direct = mcp_penalty(t, lambda, a);
    const double integrated =
        testing::coordinate_objective(t, t, lambda, a);  // residual term is 0
    CHECK(std::abs(direct - integrated) <= 1e-9);
  }
}

TEST_CASE("mcp threshold closed form") {
  CHECK(mcp_threshold(0.0, 1.0, 3.7) == 0.0);
  CHECK(mcp_threshold(5.0, 1.0, 3.7) == 5.0);           // |r| >= a*lambda
  CHECK(mcp_threshold(1.0, 1.0, 3.7) ==
        doctest::Approx(0.578125).epsilon(1e-12));      // (1 - 0.5)/(1 - 1/7.4)
  CHECK(mcp_threshold(0.5, 1.0, 3.7) == 0.0);           // at the dead zone edge
  CHECK_THROWS_AS(mcp_threshold(1.0, 1.0, 0.4), ValidationError);
}

TEST_CASE("mcp threshold agrees with independent minimizers") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> rdist(-8.0, 8.0);
  std::uniform_real_distribution<double> ldist(0.01, 4.0);
  for (int i = 0; i < 400; ++i) {
    const double r = rdist(rng);
    const double lambda = ldist(rng);
    const double got = mcp_threshold(r, lambda, 3.7);
    CHECK(std::abs(got - testing::golden_section_threshold(r, lambda, 3.7)) <=
          1e-7);
  }
  // Spot checks against the blunt grid search as well.
  for (int i = 0; i < 25; ++i) {
    const double r = rdist(rng);
    const double lambda = ldist(rng);
    const double got = mcp_threshold(r, lambda, 3.7);
    CHECK(std::abs(got - testing::grid_search_threshold(r, lambda, 3.7)) <=
          1e-4);
  }
}

TEST_CASE("mcp threshold shape properties") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> ldist(0.01, 3.0);
  std::uniform_real_distribution<double> adist(1.05, 8.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double lambda = ldist(rng);
    const double a = adist(rng);
    double prev = mcp_threshold(-10.0, lambda, a);
    for (double r = -10.0; r <= 10.0; r += 0.05) {
      const double b = mcp_threshold(r, lambda, a);
      CHECK(std::abs(b) <= std::abs(r) + 1e-15);
      CHECK(b >= prev - 1e-15);  // non-decreasing in r
      // Odd symmetry is exact.
      CHECK(mcp_threshold(-r, lambda, a) == -b);
      prev = b;
    }
  }
}

TEST_CASE("lambda grid construction") {
  McpConfig cfg;
  SUBCASE("documented two-point example") {
    cfg.n_lambda = 2;
    cfg.lambda_min_ratio = 0.1;
    Eigen::VectorXd r(3);
    r << 1.0, -2.0, 0.5;
    const std::vector<double> grid = make_lambda_grid(r, cfg);
    REQUIRE(grid.size() == 2);
    CHECK(grid[0] == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(grid[1] == doctest::Approx(0.4).epsilon(1e-12));
    // The top of the grid zeroes every coordinate.
    for (int i = 0; i < 3; ++i) {
      CHECK(mcp_threshold(r(i), grid[0], cfg.a) == 0.0);
    }
  }
  SUBCASE("geometric endpoints and monotonicity") {
    Eigen::VectorXd r = Eigen::VectorXd::LinSpaced(10, -3.0, 2.0);
    const std::vector<double> grid = make_lambda_grid(r, cfg);
    REQUIRE(grid.size() == 50);
    CHECK(grid[0] == doctest::Approx(6.0));
    CHECK(grid[0] / grid[49] == doctest::Approx(1000.0).epsilon(1e-9));
    for (size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] < grid[i - 1]);
  }
  SUBCASE("all-zero residual degenerates") {
    bool degenerate = false;
    const std::vector<double> grid =
        make_lambda_grid(Eigen::VectorXd::Zero(4), cfg, &degenerate);
    CHECK(degenerate);
    REQUIRE(grid.size() == 1);
    CHECK(grid[0] == 0.0);
  }
  SUBCASE("empty residual rejected") {
    CHECK_THROWS_AS(make_lambda_grid(Eigen::VectorXd(), cfg),
                    ValidationError);
  }
}

TEST_CASE("beta step") {
  McpConfig cfg;
  SUBCASE("zero residual gives zero beta and zero objective") {
    Eigen::VectorXd z = Eigen::VectorXd::Constant(5, 2.0);
    const BetaStepResult r = beta_step(z, z, {1.0, 0.1}, cfg);
    CHECK(r.beta.isZero(0.0));
    CHECK(r.objective == 0.0);
    CHECK(r.lambda_star == 1.0);  // tie broken toward the larger lambda
  }
  SUBCASE("constant residual picks the saturated small lambda") {
    const Eigen::VectorXd z = Eigen::VectorXd::Constant(6, 5.0);
    const Eigen::VectorXd gw = Eigen::VectorXd::Zero(6);
    const BetaStepResult r = beta_step(z, gw, {4.0, 0.4}, cfg);
    CHECK(r.lambda_star == 0.4);
    for (int i = 0; i < 6; ++i) {
      CHECK(r.beta(i) == doctest::Approx(5.0));  // |r| >= a*lambda = 1.48
    }
    // Per-coordinate objective at the winner is the saturated penalty.
    CHECK(r.objective ==
          doctest::Approx(6 * 3.7 * 0.4 * 0.4 / 2.0).epsilon(1e-12));
    // And the oracle agrees with the implementation at the losing lambda too.
    double oracle_at_4 = 0.0;
    for (int i = 0; i < 6; ++i) {
      const double b = testing::golden_section_threshold(5.0, 4.0, cfg.a);
      oracle_at_4 += testing::coordinate_objective(b, 5.0, 4.0, cfg.a);
    }
    CHECK(oracle_at_4 > r.objective);
    CHECK(cppls_objective(z, Eigen::VectorXd::Constant(
                                 6, mcp_threshold(5.0, 4.0, cfg.a)),
                          gw, 4.0, cfg.a) ==
          doctest::Approx(oracle_at_4).epsilon(1e-8));
  }
  SUBCASE("small residual ties resolve to the sparsest solution") {
    Eigen::VectorXd z(1);
    z << 0.04;
    const BetaStepResult r =
        beta_step(z, Eigen::VectorXd::Zero(1), {2.0, 1.0, 0.5}, cfg);
    CHECK(r.beta(0) == 0.0);
    CHECK(r.lambda_star == 2.0);
    CHECK(r.objective == doctest::Approx(0.04 * 0.04));
  }
  SUBCASE("matches the brute-force minimizer on random instances") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> normal(0.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
      const int m = 1 + static_cast<int>(rng() % 20);
      Eigen::VectorXd z(m), gw(m);
      for (int i = 0; i < m; ++i) {
        z(i) = normal(rng);
        gw(i) = 0.3 * normal(rng);
      }
      const std::vector<double> grid = make_lambda_grid(z - gw, cfg);
      const BetaStepResult got = beta_step(z, gw, grid, cfg);

      double best_obj = std::numeric_limits<double>::infinity();
      Eigen::VectorXd best_beta(m);
      double best_lambda = 0.0;
      for (const double lambda : grid) {
        Eigen::VectorXd beta(m);
        double obj = 0.0;
        for (int i = 0; i < m; ++i) {
          beta(i) =
              testing::golden_section_threshold(z(i) - gw(i), lambda, cfg.a);
          obj += testing::coordinate_objective(beta(i), z(i) - gw(i), lambda,
                                               cfg.a);
        }
        if (obj < best_obj) {
          best_obj = obj;
          best_beta = beta;
          best_lambda = lambda;
        }
      }
      CHECK(got.lambda_star == doctest::Approx(best_lambda));
      CHECK(std::abs(got.objective - best_obj) <= 1e-6 * (1.0 + best_obj));
      for (int i = 0; i < m; ++i) {
        CHECK(std::abs(got.beta(i) - best_beta(i)) <= 1e-6);
      }
    }
  }
  SUBCASE("empty grid rejected") {
    CHECK_THROWS_AS(
        beta_step(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), {}, cfg),
        ValidationError);
  }
}

TEST_CASE("w step") {
  SUBCASE("zero residual gives zero coefficients") {
    const Eigen::VectorXd z = Eigen::VectorXd::Constant(4, 1.5);
    const PfaDecomposition pfa =
        one_factor_pfa(4.0, Eigen::VectorXd::Unit(4, 0));
    const Eigen::VectorXd w = w_step(z, z, pfa);
    REQUIRE(w.size() == 1);
    CHECK(w(0) == 0.0);
  }
  SUBCASE("hand-computed single factor") {
    // lambda = 4, rho = e1, residual = (6, 0, 0, 0): w = 6 / sqrt(4) / ... =
    // rho^T r / sqrt(lambda) = 6 / 2 = 3.
    Eigen::VectorXd z = Eigen::VectorXd::Zero(4);
    z(0) = 6.0;
    const PfaDecomposition pfa =
        one_factor_pfa(4.0, Eigen::VectorXd::Unit(4, 0));
    const Eigen::VectorXd w = w_step(z, Eigen::VectorXd::Zero(4), pfa);
    CHECK(w(0) == doctest::Approx(3.0).epsilon(1e-14));
  }
  SUBCASE("optimality against random probes") {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int m = 40;
    const Spectrum s =
        eigendecompose(CorrelationMatrix(testing::random_correlation(m, rng)));
    const PfaDecomposition pfa = build_pfa(s, 3, 0.5);
    Eigen::VectorXd z(m), beta(m);
    for (int i = 0; i < m; ++i) {
      z(i) = normal(rng);
      beta(i) = 0.2 * normal(rng);
    }
    const Eigen::VectorXd w = w_step(z, beta, pfa);
    const double base = (z - beta - pfa.loadings * w).squaredNorm();
    for (int probe = 0; probe < 100; ++probe) {
      Eigen::VectorXd other(3);
      for (int j = 0; j < 3; ++j) other(j) = w(j) + 0.5 * normal(rng);
      CHECK(base <= (z - beta - pfa.loadings * other).squaredNorm() + 1e-12);
    }
  }
  SUBCASE("near-zero factor variances are dropped") {
    Spectrum s;
    s.eigenvalues = Eigen::VectorXd::Zero(3);
    s.eigenvalues(0) = 0.9;
    s.eigenvalues(1) = 1e-14;
    s.eigenvectors = Eigen::MatrixXd::Identity(3, 3);
    const PfaDecomposition pfa = build_pfa(s, 2, 0.5);
    bool dropped = false;
    const Eigen::VectorXd w = w_step(Eigen::VectorXd::Constant(3, 1.0),
                                     Eigen::VectorXd::Zero(3), pfa, &dropped);
    CHECK(dropped);
    CHECK(w(1) == 0.0);
  }
}

TEST_CASE("alternating fit") {
  McpConfig cfg;
  SUBCASE("zero input converges immediately") {
    const int m = 12;
    const PfaDecomposition pfa = one_factor_pfa(
        3.0, Eigen::VectorXd::Constant(m, 1.0 / std::sqrt(double(m))));
    const CpplsFit fit = fit_cppls(Eigen::VectorXd::Zero(m), pfa, cfg);
    CHECK(fit.converged);
    CHECK(fit.n_iters <= 2);
    CHECK(fit.beta_hat.isZero(0.0));
    CHECK(fit.w_hat.isZero(0.0));
    CHECK(fit.degenerate_grid);
    CHECK(fit.objective_trace.front() == 0.0);
  }
  SUBCASE("noiseless factor signal is recovered") {
    const int m = 200;
    const Spectrum s = equicorr_spectrum(m);
    const PfaDecomposition pfa = build_pfa(s, 1, 0.5);
    Eigen::VectorXd w0(1);
    w0 << 2.0;
    const Eigen::VectorXd z = pfa.loadings * w0;
    const CpplsFit fit = fit_cppls(z, pfa, cfg);
    CHECK(fit.converged);
    CHECK((fit.eta_hat - z).norm() <= 0.05 * z.norm());
  }
  SUBCASE("k = 0 reduces to one thresholding pass") {
    Eigen::VectorXd z(4);
    z << 3.0, -0.01, 0.5, -2.0;
    Spectrum s;
    s.eigenvalues = Eigen::VectorXd::Ones(4);
    s.eigenvectors = Eigen::MatrixXd::Identity(4, 4);
    const PfaDecomposition pfa = build_pfa(s, 0, 0.5);
    const CpplsFit fit = fit_cppls(z, pfa, cfg);
    CHECK(fit.converged);
    CHECK(fit.n_iters == 1);
    CHECK(fit.w_hat.size() == 0);
    CHECK(fit.eta_hat.isZero(0.0));
  }
  SUBCASE("objective trace is non-increasing") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
      const int m = 60;
      const Spectrum s = eigendecompose(
          CorrelationMatrix(testing::random_correlation(m, rng)));
      const int k = choose_num_factors(s, 0.5);
      const PfaDecomposition pfa = build_pfa(s, std::max(k, 1), 0.5);
      Eigen::VectorXd z(m);
      for (int i = 0; i < m; ++i) z(i) = 2.0 * normal(rng);
      const CpplsFit fit = fit_cppls(z, pfa, cfg);
      for (size_t j = 1; j < fit.objective_trace.size(); ++j) {
        CHECK(fit.objective_trace[j] <=
              fit.objective_trace[j - 1] + 1e-12);
      }
      CHECK(fit.eta_hat == pfa.loadings * fit.w_hat);
    }
  }
  SUBCASE("sign equivariance is exact") {
    std::mt19937_64 rng(29);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int m = 80;
    const Spectrum s = equicorr_spectrum(m);
    const PfaDecomposition pfa = build_pfa(s, 1, 0.5);
    Eigen::VectorXd z(m);
    for (int i = 0; i < m; ++i) z(i) = 1.5 * normal(rng) + (i % 7 == 0);
    const CpplsFit plus = fit_cppls(z, pfa, cfg);
    const CpplsFit minus = fit_cppls(-z, pfa, cfg);
    CHECK(minus.beta_hat == -plus.beta_hat);
    CHECK(minus.w_hat == -plus.w_hat);
    CHECK(minus.lambda_star == plus.lambda_star);
  }
  SUBCASE("non-finite input rejected") {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(5);
    z(3) = std::numeric_limits<double>::infinity();
    const PfaDecomposition pfa = one_factor_pfa(
        2.0, Eigen::VectorXd::Constant(5, 1.0 / std::sqrt(5.0)));
    CHECK_THROWS_AS(fit_cppls(z, pfa, cfg), ValidationError);
  }
}

TEST_CASE("config validation") {
  McpConfig cfg;
  cfg.a = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = McpConfig{};
  cfg.n_lambda = 1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = McpConfig{};
  cfg.lambda_min_ratio = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = McpConfig{};
  cfg.tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
