#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "nzprop/pipeline.hpp"
#include "support/oracles.hpp"

using namespace nzprop;

namespace {

CorrelationMatrix equicorr(int m) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(m, m, 0.5);
  s.diagonal().setOnes();
  return CorrelationMatrix(std::move(s));
}

}  // namespace

TEST_CASE("zero observations under independence: pinned regression value") {
  // With sigma = I the factor count is 0, v* = z = 0 and
  // pi_tilde = 1 - kappa_1(t*; 0) with t* = sqrt(2 * 0.3 * log m); the
  // expected values below were precomputed with mpmath.
  McpConfig mcp;
  PhaseConfig phase;
  SUBCASE("m = 100") {
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(100);
    const EstimateResult r = estimate_pi(
        z, CorrelationMatrix(Eigen::MatrixXd::Identity(100, 100)), 0.5, mcp,
        phase);
    CHECK(r.k_used == 0);
    CHECK(r.t_star == doctest::Approx(1.6622581362691099).epsilon(1e-14));
    CHECK(r.pi_tilde == doctest::Approx(-0.31371054704448735).epsilon(1e-10));
    CHECK(r.pi0_tilde == 1.0 - r.pi_tilde);
    CHECK(r.pi_tilde_clipped == 0.0);
    CHECK(r.gamma_m == doctest::Approx(std::sqrt(2.0 * std::log(100.0))));
    CHECK(r.cppls_converged);
  }
  SUBCASE("m = 10") {
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(10);
    const EstimateResult r = estimate_pi(
        z, CorrelationMatrix(Eigen::MatrixXd::Identity(10, 10)), 0.5, mcp,
        phase);
    CHECK(r.k_used == 0);
    CHECK(r.pi_tilde == doctest::Approx(-0.13322943679525856).epsilon(1e-10));
  }
}

TEST_CASE("sign-flip invariance is bitwise") {
  std::mt19937_64 rng(606);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int m = 120;
  const CorrelationMatrix sigma = equicorr(m);
  const Spectrum spectrum = eigendecompose(sigma);
  Eigen::VectorXd z(m);
  for (int i = 0; i < m; ++i) {
    z(i) = normal(rng) + (i > 100 ? 3.5 : 0.0);
  }
  McpConfig mcp;
  PhaseConfig phase;
  const EstimateResult plus = estimate_pi(z, spectrum, 0.5, mcp, phase);
  const EstimateResult minus = estimate_pi(-z, spectrum, 0.5, mcp, phase);
  CHECK(plus.pi_tilde == minus.pi_tilde);
  CHECK(plus.lambda_star == minus.lambda_star);
  CHECK(plus.k_used == minus.k_used);
}

TEST_CASE("matrix and spectrum entry points agree") {
  std::mt19937_64 rng(2);
  const int m = 60;
  const Eigen::MatrixXd raw = testing::random_correlation(m, rng);
  const CorrelationMatrix sigma(raw);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(m);
  for (int i = 0; i < m; ++i) z(i) = normal(rng);
  McpConfig mcp;
  PhaseConfig phase;
  const EstimateResult a = estimate_pi(z, sigma, 0.5, mcp, phase);
  const EstimateResult b =
      estimate_pi(z, eigendecompose(sigma), 0.5, mcp, phase);
  CHECK(a.pi_tilde == b.pi_tilde);
  CHECK(a.k_used == b.k_used);
}

TEST_CASE("estimator input validation") {
  McpConfig mcp;
  PhaseConfig phase;
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(estimate_pi(Eigen::VectorXd::Zero(5), equicorr(4), 0.5,
                                mcp, phase),
                    ValidationError);
  }
  SUBCASE("too small") {
    CHECK_THROWS_AS(
        estimate_pi(Eigen::VectorXd::Zero(1),
                    CorrelationMatrix(Eigen::MatrixXd::Identity(1, 1)), 0.5,
                    mcp, phase),
        ValidationError);
  }
  SUBCASE("delta out of range") {
    CHECK_THROWS_AS(estimate_pi(Eigen::VectorXd::Zero(4), equicorr(4), 1.5,
                                mcp, phase),
                    ValidationError);
  }
}

TEST_CASE("p-value conversion") {
  SUBCASE("documented values") {
    Eigen::VectorXd z(3);
    z << 0.0, 1.959964, -1.959964;
    const PvalueVector p = z_to_pvalues(z);
    CHECK(p.values[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(p.values[1] == doctest::Approx(0.025).epsilon(1e-6));
    CHECK(p.values[2] == doctest::Approx(0.025).epsilon(1e-6));
  }
  SUBCASE("monotone in |z| and inside [0, 1/2]") {
    Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(200, -6.0, 6.0);
    const PvalueVector p = z_to_pvalues(z);
    for (int i = 0; i < 200; ++i) {
      CHECK(p.values[static_cast<size_t>(i)] >= 0.0);
      CHECK(p.values[static_cast<size_t>(i)] <= 0.5);
      for (int j = i + 1; j < 200; ++j) {
        if (std::abs(z(i)) <= std::abs(z(j))) {
          CHECK(p.values[static_cast<size_t>(i)] >=
                p.values[static_cast<size_t>(j)] - 1e-15);
        }
      }
    }
  }
  SUBCASE("erfc-level accuracy in the tail") {
    Eigen::VectorXd z(1);
    z << 5.0;
    // 1 - Phi(5) = 2.866515718791939e-07 (standard Normal tables).
    CHECK(z_to_pvalues(z).values[0] ==
          doctest::Approx(2.866515718791939e-07).epsilon(1e-10));
  }
  SUBCASE("non-finite rejected") {
    Eigen::VectorXd z(2);
    z << 0.0, std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(z_to_pvalues(z), ValidationError);
  }
}

TEST_CASE("median-based null-proportion estimate") {
  SUBCASE("hand-evaluated example") {
    PvalueVector p{{0.1, 0.2, 0.3, 0.4}};
    // (4 - 2 + 1) / (4 * (1 - 0.2)) = 3 / 3.2
    CHECK(benjamini_pi0(p) == doctest::Approx(0.9375).epsilon(1e-14));
  }
  SUBCASE("may exceed one; reported raw") {
    PvalueVector p{std::vector<double>(10, 0.5)};
    CHECK(benjamini_pi0(p) == doctest::Approx(1.2).epsilon(1e-14));
  }
  SUBCASE("order statistics, not input order") {
    PvalueVector p{{0.4, 0.1, 0.3, 0.2}};
    CHECK(benjamini_pi0(p) == doctest::Approx(0.9375).epsilon(1e-14));
  }
  SUBCASE("degenerate median p-value of 1") {
    PvalueVector p{{1.0, 1.0, 1.0, 1.0}};
    bool degenerate = false;
    CHECK(std::isinf(benjamini_pi0(p, &degenerate)));
    CHECK(degenerate);
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(benjamini_pi0(PvalueVector{{0.5}}), ValidationError);
    CHECK_THROWS_AS(benjamini_pi0(PvalueVector{{0.5, 1.5}}), ValidationError);
  }
}

TEST_CASE("null calibration smoke at small size") {
  // Full-scale calibration lives in the acceptance suite; this is a quick
  // guard against gross miscentering.
  const int m = 200;
  const Spectrum spectrum =
      eigendecompose(CorrelationMatrix(Eigen::MatrixXd::Identity(m, m)));
  McpConfig mcp;
  PhaseConfig phase;
  std::vector<double> estimates;
  for (int seed = 0; seed < 40; ++seed) {
    std::mt19937_64 rng(900 + seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(m);
    for (int i = 0; i < m; ++i) z(i) = normal(rng);
    estimates.push_back(
        estimate_pi(z, spectrum, 0.5, mcp, phase).pi_tilde);
  }
  CHECK(std::abs(testing::mean(estimates)) <= 0.06);
}
