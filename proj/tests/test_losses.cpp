#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "decorl/errors.hpp"
#include "decorl/losses.hpp"
#include "decorl/matrix.hpp"
#include "decorl/oracles.hpp"
#include "decorl/rng.hpp"

using decorl::CovarianceMatrix;
using decorl::DimensionError;
using decorl::Matrix;
using decorl::QuantileHead;
using decorl::Rng;
using decorl::UsageError;

namespace {

Matrix random_features(std::size_t n, std::size_t d, Rng& rng) {
  Matrix f(n, d);
  for (std::size_t i = 0; i < f.size(); ++i) f.data()[i] = rng.uniform(-2.0, 2.0);
  return f;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("feature covariance hand case") {
  const Matrix f = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
  const CovarianceMatrix cov = decorl::feature_covariance(f);
  CHECK(cov.d == 2);
  REQUIRE(cov.batch_mean.size() == 2);
  CHECK(cov.batch_mean[0] == 2.0);
  CHECK(cov.batch_mean[1] == 3.0);
  // Centered rows are (-1,-1) and (1,1); population normalization is 1/n.
  CHECK(cov.entries(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cov.entries(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cov.entries(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cov.entries(1, 1) == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(decorl::feature_covariance(Matrix(1, 3)), DimensionError);
}

TEST_CASE("feature covariance matches the naive oracle on random batches") {
  Rng rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix f = random_features(3 + rng.uniform_int(30), 2 + rng.uniform_int(16), rng);
    const CovarianceMatrix cov = decorl::feature_covariance(f);
    const Matrix oracle = decorl::oracles::naive_covariance(f);
    CHECK(decorl::max_abs_diff(cov.entries, oracle) <= 1e-12);
  }
}

TEST_CASE("covariance is symmetric and positive semidefinite") {
  Rng rng(67);
  const Matrix f = random_features(12, 6, rng);
  const CovarianceMatrix cov = decorl::feature_covariance(f);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(std::abs(cov.entries(i, j) - cov.entries(j, i)) <= 1e-15);
    }
  }
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(6);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    double quad = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t j = 0; j < 6; ++j) quad += v[i] * cov.entries(i, j) * v[j];
    }
    CHECK(quad >= -1e-10);
  }
}

TEST_CASE("covariance is shift invariant") {
  Rng rng(71);
  const Matrix f = random_features(10, 4, rng);
  Matrix shifted = f;
  const double offsets[4] = {5.0, -3.0, 100.0, 0.25};
  for (std::size_t t = 0; t < 10; ++t) {
    for (std::size_t j = 0; j < 4; ++j) shifted(t, j) += offsets[j];
  }
  const CovarianceMatrix a = decorl::feature_covariance(f);
  const CovarianceMatrix b = decorl::feature_covariance(shifted);
  CHECK(decorl::max_abs_diff(a.entries, b.entries) <= 1e-10);
}

TEST_CASE("correlation loss hand cases") {
  // d=2 with unit off-diagonal: (2/(4-2)) * 1^2 = 1.
  CovarianceMatrix cov;
  cov.d = 2;
  cov.entries = Matrix::from_rows({{3.0, 1.0}, {1.0, 5.0}});
  cov.batch_mean = {0.0, 0.0};
  CHECK(decorl::correlation_loss(cov) == doctest::Approx(1.0).epsilon(1e-15));

  // d=3 with lower-triangle entries {1,2,3}: (2/6)(1+4+9) = 14/3.
  CovarianceMatrix cov3;
  cov3.d = 3;
  cov3.entries = Matrix::from_rows(
      {{9.0, 1.0, 2.0}, {1.0, 9.0, 3.0}, {2.0, 3.0, 9.0}});
  cov3.batch_mean = {0.0, 0.0, 0.0};
  CHECK(decorl::correlation_loss(cov3) == doctest::Approx(14.0 / 3.0).epsilon(1e-15));

  // The diagonal must not contribute.
  CovarianceMatrix diag;
  diag.d = 3;
  diag.entries = Matrix::from_rows(
      {{4.0, 0.0, 0.0}, {0.0, 9.0, 0.0}, {0.0, 0.0, 16.0}});
  diag.batch_mean = {0.0, 0.0, 0.0};
  CHECK(decorl::correlation_loss(diag) == 0.0);

  CovarianceMatrix scalar;
  scalar.d = 1;
  scalar.entries = Matrix(1, 1, 2.0);
  scalar.batch_mean = {0.0};
  CHECK_THROWS_AS(decorl::correlation_loss(scalar), DimensionError);
}

TEST_CASE("correlation loss scales as c^4") {
  Rng rng(73);
  const Matrix f = random_features(9, 5, rng);
  const double base = decorl::correlation_loss(decorl::feature_covariance(f));
  REQUIRE(base > 0.0);
  for (double c : {0.5, 2.0, 10.0}) {
    Matrix scaled = f;
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled.data()[i] *= c;
    const double loss = decorl::correlation_loss(decorl::feature_covariance(scaled));
    CHECK(loss == doctest::Approx(base * c * c * c * c).epsilon(1e-12));
  }
}

TEST_CASE("correlation loss is invariant to feature and batch order") {
  Rng rng(79);
  const Matrix f = random_features(8, 4, rng);
  const double base = decorl::correlation_loss(decorl::feature_covariance(f));

  Matrix cols(8, 4);  // columns rotated by one
  for (std::size_t t = 0; t < 8; ++t) {
    for (std::size_t j = 0; j < 4; ++j) cols(t, j) = f(t, (j + 1) % 4);
  }
  CHECK(decorl::correlation_loss(decorl::feature_covariance(cols)) ==
        doctest::Approx(base).epsilon(1e-12));

  Matrix rows(8, 4);  // batch order reversed
  for (std::size_t t = 0; t < 8; ++t) {
    for (std::size_t j = 0; j < 4; ++j) rows(t, j) = f(7 - t, j);
  }
  CHECK(decorl::correlation_loss(decorl::feature_covariance(rows)) ==
        doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("correlation loss gradient matches finite differences") {
  Rng rng(83);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 4 + rng.uniform_int(8);
    const std::size_t d = 2 + rng.uniform_int(6);
    const Matrix f = random_features(n, d, rng);
    const Matrix grad = decorl::correlation_loss_grad(f);
    REQUIRE(grad.rows() == n);
    REQUIRE(grad.cols() == d);

    const auto loss = [&](std::span<const double> x) {
      Matrix probe(n, d);
      std::copy(x.begin(), x.end(), probe.data());
      return decorl::correlation_loss(decorl::feature_covariance(probe));
    };
    const std::vector<double> x(f.flat().begin(), f.flat().end());
    const std::vector<double> g(grad.flat().begin(), grad.flat().end());
    const auto report = decorl::oracles::grad_check(loss, x, g);
    CHECK(report.max_rel_error <= 1e-6);
  }
  CHECK_THROWS_AS(decorl::correlation_loss_grad(Matrix(5, 1)), DimensionError);
}

TEST_CASE("td loss hand case") {
  const std::vector<double> q = {1.0, 3.0};
  const std::vector<double> targets = {2.0, 1.0};
  const decorl::TdResult td = decorl::td_loss_and_grad(q, targets);
  CHECK(td.loss == doctest::Approx(1.25).epsilon(1e-15));
  REQUIRE(td.grad.size() == 2);
  CHECK(td.grad[0] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(td.grad[1] == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(decorl::td_loss_and_grad(q, std::vector<double>{1.0}),
                  DimensionError);
  CHECK_THROWS_AS(decorl::td_loss_and_grad(std::vector<double>{},
                                           std::vector<double>{}),
                  DimensionError);
}

TEST_CASE("td gradient matches finite differences") {
  Rng rng(89);
  std::vector<double> q(7), targets(7);
  for (std::size_t i = 0; i < 7; ++i) {
    q[i] = rng.uniform(-3.0, 3.0);
    targets[i] = rng.uniform(-3.0, 3.0);
  }
  const decorl::TdResult td = decorl::td_loss_and_grad(q, targets);
  const auto loss = [&](std::span<const double> x) {
    return decorl::td_loss_and_grad(x, targets).loss;
  };
  const auto report = decorl::oracles::grad_check(loss, q, td.grad);
  CHECK(report.max_rel_error <= 1e-8);
}

TEST_CASE("dqn target") {
  const std::vector<double> q_next = {3.0, 5.0, 2.0};
  CHECK(decorl::dqn_target(1.0, false, q_next, 0.9) ==
        doctest::Approx(5.5).epsilon(1e-15));
  CHECK(decorl::dqn_target(1.0, true, q_next, 0.9) == 1.0);
  CHECK(decorl::dqn_target(-1.0, false, q_next, 0.0) == -1.0);
  CHECK_THROWS_AS(decorl::dqn_target(0.0, false, q_next, 1.0), UsageError);
  CHECK_THROWS_AS(decorl::dqn_target(0.0, false, q_next, -0.1), UsageError);
  CHECK_THROWS_AS(decorl::dqn_target(0.0, false, std::vector<double>{}, 0.9),
                  DimensionError);
}

TEST_CASE("check function") {
  CHECK(decorl::check_function(3.0, 0.3) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(decorl::check_function(-3.0, 0.3) == doctest::Approx(2.1).epsilon(1e-15));
  CHECK(decorl::check_function(0.0, 0.7) == 0.0);
  CHECK_THROWS_AS(decorl::check_function(1.0, 0.0), UsageError);
  CHECK_THROWS_AS(decorl::check_function(1.0, 1.0), UsageError);

  // rho_tau(u) + rho_tau(-u) = |u|: the two slopes tau and 1-tau meet.
  Rng rng(97);
  for (int i = 0; i < 100; ++i) {
    const double u = rng.uniform(-5.0, 5.0);
    const double tau = rng.uniform(0.01, 0.99);
    CHECK(decorl::check_function(u, tau) + decorl::check_function(-u, tau) ==
          doctest::Approx(std::abs(u)).epsilon(1e-12));
  }
}

TEST_CASE("huber loss") {
  CHECK(decorl::huber(0.5, 1.0) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(decorl::huber(2.0, 1.0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(decorl::huber(-3.0, 1.0) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(decorl::huber(0.0, 1.0) == 0.0);
  // Both branches meet at |x| = kappa with value kappa^2/2.
  CHECK(decorl::huber(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(decorl::huber(1.0 + 1e-9, 1.0) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(decorl::huber(2.0, 4.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(decorl::huber(1.0, 0.0), UsageError);
  CHECK_THROWS_AS(decorl::huber(1.0, -1.0), UsageError);
}

TEST_CASE("quantile head levels are the midpoints") {
  const QuantileHead four(4, 1.0);
  REQUIRE(four.num_quantiles() == 4);
  CHECK(four.level(0) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(four.level(1) == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(four.level(2) == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(four.level(3) == doctest::Approx(0.875).epsilon(1e-15));
  CHECK(four.levels().size() == 4);
  CHECK_FALSE(four.inner_mean());

  const QuantileHead two(2, 0.5, true);
  CHECK(two.level(0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(two.level(1) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(two.kappa() == 0.5);
  CHECK(two.inner_mean());

  const QuantileHead one(1, 1.0);
  CHECK(one.level(0) == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(QuantileHead(0, 1.0), UsageError);
  CHECK_THROWS_AS(QuantileHead(4, 0.0), UsageError);
  CHECK_THROWS_AS(four.level(4), UsageError);
}

TEST_CASE("quantile huber hand case N=1") {
  const Matrix theta = Matrix::from_rows({{0.0}});
  const Matrix y = Matrix::from_rows({{2.0}});
  const QuantileHead head(1, 1.0);
  const auto res = decorl::quantile_huber_loss_and_grad(theta, y, head);
  // tau = 0.5, u = 2: loss = 0.5 * L_1(2) = 0.5 * 1.5, grad = -0.5 * L'(2).
  CHECK(res.loss == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(res.grad(0, 0) == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("quantile huber hand case N=2") {
  const Matrix theta = Matrix::from_rows({{0.0, 0.0}});
  const Matrix y = Matrix::from_rows({{1.0, -1.0}});
  const QuantileHead head(2, 1.0);
  const auto res = decorl::quantile_huber_loss_and_grad(theta, y, head);
  // Four terms with weights {.25,.75,.75,.25}, each L = 0.5; outer 1/N halves
  // the sum, the inner i' sum stays un-normalized.
  CHECK(res.loss == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(res.grad(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(res.grad(0, 1) == doctest::Approx(-0.25).epsilon(1e-14));

  const QuantileHead inner(2, 1.0, true);
  const auto res_inner = decorl::quantile_huber_loss_and_grad(theta, y, inner);
  CHECK(res_inner.loss == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(res_inner.grad(0, 0) == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(res_inner.grad(0, 1) == doctest::Approx(-0.125).epsilon(1e-14));
}

TEST_CASE("quantile huber is invariant to target column order") {
  Rng rng(101);
  const std::size_t n = 3, N = 4;
  Matrix theta(n, N), y(n, N), y_rev(n, N);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = 0; i < N; ++i) {
      theta(t, i) = rng.uniform(-2.0, 2.0);
      y(t, i) = rng.uniform(-2.0, 2.0);
    }
    for (std::size_t i = 0; i < N; ++i) y_rev(t, i) = y(t, N - 1 - i);
  }
  const QuantileHead head(N, 0.7);
  const auto a = decorl::quantile_huber_loss_and_grad(theta, y, head);
  const auto b = decorl::quantile_huber_loss_and_grad(theta, y_rev, head);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-13));
  CHECK(decorl::max_abs_diff(a.grad, b.grad) <= 1e-13);
}

TEST_CASE("quantile huber gradient matches finite differences") {
  Rng rng(103);
  const std::size_t n = 4, N = 3;
  const QuantileHead head(N, 1.0);
  // Keep every residual away from the Huber kinks at 0 and +-kappa so the
  // central difference stays O(h^2).
  Matrix theta(n, N), y(n, N);
  auto redraw = [&] {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      theta.data()[i] = rng.uniform(-3.0, 3.0);
      y.data()[i] = rng.uniform(-3.0, 3.0);
    }
  };
  bool clear = false;
  while (!clear) {
    redraw();
    clear = true;
    for (std::size_t t = 0; t < n && clear; ++t) {
      for (std::size_t i = 0; i < N && clear; ++i) {
        for (std::size_t ip = 0; ip < N && clear; ++ip) {
          const double u = std::abs(y(t, ip) - theta(t, i));
          if (u < 1e-3 || std::abs(u - 1.0) < 1e-3) clear = false;
        }
      }
    }
  }
  const auto res = decorl::quantile_huber_loss_and_grad(theta, y, head);
  const auto loss = [&](std::span<const double> x) {
    Matrix probe(n, N);
    std::copy(x.begin(), x.end(), probe.data());
    return decorl::quantile_huber_loss_and_grad(probe, y, head).loss;
  };
  const std::vector<double> x(theta.flat().begin(), theta.flat().end());
  const std::vector<double> g(res.grad.flat().begin(), res.grad.flat().end());
  const auto report = decorl::oracles::grad_check(loss, x, g);
  CHECK(report.max_rel_error <= 1e-6);
}

TEST_CASE("quantile huber validates shapes") {
  const QuantileHead head(2, 1.0);
  CHECK_THROWS_AS(
      decorl::quantile_huber_loss_and_grad(Matrix(2, 2), Matrix(3, 2), head),
      DimensionError);
  CHECK_THROWS_AS(
      decorl::quantile_huber_loss_and_grad(Matrix(2, 3), Matrix(2, 3), head),
      DimensionError);
  CHECK_THROWS_AS(
      decorl::quantile_huber_loss_and_grad(Matrix(0, 2), Matrix(0, 2), head),
      DimensionError);
}

TEST_CASE("qr target picks the action with the best quantile mean") {
  const Matrix theta_next = Matrix::from_rows({{1.0, 1.0}, {0.0, 4.0}});
  // Means are 1 and 2, so a* = 1 and y = r + gamma * (0, 4).
  const std::vector<double> y = decorl::qr_target(0.0, false, theta_next, 0.5);
  REQUIRE(y.size() == 2);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 2.0);

  // Exact mean tie resolves to the lowest action index.
  const Matrix tied = Matrix::from_rows({{2.0, 2.0}, {3.0, 1.0}});
  const std::vector<double> y_tie = decorl::qr_target(1.0, false, tied, 0.5);
  CHECK(y_tie[0] == 2.0);
  CHECK(y_tie[1] == 2.0);

  const std::vector<double> y_term = decorl::qr_target(-1.0, true, theta_next, 0.5);
  CHECK(y_term[0] == -1.0);
  CHECK(y_term[1] == -1.0);

  CHECK_THROWS_AS(decorl::qr_target(0.0, false, theta_next, 1.0), UsageError);
  CHECK_THROWS_AS(decorl::qr_target(0.0, false, Matrix(0, 0), 0.5), DimensionError);
}

TEST_CASE("quantile regression on bernoulli samples recovers (0,0,0,1)") {
  // Supervised analog of the qr agent's update: descend the quantile Huber
  // loss over a fixed Bernoulli(0.3) sample with tau = (.125,.375,.625,.875).
  // True quantiles sit at 0 below tau=0.7 and at 1 above it.
  Rng rng(107);
  const std::size_t n = 1000, N = 4;
  std::vector<double> samples(n);
  double hits = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    samples[t] = rng.uniform01() < 0.3 ? 1.0 : 0.0;
    hits += samples[t];
  }
  REQUIRE(hits / static_cast<double>(n) > 0.25);
  REQUIRE(hits / static_cast<double>(n) < 0.35);

  Matrix y(n, N);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = 0; i < N; ++i) y(t, i) = samples[t];
  }
  const QuantileHead head(N, 0.01);
  std::vector<double> theta(N, 0.5);
  for (std::size_t k = 1; k <= 4000; ++k) {
    Matrix pred(n, N);
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t i = 0; i < N; ++i) pred(t, i) = theta[i];
    }
    const auto res = decorl::quantile_huber_loss_and_grad(pred, y, head);
    const double lr = 20.0 / std::sqrt(static_cast<double>(k));
    for (std::size_t i = 0; i < N; ++i) {
      double column = 0.0;
      for (std::size_t t = 0; t < n; ++t) column += res.grad(t, i);
      theta[i] -= lr * column;
    }
  }
  CHECK(std::abs(theta[0] - 0.0) <= 0.05);
  CHECK(std::abs(theta[1] - 0.0) <= 0.05);
  CHECK(std::abs(theta[2] - 0.0) <= 0.05);
  CHECK(std::abs(theta[3] - 1.0) <= 0.05);
}

}  // TEST_SUITE
