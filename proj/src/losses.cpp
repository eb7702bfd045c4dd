#include "decorl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "decorl/errors.hpp"

namespace decorl {

namespace {

Matrix centered(const Matrix& features, const std::vector<double>& mean) {
  Matrix x = features;
  for (std::size_t t = 0; t < x.rows(); ++t) {
    auto row = x.row(t);
    for (std::size_t j = 0; j < x.cols(); ++j) row[j] -= mean[j];
  }
  return x;
}

}  // namespace

CovarianceMatrix feature_covariance(const Matrix& features) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (n < 2) {
    throw DimensionError("feature_covariance: batch size " + std::to_string(n) +
                         " is degenerate, need n >= 2");
  }
  CovarianceMatrix cov;
  cov.d = d;
  cov.batch_mean.assign(d, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    auto row = features.row(t);
    for (std::size_t j = 0; j < d; ++j) cov.batch_mean[j] += row[j];
  }
  for (double& m : cov.batch_mean) m /= static_cast<double>(n);
  const Matrix x = centered(features, cov.batch_mean);
  cov.entries = matmul_tn(x, x);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < cov.entries.size(); ++i) cov.entries.data()[i] *= inv_n;
  return cov;
}

double correlation_loss(const CovarianceMatrix& cov) {
  const std::size_t d = cov.d;
  if (d < 2) {
    throw DimensionError("correlation_loss: feature width " + std::to_string(d) +
                         " is degenerate, need d >= 2");
  }
  double sum = 0.0;
  for (std::size_t i = 1; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double v = cov.entries(i, j);
      sum += v * v;
    }
  }
  const double scale = 2.0 / (static_cast<double>(d) * static_cast<double>(d - 1));
  return scale * sum;
}

Matrix correlation_loss_grad(const Matrix& features) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (d < 2) {
    throw DimensionError("correlation_loss_grad: feature width " + std::to_string(d) +
                         " is degenerate, need d >= 2");
  }
  const CovarianceMatrix cov = feature_covariance(features);
  const Matrix x = centered(features, cov.batch_mean);
  Matrix offdiag = cov.entries;
  for (std::size_t i = 0; i < d; ++i) offdiag(i, i) = 0.0;
  // d(loss)/dF = (2c/n) X offdiag(V), c = 2/(d^2-d). The term through the batch
  // mean cancels because the centered columns sum to zero.
  Matrix grad = matmul(x, offdiag);
  const double scale = 4.0 / (static_cast<double>(d) * static_cast<double>(d - 1) *
                              static_cast<double>(n));
  for (std::size_t i = 0; i < grad.size(); ++i) grad.data()[i] *= scale;
  return grad;
}

TdResult td_loss_and_grad(std::span<const double> q_sa, std::span<const double> targets) {
  if (q_sa.size() != targets.size()) {
    throw DimensionError("td_loss_and_grad: " + std::to_string(q_sa.size()) +
                         " predictions vs " + std::to_string(targets.size()) +
                         " targets");
  }
  if (q_sa.empty()) throw DimensionError("td_loss_and_grad: empty batch");
  const double inv_n = 1.0 / static_cast<double>(q_sa.size());
  TdResult res;
  res.grad.resize(q_sa.size());
  for (std::size_t t = 0; t < q_sa.size(); ++t) {
    const double diff = targets[t] - q_sa[t];
    res.loss += 0.5 * diff * diff;
    res.grad[t] = (q_sa[t] - targets[t]) * inv_n;
  }
  res.loss *= inv_n;
  return res;
}

double dqn_target(double r, bool terminal, std::span<const double> q_next_target,
                  double gamma) {
  if (gamma < 0.0 || gamma >= 1.0) {
    throw UsageError("dqn_target: gamma must lie in [0,1)");
  }
  if (terminal) return r;
  if (q_next_target.empty()) throw DimensionError("dqn_target: empty action values");
  return r + gamma * *std::max_element(q_next_target.begin(), q_next_target.end());
}

double check_function(double u, double tau) {
  if (tau <= 0.0 || tau >= 1.0) throw UsageError("check_function: tau must lie in (0,1)");
  return u * (tau - (u < 0.0 ? 1.0 : 0.0));
}

double huber(double x, double kappa) {
  if (kappa <= 0.0) throw UsageError("huber: kappa must be positive");
  const double a = std::fabs(x);
  if (a <= kappa) return 0.5 * x * x;
  return kappa * (a - 0.5 * kappa);
}

QuantileHead::QuantileHead(std::size_t num_quantiles, double kappa, bool inner_mean)
    : num_quantiles_(num_quantiles), kappa_(kappa), inner_mean_(inner_mean) {
  if (num_quantiles_ == 0) throw UsageError("QuantileHead: need at least one quantile");
  if (kappa_ <= 0.0) throw UsageError("QuantileHead: kappa must be positive");
  levels_.resize(num_quantiles_);
  for (std::size_t i = 0; i < num_quantiles_; ++i) {
    levels_[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(num_quantiles_);
  }
}

double QuantileHead::level(std::size_t i) const {
  if (i >= num_quantiles_) throw UsageError("QuantileHead::level: index out of range");
  return levels_[i];
}

QuantileHuberResult quantile_huber_loss_and_grad(const Matrix& theta_pred,
                                                 const Matrix& y,
                                                 const QuantileHead& head) {
  if (!theta_pred.same_shape(y)) {
    throw DimensionError("quantile_huber_loss_and_grad: prediction/target shape mismatch");
  }
  const std::size_t n = theta_pred.rows();
  const std::size_t N = head.num_quantiles();
  if (n == 0) throw DimensionError("quantile_huber_loss_and_grad: empty batch");
  if (theta_pred.cols() != N) {
    throw DimensionError("quantile_huber_loss_and_grad: expected " + std::to_string(N) +
                         " quantile columns, got " + std::to_string(theta_pred.cols()));
  }
  const double kappa = head.kappa();
  double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(N));
  if (head.inner_mean()) scale /= static_cast<double>(N);
  QuantileHuberResult res;
  res.grad = Matrix(n, N);
  for (std::size_t t = 0; t < n; ++t) {
    auto yt = y.row(t);
    auto pt = theta_pred.row(t);
    auto gt = res.grad.row(t);
    for (std::size_t i = 0; i < N; ++i) {
      const double tau = head.level(i);
      double loss_i = 0.0;
      double grad_i = 0.0;
      for (std::size_t ip = 0; ip < N; ++ip) {
        const double x = yt[ip] - pt[i];
        const double w = std::fabs(tau - (x < 0.0 ? 1.0 : 0.0));
        loss_i += w * huber(x, kappa);
        // dL_kappa/dx, quadratic branch at the kink; d(x)/d(theta) = -1.
        const double dl = std::fabs(x) <= kappa ? x : kappa * (x < 0.0 ? -1.0 : 1.0);
        grad_i -= w * dl;
      }
      res.loss += loss_i;
      gt[i] = grad_i * scale;
    }
  }
  res.loss *= scale;
  return res;
}

std::vector<double> qr_target(double r, bool terminal, const Matrix& theta_next_target,
                              double gamma) {
  if (gamma < 0.0 || gamma >= 1.0) {
    throw UsageError("qr_target: gamma must lie in [0,1)");
  }
  const std::size_t N = theta_next_target.cols();
  if (N == 0 || theta_next_target.rows() == 0) {
    throw DimensionError("qr_target: empty next-state quantile table");
  }
  std::vector<double> y(N, r);
  if (terminal) return y;
  std::size_t best = 0;
  double best_mean = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < theta_next_target.rows(); ++a) {
    auto row = theta_next_target.row(a);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(N);
    if (mean > best_mean) {
      best_mean = mean;
      best = a;
    }
  }
  auto chosen = theta_next_target.row(best);
  for (std::size_t ip = 0; ip < N; ++ip) y[ip] = r + gamma * chosen[ip];
  return y;
}

}  // namespace decorl
