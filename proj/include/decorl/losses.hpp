#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "decorl/matrix.hpp"

namespace decorl {

// Population covariance of a feature batch: Var = (1/n) sum_t (f_t - mean)(f_t - mean)^T.
// The 1/n normalization (not 1/(n-1)) and the batch mean are part of the contract.
struct CovarianceMatrix {
  std::size_t d = 0;
  Matrix entries;                  // d x d, symmetric
  std::vector<double> batch_mean;  // length d
};

CovarianceMatrix feature_covariance(const Matrix& features);

// Mean squared off-diagonal covariance entry: (2/(d^2-d)) * sum_{i>j} entries(i,j)^2.
// The regularization weight lambda is applied by the caller, not here.
double correlation_loss(const CovarianceMatrix& cov);

// Exact gradient of correlation_loss(feature_covariance(F)) with respect to F.
// The batch mean is a function of F, so the gradient flows through it; centering
// makes that term vanish analytically, which finite differences confirm.
Matrix correlation_loss_grad(const Matrix& features);

struct TdResult {
  double loss = 0.0;
  std::vector<double> grad;  // d(loss)/d(q_sa), length n
};

// loss = mean_t 1/2 (target_t - q_t)^2, targets constant. grad = (q - target)/n.
TdResult td_loss_and_grad(std::span<const double> q_sa, std::span<const double> targets);

// r + gamma * max(q_next_target), with the bootstrap dropped on terminal.
double dqn_target(double r, bool terminal, std::span<const double> q_next_target,
                  double gamma);

// rho_tau(u) = u * (tau - I{u < 0}).
double check_function(double u, double tau);

// L_kappa(x) = 1/2 x^2 on |x| <= kappa, else kappa (|x| - kappa/2).
double huber(double x, double kappa);

// Quantile midpoints tau_i = (i - 0.5)/N and the Huber threshold, shared by the
// quantile loss and the qr agents. inner_mean additionally divides the sum over
// target quantiles by N; off by default, matching the asymmetric normalization
// of the source formulation.
struct QuantileHead {
  QuantileHead(std::size_t num_quantiles, double kappa, bool inner_mean = false);

  std::size_t num_quantiles() const { return num_quantiles_; }
  double kappa() const { return kappa_; }
  bool inner_mean() const { return inner_mean_; }
  double level(std::size_t i) const;  // i in [0, N)
  const std::vector<double>& levels() const { return levels_; }

 private:
  std::size_t num_quantiles_;
  double kappa_;
  bool inner_mean_;
  std::vector<double> levels_;
};

struct QuantileHuberResult {
  double loss = 0.0;
  Matrix grad;  // d(loss)/d(theta_pred), n x N
};

// loss = (1/n) sum_t (1/N) sum_i sum_i' rho^kappa_{tau_i}(y(t,i') - theta(t,i)),
// y constant. Only the outer quantile index carries the 1/N unless the head
// requests the inner mean as well.
QuantileHuberResult quantile_huber_loss_and_grad(const Matrix& theta_pred,
                                                 const Matrix& y,
                                                 const QuantileHead& head);

// Distributional target y_i' = r + gamma * theta_next(a*, i'), a* the action with
// the highest quantile mean (ties to the lowest index). Terminal drops the
// bootstrap for every quantile.
std::vector<double> qr_target(double r, bool terminal, const Matrix& theta_next_target,
                              double gamma);

}  // namespace decorl
