#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "decorl/matrix.hpp"

namespace decorl::oracles {

/// Finite MDP with explicit transition tensor and expected rewards.
/// Terminal states are modelled as absorbing states with zero reward.
struct TabularMDP {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> transitions;  // p(s'|s,a), indexed [(s*A + a)*S + s']
  Matrix rewards;                   // r(s,a), [S x A]
  double gamma = 0.0;

  double p(std::size_t s, std::size_t a, std::size_t s_next) const {
    return transitions[(s * num_actions + a) * num_states + s_next];
  }

  /// Throws ConfigError unless every p(.|s,a) sums to 1 within 1e-12 and
  /// gamma lies in [0,1).
  void validate() const;
};

/// Fixed point of the Bellman optimality operator, iterated until the
/// sup-norm change guarantees ||Q - Q*||_inf < tol.
Matrix value_iteration(const TabularMDP& mdp, double tol);

/// One transition for the tabular reference learner.
struct TabularTransition {
  std::size_t s;
  std::size_t a;
  double r;
  std::size_t s_next;
  bool terminal;
};

/// In-place Q-learning update: Q(s,a) += alpha * (r + gamma max_a' Q(s',a') - Q(s,a)).
/// Terminal transitions drop the bootstrap term.
void tabular_q_learning_step(Matrix& q, const TabularTransition& t, double alpha,
                             double gamma);

/// Covariance of feature rows recomputed with explicit per-pair scalar loops.
/// Deliberately shares no code with losses::feature_covariance.
Matrix naive_covariance(const Matrix& features);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_coordinate = 0;
  double step = 0.0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

/// Central-difference check of an analytic gradient.
///
/// For each coordinate i the numeric derivative (f(x+h e_i) - f(x-h e_i)) / 2h
/// is compared to analytic[i]; the relative error uses the denominator
/// max(|analytic|, |numeric|, 1e-8). Throws NumericError when f evaluates to
/// a non-finite value.
GradCheckReport grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> x,
                           std::span<const double> analytic, double h = 1e-5);

/// Scalar linear quantile regression by subgradient descent on the check
/// loss sum_i rho_tau(y_i - x_i * beta). Uses a step/sqrt(k) schedule and
/// returns the mean of the second half of the iterates. Throws Error when
/// the loss grows past 10x its initial value (step size too large).
double linear_qr_fit(std::span<const double> xs, std::span<const double> ys,
                     double tau, std::size_t iterations, double step);

/// The chain and gridworld environments restated as explicit tabular MDPs,
/// built independently of the environments module so value iteration can
/// serve as an external check on them. State indices match the one-hot
/// observation layout; one extra trailing absorbing state models episode
/// termination.
TabularMDP make_chain_mdp(double gamma, std::size_t num_states = 5);
TabularMDP make_gridworld_mdp(double gamma, std::size_t side = 8, double slip = 0.1);

}  // namespace decorl::oracles
