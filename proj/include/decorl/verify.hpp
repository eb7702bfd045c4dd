#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "decorl/losses.hpp"
#include "decorl/matrix.hpp"

namespace decorl {

// Self-checks pitting the library against the independent oracles. Each check
// runs many seeded random configurations and reports its worst error, so a
// single number decides pass/fail. The function-valued entry points exist so
// tests can inject broken implementations and confirm the checks would catch
// them.

using CorrelationGradFn = std::function<Matrix(const Matrix&)>;
using CovarianceFn = std::function<CovarianceMatrix(const Matrix&)>;

// Worst relative error of grad_fn against central finite differences over
// `trials` random feature batches.
double max_correlation_grad_error(const CorrelationGradFn& grad_fn, std::size_t trials,
                                  std::uint64_t seed);

// Worst relative finite-difference error of td_loss_and_grad.
double max_td_grad_error(std::size_t trials, std::uint64_t seed);

// Worst relative finite-difference error of quantile_huber_loss_and_grad.
// Residuals are resampled away from the Huber kinks, where the loss is only
// once differentiable and central differences degrade to O(h).
double max_quantile_grad_error(std::size_t trials, std::uint64_t seed);

// Worst relative finite-difference error of the combined objective
// (TD + lambda * correlation penalty) differentiated through a two-hidden-layer
// network by the shared backward pass. Configurations whose hidden
// pre-activations sit near the ReLU kinks are resampled.
double max_combined_grad_error(std::size_t trials, std::uint64_t seed);

// Worst entrywise gap between cov_fn and the naive double-loop oracle over
// `trials` random batches up to 64x64, plus the fixed hand case.
double max_covariance_oracle_gap(const CovarianceFn& cov_fn, std::size_t trials,
                                 std::uint64_t seed);

// Worst relative violation of correlation_loss(c f) = c^4 correlation_loss(f)
// for c in {0.5, 2, 10}.
double max_scaling_law_error(std::size_t trials, std::uint64_t seed);

// Runs DQN in its tabular configuration (one-hot chain observations, bias-free
// linear network, sgd, minibatch 1, sync every step) side by side with the
// tabular Q-learning oracle; returns the worst per-step parameter gap.
double tabular_equivalence_max_gap(std::size_t steps, std::uint64_t seed);

// Same run, compared at the end against value iteration's Q* on the chain;
// returns the L-infinity gap over live states.
double chain_q_convergence_gap(std::size_t steps, std::uint64_t seed);

struct VerifyCheck {
  std::string name;
  double value = 0.0;      // worst observed error
  double tolerance = 0.0;  // pass iff value <= tolerance
  bool pass = false;
};

std::vector<VerifyCheck> run_verification();

// Prints one "PASS name value tolerance" line per check; returns the number
// of failures (the CLI exit code).
int print_verification(std::ostream& out, const std::vector<VerifyCheck>& checks);

}  // namespace decorl
