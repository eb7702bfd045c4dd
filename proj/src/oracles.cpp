#include "decorl/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "decorl/errors.hpp"

namespace decorl::oracles {

void TabularMDP::validate() const {
  if (gamma < 0.0 || gamma >= 1.0) {
    throw ConfigError("TabularMDP: gamma must lie in [0,1)");
  }
  for (std::size_t s = 0; s < num_states; ++s) {
    for (std::size_t a = 0; a < num_actions; ++a) {
      double sum = 0.0;
      for (std::size_t sn = 0; sn < num_states; ++sn) sum += p(s, a, sn);
      if (std::abs(sum - 1.0) > 1e-12) {
        throw ConfigError("TabularMDP: p(.|" + std::to_string(s) + "," +
                          std::to_string(a) + ") sums to " + std::to_string(sum));
      }
    }
  }
}

Matrix value_iteration(const TabularMDP& mdp, double tol) {
  if (tol <= 0.0) throw UsageError("value_iteration: tol must be positive");
  mdp.validate();
  const std::size_t S = mdp.num_states;
  const std::size_t A = mdp.num_actions;
  // Stopping at a sup-norm sweep change below tol*(1-gamma)/gamma bounds the
  // remaining distance to the fixed point by tol. gamma=0 converges in one sweep.
  const double threshold = mdp.gamma > 0.0
                               ? tol * (1.0 - mdp.gamma) / mdp.gamma
                               : std::numeric_limits<double>::infinity();
  Matrix q(S, A);
  std::vector<double> v(S, 0.0);
  for (;;) {
    double change = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        double backup = mdp.rewards(s, a);
        for (std::size_t sn = 0; sn < S; ++sn) {
          backup += mdp.gamma * mdp.p(s, a, sn) * v[sn];
        }
        change = std::max(change, std::abs(backup - q(s, a)));
        q(s, a) = backup;
      }
    }
    for (std::size_t s = 0; s < S; ++s) {
      v[s] = *std::max_element(q.row(s).begin(), q.row(s).end());
    }
    if (change < threshold || change == 0.0) break;
  }
  return q;
}

void tabular_q_learning_step(Matrix& q, const TabularTransition& t, double alpha,
                             double gamma) {
  if (alpha <= 0.0 || alpha > 1.0) {
    throw UsageError("tabular_q_learning_step: alpha must lie in (0,1]");
  }
  double target = t.r;
  if (!t.terminal) {
    target += gamma * *std::max_element(q.row(t.s_next).begin(), q.row(t.s_next).end());
  }
  q(t.s, t.a) += alpha * (target - q(t.s, t.a));
}

Matrix naive_covariance(const Matrix& features) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (n < 2) throw UsageError("naive_covariance: need at least 2 samples");
  Matrix cov(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double mean_i = 0.0;
      double mean_j = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        mean_i += features(t, i);
        mean_j += features(t, j);
      }
      mean_i /= static_cast<double>(n);
      mean_j /= static_cast<double>(n);
      double acc = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        acc += (features(t, i) - mean_i) * (features(t, j) - mean_j);
      }
      cov(i, j) = acc / static_cast<double>(n);
    }
  }
  return cov;
}

GradCheckReport grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> x,
                           std::span<const double> analytic, double h) {
  if (h <= 0.0) throw UsageError("grad_check: h must be positive");
  if (x.size() != analytic.size()) {
    throw DimensionError("grad_check: x and analytic gradient sizes differ");
  }
  std::vector<double> probe(x.begin(), x.end());
  GradCheckReport report;
  report.step = h;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double f_plus = f(probe);
    probe[i] = saved - h;
    const double f_minus = f(probe);
    probe[i] = saved;
    if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
      throw NumericError("grad_check: f non-finite at coordinate " + std::to_string(i));
    }
    const double numeric = (f_plus - f_minus) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    const double rel = std::abs(numeric - analytic[i]) / denom;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_coordinate = i;
      report.analytic_at_worst = analytic[i];
      report.numeric_at_worst = numeric;
    }
  }
  return report;
}

double linear_qr_fit(std::span<const double> xs, std::span<const double> ys,
                     double tau, std::size_t iterations, double step) {
  if (tau <= 0.0 || tau >= 1.0) throw UsageError("linear_qr_fit: tau must lie in (0,1)");
  if (xs.size() != ys.size() || xs.empty()) {
    throw DimensionError("linear_qr_fit: need equally many xs and ys");
  }
  const double n = static_cast<double>(xs.size());
  auto loss = [&](double beta) {
    double l = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double u = ys[i] - xs[i] * beta;
      l += u * (tau - (u < 0.0 ? 1.0 : 0.0));
    }
    return l;
  };
  double beta = 0.0;
  const double initial_loss = loss(beta);
  double tail_sum = 0.0;
  std::size_t tail_count = 0;
  for (std::size_t k = 0; k < iterations; ++k) {
    double g = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double u = ys[i] - xs[i] * beta;
      g -= xs[i] * (tau - (u < 0.0 ? 1.0 : 0.0));
    }
    beta -= step / std::sqrt(static_cast<double>(k + 1)) * (g / n);
    if (k >= iterations / 2) {
      tail_sum += beta;
      ++tail_count;
    }
    if ((k & 1023u) == 0 && loss(beta) > 10.0 * initial_loss + 1e-9) {
      throw Error("linear_qr_fit: diverging, reduce the step size");
    }
  }
  return tail_count ? tail_sum / static_cast<double>(tail_count) : beta;
}

TabularMDP make_chain_mdp(double gamma, std::size_t num_states) {
  // States 0..n-1 plus absorbing state n. Action 1 moves right and, from the
  // last live state, terminates with reward 1; action 0 moves left (clamped).
  const std::size_t S = num_states + 1;
  TabularMDP mdp;
  mdp.num_states = S;
  mdp.num_actions = 2;
  mdp.gamma = gamma;
  mdp.transitions.assign(S * 2 * S, 0.0);
  mdp.rewards = Matrix(S, 2);
  auto set_p = [&](std::size_t s, std::size_t a, std::size_t sn) {
    mdp.transitions[(s * 2 + a) * S + sn] = 1.0;
  };
  for (std::size_t s = 0; s < num_states; ++s) {
    set_p(s, 0, s == 0 ? 0 : s - 1);
    if (s + 1 < num_states) {
      set_p(s, 1, s + 1);
    } else {
      set_p(s, 1, num_states);  // into the absorbing state
      mdp.rewards(s, 1) = 1.0;
    }
  }
  set_p(num_states, 0, num_states);
  set_p(num_states, 1, num_states);
  return mdp;
}

TabularMDP make_gridworld_mdp(double gamma, std::size_t side, double slip) {
  // Cells indexed row-major; entering the goal cell (side-1, side-1) pays 1
  // and ends the episode, modelled by redirecting goal-entering probability
  // mass to the absorbing state side*side.
  const std::size_t cells = side * side;
  const std::size_t S = cells + 1;
  const std::size_t A = 4;
  const std::size_t goal = cells - 1;
  TabularMDP mdp;
  mdp.num_states = S;
  mdp.num_actions = A;
  mdp.gamma = gamma;
  mdp.transitions.assign(S * A * S, 0.0);
  mdp.rewards = Matrix(S, A);
  auto move = [&](std::size_t cell, std::size_t action) -> std::size_t {
    std::size_t r = cell / side;
    std::size_t c = cell % side;
    switch (action) {
      case 0: r = r == 0 ? 0 : r - 1; break;           // up
      case 1: r = r + 1 >= side ? side - 1 : r + 1; break;  // down
      case 2: c = c == 0 ? 0 : c - 1; break;           // left
      default: c = c + 1 >= side ? side - 1 : c + 1; break;  // right
    }
    return r * side + c;
  };
  for (std::size_t s = 0; s < cells; ++s) {
    if (s == goal) continue;  // handled as absorbing below
    for (std::size_t a = 0; a < A; ++a) {
      auto add_mass = [&](std::size_t dest, double mass) {
        const std::size_t sn = dest == goal ? cells : dest;
        mdp.transitions[(s * A + a) * S + sn] += mass;
        if (dest == goal) mdp.rewards(s, a) += mass;
      };
      add_mass(move(s, a), 1.0 - slip);
      for (std::size_t b = 0; b < A; ++b) add_mass(move(s, b), slip / 4.0);
    }
  }
  for (std::size_t a = 0; a < A; ++a) {
    mdp.transitions[(goal * A + a) * S + goal] = 1.0;
    mdp.transitions[(cells * A + a) * S + cells] = 1.0;
  }
  return mdp;
}

}  // namespace decorl::oracles
