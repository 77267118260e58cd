#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace eqvi {

using State = std::size_t;
using Action = std::size_t;

struct StateAction {
  State state = 0;
  Action action = 0;
  friend bool operator==(const StateAction&, const StateAction&) = default;
};

/// Row-sum tolerance enforced on every transition row.
inline constexpr double kKernelTolerance = 1e-12;

/// Finite discounted-cost MDP. Immutable after construction.
///
/// Storage is flat and row-major: cost[s*A + a], kernel[(s*A + a)*S + s'].
/// The inverse CDF of every transition row is precomputed for sampling.
class Mdp {
 public:
  Mdp(std::size_t num_states, std::size_t num_actions, double gamma,
      std::vector<double> cost, std::vector<double> kernel);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  std::size_t num_pairs() const { return num_states_ * num_actions_; }
  double gamma() const { return gamma_; }

  double cost(State s, Action a) const { return cost_[s * num_actions_ + a]; }
  double prob(State s, Action a, State next) const {
    return kernel_[(s * num_actions_ + a) * num_states_ + next];
  }
  std::span<const double> row(State s, Action a) const {
    return {kernel_.data() + (s * num_actions_ + a) * num_states_, num_states_};
  }
  /// Running sums F(s') = sum_{t <= s'} p(t|s,a).
  std::span<const double> cdf_row(State s, Action a) const {
    return {cdf_.data() + (s * num_actions_ + a) * num_states_, num_states_};
  }
  /// Largest next state with positive mass in row (s,a).
  State last_support(State s, Action a) const { return last_support_[s * num_actions_ + a]; }

  std::span<const double> costs() const { return cost_; }
  std::span<const double> kernel() const { return kernel_; }

  double max_cost() const;
  /// max c / (1 - gamma): bound on every Q iterate started in [0, kappa*].
  double kappa_star() const { return max_cost() / (1.0 - gamma_); }
  /// Every kernel entry strictly positive; sufficient for irreducibility and
  /// aperiodicity under every stationary policy.
  bool ergodic_hint() const;
  bool is_deterministic() const;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  double gamma_;
  std::vector<double> cost_;
  std::vector<double> kernel_;
  std::vector<double> cdf_;
  std::vector<State> last_support_;
};

class VTable {
 public:
  VTable() = default;
  explicit VTable(std::size_t num_states, double fill = 0.0) : values_(num_states, fill) {}
  explicit VTable(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  double& operator[](State s) { return values_[s]; }
  double operator[](State s) const { return values_[s]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const VTable&, const VTable&) = default;

 private:
  std::vector<double> values_;
};

class QTable {
 public:
  QTable() = default;
  QTable(std::size_t num_states, std::size_t num_actions, double fill = 0.0)
      : num_states_(num_states), num_actions_(num_actions), values_(num_states * num_actions, fill) {}
  QTable(std::size_t num_states, std::size_t num_actions, std::vector<double> values);
  /// From nested rows q[s][a].
  static QTable from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  double& operator()(State s, Action a) { return values_[s * num_actions_ + a]; }
  double operator()(State s, Action a) const { return values_[s * num_actions_ + a]; }
  std::span<const double> row(State s) const { return {values_.data() + s * num_actions_, num_actions_}; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  /// min_b q(s, b)
  double row_min(State s) const;
  /// argmin_b q(s, b), lowest index on ties.
  Action row_argmin(State s) const;
  /// V(s) = min_b q(s, b)
  VTable minima() const;

  bool same_shape(const QTable& other) const {
    return num_states_ == other.num_states_ && num_actions_ == other.num_actions_;
  }

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::vector<double> values_;
};

double sup_norm(std::span<const double> x);
double sup_distance(std::span<const double> x, std::span<const double> y);
inline double sup_distance(const QTable& x, const QTable& y) { return sup_distance(x.values(), y.values()); }
inline double sup_distance(const VTable& x, const VTable& y) { return sup_distance(x.values(), y.values()); }

/// Stationary randomized policy pi[s][a].
class StationaryPolicy {
 public:
  StationaryPolicy(std::size_t num_states, std::size_t num_actions, std::vector<double> rows);
  static StationaryPolicy deterministic(std::size_t num_actions, const std::vector<Action>& choice);
  static StationaryPolicy uniform(std::size_t num_states, std::size_t num_actions);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  double operator()(State s, Action a) const { return rows_[s * num_actions_ + a]; }
  std::span<const double> row(State s) const { return {rows_.data() + s * num_actions_, num_actions_}; }
  bool is_deterministic() const;
  /// Inverse-CDF draw of an action from row s using u in [0,1].
  Action sample(State s, double u) const;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<double> rows_;
};

/// Time-indexed sequence of stationary policies. A single element is a
/// stationary strategy; beyond the stored horizon the last policy repeats.
class PolicySequence {
 public:
  explicit PolicySequence(StationaryPolicy policy) : policies_{std::move(policy)} {}
  explicit PolicySequence(std::vector<StationaryPolicy> policies);

  const StationaryPolicy& at(std::int64_t t) const;
  std::size_t size() const { return policies_.size(); }
  bool is_stationary() const { return policies_.size() == 1; }

 private:
  std::vector<StationaryPolicy> policies_;
};

// JSON file format:
//   {"num_states": S, "num_actions": A, "gamma": g,
//    "cost": [[c(s,a) for a] for s], "kernel": [[[p(s'|s,a) for s'] for a] for s]}
Mdp read_mdp_json(std::istream& in);
Mdp load_mdp(const std::string& path);
void write_mdp_json(const Mdp& mdp, std::ostream& out);
void save_mdp(const Mdp& mdp, const std::string& path);

}  // namespace eqvi
