#include "eqvi/coupling.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "eqvi/dp.hpp"
#include "eqvi/error.hpp"
#include "eqvi/solvers.hpp"

namespace eqvi {

namespace {

void check_kernels(const Mdp& mdp, std::span<const EmpiricalKernel> kernels) {
  for (const auto& k : kernels) {
    if (k.num_states() != mdp.num_states() || k.num_actions() != mdp.num_actions())
      throw StructuralError("empirical kernel shape does not match MDP");
  }
}

void check_start(const Mdp& mdp, StateAction start) {
  if (start.state >= mdp.num_states() || start.action >= mdp.num_actions())
    throw StructuralError("start pair out of range");
}

State draw_next(const EmpiricalKernel& kernel, const NoiseStream& nu, std::int64_t time, StateAction from) {
  const double u = nu.uniform(StreamLabel::transition, time, from.state, from.action, 0);
  return sample_counts(kernel.counts(from.state, from.action), kernel.samples_per_pair(), u);
}

Action draw_action(const PolicySequence& policy, std::int64_t policy_index, const NoiseStream& nu, std::int64_t time,
                   State s) {
  const auto& pol = policy.at(policy_index);
  if (pol.is_deterministic()) return pol.sample(s, 0.0);
  return pol.sample(s, nu.uniform(StreamLabel::action, time, s, 0, 0));
}

void finish(CouplingReport& r) {
  r.censored_count = static_cast<std::size_t>(std::count(r.censored.begin(), r.censored.end(), true));
  double sum = 0.0;
  std::size_t used = 0;
  r.max = 0;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    if (r.censored[i]) continue;
    sum += static_cast<double>(r.times[i]);
    r.max = std::max(r.max, r.times[i]);
    ++used;
  }
  r.mean = used ? sum / static_cast<double>(used) : 0.0;
}

// Kernel cache for one CFTP trial; p^_j built on demand.
class KernelCache {
 public:
  KernelCache(const Mdp& mdp, const NoiseStream& stream, std::size_t n) : mdp_(mdp), stream_(stream), n_(n) {}
  const EmpiricalKernel& get(std::int64_t j) {
    while (static_cast<std::int64_t>(cache_.size()) <= j) {
      const auto k = static_cast<std::int64_t>(cache_.size());
      cache_.push_back(empirical_kernel(
          mdp_, draw_noise_block(stream_, k, n_, mdp_.num_states(), mdp_.num_actions()), n_));
    }
    return cache_[static_cast<std::size_t>(j)];
  }

 private:
  const Mdp& mdp_;
  const NoiseStream& stream_;
  std::size_t n_;
  std::vector<EmpiricalKernel> cache_;
};

bool grand_coupling(const Mdp& mdp, const PolicySequence& policy, const NoiseStream& trial, KernelCache& kernels,
                    std::int64_t depth) {
  const std::size_t S = mdp.num_states();
  std::vector<StateAction> cur(S);
  for (State s = 0; s < S; ++s) cur[s] = {s, draw_action(policy, depth, trial, depth, s)};
  for (std::int64_t j = depth - 1; j >= 0; --j) {
    const auto& kernel = kernels.get(j);
    for (auto& sa : cur) {
      const State next = draw_next(kernel, trial, j, sa);
      sa = {next, draw_action(policy, j, trial, j, next)};
    }
  }
  return std::all_of(cur.begin(), cur.end(), [&](const StateAction& x) { return x.state == cur.front().state; });
}

}  // namespace

SimPath forward_simulate(const Mdp& mdp, std::span<const EmpiricalKernel> kernels, const PolicySequence& policy,
                         StateAction start, std::int64_t horizon, const NoiseStream& nu_stream) {
  if (horizon < 1) throw DomainError("forward_simulate: horizon must be >= 1");
  if (static_cast<std::int64_t>(kernels.size()) < horizon)
    throw DomainError("forward_simulate: horizon exceeds the kernel sequence");
  check_kernels(mdp, kernels);
  check_start(mdp, start);
  SimPath path;
  path.start_index = 0;
  path.steps.reserve(static_cast<std::size_t>(horizon) + 1);
  path.steps.push_back(start);
  for (std::int64_t k = 0; k < horizon; ++k) {
    const State next = draw_next(kernels[static_cast<std::size_t>(k)], nu_stream, k, path.steps.back());
    path.steps.push_back({next, draw_action(policy, k + 1, nu_stream, k + 1, next)});
  }
  return path;
}

SimPath backward_simulate(const Mdp& mdp, std::span<const EmpiricalKernel> kernels, const PolicySequence& policy,
                          StateAction start, std::int64_t k0, const NoiseStream& nu_stream) {
  if (k0 < 1) throw DomainError("backward_simulate: k0 must be >= 1");
  if (static_cast<std::int64_t>(kernels.size()) < k0) throw DomainError("backward_simulate: needs k0 kernels");
  check_kernels(mdp, kernels);
  check_start(mdp, start);
  SimPath path;
  path.start_index = -k0;
  path.steps.reserve(static_cast<std::size_t>(k0) + 1);
  path.steps.push_back(start);
  for (std::int64_t m = -k0 + 1; m <= 0; ++m) {
    const std::int64_t j = -m;
    const State next = draw_next(kernels[static_cast<std::size_t>(j)], nu_stream, j, path.steps.back());
    path.steps.push_back({next, draw_action(policy, j, nu_stream, j, next)});
  }
  return path;
}

std::vector<EmpiricalKernel> empirical_kernel_sequence(const Mdp& mdp, const NoiseStream& stream, std::size_t n,
                                                       std::int64_t count) {
  std::vector<EmpiricalKernel> out;
  out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(count, 0)));
  for (std::int64_t j = 0; j < count; ++j)
    out.push_back(empirical_kernel(mdp, draw_noise_block(stream, j, n, mdp.num_states(), mdp.num_actions()), n));
  return out;
}

std::string to_json(const CouplingReport& report) {
  nlohmann::json j;
  j["kind"] = report.kind;
  j["trials"] = report.trials;
  j["horizon_cap"] = report.horizon_cap;
  j["times"] = report.times;
  j["censored"] = report.censored;
  j["censored_count"] = report.censored_count;
  j["mean"] = report.mean;
  j["max"] = report.max;
  return j.dump();
}

bool coalesces_from(const Mdp& mdp, const PolicySequence& policy, const NoiseStream& trial_stream, std::size_t n,
                    std::int64_t depth) {
  if (mdp.num_states() == 1) return true;
  if (depth < 1) return false;
  KernelCache kernels(mdp, trial_stream, n);
  return grand_coupling(mdp, policy, trial_stream, kernels, depth);
}

CouplingReport cftp_coalescence(const Mdp& mdp, const PolicySequence& policy, const NoiseStream& stream,
                                std::size_t n, std::int64_t depth_cap, std::size_t trials) {
  if (depth_cap < 1) throw DomainError("cftp_coalescence: depth_cap must be >= 1");
  if (n < 1) throw DomainError("cftp_coalescence: n must be >= 1");
  CouplingReport report;
  report.kind = "cftp";
  report.trials = trials;
  report.horizon_cap = depth_cap;
  report.times.assign(trials, 0);
  report.censored.assign(trials, false);
  for (std::size_t t = 0; t < trials; ++t) {
    if (mdp.num_states() == 1) continue;  // already coalesced: depth 0
    const NoiseStream trial = stream.split(t);
    KernelCache kernels(mdp, trial, n);
    bool done = false;
    for (std::int64_t depth = 1; depth <= depth_cap; depth *= 2) {
      if (grand_coupling(mdp, policy, trial, kernels, depth)) {
        report.times[t] = depth;
        done = true;
        break;
      }
    }
    if (!done) {
      report.times[t] = depth_cap;
      report.censored[t] = true;
    }
  }
  finish(report);
  return report;
}

CouplingReport estimate_hitting_time(const Mdp& mdp, const PolicySequence& policy, State s0, State target,
                                     std::size_t trials, std::int64_t horizon_cap, std::size_t n,
                                     const NoiseStream& stream) {
  if (trials < 1) throw DomainError("estimate_hitting_time: trials must be >= 1");
  if (s0 >= mdp.num_states() || target >= mdp.num_states()) throw StructuralError("state out of range");
  CouplingReport report;
  report.kind = "hitting";
  report.trials = trials;
  report.horizon_cap = horizon_cap;
  report.times.assign(trials, 0);
  report.censored.assign(trials, false);
  for (std::size_t t = 0; t < trials; ++t) {
    if (s0 == target) continue;
    const NoiseStream trial = stream.split(t);
    StateAction cur{s0, draw_action(policy, 0, trial, 0, s0)};
    bool hit = false;
    for (std::int64_t k = 0; k < horizon_cap; ++k) {
      const auto counts = empirical_row(mdp, trial, k, cur.state, cur.action, n);
      const double u = trial.uniform(StreamLabel::transition, k, cur.state, cur.action, 0);
      const State next = sample_counts(counts, n, u);
      cur = {next, draw_action(policy, k + 1, trial, k + 1, next)};
      if (next == target) {
        report.times[t] = k + 1;
        hit = true;
        break;
      }
    }
    if (!hit) {
      report.times[t] = horizon_cap;
      report.censored[t] = true;
    }
  }
  finish(report);
  return report;
}

CouplingReport estimate_coupling_time(const Mdp& mdp, const PolicySequence& policy, State s1, State s2,
                                      std::size_t trials, std::int64_t horizon_cap, std::size_t n,
                                      const NoiseStream& stream, CouplingMode mode, std::int64_t start_time) {
  if (trials < 1) throw DomainError("estimate_coupling_time: trials must be >= 1");
  if (s1 >= mdp.num_states() || s2 >= mdp.num_states()) throw StructuralError("state out of range");
  CouplingReport report;
  report.kind = mode == CouplingMode::independent ? "coupling" : "coupling_shared";
  report.trials = trials;
  report.horizon_cap = horizon_cap;
  report.times.assign(trials, 0);
  report.censored.assign(trials, false);
  for (std::size_t t = 0; t < trials; ++t) {
    if (s1 == s2) continue;
    const NoiseStream trial = stream.split(t);
    const NoiseStream first = mode == CouplingMode::independent ? trial.split(1) : trial;
    const NoiseStream second = mode == CouplingMode::independent ? trial.split(2) : trial;
    StateAction x{s1, draw_action(policy, 0, first, start_time, s1)};
    StateAction y{s2, draw_action(policy, 0, second, start_time, s2)};
    bool met = false;
    for (std::int64_t m = 0; m < horizon_cap; ++m) {
      const std::int64_t time = start_time + m;
      auto step = [&](StateAction cur, const NoiseStream& ns) {
        const auto counts = empirical_row(mdp, ns, time, cur.state, cur.action, n);
        const State next = sample_counts(counts, n, ns.uniform(StreamLabel::transition, time, cur.state, cur.action, 0));
        return StateAction{next, draw_action(policy, m + 1, ns, time + 1, next)};
      };
      x = step(x, first);
      y = step(y, second);
      if (x.state == y.state) {
        report.times[t] = m + 1;
        met = true;
        break;
      }
    }
    if (!met) {
      report.times[t] = horizon_cap;
      report.censored[t] = true;
    }
  }
  finish(report);
  return report;
}

stats::LinearFit survival_log_slope(const CouplingReport& report, std::size_t min_survivors) {
  std::vector<double> xs;
  std::vector<double> ys;
  const double total = static_cast<double>(report.trials);
  for (std::int64_t r = 0;; ++r) {
    std::size_t survivors = 0;
    for (std::size_t i = 0; i < report.times.size(); ++i)
      if (report.censored[i] || report.times[i] > r) ++survivors;
    if (survivors < min_survivors) break;
    xs.push_back(static_cast<double>(r));
    ys.push_back(std::log(static_cast<double>(survivors) / total));
    if (r >= report.horizon_cap) break;
  }
  return stats::fit_line(xs, ys);
}

PolicySequence greedy_policy_sequence(std::span<const QTable> qtilde) {
  std::vector<StationaryPolicy> policies;
  policies.reserve(qtilde.size());
  for (const auto& q : qtilde) policies.push_back(greedy_policy(q));
  return PolicySequence(std::move(policies));
}

std::vector<QTable> backward_expectations(const Mdp& mdp, const QTable& h, std::span<const EmpiricalKernel> kernels) {
  check_kernels(mdp, kernels);
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  const double gamma = mdp.gamma();
  std::vector<QTable> qt;
  qt.push_back(h);
  // act[r][x]: greedy action w.r.t. Q~_r, used when r steps remain.
  std::vector<std::vector<Action>> act;
  for (std::size_t j = 1; j <= kernels.size(); ++j) {
    std::vector<Action> greedy(S);
    for (State x = 0; x < S; ++x) greedy[x] = qt.back().row_argmin(x);
    act.push_back(std::move(greedy));

    QTable next(S, A);
    std::vector<double> dist(S);
    std::vector<double> moved(S);
    for (State s = 0; s < S; ++s) {
      for (Action a = 0; a < A; ++a) {
        double value = mdp.cost(s, a);
        const auto& first = kernels[j - 1];
        for (State t = 0; t < S; ++t) dist[t] = first.prob(s, a, t);
        double discount = gamma;
        for (std::size_t r = j - 1; r >= 1; --r) {
          double expected = 0.0;
          for (State x = 0; x < S; ++x) expected += dist[x] * mdp.cost(x, act[r][x]);
          value += discount * expected;
          discount *= gamma;
          std::fill(moved.begin(), moved.end(), 0.0);
          const auto& kernel = kernels[r - 1];
          for (State x = 0; x < S; ++x) {
            if (dist[x] == 0.0) continue;
            for (State t = 0; t < S; ++t) moved[t] += dist[x] * kernel.prob(x, act[r][x], t);
          }
          std::swap(dist, moved);
        }
        double terminal = 0.0;
        for (State x = 0; x < S; ++x) terminal += dist[x] * h(x, act[0][x]);
        next(s, a) = value + discount * terminal;
      }
    }
    qt.push_back(std::move(next));
  }
  return qt;
}

ForwardBackwardReport verify_forward_backward(const Mdp& mdp, const QTable& h, std::int64_t k,
                                              const NoiseStream& stream, std::size_t n, ForwardBackwardMode mode,
                                              std::size_t paths, std::optional<NoiseStream> path_stream) {
  if (k < 1) throw DomainError("verify_forward_backward: k must be >= 1");
  if (h.num_states() != mdp.num_states() || h.num_actions() != mdp.num_actions())
    throw StructuralError("seed table does not match MDP");
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();

  // Forward EQVI iterates from the same noise the kernels are built from.
  std::vector<QTable> qhat{h};
  for (std::int64_t j = 0; j < k; ++j) {
    const auto block = draw_noise_block(stream, j, n, S, A);
    qhat.push_back(eqvi_step(mdp, qhat.back(), block, n, Exec::serial));
  }
  const auto kernels = empirical_kernel_sequence(mdp, stream, n, k);
  const auto qtilde = backward_expectations(mdp, h, kernels);

  ForwardBackwardReport report;
  report.mode = mode;
  report.k = k;
  report.n = n;

  if (mode == ForwardBackwardMode::exact_dp) {
    for (std::int64_t j = 1; j <= k; ++j) {
      for (State s = 0; s < S; ++s) {
        for (Action a = 0; a < A; ++a) {
          const double diff = std::abs(qtilde[static_cast<std::size_t>(j)](s, a) - qhat[static_cast<std::size_t>(j)](s, a));
          if (diff > report.max_abs_diff || (j == 1 && s == 0 && a == 0)) {
            report.max_abs_diff = std::max(report.max_abs_diff, diff);
            report.worst_pair = {s, a};
            report.worst_iteration = j;
          }
        }
      }
    }
    for (State s = 0; s < S; ++s)
      for (Action a = 0; a < A; ++a)
        report.entries.push_back({{s, a}, qhat.back()(s, a), qtilde.back()(s, a), 0.0});
    report.passed = report.max_abs_diff <= 1e-9;
    return report;
  }

  if (paths < 2) throw DomainError("monte_carlo mode needs at least two paths");
  report.paths = paths;
  const NoiseStream mc = path_stream.value_or(stream.split(0x6d63ULL));
  const PolicySequence policy = greedy_policy_sequence(qtilde);
  const double gamma = mdp.gamma();
  std::vector<double> totals(paths);
  double worst_z = -1.0;
  for (State s = 0; s < S; ++s) {
    for (Action a = 0; a < A; ++a) {
      for (std::size_t p = 0; p < paths; ++p) {
        const SimPath path = backward_simulate(mdp, kernels, policy, {s, a}, k, mc.split(p));
        double total = 0.0;
        double discount = 1.0;
        for (std::int64_t l = -k; l <= -1; ++l) {
          const auto& sa = path.at(l);
          total += discount * mdp.cost(sa.state, sa.action);
          discount *= gamma;
        }
        const auto& end = path.at(0);
        total += discount * h(end.state, end.action);
        totals[p] = total;
      }
      EntryCheck e;
      e.pair = {s, a};
      e.forward = qhat.back()(s, a);
      e.backward = stats::mean(totals);
      e.std_error = stats::standard_error(totals);
      const double diff = std::abs(e.backward - e.forward);
      // Rounding in the running mean floors the tolerance at 1e-9 relative.
      const double floor = 1e-9 * std::max(1.0, std::abs(e.forward));
      const bool ok = diff <= 3.0 * e.std_error + floor;
      if (!ok) ++report.outside_3sigma;
      const double z = diff <= floor ? 0.0 : (e.std_error > 0.0 ? diff / e.std_error : INFINITY);
      if (z > worst_z) {
        worst_z = z;
        report.worst_pair = {s, a};
        report.worst_iteration = k;
      }
      report.max_abs_diff = std::max(report.max_abs_diff, diff);
      report.entries.push_back(e);
    }
  }
  report.passed = report.outside_3sigma == 0;
  return report;
}

}  // namespace eqvi
