#include "eqvi/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "eqvi/dp.hpp"
#include "eqvi/error.hpp"

namespace eqvi {

namespace {

// Ceiling that treats values within 1e-9 (relative) of an integer as that
// integer, so 2/(1-0.9) evaluates to 20 rather than 21.
std::int64_t snapped_ceil(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::ceil(x));
}

}  // namespace

void BoundInputs::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in (0,1]");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
  if (!(delta1 > 0.0 && delta2 > 0.0)) throw DomainError("delta1 and delta2 must be positive");
  if (delta1 + 2.0 * delta2 > delta * (1.0 + 1e-12)) throw DomainError("delta1 + 2 delta2 must not exceed delta");
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0,1)");
  if (!(c_max > 0.0) || !std::isfinite(c_max)) throw DomainError("c_max must be positive and finite");
  if (num_states < 1 || num_actions < 1) throw DomainError("|S| and |A| must be >= 1");
}

BoundReport compute_bounds(const BoundInputs& in, std::optional<std::int64_t> n_override, PnAccuracy accuracy) {
  in.validate();
  if (n_override && *n_override < 1) throw DomainError("n override must be >= 1");
  BoundReport r;
  r.accuracy = accuracy;
  const double pairs = static_cast<double>(in.num_states) * static_cast<double>(in.num_actions);
  r.kappa_star = in.c_max / (1.0 - in.gamma);
  r.eta_star = snapped_ceil(2.0 / (1.0 - in.gamma));
  r.epsilon_g = in.epsilon / static_cast<double>(r.eta_star);
  r.N_star = snapped_ceil(r.kappa_star / r.epsilon_g);
  r.n_bound = r.kappa_star * r.kappa_star / (2.0 * r.epsilon_g * r.epsilon_g) * std::log(2.0 * pairs / in.delta1);
  r.n_required = snapped_ceil(r.n_bound);
  r.n_used = n_override.value_or(r.n_required);

  // The p_n / mu pipeline runs in extended precision: mu(eta*) is a power with
  // an exponent in the thousands, so double rounding in log p_n shows up at
  // the 1e-12 level.
  using Ext = long double;
  const Ext kappa = static_cast<Ext>(in.c_max) / (1.0L - static_cast<Ext>(in.gamma));
  const Ext acc = accuracy == PnAccuracy::granular
                      ? static_cast<Ext>(in.epsilon) / static_cast<Ext>(r.eta_star)
                      : static_cast<Ext>(in.epsilon);
  const Ext ratio = acc / static_cast<Ext>(in.gamma);
  const Ext exponent = 2.0L * ratio * ratio * static_cast<Ext>(r.n_used) / (kappa * kappa);
  const Ext log_one_minus = std::log(2.0L * static_cast<Ext>(pairs)) - exponent;
  const Ext one_minus = std::exp(log_one_minus);
  r.one_minus_p_n = static_cast<double>(std::min(one_minus, 1.0L));
  r.p_n_raw = static_cast<double>(1.0L - one_minus);
  r.p_n = std::clamp(r.p_n_raw, 0.0, 1.0);
  r.vacuous = r.p_n_raw <= 0.0;

  if (r.N_star <= r.eta_star) {
    r.feasible = false;
    r.infeasibility = "N* <= eta*: the discretization has no levels above eta*";
    return r;
  }
  if (r.vacuous) {
    r.feasible = false;
    r.infeasibility = "p_n <= 0 at this n: vacuous bound, k is undefined";
    return r;
  }

  // log p_n and log(1 - p_n) kept separately so that mu stays finite when
  // p_n rounds to 1.
  const Ext log_p = std::log1p(-one_minus);
  const Ext log_q = log_one_minus;
  const std::int64_t count = r.N_star - r.eta_star + 1;
  std::vector<Ext> log_mu(static_cast<std::size_t>(count));
  log_mu.front() = static_cast<Ext>(r.N_star - r.eta_star - 1) * log_p;
  for (std::int64_t i = r.eta_star + 1; i <= r.N_star - 1; ++i)
    log_mu[static_cast<std::size_t>(i - r.eta_star)] = log_q + static_cast<Ext>(r.N_star - i - 1) * log_p;
  log_mu.back() = log_q - log_p;

  r.mu.resize(log_mu.size());
  std::transform(log_mu.begin(), log_mu.end(), r.mu.begin(), [](Ext x) { return static_cast<double>(std::exp(x)); });
  const Ext log_min = *std::min_element(log_mu.begin(), log_mu.end());
  r.log_mu_min = static_cast<double>(log_min);
  r.mu_min = static_cast<double>(std::exp(log_min));
  r.mu_min_normalized = static_cast<double>(std::exp(log_min + log_p));
  r.k_bound = static_cast<double>(-std::log(static_cast<Ext>(in.delta2)) - log_min);
  r.k_required = std::max<std::int64_t>(1, snapped_ceil(r.k_bound));
  return r;
}

std::string format_table(const BoundReport& r) {
  std::ostringstream os;
  auto row = [&](const std::string& name, const std::string& value) {
    os << std::left << std::setw(22) << name << value << '\n';
  };
  auto num = [](double x) {
    std::ostringstream s;
    s << std::setprecision(12) << x;
    return s.str();
  };
  row("kappa_star", num(r.kappa_star));
  row("eta_star", std::to_string(r.eta_star));
  row("epsilon_g", num(r.epsilon_g));
  row("N_star", std::to_string(r.N_star));
  row("n_bound", num(r.n_bound));
  row("n_required", std::to_string(r.n_required));
  row("n_used", std::to_string(r.n_used));
  row("p_n_raw", num(r.p_n_raw));
  row("p_n", num(r.p_n));
  row("vacuous", r.vacuous ? "yes" : "no");
  row("p_n_accuracy", r.accuracy == PnAccuracy::granular ? "epsilon_g" : "epsilon");
  if (r.feasible) {
    row("mu_min", num(r.mu_min));
    row("log_mu_min", num(r.log_mu_min));
    row("mu_min_normalized", num(r.mu_min_normalized));
    row("k_bound", num(r.k_bound));
    row("k_required", std::to_string(r.k_required));
  } else {
    row("infeasible", r.infeasibility);
  }
  return os.str();
}

std::string to_json(const BoundReport& r) {
  nlohmann::json j;
  j["kappa_star"] = r.kappa_star;
  j["eta_star"] = r.eta_star;
  j["epsilon_g"] = r.epsilon_g;
  j["N_star"] = r.N_star;
  j["n_bound"] = r.n_bound;
  j["n_required"] = r.n_required;
  j["n_used"] = r.n_used;
  j["p_n_raw"] = r.p_n_raw;
  j["p_n"] = r.p_n;
  j["vacuous"] = r.vacuous;
  j["p_n_accuracy"] = r.accuracy == PnAccuracy::granular ? "epsilon_g" : "epsilon";
  j["feasible"] = r.feasible;
  if (r.feasible) {
    j["mu"] = r.mu;
    j["mu_min"] = r.mu_min;
    j["log_mu_min"] = r.log_mu_min;
    j["mu_min_normalized"] = r.mu_min_normalized;
    j["k_bound"] = r.k_bound;
    j["k_required"] = r.k_required;
  } else {
    j["infeasibility"] = r.infeasibility;
  }
  return j.dump(2);
}

double async_failure_bound(const BoundInputs& in, std::int64_t n, double* unclamped) {
  in.validate();
  if (n < 1) throw DomainError("async_failure_bound: n must be >= 1");
  const double pairs = static_cast<double>(in.num_states) * static_cast<double>(in.num_actions);
  const double kappa = in.c_max / (1.0 - in.gamma);
  const double scaled = in.epsilon / (in.gamma * pairs);
  const double value =
      2.0 * pairs * std::exp(-2.0 * scaled * scaled * static_cast<double>(n) / ((2.0 * kappa) * (2.0 * kappa)));
  if (unclamped) *unclamped = value;
  return std::clamp(value, 0.0, 1.0);
}

DominatingChainRun simulate_dominating_chain(double p_n, std::int64_t eta_star, std::int64_t N_star,
                                             std::int64_t horizon, const NoiseStream& stream, DominatingStep rule,
                                             std::optional<std::int64_t> initial) {
  if (!(p_n >= 0.0 && p_n <= 1.0)) throw DomainError("p_n must lie in [0,1]");
  if (eta_star < 0 || N_star < eta_star) throw DomainError("need 0 <= eta* <= N*");
  if (horizon < 0) throw DomainError("horizon must be >= 0");
  const std::int64_t y0 = initial.value_or(N_star);
  if (y0 < 0 || y0 > N_star) throw DomainError("initial level must lie in [0, N*]");

  DominatingChainRun run;
  run.trajectory.reserve(static_cast<std::size_t>(horizon) + 1);
  run.trajectory.push_back(y0);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(N_star - eta_star + 1), 0);
  std::int64_t y = y0;
  for (std::int64_t k = 1; k <= horizon; ++k) {
    const double u = stream.uniform(StreamLabel::chain, k, 0, 0, 0);
    if (u < p_n) {
      y = rule == DominatingStep::decrement ? std::max(y - 1, eta_star) : std::max(y, eta_star);
    } else {
      y = N_star;
    }
    run.trajectory.push_back(y);
    ++counts[static_cast<std::size_t>(y - eta_star)];
  }
  run.occupation.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    run.occupation[i] = horizon > 0 ? static_cast<double>(counts[i]) / static_cast<double>(horizon) : 0.0;
  run.fraction_at_N = run.occupation.back();
  return run;
}

DominanceReport dominance_diagnostic(const Mdp& mdp, const SolverConfig& cfg, const BoundInputs& in,
                                     std::size_t seeds, std::uint64_t master_seed, std::int64_t check_every) {
  if (seeds < 1) throw DomainError("dominance_diagnostic: seeds must be >= 1");
  if (check_every < 1) throw DomainError("dominance_diagnostic: check_every must be >= 1");
  BoundInputs matched = in;
  matched.gamma = mdp.gamma();
  matched.num_states = mdp.num_states();
  matched.num_actions = mdp.num_actions();
  matched.c_max = mdp.max_cost();

  DominanceReport report;
  report.seeds = seeds;
  report.bounds = compute_bounds(matched, static_cast<std::int64_t>(cfg.n_samples));
  const auto& b = report.bounds;

  const auto exact = solve_q_iteration(mdp, 1e-13, 100000);
  if (!exact.converged) throw std::runtime_error("dominance_diagnostic: exact Q* did not converge");
  const QTable& qstar = exact.values;

  SolverConfig run_cfg = cfg;
  run_cfg.algorithm = Algorithm::eqvi;
  run_cfg.record_stride = 1;
  const NoiseStream master(master_seed);
  std::vector<std::vector<std::int64_t>> chains;
  for (std::size_t seed = 0; seed < seeds; ++seed) {
    const NoiseStream stream = master.split(seed);
    const SolveTrace trace = run_eqvi(mdp, run_cfg, stream, &qstar);
    std::vector<std::int64_t> levels;
    levels.reserve(trace.points.size());
    for (const auto& p : trace.points) {
      const std::int64_t level = snapped_ceil(p.distance / b.epsilon_g);
      levels.push_back(level);
      report.max_error_level = std::max(report.max_error_level, level);
    }
    report.error_levels.push_back(std::move(levels));
    chains.push_back(simulate_dominating_chain(b.p_n, b.eta_star, std::max(b.N_star, b.eta_star), cfg.max_iters,
                                               stream.split(0xc4a1ULL))
                         .trajectory);
  }

  const double slack = std::sqrt(std::log(2.0 / 0.05) / (2.0 * static_cast<double>(seeds)));
  for (std::int64_t k = 0; k <= cfg.max_iters; k += check_every) {
    const auto idx = static_cast<std::size_t>(k);
    DominanceCheck check;
    check.iteration = k;
    std::int64_t top = 0;
    for (std::size_t s = 0; s < seeds; ++s) top = std::max({top, report.error_levels[s][idx], chains[s][idx]});
    for (std::int64_t j = 0; j <= top; ++j) {
      double tail_error = 0.0;
      double tail_chain = 0.0;
      for (std::size_t s = 0; s < seeds; ++s) {
        tail_error += report.error_levels[s][idx] >= j ? 1.0 : 0.0;
        tail_chain += chains[s][idx] >= j ? 1.0 : 0.0;
      }
      check.max_excess = std::max(check.max_excess, (tail_error - tail_chain) / static_cast<double>(seeds));
    }
    check.dominated = check.max_excess <= slack;
    report.all_dominated = report.all_dominated && check.dominated;
    report.checks.push_back(check);
  }
  return report;
}

}  // namespace eqvi
