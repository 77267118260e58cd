#include "eqvi/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "eqvi/dp.hpp"
#include "eqvi/error.hpp"

namespace eqvi {

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::qvi: return "qvi";
    case Algorithm::vi: return "vi";
    case Algorithm::eqvi: return "eqvi";
    case Algorithm::ql: return "ql";
    case Algorithm::eqvi_async: return "eqvi-async";
    case Algorithm::ql_async: return "ql-async";
    case Algorithm::hybrid: return "hybrid";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view tag) {
  for (auto alg : {Algorithm::qvi, Algorithm::vi, Algorithm::eqvi, Algorithm::ql, Algorithm::eqvi_async,
                   Algorithm::ql_async, Algorithm::hybrid}) {
    if (to_string(alg) == tag) return alg;
  }
  throw DomainError("unknown algorithm tag: " + std::string(tag));
}

bool is_asynchronous(Algorithm algorithm) {
  return algorithm == Algorithm::eqvi_async || algorithm == Algorithm::ql_async;
}

std::string_view to_string(Selection selection) {
  return selection == Selection::round_robin ? "round_robin" : "uniform_random";
}

Selection parse_selection(std::string_view tag) {
  if (tag == "round_robin") return Selection::round_robin;
  if (tag == "uniform_random") return Selection::uniform_random;
  throw DomainError("unknown selection rule: " + std::string(tag));
}

double StepSchedule::at(std::int64_t k) const {
  if (kind == Kind::constant) return alpha;
  return 1.0 / std::pow(static_cast<double>(k), theta);
}

void StepSchedule::validate() const {
  if (kind == Kind::power && !(theta > 0.5 && theta <= 1.0)) throw DomainError("step power theta must lie in (0.5,1]");
  if (kind == Kind::constant && !(alpha > 0.0 && alpha <= 1.0)) throw DomainError("constant step must lie in (0,1]");
}

QTable InitialQ::make(std::size_t num_states, std::size_t num_actions) const {
  switch (kind) {
    case Kind::zeros: return QTable(num_states, num_actions);
    case Kind::constant: return QTable(num_states, num_actions, value);
    case Kind::provided:
      if (!table || table->num_states() != num_states || table->num_actions() != num_actions)
        throw StructuralError("provided initial QTable does not match MDP");
      return *table;
  }
  return QTable(num_states, num_actions);
}

void SolverConfig::validate() const {
  if (n_samples < 1) throw DomainError("n_samples must be >= 1");
  if (max_iters < 0) throw DomainError("max_iters must be >= 0");
  if (snapshot_stride < 0) throw DomainError("snapshot_stride must be >= 0");
  if (record_stride < 1) throw DomainError("record_stride must be >= 1");
  if (algorithm == Algorithm::ql || algorithm == Algorithm::ql_async || algorithm == Algorithm::hybrid)
    step.validate();
  if (algorithm == Algorithm::hybrid && hybrid.kind == HybridSwitch::Kind::at_iteration && hybrid.iteration < 0)
    throw DomainError("hybrid switch iteration must be >= 0");
  if (algorithm == Algorithm::hybrid && hybrid.kind == HybridSwitch::Kind::relative_change &&
      !(hybrid.threshold > 0.0))
    throw DomainError("hybrid switch threshold must be positive");
}

namespace {

void check_shape(const Mdp& mdp, const QTable& q) {
  if (q.num_states() != mdp.num_states() || q.num_actions() != mdp.num_actions())
    throw StructuralError("QTable shape does not match MDP");
}

void check_block(const Mdp& mdp, const NoiseBlock& block, std::size_t n) {
  if (block.num_states() != mdp.num_states() || block.num_actions() != mdp.num_actions())
    throw StructuralError("noise block shape does not match MDP");
  if (block.samples_per_pair() != n) throw StructuralError("noise block sample count does not match n");
}

// Trace bookkeeping shared by the synchronous runs.
class Recorder {
 public:
  Recorder(const SolverConfig& cfg, std::span<const double> reference)
      : cfg_(cfg), reference_(reference), start_(std::chrono::steady_clock::now()) {
    ref_norm_ = reference_.empty() ? 0.0 : sup_norm(reference_);
  }

  void record(SolveTrace& trace, std::int64_t k, std::span<const double> values, double change,
              std::uint64_t samples, const QTable* snapshot) {
    if (k % cfg_.record_stride == 0) {
      TracePoint p;
      p.iteration = k;
      p.change = change;
      p.samples = samples;
      if (reference_.empty()) {
        p.distance = std::numeric_limits<double>::quiet_NaN();
        p.relative_error = std::numeric_limits<double>::quiet_NaN();
      } else {
        p.distance = sup_distance(values, reference_);
        p.relative_error = ref_norm_ > 0.0 ? p.distance / ref_norm_ : std::numeric_limits<double>::quiet_NaN();
      }
      p.elapsed_ns = elapsed();
      trace.points.push_back(p);
    }
    if (snapshot && cfg_.snapshot_stride > 0 && k % cfg_.snapshot_stride == 0)
      trace.snapshots.push_back({k, *snapshot});
  }

  std::int64_t elapsed() const {
    if (!cfg_.record_timing) return 0;
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  const SolverConfig& cfg_;
  std::span<const double> reference_;
  double ref_norm_ = 0.0;
  std::chrono::steady_clock::time_point start_;
};

std::span<const double> ref_span(const QTable* reference, const Mdp& mdp) {
  if (!reference) return {};
  check_shape(mdp, *reference);
  return reference->values();
}

// Running maximum of |x_i| under single-entry updates.
class MaxTree {
 public:
  explicit MaxTree(std::size_t n) : size_(1) {
    while (size_ < n) size_ *= 2;
    tree_.assign(2 * size_, 0.0);
  }
  void set(std::size_t i, double v) {
    std::size_t node = i + size_;
    tree_[node] = v;
    for (node /= 2; node >= 1; node /= 2) tree_[node] = std::max(tree_[2 * node], tree_[2 * node + 1]);
  }
  double max() const { return tree_[1]; }

 private:
  std::size_t size_;
  std::vector<double> tree_;
};

std::uint64_t sync_samples(const Mdp& mdp, std::size_t n, std::int64_t k) {
  return static_cast<std::uint64_t>(k) * n * mdp.num_pairs();
}

// Shared loop for the synchronous sampled schemes: at iteration k (0-based)
// the block drawn at k produces Q_{k+1}. `alpha_for` returns the mixing weight
// for that iteration; 1 gives plain EQVI.
template <class AlphaFor, class OnStep>
SolveTrace run_sampled(const Mdp& mdp, const SolverConfig& cfg, const NoiseStream& stream, const QTable* reference,
                       AlphaFor alpha_for, OnStep on_step) {
  cfg.validate();
  SolveTrace trace;
  trace.algorithm = cfg.algorithm;
  Recorder rec(cfg, ref_span(reference, mdp));
  QTable q = cfg.initial.make(mdp.num_states(), mdp.num_actions());
  rec.record(trace, 0, q.values(), 0.0, 0, &q);
  for (std::int64_t k = 0; k < cfg.max_iters; ++k) {
    const NoiseBlock block = draw_noise_block(stream, k, cfg.n_samples, mdp.num_states(), mdp.num_actions());
    const double alpha = alpha_for(k);
    QTable next = alpha == 1.0 ? eqvi_step(mdp, q, block, cfg.n_samples, cfg.exec)
                               : ql_step(mdp, q, block, cfg.n_samples, alpha, cfg.exec);
    const double change = sup_distance(next, q);
    std::swap(q, next);
    rec.record(trace, k + 1, q.values(), change, sync_samples(mdp, cfg.n_samples, k + 1), &q);
    on_step(k, q, next);
  }
  trace.final_q = std::move(q);
  return trace;
}

}  // namespace

QTable eqvi_step(const Mdp& mdp, const QTable& q, const NoiseBlock& block, std::size_t n, Exec exec) {
  check_shape(mdp, q);
  check_block(mdp, block, n);
  const VTable vmin = q.minima();
  QTable out(mdp.num_states(), mdp.num_actions());
  kernels::empirical_backup(exec, mdp, vmin.values(), block, out.values());
  return out;
}

QTable empirical_q_operator(const Mdp& mdp, const QTable& q, const EmpiricalKernel& kernel) {
  check_shape(mdp, q);
  if (kernel.num_states() != mdp.num_states() || kernel.num_actions() != mdp.num_actions())
    throw StructuralError("empirical kernel shape does not match MDP");
  const VTable vmin = q.minima();
  QTable out(mdp.num_states(), mdp.num_actions());
  const double n = static_cast<double>(kernel.samples_per_pair());
  for (State s = 0; s < mdp.num_states(); ++s) {
    for (Action a = 0; a < mdp.num_actions(); ++a) {
      const auto counts = kernel.counts(s, a);
      double acc = 0.0;
      for (State t = 0; t < mdp.num_states(); ++t)
        if (counts[t] != 0) acc += static_cast<double>(counts[t]) / n * vmin[t];
      out(s, a) = mdp.cost(s, a) + mdp.gamma() * acc;
    }
  }
  return out;
}

QTable ql_step(const Mdp& mdp, const QTable& q, const NoiseBlock& block, std::size_t n, double alpha, Exec exec) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("ql_step: alpha must lie in [0,1]");
  QTable target = eqvi_step(mdp, q, block, n, exec);
  auto t = target.values();
  const auto old = q.values();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = (1.0 - alpha) * old[i] + alpha * t[i];
  return target;
}

QTable async_update(const Mdp& mdp, const QTable& q, StateAction z, std::span<const double> samples, double alpha) {
  check_shape(mdp, q);
  if (z.state >= mdp.num_states() || z.action >= mdp.num_actions())
    throw StructuralError("async_update: invalid state-action pair");
  if (samples.empty()) throw DomainError("async_update: needs at least one sample");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("async_update: alpha must lie in [0,1]");
  for (double xi : samples)
    if (!(xi >= 0.0 && xi <= 1.0)) throw DomainError("async_update: sample outside [0,1]");
  const VTable vmin = q.minima();
  kernels::RowScratch scratch(mdp.num_states());
  const double target =
      mdp.cost(z.state, z.action) +
      mdp.gamma() * kernels::empirical_mean(mdp, z.state, z.action, samples, vmin.values(), scratch);
  QTable out = q;
  out(z.state, z.action) = (1.0 - alpha) * q(z.state, z.action) + alpha * target;
  return out;
}

SolveTrace run_qvi(const Mdp& mdp, const SolverConfig& cfg, const QTable* reference) {
  cfg.validate();
  SolveTrace trace;
  trace.algorithm = Algorithm::qvi;
  Recorder rec(cfg, ref_span(reference, mdp));
  QTable q = cfg.initial.make(mdp.num_states(), mdp.num_actions());
  rec.record(trace, 0, q.values(), 0.0, 0, &q);
  for (std::int64_t k = 0; k < cfg.max_iters; ++k) {
    QTable next = q_operator_apply(mdp, q, cfg.exec);
    const double change = sup_distance(next, q);
    q = std::move(next);
    rec.record(trace, k + 1, q.values(), change, 0, &q);
  }
  trace.final_q = std::move(q);
  return trace;
}

SolveTrace run_vi(const Mdp& mdp, const SolverConfig& cfg, const VTable* reference) {
  cfg.validate();
  if (reference && reference->size() != mdp.num_states()) throw StructuralError("VTable reference size mismatch");
  SolveTrace trace;
  trace.algorithm = Algorithm::vi;
  Recorder rec(cfg, reference ? reference->values() : std::span<const double>{});
  VTable v = cfg.initial.make(mdp.num_states(), mdp.num_actions()).minima();
  rec.record(trace, 0, v.values(), 0.0, 0, nullptr);
  for (std::int64_t k = 0; k < cfg.max_iters; ++k) {
    VTable next = bellman_apply(mdp, v, cfg.exec);
    const double change = sup_distance(next, v);
    v = std::move(next);
    rec.record(trace, k + 1, v.values(), change, 0, nullptr);
  }
  QTable q(mdp.num_states(), mdp.num_actions());
  kernels::expected_backup(cfg.exec, mdp, v.values(), q.values());
  trace.final_q = std::move(q);
  trace.final_v = std::move(v);
  return trace;
}

SolveTrace run_eqvi(const Mdp& mdp, const SolverConfig& cfg, const NoiseStream& stream, const QTable* reference) {
  return run_sampled(
      mdp, cfg, stream, reference, [](std::int64_t) { return 1.0; }, [](std::int64_t, const QTable&, const QTable&) {});
}

SolveTrace run_ql(const Mdp& mdp, const SolverConfig& cfg, const NoiseStream& stream, const QTable* reference) {
  cfg.step.validate();
  return run_sampled(
      mdp, cfg, stream, reference, [&](std::int64_t k) { return cfg.step.at(k + 1); },
      [](std::int64_t, const QTable&, const QTable&) {});
}

SolveTrace run_hybrid(const Mdp& mdp, const SolverConfig& cfg, const NoiseStream& stream, const QTable* reference) {
  cfg.validate();
  cfg.step.validate();
  const auto& sw = cfg.hybrid;
  std::optional<std::int64_t> switched;  // EQVI iterations done before QL took over
  if (sw.kind == HybridSwitch::Kind::at_iteration && sw.iteration < cfg.max_iters) switched = sw.iteration;

  auto alpha_for = [&](std::int64_t k) {
    if (!switched || k < *switched) return 1.0;
    return cfg.step.at(k - *switched + 1);
  };
  auto on_step = [&](std::int64_t k, const QTable& q, const QTable& prev) {
    if (switched || sw.kind != HybridSwitch::Kind::relative_change) return;
    const double norm = sup_norm(q.values());
    const double rel = norm > 0.0 ? sup_distance(q, prev) / norm : 0.0;
    if (rel <= sw.threshold) switched = k + 1;
  };
  SolveTrace trace = run_sampled(mdp, cfg, stream, reference, alpha_for, on_step);
  trace.algorithm = Algorithm::hybrid;
  if (sw.kind == HybridSwitch::Kind::at_iteration) {
    trace.switch_iteration = std::min(sw.iteration, cfg.max_iters);
    trace.switch_reached = true;
  } else {
    trace.switch_iteration = switched;
    trace.switch_reached = switched.has_value();
  }
  return trace;
}

SolveTrace run_async(const Mdp& mdp, const SolverConfig& cfg, const NoiseStream& stream, const QTable* reference) {
  cfg.validate();
  const bool learning = cfg.algorithm == Algorithm::ql_async;
  if (learning) cfg.step.validate();
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  const std::size_t pairs = mdp.num_pairs();
  const std::size_t n = cfg.n_samples;

  SolveTrace trace;
  trace.algorithm = cfg.algorithm == Algorithm::ql_async ? Algorithm::ql_async : Algorithm::eqvi_async;
  const auto ref = ref_span(reference, mdp);
  const double ref_norm = ref.empty() ? 0.0 : sup_norm(ref);
  const auto start = std::chrono::steady_clock::now();

  QTable q = cfg.initial.make(S, A);
  std::vector<double> vmin(S);
  for (State s = 0; s < S; ++s) vmin[s] = q.row_min(s);
  MaxTree dist(pairs);
  if (!ref.empty())
    for (std::size_t i = 0; i < pairs; ++i) dist.set(i, std::abs(q.values()[i] - ref[i]));

  std::vector<std::int64_t> visits(pairs, 0);
  std::vector<double> xi(n);
  kernels::RowScratch scratch(S);
  std::vector<char> seen(pairs, 0);
  std::size_t seen_count = 0;

  auto record = [&](std::int64_t k, double change) {
    if (k % cfg.record_stride == 0) {
      TracePoint p;
      p.iteration = k;
      p.change = change;
      p.samples = static_cast<std::uint64_t>(k) * n;
      p.distance = ref.empty() ? std::numeric_limits<double>::quiet_NaN() : dist.max();
      p.relative_error = ref_norm > 0.0 ? p.distance / ref_norm : std::numeric_limits<double>::quiet_NaN();
      p.elapsed_ns = cfg.record_timing ? std::chrono::duration_cast<std::chrono::nanoseconds>(
                                             std::chrono::steady_clock::now() - start)
                                             .count()
                                       : 0;
      trace.points.push_back(p);
    }
    if (cfg.snapshot_stride > 0 && k % cfg.snapshot_stride == 0) trace.snapshots.push_back({k, q});
  };

  record(0, 0.0);
  for (std::int64_t k = 1; k <= cfg.max_iters; ++k) {
    std::size_t pair;
    if (cfg.selection == Selection::round_robin) {
      pair = static_cast<std::size_t>((k - 1) % static_cast<std::int64_t>(pairs));
    } else {
      const double u = stream.uniform(StreamLabel::selection, k, 0, 0, 0);
      pair = std::min(pairs - 1, static_cast<std::size_t>(u * static_cast<double>(pairs)));
    }
    const State s = pair / A;
    const Action a = pair % A;

    double alpha = 1.0;
    ++visits[pair];
    if (learning) alpha = cfg.step.at(cfg.step_counting == StepCounting::per_pair ? visits[pair] : k);

    const auto key = stream.key(StreamLabel::kernel_samples, k, s, a);
    for (std::size_t i = 0; i < n; ++i) xi[i] = NoiseStream::uniform_from_key(key, i);
    const double target = mdp.cost(s, a) + mdp.gamma() * kernels::empirical_mean(mdp, s, a, xi, vmin, scratch);
    const double old = q(s, a);
    const double updated = (1.0 - alpha) * old + alpha * target;
    q(s, a) = updated;
    vmin[s] = q.row_min(s);
    if (!ref.empty()) dist.set(pair, std::abs(updated - ref[pair]));

    if (!seen[pair]) {
      seen[pair] = 1;
      if (++seen_count == pairs) {
        trace.cycle_times.push_back(k);
        std::fill(seen.begin(), seen.end(), 0);
        seen_count = 0;
      }
    }
    record(k, std::abs(updated - old));
  }
  trace.final_q = std::move(q);
  return trace;
}

SolveTrace run_solver(const Mdp& mdp, const SolverConfig& cfg, const NoiseStream& stream, const QTable* reference) {
  switch (cfg.algorithm) {
    case Algorithm::qvi: return run_qvi(mdp, cfg, reference);
    case Algorithm::vi: {
      if (!reference) return run_vi(mdp, cfg, nullptr);
      const VTable vref = reference->minima();
      return run_vi(mdp, cfg, &vref);
    }
    case Algorithm::eqvi: return run_eqvi(mdp, cfg, stream, reference);
    case Algorithm::ql: return run_ql(mdp, cfg, stream, reference);
    case Algorithm::eqvi_async:
    case Algorithm::ql_async: return run_async(mdp, cfg, stream, reference);
    case Algorithm::hybrid: return run_hybrid(mdp, cfg, stream, reference);
  }
  throw DomainError("unknown algorithm");
}

}  // namespace eqvi
