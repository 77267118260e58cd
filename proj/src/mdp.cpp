#include "eqvi/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "eqvi/error.hpp"

namespace eqvi {

namespace {

std::string pair_label(State s, Action a) {
  std::ostringstream os;
  os << "(s=" << s << ", a=" << a << ")";
  return os.str();
}

}  // namespace

Mdp::Mdp(std::size_t num_states, std::size_t num_actions, double gamma, std::vector<double> cost,
         std::vector<double> kernel)
    : num_states_(num_states),
      num_actions_(num_actions),
      gamma_(gamma),
      cost_(std::move(cost)),
      kernel_(std::move(kernel)) {
  if (num_states_ == 0 || num_actions_ == 0) throw InvalidMdp("MDP needs at least one state and one action");
  if (!(gamma_ > 0.0 && gamma_ < 1.0)) throw InvalidMdp("discount factor must lie in (0,1)");
  if (cost_.size() != num_pairs()) throw InvalidMdp("cost table has wrong size");
  if (kernel_.size() != num_pairs() * num_states_) throw InvalidMdp("kernel has wrong size");

  for (std::size_t i = 0; i < cost_.size(); ++i) {
    if (!std::isfinite(cost_[i]) || cost_[i] < 0.0)
      throw InvalidMdp("cost must be finite and nonnegative at " + pair_label(i / num_actions_, i % num_actions_));
  }

  cdf_.resize(kernel_.size());
  last_support_.resize(num_pairs());
  for (std::size_t pair = 0; pair < num_pairs(); ++pair) {
    const double* p = kernel_.data() + pair * num_states_;
    double* f = cdf_.data() + pair * num_states_;
    double total = 0.0;
    State last = 0;
    for (std::size_t t = 0; t < num_states_; ++t) {
      if (!(p[t] >= 0.0 && p[t] <= 1.0))
        throw InvalidMdp("kernel entry outside [0,1] at " + pair_label(pair / num_actions_, pair % num_actions_));
      total += p[t];
      f[t] = total;
      if (p[t] > 0.0) last = t;
    }
    if (std::abs(total - 1.0) > kKernelTolerance)
      throw InvalidMdp("kernel row does not sum to 1 at " + pair_label(pair / num_actions_, pair % num_actions_));
    last_support_[pair] = last;
  }
}

double Mdp::max_cost() const { return *std::max_element(cost_.begin(), cost_.end()); }

bool Mdp::ergodic_hint() const {
  return std::all_of(kernel_.begin(), kernel_.end(), [](double p) { return p > 0.0; });
}

bool Mdp::is_deterministic() const {
  return std::all_of(kernel_.begin(), kernel_.end(), [](double p) { return p == 0.0 || p == 1.0; });
}

QTable::QTable(std::size_t num_states, std::size_t num_actions, std::vector<double> values)
    : num_states_(num_states), num_actions_(num_actions), values_(std::move(values)) {
  if (values_.size() != num_states_ * num_actions_) throw StructuralError("QTable values have wrong size");
}

QTable QTable::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) throw StructuralError("QTable needs at least one entry");
  const std::size_t width = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * width);
  for (const auto& r : rows) {
    if (r.size() != width) throw StructuralError("ragged QTable rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return QTable(rows.size(), width, std::move(flat));
}

double QTable::row_min(State s) const {
  const auto r = row(s);
  return *std::min_element(r.begin(), r.end());
}

Action QTable::row_argmin(State s) const {
  const auto r = row(s);
  // min_element returns the first minimum, which is the lowest-index tie rule.
  return static_cast<Action>(std::min_element(r.begin(), r.end()) - r.begin());
}

VTable QTable::minima() const {
  VTable v(num_states_);
  for (State s = 0; s < num_states_; ++s) v[s] = row_min(s);
  return v;
}

double sup_norm(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

double sup_distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw StructuralError("sup_distance: size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

StationaryPolicy::StationaryPolicy(std::size_t num_states, std::size_t num_actions, std::vector<double> rows)
    : num_states_(num_states), num_actions_(num_actions), rows_(std::move(rows)) {
  if (rows_.size() != num_states_ * num_actions_) throw StructuralError("policy has wrong size");
  for (State s = 0; s < num_states_; ++s) {
    double total = 0.0;
    for (Action a = 0; a < num_actions_; ++a) {
      const double p = rows_[s * num_actions_ + a];
      if (!(p >= 0.0 && p <= 1.0)) throw DomainError("policy entry outside [0,1]");
      total += p;
    }
    if (std::abs(total - 1.0) > kKernelTolerance) throw DomainError("policy row does not sum to 1");
  }
}

StationaryPolicy StationaryPolicy::deterministic(std::size_t num_actions, const std::vector<Action>& choice) {
  std::vector<double> rows(choice.size() * num_actions, 0.0);
  for (State s = 0; s < choice.size(); ++s) {
    if (choice[s] >= num_actions) throw StructuralError("policy action out of range");
    rows[s * num_actions + choice[s]] = 1.0;
  }
  return StationaryPolicy(choice.size(), num_actions, std::move(rows));
}

StationaryPolicy StationaryPolicy::uniform(std::size_t num_states, std::size_t num_actions) {
  return StationaryPolicy(num_states, num_actions,
                          std::vector<double>(num_states * num_actions, 1.0 / static_cast<double>(num_actions)));
}

bool StationaryPolicy::is_deterministic() const {
  return std::all_of(rows_.begin(), rows_.end(), [](double p) { return p == 0.0 || p == 1.0; });
}

Action StationaryPolicy::sample(State s, double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("policy draw outside [0,1]");
  const auto r = row(s);
  double cum = 0.0;
  Action last = 0;
  for (Action a = 0; a < num_actions_; ++a) {
    if (r[a] <= 0.0) continue;
    cum += r[a];
    last = a;
    if (u < cum) return a;
  }
  return last;
}

PolicySequence::PolicySequence(std::vector<StationaryPolicy> policies) : policies_(std::move(policies)) {
  if (policies_.empty()) throw StructuralError("empty policy sequence");
}

const StationaryPolicy& PolicySequence::at(std::int64_t t) const {
  if (t < 0) throw DomainError("policy sequence index must be nonnegative");
  const auto i = static_cast<std::size_t>(t);
  return i < policies_.size() ? policies_[i] : policies_.back();
}

Mdp read_mdp_json(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidMdp(std::string("malformed MDP JSON: ") + e.what());
  }
  for (const char* key : {"num_states", "num_actions", "gamma", "cost", "kernel"}) {
    if (!j.contains(key)) throw InvalidMdp(std::string("MDP JSON missing key '") + key + "'");
  }
  try {
    const auto S = j.at("num_states").get<std::size_t>();
    const auto A = j.at("num_actions").get<std::size_t>();
    const auto gamma = j.at("gamma").get<double>();
    const auto& cost = j.at("cost");
    const auto& kernel = j.at("kernel");
    if (cost.size() != S || kernel.size() != S) throw InvalidMdp("cost/kernel outer dimension must equal num_states");

    std::vector<double> flat_cost;
    std::vector<double> flat_kernel;
    flat_cost.reserve(S * A);
    flat_kernel.reserve(S * A * S);
    for (std::size_t s = 0; s < S; ++s) {
      if (cost[s].size() != A || kernel[s].size() != A) throw InvalidMdp("action dimension must equal num_actions");
      for (std::size_t a = 0; a < A; ++a) {
        flat_cost.push_back(cost[s][a].get<double>());
        if (kernel[s][a].size() != S) throw InvalidMdp("kernel rows must have num_states entries");
        for (std::size_t t = 0; t < S; ++t) flat_kernel.push_back(kernel[s][a][t].get<double>());
      }
    }
    return Mdp(S, A, gamma, std::move(flat_cost), std::move(flat_kernel));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidMdp(std::string("MDP JSON has wrong types: ") + e.what());
  }
}

Mdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidMdp("cannot open MDP file: " + path);
  return read_mdp_json(in);
}

void write_mdp_json(const Mdp& mdp, std::ostream& out) {
  nlohmann::json j;
  j["num_states"] = mdp.num_states();
  j["num_actions"] = mdp.num_actions();
  j["gamma"] = mdp.gamma();
  auto cost = nlohmann::json::array();
  auto kernel = nlohmann::json::array();
  for (State s = 0; s < mdp.num_states(); ++s) {
    auto crow = nlohmann::json::array();
    auto krow = nlohmann::json::array();
    for (Action a = 0; a < mdp.num_actions(); ++a) {
      crow.push_back(mdp.cost(s, a));
      const auto r = mdp.row(s, a);
      krow.push_back(std::vector<double>(r.begin(), r.end()));
    }
    cost.push_back(std::move(crow));
    kernel.push_back(std::move(krow));
  }
  j["cost"] = std::move(cost);
  j["kernel"] = std::move(kernel);
  out << j.dump() << '\n';
}

void save_mdp(const Mdp& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write MDP file: " + path);
  write_mdp_json(mdp, out);
}

}  // namespace eqvi
