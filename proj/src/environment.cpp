#include "codband/environment.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace codband {

namespace {

Eigen::VectorXd unit_sphere_draw(int dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  double norm = 0.0;
  do {
    for (int i = 0; i < dim; ++i) v[i] = rng.normal();
    norm = v.norm();
  } while (norm < 1e-12);
  return v / norm;
}

/// Gaussian draw clamped into the unit ball.
Eigen::VectorXd base_measure_draw(int dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.normal();
  const double norm = v.norm();
  if (norm > 1.0) v /= norm;
  return v;
}

std::vector<int> change_starts(const EnvConfig& config, Rng& rng) {
  std::vector<int> starts{0};
  while (true) {
    const int gap = rng.uniform_int(config.s_min, config.s_max);
    const int next = starts.back() + gap;
    if (next >= config.horizon) break;
    starts.push_back(next);
  }
  return starts;
}

}  // namespace

void EnvConfig::validate() const {
  if (n_users < 1) throw std::invalid_argument("env: users must be >= 1");
  if (horizon < 1) throw std::invalid_argument("env: horizon must be >= 1");
  if (dim < 1) throw std::invalid_argument("env: dim must be >= 1");
  if (pool_size < 1) throw std::invalid_argument("env: arm_pool must be >= 1");
  if (candidates_per_round < 1 || candidates_per_round > pool_size)
    throw std::invalid_argument(
        "env: candidates must lie in [1, arm_pool]");
  if (s_min < 1 || s_min > s_max)
    throw std::invalid_argument("env: need 1 <= s_min <= s_max");
  if (noise_sd < 0.0) throw std::invalid_argument("env: noise_sd must be >= 0");
  if (const auto* dp = std::get_if<DpSetting>(&setting)) {
    if (dp->alpha0 <= 0.0)
      throw std::invalid_argument("env: dp alpha0 must be > 0");
    if (dp->init_k < 0)
      throw std::invalid_argument("env: dp init_k must be >= 0");
  } else if (const auto* mix = std::get_if<FixedMixtureSetting>(&setting)) {
    if (mix->k < 1) throw std::invalid_argument("env: mixture k must be >= 1");
    if (!mix->weights.empty()) {
      if (static_cast<int>(mix->weights.size()) != mix->k)
        throw std::invalid_argument("env: mixture weights size must equal k");
      double sum = 0.0;
      for (double w : mix->weights) {
        if (w < 0.0)
          throw std::invalid_argument("env: mixture weights must be >= 0");
        sum += w;
      }
      if (sum <= 0.0)
        throw std::invalid_argument("env: mixture weights must sum > 0");
    }
  } else if (const auto* st = std::get_if<StationarySetting>(&setting)) {
    if (st->shared_k < 0)
      throw std::invalid_argument("env: stationary shared_k must be >= 0");
  }
}

const Period& EnvironmentTrace::period_at(int user, int t) const {
  const std::vector<Period>& periods = user_periods.at(user);
  // Periods are few; scan from the back for the last start <= t.
  for (auto it = periods.rbegin(); it != periods.rend(); ++it)
    if (it->start <= t) return *it;
  throw std::logic_error("EnvironmentTrace: no period covers round");
}

EnvironmentTrace generate_trace(const EnvConfig& config, Rng& rng) {
  config.validate();
  EnvironmentTrace trace;
  trace.config = config;

  trace.arm_pool.reserve(config.pool_size);
  for (int i = 0; i < config.pool_size; ++i) {
    const double radius = rng.uniform();
    trace.arm_pool.push_back(radius * unit_sphere_draw(config.dim, rng));
  }

  trace.user_periods.resize(config.n_users);

  if (const auto* dp = std::get_if<DpSetting>(&config.setting)) {
    // Chinese-restaurant generation over a shared registry of unique values,
    // seeded with init_k pre-generated parameters (drawn once each).
    std::vector<Eigen::VectorXd> registry;
    std::vector<int> counts;
    for (int j = 0; j < dp->init_k; ++j) {
      registry.push_back(unit_sphere_draw(config.dim, rng));
      counts.push_back(1);
    }
    int total = dp->init_k;
    for (int u = 0; u < config.n_users; ++u) {
      const std::vector<int> starts = change_starts(config, rng);
      for (int start : starts) {
        const double p_new = dp->alpha0 / (dp->alpha0 + total);
        int id;
        if (rng.uniform() < p_new) {
          registry.push_back(base_measure_draw(config.dim, rng));
          counts.push_back(0);
          id = static_cast<int>(registry.size()) - 1;
        } else {
          // Existing table with probability proportional to its count.
          double u01 = rng.uniform() * total;
          id = 0;
          for (std::size_t j = 0; j < counts.size(); ++j) {
            u01 -= counts[j];
            if (u01 < 0.0) {
              id = static_cast<int>(j);
              break;
            }
          }
        }
        counts[id] += 1;
        total += 1;
        trace.user_periods[u].push_back(Period{start, id, registry[id]});
      }
    }
    trace.n_unique_models = static_cast<int>(registry.size());
  } else if (const auto* mix = std::get_if<FixedMixtureSetting>(&config.setting)) {
    std::vector<Eigen::VectorXd> phis;
    for (int j = 0; j < mix->k; ++j)
      phis.push_back(unit_sphere_draw(config.dim, rng));
    std::vector<double> probs = mix->weights;
    if (probs.empty()) probs.assign(mix->k, 1.0 / mix->k);
    double sum = 0.0;
    for (double w : probs) sum += w;
    for (double& w : probs) w /= sum;
    for (int u = 0; u < config.n_users; ++u) {
      const std::vector<int> starts = change_starts(config, rng);
      for (int start : starts) {
        const int id = rng.categorical(probs);
        trace.user_periods[u].push_back(Period{start, id, phis[id]});
      }
    }
    trace.n_unique_models = mix->k;
  } else {
    const auto& st = std::get<StationarySetting>(config.setting);
    std::vector<Eigen::VectorXd> phis;
    for (int j = 0; j < st.shared_k; ++j)
      phis.push_back(unit_sphere_draw(config.dim, rng));
    for (int u = 0; u < config.n_users; ++u) {
      if (st.shared_k > 0) {
        const int id = rng.uniform_int(st.shared_k);
        trace.user_periods[u].push_back(Period{0, id, phis[id]});
      } else {
        trace.user_periods[u].push_back(
            Period{0, u, unit_sphere_draw(config.dim, rng)});
      }
    }
    trace.n_unique_models =
        st.shared_k > 0 ? st.shared_k : config.n_users;
  }

  return trace;
}

RoundOutcome serve_round(const EnvironmentTrace& trace, int t, int user,
                         Rng& rng) {
  const EnvConfig& config = trace.config;
  if (t < 0 || t >= config.horizon)
    throw std::invalid_argument("serve_round: round outside horizon");
  if (user < 0 || user >= config.n_users)
    throw std::invalid_argument("serve_round: unknown user");

  RoundOutcome out;
  out.candidate_indices = rng.sample_without_replacement(
      config.pool_size, config.candidates_per_round);
  const Eigen::VectorXd& theta = trace.true_theta(user, t);
  out.candidates.reserve(out.candidate_indices.size());
  out.expected.resize(static_cast<int>(out.candidate_indices.size()));
  for (std::size_t i = 0; i < out.candidate_indices.size(); ++i) {
    const Context& x = trace.arm_pool[out.candidate_indices[i]];
    out.candidates.push_back(x);
    out.expected[static_cast<int>(i)] = x.dot(theta);
  }
  out.best_expected = out.expected.maxCoeff();
  out.noise = config.noise_sd * rng.normal();
  return out;
}

std::vector<ChangeAudit> audit_assumption1(const EnvironmentTrace& trace,
                                           double delta) {
  if (delta < 0.0)
    throw std::invalid_argument("audit_assumption1: delta must be >= 0");
  std::vector<ChangeAudit> audits;
  for (std::size_t u = 0; u < trace.user_periods.size(); ++u) {
    const auto& periods = trace.user_periods[u];
    for (std::size_t i = 1; i < periods.size(); ++i) {
      const Eigen::VectorXd diff = periods[i].theta - periods[i - 1].theta;
      int moved = 0;
      for (const Context& x : trace.arm_pool)
        if (std::abs(x.dot(diff)) > delta) ++moved;
      audits.push_back(ChangeAudit{
          static_cast<int>(u), static_cast<int>(i),
          static_cast<double>(moved) / static_cast<double>(trace.arm_pool.size())});
    }
  }
  return audits;
}

void write_trace(const EnvironmentTrace& trace, std::ostream& out) {
  char buf[64];
  for (std::size_t u = 0; u < trace.user_periods.size(); ++u) {
    for (const Period& p : trace.user_periods[u]) {
      out << u << ' ' << p.start;
      for (int i = 0; i < p.theta.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", p.theta[i]);
        out << ' ' << buf;
      }
      out << ' ' << p.model_id << '\n';
    }
  }
}

void write_trace_file(const EnvironmentTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trace file: " + path);
  write_trace(trace, out);
}

}  // namespace codband
