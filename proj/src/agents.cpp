#include "sdpg/agents.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sdpg/error.hpp"

namespace sdpg::agents {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string(what) + " is not finite");
}

void clip_rows(const AgentState& st, nn::Matrix& a) {
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t c = 0; c < a.cols; ++c) a(r, c) = std::clamp(a(r, c), st.act_lo[c], st.act_hi[c]);
  }
}

void require_batch(const Batch& b, const AgentState& st) {
  if (b.size() == 0) throw UsageError("update needs a nonempty batch");
  if (b.obs.cols != st.obs_dim() || b.act.cols != st.act_dim()) {
    throw NumericalError("batch dimensions do not match the agent");
  }
}

/// Backpropagates dL/dpi through the actor and takes one Adam step.
void actor_step(AgentState& st, const nn::ForwardCache& cache, const nn::Matrix& dpi) {
  auto g = st.actor.backward(cache, dpi);
  nn::adam_step(st.actor.params(), g.params, st.actor_opt);
}

/// Regresses the critic toward per-row targets; returns the loss
/// 0.5 * mean (y - Q)^2 + `extra`.
double critic_regression(AgentState& st, const Batch& b, const std::vector<double>& y, double extra) {
  nn::ForwardCache cache;
  const auto& q = st.critic.forward(critic_input(b.obs, b.act), cache);
  const double inv_b = 1.0 / static_cast<double>(b.size());
  nn::Matrix up(b.size(), 1);
  double loss = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    const double d = q(j, 0) - y[j];
    loss += 0.5 * d * d * inv_b;
    up(j, 0) = d * inv_b;
  }
  loss += extra;
  require_finite(loss, "critic loss");
  auto g = st.critic.backward(cache, up);
  nn::adam_step(st.critic.params(), g.params, st.critic_opt);
  return loss;
}

}  // namespace

AgentKind parse_agent(const std::string& id) {
  if (id == "ddpg") return AgentKind::ddpg;
  if (id == "soft-ddpg") return AgentKind::soft_ddpg;
  throw UsageError("unknown agent id '" + id + "'");
}

std::string agent_name(AgentKind kind) { return kind == AgentKind::ddpg ? "ddpg" : "soft-ddpg"; }

void AgentConfig::validate() const {
  auto fail = [](const std::string& m) { throw UsageError("agent config: " + m); };
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma must lie in [0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) fail("tau must lie in (0, 1]");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) fail("learning rates must be positive");
  if (batch == 0) fail("batch must be positive");
  if (!(sigma_expl >= 0.0)) fail("sigma_expl must be nonnegative");
  if (warmup_steps < 0) fail("warmup_steps must be nonnegative");
  if (buffer_capacity == 0) fail("buffer_capacity must be positive");
  for (auto h : hidden) {
    if (h == 0) fail("hidden sizes must be positive");
  }
  if (kind == AgentKind::soft_ddpg) {
    if (!(sigma > 0.0)) fail("soft-ddpg needs sigma > 0");
    if (n_smooth == 0) fail("soft-ddpg needs n_smooth >= 1");
  }
}

AgentState make_agent(const envs::EnvSpec& spec, const AgentConfig& cfg, Rng& init_rng) {
  cfg.validate();
  for (std::size_t i = 0; i < spec.act_dim; ++i) {
    if (spec.act_lo[i] != -spec.act_hi[i]) throw UsageError("agents need symmetric action bounds");
  }
  AgentState st;
  st.act_lo = spec.act_lo;
  st.act_hi = spec.act_hi;
  std::vector<std::size_t> actor_sizes{spec.obs_dim};
  actor_sizes.insert(actor_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  actor_sizes.push_back(spec.act_dim);
  std::vector<std::size_t> critic_sizes{spec.obs_dim + spec.act_dim};
  critic_sizes.insert(critic_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  critic_sizes.push_back(1);

  // Per-dimension scales are not supported by the head; all built-in envs
  // have one action dimension or equal bounds.
  const double scale = spec.act_hi[0];
  st.actor = nn::Mlp::init(actor_sizes, cfg.activation, nn::Head::bounded(scale), init_rng);
  st.critic = nn::Mlp::init(critic_sizes, cfg.activation, nn::Head::linear(), init_rng);
  st.target_actor = st.actor;
  st.target_critic = st.critic;
  st.actor_opt = nn::AdamState(st.actor.params().size(), cfg.actor_lr);
  st.critic_opt = nn::AdamState(st.critic.params().size(), cfg.critic_lr);
  return st;
}

std::vector<double> clip_action(const AgentState& st, std::vector<double> a) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::clamp(a[i], st.act_lo[i], st.act_hi[i]);
  return a;
}

std::vector<double> select_action(const AgentState& st, const std::vector<double>& obs,
                                  const AgentConfig& cfg, Rng& rng, bool explore) {
  if (obs.size() != st.obs_dim()) throw NumericalError("observation width does not match the actor");
  auto a = st.actor.forward(obs);
  if (explore && cfg.sigma_expl > 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double half = 0.5 * (st.act_hi[i] - st.act_lo[i]);
      a[i] += cfg.sigma_expl * half * normal(rng);
    }
  }
  return clip_action(st, std::move(a));
}

std::vector<double> behavior_action(const AgentState& st, const std::vector<double>& obs,
                                    const AgentConfig& cfg, Rng& rng) {
  if (st.env_steps < cfg.warmup_steps) {
    std::vector<double> a(st.act_dim());
    for (std::size_t i = 0; i < a.size(); ++i) {
      std::uniform_real_distribution<double> u(st.act_lo[i], st.act_hi[i]);
      a[i] = u(rng);
    }
    return a;
  }
  return select_action(st, obs, cfg, rng, true);
}

nn::Matrix critic_input(const nn::Matrix& obs, const nn::Matrix& act) {
  if (obs.rows != act.rows) throw NumericalError("critic input: row counts differ");
  nn::Matrix x(obs.rows, obs.cols + act.cols);
  for (std::size_t r = 0; r < obs.rows; ++r) {
    std::copy(obs.row(r), obs.row(r) + obs.cols, x.row(r));
    std::copy(act.row(r), act.row(r) + act.cols, x.row(r) + obs.cols);
  }
  return x;
}

Batch Batch::from(const std::vector<replay::Transition>& items) {
  Batch b;
  if (items.empty()) return b;
  const std::size_t n = items.size(), od = items[0].obs.size(), ad = items[0].action.size();
  b.obs = nn::Matrix(n, od);
  b.next_obs = nn::Matrix(n, od);
  b.act = nn::Matrix(n, ad);
  b.reward.resize(n);
  b.not_done.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = items[i];
    if (t.obs.size() != od || t.next_obs.size() != od || t.action.size() != ad) {
      throw NumericalError("batch: transitions have inconsistent dimensions");
    }
    std::copy(t.obs.begin(), t.obs.end(), b.obs.row(i));
    std::copy(t.next_obs.begin(), t.next_obs.end(), b.next_obs.row(i));
    std::copy(t.action.begin(), t.action.end(), b.act.row(i));
    b.reward[i] = t.reward;
    b.not_done[i] = t.terminated ? 0.0 : 1.0;
  }
  return b;
}

double ddpg_critic_update(AgentState& st, const Batch& b, const AgentConfig& cfg) {
  require_batch(b, st);
  const auto next_act = st.target_actor.forward(b.next_obs);
  const auto q_next = st.target_critic.forward(critic_input(b.next_obs, next_act));
  std::vector<double> y(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) {
    y[j] = b.reward[j] + cfg.gamma * b.not_done[j] * q_next(j, 0);
  }
  return critic_regression(st, b, y, 0.0);
}

double soft_critic_update(AgentState& st, const Batch& b, const AgentConfig& cfg, Rng& rng) {
  require_batch(b, st);
  const std::size_t n = cfg.n_smooth, m = st.act_dim(), bs = b.size();
  const auto centre = st.target_actor.forward(b.next_obs);
  nn::Matrix obs_rep(bs * n, st.obs_dim()), act_rep(bs * n, m);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t j = 0; j < bs; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = j * n + i;
      std::copy(b.next_obs.row(j), b.next_obs.row(j) + st.obs_dim(), obs_rep.row(r));
      for (std::size_t c = 0; c < m; ++c) act_rep(r, c) = centre(j, c) + cfg.sigma * normal(rng);
    }
  }
  clip_rows(st, act_rep);
  const auto q_next = st.target_critic.forward(critic_input(obs_rep, act_rep));

  // (1/(2Bn)) sum_j sum_i (y_ij - Q_j)^2 splits into the regression toward
  // the mean target plus half the within-state target variance.
  std::vector<double> y_mean(bs, 0.0);
  double spread = 0.0;
  for (std::size_t j = 0; j < bs; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += b.reward[j] + cfg.gamma * b.not_done[j] * q_next(j * n + i, 0);
    y_mean[j] = s / static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = b.reward[j] + cfg.gamma * b.not_done[j] * q_next(j * n + i, 0) - y_mean[j];
      var += d * d;
    }
    spread += 0.5 * var / static_cast<double>(n * bs);
  }
  return critic_regression(st, b, y_mean, spread);
}

double ddpg_actor_update(AgentState& st, const Batch& b, const AgentConfig&) {
  require_batch(b, st);
  nn::ForwardCache actor_cache, critic_cache;
  const auto& pi = st.actor.forward(b.obs, actor_cache);
  const auto& q = st.critic.forward(critic_input(b.obs, pi), critic_cache);
  const double inv_b = 1.0 / static_cast<double>(b.size());
  double objective = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) objective += q(j, 0) * inv_b;
  require_finite(objective, "actor objective");

  // Minimise -mean Q: the critic only supplies its input gradient.
  const nn::Matrix up(b.size(), 1, -inv_b);
  const auto gq = st.critic.backward(critic_cache, up, false);
  nn::Matrix dpi(b.size(), st.act_dim());
  for (std::size_t j = 0; j < b.size(); ++j) {
    for (std::size_t c = 0; c < st.act_dim(); ++c) dpi(j, c) = gq.input(j, st.obs_dim() + c);
  }
  actor_step(st, actor_cache, dpi);
  return objective;
}

nn::Matrix soft_actor_pi_gradient(const nn::Matrix& pi, const nn::Matrix& samples,
                                  const std::vector<double>& q, std::size_t n, double sigma) {
  if (samples.rows != pi.rows * n || samples.cols != pi.cols || q.size() != samples.rows) {
    throw NumericalError("soft actor gradient: sample shapes do not match");
  }
  const double scale = -1.0 / (static_cast<double>(pi.rows * n) * sigma * sigma);
  nn::Matrix g(pi.rows, pi.cols);
  for (std::size_t j = 0; j < pi.rows; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = j * n + i;
      for (std::size_t c = 0; c < pi.cols; ++c) g(j, c) += scale * q[r] * (samples(r, c) - pi(j, c));
    }
  }
  return g;
}

double soft_actor_loss(const nn::Matrix& pi, const nn::Matrix& samples, const std::vector<double>& q,
                       std::size_t n, double sigma) {
  const double scale = 1.0 / (2.0 * static_cast<double>(pi.rows * n) * sigma * sigma);
  double loss = 0.0;
  for (std::size_t j = 0; j < pi.rows; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = j * n + i;
      double d2 = 0.0;
      for (std::size_t c = 0; c < pi.cols; ++c) {
        const double d = samples(r, c) - pi(j, c);
        d2 += d * d;
      }
      loss += scale * d2 * q[r];
    }
  }
  return loss;
}

double soft_actor_update(AgentState& st, const Batch& b, const AgentConfig& cfg, Rng& rng) {
  require_batch(b, st);
  const std::size_t n = cfg.n_smooth, m = st.act_dim(), bs = b.size();
  nn::ForwardCache actor_cache;
  const auto& pi = st.actor.forward(b.obs, actor_cache);
  nn::Matrix obs_rep(bs * n, st.obs_dim()), samples(bs * n, m);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t j = 0; j < bs; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = j * n + i;
      std::copy(b.obs.row(j), b.obs.row(j) + st.obs_dim(), obs_rep.row(r));
      for (std::size_t c = 0; c < m; ++c) samples(r, c) = pi(j, c) + cfg.sigma * normal(rng);
    }
  }
  clip_rows(st, samples);
  const auto qm = st.critic.forward(critic_input(obs_rep, samples));
  const std::vector<double>& q = qm.data;
  const double loss = soft_actor_loss(pi, samples, q, n, cfg.sigma);
  require_finite(loss, "soft actor loss");
  actor_step(st, actor_cache, soft_actor_pi_gradient(pi, samples, q, n, cfg.sigma));
  return loss;
}

StepMetrics train_step(AgentState& st, replay::ReplayBuffer& buffer, replay::Transition t,
                       const AgentConfig& cfg, Rng& sampling_rng, Rng& smoothing_rng) {
  buffer.push(std::move(t));
  ++st.env_steps;
  StepMetrics out;
  if (st.env_steps <= cfg.warmup_steps) return out;
  const auto batch = Batch::from(buffer.sample(cfg.batch, sampling_rng));
  if (cfg.kind == AgentKind::soft_ddpg) {
    out.critic_loss = soft_critic_update(st, batch, cfg, smoothing_rng);
    out.actor_loss = soft_actor_update(st, batch, cfg, smoothing_rng);
  } else {
    out.critic_loss = ddpg_critic_update(st, batch, cfg);
    // Logged as a loss: the negated objective.
    out.actor_loss = -ddpg_actor_update(st, batch, cfg);
  }
  nn::polyak_update(st.target_critic, st.critic, cfg.tau);
  nn::polyak_update(st.target_actor, st.actor, cfg.tau);
  ++st.updates;
  out.updated = true;
  return out;
}

}  // namespace sdpg::agents
