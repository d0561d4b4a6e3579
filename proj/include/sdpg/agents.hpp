#pragma once

// DDPG and Soft DDPG: action selection, critic and actor updates, target
// tracking, and the per-environment-step training contract.

#include <string>
#include <vector>

#include "sdpg/envs.hpp"
#include "sdpg/nn.hpp"
#include "sdpg/replay.hpp"
#include "sdpg/rng.hpp"

namespace sdpg::agents {

enum class AgentKind { ddpg, soft_ddpg };

AgentKind parse_agent(const std::string& id);
std::string agent_name(AgentKind kind);

struct AgentConfig {
  AgentKind kind = AgentKind::soft_ddpg;
  double gamma = 0.99;
  double tau = 0.005;
  double actor_lr = 1e-4;
  double critic_lr = 1e-4;
  std::size_t batch = 256;
  double sigma_expl = 0.1;  // fraction of the action half-range
  double sigma = 0.2;       // smoothing scale, absolute action units
  std::size_t n_smooth = 50;
  long warmup_steps = 1000;
  std::vector<std::size_t> hidden = {400, 300};
  nn::Activation activation = nn::Activation::relu;
  std::size_t buffer_capacity = 1000000;

  /// Throws UsageError on any out-of-range field.
  void validate() const;
};

struct AgentState {
  nn::Mlp actor;
  nn::Mlp critic;
  nn::Mlp target_actor;
  nn::Mlp target_critic;
  nn::AdamState actor_opt;
  nn::AdamState critic_opt;
  std::vector<double> act_lo;
  std::vector<double> act_hi;
  long env_steps = 0;
  long updates = 0;

  std::size_t obs_dim() const { return actor.input_dim(); }
  std::size_t act_dim() const { return actor.output_dim(); }
};

/// Fresh actor/critic pair for an environment; targets start as exact copies.
/// Action bounds must be symmetric (the actor head is scale * tanh).
AgentState make_agent(const envs::EnvSpec& spec, const AgentConfig& cfg, Rng& init_rng);

std::vector<double> clip_action(const AgentState& st, std::vector<double> a);

/// pi(obs), plus N(0, (sigma_expl * half_range)^2) noise when exploring,
/// clipped to the bounds.
std::vector<double> select_action(const AgentState& st, const std::vector<double>& obs,
                                  const AgentConfig& cfg, Rng& rng, bool explore);

/// Uniform random during warmup, otherwise the exploring policy.
std::vector<double> behavior_action(const AgentState& st, const std::vector<double>& obs,
                                    const AgentConfig& cfg, Rng& rng);

/// Rows obs | action.
nn::Matrix critic_input(const nn::Matrix& obs, const nn::Matrix& act);

struct Batch {
  nn::Matrix obs;
  nn::Matrix act;
  nn::Matrix next_obs;
  std::vector<double> reward;
  std::vector<double> not_done;  // 0 at termination, 1 otherwise (truncation bootstraps)

  static Batch from(const std::vector<replay::Transition>& items);
  std::size_t size() const { return reward.size(); }
};

/// Each returns the loss (or objective, for ddpg_actor_update) evaluated
/// before its single Adam step.
double ddpg_critic_update(AgentState& st, const Batch& b, const AgentConfig& cfg);
double ddpg_actor_update(AgentState& st, const Batch& b, const AgentConfig& cfg);
double soft_critic_update(AgentState& st, const Batch& b, const AgentConfig& cfg, Rng& rng);
double soft_actor_update(AgentState& st, const Batch& b, const AgentConfig& cfg, Rng& rng);

/// Gradient of the soft actor loss with respect to the policy outputs.
/// pi: B x m centres; samples: (B*n) x m actions (row b*n + i belongs to
/// state b), treated as constants; q: critic values at the samples.
/// Returns dL/dpi = -(1/(B n sigma^2)) sum_i q_i (a_i - pi).
nn::Matrix soft_actor_pi_gradient(const nn::Matrix& pi, const nn::Matrix& samples,
                                  const std::vector<double>& q, std::size_t n, double sigma);

/// The soft actor loss (1/(2 B n sigma^2)) sum sum |a_i - pi|^2 q_i.
double soft_actor_loss(const nn::Matrix& pi, const nn::Matrix& samples, const std::vector<double>& q,
                       std::size_t n, double sigma);

struct StepMetrics {
  bool updated = false;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
};

/// Stores the transition and counts one environment step. After warmup,
/// runs one critic update, one actor update and one Polyak step of both
/// targets.
StepMetrics train_step(AgentState& st, replay::ReplayBuffer& buffer, replay::Transition t,
                       const AgentConfig& cfg, Rng& sampling_rng, Rng& smoothing_rng);

}  // namespace sdpg::agents
