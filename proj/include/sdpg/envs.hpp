#pragma once

// Episodic control environments behind one stepping interface: the
// single-state toy bandit, Pendulum and MountainCar, each with a dense and a
// discrete (banded / milestone) reward.

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "sdpg/rng.hpp"

namespace sdpg::envs {

struct EnvSpec {
  std::size_t obs_dim = 0;
  std::size_t act_dim = 0;
  std::vector<double> act_lo;
  std::vector<double> act_hi;
  int max_steps = 1;
};

/// One labelled piece of a step reward ("band", "velocity_bonus",
/// "hold_10", "step_penalty", ...).
struct RewardComponent {
  std::string label;
  double value = 0.0;
};

struct StepResult {
  std::vector<double> obs;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  std::vector<RewardComponent> components;
};

/// Per-episode record of one-time rewards already paid out plus named
/// counters. Cleared by every reset.
class MilestoneLedger {
 public:
  /// True the first time `id` is claimed in an episode, false afterwards.
  bool claim(const std::string& id) { return granted_.insert(id).second; }
  bool granted(const std::string& id) const { return granted_.count(id) != 0; }
  int& counter(const std::string& id) { return counters_[id]; }
  void clear() {
    granted_.clear();
    counters_.clear();
  }

 private:
  std::set<std::string> granted_;
  std::map<std::string, int> counters_;
};

enum class RewardMode { dense, discrete };

class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual std::string id() const = 0;

  std::vector<double> reset(Rng& rng);
  /// Actions are clamped to the spec bounds. Stepping before reset or after
  /// an episode ended raises UsageError.
  StepResult step(const std::vector<double>& action);

  int elapsed_steps() const { return steps_; }
  /// Raw physical state (for tests and logging).
  virtual std::vector<double> state() const = 0;
  virtual void set_state(const std::vector<double>& s) = 0;

 protected:
  virtual std::vector<double> do_reset(Rng& rng) = 0;
  /// Advances the dynamics with an already clamped action; sets
  /// obs/reward/terminated/components.
  virtual StepResult do_step(const std::vector<double>& action) = 0;

  MilestoneLedger ledger_;

 private:
  bool ready_ = false;
  int steps_ = 0;
};

class ToyBandit final : public Env {
 public:
  explicit ToyBandit(double epsilon = 0.05, int horizon = 200);
  const EnvSpec& spec() const override { return spec_; }
  std::string id() const override { return "toy"; }
  std::vector<double> state() const override { return {1.0}; }
  void set_state(const std::vector<double>&) override {}
  double epsilon() const { return epsilon_; }
  /// 1 if |a - 0.5| < epsilon else 0.
  double reward(double a) const;

 protected:
  std::vector<double> do_reset(Rng& rng) override;
  StepResult do_step(const std::vector<double>& action) override;

 private:
  double epsilon_;
  EnvSpec spec_;
};

class Pendulum final : public Env {
 public:
  static constexpr double g = 10.0, m = 1.0, l = 1.0, dt = 0.05;
  static constexpr double max_speed = 8.0, max_torque = 2.0;

  explicit Pendulum(RewardMode mode);
  const EnvSpec& spec() const override { return spec_; }
  std::string id() const override;
  std::vector<double> state() const override { return {theta_, theta_dot_}; }
  void set_state(const std::vector<double>& s) override;

  /// Angle-band reward and velocity bonus at (theta, theta_dot), without the
  /// hold milestones.
  static double band_reward(double theta);
  static double velocity_bonus(double theta, double theta_dot);

 protected:
  std::vector<double> do_reset(Rng& rng) override;
  StepResult do_step(const std::vector<double>& action) override;

 private:
  std::vector<double> observe() const;

  RewardMode mode_;
  EnvSpec spec_;
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
};

class MountainCar final : public Env {
 public:
  static constexpr double min_x = -1.2, max_x = 0.6, max_v = 0.07;
  static constexpr double goal_x = 0.45, power = 0.0015;

  explicit MountainCar(RewardMode mode);
  const EnvSpec& spec() const override { return spec_; }
  std::string id() const override;
  std::vector<double> state() const override { return {x_, v_}; }
  void set_state(const std::vector<double>& s) override;

 protected:
  std::vector<double> do_reset(Rng& rng) override;
  StepResult do_step(const std::vector<double>& action) override;

 private:
  RewardMode mode_;
  EnvSpec spec_;
  double x_ = -0.5;
  double v_ = 0.0;
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double theta);

/// Ids: toy, pendulum-dense, pendulum-discrete, mountaincar-dense,
/// mountaincar-discrete. Unknown ids raise UsageError.
std::unique_ptr<Env> make_env(const std::string& id);
std::vector<std::string> env_ids();

}  // namespace sdpg::envs
