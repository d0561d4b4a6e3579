#include "sdpg/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sdpg/error.hpp"

namespace sdpg::envs {

double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return theta - two_pi * std::ceil((theta - std::numbers::pi) / two_pi);
}

std::vector<double> Env::reset(Rng& rng) {
  ledger_.clear();
  steps_ = 0;
  ready_ = true;
  return do_reset(rng);
}

StepResult Env::step(const std::vector<double>& action) {
  if (!ready_) throw UsageError(id() + ": step called before reset or after the episode ended");
  const auto& sp = spec();
  if (action.size() != sp.act_dim) {
    std::ostringstream os;
    os << id() << ": action has " << action.size() << " entries, expected " << sp.act_dim;
    throw UsageError(os.str());
  }
  std::vector<double> a(action.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(action[i])) throw NumericalError(id() + ": non-finite action");
    a[i] = std::clamp(action[i], sp.act_lo[i], sp.act_hi[i]);
  }
  StepResult r = do_step(a);
  ++steps_;
  r.truncated = steps_ >= sp.max_steps;
  if (r.terminated || r.truncated) ready_ = false;
  return r;
}

// ---------------------------------------------------------------------------

ToyBandit::ToyBandit(double epsilon, int horizon) : epsilon_(epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw UsageError("toy bandit: epsilon must lie in (0, 0.5)");
  if (horizon < 1) throw UsageError("toy bandit: horizon must be at least 1");
  spec_ = {1, 1, {-1.0}, {1.0}, horizon};
}

double ToyBandit::reward(double a) const { return std::abs(a - 0.5) < epsilon_ ? 1.0 : 0.0; }

std::vector<double> ToyBandit::do_reset(Rng&) { return {1.0}; }

StepResult ToyBandit::do_step(const std::vector<double>& action) {
  StepResult r;
  r.obs = {1.0};
  r.reward = reward(action[0]);
  r.components.push_back({"hit", r.reward});
  return r;
}

// ---------------------------------------------------------------------------

Pendulum::Pendulum(RewardMode mode) : mode_(mode) {
  spec_ = {3, 1, {-max_torque}, {max_torque}, 200};
}

std::string Pendulum::id() const {
  return mode_ == RewardMode::dense ? "pendulum-dense" : "pendulum-discrete";
}

void Pendulum::set_state(const std::vector<double>& s) {
  if (s.size() != 2) throw UsageError("pendulum state is (theta, theta_dot)");
  theta_ = wrap_angle(s[0]);
  theta_dot_ = std::clamp(s[1], -max_speed, max_speed);
}

double Pendulum::band_reward(double theta) {
  const double a = std::abs(theta);
  if (a < 0.10) return 8.0;
  if (a < 0.25) return 4.0;
  if (a < 0.50) return 2.0;
  if (a < 1.00) return 0.5;
  return 0.0;
}

double Pendulum::velocity_bonus(double theta, double theta_dot) {
  if (!(std::abs(theta) < 0.25)) return 0.0;
  const double w = std::abs(theta_dot);
  if (w < 0.5) return 4.0;
  if (w < 1.0) return 2.0;
  return 0.0;
}

std::vector<double> Pendulum::observe() const {
  return {std::cos(theta_), std::sin(theta_), theta_dot_};
}

std::vector<double> Pendulum::do_reset(Rng& rng) {
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> speed(-1.0, 1.0);
  theta_ = -angle(rng);  // (-pi, pi]
  theta_dot_ = speed(rng);
  return observe();
}

StepResult Pendulum::do_step(const std::vector<double>& action) {
  const double u = action[0];
  StepResult r;
  if (mode_ == RewardMode::dense) {
    const double cost = theta_ * theta_ + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u;
    r.reward = -cost;
    r.components.push_back({"cost", -cost});
  }
  theta_dot_ += (3.0 * g / (2.0 * l) * std::sin(theta_) + 3.0 / (m * l * l) * u) * dt;
  theta_dot_ = std::clamp(theta_dot_, -max_speed, max_speed);
  theta_ = wrap_angle(theta_ + theta_dot_ * dt);

  if (mode_ == RewardMode::discrete) {
    const double band = band_reward(theta_);
    const double bonus = velocity_bonus(theta_, theta_dot_);
    r.components.push_back({"band", band});
    if (bonus > 0.0) r.components.push_back({"velocity_bonus", bonus});
    r.reward = band + bonus;

    int& hold = ledger_.counter("hold");
    if (std::abs(theta_) < 0.15 && std::abs(theta_dot_) < 0.7) {
      ++hold;
    } else {
      hold = 0;
    }
    static const struct {
      int steps;
      double bonus;
      const char* id;
    } holds[] = {{10, 20.0, "hold_10"}, {30, 40.0, "hold_30"}, {60, 80.0, "hold_60"}};
    for (const auto& h : holds) {
      if (hold >= h.steps && ledger_.claim(h.id)) {
        r.reward += h.bonus;
        r.components.push_back({h.id, h.bonus});
      }
    }
  }
  r.obs = observe();
  return r;
}

// ---------------------------------------------------------------------------

MountainCar::MountainCar(RewardMode mode) : mode_(mode) { spec_ = {2, 1, {-1.0}, {1.0}, 999}; }

std::string MountainCar::id() const {
  return mode_ == RewardMode::dense ? "mountaincar-dense" : "mountaincar-discrete";
}

void MountainCar::set_state(const std::vector<double>& s) {
  if (s.size() != 2) throw UsageError("mountain car state is (x, v)");
  x_ = std::clamp(s[0], min_x, max_x);
  v_ = std::clamp(s[1], -max_v, max_v);
}

std::vector<double> MountainCar::do_reset(Rng& rng) {
  std::uniform_real_distribution<double> start(-0.6, -0.4);
  x_ = start(rng);
  v_ = 0.0;
  return {x_, v_};
}

StepResult MountainCar::do_step(const std::vector<double>& action) {
  const double a = action[0];
  v_ = std::clamp(v_ + power * a - 0.0025 * std::cos(3.0 * x_), -max_v, max_v);
  x_ = std::clamp(x_ + v_, min_x, max_x);
  if (x_ == min_x && v_ < 0.0) v_ = 0.0;

  StepResult r;
  r.terminated = x_ >= goal_x;
  if (mode_ == RewardMode::dense) {
    r.reward = -0.1 * a * a;
    r.components.push_back({"control", r.reward});
    if (r.terminated) {
      r.reward += 100.0;
      r.components.push_back({"goal", 100.0});
    }
  } else {
    r.reward = -0.01;
    r.components.push_back({"step_penalty", -0.01});
    if (x_ < -0.7 && ledger_.claim("backward_swing")) {
      r.reward += 10.0;
      r.components.push_back({"backward_swing", 10.0});
    }
    if (x_ > -0.1 && ledger_.claim("forward_progress")) {
      r.reward += 20.0;
      r.components.push_back({"forward_progress", 20.0});
    }
    if (r.terminated) {
      r.reward += 100.0;
      r.components.push_back({"goal", 100.0});
    }
  }
  r.obs = {x_, v_};
  return r;
}

// ---------------------------------------------------------------------------

std::vector<std::string> env_ids() {
  return {"toy", "pendulum-dense", "pendulum-discrete", "mountaincar-dense", "mountaincar-discrete"};
}

std::unique_ptr<Env> make_env(const std::string& id) {
  if (id == "toy") return std::make_unique<ToyBandit>();
  if (id == "pendulum-dense") return std::make_unique<Pendulum>(RewardMode::dense);
  if (id == "pendulum-discrete") return std::make_unique<Pendulum>(RewardMode::discrete);
  if (id == "mountaincar-dense") return std::make_unique<MountainCar>(RewardMode::dense);
  if (id == "mountaincar-discrete") return std::make_unique<MountainCar>(RewardMode::discrete);
  throw UsageError("unknown env id '" + id + "'");
}

}  // namespace sdpg::envs
