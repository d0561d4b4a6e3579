#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "sdpg/envs.hpp"
#include "sdpg/error.hpp"

using namespace sdpg;
using namespace sdpg::envs;

namespace {

double component_sum(const StepResult& r) {
  double s = 0.0;
  for (const auto& c : r.components) s += c.value;
  return s;
}

std::vector<double> random_action(const Env& env, Rng& rng) {
  std::uniform_real_distribution<double> u(env.spec().act_lo[0] * 1.5, env.spec().act_hi[0] * 1.5);
  return {u(rng)};
}

}  // namespace

TEST_SUITE("envs") {
  TEST_CASE("toy bandit") {
    ToyBandit env;
    Rng rng(1);
    CHECK(env.reset(rng) == std::vector<double>{1.0});
    CHECK(env.step({0.51}).reward == 1.0);
    CHECK(env.step({0.56}).reward == 0.0);
    CHECK(env.step({0.449}).reward == 0.0);
    CHECK(env.step({-0.7}).reward == 0.0);
    CHECK(env.step({5.0}).reward == 0.0);   // clamped to 1
    CHECK(env.spec().max_steps == 200);

    ToyBandit shortenv(0.05, 3);
    shortenv.reset(rng);
    CHECK_FALSE(shortenv.step({0.5}).truncated);
    CHECK_FALSE(shortenv.step({0.5}).truncated);
    const auto last = shortenv.step({0.5});
    CHECK(last.truncated);
    CHECK_FALSE(last.terminated);
    CHECK_THROWS_AS(shortenv.step({0.5}), UsageError);
    CHECK_THROWS_AS(ToyBandit(0.0, 10), UsageError);
  }

  TEST_CASE("step contract errors") {
    Pendulum env(RewardMode::dense);
    Rng rng(2);
    CHECK_THROWS_AS(env.step({0.0}), UsageError);
    env.reset(rng);
    CHECK_THROWS_AS(env.step({0.0, 1.0}), UsageError);
    CHECK_THROWS_AS(env.step({NAN}), NumericalError);
    CHECK_THROWS_AS(make_env("cartpole"), UsageError);
    for (const auto& id : env_ids()) CHECK(make_env(id)->id() == id);
  }

  TEST_CASE("pendulum discrete reward examples") {
    CHECK(Pendulum::band_reward(0.05) + Pendulum::velocity_bonus(0.05, 2.0) == 8.0);
    CHECK(Pendulum::band_reward(0.12) + Pendulum::velocity_bonus(0.12, 0.3) == 8.0);
    CHECK(Pendulum::band_reward(0.3) == 2.0);
    CHECK(Pendulum::velocity_bonus(0.3, 0.0) == 0.0);
    CHECK(Pendulum::band_reward(0.7) == 0.5);
    CHECK(Pendulum::band_reward(-2.0) == 0.0);
    CHECK(Pendulum::velocity_bonus(0.2, 0.7) == 2.0);

    // Balanced upright with zero torque stays put: hold bonuses at 10, 30, 60.
    Pendulum env(RewardMode::discrete);
    Rng rng(3);
    env.reset(rng);
    env.set_state({0.0, 0.0});
    std::vector<int> bonus_steps;
    for (int t = 1; t <= 200; ++t) {
      const auto r = env.step({0.0});
      CHECK(r.reward == doctest::Approx(component_sum(r)));
      for (const auto& c : r.components)
        if (c.label.rfind("hold_", 0) == 0) bonus_steps.push_back(t);
      if (t == 10) CHECK(r.reward == 8.0 + 4.0 + 20.0);
    }
    CHECK(bonus_steps == std::vector<int>{10, 30, 60});
  }

  TEST_CASE("pendulum dense reward and dynamics") {
    Pendulum env(RewardMode::dense);
    Rng rng(4);
    env.reset(rng);
    env.set_state({0.5, 1.0});
    const auto r = env.step({1.0});
    CHECK(r.reward == doctest::Approx(-(0.25 + 0.1 + 0.001)).epsilon(1e-15));
    const double w = 1.0 + (15.0 * std::sin(0.5) + 3.0) * 0.05;
    CHECK(env.state()[1] == doctest::Approx(w).epsilon(1e-15));
    CHECK(env.state()[0] == doctest::Approx(0.5 + w * 0.05).epsilon(1e-15));
    CHECK(r.obs[0] == doctest::Approx(std::cos(env.state()[0])));
    CHECK(r.obs[1] == doctest::Approx(std::sin(env.state()[0])));

    CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
    CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
    CHECK(wrap_angle(3.0 * std::numbers::pi / 2.0) == doctest::Approx(-std::numbers::pi / 2.0));
  }

  TEST_CASE("pendulum reset is seeded and in range") {
    Pendulum a(RewardMode::dense), b(RewardMode::dense);
    Rng ra(77), rb(77);
    for (int i = 0; i < 1000; ++i) {
      CHECK(a.reset(ra) == b.reset(rb));
      const auto s = a.state();
      CHECK(s[0] > -std::numbers::pi);
      CHECK(s[0] <= std::numbers::pi);
      CHECK(std::abs(s[1]) <= 1.0);
    }
  }

  TEST_CASE("mountain car examples") {
    MountainCar env(RewardMode::discrete);
    Rng rng(5);
    const auto obs = env.reset(rng);
    CHECK(obs[0] >= -0.6);
    CHECK(obs[0] < -0.4);
    CHECK(obs[1] == 0.0);

    env.set_state({-0.69, -0.02});
    const auto back = env.step({-1.0});
    CHECK(env.state()[0] < -0.7);
    CHECK(back.reward == doctest::Approx(-0.01 + 10.0));
    env.set_state({-0.69, -0.02});
    CHECK(env.step({-1.0}).reward == doctest::Approx(-0.01));  // already granted

    env.set_state({-0.11, 0.03});
    CHECK(env.step({1.0}).reward == doctest::Approx(-0.01 + 20.0));

    env.set_state({0.44, 0.05});
    const auto goal = env.step({1.0});
    CHECK(goal.terminated);
    CHECK(goal.reward == doctest::Approx(-0.01 + 100.0));
    CHECK_THROWS_AS(env.step({0.0}), UsageError);

    MountainCar wall(RewardMode::dense);
    wall.reset(rng);
    wall.set_state({-1.19, -0.07});
    const auto w = wall.step({-1.0});
    CHECK(wall.state()[0] == MountainCar::min_x);
    CHECK(wall.state()[1] == 0.0);
    CHECK(w.reward == doctest::Approx(-0.1));
    CHECK(wall.spec().max_steps == 999);
  }

  TEST_CASE("discrete rewards stay in their finite sets and bounds hold") {
    Rng rng(6);
    std::set<double> pendulum_set;
    for (double band : {0.0, 0.5, 2.0, 4.0, 8.0})
      for (double bonus : {0.0, 2.0, 4.0})
        for (double hold : {0.0, 20.0, 40.0, 80.0}) pendulum_set.insert(band + bonus + hold);
    std::set<double> car_set;
    for (double a : {0.0, 10.0})
      for (double b : {0.0, 20.0})
        for (double c : {0.0, 100.0}) car_set.insert(-0.01 + a + b + c);

    auto near = [](const std::set<double>& s, double v) {
      for (double x : s)
        if (std::abs(x - v) < 1e-12) return true;
      return false;
    };

    for (const std::string id : {"pendulum-discrete", "mountaincar-discrete", "pendulum-dense"}) {
      auto env = make_env(id);
      env->reset(rng);
      int bad_set = 0, bad_bound = 0, repeats = 0;
      std::set<std::string> once;
      for (int t = 0; t < 100000; ++t) {
        const auto r = env->step(random_action(*env, rng));
        if (id == "pendulum-discrete" && !near(pendulum_set, r.reward)) ++bad_set;
        if (id == "mountaincar-discrete" && !near(car_set, r.reward)) ++bad_set;
        const auto s = env->state();
        if (id.rfind("pendulum", 0) == 0) {
          if (std::abs(s[1]) > Pendulum::max_speed) ++bad_bound;
        } else if (s[0] < MountainCar::min_x || s[0] > MountainCar::max_x || std::abs(s[1]) > MountainCar::max_v) {
          ++bad_bound;
        }
        for (const auto& c : r.components) {
          const bool one_time = c.label.rfind("hold_", 0) == 0 || c.label == "backward_swing" ||
                                c.label == "forward_progress";
          if (one_time && !once.insert(c.label).second) ++repeats;
        }
        if (r.terminated || r.truncated) {
          env->reset(rng);
          once.clear();
        }
      }
      CHECK_MESSAGE(bad_set == 0, id);
      CHECK_MESSAGE(bad_bound == 0, id);
      CHECK_MESSAGE(repeats == 0, id);
    }
  }

  TEST_CASE("stepping is a pure function of state and action") {
    Rng rng(8);
    for (const auto& id : env_ids()) {
      auto a = make_env(id), b = make_env(id);
      a->reset(rng);
      b->reset(rng);
      b->set_state(a->state());
      for (int t = 0; t < 50; ++t) {
        const auto act = random_action(*a, rng);
        const auto ra = a->step(act), rb = b->step(act);
        CHECK(ra.obs == rb.obs);
        CHECK(ra.reward == rb.reward);
        if (ra.terminated) break;
      }
    }
  }
}
