#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <unistd.h>

#include "sdpg/error.hpp"
#include "sdpg/harness.hpp"

using namespace sdpg;
using namespace sdpg::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("sdpg_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream f(p);
  std::size_t n = 0;
  for (std::string line; std::getline(f, line);) ++n;
  return n;
}

TrainConfig tiny(const fs::path& out) {
  TrainConfig c;
  c.env_id = "toy";
  c.total_steps = 300;
  c.eval_every = 100;
  c.eval_episodes = 2;
  c.seeds = {1, 2};
  c.agent.hidden = {4};
  c.agent.batch = 8;
  c.agent.n_smooth = 3;
  c.agent.warmup_steps = 100;
  c.output_dir = out.string();
  return c;
}

std::size_t param_hash(const nn::Mlp& net) {
  std::size_t h = 0;
  for (double p : net.params()) h = h * 1000003u ^ std::hash<double>{}(p);
  return h;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("config parsing") {
    const auto c = TrainConfig::from_json({{"env_id", "pendulum-discrete"}, {"agent_id", "ddpg"}, {"n_smooth", 10}});
    CHECK(c.total_steps == 100000);
    CHECK(c.agent.kind == agents::AgentKind::ddpg);
    CHECK(c.agent.n_smooth == 10);
    CHECK(TrainConfig::from_json(nlohmann::json::object()).total_steps == 20000);
    CHECK_THROWS_AS(TrainConfig::from_json({{"sigmaa", 0.1}}), UsageError);
    CHECK_THROWS_AS(TrainConfig::from_json({{"agent_id", "sac"}}), UsageError);
    CHECK_THROWS_AS(TrainConfig::from_json({{"seeds", {1, 1}}}), UsageError);

    TrainConfig o;
    o.apply_override("sigma=0.05");
    o.apply_override("agent_id=ddpg");
    o.apply_override("hidden=[16,16]");
    CHECK(o.agent.sigma == 0.05);
    CHECK(o.agent.kind == agents::AgentKind::ddpg);
    CHECK(o.agent.hidden == std::vector<std::size_t>{16, 16});
    CHECK_THROWS_AS(o.apply_override("sigma"), UsageError);
    CHECK_THROWS_AS(o.apply_override("nope=1"), UsageError);

    const auto round = TrainConfig::from_json(o.to_json());
    CHECK(round.to_json() == o.to_json());
  }

  TEST_CASE("format uses 17 significant digits") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(200.0) == "200");
  }

  TEST_CASE("training artifacts, provenance and determinism") {
    const auto root = scratch("train");
    auto a = tiny(root / "a");
    auto b = tiny(root / "b");
    const auto ra = cmd_train(a);
    cmd_train(b);
    for (const char* s : {"seed_1", "seed_2"}) {
      const auto la = slurp(root / "a" / s / "log.csv");
      CHECK(la == slurp(root / "b" / s / "log.csv"));
      CHECK(la.rfind(std::string(log_header) + "\n", 0) == 0);
      CHECK(count_lines(root / "a" / s / "log.csv") == 4);
      CHECK(fs::exists(root / "a" / s / "checkpoint.json"));
    }
    CHECK(slurp(root / "a" / "schema_version") == std::string(schema_version) + "\n");
    CHECK(load_config(root / "a" / "config.json").to_json() == a.to_json());
    CHECK(count_lines(root / "a" / "summary.csv") == 3);
    CHECK(slurp(root / "a" / "seed_1" / "log.csv") != slurp(root / "a" / "seed_2" / "log.csv"));

    REQUIRE(ra.size() == 2);
    CHECK(ra[0].rows.front().actor_loss == 0.0);  // eval at warmup only
    for (std::size_t i = 1; i < ra[0].rows.size(); ++i) CHECK(ra[0].rows[i].env_step > ra[0].rows[i - 1].env_step);

    // A run that ends at warmup logs evaluations but never updates.
    auto w = tiny(root / "w");
    w.total_steps = 100;
    w.seeds = {3};
    const auto rw = cmd_train(w);
    const auto ck = Checkpoint::load(rw[0].checkpoint_path);
    Rng init = make_rng(3, Stream::agent_init);
    const auto fresh = agents::make_agent(envs::make_env("toy")->spec(), w.agent, init);
    CHECK(ck.actor.params() == fresh.actor.params());
    CHECK(ck.critic.params() == fresh.critic.params());
    CHECK(rw[0].rows.size() == 1);
  }

  TEST_CASE("evaluation") {
    Rng rng(1);
    nn::Mlp zero({1, 4, 1}, nn::Activation::relu, nn::Head::bounded(1.0));
    const auto r = evaluate(zero, "toy", 3, rng);
    CHECK(r.mean == 0.0);
    CHECK(r.std == 0.0);

    // Bias alone puts the greedy action at 0.5 in the reward interval.
    auto hit = zero;
    hit.params()[hit.bias_offset(1)] = std::atanh(0.5);
    const auto one = evaluate(hit, "toy", 1, rng);
    CHECK(one.mean == 200.0);
    CHECK(one.std == 0.0);

    CHECK_THROWS_AS(evaluate(zero, "pendulum-dense", 1, rng), UsageError);
    CHECK_THROWS_AS(evaluate(zero, "toy", 0, rng), UsageError);

    Rng init(2);
    const auto actor = nn::Mlp::init({3, 8, 1}, nn::Activation::relu, nn::Head::bounded(2.0), init);
    const auto before = param_hash(actor);
    evaluate(actor, "pendulum-discrete", 2, rng);
    CHECK(param_hash(actor) == before);

    const auto dir = scratch("eval");
    Checkpoint{"toy", "ddpg", 0, hit, nn::Mlp({2, 1}, nn::Activation::relu, nn::Head::linear())}.save(dir / "ck.json");
    CHECK(cmd_eval(dir / "ck.json", "toy", 2, 9).mean == 200.0);
    CHECK_THROWS_AS(cmd_eval(dir / "missing.json", "toy", 1, 9), UsageError);
  }

  TEST_CASE("landscape") {
    Rng rng(3);
    const auto critic = nn::Mlp::init({2, 16, 16, 1}, nn::Activation::relu, nn::Head::linear(), rng);
    const auto rows = critic_landscape(critic, {1.0}, 0.005);
    CHECK(rows.size() == 401);
    CHECK(rows.front().a == -1.0);
    CHECK(rows.back().a == doctest::Approx(1.0).epsilon(1e-12));
    const auto fd = landscape_fd_check(critic, {1.0}, rows);
    CHECK(fd.max_deviation < 1e-6);
    CHECK(fd.kinked_rows <= 4);

    // A kink placed on a grid point is detected rather than compared.
    nn::Mlp hinge({2, 1, 1}, nn::Activation::relu, nn::Head::linear());
    hinge.params() = {0.0, 1.0, -0.25, 1.0, 0.0};
    const auto hr = critic_landscape(hinge, {1.0}, 0.25);
    const auto hf = landscape_fd_check(hinge, {1.0}, hr);
    CHECK(hf.kinked_rows == 1);
    CHECK(hf.max_deviation < 1e-9);

    const auto flat = critic_landscape(nn::Mlp({2, 5, 1}, nn::Activation::relu, nn::Head::linear()), {1.0}, 0.5);
    CHECK(flat.size() == 5);
    for (const auto& r : flat) {
      CHECK(r.q == 0.0);
      CHECK(r.abs_grad == 0.0);
    }

    const auto dir = scratch("landscape");
    Checkpoint{"toy", "soft-ddpg", 0, nn::Mlp({1, 1}, nn::Activation::relu, nn::Head::bounded(1.0)), critic}
        .save(dir / "ck.json");
    cmd_landscape(dir / "ck.json", 0.005, dir / "l.csv");
    CHECK(count_lines(dir / "l.csv") == 402);
    CHECK(slurp(dir / "l.csv").rfind("a,q,abs_grad\n", 0) == 0);
    Checkpoint{"pendulum-dense", "ddpg", 0, nn::Mlp({3, 1}, nn::Activation::relu, nn::Head::bounded(2.0)),
               nn::Mlp({4, 1}, nn::Activation::relu, nn::Head::linear())}
        .save(dir / "p.json");
    CHECK_THROWS_AS(cmd_landscape(dir / "p.json", 0.01, dir / "p.csv"), UsageError);
  }

  TEST_CASE("theory check report") {
    TheoryOptions opt;
    opt.gradient_trajectories = 2000;
    opt.contraction_trials = 100;
    opt.out_dir = scratch("theory");
    const auto rep = cmd_theory_check(opt);
    CHECK(rep.all_pass());
    for (const auto& [name, rows] : rep.tables) {
      const auto csv = slurp(opt.out_dir / (name + ".csv"));
      CHECK(csv.rfind(std::string(check_header) + "\n", 0) == 0);
      CHECK(count_lines(opt.out_dir / (name + ".csv")) == rows.size() + 1);
    }

    TheoryOptions myopic;
    myopic.gamma = 0.0;
    myopic.gradient_trajectories = 500;
    myopic.contraction_trials = 50;
    const auto r0 = cmd_theory_check(myopic);
    CHECK(r0.tables.at("contraction").at(0).observed == 0.0);
    CHECK(r0.all_pass());
  }

  TEST_CASE("sweep") {
    const auto root = scratch("sweep");
    auto base = tiny(root);
    base.total_steps = 120;
    base.seeds = {1};
    const auto rows = cmd_sweep(base, SweepParam::sigma, {0.001, 0.01, 0.1, 0.2, 0.5});
    CHECK(rows.size() == 5);
    CHECK(count_lines(root / "sweep_summary.csv") == 6);
    CHECK(fs::exists(root / "sigma_0.001" / "seed_1" / "log.csv"));

    auto nb = tiny(root / "n");
    nb.total_steps = 120;
    nb.seeds = {1};
    CHECK(cmd_sweep(nb, SweepParam::n, {10, 20, 50, 100}).size() == 4);
    CHECK(count_lines(root / "n" / "sweep_summary.csv") == 5);
    CHECK_THROWS_AS(cmd_sweep(nb, SweepParam::n, {2.5}), UsageError);

    auto one = tiny(root / "one");
    one.total_steps = 120;
    one.seeds = {1};
    CHECK(cmd_sweep(one, SweepParam::sigma, {0.2}).size() == 1);
    CHECK(count_lines(root / "one" / "sweep_summary.csv") == 2);
    CHECK_THROWS_AS(cmd_sweep(one, SweepParam::sigma, {}), UsageError);
  }
}
