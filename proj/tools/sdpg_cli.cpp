#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sdpg/error.hpp"
#include "sdpg/harness.hpp"
#include "sdpg/kernels.hpp"
#include "sdpg/platform.hpp"

namespace {

constexpr int exit_ok = 0, exit_usage = 1, exit_check = 2, exit_numerical = 3;

using namespace sdpg;

int run(int argc, char** argv) {
  CLI::App app{"Soft DDPG laboratory: training, evaluation and tabular certification"};
  app.require_subcommand(1);
  std::string kernels;
  app.add_option("--kernels", kernels, "Force a kernel variant (scalar, avx2)");

  auto* train = app.add_subcommand("train", "Train one agent per seed");
  std::string config_path;
  std::vector<std::string> overrides;
  train->add_option("--config", config_path, "JSON config")->required();
  train->add_option("--override", overrides, "key=value, repeatable");

  auto* eval = app.add_subcommand("eval", "Greedy rollouts of a checkpoint");
  std::string checkpoint, env_id;
  int episodes = 10;
  std::uint64_t seed = 0;
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--env", env_id)->required();
  eval->add_option("--episodes", episodes);
  eval->add_option("--seed", seed);

  auto* land = app.add_subcommand("landscape", "Export Q(s,a) and |dQ/da| over a in [-1,1]");
  double step = 0.005;
  std::string out;
  land->add_option("--checkpoint", checkpoint)->required();
  land->add_option("--step", step);
  land->add_option("--out", out)->required();

  auto* theory = app.add_subcommand("theory-check", "Certify the smoothing bounds on the tabular MDP");
  harness::TheoryOptions topt;
  std::string theory_out = "theory-check";
  theory->add_option("--sigma", topt.sigmas, "Comma separated sigmas")->delimiter(',');
  theory->add_option("--gamma", topt.gamma);
  theory->add_option("--trials", topt.contraction_trials);
  theory->add_option("--trajectories", topt.gradient_trajectories);
  theory->add_option("--seed", topt.seed);
  theory->add_option("--out", theory_out, "Directory for the CSV reports");

  auto* sweep = app.add_subcommand("sweep", "Train once per value of sigma or n");
  std::string param;
  std::vector<double> values;
  sweep->add_option("--param", param)->required()->check(CLI::IsMember({"sigma", "n"}));
  sweep->add_option("--values", values)->required()->delimiter(',');
  sweep->add_option("--config", config_path)->required();
  sweep->add_option("--override", overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? exit_ok : exit_usage;
  }
  if (!kernels.empty()) kernels::select(kernels);

  auto load = [&] {
    auto cfg = harness::load_config(config_path);
    for (const auto& o : overrides) cfg.apply_override(o);
    return cfg;
  };

  if (*train) {
    const auto results = harness::cmd_train(load());
    for (const auto& r : results) {
      std::printf("seed %llu: final eval return %.6g +- %.6g (%s)\n", static_cast<unsigned long long>(r.seed),
                  r.final_eval.mean, r.final_eval.std, r.log_path.string().c_str());
    }
    return exit_ok;
  }
  if (*eval) {
    const auto r = harness::cmd_eval(checkpoint, env_id, episodes, seed);
    std::printf("%s\n", (harness::format_double(r.mean) + " +- " + harness::format_double(r.std)).c_str());
    return exit_ok;
  }
  if (*land) {
    const auto rows = harness::cmd_landscape(checkpoint, step, out);
    std::printf("wrote %zu rows to %s\n", rows.size(), out.c_str());
    return exit_ok;
  }
  if (*theory) {
    topt.out_dir = theory_out;
    const auto rep = harness::cmd_theory_check(topt);
    for (const auto& [name, rows] : rep.tables) {
      for (const auto& r : rows) {
        std::printf("%-4s %-28s sigma=%-6g observed=%-12.6g bound=%-12.6g tol=%g\n", r.pass ? "ok" : "FAIL",
                    r.check.c_str(), r.sigma, r.observed, r.bound, r.tolerance);
      }
    }
    return rep.all_pass() ? exit_ok : exit_check;
  }
  if (*sweep) {
    const auto rows = harness::cmd_sweep(load(), param == "sigma" ? harness::SweepParam::sigma
                                                                  : harness::SweepParam::n,
                                         values);
    for (const auto& r : rows) {
      std::printf("%s=%g: %.6g +- %.6g over %zu seeds\n", param.c_str(), r.value, r.mean_final_return,
                  r.std_final_return, r.seeds);
    }
    return exit_ok;
  }
  return exit_usage;
}

}  // namespace

int main(int argc, char** argv) {
  sdpg::tune_allocator();
  try {
    return run(argc, argv);
  } catch (const sdpg::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const sdpg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_numerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_numerical;
  }
}
