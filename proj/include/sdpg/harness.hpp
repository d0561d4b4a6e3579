#pragma once

// Experiment plumbing: configuration, seeded training runs with CSV logs and
// checkpoints, greedy evaluation, critic landscapes, the tabular theory
// certification and parameter sweeps.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdpg/agents.hpp"
#include "sdpg/mdp_lab.hpp"

namespace sdpg::harness {

inline constexpr const char* schema_version = "sdpg-run/1";

/// %.17g, the precision every artifact uses for reals.
std::string format_double(double v);

struct TrainConfig {
  std::string env_id = "toy";
  long total_steps = 20000;
  long eval_every = 1000;
  int eval_episodes = 10;
  std::vector<std::uint64_t> seeds = {1};
  agents::AgentConfig agent;
  std::string output_dir = "runs";
  bool record_wall_time = false;

  void validate() const;
  nlohmann::json to_json() const;
  /// Unknown keys raise UsageError. Missing keys keep their defaults, except
  /// total_steps, which defaults to 20000 for the toy env and 100000 otherwise.
  static TrainConfig from_json(const nlohmann::json& j);
  /// key=value where value is JSON (bare words are taken as strings).
  void apply_override(const std::string& assignment);
};

TrainConfig load_config(const std::filesystem::path& path);

struct Checkpoint {
  std::string env_id;
  std::string agent_id;
  long env_steps = 0;
  nn::Mlp actor;
  nn::Mlp critic;

  nlohmann::json to_json() const;
  static Checkpoint from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

struct EvalResult {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::vector<double> returns;
};

/// Greedy rollouts; never touches a replay buffer or any parameters.
EvalResult evaluate(const nn::Mlp& actor, const std::string& env_id, int episodes, Rng& rng);

struct RunLogRow {
  std::uint64_t seed = 0;
  long env_step = 0;
  long episode = 0;
  double episodic_return = 0.0;
  double eval_return_mean = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double wall_ms = 0.0;
};

inline constexpr const char* log_header =
    "seed,env_step,episode,episodic_return,eval_return_mean,actor_loss,critic_loss,wall_ms";

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<RunLogRow> rows;
  EvalResult final_eval;
  std::filesystem::path log_path;
  std::filesystem::path checkpoint_path;
};

/// One full training run; writes <dir>/log.csv and <dir>/checkpoint.json.
SeedResult run_seed(const TrainConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir);

/// Copies the config and schema version into output_dir, then runs every
/// seed (in parallel when cores allow) into output_dir/seed_<s>/ and writes
/// summary.csv sorted by seed.
std::vector<SeedResult> cmd_train(const TrainConfig& cfg);

EvalResult cmd_eval(const std::filesystem::path& checkpoint, const std::string& env_id, int episodes,
                    std::uint64_t seed);

struct LandscapeRow {
  double a = 0.0;
  double q = 0.0;
  double abs_grad = 0.0;
};

/// Q(obs, a) and |dQ/da| from the critic's input gradient for
/// a = -1, -1 + step, ..., 1.
std::vector<LandscapeRow> critic_landscape(const nn::Mlp& critic, const std::vector<double>& obs,
                                           double step);
struct FdCheck {
  double max_deviation = 0.0;   // over rows whose stencil is smooth
  std::size_t kinked_rows = 0;  // stencil crosses a ReLU switch; not compared
};

/// |abs_grad - |central difference of the critic at a +- h||. Rows where a
/// hidden ReLU changes state inside [a - h, a + h] are counted, not compared.
FdCheck landscape_fd_check(const nn::Mlp& critic, const std::vector<double>& obs,
                           const std::vector<LandscapeRow>& rows, double h = 1e-6);
void write_landscape(const std::vector<LandscapeRow>& rows, const std::filesystem::path& out);
std::vector<LandscapeRow> cmd_landscape(const std::filesystem::path& checkpoint, double step,
                                        const std::filesystem::path& out);

struct TheoryOptions {
  std::vector<double> sigmas = {0.05, 0.1, 0.2};
  double gamma = 0.9;
  double contraction_sigma = 0.2;
  int contraction_trials = 1000;
  std::vector<double> gradient_thetas = {-0.25, 0.1, 0.3};
  int gradient_trajectories = 20000;
  std::vector<double> limit_sigmas = {0.5, 0.2, 0.05, 0.01};
  double limit_theta = 0.3;
  double policy_theta = 0.3;
  std::uint64_t seed = 7;
  std::filesystem::path out_dir;  // empty: no files
};

struct TheoryReport {
  std::map<std::string, mdp::BoundReport> tables;  // one CSV per entry
  bool all_pass() const;
};

inline constexpr const char* check_header = "check,sigma,observed,bound,tolerance,pass";

TheoryReport cmd_theory_check(const TheoryOptions& opt);
void write_check_csv(const mdp::BoundReport& rows, const std::filesystem::path& path);

enum class SweepParam { sigma, n };

struct SweepRow {
  double value = 0.0;
  double mean_final_return = 0.0;
  double std_final_return = 0.0;
  std::size_t seeds = 0;
};

/// One cmd_train per value into output_dir/<param>_<value>/, plus
/// output_dir/sweep_summary.csv.
std::vector<SweepRow> cmd_sweep(const TrainConfig& base, SweepParam param,
                                const std::vector<double>& values);

}  // namespace sdpg::harness
