#include "sdpg/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "sdpg/error.hpp"

namespace sdpg::harness {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write " + path.string());
  return f;
}

std::string activation_id(nn::Activation a) { return a == nn::Activation::relu ? "relu" : "tanh"; }

nn::Activation parse_activation(const std::string& s) {
  if (s == "relu") return nn::Activation::relu;
  if (s == "tanh") return nn::Activation::tanh;
  throw UsageError("unknown activation '" + s + "'");
}

EvalResult summarize(std::vector<double> returns) {
  EvalResult r;
  const double n = static_cast<double>(returns.size());
  for (double x : returns) r.mean += x / n;
  double ss = 0.0;
  for (double x : returns) ss += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(ss / n);
  r.returns = std::move(returns);
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw UsageError("config: " + m); };
  envs::make_env(env_id);
  agent.validate();
  if (seeds.empty()) fail("seeds must be nonempty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    fail("seeds must be distinct");
  }
  if (total_steps < 1) fail("total_steps must be positive");
  if (total_steps < agent.warmup_steps) fail("total_steps must be at least warmup_steps");
  if (eval_every < 1) fail("eval_every must be positive");
  if (eval_episodes < 1) fail("eval_episodes must be positive");
  if (output_dir.empty()) fail("output_dir must be set");
}

json TrainConfig::to_json() const {
  return json{{"env_id", env_id},
              {"agent_id", agents::agent_name(agent.kind)},
              {"total_steps", total_steps},
              {"eval_every", eval_every},
              {"eval_episodes", eval_episodes},
              {"seeds", seeds},
              {"output_dir", output_dir},
              {"record_wall_time", record_wall_time},
              {"gamma", agent.gamma},
              {"tau", agent.tau},
              {"actor_lr", agent.actor_lr},
              {"critic_lr", agent.critic_lr},
              {"batch", agent.batch},
              {"sigma_expl", agent.sigma_expl},
              {"sigma", agent.sigma},
              {"n_smooth", agent.n_smooth},
              {"warmup_steps", agent.warmup_steps},
              {"hidden", agent.hidden},
              {"activation", activation_id(agent.activation)},
              {"buffer_capacity", agent.buffer_capacity}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  TrainConfig c;
  static const std::set<std::string> known = {
      "env_id",     "agent_id",  "total_steps", "eval_every",   "eval_episodes", "seeds",
      "output_dir", "record_wall_time", "gamma", "tau",         "actor_lr",      "critic_lr",
      "batch",      "sigma_expl", "sigma",     "n_smooth",     "warmup_steps",  "hidden",
      "activation", "buffer_capacity"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw UsageError("config: unknown key '" + it.key() + "'");
  }
  try {
    auto get = [&](const char* key, auto& dst) {
      if (j.contains(key)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
    };
    get("env_id", c.env_id);
    if (j.contains("agent_id")) c.agent.kind = agents::parse_agent(j.at("agent_id").get<std::string>());
    c.total_steps = c.env_id == "toy" ? 20000 : 100000;
    get("total_steps", c.total_steps);
    get("eval_every", c.eval_every);
    get("eval_episodes", c.eval_episodes);
    get("seeds", c.seeds);
    get("output_dir", c.output_dir);
    get("record_wall_time", c.record_wall_time);
    get("gamma", c.agent.gamma);
    get("tau", c.agent.tau);
    get("actor_lr", c.agent.actor_lr);
    get("critic_lr", c.agent.critic_lr);
    get("batch", c.agent.batch);
    get("sigma_expl", c.agent.sigma_expl);
    get("sigma", c.agent.sigma);
    get("n_smooth", c.agent.n_smooth);
    get("warmup_steps", c.agent.warmup_steps);
    get("hidden", c.agent.hidden);
    if (j.contains("activation")) c.agent.activation = parse_activation(j.at("activation").get<std::string>());
    get("buffer_capacity", c.agent.buffer_capacity);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

void TrainConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("override must look like key=value");
  const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  json j = to_json();
  j[key] = value;
  *this = from_json(j);
}

TrainConfig load_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
  return TrainConfig::from_json(j);
}

// ---------------------------------------------------------------------------
// Checkpoints and evaluation

json Checkpoint::to_json() const {
  return json{{"schema_version", schema_version}, {"env_id", env_id}, {"agent_id", agent_id},
              {"env_steps", env_steps},           {"actor", actor.to_json()}, {"critic", critic.to_json()}};
}

Checkpoint Checkpoint::from_json(const json& j) {
  try {
    Checkpoint c;
    c.env_id = j.at("env_id").get<std::string>();
    c.agent_id = j.at("agent_id").get<std::string>();
    c.env_steps = j.at("env_steps").get<long>();
    c.actor = nn::Mlp::from_json(j.at("actor"));
    c.critic = nn::Mlp::from_json(j.at("critic"));
    return c;
  } catch (const json::exception& e) {
    throw UsageError(std::string("checkpoint: ") + e.what());
  }
}

void Checkpoint::save(const fs::path& path) const { open_out(path) << to_json().dump(1) << '\n'; }

Checkpoint Checkpoint::load(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read checkpoint " + path.string());
  try {
    return from_json(json::parse(f));
  } catch (const json::exception& e) {
    throw UsageError("checkpoint " + path.string() + ": " + e.what());
  }
}

EvalResult evaluate(const nn::Mlp& actor, const std::string& env_id, int episodes, Rng& rng) {
  if (episodes < 1) throw UsageError("evaluation needs at least one episode");
  auto env = envs::make_env(env_id);
  const auto& spec = env->spec();
  if (actor.input_dim() != spec.obs_dim || actor.output_dim() != spec.act_dim) {
    std::ostringstream os;
    os << "actor maps " << actor.input_dim() << " -> " << actor.output_dim() << " but " << env_id
       << " has obs_dim " << spec.obs_dim << " and act_dim " << spec.act_dim;
    throw UsageError(os.str());
  }
  std::vector<double> returns;
  for (int e = 0; e < episodes; ++e) {
    auto obs = env->reset(rng);
    double total = 0.0;
    while (true) {
      const auto r = env->step(actor.forward(obs));
      total += r.reward;
      if (r.terminated || r.truncated) break;
      obs = r.obs;
    }
    returns.push_back(total);
  }
  return summarize(std::move(returns));
}

EvalResult cmd_eval(const fs::path& checkpoint, const std::string& env_id, int episodes,
                    std::uint64_t seed) {
  const auto ck = Checkpoint::load(checkpoint);
  Rng rng = make_rng(seed, Stream::eval);
  return evaluate(ck.actor, env_id, episodes, rng);
}

// ---------------------------------------------------------------------------
// Training

SeedResult run_seed(const TrainConfig& cfg, std::uint64_t seed, const fs::path& dir) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  auto env = envs::make_env(cfg.env_id);
  Rng env_rng = make_rng(seed, Stream::env);
  Rng init_rng = make_rng(seed, Stream::agent_init);
  Rng expl_rng = make_rng(seed, Stream::exploration);
  Rng smooth_rng = make_rng(seed, Stream::smoothing);
  Rng sample_rng = make_rng(seed, Stream::sampling);

  auto st = agents::make_agent(env->spec(), cfg.agent, init_rng);
  replay::ReplayBuffer buffer(cfg.agent.buffer_capacity);

  SeedResult res;
  res.seed = seed;
  res.log_path = dir / "log.csv";
  res.checkpoint_path = dir / "checkpoint.json";

  auto obs = env->reset(env_rng);
  double ep_return = 0.0, last_return = 0.0;
  long episodes = 0, loss_count = 0, eval_index = 0;
  double actor_sum = 0.0, critic_sum = 0.0;

  for (long step = 1; step <= cfg.total_steps; ++step) {
    auto action = agents::behavior_action(st, obs, cfg.agent, expl_rng);
    const auto r = env->step(action);
    replay::Transition t{obs, action, r.reward, r.obs, r.terminated, r.truncated};
    const auto m = agents::train_step(st, buffer, std::move(t), cfg.agent, sample_rng, smooth_rng);
    if (m.updated) {
      actor_sum += m.actor_loss;
      critic_sum += m.critic_loss;
      ++loss_count;
    }
    ep_return += r.reward;
    if (r.terminated || r.truncated) {
      last_return = ep_return;
      ep_return = 0.0;
      ++episodes;
      obs = env->reset(env_rng);
    } else {
      obs = r.obs;
    }

    if (step % cfg.eval_every == 0 || step == cfg.total_steps) {
      Rng eval_rng = make_rng(seed, Stream::eval, static_cast<std::uint64_t>(eval_index++));
      const auto ev = evaluate(st.actor, cfg.env_id, cfg.eval_episodes, eval_rng);
      RunLogRow row;
      row.seed = seed;
      row.env_step = step;
      row.episode = episodes;
      row.episodic_return = last_return;
      row.eval_return_mean = ev.mean;
      if (loss_count > 0) {
        row.actor_loss = actor_sum / static_cast<double>(loss_count);
        row.critic_loss = critic_sum / static_cast<double>(loss_count);
      }
      if (cfg.record_wall_time) {
        row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      }
      actor_sum = critic_sum = 0.0;
      loss_count = 0;
      res.rows.push_back(row);
      res.final_eval = ev;
    }
  }

  auto out = open_out(res.log_path);
  out << log_header << '\n';
  for (const auto& row : res.rows) {
    out << row.seed << ',' << row.env_step << ',' << row.episode << ',' << format_double(row.episodic_return)
        << ',' << format_double(row.eval_return_mean) << ',' << format_double(row.actor_loss) << ','
        << format_double(row.critic_loss) << ',' << format_double(row.wall_ms) << '\n';
  }
  Checkpoint ck{cfg.env_id, agents::agent_name(cfg.agent.kind), st.env_steps, st.actor, st.critic};
  ck.save(res.checkpoint_path);
  return res;
}

std::vector<SeedResult> cmd_train(const TrainConfig& cfg) {
  cfg.validate();
  const fs::path root(cfg.output_dir);
  fs::create_directories(root);
  open_out(root / "config.json") << cfg.to_json().dump(2) << '\n';
  open_out(root / "schema_version") << schema_version << '\n';

  const std::size_t n = cfg.seeds.size();
  std::vector<SeedResult> results(n);
  std::vector<std::exception_ptr> errors(n);
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
  auto work = [&](std::size_t i) {
    try {
      results[i] = run_seed(cfg, cfg.seeds[i], root / ("seed_" + std::to_string(cfg.seeds[i])));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    std::mutex mu;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          std::size_t i;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= n) return;
            i = next++;
          }
          work(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
  auto summary = open_out(root / "summary.csv");
  summary << "seed,final_eval_return_mean,final_eval_return_std\n";
  for (const auto& r : results) {
    summary << r.seed << ',' << format_double(r.final_eval.mean) << ',' << format_double(r.final_eval.std)
            << '\n';
  }
  return results;
}

// ---------------------------------------------------------------------------
// Critic landscape

std::vector<LandscapeRow> critic_landscape(const nn::Mlp& critic, const std::vector<double>& obs,
                                           double step) {
  if (!(step > 0.0) || step > 2.0) throw UsageError("landscape step must lie in (0, 2]");
  if (critic.input_dim() != obs.size() + 1 || critic.output_dim() != 1) {
    throw UsageError("landscape needs a critic over obs plus a scalar action");
  }
  const auto count = static_cast<std::size_t>(std::floor(2.0 / step + 1e-9)) + 1;
  nn::Matrix x(count, obs.size() + 1);
  for (std::size_t k = 0; k < count; ++k) {
    std::copy(obs.begin(), obs.end(), x.row(k));
    x(k, obs.size()) = -1.0 + static_cast<double>(k) * step;
  }
  nn::ForwardCache cache;
  const auto& q = critic.forward(x, cache);
  const auto g = critic.backward(cache, nn::Matrix(count, 1, 1.0), false);
  std::vector<LandscapeRow> rows(count);
  for (std::size_t k = 0; k < count; ++k) {
    rows[k] = {x(k, obs.size()), q(k, 0), std::abs(g.input(k, obs.size()))};
  }
  return rows;
}

FdCheck landscape_fd_check(const nn::Mlp& critic, const std::vector<double>& obs,
                           const std::vector<LandscapeRow>& rows, double h) {
  FdCheck out;
  nn::Matrix x(2, obs.size() + 1);
  std::copy(obs.begin(), obs.end(), x.row(0));
  std::copy(obs.begin(), obs.end(), x.row(1));
  nn::ForwardCache cache;
  for (const auto& r : rows) {
    x(0, obs.size()) = r.a + h;
    x(1, obs.size()) = r.a - h;
    const auto& q = critic.forward(x, cache);
    bool kinked = false;
    if (critic.hidden_activation() == nn::Activation::relu) {
      for (std::size_t l = 0; l + 1 < cache.pre.size() && !kinked; ++l) {
        const auto& z = cache.pre[l];
        for (std::size_t c = 0; c < z.cols; ++c) {
          if ((z(0, c) > 0.0) != (z(1, c) > 0.0)) {
            kinked = true;
            break;
          }
        }
      }
    }
    if (kinked) {
      ++out.kinked_rows;
      continue;
    }
    out.max_deviation = std::max(out.max_deviation, std::abs(r.abs_grad - std::abs((q(0, 0) - q(1, 0)) / (2.0 * h))));
  }
  return out;
}

void write_landscape(const std::vector<LandscapeRow>& rows, const fs::path& out) {
  auto f = open_out(out);
  f << "a,q,abs_grad\n";
  for (const auto& r : rows) {
    f << format_double(r.a) << ',' << format_double(r.q) << ',' << format_double(r.abs_grad) << '\n';
  }
}

std::vector<LandscapeRow> cmd_landscape(const fs::path& checkpoint, double step, const fs::path& out) {
  const auto ck = Checkpoint::load(checkpoint);
  if (ck.env_id != "toy") throw UsageError("landscape is defined for toy checkpoints only");
  auto rows = critic_landscape(ck.critic, {1.0}, step);
  write_landscape(rows, out);
  return rows;
}

// ---------------------------------------------------------------------------
// Theory certification

bool TheoryReport::all_pass() const {
  for (const auto& [name, rows] : tables) {
    for (const auto& r : rows) {
      if (!r.pass) return false;
    }
  }
  return true;
}

void write_check_csv(const mdp::BoundReport& rows, const fs::path& path) {
  auto f = open_out(path);
  f << check_header << '\n';
  for (const auto& r : rows) {
    f << r.check << ',' << format_double(r.sigma) << ',' << format_double(r.observed) << ','
      << format_double(r.bound) << ',' << format_double(r.tolerance) << ',' << (r.pass ? "true" : "false")
      << '\n';
  }
}

namespace {

/// Runs one check; any library error becomes a single failed row.
template <class F>
mdp::BoundReport guarded(const std::string& name, double sigma, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    std::fprintf(stderr, "theory-check %s: %s\n", name.c_str(), e.what());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {{name, sigma, nan, nan, nan, false}};
  }
}

int horizon_for(double gamma) {
  if (gamma <= 0.0) return 1;
  return static_cast<int>(std::ceil(std::log(1e-6) / std::log(gamma))) + 1;
}

std::string theta_label(const std::string& check, double theta) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s[theta=%g]", check.c_str(), theta);
  return buf;
}

}  // namespace

TheoryReport cmd_theory_check(const TheoryOptions& opt) {
  if (opt.sigmas.empty()) throw UsageError("theory-check needs at least one sigma");
  const auto mdpv = mdp::verification_mdp(opt.gamma);
  const auto pi = mdp::verification_policy(opt.policy_theta);
  double sigma_max = opt.contraction_sigma;
  for (double s : opt.sigmas) sigma_max = std::max(sigma_max, s);
  mdp::LabOptions lab;
  lab.grid = mdp::ActionGrid::for_sigma(sigma_max);
  TheoryReport rep;

  rep.tables["contraction"] = guarded("contraction", opt.contraction_sigma, [&]() -> mdp::BoundReport {
    Rng rng = make_rng(opt.seed, Stream::sampling, 1);
    const auto c = mdp::verify_contraction(mdpv, pi,
                                           mdp::SmoothingConfig::quadrature(opt.contraction_sigma, lab.nodes),
                                           lab.grid, opt.contraction_trials, rng);
    return {{"contraction", opt.contraction_sigma, c.max_ratio, mdpv.gamma, 1e-9, c.pass}};
  });

  rep.tables["v_bound"] = guarded("v_bound", sigma_max, [&] {
    return mdp::check_v_error_bound(mdpv, pi, opt.sigmas, lab);
  });

  rep.tables["q_bound"] = guarded("q_bound", sigma_max, [&] {
    auto rows = mdp::check_q_error_bound(mdpv, pi, opt.sigmas, lab);
    // The bias must be real at the largest sigma, and the gap grows with sigma.
    auto sorted = rows;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.sigma < b.sigma; });
    const auto& top = sorted.back();
    if (mdpv.gamma > 0.0) {
      rows.push_back({"q_bias_positive", top.sigma, top.observed, 0.0, 0.0, top.observed > 0.0});
    }
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      rows.push_back({"q_gap_monotone", sorted[i].sigma, sorted[i].observed, sorted[i - 1].observed, 0.0,
                      sorted[i].observed >= sorted[i - 1].observed});
    }
    return rows;
  });

  rep.tables["lipschitz"] = guarded("lipschitz", sigma_max, [&] {
    mdp::BoundReport rows;
    for (double s : opt.sigmas) {
      const auto fp = mdp::smoothed_fixed_point(mdpv, pi, s, lab);
      const auto l = mdp::check_q_lipschitz(fp.q, mdpv.lip_q(), 1e-6);
      rows.push_back({"lipschitz", s, l.max_slope, l.bound, l.tolerance, l.pass});
    }
    return rows;
  });

  rep.tables["smoothed_vs_gs"] = guarded("q_sigma_vs_smoothed_q", sigma_max, [&] {
    const auto q = mdp::classical_fixed_point(mdpv, pi, lab);
    const auto qs = mdp::smoothed_fixed_point(mdpv, pi, sigma_max, lab);
    const double gap = mdp::smoothed_vs_gaussian_smoothed_q(q.q, qs.q, sigma_max, lab.nodes);
    // Interpolation error of both tables entering the comparison.
    const double interp_tol = mdp::interpolation_error(q.q) + mdp::interpolation_error(qs.q);
    return mdp::BoundReport{{"q_sigma_vs_smoothed_q", sigma_max, gap, 10.0 * interp_tol, interp_tol,
                             gap > 10.0 * interp_tol}};
  });

  const double th_sigma = opt.contraction_sigma;
  rep.tables["soft_pg"] = guarded("soft_pg", th_sigma, [&] {
    mdp::BoundReport rows;
    const int horizon = horizon_for(mdpv.gamma);
    const auto valid = mdp::ActionGrid::for_sigma(th_sigma);
    for (std::size_t i = 0; i < opt.gradient_thetas.size(); ++i) {
      const double theta = opt.gradient_thetas[i];
      const auto p = mdp::verification_policy(theta);
      Rng rng = make_rng(opt.seed, Stream::sampling, 100 + i);
      const auto est = mdp::soft_dpg_gradient_oracle(mdpv, p, th_sigma, valid, horizon,
                                                     opt.gradient_trajectories, rng);
      const auto fd = mdp::j_sigma_gradient_fd(mdpv, p, th_sigma);
      const auto exact = mdp::soft_dpg_gradient_exact(mdpv, p, th_sigma);
      const double dev = std::abs(est.mean[0] - fd[0]);
      const double band = 4.0 * est.standard_error[0];
      rows.push_back({theta_label("soft_pg", theta), th_sigma, dev, band, 0.0, dev <= band});
      const double exact_dev = std::abs(exact[0] - fd[0]);
      rows.push_back({theta_label("soft_pg_exact", theta), th_sigma, exact_dev, 0.0, 1e-6, exact_dev <= 1e-6});
    }
    return rows;
  });

  rep.tables["dpg_limit"] = guarded("dpg_limit", 0.0, [&] {
    mdp::BoundReport rows;
    const auto p = mdp::verification_policy(opt.limit_theta);
    const auto lim = mdp::dpg_limit_check(mdpv, p, opt.limit_sigmas);
    for (std::size_t i = 0; i < lim.rows.size(); ++i) {
      const auto& r = lim.rows[i];
      if (i > 0) {
        const double prev = lim.rows[i - 1].discrepancy;
        rows.push_back({"dpg_limit_monotone", r.sigma, r.discrepancy, prev, 1e-12, r.discrepancy <= prev + 1e-12});
      }
    }
    const auto& last = lim.rows.back();
    rows.push_back({"dpg_limit", last.sigma, last.discrepancy, 1e-2, 0.0, last.discrepancy < 1e-2});
    return rows;
  });

  rep.tables["gradient_bellman"] = guarded("gradient_bellman", sigma_max, [&] {
    mdp::BoundReport rows;
    for (double s : opt.sigmas) {
      const auto res = mdp::gradient_bellman_residuals(mdpv, pi, s);
      const double worst = *std::max_element(res.begin(), res.end());
      rows.push_back({"gradient_bellman", s, worst, 0.0, 1e-6, worst <= 1e-6});
    }
    return rows;
  });

  if (!opt.out_dir.empty()) {
    for (const auto& [name, rows] : rep.tables) write_check_csv(rows, opt.out_dir / (name + ".csv"));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Sweeps

std::vector<SweepRow> cmd_sweep(const TrainConfig& base, SweepParam param, const std::vector<double>& values) {
  if (values.empty()) throw UsageError("sweep needs at least one value");
  const fs::path root(base.output_dir);
  const char* pname = param == SweepParam::sigma ? "sigma" : "n";
  std::vector<SweepRow> rows;
  for (double v : values) {
    TrainConfig cfg = base;
    if (param == SweepParam::sigma) {
      cfg.agent.sigma = v;
    } else {
      if (v < 1.0 || v != std::floor(v)) throw UsageError("sweep over n needs positive integers");
      cfg.agent.n_smooth = static_cast<std::size_t>(v);
    }
    char name[64];
    std::snprintf(name, sizeof name, "%s_%g", pname, v);
    cfg.output_dir = (root / name).string();
    const auto results = cmd_train(cfg);
    std::vector<double> finals;
    for (const auto& r : results) finals.push_back(r.final_eval.mean);
    const auto s = summarize(finals);
    rows.push_back({v, s.mean, s.std, finals.size()});
  }
  auto f = open_out(root / "sweep_summary.csv");
  f << "param,value,mean_final_return,std_final_return,seeds\n";
  for (const auto& r : rows) {
    f << pname << ',' << format_double(r.value) << ',' << format_double(r.mean_final_return) << ','
      << format_double(r.std_final_return) << ',' << r.seeds << '\n';
  }
  return rows;
}

}  // namespace sdpg::harness
