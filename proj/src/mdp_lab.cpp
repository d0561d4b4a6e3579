#include "sdpg/mdp_lab.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sdpg/error.hpp"

namespace sdpg::mdp {

namespace {

constexpr double kVerificationCoef[3] = {1.0, 0.5, -0.8};

double mix_rate(double a) { return 0.5 + 0.4 * std::tanh(a); }

std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (std::abs(a[piv][col]) < 1e-300) throw NumericalError("singular linear system in value solve");
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

void require_quadrature(const SmoothingConfig& cfg) {
  cfg.validate();
  if (!cfg.is_quadrature()) {
    throw UsageError("tabular smoothed backups require the gauss_hermite scheme");
  }
}

int nodes_of(const SmoothingConfig& cfg) { return std::get<smoothing::GaussHermite>(cfg.scheme).nodes; }

// R and P evaluated once per grid action.
struct GridModel {
  std::vector<double> reward;                    // S x K
  std::vector<std::vector<double>> transition;   // (S x K) -> S

  GridModel(const TabularMdp& mdp, const ActionGrid& grid) {
    const std::size_t n = static_cast<std::size_t>(mdp.num_states) * grid.points;
    reward.resize(n);
    transition.resize(n);
    for (int s = 0; s < mdp.num_states; ++s) {
      for (int k = 0; k < grid.points; ++k) {
        const std::size_t idx = static_cast<std::size_t>(s) * grid.points + k;
        reward[idx] = mdp.reward(s, grid.at(k));
        transition[idx] = mdp.transition(s, grid.at(k));
      }
    }
  }
};

QTable backup_from_next_values(const QTable& q, const TabularMdp& mdp, const std::vector<double>& v) {
  const GridModel model(mdp, q.grid);
  QTable out(q.grid, q.num_states);
  for (int s = 0; s < q.num_states; ++s) {
    for (int k = 0; k < q.grid.points; ++k) {
      const std::size_t idx = static_cast<std::size_t>(s) * q.grid.points + k;
      const auto& p = model.transition[idx];
      double ev = 0.0;
      for (int s2 = 0; s2 < mdp.num_states; ++s2) ev += p[static_cast<std::size_t>(s2)] * v[static_cast<std::size_t>(s2)];
      out.at(s, k) = model.reward[idx] + mdp.gamma * ev;
    }
  }
  return out;
}

void check_table(const QTable& q, const TabularMdp& mdp) {
  if (q.num_states != mdp.num_states) throw UsageError("QTable state count does not match the MDP");
  if (mdp.action_dim != 1) throw UsageError("the tabular lab supports one-dimensional actions only");
}

}  // namespace

MdpAudit audit(const TabularMdp& mdp, double a_lo, double a_hi, int points) {
  MdpAudit out;
  const double h = (a_hi - a_lo) / (points - 1);
  for (int s = 0; s < mdp.num_states; ++s) {
    double prev_r = 0.0;
    std::vector<double> prev_p;
    for (int k = 0; k < points; ++k) {
      const double a = a_lo + h * k;
      const double r = mdp.reward(s, a);
      const auto p = mdp.transition(s, a);
      out.max_abs_reward = std::max(out.max_abs_reward, std::abs(r));
      double total = 0.0;
      for (double pi : p) {
        total += pi;
        if (pi < 0.0) out.max_simplex_error = std::max(out.max_simplex_error, -pi);
      }
      out.max_simplex_error = std::max(out.max_simplex_error, std::abs(total - 1.0));
      if (k > 0) {
        out.max_reward_slope = std::max(out.max_reward_slope, std::abs(r - prev_r) / h);
        double l1 = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) l1 += std::abs(p[i] - prev_p[i]);
        out.max_transition_slope = std::max(out.max_transition_slope, l1 / h);
      }
      prev_r = r;
      prev_p = p;
    }
  }
  out.ok = out.max_simplex_error <= 1e-12 && out.max_abs_reward <= mdp.r_max + 1e-12 &&
           out.max_reward_slope <= mdp.lip_r + 1e-9 && out.max_transition_slope <= mdp.lip_p + 1e-9;
  return out;
}

double verification_lip_p() {
  // ||delta_s - uniform||_1 = (1 - 1/3) + 2/3 for three states.
  const double dist = 4.0 / 3.0;
  double best = 0.0;
  for (int k = -200000; k <= 200000; ++k) {
    const double a = k * 1e-4;
    const double t = std::tanh(a);
    best = std::max(best, 0.4 * (1.0 - t * t) * dist);
  }
  return best;
}

TabularMdp verification_mdp(double gamma) {
  TabularMdp mdp;
  mdp.num_states = 3;
  mdp.action_dim = 1;
  mdp.gamma = gamma;
  mdp.reward = [](int s, double a) { return kVerificationCoef[s] * std::sin(a); };
  mdp.transition = [](int s, double a) {
    const double l = mix_rate(a);
    std::vector<double> p(3, l / 3.0);
    p[static_cast<std::size_t>(s)] += 1.0 - l;
    return p;
  };
  mdp.r_max = 1.0;
  mdp.lip_r = 1.0;
  mdp.lip_p = verification_lip_p();
  mdp.initial_dist = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  return mdp;
}

ActionGrid ActionGrid::for_sigma(double sigma_max, int points) {
  const double half = 6.0 * sigma_max + 1.0;
  return ActionGrid{-half, half, points};
}

QTable::QTable(ActionGrid g, int states, double fill)
    : grid(g), num_states(states), values(static_cast<std::size_t>(states) * g.points, fill) {
  if (g.points < 2 || !(g.hi > g.lo)) throw UsageError("action grid needs >= 2 increasing points");
}

double QTable::interp(int s, double a) const {
  if (!grid.contains(a) || !std::isfinite(a)) {
    std::ostringstream os;
    os << "action " << a << " outside QTable grid [" << grid.lo << ", " << grid.hi << "]";
    throw DomainError(os.str());
  }
  const double u = (a - grid.lo) / grid.spacing();
  int k = static_cast<int>(std::floor(u));
  k = std::clamp(k, 0, grid.points - 2);
  const double frac = u - k;
  return (1.0 - frac) * at(s, k) + frac * at(s, k + 1);
}

double QTable::sup_distance(const QTable& other) const {
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) d = std::max(d, std::abs(values[i] - other.values[i]));
  return d;
}

TabularPolicy TabularPolicy::fixed(std::vector<double> actions) {
  TabularPolicy p;
  p.actions_ = std::move(actions);
  return p;
}

TabularPolicy TabularPolicy::linear(std::vector<double> theta,
                                    std::vector<std::vector<double>> features) {
  for (const auto& f : features) {
    if (f.size() != theta.size()) throw UsageError("policy feature width does not match theta");
  }
  TabularPolicy p;
  p.parametric_ = true;
  p.theta_ = std::move(theta);
  p.features_ = std::move(features);
  return p;
}

double TabularPolicy::action(int s) const {
  if (!parametric_) return actions_.at(static_cast<std::size_t>(s));
  const auto& f = features_.at(static_cast<std::size_t>(s));
  double a = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) a += theta_[i] * f[i];
  return a;
}

std::vector<double> TabularPolicy::jacobian(int s) const {
  if (!parametric_) return {};
  return features_.at(static_cast<std::size_t>(s));
}

TabularPolicy TabularPolicy::with_theta(std::vector<double> theta) const {
  if (!parametric_) throw UsageError("with_theta on a fixed policy");
  return linear(std::move(theta), features_);
}

int TabularPolicy::num_states() const {
  return static_cast<int>(parametric_ ? features_.size() : actions_.size());
}

double TabularPolicy::max_abs_action() const {
  double m = 0.0;
  for (int s = 0; s < num_states(); ++s) m = std::max(m, std::abs(action(s)));
  return m;
}

TabularPolicy verification_policy(double theta) {
  return TabularPolicy::linear({theta}, {{1.0}, {-1.5}, {2.0}});
}

QTable bellman_backup(const QTable& q, const TabularMdp& mdp, const TabularPolicy& pi) {
  check_table(q, mdp);
  return backup_from_next_values(q, mdp, state_values(q, pi));
}

QTable smoothed_bellman_backup(const QTable& q, const TabularMdp& mdp, const TabularPolicy& pi,
                               const SmoothingConfig& cfg) {
  check_table(q, mdp);
  return backup_from_next_values(q, mdp, smoothed_state_values(q, pi, cfg));
}

std::vector<double> state_values(const QTable& q, const TabularPolicy& pi) {
  std::vector<double> v(static_cast<std::size_t>(q.num_states));
  for (int s = 0; s < q.num_states; ++s) v[static_cast<std::size_t>(s)] = q.interp(s, pi.action(s));
  return v;
}

std::vector<double> smoothed_state_values(const QTable& q, const TabularPolicy& pi,
                                          const SmoothingConfig& cfg) {
  require_quadrature(cfg);
  const auto quad = smoothing::gauss_hermite(nodes_of(cfg));
  std::vector<double> v(static_cast<std::size_t>(q.num_states));
  for (int s = 0; s < q.num_states; ++s) {
    const double center = pi.action(s);
    double acc = 0.0;
    for (std::size_t i = 0; i < quad.size(); ++i) {
      const double a = center + cfg.sigma * quad.nodes[i];
      if (!q.grid.contains(a)) {
        std::ostringstream os;
        os << "smoothed backup: quadrature node " << i << " (t=" << quad.nodes[i]
           << ") probes action " << a << " outside grid [" << q.grid.lo << ", " << q.grid.hi
           << "] at state " << s;
        throw DomainError(os.str());
      }
      acc += quad.weights[i] * q.interp(s, a);
    }
    v[static_cast<std::size_t>(s)] = acc;
  }
  return v;
}

FixedPointResult fixed_point(const BackupOperator& op, const QTable& q0, double tol, int max_iter) {
  if (!(tol > 0.0)) throw UsageError("fixed_point tolerance must be positive");
  std::vector<double> trace;
  QTable cur = q0;
  for (int k = 0; k < max_iter; ++k) {
    QTable next = op(cur);
    const double res = next.sup_distance(cur);
    trace.push_back(res);
    if (!std::isfinite(res)) throw NumericalError("fixed_point: non-finite residual");
    if (res < tol) return {std::move(next), k, res};
    cur = std::move(next);
  }
  std::ostringstream os;
  os << "fixed_point did not converge in " << max_iter << " iterations (last residual "
     << trace.back() << ")";
  throw NonConvergenceError(os.str(), std::move(trace));
}

std::vector<std::vector<double>> policy_kernel(const TabularMdp& mdp, const TabularPolicy& pi,
                                               double sigma, int nodes) {
  const auto n = static_cast<std::size_t>(mdp.num_states);
  std::vector<std::vector<double>> p(n, std::vector<double>(n, 0.0));
  const auto quad = smoothing::gauss_hermite(nodes);
  for (int s = 0; s < mdp.num_states; ++s) {
    const double center = pi.action(s);
    if (sigma <= 0.0) {
      p[static_cast<std::size_t>(s)] = mdp.transition(s, center);
      continue;
    }
    for (std::size_t i = 0; i < quad.size(); ++i) {
      const auto row = mdp.transition(s, center + sigma * quad.nodes[i]);
      for (std::size_t j = 0; j < n; ++j) p[static_cast<std::size_t>(s)][j] += quad.weights[i] * row[j];
    }
  }
  return p;
}

std::vector<double> exact_state_values(const TabularMdp& mdp, const TabularPolicy& pi, double sigma,
                                       int nodes) {
  const auto n = static_cast<std::size_t>(mdp.num_states);
  const auto quad = smoothing::gauss_hermite(nodes);
  const auto kernel = policy_kernel(mdp, pi, sigma, nodes);
  std::vector<double> r(n, 0.0);
  for (int s = 0; s < mdp.num_states; ++s) {
    const double center = pi.action(s);
    if (sigma <= 0.0) {
      r[static_cast<std::size_t>(s)] = mdp.reward(s, center);
    } else {
      r[static_cast<std::size_t>(s)] =
          quad.expect([&](double t) { return mdp.reward(s, center + sigma * t); });
    }
  }
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i][j] = (i == j ? 1.0 : 0.0) - mdp.gamma * kernel[i][j];
  }
  return solve_dense(std::move(a), std::move(r));
}

double action_value(const TabularMdp& mdp, const std::vector<double>& v, int s, double a) {
  const auto p = mdp.transition(s, a);
  double ev = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) ev += p[j] * v[j];
  return mdp.reward(s, a) + mdp.gamma * ev;
}

}  // namespace sdpg::mdp
