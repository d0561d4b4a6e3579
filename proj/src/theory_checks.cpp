#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sdpg/error.hpp"
#include "sdpg/mdp_lab.hpp"

namespace sdpg::mdp {

namespace {

std::vector<double> transpose_solve(const std::vector<std::vector<double>>& kernel, double gamma,
                                    const std::vector<double>& rhs) {
  // Solves (I - gamma K^T) x = rhs by Gaussian elimination.
  const std::size_t n = rhs.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i][j] = (i == j ? 1.0 : 0.0) - gamma * kernel[j][i];
    a[i][n] = rhs[i];
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[piv], a[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = a[i][n] / a[i][i];
  return x;
}

/// Unnormalized discounted visitation sum_t gamma^t rho_t under the policy
/// kernel for the given sigma.
std::vector<double> discounted_visitation(const TabularMdp& mdp, const TabularPolicy& pi,
                                          double sigma, int nodes) {
  return transpose_solve(policy_kernel(mdp, pi, sigma, nodes), mdp.gamma, mdp.initial_dist);
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

int sample_index(const std::vector<double>& p, double u) {
  double c = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    c += p[i];
    if (u < c) return static_cast<int>(i);
  }
  return static_cast<int>(p.size()) - 1;
}

}  // namespace

double contraction_ratio(const QTable& q1, const QTable& q2, const TabularMdp& mdp,
                         const TabularPolicy& pi, const SmoothingConfig& cfg) {
  const double d = q1.sup_distance(q2);
  if (d == 0.0) return 0.0;
  const QTable t1 = smoothed_bellman_backup(q1, mdp, pi, cfg);
  const QTable t2 = smoothed_bellman_backup(q2, mdp, pi, cfg);
  return t1.sup_distance(t2) / d;
}

ContractionReport verify_contraction(const TabularMdp& mdp, const TabularPolicy& pi,
                                     const SmoothingConfig& cfg, const ActionGrid& grid,
                                     int trials, Rng& rng) {
  if (trials < 1) throw UsageError("verify_contraction needs at least one trial");
  ContractionReport rep;
  std::uniform_real_distribution<double> u(-mdp.v_max(), mdp.v_max());
  for (int t = 0; t < trials; ++t) {
    QTable a(grid, mdp.num_states), b(grid, mdp.num_states);
    while (true) {
      for (auto& x : a.values) x = u(rng);
      for (auto& x : b.values) x = u(rng);
      if (a.sup_distance(b) > 0.0) break;
      ++rep.resampled;
    }
    rep.max_ratio = std::max(rep.max_ratio, contraction_ratio(a, b, mdp, pi, cfg));
    ++rep.trials;
  }
  rep.pass = rep.max_ratio <= mdp.gamma + 1e-9;
  return rep;
}

double v_error_bound(const TabularMdp& mdp, double sigma) {
  const double m = mdp.action_dim;
  return sigma * std::sqrt(m) / (1.0 - mdp.gamma) *
         (mdp.lip_r + 0.5 * mdp.gamma * mdp.lip_p * mdp.v_max());
}

double q_error_bound(const TabularMdp& mdp, double sigma) {
  const double m = mdp.action_dim;
  return mdp.gamma * mdp.lip_q() * sigma * std::sqrt(m) / (1.0 - mdp.gamma);
}

FixedPointResult classical_fixed_point(const TabularMdp& mdp, const TabularPolicy& pi,
                                       const LabOptions& opt) {
  const QTable q0(opt.grid, mdp.num_states);
  return fixed_point([&](const QTable& q) { return bellman_backup(q, mdp, pi); }, q0, opt.tol,
                     opt.max_iter);
}

FixedPointResult smoothed_fixed_point(const TabularMdp& mdp, const TabularPolicy& pi, double sigma,
                                      const LabOptions& opt) {
  if (sigma <= 0.0) return classical_fixed_point(mdp, pi, opt);
  const auto cfg = SmoothingConfig::quadrature(sigma, opt.nodes);
  const QTable q0(opt.grid, mdp.num_states);
  return fixed_point([&](const QTable& q) { return smoothed_bellman_backup(q, mdp, pi, cfg); }, q0,
                     opt.tol, opt.max_iter);
}

BoundReport check_v_error_bound(const TabularMdp& mdp, const TabularPolicy& pi,
                                const std::vector<double>& sigmas, const LabOptions& opt) {
  BoundReport rows;
  const double tol = opt.grid_tolerance(mdp);
  const auto classical = classical_fixed_point(mdp, pi, opt);
  const auto v = state_values(classical.q, pi);
  const auto quad = smoothing::gauss_hermite(opt.nodes);

  for (double sigma : sigmas) {
    std::vector<double> v_sigma = v;
    std::vector<double> v_exact = exact_state_values(mdp, pi, 0.0, opt.nodes);
    if (sigma > 0.0) {
      const auto smoothed = smoothed_fixed_point(mdp, pi, sigma, opt);
      v_sigma = smoothed_state_values(smoothed.q, pi, SmoothingConfig::quadrature(sigma, opt.nodes));
      v_exact = exact_state_values(mdp, pi, sigma, opt.nodes);
    }
    const double observed = sup_diff(v, v_sigma);
    const double bound = v_error_bound(mdp, sigma);
    rows.push_back({"v_bound", sigma, observed, bound, tol, observed <= bound + tol});

    // Reward/kernel gaps of the smoothed MDP (R_sigma, P_sigma), probed on the
    // grid and at the policy's own actions, feed the simulation-lemma bound.
    double eps_r = 0.0, eps_p = 0.0;
    if (sigma > 0.0) {
      std::vector<double> probes;
      for (int k = 0; k < opt.grid.points; ++k) probes.push_back(opt.grid.at(k));
      auto gap_at = [&](int s, double a) {
        const double r_s = quad.expect([&](double t) { return mdp.reward(s, a + sigma * t); });
        eps_r = std::max(eps_r, std::abs(mdp.reward(s, a) - r_s));
        const auto p = mdp.transition(s, a);
        std::vector<double> p_s(p.size(), 0.0);
        for (std::size_t i = 0; i < quad.size(); ++i) {
          const auto row = mdp.transition(s, a + sigma * quad.nodes[i]);
          for (std::size_t j = 0; j < row.size(); ++j) p_s[j] += quad.weights[i] * row[j];
        }
        double l1 = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) l1 += std::abs(p[j] - p_s[j]);
        eps_p = std::max(eps_p, l1);
      };
      for (int s = 0; s < mdp.num_states; ++s) {
        for (double a : probes) gap_at(s, a);
        gap_at(s, pi.action(s));
      }
    }
    const double sim_bound =
        eps_r / (1.0 - mdp.gamma) + mdp.gamma * eps_p * mdp.v_max() / (2.0 * (1.0 - mdp.gamma));
    rows.push_back({"simulation_lemma", sigma, observed, sim_bound, tol, observed <= sim_bound + tol});

    const double route_gap = sup_diff(v_sigma, v_exact);
    rows.push_back({"v_route_agreement", sigma, route_gap, 0.0, tol, route_gap <= tol});
  }
  return rows;
}

BoundReport check_q_error_bound(const TabularMdp& mdp, const TabularPolicy& pi,
                                const std::vector<double>& sigmas, const LabOptions& opt) {
  BoundReport rows;
  const double tol = opt.grid_tolerance(mdp);
  const auto classical = classical_fixed_point(mdp, pi, opt);
  for (double sigma : sigmas) {
    double observed = 0.0;
    if (sigma > 0.0) {
      const auto smoothed = smoothed_fixed_point(mdp, pi, sigma, opt);
      observed = classical.q.sup_distance(smoothed.q);
    }
    const double bound = q_error_bound(mdp, sigma);
    rows.push_back({"q_bound", sigma, observed, bound, tol, observed <= bound + tol});
  }
  return rows;
}

LipschitzReport check_q_lipschitz(const QTable& q_sigma, double l_q, double tolerance) {
  LipschitzReport rep;
  rep.bound = l_q;
  rep.tolerance = tolerance;
  const int k = q_sigma.grid.points;
  for (int s = 0; s < q_sigma.num_states; ++s) {
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j) {
        const double slope = std::abs(q_sigma.at(s, j) - q_sigma.at(s, i)) /
                             (q_sigma.grid.at(j) - q_sigma.grid.at(i));
        rep.max_slope = std::max(rep.max_slope, slope);
      }
    }
  }
  rep.pass = rep.max_slope <= l_q + tolerance;
  return rep;
}

double j_sigma(const TabularMdp& mdp, const TabularPolicy& pi, double sigma, int nodes) {
  const auto v = exact_state_values(mdp, pi, sigma, nodes);
  double j = 0.0;
  for (std::size_t s = 0; s < v.size(); ++s) j += mdp.initial_dist[s] * v[s];
  return j;
}

std::vector<double> j_sigma_gradient_fd(const TabularMdp& mdp, const TabularPolicy& pi,
                                        double sigma, double h, int nodes) {
  const auto theta = pi.theta();
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto up = theta, dn = theta;
    up[i] += h;
    dn[i] -= h;
    g[i] = (j_sigma(mdp, pi.with_theta(up), sigma, nodes) -
            j_sigma(mdp, pi.with_theta(dn), sigma, nodes)) /
           (2.0 * h);
  }
  return g;
}

GradientEstimate soft_dpg_gradient_oracle(const TabularMdp& mdp, const TabularPolicy& pi,
                                          double sigma, const ActionGrid& valid, int horizon,
                                          int num_trajectories, Rng& rng, int nodes) {
  if (!pi.is_parametric()) throw UsageError("gradient oracle needs a parametric policy");
  if (!(sigma > 0.0)) throw UsageError("gradient oracle needs sigma > 0");
  const auto v = exact_state_values(mdp, pi, sigma, nodes);
  const std::size_t p = pi.theta().size();
  std::vector<double> sum(p, 0.0), sum_sq(p, 0.0), traj(p);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double inv_var = 1.0 / (sigma * sigma);
  for (int n = 0; n < num_trajectories; ++n) {
    std::fill(traj.begin(), traj.end(), 0.0);
    int s = sample_index(mdp.initial_dist, unif(rng));
    double discount = 1.0;
    for (int t = 0; t < horizon; ++t) {
      const double center = pi.action(s);
      const double a = center + sigma * normal(rng);
      if (!valid.contains(a)) {
        std::ostringstream os;
        os << "gradient oracle: sampled action " << a << " outside grid [" << valid.lo << ", "
           << valid.hi << "]";
        throw DomainError(os.str());
      }
      const double q = action_value(mdp, v, s, a);
      const auto jac = pi.jacobian(s);
      for (std::size_t i = 0; i < p; ++i) traj[i] += discount * inv_var * jac[i] * (a - center) * q;
      s = sample_index(mdp.transition(s, a), unif(rng));
      discount *= mdp.gamma;
    }
    for (std::size_t i = 0; i < p; ++i) {
      sum[i] += traj[i];
      sum_sq[i] += traj[i] * traj[i];
    }
  }
  GradientEstimate est{std::vector<double>(p), std::vector<double>(p)};
  const double nn = num_trajectories;
  for (std::size_t i = 0; i < p; ++i) {
    est.mean[i] = sum[i] / nn;
    const double var = std::max(0.0, (sum_sq[i] / nn - est.mean[i] * est.mean[i]) * nn / (nn - 1.0));
    est.standard_error[i] = std::sqrt(var / nn);
  }
  return est;
}

std::vector<double> soft_dpg_gradient_exact(const TabularMdp& mdp, const TabularPolicy& pi,
                                            double sigma, int nodes) {
  const auto v = exact_state_values(mdp, pi, sigma, nodes);
  const auto rho = discounted_visitation(mdp, pi, sigma, nodes);
  const auto quad = smoothing::gauss_hermite(nodes);
  std::vector<double> g(pi.theta().size(), 0.0);
  for (int s = 0; s < mdp.num_states; ++s) {
    const double center = pi.action(s);
    const double score = quad.expect(
        [&](double t) { return action_value(mdp, v, s, center + sigma * t) * t / sigma; });
    const auto jac = pi.jacobian(s);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += rho[static_cast<std::size_t>(s)] * jac[i] * score;
  }
  return g;
}

GradientEstimate rollout_return(const TabularMdp& mdp, const TabularPolicy& pi, double sigma,
                                int horizon, int episodes, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double sum = 0.0, sum_sq = 0.0;
  for (int e = 0; e < episodes; ++e) {
    int s = sample_index(mdp.initial_dist, unif(rng));
    double g = 0.0, discount = 1.0;
    for (int t = 0; t < horizon; ++t) {
      const double a = pi.action(s) + sigma * normal(rng);
      g += discount * mdp.reward(s, a);
      s = sample_index(mdp.transition(s, a), unif(rng));
      discount *= mdp.gamma;
    }
    sum += g;
    sum_sq += g * g;
  }
  const double n = episodes;
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq / n - mean * mean) * n / (n - 1.0));
  return {{mean}, {std::sqrt(var / n)}};
}

DpgLimitReport dpg_limit_check(const TabularMdp& mdp, const TabularPolicy& pi,
                               const std::vector<double>& sigmas, int nodes) {
  if (!pi.is_parametric()) throw UsageError("dpg_limit_check needs a parametric policy");
  const std::size_t p = pi.theta().size();

  // Deterministic policy gradient: visitation of pi itself and a central
  // difference of the classical Q^pi in the action.
  const auto v = exact_state_values(mdp, pi, 0.0, nodes);
  const auto rho = discounted_visitation(mdp, pi, 0.0, nodes);
  std::vector<double> dpg(p, 0.0);
  const double h = 1e-5;
  for (int s = 0; s < mdp.num_states; ++s) {
    const double a = pi.action(s);
    const double dq = (action_value(mdp, v, s, a + h) - action_value(mdp, v, s, a - h)) / (2.0 * h);
    const auto jac = pi.jacobian(s);
    for (std::size_t i = 0; i < p; ++i) dpg[i] += rho[static_cast<std::size_t>(s)] * jac[i] * dq;
  }

  DpgLimitReport rep;
  Rng unused(0);
  for (double sigma : sigmas) {
    // Action value of the Gaussian policy nu = N(pi(s), sigma^2) is the
    // sigma-smoothed fixed point; its zeroth-order gradient at pi(s).
    const auto v_nu = exact_state_values(mdp, pi, sigma, nodes);
    const auto rho_nu = discounted_visitation(mdp, pi, sigma, nodes);
    const auto cfg = SmoothingConfig::quadrature(sigma, nodes);
    DpgLimitRow row;
    row.sigma = sigma;
    row.dpg = dpg;
    row.gaussian_policy_gradient.assign(p, 0.0);
    for (int s = 0; s < mdp.num_states; ++s) {
      const double center = pi.action(s);
      const smoothing::ScalarField q = [&](std::span<const double> a) {
        return action_value(mdp, v_nu, s, a[0]);
      };
      const double score = smoothing::smooth_grad(q, std::span<const double>(&center, 1), cfg, unused)[0];
      const auto jac = pi.jacobian(s);
      for (std::size_t i = 0; i < p; ++i) {
        row.gaussian_policy_gradient[i] += rho_nu[static_cast<std::size_t>(s)] * jac[i] * score;
      }
    }
    row.discrepancy = sup_diff(row.gaussian_policy_gradient, dpg);
    rep.rows.push_back(std::move(row));
  }
  rep.non_increasing = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    if (rep.rows[i].discrepancy > rep.rows[i - 1].discrepancy + 1e-12) rep.non_increasing = false;
  }
  return rep;
}

std::vector<double> gradient_bellman_residuals(const TabularMdp& mdp, const TabularPolicy& pi,
                                               double sigma, double h, int nodes) {
  if (!pi.is_parametric()) throw UsageError("gradient Bellman check needs a parametric policy");
  const auto theta = pi.theta();
  const auto n = static_cast<std::size_t>(mdp.num_states);
  const auto kernel = policy_kernel(mdp, pi, sigma, nodes);
  const auto v0 = exact_state_values(mdp, pi, sigma, nodes);
  const auto quad = smoothing::gauss_hermite(nodes);
  std::vector<double> residual(n, 0.0);

  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto up = theta, dn = theta;
    up[i] += h;
    dn[i] -= h;
    const auto pu = pi.with_theta(up), pd = pi.with_theta(dn);
    const auto vu = exact_state_values(mdp, pu, sigma, nodes);
    const auto vd = exact_state_values(mdp, pd, sigma, nodes);
    std::vector<double> dv(n);
    for (std::size_t s = 0; s < n; ++s) dv[s] = (vu[s] - vd[s]) / (2.0 * h);

    for (int s = 0; s < mdp.num_states; ++s) {
      // Only the action argument moves; Q_sigma stays the one at theta.
      auto smoothed_q = [&](const TabularPolicy& p) {
        const double c = p.action(s);
        return quad.expect([&](double t) { return action_value(mdp, v0, s, c + sigma * t); });
      };
      const double direct = (smoothed_q(pu) - smoothed_q(pd)) / (2.0 * h);
      double propagated = 0.0;
      for (std::size_t s2 = 0; s2 < n; ++s2) propagated += kernel[static_cast<std::size_t>(s)][s2] * dv[s2];
      const double rhs = mdp.gamma * propagated + direct;
      residual[static_cast<std::size_t>(s)] =
          std::max(residual[static_cast<std::size_t>(s)], std::abs(dv[static_cast<std::size_t>(s)] - rhs));
    }
  }
  return residual;
}

double smoothed_vs_gaussian_smoothed_q(const QTable& q_classical, const QTable& q_sigma,
                                       double sigma, int nodes) {
  const auto quad = smoothing::gauss_hermite(nodes);
  const double reach = sigma * quad.nodes.back();
  double worst = 0.0;
  for (int s = 0; s < q_sigma.num_states; ++s) {
    for (int k = 0; k < q_sigma.grid.points; ++k) {
      const double a = q_sigma.grid.at(k);
      if (!q_classical.grid.contains(a - reach) || !q_classical.grid.contains(a + reach)) continue;
      const double gs = quad.expect([&](double t) { return q_classical.interp(s, a + sigma * t); });
      worst = std::max(worst, std::abs(q_sigma.at(s, k) - gs));
    }
  }
  return worst;
}

double interpolation_error(const QTable& q) {
  double curv = 0.0;
  for (int s = 0; s < q.num_states; ++s) {
    for (int k = 1; k + 1 < q.grid.points; ++k) {
      curv = std::max(curv, std::abs(q.at(s, k + 1) - 2.0 * q.at(s, k) + q.at(s, k - 1)));
    }
  }
  return curv / 8.0;
}

}  // namespace sdpg::mdp
