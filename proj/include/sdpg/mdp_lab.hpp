#pragma once

// Tabular laboratory: finite states, one-dimensional continuous action.
// Computes classical and sigma-smoothed Bellman fixed points on an action
// grid and certifies the smoothing error bounds and gradient identities
// numerically.

#include <functional>
#include <string>
#include <vector>

#include "sdpg/rng.hpp"
#include "sdpg/smoothing.hpp"

namespace sdpg::mdp {

using smoothing::SmoothingConfig;

struct TabularMdp {
  int num_states = 0;
  int action_dim = 1;  // the lab supports m = 1 only
  std::function<double(int s, double a)> reward;
  std::function<std::vector<double>(int s, double a)> transition;
  double gamma = 0.9;
  double r_max = 1.0;
  double lip_r = 1.0;
  double lip_p = 1.0;  // L1 sense in a
  std::vector<double> initial_dist;

  double v_max() const { return r_max / (1.0 - gamma); }
  double lip_q() const { return lip_r + gamma * lip_p * v_max(); }
};

/// Result of probing the declared constants of a TabularMdp on a grid.
struct MdpAudit {
  double max_abs_reward = 0.0;
  double max_reward_slope = 0.0;
  double max_transition_slope = 0.0;  // max ||P(a)-P(a')||_1 / |a-a'|
  double max_simplex_error = 0.0;     // max |sum P - 1| or negativity
  bool ok = false;
};

MdpAudit audit(const TabularMdp& mdp, double a_lo, double a_hi, int points);

/// Built-in 3-state verification MDP: R(s,a) = c_s sin(a), c = (1, 0.5, -0.8);
/// P(.|s,a) = (1 - l(a)) delta_s + l(a) uniform with l(a) = 0.5 + 0.4 tanh(a);
/// uniform initial distribution.
TabularMdp verification_mdp(double gamma = 0.9);

/// max_a |l'(a)| * ||delta_s - uniform||_1 for the verification MDP, found by
/// grid search over the closed form.
double verification_lip_p();

struct ActionGrid {
  double lo = -1.0;
  double hi = 1.0;
  int points = 241;

  double spacing() const { return (hi - lo) / (points - 1); }
  double at(int k) const { return lo + spacing() * k; }
  bool contains(double a) const { return a >= lo && a <= hi; }

  /// [-(6 sigma_max + 1), 6 sigma_max + 1] with 241 points.
  static ActionGrid for_sigma(double sigma_max, int points = 241);
};

struct QTable {
  ActionGrid grid;
  int num_states = 0;
  std::vector<double> values;  // row-major num_states x grid.points

  QTable() = default;
  QTable(ActionGrid g, int states, double fill = 0.0);

  double& at(int s, int k) { return values[static_cast<std::size_t>(s) * grid.points + k]; }
  double at(int s, int k) const { return values[static_cast<std::size_t>(s) * grid.points + k]; }

  /// Linear interpolation in a; DomainError outside the grid.
  double interp(int s, double a) const;

  double sup_distance(const QTable& other) const;
};

/// Deterministic tabular policy: either a fixed action per state or
/// pi_theta(s) = theta . phi(s) with per-state feature vectors.
class TabularPolicy {
 public:
  static TabularPolicy fixed(std::vector<double> actions);
  static TabularPolicy linear(std::vector<double> theta, std::vector<std::vector<double>> features);

  double action(int s) const;
  /// d pi(s) / d theta (empty for fixed policies).
  std::vector<double> jacobian(int s) const;
  const std::vector<double>& theta() const { return theta_; }
  bool is_parametric() const { return parametric_; }
  TabularPolicy with_theta(std::vector<double> theta) const;
  int num_states() const;
  double max_abs_action() const;

 private:
  bool parametric_ = false;
  std::vector<double> actions_;
  std::vector<double> theta_;
  std::vector<std::vector<double>> features_;
};

/// Features used by the built-in checks: phi(s) = (1.0, -1.5, 2.0), p = 1.
TabularPolicy verification_policy(double theta);

// ---------------------------------------------------------------------------
// Backups and fixed points

/// Classical T^pi on the grid: Q'(s,a) = R(s,a) + gamma sum_s' P(s'|s,a) Q(s', pi(s')).
QTable bellman_backup(const QTable& q, const TabularMdp& mdp, const TabularPolicy& pi);

/// T_sigma^pi with Gauss-Hermite quadrature over the next action
/// pi(s') + sigma t_i. Nodes falling off the grid raise DomainError.
QTable smoothed_bellman_backup(const QTable& q, const TabularMdp& mdp, const TabularPolicy& pi,
                               const SmoothingConfig& cfg);

using BackupOperator = std::function<QTable(const QTable&)>;

struct FixedPointResult {
  QTable q;
  int iterations = 0;  // backups before the iterate stopped moving (the confirming backup excluded)
  double residual = 0.0;
};

FixedPointResult fixed_point(const BackupOperator& op, const QTable& q0, double tol, int max_iter);

/// V(s) = Q(s, pi(s)) for a classical table.
std::vector<double> state_values(const QTable& q, const TabularPolicy& pi);
/// V_sigma(s) = E_w[Q(s, pi(s) + sigma w)] by quadrature.
std::vector<double> smoothed_state_values(const QTable& q, const TabularPolicy& pi,
                                          const SmoothingConfig& cfg);

/// Value route that never touches the action grid: solves
/// V = R_pi + gamma P_pi V, where for sigma > 0 the reward and kernel are
/// the Gaussian-smoothed R_sigma(s, pi(s)), P_sigma(.|s, pi(s)).
/// sigma <= 0 gives the classical value function.
std::vector<double> exact_state_values(const TabularMdp& mdp, const TabularPolicy& pi,
                                       double sigma, int nodes = 21);

/// One exact backup from a state-value vector, evaluated at any action:
/// R(s,a) + gamma sum_s' P(s'|s,a) v(s'). With v = exact values this is the
/// action-value function itself, smooth in a.
double action_value(const TabularMdp& mdp, const std::vector<double>& v, int s, double a);

/// Smoothed transition matrix P_sigma(s'|s, pi(s)) (sigma <= 0: classical).
std::vector<std::vector<double>> policy_kernel(const TabularMdp& mdp, const TabularPolicy& pi,
                                               double sigma, int nodes = 21);

// ---------------------------------------------------------------------------
// Certification

struct ContractionReport {
  int trials = 0;
  int resampled = 0;
  double max_ratio = 0.0;
  bool pass = false;
};

/// ||T Q - T Q'|| / ||Q - Q'|| for one pair; 0 when Q == Q'.
double contraction_ratio(const QTable& q1, const QTable& q2, const TabularMdp& mdp,
                         const TabularPolicy& pi, const SmoothingConfig& cfg);

ContractionReport verify_contraction(const TabularMdp& mdp, const TabularPolicy& pi,
                                     const SmoothingConfig& cfg, const ActionGrid& grid,
                                     int trials, Rng& rng);

/// One row of a certification CSV.
struct CheckRow {
  std::string check;
  double sigma = 0.0;
  double observed = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

using BoundReport = std::vector<CheckRow>;

struct LabOptions {
  ActionGrid grid;
  int nodes = 21;
  double tol = 1e-10;
  int max_iter = 10000;

  /// Interpolation budget used in every bound check: 5 h L_Q.
  double grid_tolerance(const TabularMdp& mdp) const { return 5.0 * grid.spacing() * mdp.lip_q(); }
};

double v_error_bound(const TabularMdp& mdp, double sigma);
double q_error_bound(const TabularMdp& mdp, double sigma);

/// Classical and smoothed fixed points on the lab grid.
FixedPointResult classical_fixed_point(const TabularMdp& mdp, const TabularPolicy& pi,
                                       const LabOptions& opt);
FixedPointResult smoothed_fixed_point(const TabularMdp& mdp, const TabularPolicy& pi, double sigma,
                                      const LabOptions& opt);

/// Rows: v_bound (per sigma), simulation_lemma (per sigma), v_route_agreement (per sigma).
BoundReport check_v_error_bound(const TabularMdp& mdp, const TabularPolicy& pi,
                                const std::vector<double>& sigmas, const LabOptions& opt);

/// Rows: q_bound (per sigma).
BoundReport check_q_error_bound(const TabularMdp& mdp, const TabularPolicy& pi,
                                const std::vector<double>& sigmas, const LabOptions& opt);

struct LipschitzReport {
  double max_slope = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Largest |Q(s,a) - Q(s,a')| / |a - a'| over all grid pairs.
LipschitzReport check_q_lipschitz(const QTable& q_sigma, double l_q, double tolerance);

/// J_sigma = sum_s rho0(s) V_sigma(s) from the smoothed fixed point (value route).
double j_sigma(const TabularMdp& mdp, const TabularPolicy& pi, double sigma, int nodes = 21);

/// Central difference of j_sigma with respect to theta.
std::vector<double> j_sigma_gradient_fd(const TabularMdp& mdp, const TabularPolicy& pi,
                                        double sigma, double h = 1e-4, int nodes = 21);

struct GradientEstimate {
  std::vector<double> mean;
  std::vector<double> standard_error;
};

/// Monte Carlo estimate of E_{s~rho^nu, a~nu}[(1/sigma^2) dpi/dtheta (a - pi(s)) Q_sigma(s, a)]
/// from trajectories under nu = N(pi(s), sigma^2), weighting step t by gamma^t.
/// Sampled actions outside `valid` raise DomainError.
GradientEstimate soft_dpg_gradient_oracle(const TabularMdp& mdp, const TabularPolicy& pi,
                                          double sigma, const ActionGrid& valid, int horizon,
                                          int num_trajectories, Rng& rng, int nodes = 21);

/// Exact (quadrature) value of the same expectation with exact visitation.
std::vector<double> soft_dpg_gradient_exact(const TabularMdp& mdp, const TabularPolicy& pi,
                                            double sigma, int nodes = 21);

/// Discounted return of rollouts under nu = N(pi(s), sigma^2) with rho0 starts.
GradientEstimate rollout_return(const TabularMdp& mdp, const TabularPolicy& pi, double sigma,
                                int horizon, int episodes, Rng& rng);

struct DpgLimitRow {
  double sigma = 0.0;
  std::vector<double> gaussian_policy_gradient;
  std::vector<double> dpg;
  double discrepancy = 0.0;
};

struct DpgLimitReport {
  std::vector<DpgLimitRow> rows;
  bool non_increasing = false;
};

/// Gaussian-policy gradient (zeroth-order form, smooth_grad of the Gaussian
/// policy's action value at pi(s), exact discounted visitation) against the
/// deterministic policy gradient from central differences of Q^pi in a.
DpgLimitReport dpg_limit_check(const TabularMdp& mdp, const TabularPolicy& pi,
                               const std::vector<double>& sigmas, int nodes = 41);

/// Per-state residual of the gradient Bellman recursion
/// dV(s) = gamma sum_s' P_sigma(s'|s,pi(s)) dV(s') + d/dtheta E_w[Q_sigma(s, pi_theta(s) + sigma w)]|_{Q fixed}.
std::vector<double> gradient_bellman_residuals(const TabularMdp& mdp, const TabularPolicy& pi,
                                               double sigma, double h = 1e-5, int nodes = 21);

/// sup |Q_sigma(s,a) - E_w[Q(s, a + sigma w)]| over grid actions whose
/// smoothing nodes stay on the grid.
double smoothed_vs_gaussian_smoothed_q(const QTable& q_classical, const QTable& q_sigma,
                                       double sigma, int nodes = 21);

/// Linear-interpolation error estimate h^2 max|Q''| / 8, with the curvature
/// read from the table's second differences.
double interpolation_error(const QTable& q);

}  // namespace sdpg::mdp
