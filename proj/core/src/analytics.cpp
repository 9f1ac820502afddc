#include "impact_game/analytics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <string>

#include "impact_game/errors.hpp"

namespace impact {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Strictly lower triangular ones: (Lo v)_t = sum_{j<t} v_j.
MatrixXd lower_ones(int n) {
  MatrixXd lo = MatrixXd::Zero(n, n);
  for (int t = 0; t < n; ++t) {
    for (int j = 0; j < t; ++j) lo(t, j) = 1.0;
  }
  return lo;
}

// Hessian of a player's own expected IS in its own schedule:
// kappa*(J - I) + 2*alpha*I.
MatrixXd own_hessian(const QuadraticCostModel& m, int n) {
  MatrixXd h = MatrixXd::Constant(n, n, m.kappa);
  h.diagonal().setConstant(2.0 * m.alpha);
  return h;
}

double cross_coupling(const QuadraticCostModel& m) {
  return m.mode == IntraStepMode::kSequential ? 0.5 * m.kappa : 0.0;
}

VectorXd as_vector(std::span<const double> v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Schedule as_schedule(const VectorXd& v) { return Schedule(v.data(), v.data() + v.size()); }

void require_same_length(std::span<const double> a, std::span<const double> b,
                         const char* where) {
  if (a.size() != b.size() || a.empty()) {
    throw ShapeError(std::string(where) + ": schedules must be non-empty and of equal length (" +
                     std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}

// sinh((N - t) A) / sinh(N A) * exp(x t), evaluated without overflow.
double damped_sinh_ratio(double x, double a, int n, int t) {
  if (a == 0.0) return static_cast<double>(n - t) / n;
  const double num = -std::expm1(-2.0 * (n - t) * a);
  const double den = -std::expm1(-2.0 * n * a);
  return std::exp(x * t - a * t) * num / den;
}

// Hessian of w*EIS1 + (1-w)*EIS2 in (v1, v2).
MatrixXd scalarized_hessian(const QuadraticCostModel& m, int n, double w) {
  const MatrixXd b = own_hessian(m, n);
  const MatrixXd lo = lower_ones(n);
  MatrixXd c = m.kappa * (w * lo + (1.0 - w) * lo.transpose());
  c.diagonal().array() += cross_coupling(m);
  MatrixXd h(2 * n, 2 * n);
  h << w * b, c, c.transpose(), (1.0 - w) * b;
  return h;
}

}  // namespace

NashInputs NashInputs::symmetric(const MarketParams& params, double lambda) {
  return {params, lambda, 2.0 * params.q0, 0.0};
}

Schedule InventoryPath::to_schedule() const {
  if (q.size() < 2) throw ShapeError("inventory path needs at least two points");
  Schedule v(q.size() - 1);
  for (std::size_t t = 0; t + 1 < q.size(); ++t) v[t] = q[t] - q[t + 1];
  close_schedule(v, q.front() - q.back());
  return v;
}

PerAgent nash_inventory(const NashInputs& in, int t) {
  const MarketParams& p = in.params;
  if (!(p.alpha > 0.0)) {
    throw SingularParameterError("nash_inventory: alpha must be > 0 (sinh arguments diverge)");
  }
  if (in.lambda < 0.0) throw ConfigError("nash_inventory: lambda must be >= 0");
  if (t < 0 || t > p.n_steps) {
    throw std::out_of_range("nash_inventory: t = " + std::to_string(t) + " outside [0, N]");
  }
  const double var_term = in.lambda * p.sigma * p.sigma;
  const double a_sum = std::sqrt(p.kappa * p.kappa + 12.0 * p.alpha * var_term) / (6.0 * p.alpha);
  const double a_gap = std::sqrt(p.kappa * p.kappa + 4.0 * p.alpha * var_term) / (2.0 * p.alpha);
  const double sum_t =
      in.total_inventory * damped_sinh_ratio(-p.kappa / (6.0 * p.alpha), a_sum, p.n_steps, t);
  const double gap_t =
      in.inventory_gap * damped_sinh_ratio(p.kappa / (2.0 * p.alpha), a_gap, p.n_steps, t);
  return {0.5 * (sum_t + gap_t), 0.5 * (sum_t - gap_t)};
}

std::array<InventoryPath, 2> nash_inventory_paths(const NashInputs& inputs) {
  std::array<InventoryPath, 2> paths;
  for (int t = 0; t <= inputs.params.n_steps; ++t) {
    const PerAgent q = nash_inventory(inputs, t);
    paths[0].q.push_back(q[0]);
    paths[1].q.push_back(q[1]);
  }
  return paths;
}

SchedulePair nash_schedule(const NashInputs& inputs) {
  const auto paths = nash_inventory_paths(inputs);
  return {paths[0].to_schedule(), paths[1].to_schedule()};
}

Schedule twap_schedule(double q0, int n_steps) {
  if (n_steps < 1) throw ConfigError("twap_schedule: N must be >= 1");
  Schedule v(static_cast<std::size_t>(n_steps), q0 / n_steps);
  close_schedule(v, q0);
  return v;
}

void close_schedule(Schedule& v, double target) {
  if (v.empty()) return;
  if (std::accumulate(v.begin(), v.end(), 0.0) == target) return;
  v.back() = target - std::accumulate(v.begin(), v.end() - 1, 0.0);
}

PerAgent expected_is(const QuadraticCostModel& model, std::span<const double> v1,
                     std::span<const double> v2) {
  require_same_length(v1, v2, "expected_is");
  const double s = cross_coupling(model);
  PerAgent cost{0.0, 0.0};
  double traded = 0.0;  // total volume before step t
  for (std::size_t t = 0; t < v1.size(); ++t) {
    const double cross = s * (v1[t] * v2[t]);  // bracketed so a label swap is exact
    cost[0] += model.kappa * v1[t] * traded + model.alpha * v1[t] * v1[t] + cross;
    cost[1] += model.kappa * v2[t] * traded + model.alpha * v2[t] * v2[t] + cross;
    traded += v1[t] + v2[t];
  }
  return cost;
}

PerAgent realized_is(const QuadraticCostModel& model, std::span<const double> v1,
                     std::span<const double> v2, std::span<const AgentId> first_movers) {
  require_same_length(v1, v2, "realized_is");
  if (first_movers.size() != v1.size()) {
    throw ShapeError("realized_is: need one first mover per step");
  }
  const bool sequential = model.mode == IntraStepMode::kSequential;
  PerAgent cost{0.0, 0.0};
  double traded = 0.0;
  for (std::size_t t = 0; t < v1.size(); ++t) {
    cost[0] += model.kappa * v1[t] * traded + model.alpha * v1[t] * v1[t];
    cost[1] += model.kappa * v2[t] * traded + model.alpha * v2[t] * v2[t];
    if (sequential) cost[index_of(other(first_movers[t]))] += model.kappa * v1[t] * v2[t];
    traded += v1[t] + v2[t];
  }
  return cost;
}

double joint_cost(const QuadraticCostModel& model, const SchedulePair& pair) {
  const PerAgent c = expected_is(model, pair.first, pair.second);
  return c[0] + c[1];
}

Schedule best_response(const QuadraticCostModel& model, std::span<const double> opponent,
                       double q0) {
  const int n = static_cast<int>(opponent.size());
  if (n == 0) throw ShapeError("best_response: empty opponent schedule");
  // The own-cost Hessian restricted to sum(v) = const is (2*alpha - kappa) * I.
  if (!(2.0 * model.alpha - model.kappa > 0.0)) {
    throw SingularParameterError("best_response: requires 2*alpha > kappa (got alpha=" +
                                 std::to_string(model.alpha) +
                                 ", kappa=" + std::to_string(model.kappa) + ")");
  }
  const VectorXd u = as_vector(opponent);
  VectorXd linear = model.kappa * (lower_ones(n) * u) + cross_coupling(model) * u;

  MatrixXd kkt = MatrixXd::Zero(n + 1, n + 1);
  kkt.topLeftCorner(n, n) = own_hessian(model, n);
  kkt.block(0, n, n, 1).setOnes();
  kkt.block(n, 0, 1, n).setOnes();
  VectorXd rhs(n + 1);
  rhs << -linear, q0;

  const VectorXd sol = kkt.partialPivLu().solve(rhs);
  Schedule v = as_schedule(sol.head(n));
  close_schedule(v, q0);
  return v;
}

SchedulePair discrete_nash_schedule(const QuadraticCostModel& model, double q0, int n) {
  if (n < 1) throw ConfigError("discrete_nash_schedule: N must be >= 1");
  if (!(2.0 * model.alpha - model.kappa > 0.0)) {
    throw SingularParameterError("discrete_nash_schedule: requires 2*alpha > kappa");
  }
  const MatrixXd h = own_hessian(model, n);
  MatrixXd c = model.kappa * lower_ones(n);
  c.diagonal().array() += cross_coupling(model);

  const int dim = 2 * n + 2;
  MatrixXd kkt = MatrixXd::Zero(dim, dim);
  kkt.block(0, 0, n, n) = h;
  kkt.block(0, n, n, n) = c;
  kkt.block(n, 0, n, n) = c;
  kkt.block(n, n, n, n) = h;
  kkt.block(0, 2 * n, n, 1).setOnes();
  kkt.block(n, 2 * n + 1, n, 1).setOnes();
  kkt.block(2 * n, 0, 1, n).setOnes();
  kkt.block(2 * n + 1, n, 1, n).setOnes();
  VectorXd rhs = VectorXd::Zero(dim);
  rhs(2 * n) = q0;
  rhs(2 * n + 1) = q0;

  const VectorXd sol = kkt.fullPivLu().solve(rhs);
  SchedulePair pair{as_schedule(sol.segment(0, n)), as_schedule(sol.segment(n, n))};
  close_schedule(pair.first, q0);
  close_schedule(pair.second, q0);
  return pair;
}

bool scalarization_is_convex(const QuadraticCostModel& model, int n, double w) {
  if (n < 2) return model.alpha > 0.0;  // a single step leaves nothing to optimize
  // Basis of {sum v1 = 0} x {sum v2 = 0}: e_i - e_last within each block.
  const int r = n - 1;
  MatrixXd z = MatrixXd::Zero(2 * n, 2 * r);
  for (int i = 0; i < r; ++i) {
    z(i, i) = 1.0;
    z(n - 1, i) = -1.0;
    z(n + i, r + i) = 1.0;
    z(2 * n - 1, r + i) = -1.0;
  }
  const MatrixXd reduced = z.transpose() * scalarized_hessian(model, n, w) * z;
  Eigen::LLT<MatrixXd> llt(reduced);
  if (llt.info() != Eigen::Success) return false;
  return (llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all();
}

double critical_weight(const QuadraticCostModel& model, int n) {
  if (!scalarization_is_convex(model, n, 0.5)) {
    throw SingularParameterError(
        "critical_weight: the equal-weight scalarization is not convex for these parameters");
  }
  double lo = 0.0;
  double hi = 0.5;
  if (scalarization_is_convex(model, n, 1e-12)) return 1e-12;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (scalarization_is_convex(model, n, mid) ? hi : lo) = mid;
  }
  return hi;
}

std::vector<double> front_weight_grid(const QuadraticCostModel& model, int n, int count,
                                      double margin) {
  if (count < 1) throw ConfigError("front_weight_grid: count must be >= 1");
  if (!(margin > 0.0 && margin < 1.0)) {
    throw ConfigError("front_weight_grid: margin must lie in (0, 1)");
  }
  std::vector<double> w(static_cast<std::size_t>(count), 0.5);
  if (count == 1) return w;
  const double wc = critical_weight(model, n);
  const double lo = wc + margin * (0.5 - wc);
  const double h = (1.0 - 2.0 * lo) / (count - 1);
  for (int i = 0; i < count / 2; ++i) {
    w[static_cast<std::size_t>(i)] = lo + i * h;
    w[static_cast<std::size_t>(count - 1 - i)] = 1.0 - w[static_cast<std::size_t>(i)];
  }
  return w;
}

std::vector<ParetoFrontPoint> pareto_front(const QuadraticCostModel& model, double q0, int n,
                                           std::span<const double> weights) {
  if (weights.empty()) throw EmptyInputError("pareto_front: empty weight grid");
  if (n < 1) throw ConfigError("pareto_front: N must be >= 1");

  const int dim = 2 * n + 2;
  std::vector<ParetoFrontPoint> points;
  points.reserve(weights.size());
  for (const double w : weights) {
    if (!(w > 0.0 && w < 1.0)) {
      throw ConfigError("pareto_front: weight " + std::to_string(w) + " outside (0, 1)");
    }
    if (!scalarization_is_convex(model, n, w)) {
      throw SingularParameterError("pareto_front: scalarized problem is unbounded at w = " +
                                   std::to_string(w));
    }
    MatrixXd kkt = MatrixXd::Zero(dim, dim);
    kkt.topLeftCorner(2 * n, 2 * n) = scalarized_hessian(model, n, w);
    kkt.block(0, 2 * n, n, 1).setOnes();
    kkt.block(n, 2 * n + 1, n, 1).setOnes();
    kkt.block(2 * n, 0, 1, n).setOnes();
    kkt.block(2 * n + 1, n, 1, n).setOnes();
    VectorXd rhs = VectorXd::Zero(dim);
    rhs(2 * n) = q0;
    rhs(2 * n + 1) = q0;
    const VectorXd sol = kkt.fullPivLu().solve(rhs);

    ParetoFrontPoint pt;
    pt.weight = w;
    pt.schedules = {as_schedule(sol.segment(0, n)), as_schedule(sol.segment(n, n))};
    close_schedule(pt.schedules.first, q0);
    close_schedule(pt.schedules.second, q0);
    pt.eis = expected_is(model, pt.schedules.first, pt.schedules.second);
    points.push_back(std::move(pt));
  }

  auto dominates = [](const PerAgent& a, const PerAgent& b) {
    return a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1]);
  };
  std::vector<ParetoFrontPoint> front;
  front.reserve(points.size());
  for (const auto& p : points) {
    bool dominated = false;
    for (const auto& other_pt : points) {
      if (dominates(other_pt.eis, p.eis)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(p);
  }
  return front;
}

double fritz_john_residual(const QuadraticCostModel& model, const SchedulePair& pair, double q0) {
  require_same_length(pair.first, pair.second, "fritz_john_residual");
  const int n = static_cast<int>(pair.first.size());
  const VectorXd v1 = as_vector(pair.first);
  const VectorXd v2 = as_vector(pair.second);
  const MatrixXd b = own_hessian(model, n);
  const MatrixXd lo = lower_ones(n);
  const double s = cross_coupling(model);

  MatrixXd l = MatrixXd::Zero(2 * n + 2, 4);
  // grad EIS1
  l.col(0).segment(0, n) = b * v1 + model.kappa * (lo * v2) + s * v2;
  l.col(0).segment(n, n) = model.kappa * (lo.transpose() * v1) + s * v1;
  // grad EIS2
  l.col(1).segment(0, n) = model.kappa * (lo.transpose() * v2) + s * v2;
  l.col(1).segment(n, n) = b * v2 + model.kappa * (lo * v1) + s * v1;
  // constraints and their values
  l.col(2).segment(0, n).setOnes();
  l.col(3).segment(n, n).setOnes();
  l(2 * n, 2) = v1.sum() - q0;
  l(2 * n + 1, 3) = v2.sum() - q0;

  for (int c = 0; c < 4; ++c) {
    const double norm = l.col(c).norm();
    if (norm > 0.0) l.col(c) /= norm;
  }
  return (l.transpose() * l).determinant();
}

std::string_view to_string(EquilibriumRegion region) {
  switch (region) {
    case EquilibriumRegion::kCollusive:
      return "collusive";
    case EquilibriumRegion::kBothBetter:
      return "Q3";
    case EquilibriumRegion::kPredatoryAgent1:
      return "Q2";
    case EquilibriumRegion::kPredatoryAgent2:
      return "Q4";
    case EquilibriumRegion::kBothWorse:
      return "Q1";
  }
  return "unknown";
}

EquilibriumRegion parse_region(std::string_view text) {
  for (const auto r : kAllRegions) {
    if (to_string(r) == text) return r;
  }
  throw ConfigError("unknown region label '" + std::string(text) + "'");
}

EquilibriumRegion classify_point(PerAgent is, PerAgent nash_is, PerAgent pareto_is) {
  if (!(pareto_is[0] <= nash_is[0] && pareto_is[1] <= nash_is[1])) {
    throw ConfigError("classify_point: Pareto reference must not exceed the Nash reference");
  }
  const bool better1 = is[0] <= nash_is[0];
  const bool better2 = is[1] <= nash_is[1];
  if (better1 && better2) {
    const bool inside = is[0] >= pareto_is[0] && is[1] >= pareto_is[1];
    return inside ? EquilibriumRegion::kCollusive : EquilibriumRegion::kBothBetter;
  }
  if (better1) return EquilibriumRegion::kPredatoryAgent1;
  if (better2) return EquilibriumRegion::kPredatoryAgent2;
  return EquilibriumRegion::kBothWorse;
}

PerAgent centroid(std::span<const PerAgent> points) {
  if (points.empty()) throw EmptyInputError("centroid: no points");
  PerAgent sum{0.0, 0.0};
  for (const auto& p : points) {
    sum[0] += p[0];
    sum[1] += p[1];
  }
  const auto n = static_cast<double>(points.size());
  return {sum[0] / n, sum[1] / n};
}

}  // namespace impact
