#include "xbsim/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "xbsim/error.hpp"

namespace xbsim::solver {

void ColumnProblem::validate() const {
  if (stored_bits.size() != gate_bits.size()) {
    throw ShapeError("column problem: stored and gate vectors differ in length");
  }
  if (stored_bits.empty()) throw ShapeError("column problem: empty column");
  if (!(v_drive > 0.0)) throw DomainError("column problem: v_drive must be > 0");
  for (std::size_t k = 0; k < n(); ++k) {
    if (stored_bits[k] > 1 || gate_bits[k] > 1) {
      throw DomainError("column problem: bits must be 0 or 1");
    }
  }
  device.validate();
  wire.validate();
}

std::size_t on_cell_count(const ColumnProblem& p) {
  std::size_t count = 0;
  for (std::size_t k = 0; k < p.n(); ++k) count += p.stored_bits[k] & p.gate_bits[k];
  return count;
}

double ideal_column_current(const ColumnProblem& p) {
  p.validate();
  return static_cast<double>(on_cell_count(p)) * p.device.i_on;
}

namespace {

// Node voltages implied by a set of cell currents.
void node_voltages(const ColumnProblem& p, const std::vector<double>& i_cell,
                   std::vector<double>& v_bl, std::vector<double>& v_sl) {
  const std::size_t n = p.n();
  const auto& w = p.wire;
  double total = 0.0;
  for (double i : i_cell) total += i;

  // BL segment ahead of row k carries every cell current at and beyond k.
  double beyond = total;
  double v = p.v_drive - w.r_driver * total;
  for (std::size_t k = 0; k < n; ++k) {
    v -= w.r_bl_per_cell * beyond;
    v_bl[k] = v;
    beyond -= i_cell[k];
  }

  if (p.topology == Topology::opposite_ends) {
    // SL segment below row k carries every cell current at and before k.
    double before = total;
    double s = 0.0;
    for (std::size_t k = n; k-- > 0;) {
      s += w.r_sl_per_cell * before;
      v_sl[k] = s;
      before -= i_cell[k];
    }
  } else {
    double after = total;
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      s += w.r_sl_per_cell * after;
      v_sl[k] = s;
      after -= i_cell[k];
    }
  }
}

}  // namespace

ColumnSolveResult solve_column_fast(const ColumnProblem& p, const FastOptions& opt) {
  p.validate();
  if (!(opt.tol > 0.0)) throw DomainError("solve_column_fast: tol must be > 0");
  if (!(opt.damping > 0.0 && opt.damping <= 1.0)) {
    throw DomainError("solve_column_fast: damping must be in (0, 1]");
  }
  const std::size_t n = p.n();
  ColumnSolveResult r;
  r.v_bl.assign(n, 0.0);
  r.v_sl.assign(n, 0.0);
  r.i_cell.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    r.i_cell[k] = devices::conduction_current(p.device, p.stored_bits[k], p.gate_bits[k], p.v_drive);
  }

  std::vector<double> fresh(n);
  double alpha = opt.damping;
  double previous = std::numeric_limits<double>::infinity();
  const double scale = p.device.i_on;
  for (int it = 1; it <= opt.max_iter; ++it) {
    node_voltages(p, r.i_cell, r.v_bl, r.v_sl);
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      fresh[k] = devices::conduction_current(p.device, p.stored_bits[k], p.gate_bits[k],
                                             r.v_bl[k] - r.v_sl[k]);
      worst = std::max(worst, std::abs(fresh[k] - r.i_cell[k]));
    }
    r.iterations = it;
    r.residual = worst / scale;
    if (r.residual < opt.tol) {
      r.i_cell = fresh;
      node_voltages(p, r.i_cell, r.v_bl, r.v_sl);
      r.converged = true;
      break;
    }
    if (r.residual > previous) alpha = std::max(alpha * 0.5, 1e-4);
    previous = r.residual;
    for (std::size_t k = 0; k < n; ++k) r.i_cell[k] += alpha * (fresh[k] - r.i_cell[k]);
  }
  r.i_out = 0.0;
  for (double i : r.i_cell) r.i_out += i;
  return r;
}

ColumnSolveResult solve_column_dense(const ColumnProblem& p, const DenseOptions& opt) {
  p.validate();
  const std::size_t n = p.n();
  const auto N = static_cast<Eigen::Index>(4 * n);
  const auto& w = p.wire;
  const bool opposite = p.topology == Topology::opposite_ends;
  const double r_sl = w.r_sl_per_cell;

  // Unknown layout: [v_bl | v_sl | i_b | i_s], each of length n.
  auto vb = [&](std::size_t k) { return static_cast<Eigen::Index>(k); };
  auto vs = [&](std::size_t k) { return static_cast<Eigen::Index>(n + k); };
  auto ib = [&](std::size_t k) { return static_cast<Eigen::Index>(2 * n + k); };
  auto is = [&](std::size_t k) { return static_cast<Eigen::Index>(3 * n + k); };
  auto r_b = [&](std::size_t k) { return k == 0 ? w.r_driver + w.r_bl_per_cell : w.r_bl_per_cell; };

  Eigen::VectorXd x(N);
  {
    double total = 0.0;
    std::vector<double> ideal(n);
    for (std::size_t k = 0; k < n; ++k) {
      ideal[k] = devices::conduction_current(p.device, p.stored_bits[k], p.gate_bits[k], p.v_drive);
      total += ideal[k];
    }
    double beyond = total;
    double before = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      x(vb(k)) = p.v_drive;
      x(vs(k)) = 0.0;
      x(ib(k)) = beyond;
      before += ideal[k];
      x(is(k)) = opposite ? before : beyond;
      beyond -= ideal[k];
    }
  }

  std::vector<double> cell(n);
  std::vector<double> slope(n);
  auto evaluate_cells = [&](const Eigen::VectorXd& s, bool with_slope) {
    for (std::size_t k = 0; k < n; ++k) {
      const double v = s(vb(k)) - s(vs(k));
      const bool st = p.stored_bits[k] != 0;
      const bool g = p.gate_bits[k] != 0;
      cell[k] = devices::conduction_current(p.device, st, g, v);
      if (with_slope) {
        constexpr double h = 1e-6;
        slope[k] = (devices::conduction_current(p.device, st, g, v + h) -
                    devices::conduction_current(p.device, st, g, v - h)) /
                   (2 * h);
      }
    }
  };

  // Rows [0, n): BL KCL, [n, 2n): SL KCL, [2n, 3n): BL branches, [3n, 4n): SL branches.
  auto residual = [&](const Eigen::VectorXd& s, Eigen::VectorXd& F) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      F(row) = s(ib(k)) - (k + 1 < n ? s(ib(k + 1)) : 0.0) - cell[k];
      if (opposite) {
        F(static_cast<Eigen::Index>(n) + row) = cell[k] + (k > 0 ? s(is(k - 1)) : 0.0) - s(is(k));
      } else {
        F(static_cast<Eigen::Index>(n) + row) = cell[k] + (k + 1 < n ? s(is(k + 1)) : 0.0) - s(is(k));
      }
      const double upstream = k == 0 ? p.v_drive : s(vb(k - 1));
      F(static_cast<Eigen::Index>(2 * n) + row) = upstream - s(vb(k)) - r_b(k) * s(ib(k));
      double downstream = 0.0;
      if (opposite) {
        downstream = k + 1 < n ? s(vs(k + 1)) : 0.0;
      } else {
        downstream = k > 0 ? s(vs(k - 1)) : 0.0;
      }
      F(static_cast<Eigen::Index>(3 * n) + row) = s(vs(k)) - downstream - r_sl * s(is(k));
    }
  };
  // KCL rows in units of i_on, branch rows in units of v_drive.
  auto merit = [&](const Eigen::VectorXd& F) {
    const auto half = static_cast<Eigen::Index>(2 * n);
    const double kcl = F.head(half).cwiseAbs().maxCoeff() / p.device.i_on;
    const double kvl = F.tail(half).cwiseAbs().maxCoeff() / p.v_drive;
    return std::max(kcl, kvl);
  };

  ColumnSolveResult r;
  Eigen::VectorXd F(N);
  Eigen::MatrixXd J(N, N);
  evaluate_cells(x, true);
  residual(x, F);
  double current_merit = merit(F);

  for (int it = 1; it <= opt.max_iter; ++it) {
    r.iterations = it;
    if (current_merit < opt.tol) {
      r.converged = true;
      break;
    }
    J.setZero();
    for (std::size_t k = 0; k < n; ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      const auto sl_row = static_cast<Eigen::Index>(n) + row;
      const auto bb_row = static_cast<Eigen::Index>(2 * n) + row;
      const auto sb_row = static_cast<Eigen::Index>(3 * n) + row;
      J(row, ib(k)) = 1.0;
      if (k + 1 < n) J(row, ib(k + 1)) = -1.0;
      J(row, vb(k)) -= slope[k];
      J(row, vs(k)) += slope[k];

      J(sl_row, vb(k)) += slope[k];
      J(sl_row, vs(k)) -= slope[k];
      J(sl_row, is(k)) = -1.0;
      if (opposite && k > 0) J(sl_row, is(k - 1)) = 1.0;
      if (!opposite && k + 1 < n) J(sl_row, is(k + 1)) = 1.0;

      if (k > 0) J(bb_row, vb(k - 1)) = 1.0;
      J(bb_row, vb(k)) = -1.0;
      J(bb_row, ib(k)) = -r_b(k);

      J(sb_row, vs(k)) = 1.0;
      if (opposite && k + 1 < n) J(sb_row, vs(k + 1)) = -1.0;
      if (!opposite && k > 0) J(sb_row, vs(k - 1)) = -1.0;
      J(sb_row, is(k)) = -r_sl;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    const Eigen::VectorXd step = lu.solve(-F);
    if (!step.allFinite() || (J * step + F).cwiseAbs().maxCoeff() > 1e-6 * (1.0 + F.cwiseAbs().maxCoeff())) {
      throw SolverError("solve_column_dense: singular Jacobian");
    }
    // Backtracking keeps the merit function decreasing.
    double t = 1.0;
    Eigen::VectorXd trial(N);
    Eigen::VectorXd trial_F(N);
    double trial_merit = current_merit;
    for (int halvings = 0; halvings < 30; ++halvings) {
      trial = x + t * step;
      evaluate_cells(trial, false);
      residual(trial, trial_F);
      trial_merit = merit(trial_F);
      if (trial_merit < current_merit || trial_merit < opt.tol) break;
      t *= 0.5;
    }
    x = trial;
    evaluate_cells(x, true);
    residual(x, F);
    current_merit = merit(F);
  }
  if (!r.converged && current_merit < opt.tol) r.converged = true;

  r.v_bl.resize(n);
  r.v_sl.resize(n);
  r.i_cell.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    r.v_bl[k] = x(vb(k));
    r.v_sl[k] = x(vs(k));
    r.i_cell[k] = cell[k];
  }
  r.i_out = opposite ? x(is(n - 1)) : x(is(0));
  r.residual = F.head(static_cast<Eigen::Index>(2 * n)).cwiseAbs().maxCoeff() / p.device.i_on;
  return r;
}

}  // namespace xbsim::solver
