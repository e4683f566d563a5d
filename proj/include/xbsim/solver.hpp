#pragma once

// Non-ideal output current of a single crossbar column.
//
// Circuit: the bitline (BL) is driven from v_drive through r_driver and
// one r_bl segment per row; the sense line (SL) collects cell currents
// through one r_sl segment per row into an op-amp virtual ground at 0 V.
// Cell k connects BL node k to SL node k. Rows draw no steady-state
// current, so each column is solved independently.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "xbsim/devices.hpp"

namespace xbsim::solver {

enum class Topology {
  opposite_ends,  // driver above row 0, sense below row n-1
  same_end,       // driver and sense both above row 0
};

struct ColumnProblem {
  std::vector<std::uint8_t> stored_bits;
  std::vector<std::uint8_t> gate_bits;
  devices::DeviceModel device;
  devices::WireModel wire;
  double v_drive = 0.7;
  Topology topology = Topology::opposite_ends;

  std::size_t n() const { return stored_bits.size(); }
  void validate() const;
};

struct ColumnSolveResult {
  double i_out = 0.0;  // current into the virtual ground
  std::vector<double> v_bl;
  std::vector<double> v_sl;
  std::vector<double> i_cell;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;
};

struct FastOptions {
  double tol = 1e-6;     // max |delta i| / i_on at exit
  int max_iter = 200;
  double damping = 0.5;  // initial relaxation factor in (0, 1]
};

struct DenseOptions {
  double tol = 1e-10;  // max KCL violation / i_on at exit
  int max_iter = 50;
};

// Damped fixed-point iteration between wire IR drops and cell currents.
// The relaxation factor is halved whenever the update grows, which keeps
// the iteration stable under large parasitics.
ColumnSolveResult solve_column_fast(const ColumnProblem& p, const FastOptions& opt = {});

// Newton-Raphson on the full modified nodal formulation (2n node
// voltages plus 2n wire-branch currents), dense LU per step.
ColumnSolveResult solve_column_dense(const ColumnProblem& p, const DenseOptions& opt = {});

std::size_t on_cell_count(const ColumnProblem& p);

// (#cells with stored = 1 and gate = 1) * i_on.
double ideal_column_current(const ColumnProblem& p);

}  // namespace xbsim::solver
