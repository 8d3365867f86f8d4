#pragma once

#include "lab/errors.hpp"
#include "lab/lrcontrol.hpp"

#include <memory>

namespace lab::detail {

// One control segment of length d on E_lambda (modes [0, dim)).
struct StageOutput {
  Eigen::VectorXd coeffs;
  Eigen::VectorXd effect;
  Eigen::VectorXd end_state;
  double cost2 = 0;
  std::shared_ptr<const ExtendedCoefficients> extended;
};

class StageSolver {
 public:
  virtual ~StageSolver() = default;
  // Solves G c = -e^{-d Lambda} v_start on E_lambda and propagates to the segment end. Extended solvers
  // raise their precision until the H^{-1} norm of the E_lambda part left at the end is below abs_tol.
  virtual StageOutput solve(const Eigen::VectorXd& v_start, double abs_tol) const = 0;
  virtual int digits() const = 0;
  virtual int level() const { return 0; }
};

// `code` is raised when the Gramian is singular at working precision.
std::unique_ptr<StageSolver> make_double_stage(const SpectralModel& sm, Eigen::Index dim, double d, ErrorCode code,
                                               const std::string& where);
// Starts at precision tier `level` (0 = lowest).
std::unique_ptr<StageSolver> make_extended_stage(const SpectralModel& sm, Eigen::Index dim, double d,
                                                 ErrorCode code, const std::string& where, int level = 0);

// Control contribution at time t in [start, end] of an extended segment.
Eigen::VectorXd extended_partial_effect(const SpectralModel& sm, const ControlSegment& seg, double t);

}  // namespace lab::detail
