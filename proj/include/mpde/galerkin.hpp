#pragma once

// Galerkin projection of the two-time-scale MPDE onto a periodic basis in the
// fast time.  With the multivariate excitation chosen as c^(t1, t2) = c(t2)
// the reduced system
//
//     calA W' + calB W = calC,   calA = A (x) I,  calB = B (x) I + A (x) Q
//
// has a constant right-hand side.  W is stacked state-major: coefficient k of
// state j lives at j * Nb + k.

#include "mpde/basis.hpp"
#include "mpde/circuit.hpp"
#include "mpde/linalg.hpp"
#include "mpde/odesolver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace mpde {

class DutyMismatch : public std::invalid_argument {
public:
  explicit DutyMismatch(const std::string &w) : std::invalid_argument(w) {}
};

struct GalerkinSystem {
  DenseMatrix calA;
  DenseMatrix calB;
  DenseVector calC;
  BasisSet basis;
  DenseMatrix gram;      // I = Ts * int P P^T
  DenseMatrix stiffness; // Q = -int P' P^T
  int states = 0;
  int nb = 0;

  [[nodiscard]] Eigen::Index index(int state, int k) const {
    return static_cast<Eigen::Index>(state) * nb + k;
  }
};

inline GalerkinSystem assemble(const CircuitModel &circuit, const BasisSet &basis) {
  circuit.validate();
  if (std::abs(basis.duty - circuit.duty) > 1e-12)
    throw DutyMismatch("assemble: basis duty " + std::to_string(basis.duty) +
                       " != circuit duty " + std::to_string(circuit.duty));
  if (basis.size() == 0)
    throw DimensionMismatch("assemble: empty basis");

  const double ts = circuit.period();
  GalerkinSystem sys;
  sys.basis = basis;
  sys.states = circuit.states();
  sys.nb = static_cast<int>(basis.size());
  sys.gram = gram_matrix(basis, ts);
  sys.stiffness = stiffness_matrix(basis);
  sys.calA = kron(circuit.A, sys.gram);
  sys.calB = kron(circuit.B, sys.gram) + kron(circuit.A, sys.stiffness);

  const DenseVector on_part = ts * segment_integrals(basis, 0.0, circuit.duty);
  const DenseVector off_part = ts * segment_integrals(basis, circuit.duty, 1.0);
  sys.calC.resize(static_cast<Eigen::Index>(sys.states) * sys.nb);
  for (int j = 0; j < sys.states; ++j)
    sys.calC.segment(sys.index(j, 0), sys.nb) =
        circuit.c_on(j) * on_part + circuit.c_off(j) * off_part;
  return sys;
}

/// Periodic steady state: calB W = calC.
inline DenseVector steady_state(const GalerkinSystem &sys) {
  return lu_solve(sys.calB, sys.calC);
}

/// Sets w_{j,0} so that the expansion reproduces x0 at t1 = t2 = 0.
inline DenseVector apply_initial_condition(DenseVector w, const GalerkinSystem &sys,
                                           const DenseVector &x0) {
  if (x0.size() != sys.states || w.size() != sys.calC.size())
    throw DimensionMismatch("apply_initial_condition: size mismatch");
  const DenseVector p = eval(sys.basis, 0.0);
  for (int j = 0; j < sys.states; ++j) {
    double ripple = 0.0;
    for (int k = 1; k < sys.nb; ++k)
      ripple += p(k) * w(sys.index(j, k));
    w(sys.index(j, 0)) = x0(j) - ripple;
  }
  return w;
}

class MultirateSolution {
public:
  MultirateSolution(Trajectory coefficients, BasisSet basis, CircuitModel circuit)
      : traj_(std::move(coefficients)), basis_(std::move(basis)),
        circuit_(std::move(circuit)), nb_(static_cast<int>(basis_.size())) {}

  [[nodiscard]] const Trajectory &coefficients() const noexcept { return traj_; }
  [[nodiscard]] const BasisSet &basis() const noexcept { return basis_; }
  [[nodiscard]] const CircuitModel &circuit() const noexcept { return circuit_; }

  /// Coefficient vector W_j(t1) of one state.
  [[nodiscard]] DenseVector state_coefficients(const DenseVector &w, int j) const {
    return w.segment(static_cast<Eigen::Index>(j) * nb_, nb_);
  }

  /// x^(t1, t2) for all states.
  [[nodiscard]] DenseVector surface(double t1, double t2) const {
    return combine(traj_(t1), eval(basis_, circuit_.relative_time(t2)));
  }

  /// Combine a coefficient vector with precomputed basis values P(tau).
  [[nodiscard]] DenseVector combine(const DenseVector &w, const DenseVector &p) const {
    DenseVector x(circuit_.states());
    for (int j = 0; j < circuit_.states(); ++j)
      x(j) = p.dot(w.segment(static_cast<Eigen::Index>(j) * nb_, nb_));
    return x;
  }

private:
  Trajectory traj_;
  BasisSet basis_;
  CircuitModel circuit_;
  int nb_;
};

/// x(t) = x^(t, t).
inline DenseVector reconstruct(const MultirateSolution &sol, double t) {
  return sol.surface(t, t);
}

inline DenseVector eval_surface(const MultirateSolution &sol, double t1, double t2) {
  return sol.surface(t1, t2);
}

/// Assemble, initialize from the corrected steady state and integrate the
/// reduced system over [0, t_end].
inline MultirateSolution solve_mpde(const CircuitModel &circuit, const BasisSet &basis,
                                    double t_end, SolverConfig config) {
  const GalerkinSystem sys = assemble(circuit, basis);
  const DenseVector w0 =
      apply_initial_condition(steady_state(sys), sys, circuit.x0);
  if (!config.initial_step && t_end > 0.0)
    config.initial_step = t_end / 100.0;
  config.discontinuity_times.reset();
  Trajectory traj = integrate(sys.calA, sys.calB, Forcing(sys.calC), w0, 0.0,
                              t_end, config);
  return {std::move(traj), basis, circuit};
}

/// Conventional time stepping of A x' + B x = c(t), steps clamped onto the
/// switching instants.
inline Trajectory solve_timestep(const CircuitModel &circuit, double t_end,
                                 SolverConfig config) {
  circuit.validate();
  if (!config.initial_step && t_end > 0.0)
    config.initial_step = std::min(circuit.period() / 100.0, t_end);
  if (!config.discontinuity_times)
    config.discontinuity_times = EventGrid{circuit.period(), {0.0, circuit.duty}};
  return integrate(circuit.A, circuit.B,
                   Forcing::two_level(circuit.c_on, circuit.c_off,
                                      circuit.period(), circuit.duty),
                   circuit.x0, 0.0, t_end, config);
}

} // namespace mpde
