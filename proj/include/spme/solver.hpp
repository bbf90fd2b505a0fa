// Semi-implicit Euler-Maruyama time stepping for the Ito-form equation:
// the stiff drift Delta(Phi(u) + (eps + sigma^2/2) u) is implicit via Newton
// on the monotone system, transport and noise terms are explicit.
#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "spme/grid.hpp"
#include "spme/model.hpp"
#include "spme/noise.hpp"

namespace spme {

enum class Scheme { FiniteDifference, GalerkinSpectral };

struct SolverConfig {
  double dt = 1e-3;
  int n_interior = 63;         // interior nodes per axis
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  double jacobian_floor = 1e-12;
  Scheme scheme = Scheme::FiniteDifference;
  int n_modes = 0;             // GalerkinSpectral: number of retained sine modes
  int record_every = 1;
  std::vector<double> p_list{1.0, 2.0};
  bool record_fields = false;
  bool track_hminus1 = false;  // H^-1 norm per recorded step (costs a Poisson solve)
  bool track_ito = false;      // per-step Ito-identity inputs for the given p
  double ito_p = 2.0;
  std::uint64_t seed = 0;
};

struct NormRecord {
  double t = 0.0;
  std::vector<double> lp;  // one per cfg.p_list entry
  double inf = 0.0;
  double hm1 = 0.0;
  int newton_iters = 0;
};

struct ItoStepRecord {
  double lp_pow = 0.0;   // ||u_n||_p^p before the step
  double drift = 0.0;    // drift + quadratic-variation integrand at step n
  double mart = 0.0;     // martingale increment over step n
};

struct Trajectory {
  std::vector<double> times;            // recorded times
  std::vector<NormRecord> records;
  std::vector<Field> fields;            // only if record_fields
  std::vector<double> step_times;       // every step (including t = 0)
  std::vector<double> step_inf;         // ||u||_inf at every step
  std::vector<ItoStepRecord> ito;       // only if track_ito; one per step
  double final_lp_pow = 0.0;            // ||u_T||_p^p closing the Ito records
  double ito_p = 0.0;
  double dt = 0.0;
  double sup_inf = 0.0;                 // max over all steps of ||u||_inf
};

struct StepError : std::runtime_error {
  double t;
  double residual;
  StepError(const std::string& msg, double t_, double res)
      : std::runtime_error(msg), t(t_), residual(res) {}
};

// Solves v - dt * Laplacian_h(Psi(v)) = rhs for a non-decreasing Psi.
Field newton_solve(const Grid& g, const std::function<double(double)>& psi,
                   const std::function<double(double)>& psi_prime, double dt,
                   const Field& rhs, const SolverConfig& cfg, int* iters_out = nullptr);

Field semi_implicit_step(const Field& state, double t, const ProblemSpec& spec,
                         const SolverConfig& cfg, const Grid& g,
                         const NoiseIncrements& dw, int* newton_iters = nullptr);

Trajectory solve_path(const ProblemSpec& spec, const SolverConfig& cfg, int path_index);

// Orthogonal projection (in the h-weighted inner product) onto the first
// n_modes discrete sine eigenmodes of -Laplacian_h, ordered by eigenvalue.
Field galerkin_project(const Grid& g, const Field& v, int n_modes);

// Grid and initial condition helpers shared with the estimators.
Grid grid_for(const ProblemSpec& spec, const SolverConfig& cfg);
Field initial_field(const ProblemSpec& spec, const SolverConfig& cfg, const Grid& g,
                    int path_index);

}  // namespace spme
