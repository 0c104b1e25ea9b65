#pragma once

#include <vector>

#include "radner/agents.hpp"
#include "radner/lattice.hpp"

namespace radner {

// Explicit backward scheme for the quadratic driver
//   f = 1/2 nu^2 - 1/2 lambda^2 + lambda (mu - eta):
// per node, (mu, nu) are the one-step representation coefficients of
// Y_{t+dt} and Y_t = E_t[Y_{t+dt}] - f dt. The terminal condition is met
// bit-exactly. Cross coefficients stay out of the driver and are reported
// as a discretization diagnostic.

struct SingleSolution {
  AdaptedProcess y;
  PredictablePair z;       // (mu, nu)
  PredictableField rho;    // primal strategy, lambda - mu
  PredictableField driver; // realized driver value per node
  double max_cross = 0.0;
};

SingleSolution solve_single(const PredictableField& lambda,
                            const TerminalField& g, const Tree& tree);

struct SystemSolution {
  std::vector<AdaptedProcess> y;
  std::vector<PredictablePair> z;  // (mu^i, nu^i)
  PredictableField lambda;         // A[mu], set per node during the sweep
  double max_cross = 0.0;
  // |A[rho]| = |lambda - A[mu]|; zero by construction for coupled sweeps.
  double max_clearing_residual = 0.0;
};

// Single backward sweep of the coupled system; lambda = A[mu] at each node.
SystemSolution solve_system_direct(const RiskAwarePopulation& pop);

// Same sweep with exogenous eta in the driver and expectations and
// representations taken under the given measure. eta must hold one field
// per agent. With eta identically zero and the reference measure this is
// bit-identical to solve_system_direct.
SystemSolution solve_eta_system(const RiskAwarePopulation& pop,
                                const std::vector<PredictableField>& eta,
                                const Measure& m);

// Per-agent solutions of the single-agent equation under a fixed lambda;
// the building block of the excess-demand map.
std::vector<SingleSolution> solve_population(const PredictableField& lambda,
                                             const RiskAwarePopulation& pop);

}  // namespace radner
