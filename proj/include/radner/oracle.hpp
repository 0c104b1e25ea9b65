#pragma once

#include <vector>

#include "radner/agents.hpp"
#include "radner/lattice.hpp"

namespace radner {

// Brute-force ground truth, independent of the BSDE machinery: per-node
// exponential-utility maximization by safeguarded Newton and, on tiny trees,
// an exhaustive market-clearing equilibrium by scalar root finding.
struct OracleSolution {
  std::vector<AdaptedProcess> value;       // E[U] continuation per node
  std::vector<PredictableField> strategy;  // optimizer rho* per node
  PredictableField lambda;                 // clearing price of risk, if solved
  double max_clearing_residual = 0.0;
};

// Dynamic program for one agent against a fixed lambda. Tree capped at
// 4^8 paths.
OracleSolution optimal_strategy_dp(const PredictableField& lambda,
                                   const TerminalField& g);

// Node-wise market clearing across agents; aggregate demand is bracketed,
// root-found and checked for strict monotonicity. Tree capped at 4^4 paths.
OracleSolution brute_force_equilibrium(const RiskAwarePopulation& pop);

// Utility value at the root of following a fixed strategy rho under lambda.
double strategy_value(const PredictableField& rho,
                      const PredictableField& lambda, const TerminalField& g);

}  // namespace radner
