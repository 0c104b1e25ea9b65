#pragma once

#include <span>
#include <vector>

#include "radner/lattice.hpp"

namespace radner {

// Agents in wealth units: risk tolerance delta^i > 0 and terminal endowment.
class Population {
 public:
  Population(const Tree& tree, std::vector<double> delta,
             std::vector<TerminalField> endowment);

  const Tree& tree() const { return tree_; }
  std::size_t size() const { return delta_.size(); }
  const std::vector<double>& delta() const { return delta_; }
  const std::vector<TerminalField>& endowment() const { return endowment_; }

 private:
  Tree tree_;
  std::vector<double> delta_;
  std::vector<TerminalField> endowment_;
};

// Risk-aware parametrization: endowments divided by risk tolerance,
// weights alpha^i = delta^i / sum_j delta^j (so they sum to one).
class RiskAwarePopulation {
 public:
  RiskAwarePopulation(const Tree& tree, std::vector<double> alpha,
                      std::vector<TerminalField> g);

  const Tree& tree() const { return tree_; }
  std::size_t size() const { return alpha_.size(); }
  const std::vector<double>& alpha() const { return alpha_; }
  const std::vector<TerminalField>& g() const { return g_; }

  // Aggregation operator A[x] = sum_i alpha^i x^i.
  double aggregate(std::span<const double> x) const;
  TerminalField aggregate(const std::vector<TerminalField>& x) const;
  PredictableField aggregate(const std::vector<PredictableField>& x) const;

 private:
  Tree tree_;
  std::vector<double> alpha_;
  std::vector<TerminalField> g_;
};

RiskAwarePopulation reparametrize(const Population& pop);

// Certainty-equivalent process X_t = -log E_t[exp(-G)] together with its
// exact (m, n) coefficients from the density martingale. drift_residual is
// the worst one-step defect of the continuous-time drift 1/2 (m^2 + n^2),
// a discretization diagnostic.
struct CertaintyEquivalent {
  AdaptedProcess x;
  PredictablePair mn;
  double drift_residual = 0.0;
};

CertaintyEquivalent certainty_equivalent(const TerminalField& g,
                                         const Tree& tree);

// Heterogeneity index chi and the smallest population size for which the
// shared total endowment satisfies the sup-norm smallness bound.
struct PopulationStats {
  double chi = 0.0;                     // max pairwise heterogeneity
  int required_agents = 0;              // I_0
  std::vector<double> endowment_norms;  // ||E^i||_inf per agent
  double total_norm = 0.0;              // ||sum_i E^i||_inf
};

PopulationStats population_stats(const Population& pop, double chi0,
                                 double delta0);

}  // namespace radner
