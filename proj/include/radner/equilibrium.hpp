#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "radner/agents.hpp"
#include "radner/bsde.hpp"

namespace radner {

// Smallness constants, kept as expressions so they carry full double
// precision.
namespace thresholds {
inline const double pareto_distance = 1.5 - std::sqrt(2.0);
inline const double sup_norm = std::pow((3.0 - 2.0 * std::sqrt(2.0)) / 4.0, 2);
inline const double demand_ball = (std::sqrt(2.0) - 1.0) / 2.0;
inline const double contraction = 5.0 - 3.0 * std::sqrt(2.0);
inline const double eta_coefficient = std::sqrt(23.0) / 64.0;
}  // namespace thresholds

// Excess-demand map F: lambda -> A[mu^lambda]. Equilibria are exactly its
// fixed points.
PredictableField excess_demand(const PredictableField& lambda,
                               const RiskAwarePopulation& pop);

struct IterationTrace {
  std::vector<double> residuals;      // ||lambda_{k+1} - lambda_k||_bmo
  std::vector<double> ratios;         // residual_k / residual_{k-1}
  std::vector<double> iterate_norms;  // ||lambda_{k+1}||_bmo
};

struct EquilibriumResult {
  PredictableField lambda;            // candidate equilibrium
  SystemSolution system;              // best responses under lambda
  std::vector<PredictableField> rho;  // lambda - mu^i
  IterationTrace trace;
  bool converged = false;
  int iterations = 0;
};

// Picard iteration lambda_{k+1} = F(lambda_k) until the bmo residual drops
// below tol. Non-convergence is reported through the flag and trace, not
// thrown; on this finite tree F^k is exact once k exceeds the step count.
EquilibriumResult picard_solve(const RiskAwarePopulation& pop,
                               const PredictableField& lambda0,
                               double tol = 1e-10, int max_iter = 200);

struct VerificationReport {
  double clearing_residual = 0.0;     // max node |A[rho]|
  double fixed_point_residual = 0.0;  // ||F(lambda) - lambda||_bmo
  double lambda_bmo = 0.0;
  double max_mn_bmo = 0.0;  // max_i ||(m^i, n^i)||_bmo
  bool apriori_ok = false;  // lambda_bmo <= max_mn_bmo + eps_disc
  double apriori_slack = 0.0;
  // Filled when oracle_check is set: per-agent value gap between the exact
  // best response and the BSDE strategy, always >= 0 up to rounding.
  std::vector<double> optimality_gaps;
};

VerificationReport verify_equilibrium(const EquilibriumResult& result,
                                      const RiskAwarePopulation& pop,
                                      bool oracle_check = false);

struct Certificate {
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;      // strict inequality; boundary equality fails
  bool evaluated = false;
};

struct CertificateReport {
  Certificate pareto_distance;  // vs 3/2 - sqrt(2), under the tilted measure
  Certificate sup_norm;         // vs ((3 - 2 sqrt 2)/4)^2
  Certificate horizon;          // T vs T*
  Certificate population;       // I vs I_0
  Certificate eta;              // weighted representation norm

  double t_star = 0.0;
  double horizon_margin = 0.0;
  std::vector<double> malliavin_b;  // sup-node |m| per agent
  std::vector<double> malliavin_w;
  int population_size = 0;
  int population_required = 0;
  double chi = 0.0;
  int best_candidate = 0;  // which xi_c candidate won (0 = A[G])

  // Emitted constants (full double precision).
  double constant_pareto_distance = thresholds::pareto_distance;
  double constant_sup_norm = thresholds::sup_norm;
  double constant_demand_ball = thresholds::demand_ball;
  double constant_contraction = thresholds::contraction;
  double constant_eta_coefficient = thresholds::eta_coefficient;
};

struct CertifyOptions {
  std::optional<TerminalField> xi_c;  // extra translation candidate
  std::optional<double> kappa;        // eta certificate; must be > 2
  // Known sup-norms of the two Malliavin derivative components of
  // G^i - xi_c; replaces the discrete estimate in the horizon certificate.
  std::optional<std::pair<double, double>> lipschitz_bounds;
  double chi0 = 0.0;
  double delta0 = 1.0;
  // Wealth-unit population; enables the population-size certificate.
  const Population* population = nullptr;
};

CertificateReport certify(const RiskAwarePopulation& pop,
                          const CertifyOptions& options = {});

struct ParetoCheckResult {
  bool pareto = false;
  std::vector<double> constants;  // E[G^i - G^1]
  double max_spread = 0.0;
};

// An allocation is Pareto optimal iff its components agree up to constants.
ParetoCheckResult pareto_check(const std::vector<TerminalField>& g,
                               const Tree& tree, double tol);

enum class ParetoVerdict { pareto, pre_pareto, neither };

struct ParetoAnalysis {
  PredictablePair lambda_nu;  // extracted from exp(-A[G]) density
  std::vector<std::vector<double>> pair_residuals;
  double max_residual = 0.0;
  std::vector<double> y;                 // constants, centered by A[y] = 0
  std::vector<PredictableField> phi;     // replication integrands, A[phi] = lambda
  std::vector<PredictableField> rho;     // A[phi] - phi^i
  std::vector<TerminalField> final_allocation;  // full layout only
  ParetoCheckResult final_check;
  ParetoVerdict verdict = ParetoVerdict::neither;
};

// Tests whether trading can carry G to a Pareto optimal allocation: under
// the measure tilted by exp(-A[G]), every pairwise difference G^i - G^j
// must be replicable with the traded factor alone (w and cross components
// of its representation vanish within tol).
ParetoAnalysis pre_pareto_check(const RiskAwarePopulation& pop, double tol);

// Equilibrium for separable allocations G = G^B + G^W: lambda is computed
// from the B-marginal subtree alone (so it is invariant across W branches)
// and the solution is assembled from the two decoupled systems.
EquilibriumResult separable_equilibrium(const RiskAwarePopulation& pop,
                                        const std::vector<TerminalField>& g_b,
                                        const std::vector<TerminalField>& g_w);

enum class DensitySign {
  negative,  // dP^ = exp(-A[G'])/E[exp(-A[G'])] dP (pricing measure)
  positive   // dP^ = exp(+A[G'])/E[exp(+A[G'])] dP
};

struct NearPreParetoOptions {
  double tol = 1e-10;
  int max_iter = 200;
  double kappa = 4.0;  // weight exponent for the eta certificate, > 2
  DensitySign density_sign = DensitySign::negative;
};

struct NearPreParetoResult {
  EquilibriumResult equilibrium;
  Certificate eta_certificate;
  bool eta_warning = false;  // certificate failed or was not evaluable
  double kappa_top = 0.0;    // +infinity on a finite tree
  PredictableField lambda_prime;
};

// Perturbation around a pre-Pareto allocation G': solves the eta system for
// G - G' under the tilted measure with eta = rho^{lambda',G'} and returns
// lambda = lambda' + A[mu~].
NearPreParetoResult near_pre_pareto_solve(const RiskAwarePopulation& pop,
                                          const std::vector<TerminalField>& g_prime,
                                          const NearPreParetoOptions& options = {});

}  // namespace radner
