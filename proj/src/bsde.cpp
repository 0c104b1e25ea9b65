#include "radner/bsde.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "radner/parallel.hpp"

namespace radner {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}

struct SweepOutput {
  std::vector<AdaptedProcess> y;
  std::vector<PredictablePair> z;
  std::vector<PredictableField> driver;
  PredictableField lambda;
  double max_cross = 0.0;
};

// One engine drives every solver: lambda is either supplied (single-agent
// best response) or aggregated from the current level (coupled system).
SweepOutput sweep(const Tree& tree, const std::vector<double>& alpha,
                  const std::vector<TerminalField>& g,
                  const std::vector<PredictableField>* eta, const Measure& m,
                  const PredictableField* fixed_lambda) {
  const std::size_t agents = g.size();
  const double dt = tree.dt();
  const double inv_sdt = 1.0 / tree.sqrt_dt();

  SweepOutput out;
  out.y.reserve(agents);
  out.z.reserve(agents);
  out.driver.reserve(agents);
  for (std::size_t i = 0; i < agents; ++i) {
    out.y.emplace_back(tree);
    out.y.back().level(tree.steps()) = g[i];
    out.z.emplace_back(tree);
    out.driver.emplace_back(tree);
  }
  out.lambda = PredictableField(tree);

  std::atomic<double> max_cross{0.0};
  for (int t = tree.steps() - 1; t >= 0; --t) {
    const std::size_t count = tree.node_count(t);
    parallel_for(count, [&](std::size_t lo, std::size_t hi) {
      std::vector<double> mu(agents), nu(agents), eq(agents);
      double local_cross = 0.0;
      for (std::size_t n = lo; n < hi; ++n) {
        for (std::size_t i = 0; i < agents; ++i) {
          const auto& nxt = out.y[i].level(t + 1);
          const double v0 = nxt[tree.child(t, n, 0)];
          const double v1 = nxt[tree.child(t, n, 1)];
          const double v2 = nxt[tree.child(t, n, 2)];
          const double v3 = nxt[tree.child(t, n, 3)];
          mu[i] = 0.25 * ((v2 + v3) - (v0 + v1)) * inv_sdt;
          nu[i] = 0.25 * ((v1 + v3) - (v0 + v2)) * inv_sdt;
          const double cross = 0.25 * ((v0 + v3) - (v1 + v2)) * inv_sdt;
          local_cross = std::max(local_cross, std::abs(cross));
          if (m.is_reference()) {
            eq[i] = 0.25 * (v0 + v1 + v2 + v3);
          } else {
            eq[i] = m.prob(t, n, 0) * v0 + m.prob(t, n, 1) * v1 +
                    m.prob(t, n, 2) * v2 + m.prob(t, n, 3) * v3;
          }
        }
        double lam;
        if (fixed_lambda) {
          lam = fixed_lambda->level(t)[n];
        } else {
          lam = 0.0;
          for (std::size_t i = 0; i < agents; ++i) lam += alpha[i] * mu[i];
        }
        out.lambda.level(t)[n] = lam;
        for (std::size_t i = 0; i < agents; ++i) {
          const double et = eta ? (*eta)[i].level(t)[n] : 0.0;
          const double f =
              0.5 * nu[i] * nu[i] - 0.5 * lam * lam + lam * (mu[i] - et);
          out.z[i].b.level(t)[n] = mu[i];
          out.z[i].w.level(t)[n] = nu[i];
          out.driver[i].level(t)[n] = f;
          out.y[i].level(t)[n] = eq[i] - f * dt;
        }
      }
      // keep the running max without locking the node loop
      double seen = max_cross.load();
      while (local_cross > seen &&
             !max_cross.compare_exchange_weak(seen, local_cross)) {
      }
    });
  }
  out.max_cross = max_cross.load();
  return out;
}

void check_terminal(const Tree& tree, const TerminalField& g, const char* what) {
  require(g.size() == tree.terminal_count(), what);
  for (double v : g)
    if (!std::isfinite(v)) throw ValidationError("terminal values must be finite");
}

}  // namespace

SingleSolution solve_single(const PredictableField& lambda,
                            const TerminalField& g, const Tree& tree) {
  require(lambda.tree() == tree, "solve_single: lambda lives on another tree");
  check_terminal(tree, g, "solve_single: terminal field does not match tree");
  const std::vector<double> alpha{1.0};
  const std::vector<TerminalField> gs{g};
  SweepOutput s = sweep(tree, alpha, gs, nullptr, Measure::reference(tree),
                        &lambda);
  SingleSolution out;
  out.y = std::move(s.y[0]);
  out.z = std::move(s.z[0]);
  out.driver = std::move(s.driver[0]);
  out.rho = lambda - out.z.b;
  out.max_cross = s.max_cross;
  return out;
}

SystemSolution solve_system_direct(const RiskAwarePopulation& pop) {
  SweepOutput s = sweep(pop.tree(), pop.alpha(), pop.g(), nullptr,
                        Measure::reference(pop.tree()), nullptr);
  SystemSolution out;
  out.y = std::move(s.y);
  out.z = std::move(s.z);
  out.lambda = std::move(s.lambda);
  out.max_cross = s.max_cross;
  out.max_clearing_residual = 0.0;
  return out;
}

SystemSolution solve_eta_system(const RiskAwarePopulation& pop,
                                const std::vector<PredictableField>& eta,
                                const Measure& m) {
  require(eta.size() == pop.size(), "solve_eta_system: one eta per agent");
  require(m.tree() == pop.tree(), "solve_eta_system: measure tree mismatch");
  for (const auto& e : eta)
    require(e.tree() == pop.tree(), "solve_eta_system: eta tree mismatch");
  SweepOutput s = sweep(pop.tree(), pop.alpha(), pop.g(), &eta, m, nullptr);
  SystemSolution out;
  out.y = std::move(s.y);
  out.z = std::move(s.z);
  out.lambda = std::move(s.lambda);
  out.max_cross = s.max_cross;
  out.max_clearing_residual = 0.0;
  return out;
}

std::vector<SingleSolution> solve_population(const PredictableField& lambda,
                                             const RiskAwarePopulation& pop) {
  std::vector<SingleSolution> out;
  out.reserve(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i)
    out.push_back(solve_single(lambda, pop.g()[i], pop.tree()));
  return out;
}

}  // namespace radner
