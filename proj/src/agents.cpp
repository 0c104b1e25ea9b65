#include "radner/agents.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace radner {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

void check_terminal_fields(const Tree& tree,
                           const std::vector<TerminalField>& fields,
                           const char* what) {
  for (const auto& f : fields) {
    require(f.size() == tree.terminal_count(),
            std::string(what) + ": terminal field does not match the tree");
    for (double v : f)
      require(std::isfinite(v), std::string(what) + ": values must be finite");
  }
}

}  // namespace

Population::Population(const Tree& tree, std::vector<double> delta,
                       std::vector<TerminalField> endowment)
    : tree_(tree), delta_(std::move(delta)), endowment_(std::move(endowment)) {
  require(!delta_.empty(), "population: need at least one agent");
  require(delta_.size() == endowment_.size(),
          "population: delta and endowment counts differ");
  for (std::size_t i = 0; i < delta_.size(); ++i)
    require(std::isfinite(delta_[i]) && delta_[i] > 0.0,
            "population: risk tolerance of agent " + std::to_string(i) +
                " must be positive");
  check_terminal_fields(tree_, endowment_, "population");
}

RiskAwarePopulation::RiskAwarePopulation(const Tree& tree,
                                         std::vector<double> alpha,
                                         std::vector<TerminalField> g)
    : tree_(tree), alpha_(std::move(alpha)), g_(std::move(g)) {
  require(!alpha_.empty(), "population: need at least one agent");
  require(alpha_.size() == g_.size(),
          "population: weight and endowment counts differ");
  double sum = 0.0;
  for (double a : alpha_) {
    require(a > 0.0 && a < 1.0 + 1e-12, "population: weights must lie in (0, 1]");
    sum += a;
  }
  require(std::abs(sum - 1.0) <= 1e-12, "population: weights must sum to 1");
  check_terminal_fields(tree_, g_, "population");
}

double RiskAwarePopulation::aggregate(std::span<const double> x) const {
  require(x.size() == alpha_.size(), "aggregate: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < alpha_.size(); ++i) s += alpha_[i] * x[i];
  return s;
}

TerminalField RiskAwarePopulation::aggregate(
    const std::vector<TerminalField>& x) const {
  require(x.size() == alpha_.size(), "aggregate: length mismatch");
  TerminalField out(tree_.terminal_count(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i].size() == out.size(), "aggregate: terminal field size mismatch");
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += alpha_[i] * x[i][n];
  }
  return out;
}

PredictableField RiskAwarePopulation::aggregate(
    const std::vector<PredictableField>& x) const {
  require(x.size() == alpha_.size(), "aggregate: length mismatch");
  PredictableField out(tree_);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (int t = 0; t < tree_.steps(); ++t) {
      const auto& lv = x[i].level(t);
      auto& lo = out.level(t);
      for (std::size_t n = 0; n < lo.size(); ++n) lo[n] += alpha_[i] * lv[n];
    }
  }
  return out;
}

RiskAwarePopulation reparametrize(const Population& pop) {
  double total = 0.0;
  for (double d : pop.delta()) total += d;
  std::vector<double> alpha(pop.size());
  std::vector<TerminalField> g(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) {
    alpha[i] = pop.delta()[i] / total;
    g[i] = pop.endowment()[i];
    for (double& v : g[i]) v /= pop.delta()[i];
  }
  return RiskAwarePopulation(pop.tree(), std::move(alpha), std::move(g));
}

CertaintyEquivalent certainty_equivalent(const TerminalField& g,
                                         const Tree& tree) {
  require(g.size() == tree.terminal_count(),
          "certainty_equivalent: terminal field does not match the tree");
  TerminalField expng(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) {
    require(std::isfinite(g[n]), "certainty_equivalent: values must be finite");
    if (-g[n] > 700.0)
      throw DomainError(
          "certainty_equivalent: exp(-G) overflows; rescale the endowment");
    expng[n] = std::exp(-g[n]);
  }
  const Measure ref = Measure::reference(tree);
  AdaptedProcess v = conditional_expectation_process(expng, ref);

  CertaintyEquivalent ce;
  ce.mn = girsanov_extract(v);
  ce.x = AdaptedProcess(tree);
  for (int t = 0; t <= tree.steps(); ++t) {
    const auto& lv = v.level(t);
    auto& lx = ce.x.level(t);
    for (std::size_t n = 0; n < lv.size(); ++n) lx[n] = -std::log(lv[n]);
  }
  // Worst one-step defect of dX = m dB + n dW + 1/2 (m^2 + n^2) dt.
  double worst = 0.0;
  for (int t = 0; t < tree.steps(); ++t) {
    const auto& cur = ce.x.level(t);
    const auto& nxt = ce.x.level(t + 1);
    const auto& mb = ce.mn.b.level(t);
    const auto& mw = ce.mn.w.level(t);
    for (std::size_t n = 0; n < cur.size(); ++n) {
      const double drift = 0.5 * (mb[n] * mb[n] + mw[n] * mw[n]) * tree.dt();
      for (int k = 0; k < kBranches; ++k) {
        const double pred =
            cur[n] + mb[n] * tree.db(k) + mw[n] * tree.dw(k) + drift;
        worst = std::max(worst,
                         std::abs(nxt[tree.child(t, n, k)] - pred));
      }
    }
  }
  ce.drift_residual = worst;
  return ce;
}

PopulationStats population_stats(const Population& pop, double chi0,
                                 double delta0) {
  require(chi0 >= 0.0 && chi0 < 0.5,
          "population_stats: chi0 must lie in [0, 1/2)");
  require(delta0 > 0.0, "population_stats: delta0 must be positive");
  PopulationStats out;
  const auto& e = pop.endowment();
  out.endowment_norms.resize(e.size());
  for (std::size_t i = 0; i < e.size(); ++i)
    out.endowment_norms[i] = sup_norm(e[i]);

  TerminalField total(pop.tree().terminal_count(), 0.0);
  for (const auto& ei : e)
    for (std::size_t n = 0; n < total.size(); ++n) total[n] += ei[n];
  out.total_norm = sup_norm(total);

  double chi = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = i + 1; j < e.size(); ++j) {
      const double denom = out.endowment_norms[i] + out.endowment_norms[j];
      if (denom == 0.0) continue;  // two vanishing endowments: contribution 0
      double diff = 0.0;
      for (std::size_t n = 0; n < total.size(); ++n)
        diff = std::max(diff, std::abs(e[i][n] - e[j][n]));
      chi = std::max(chi, diff / denom);
    }
  }
  out.chi = chi;

  // Smallest I with ||E_total|| / (delta0 (1 - 2 chi0) I) strictly below
  // the sup-norm smallness threshold.
  const double s2 = std::sqrt(2.0);
  const double threshold = std::pow((3.0 - 2.0 * s2) / 4.0, 2);
  const double lhs = out.total_norm / (delta0 * (1.0 - 2.0 * chi0));
  if (lhs == 0.0) {
    out.required_agents = 1;
  } else {
    const double ratio = lhs / threshold;
    out.required_agents =
        std::max(1, static_cast<int>(std::floor(ratio)) + 1);
  }
  return out;
}

}  // namespace radner
