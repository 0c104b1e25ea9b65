#include "radner/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "radner/parallel.hpp"

namespace radner {

namespace {

constexpr std::uint64_t kMaskB = 0xAAAAAAAAAAAAAAAAULL;  // bit 1 of each digit
constexpr std::uint64_t kMaskW = 0x5555555555555555ULL;  // bit 0 of each digit
constexpr std::size_t kDefaultBudget = std::size_t{1} << 24;  // 4^12 paths

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

void require_same_tree(const Tree& a, const Tree& b, const char* what) {
  if (!(a == b))
    throw ValidationError(std::string(what) + ": operands live on different trees");
}

// Walsh coefficients of four child values, branch-ordered per kBranches.
// v = a0 + a1*s_b + a2*s_w + a3*s_b*s_w with s in {-1,+1}.
struct OneStep {
  double a0, a1, a2, a3;
};

inline OneStep walsh(double v0, double v1, double v2, double v3) {
  // v0=(-,-), v1=(-,+), v2=(+,-), v3=(+,+)
  return {0.25 * (v0 + v1 + v2 + v3), 0.25 * ((v2 + v3) - (v0 + v1)),
          0.25 * ((v1 + v3) - (v0 + v2)), 0.25 * ((v0 + v3) - (v1 + v2))};
}

}  // namespace

std::size_t path_budget() {
  static const std::size_t budget = [] {
    if (const char* env = std::getenv("RADNER_PATH_BUDGET")) {
      char* end = nullptr;
      unsigned long long v = std::strtoull(env, &end, 10);
      if (end != env && *end == '\0' && v > 0)
        return static_cast<std::size_t>(v);
    }
    return kDefaultBudget;
  }();
  return budget;
}

Tree build_tree(double horizon, int steps, TreeLayout layout) {
  require(std::isfinite(horizon) && horizon > 0.0,
          "build_tree: horizon must be positive");
  require(steps >= 1, "build_tree: steps must be at least 1");
  if (layout == TreeLayout::full) {
    if (steps > 31 ||
        (std::size_t{1} << (2 * steps)) > path_budget()) {
      throw CapacityError(
          "build_tree: 4^" + std::to_string(steps) +
          " paths exceed the path budget of " + std::to_string(path_budget()) +
          " (set RADNER_PATH_BUDGET or use the markov layout)");
    }
  } else {
    if (steps > 4096)
      throw CapacityError("build_tree: markov layout capped at 4096 steps");
  }
  Tree t;
  t.horizon_ = horizon;
  t.steps_ = steps;
  t.dt_ = horizon / steps;
  t.sqrt_dt_ = std::sqrt(t.dt_);
  t.layout_ = layout;
  return t;
}

std::size_t Tree::node_count(int level) const {
  if (layout_ == TreeLayout::full) return std::size_t{1} << (2 * level);
  const std::size_t l = static_cast<std::size_t>(level) + 1;
  return l * l;
}

std::size_t Tree::child(int level, std::size_t node, int branch) const {
  if (layout_ == TreeLayout::full) return node * kBranches + branch;
  const std::size_t w = static_cast<std::size_t>(level) + 1;
  const std::size_t i = node / w;
  const std::size_t j = node % w;
  return (i + ((branch >> 1) & 1)) * (w + 1) + (j + (branch & 1));
}

double Tree::brownian_b(int level, std::size_t node) const {
  const long up = layout_ == TreeLayout::full
                      ? std::popcount(node & kMaskB)
                      : static_cast<long>(node / (level + 1));
  return (2.0 * up - level) * sqrt_dt_;
}

double Tree::brownian_w(int level, std::size_t node) const {
  const long up = layout_ == TreeLayout::full
                      ? std::popcount(node & kMaskW)
                      : static_cast<long>(node % (level + 1));
  return (2.0 * up - level) * sqrt_dt_;
}

AdaptedProcess::AdaptedProcess(const Tree& tree) : tree_(tree) {
  v_.resize(tree.steps() + 1);
  for (int t = 0; t <= tree.steps(); ++t) v_[t].assign(tree.node_count(t), 0.0);
}

AdaptedProcess::AdaptedProcess(const Tree& tree,
                               const std::function<double(int, std::size_t)>& fn)
    : AdaptedProcess(tree) {
  for (int t = 0; t <= tree.steps(); ++t)
    for (std::size_t n = 0; n < v_[t].size(); ++n) v_[t][n] = fn(t, n);
}

PredictableField::PredictableField(const Tree& tree) : tree_(tree) {
  v_.resize(tree.steps());
  for (int t = 0; t < tree.steps(); ++t) v_[t].assign(tree.node_count(t), 0.0);
}

PredictableField::PredictableField(const Tree& tree, double constant)
    : PredictableField(tree) {
  for (auto& lv : v_) std::fill(lv.begin(), lv.end(), constant);
}

PredictableField::PredictableField(
    const Tree& tree, const std::function<double(int, std::size_t)>& fn)
    : PredictableField(tree) {
  for (int t = 0; t < tree.steps(); ++t)
    for (std::size_t n = 0; n < v_[t].size(); ++n) v_[t][n] = fn(t, n);
}

namespace {
template <typename Op>
PredictableField zip(const PredictableField& a, const PredictableField& b,
                     Op op) {
  require_same_tree(a.tree(), b.tree(), "field arithmetic");
  PredictableField out(a.tree());
  for (int t = 0; t < a.tree().steps(); ++t) {
    const auto& la = a.level(t);
    const auto& lb = b.level(t);
    auto& lo = out.level(t);
    for (std::size_t n = 0; n < lo.size(); ++n) lo[n] = op(la[n], lb[n]);
  }
  return out;
}
}  // namespace

PredictableField operator+(const PredictableField& a, const PredictableField& b) {
  return zip(a, b, [](double x, double y) { return x + y; });
}
PredictableField operator-(const PredictableField& a, const PredictableField& b) {
  return zip(a, b, [](double x, double y) { return x - y; });
}
PredictableField operator*(double s, const PredictableField& a) {
  PredictableField out = a;
  for (int t = 0; t < a.tree().steps(); ++t)
    for (auto& x : out.level(t)) x *= s;
  return out;
}

PredictablePair operator+(const PredictablePair& a, const PredictablePair& b) {
  return {a.b + b.b, a.w + b.w};
}
PredictablePair operator-(const PredictablePair& a, const PredictablePair& b) {
  return {a.b - b.b, a.w - b.w};
}
PredictablePair operator*(double s, const PredictablePair& a) {
  return {s * a.b, s * a.w};
}

Measure Measure::reference(const Tree& tree) {
  Measure m;
  m.tree_ = tree;
  m.reference_ = true;
  m.density_ = AdaptedProcess(
      tree, [](int, std::size_t) { return 1.0; });
  return m;
}

Measure Measure::from_positive(const Tree& tree, const TerminalField& weight) {
  require(weight.size() == tree.terminal_count(),
          "measure: terminal field has wrong size");
  for (double z : weight) {
    if (!(z > 0.0) || !std::isfinite(z))
      throw DomainError("measure: density must be strictly positive and finite");
  }
  AdaptedProcess z(tree);
  z.level(tree.steps()) = weight;
  for (int t = tree.steps() - 1; t >= 0; --t) {
    const auto& nxt = z.level(t + 1);
    auto& cur = z.level(t);
    for (std::size_t n = 0; n < cur.size(); ++n) {
      double s = 0.0;
      for (int k = 0; k < kBranches; ++k) s += nxt[tree.child(t, n, k)];
      cur[n] = 0.25 * s;
    }
  }
  const double mean = z.level(0)[0];
  Measure m;
  m.tree_ = tree;
  m.reference_ = false;
  m.renorm_ = mean;
  m.trans_.resize(tree.steps());
  for (int t = 0; t < tree.steps(); ++t) {
    auto& lv = m.trans_[t];
    lv.resize(tree.node_count(t) * kBranches);
    const auto& cur = z.level(t);
    const auto& nxt = z.level(t + 1);
    for (std::size_t n = 0; n < tree.node_count(t); ++n)
      for (int k = 0; k < kBranches; ++k)
        lv[n * kBranches + k] = 0.25 * nxt[tree.child(t, n, k)] / cur[n];
  }
  // Store the normalized martingale for diagnostics.
  for (int t = 0; t <= tree.steps(); ++t)
    for (auto& x : z.level(t)) x /= mean;
  m.density_ = std::move(z);
  return m;
}

Measure Measure::from_density(const Tree& tree, const TerminalField& z_T) {
  Measure m = from_positive(tree, z_T);
  if (std::abs(m.renorm_ - 1.0) > 1e-9)
    throw ValidationError(
        "measure_from_density: E[Z_T] = " + std::to_string(m.renorm_) +
        " is farther than 1e-9 from 1");
  return m;
}

Measure measure_from_density(const Tree& tree, const TerminalField& z_T) {
  return Measure::from_density(tree, z_T);
}

double conditional_expectation(const TerminalField& x, int x_level, NodeId node,
                               const Measure& m) {
  const Tree& tree = m.tree();
  require(x_level >= 0 && x_level <= tree.steps(),
          "conditional_expectation: bad level");
  require(x.size() == tree.node_count(x_level),
          "conditional_expectation: values do not match their level");
  require(node.level <= x_level && node.index < tree.node_count(node.level),
          "conditional_expectation: node is below the values' level");
  std::vector<double> cur = x;
  std::vector<double> prev;
  for (int t = x_level - 1; t >= node.level; --t) {
    prev.assign(tree.node_count(t), 0.0);
    for (std::size_t n = 0; n < prev.size(); ++n) {
      double s = 0.0;
      for (int k = 0; k < kBranches; ++k)
        s += m.prob(t, n, k) * cur[tree.child(t, n, k)];
      prev[n] = s;
    }
    cur.swap(prev);
  }
  return cur[node.index];
}

double conditional_expectation(const AdaptedProcess& x, NodeId node,
                               const Measure& m) {
  require_same_tree(x.tree(), m.tree(), "conditional_expectation");
  return conditional_expectation(x.terminal(), x.tree().steps(), node, m);
}

double expectation(const TerminalField& x, const Measure& m) {
  return conditional_expectation(x, m.tree().steps(), NodeId{0, 0}, m);
}

AdaptedProcess conditional_expectation_process(const TerminalField& x,
                                               const Measure& m) {
  const Tree& tree = m.tree();
  require(x.size() == tree.terminal_count(),
          "conditional_expectation_process: terminal field has wrong size");
  AdaptedProcess g(tree);
  g.level(tree.steps()) = x;
  for (int t = tree.steps() - 1; t >= 0; --t) {
    const auto& nxt = g.level(t + 1);
    auto& cur = g.level(t);
    parallel_for(cur.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t n = lo; n < hi; ++n) {
        double s = 0.0;
        for (int k = 0; k < kBranches; ++k)
          s += m.prob(t, n, k) * nxt[tree.child(t, n, k)];
        cur[n] = s;
      }
    });
  }
  return g;
}

MartingaleRep martingale_representation(const TerminalField& x,
                                        const Measure& m) {
  const Tree& tree = m.tree();
  MartingaleRep rep;
  rep.gamma = conditional_expectation_process(x, m);
  rep.mn = PredictablePair(tree);
  rep.cross = PredictableField(tree);
  const double inv_sdt = 1.0 / tree.sqrt_dt();
  double max_cross = 0.0;
  for (int t = 0; t < tree.steps(); ++t) {
    const auto& nxt = rep.gamma.level(t + 1);
    auto& mb = rep.mn.b.level(t);
    auto& mw = rep.mn.w.level(t);
    auto& cx = rep.cross.level(t);
    for (std::size_t n = 0; n < mb.size(); ++n) {
      const OneStep c = walsh(nxt[tree.child(t, n, 0)], nxt[tree.child(t, n, 1)],
                              nxt[tree.child(t, n, 2)], nxt[tree.child(t, n, 3)]);
      mb[n] = c.a1 * inv_sdt;
      mw[n] = c.a2 * inv_sdt;
      cx[n] = c.a3 * inv_sdt;
      max_cross = std::max(max_cross, std::abs(cx[n]));
    }
  }
  rep.max_cross = max_cross;
  return rep;
}

PredictablePair girsanov_extract(const AdaptedProcess& z) {
  const Tree& tree = z.tree();
  const Measure ref = Measure::reference(tree);
  PredictablePair out(tree);
  const double inv_dt = 1.0 / tree.dt();
  for (int t = 0; t <= tree.steps(); ++t)
    for (double v : z.level(t))
      if (!(v > 0.0))
        throw ValidationError("girsanov_extract: process must stay positive");
  for (int t = 0; t < tree.steps(); ++t) {
    const auto& cur = z.level(t);
    const auto& nxt = z.level(t + 1);
    auto& lb = out.b.level(t);
    auto& lw = out.w.level(t);
    for (std::size_t n = 0; n < cur.size(); ++n) {
      double eb = 0.0, ew = 0.0, mean = 0.0;
      for (int k = 0; k < kBranches; ++k) {
        const double r = nxt[tree.child(t, n, k)] / cur[n];
        mean += 0.25 * r;
        eb += 0.25 * r * tree.db(k);
        ew += 0.25 * r * tree.dw(k);
      }
      if (std::abs(mean - 1.0) > 1e-12 * std::max(1.0, std::abs(cur[n])))
        throw ValidationError(
            "girsanov_extract: input is not a reference-measure martingale");
      lb[n] = -eb * inv_dt;
      lw[n] = -ew * inv_dt;
    }
  }
  return out;
}

AdaptedProcess discrete_exponential(const PredictablePair& pair) {
  const Tree& tree = pair.tree();
  require(tree.layout() == TreeLayout::full,
          "discrete_exponential: running products are path-dependent; "
          "requires the full layout");
  AdaptedProcess z(tree);
  z.level(0)[0] = 1.0;
  for (int t = 0; t < tree.steps(); ++t) {
    const auto& cur = z.level(t);
    auto& nxt = z.level(t + 1);
    const auto& lb = pair.b.level(t);
    const auto& lw = pair.w.level(t);
    for (std::size_t n = 0; n < cur.size(); ++n) {
      for (int k = 0; k < kBranches; ++k) {
        const double f = 1.0 - lb[n] * tree.db(k) - lw[n] * tree.dw(k);
        if (!(f > 0.0))
          throw DomainError(
              "discrete_exponential: factor 1 - lambda dB - nu dW is not "
              "positive; coefficients too large for this dt");
        nxt[tree.child(t, n, k)] = cur[n] * f;
      }
    }
  }
  return z;
}

double relative_entropy(const Measure& q, const Measure& p) {
  require_same_tree(q.tree(), p.tree(), "relative_entropy");
  const Tree& tree = q.tree();
  std::vector<double> h(tree.terminal_count(), 0.0);
  std::vector<double> prev;
  for (int t = tree.steps() - 1; t >= 0; --t) {
    prev.assign(tree.node_count(t), 0.0);
    for (std::size_t n = 0; n < prev.size(); ++n) {
      double s = 0.0;
      for (int k = 0; k < kBranches; ++k) {
        const double qk = q.prob(t, n, k);
        if (qk == 0.0) continue;
        const double pk = p.prob(t, n, k);
        if (pk == 0.0) return std::numeric_limits<double>::infinity();
        s += qk * (std::log(qk / pk) + h[tree.child(t, n, k)]);
      }
      prev[n] = s;
    }
    h.swap(prev);
  }
  return std::max(h[0], 0.0);
}

namespace {
double bmo_norm_impl(const Tree& tree,
                     const std::function<double(int, std::size_t)>& sq,
                     const Measure& m, const AdaptedProcess* weight) {
  if (weight) {
    require_same_tree(weight->tree(), tree, "bmo_norm");
    for (int t = 0; t <= tree.steps(); ++t)
      for (double w : weight->level(t))
        require(w >= 1.0 - 1e-12, "bmo_norm: weight must be >= 1");
  }
  const double dt = tree.dt();
  std::vector<double> s(tree.terminal_count(), 0.0);
  std::vector<double> prev;
  double best = 0.0;
  for (int t = tree.steps() - 1; t >= 0; --t) {
    prev.assign(tree.node_count(t), 0.0);
    for (std::size_t n = 0; n < prev.size(); ++n) {
      double e = 0.0;
      for (int k = 0; k < kBranches; ++k)
        e += m.prob(t, n, k) * s[tree.child(t, n, k)];
      const double w = weight ? weight->level(t)[n] : 1.0;
      prev[n] = w * w * sq(t, n) * dt + e;
      best = std::max(best, prev[n]);
    }
    s.swap(prev);
  }
  return std::sqrt(best);
}
}  // namespace

double bmo_norm(const PredictablePair& pair, const Measure& m,
                const AdaptedProcess* weight) {
  require_same_tree(pair.tree(), m.tree(), "bmo_norm");
  return bmo_norm_impl(
      m.tree(),
      [&](int t, std::size_t n) {
        const double b = pair.b.level(t)[n];
        const double w = pair.w.level(t)[n];
        return b * b + w * w;
      },
      m, weight);
}

double bmo_norm(const PredictableField& field, const Measure& m,
                const AdaptedProcess* weight) {
  require_same_tree(field.tree(), m.tree(), "bmo_norm");
  return bmo_norm_impl(
      m.tree(),
      [&](int t, std::size_t n) {
        const double b = field.level(t)[n];
        return b * b;
      },
      m, weight);
}

double sup_norm(const TerminalField& x) {
  double best = 0.0;
  for (double v : x) best = std::max(best, std::abs(v));
  return best;
}

double sup_norm(const PredictableField& x) {
  double best = 0.0;
  for (int t = 0; t < x.tree().steps(); ++t)
    for (double v : x.level(t)) best = std::max(best, std::abs(v));
  return best;
}

double sup_norm(const PredictablePair& x) {
  return std::max(sup_norm(x.b), sup_norm(x.w));
}

TerminalField terminal_b(const Tree& tree) {
  TerminalField out(tree.terminal_count());
  for (std::size_t n = 0; n < out.size(); ++n)
    out[n] = tree.brownian_b(tree.steps(), n);
  return out;
}

TerminalField terminal_w(const Tree& tree) {
  TerminalField out(tree.terminal_count());
  for (std::size_t n = 0; n < out.size(); ++n)
    out[n] = tree.brownian_w(tree.steps(), n);
  return out;
}

TerminalField terminal_state(const Tree& tree,
                             const std::function<double(double, double)>& g) {
  TerminalField out(tree.terminal_count());
  for (std::size_t n = 0; n < out.size(); ++n)
    out[n] = g(tree.brownian_b(tree.steps(), n),
               tree.brownian_w(tree.steps(), n));
  return out;
}

TerminalField strategy_gain(const PredictableField& rho,
                            const PredictableField& lambda) {
  require_same_tree(rho.tree(), lambda.tree(), "strategy_gain");
  const Tree& tree = rho.tree();
  require(tree.layout() == TreeLayout::full,
          "strategy_gain: trading gains are path-dependent; requires the "
          "full layout");
  std::vector<double> cur(1, 0.0);
  std::vector<double> nxt;
  for (int t = 0; t < tree.steps(); ++t) {
    nxt.assign(tree.node_count(t + 1), 0.0);
    const auto& r = rho.level(t);
    const auto& l = lambda.level(t);
    for (std::size_t n = 0; n < cur.size(); ++n)
      for (int k = 0; k < kBranches; ++k)
        nxt[tree.child(t, n, k)] =
            cur[n] + r[n] * (l[n] * tree.dt() + tree.db(k));
    cur.swap(nxt);
  }
  return cur;
}

AdaptedProcess exponential_weight(const std::vector<PredictableField>& eta,
                                  double kappa) {
  require(!eta.empty(), "exponential_weight: empty eta");
  const Tree& tree = eta.front().tree();
  require(tree.layout() == TreeLayout::full,
          "exponential_weight: accumulated weights are path-dependent; "
          "requires the full layout");
  for (const auto& e : eta) require_same_tree(e.tree(), tree, "exponential_weight");
  AdaptedProcess w(tree);
  w.level(0)[0] = 1.0;
  for (int t = 0; t < tree.steps(); ++t) {
    const auto& cur = w.level(t);
    auto& nxt = w.level(t + 1);
    for (std::size_t n = 0; n < cur.size(); ++n) {
      double sq = 0.0;
      for (const auto& e : eta) {
        const double v = e.level(t)[n];
        sq += v * v;
      }
      const double f = cur[n] * std::exp(kappa * sq * tree.dt());
      for (int k = 0; k < kBranches; ++k) nxt[tree.child(t, n, k)] = f;
    }
  }
  return w;
}

}  // namespace radner
