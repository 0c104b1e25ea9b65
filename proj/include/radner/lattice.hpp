#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "radner/errors.hpp"

namespace radner {

// Child branch encoding, branch in {0,1,2,3}: bit 1 set = B moves up,
// bit 0 set = W moves up. Both increments are +/- sqrt(dt).
inline constexpr int kBranches = 4;

enum class TreeLayout {
  full,    // explicit path tree: level t has 4^t nodes, child = node*4+branch
  markov   // recombining state lattice: level t has (t+1)^2 nodes, keyed by
           // (#B-up, #W-up); exact whenever all data are functions of (B, W)
};

struct NodeId {
  int level = 0;
  std::size_t index = 0;
};

// Maximum number of terminal paths a full-layout tree may have.
// Overridable through the RADNER_PATH_BUDGET environment variable.
std::size_t path_budget();

// Discrete scaffolding for a two-factor Brownian filtration on [0, T]:
// N steps of size dt = T/N, increments (dB, dW) in {+sqrt(dt), -sqrt(dt)}^2,
// reference probability 1/4 per branch. One-step moments are exact:
// E[dB] = E[dW] = E[dB dW] = 0 and E[dB^2] = E[dW^2] = dt.
class Tree {
 public:
  Tree() = default;

  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  double dt() const { return dt_; }
  double sqrt_dt() const { return sqrt_dt_; }
  TreeLayout layout() const { return layout_; }

  std::size_t node_count(int level) const;
  std::size_t terminal_count() const { return node_count(steps_); }
  std::size_t child(int level, std::size_t node, int branch) const;

  double db(int branch) const { return (branch & 2) ? sqrt_dt_ : -sqrt_dt_; }
  double dw(int branch) const { return (branch & 1) ? sqrt_dt_ : -sqrt_dt_; }

  // Brownian coordinates of a node.
  double brownian_b(int level, std::size_t node) const;
  double brownian_w(int level, std::size_t node) const;

  bool operator==(const Tree& o) const {
    return horizon_ == o.horizon_ && steps_ == o.steps_ && layout_ == o.layout_;
  }

  friend Tree build_tree(double horizon, int steps, TreeLayout layout);

 private:
  double horizon_ = 0.0;
  double dt_ = 0.0;
  double sqrt_dt_ = 0.0;
  int steps_ = 0;
  TreeLayout layout_ = TreeLayout::full;
};

Tree build_tree(double horizon, int steps, TreeLayout layout = TreeLayout::full);

// Random variable known at the horizon: one value per terminal node.
using TerminalField = std::vector<double>;

// Real value per node, levels 0..N.
class AdaptedProcess {
 public:
  AdaptedProcess() = default;
  explicit AdaptedProcess(const Tree& tree);
  AdaptedProcess(const Tree& tree,
                 const std::function<double(int, std::size_t)>& fn);

  const Tree& tree() const { return tree_; }
  std::vector<double>& level(int t) { return v_[static_cast<std::size_t>(t)]; }
  const std::vector<double>& level(int t) const {
    return v_[static_cast<std::size_t>(t)];
  }
  double at(NodeId n) const { return v_[n.level][n.index]; }
  double& at(NodeId n) { return v_[n.level][n.index]; }
  const TerminalField& terminal() const { return v_.back(); }

 private:
  Tree tree_;
  std::vector<std::vector<double>> v_;
};

// Real value per non-terminal node, levels 0..N-1; the value assigned at
// level t applies on [t*dt, (t+1)*dt).
class PredictableField {
 public:
  PredictableField() = default;
  explicit PredictableField(const Tree& tree);
  PredictableField(const Tree& tree, double constant);
  PredictableField(const Tree& tree,
                   const std::function<double(int, std::size_t)>& fn);

  const Tree& tree() const { return tree_; }
  std::vector<double>& level(int t) { return v_[static_cast<std::size_t>(t)]; }
  const std::vector<double>& level(int t) const {
    return v_[static_cast<std::size_t>(t)];
  }
  double at(NodeId n) const { return v_[n.level][n.index]; }
  double& at(NodeId n) { return v_[n.level][n.index]; }

 private:
  Tree tree_;
  std::vector<std::vector<double>> v_;
};

PredictableField operator+(const PredictableField&, const PredictableField&);
PredictableField operator-(const PredictableField&, const PredictableField&);
PredictableField operator*(double, const PredictableField&);

// Predictable (b, w) coefficient pair, e.g. the integrands against dB and dW.
struct PredictablePair {
  PredictableField b;
  PredictableField w;

  PredictablePair() = default;
  explicit PredictablePair(const Tree& tree) : b(tree), w(tree) {}
  PredictablePair(PredictableField bb, PredictableField ww)
      : b(std::move(bb)), w(std::move(ww)) {}
  const Tree& tree() const { return b.tree(); }
};

PredictablePair operator+(const PredictablePair&, const PredictablePair&);
PredictablePair operator-(const PredictablePair&, const PredictablePair&);
PredictablePair operator*(double, const PredictablePair&);

// One-step transition probabilities per node (4 nonnegative reals summing
// to 1); the reference measure keeps them implicit at 1/4.
class Measure {
 public:
  Measure() = default;
  static Measure reference(const Tree& tree);
  static Measure from_density(const Tree& tree, const TerminalField& z_T);
  // Accepts any strictly positive terminal weight and normalizes it exactly.
  static Measure from_positive(const Tree& tree, const TerminalField& weight);

  const Tree& tree() const { return tree_; }
  bool is_reference() const { return reference_; }
  double prob(int level, std::size_t node, int branch) const {
    return reference_ ? 0.25 : trans_[level][node * kBranches + branch];
  }
  // Factor the input density was divided by to reach mean one.
  double renormalization() const { return renorm_; }
  // Density martingale Z_t = E_t[Z_T]; identically 1 for the reference.
  const AdaptedProcess& density() const { return density_; }

 private:
  Tree tree_;
  bool reference_ = true;
  double renorm_ = 1.0;
  std::vector<std::vector<double>> trans_;
  AdaptedProcess density_;
};

Measure measure_from_density(const Tree& tree, const TerminalField& z_T);

// Exact one-step projection of a martingale onto {1, dB, dW, dB dW}:
// Gamma_{t+dt} = Gamma_t + m dB + n dW + cross * dB dW / sqrt(dt)
// holds bit-exactly at every node under the reference measure. The cross
// coefficient is the discretization residual absent in continuous time.
struct MartingaleRep {
  AdaptedProcess gamma;
  PredictablePair mn;
  PredictableField cross;
  double max_cross = 0.0;
};

double expectation(const TerminalField& x, const Measure& m);
double conditional_expectation(const TerminalField& x, int x_level, NodeId node,
                               const Measure& m);
double conditional_expectation(const AdaptedProcess& x, NodeId node,
                               const Measure& m);
AdaptedProcess conditional_expectation_process(const TerminalField& x,
                                               const Measure& m);

MartingaleRep martingale_representation(const TerminalField& x,
                                        const Measure& m);

// Per node, for a positive reference-measure martingale Z:
//   lambda_t = -E_t[(Z_{t+dt}/Z_t) dB] / dt,  nu_t = -E_t[(Z_{t+dt}/Z_t) dW] / dt.
// Round-trips exactly with discrete_exponential.
PredictablePair girsanov_extract(const AdaptedProcess& z);

// Z_0 = 1, Z_{t+dt} = Z_t * (1 - lambda dB - nu dW). Full layout only: the
// running product is path-dependent. Factors must stay positive.
AdaptedProcess discrete_exponential(const PredictablePair& pair);

// Sum over paths of Q(path) log(Q(path)/P(path)), evaluated by backward
// recursion. Returns +infinity when Q charges a P-null branch.
double relative_entropy(const Measure& q, const Measure& p);

// sqrt of the max over all nodes of
//   E^m_node[ sum_{u >= t} weight_u^2 (b_u^2 + w_u^2) dt ].
// On a finite tree the supremum over stopping times is attained at a
// deterministic node, so this max realizes it. weight, if given, must be
// adapted and >= 1.
double bmo_norm(const PredictablePair& pair, const Measure& m,
                const AdaptedProcess* weight = nullptr);
double bmo_norm(const PredictableField& field, const Measure& m,
                const AdaptedProcess* weight = nullptr);

double sup_norm(const TerminalField& x);
double sup_norm(const PredictableField& x);
double sup_norm(const PredictablePair& x);

TerminalField terminal_b(const Tree& tree);
TerminalField terminal_w(const Tree& tree);
TerminalField terminal_state(const Tree& tree,
                             const std::function<double(double, double)>& g);

// Terminal value of the trading gain  sum_t rho_t (lambda_t dt + dB_t).
// Path-dependent, hence full layout only.
TerminalField strategy_gain(const PredictableField& rho,
                            const PredictableField& lambda);

// w_t = exp(kappa * sum_{s<t} |eta_s|^2 dt) with |eta_s|^2 summed over the
// component fields. Full layout only.
AdaptedProcess exponential_weight(const std::vector<PredictableField>& eta,
                                  double kappa);

}  // namespace radner
