#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "bayeslens/errors.hpp"

namespace bayeslens::finstoch {

// Kernel between finite sets, stored row-stochastically:
// entries(x, y) = P(y | x), shape dom_card x cod_card.
// Composite objects use row-major pairing: (x, x') <-> x * card' + x'.
struct StochasticMatrix {
  Eigen::MatrixXd entries;

  std::size_t dom_card() const { return static_cast<std::size_t>(entries.rows()); }
  std::size_t cod_card() const { return static_cast<std::size_t>(entries.cols()); }

  double row_sum_residual() const;  // max_x |sum_y P(y|x) - 1|
  double min_entry() const;
  bool is_stochastic(double tol = 1e-9) const;
};

// A state is a kernel out of the unit: a 1 x n probability row.
using FinState = StochasticMatrix;

FinState make_state(const std::vector<double>& probs);
FinState dirac(std::size_t index, std::size_t card);
bool is_state(const StochasticMatrix& m, double tol = 1e-9);

StochasticMatrix identity(std::size_t card);

// Diagram-order composition: f then g (Chapman-Kolmogorov; matrix product).
StochasticMatrix compose(const StochasticMatrix& f, const StochasticMatrix& g);

// Parallel composition on paired indices (Kronecker product).
StochasticMatrix tensor(const StochasticMatrix& f, const StochasticMatrix& g);

StochasticMatrix copy(std::size_t card);   // x -> (x, x)
StochasticMatrix del(std::size_t card);    // x -> ()
StochasticMatrix swap(std::size_t card_a, std::size_t card_b);

FinState pushforward(const StochasticMatrix& f, const FinState& p);

// What to put in a backward row whose observation has zero mass under the
// pushforward (no conditional exists there).
enum class ZeroFillPolicy { Uniform, Error, FirstIndex };

// Mass threshold below which a point is treated as outside a state's support.
inline constexpr double kSupportTol = 1e-12;

// Bayesian inverse of f at prior p: the kernel cod(f) -> dom(f) with
// backward(y, x) = p(x) f(x, y) / q(y) on observations y with q(y) > threshold
// (q = pushforward of p along f); rows at zero-mass observations follow the
// policy. Throws ZeroMassObservationError under ZeroFillPolicy::Error.
StochasticMatrix bayes_invert(const StochasticMatrix& f, const FinState& p,
                              ZeroFillPolicy policy = ZeroFillPolicy::Uniform);

// The support of a state as a section-retraction pair. inclusion embeds the
// support into the ambient set (0/1 rows); retraction maps supported points
// back exactly and spreads off-support points uniformly over the support, so
// retraction-after-inclusion is the identity on the nose and
// inclusion-after-retraction is almost-surely the identity at the state.
struct FinSupport {
  std::size_t base_card = 0;
  std::vector<std::size_t> indices;  // strictly increasing
  StochasticMatrix inclusion;        // card() x base_card
  StochasticMatrix retraction;       // base_card x card()

  std::size_t card() const { return indices.size(); }
};

FinSupport support_of(const FinState& p, double tol = kSupportTol);

// Conjugation along supports: restrict squeezes an ambient kernel down to
// supported points (inclusion ; h ; retraction), include embeds a supported
// kernel back into the ambient sets (retraction ; g ; inclusion).
StochasticMatrix restrict(const StochasticMatrix& h, const FinSupport& s_dom,
                          const FinSupport& s_cod);
StochasticMatrix include(const StochasticMatrix& g, const FinSupport& s_dom,
                         const FinSupport& s_cod);

// Bayesian inverse squeezed onto supports: a kernel from supp(f∘p) to
// supp(p). Unique — independent of the zero-fill policy by construction.
struct SupportedInverse {
  StochasticMatrix kernel;
  FinSupport dom_support;  // support of the pushforward, on cod(f)
  FinSupport cod_support;  // support of the prior, on dom(f)
};

SupportedInverse bayes_invert_supported(const StochasticMatrix& f, const FinState& p,
                                        double tol = kSupportTol);

// Canonical supported inverse of copy at p: the bijection sending the
// surviving diagonal pairs (x, x) back to x. Division-free.
SupportedInverse copy_inverse_supported(const FinState& p, double tol = kSupportTol);

// Joint of prior and kernel as a state on dom ⊗ cod:
// joint((x, y)) = p(x) f(x, y).
FinState joint_state(const StochasticMatrix& f, const FinState& p);

// Max deviation between the two joint decompositions of the inversion law:
// |p(x) f(x, y) - q(y) backward(y, x)| over all (x, y).
double inversion_law_residual(const StochasticMatrix& f, const StochasticMatrix& backward,
                              const FinState& p);

// Almost-sure equality at p: the copy-then-apply-on-one-branch joints of f
// and g agree. Residual is max_x,y |p(x) (f - g)(x, y)|.
double almost_equal_residual(const StochasticMatrix& f, const StochasticMatrix& g,
                             const FinState& p);
bool almost_equal(const StochasticMatrix& f, const StochasticMatrix& g, const FinState& p,
                  double tol);

double state_distance(const FinState& a, const FinState& b);

}  // namespace bayeslens::finstoch
