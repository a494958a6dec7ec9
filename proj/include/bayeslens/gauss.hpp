#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "bayeslens/errors.hpp"

namespace bayeslens::gauss {

// Affine-Gaussian kernel R^dom -> R^cod: x maps to M x + noise, with noise
// drawn from N(b, S). S is symmetric positive semidefinite; composition and
// inversion re-symmetrize their outputs to keep float drift out of S.
struct GaussianKernel {
  Eigen::MatrixXd M;  // cod_dim x dom_dim
  Eigen::VectorXd b;  // cod_dim
  Eigen::MatrixXd S;  // cod_dim x cod_dim

  std::size_t dom_dim() const { return static_cast<std::size_t>(M.cols()); }
  std::size_t cod_dim() const { return static_cast<std::size_t>(M.rows()); }

  double symmetry_residual() const;  // max |S - S^T|
  double min_eigenvalue() const;     // of (S + S^T)/2
  bool is_valid(double tol = 1e-10) const;
};

// A state is a kernel out of the 0-dimensional space: N(b, S).
using GaussState = GaussianKernel;

GaussState make_state(Eigen::VectorXd mean, Eigen::MatrixXd cov);
GaussState unit_state();  // the unique state on R^0
bool is_state(const GaussianKernel& k);

GaussianKernel identity(std::size_t dim);

// Diagram-order composition: f then g.
GaussianKernel compose(const GaussianKernel& f, const GaussianKernel& g);

// Parallel composition: block-diagonal on stacked coordinates.
GaussianKernel tensor(const GaussianKernel& f, const GaussianKernel& g);

GaussianKernel copy(std::size_t dim);  // x -> (x, x), no noise
GaussianKernel del(std::size_t dim);   // x -> ()
GaussianKernel swap(std::size_t dim_a, std::size_t dim_b);

GaussState pushforward(const GaussianKernel& f, const GaussState& p);

// Eigenvalues below rank_tol * max(1, largest eigenvalue) count as zero.
inline constexpr double kRankTol = 1e-10;

// Moore-Penrose pseudo-inverse of a symmetric PSD matrix.
Eigen::MatrixXd pinv_psd(const Eigen::MatrixXd& a, double rank_tol = kRankTol);

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a);

// Bayesian inverse of f at prior p: with q = f∘p the pushforward and
// C = cov(q), the gain is K = cov(p) Mᵀ C⁺, giving the kernel
// y -> N(K y + (mean(p) - K mean(q)), cov(p) - K M cov(p)).
// The pseudo-inverse keeps this total for singular C; the inversion law holds
// exactly on the mass the prior actually assigns.
GaussianKernel bayes_invert(const GaussianKernel& f, const GaussState& p);

// Support of a Gaussian state: the affine subspace mean + range(cov), carried
// by an orthonormal eigenbasis of the covariance (eigenvalues above the rank
// threshold, sorted descending, signs fixed for determinism). inclusion maps
// support coordinates into the ambient space; retraction projects back.
// retraction-after-inclusion is the identity on the nose;
// inclusion-after-retraction is almost-surely the identity at the state.
struct AffineSupport {
  std::size_t base_dim = 0;
  std::size_t rank = 0;
  Eigen::MatrixXd basis;   // base_dim x rank, orthonormal columns
  Eigen::VectorXd offset;  // the state's mean
  GaussianKernel inclusion;   // rank -> base_dim: u -> basis u + offset
  GaussianKernel retraction;  // base_dim -> rank: x -> basisᵀ (x - offset)
};

AffineSupport support_of(const GaussState& p, double rank_tol = kRankTol);

GaussianKernel restrict(const GaussianKernel& h, const AffineSupport& s_dom,
                        const AffineSupport& s_cod);
GaussianKernel include(const GaussianKernel& g, const AffineSupport& s_dom,
                       const AffineSupport& s_cod);

struct SupportedInverse {
  GaussianKernel kernel;
  AffineSupport dom_support;  // support of the pushforward, on cod(f)
  AffineSupport cod_support;  // support of the prior, on dom(f)
};

SupportedInverse bayes_invert_supported(const GaussianKernel& f, const GaussState& p,
                                        double rank_tol = kRankTol);

// Joint of prior and kernel as a state on dom ⊕ cod:
// mean (μ, Mμ+b), covariance [[Σ, ΣMᵀ], [MΣ, MΣMᵀ+S]].
GaussState joint_state(const GaussianKernel& f, const GaussState& p);

// Max deviation (means and covariances, entrywise) between the two joint
// decompositions of the inversion law.
double inversion_law_residual(const GaussianKernel& f, const GaussianKernel& backward,
                              const GaussState& p);

// Almost-sure equality at p via agreement of the copy-then-apply joints.
double almost_equal_residual(const GaussianKernel& f, const GaussianKernel& g,
                             const GaussState& p);
bool almost_equal(const GaussianKernel& f, const GaussianKernel& g, const GaussState& p,
                  double tol);

double state_distance(const GaussState& a, const GaussState& b);

}  // namespace bayeslens::gauss
