#include "bayeslens/gauss.hpp"

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

namespace bayeslens::gauss {

namespace {

double max_abs(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double max_abs(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

void check_composable(const GaussianKernel& f, const GaussianKernel& g) {
  if (f.cod_dim() != g.dom_dim())
    throw DimensionMismatchError("compose: codomain dim " + std::to_string(f.cod_dim()) +
                                 " vs domain dim " + std::to_string(g.dom_dim()));
}

void check_state_on(const GaussState& p, std::size_t dim, const char* who) {
  if (!is_state(p)) throw DimensionMismatchError(std::string(who) + ": prior is not a state");
  if (p.cod_dim() != dim)
    throw DimensionMismatchError(std::string(who) + ": prior lives on dim " +
                                 std::to_string(p.cod_dim()) + ", expected " +
                                 std::to_string(dim));
}

}  // namespace

double GaussianKernel::symmetry_residual() const {
  return max_abs(Eigen::MatrixXd(S - S.transpose()));
}

double GaussianKernel::min_eigenvalue() const {
  if (S.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(S),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool GaussianKernel::is_valid(double tol) const {
  if (b.size() != M.rows() || S.rows() != M.rows() || S.cols() != M.rows()) return false;
  return symmetry_residual() <= tol && min_eigenvalue() >= -tol;
}

GaussState make_state(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
  GaussState p;
  p.M = Eigen::MatrixXd::Zero(mean.size(), 0);
  p.b = std::move(mean);
  p.S = std::move(cov);
  if (p.S.rows() != p.b.size() || p.S.cols() != p.b.size())
    throw DimensionMismatchError("make_state: covariance shape does not match mean");
  return p;
}

GaussState unit_state() {
  return make_state(Eigen::VectorXd(0), Eigen::MatrixXd(0, 0));
}

bool is_state(const GaussianKernel& k) { return k.dom_dim() == 0; }

GaussianKernel identity(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  GaussianKernel k;
  k.M = Eigen::MatrixXd::Identity(n, n);
  k.b = Eigen::VectorXd::Zero(n);
  k.S = Eigen::MatrixXd::Zero(n, n);
  return k;
}

GaussianKernel compose(const GaussianKernel& f, const GaussianKernel& g) {
  check_composable(f, g);
  GaussianKernel k;
  k.M = g.M * f.M;
  k.b = g.M * f.b + g.b;
  k.S = symmetrize(g.M * f.S * g.M.transpose() + g.S);
  return k;
}

GaussianKernel tensor(const GaussianKernel& f, const GaussianKernel& g) {
  const auto fd = static_cast<Eigen::Index>(f.dom_dim());
  const auto fc = static_cast<Eigen::Index>(f.cod_dim());
  const auto gd = static_cast<Eigen::Index>(g.dom_dim());
  const auto gc = static_cast<Eigen::Index>(g.cod_dim());
  GaussianKernel k;
  k.M = Eigen::MatrixXd::Zero(fc + gc, fd + gd);
  k.M.topLeftCorner(fc, fd) = f.M;
  k.M.bottomRightCorner(gc, gd) = g.M;
  k.b = Eigen::VectorXd(fc + gc);
  k.b << f.b, g.b;
  k.S = Eigen::MatrixXd::Zero(fc + gc, fc + gc);
  k.S.topLeftCorner(fc, fc) = f.S;
  k.S.bottomRightCorner(gc, gc) = g.S;
  return k;
}

GaussianKernel copy(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  GaussianKernel k;
  k.M = Eigen::MatrixXd::Zero(2 * n, n);
  k.M.topRows(n) = Eigen::MatrixXd::Identity(n, n);
  k.M.bottomRows(n) = Eigen::MatrixXd::Identity(n, n);
  k.b = Eigen::VectorXd::Zero(2 * n);
  k.S = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  return k;
}

GaussianKernel del(std::size_t dim) {
  GaussianKernel k;
  k.M = Eigen::MatrixXd::Zero(0, static_cast<Eigen::Index>(dim));
  k.b = Eigen::VectorXd(0);
  k.S = Eigen::MatrixXd(0, 0);
  return k;
}

GaussianKernel swap(std::size_t dim_a, std::size_t dim_b) {
  const auto a = static_cast<Eigen::Index>(dim_a);
  const auto bdim = static_cast<Eigen::Index>(dim_b);
  GaussianKernel k;
  k.M = Eigen::MatrixXd::Zero(a + bdim, a + bdim);
  k.M.topRightCorner(bdim, bdim) = Eigen::MatrixXd::Identity(bdim, bdim);
  k.M.bottomLeftCorner(a, a) = Eigen::MatrixXd::Identity(a, a);
  k.b = Eigen::VectorXd::Zero(a + bdim);
  k.S = Eigen::MatrixXd::Zero(a + bdim, a + bdim);
  return k;
}

GaussState pushforward(const GaussianKernel& f, const GaussState& p) {
  check_state_on(p, f.dom_dim(), "pushforward");
  return compose(p, f);
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) {
  return 0.5 * (a + a.transpose());
}

Eigen::MatrixXd pinv_psd(const Eigen::MatrixXd& a, double rank_tol) {
  if (a.rows() == 0) return Eigen::MatrixXd(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(a));
  const Eigen::VectorXd lam = es.eigenvalues();
  const double thr = rank_tol * std::max(1.0, lam.size() ? lam.maxCoeff() : 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) > thr) inv(i) = 1.0 / lam(i);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

GaussianKernel bayes_invert(const GaussianKernel& f, const GaussState& p) {
  check_state_on(p, f.dom_dim(), "bayes_invert");
  const Eigen::MatrixXd sigma = symmetrize(p.S);
  const GaussState q = compose(p, f);
  const Eigen::MatrixXd gain = sigma * f.M.transpose() * pinv_psd(q.S);
  GaussianKernel back;
  back.M = gain;
  back.b = p.b - gain * q.b;
  back.S = symmetrize(sigma - gain * f.M * sigma);
  return back;
}

AffineSupport support_of(const GaussState& p, double rank_tol) {
  if (!is_state(p)) throw DimensionMismatchError("support_of: not a state");
  AffineSupport s;
  s.base_dim = p.cod_dim();
  s.offset = p.b;

  const auto n = static_cast<Eigen::Index>(s.base_dim);
  std::vector<std::pair<double, Eigen::Index>> kept;
  Eigen::MatrixXd vecs;
  if (n > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(p.S));
    const Eigen::VectorXd lam = es.eigenvalues();
    vecs = es.eigenvectors();
    const double thr = rank_tol * std::max(1.0, lam.maxCoeff());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
      if (lam(i) > thr) kept.emplace_back(lam(i), i);
    // Descending variance; deterministic orientation (largest-|entry|
    // coordinate made positive).
    std::sort(kept.begin(), kept.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
  }

  s.rank = kept.size();
  const auto k = static_cast<Eigen::Index>(s.rank);
  s.basis = Eigen::MatrixXd(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::VectorXd v = vecs.col(kept[static_cast<std::size_t>(j)].second);
    Eigen::Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    if (v(pivot) < 0) v = -v;
    s.basis.col(j) = v;
  }

  s.inclusion.M = s.basis;
  s.inclusion.b = s.offset;
  s.inclusion.S = Eigen::MatrixXd::Zero(n, n);
  s.retraction.M = s.basis.transpose();
  s.retraction.b = -s.basis.transpose() * s.offset;
  s.retraction.S = Eigen::MatrixXd::Zero(k, k);
  return s;
}

GaussianKernel restrict(const GaussianKernel& h, const AffineSupport& s_dom,
                        const AffineSupport& s_cod) {
  return compose(compose(s_dom.inclusion, h), s_cod.retraction);
}

GaussianKernel include(const GaussianKernel& g, const AffineSupport& s_dom,
                       const AffineSupport& s_cod) {
  return compose(compose(s_dom.retraction, g), s_cod.inclusion);
}

SupportedInverse bayes_invert_supported(const GaussianKernel& f, const GaussState& p,
                                        double rank_tol) {
  SupportedInverse inv;
  inv.cod_support = support_of(p, rank_tol);
  inv.dom_support = support_of(compose(p, f), rank_tol);
  inv.kernel = restrict(bayes_invert(f, p), inv.dom_support, inv.cod_support);
  inv.kernel.S = symmetrize(inv.kernel.S);
  return inv;
}

GaussState joint_state(const GaussianKernel& f, const GaussState& p) {
  check_state_on(p, f.dom_dim(), "joint_state");
  const auto n = static_cast<Eigen::Index>(f.dom_dim());
  const auto m = static_cast<Eigen::Index>(f.cod_dim());
  const Eigen::MatrixXd sigma = symmetrize(p.S);
  Eigen::VectorXd mean(n + m);
  mean << p.b, f.M * p.b + f.b;
  Eigen::MatrixXd cov(n + m, n + m);
  cov.topLeftCorner(n, n) = sigma;
  cov.topRightCorner(n, m) = sigma * f.M.transpose();
  cov.bottomLeftCorner(m, n) = f.M * sigma;
  cov.bottomRightCorner(m, m) = f.M * sigma * f.M.transpose() + f.S;
  return make_state(std::move(mean), symmetrize(cov));
}

double inversion_law_residual(const GaussianKernel& f, const GaussianKernel& backward,
                              const GaussState& p) {
  if (backward.dom_dim() != f.cod_dim() || backward.cod_dim() != f.dom_dim())
    throw DimensionMismatchError("inversion_law_residual: backward has wrong shape");
  const GaussState q = compose(p, f);
  const auto n = static_cast<Eigen::Index>(f.dom_dim());
  const auto m = static_cast<Eigen::Index>(f.cod_dim());

  const GaussState lhs = joint_state(f, p);  // on dom ⊕ cod

  // Backward-side joint, assembled directly in the same dom ⊕ cod order.
  Eigen::VectorXd mean(n + m);
  mean << backward.M * q.b + backward.b, q.b;
  const Eigen::MatrixXd qs = symmetrize(q.S);
  Eigen::MatrixXd cov(n + m, n + m);
  cov.topLeftCorner(n, n) = backward.M * qs * backward.M.transpose() + backward.S;
  cov.topRightCorner(n, m) = backward.M * qs;
  cov.bottomLeftCorner(m, n) = qs * backward.M.transpose();
  cov.bottomRightCorner(m, m) = qs;

  return std::max(max_abs(Eigen::VectorXd(lhs.b - mean)),
                  max_abs(Eigen::MatrixXd(lhs.S - cov)));
}

double almost_equal_residual(const GaussianKernel& f, const GaussianKernel& g,
                             const GaussState& p) {
  if (f.dom_dim() != g.dom_dim() || f.cod_dim() != g.cod_dim())
    throw DimensionMismatchError("almost_equal: kernels have different shapes");
  const GaussState jf = joint_state(f, p);
  const GaussState jg = joint_state(g, p);
  return std::max(max_abs(Eigen::VectorXd(jf.b - jg.b)),
                  max_abs(Eigen::MatrixXd(jf.S - jg.S)));
}

bool almost_equal(const GaussianKernel& f, const GaussianKernel& g, const GaussState& p,
                  double tol) {
  return almost_equal_residual(f, g, p) <= tol;
}

double state_distance(const GaussState& a, const GaussState& b) {
  if (a.cod_dim() != b.cod_dim())
    throw DimensionMismatchError("state_distance: different dimensions");
  return std::max(max_abs(Eigen::VectorXd(a.b - b.b)),
                  max_abs(Eigen::MatrixXd(a.S - b.S)));
}

}  // namespace bayeslens::gauss
