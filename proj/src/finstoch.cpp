#include "bayeslens/finstoch.hpp"

#include <string>

namespace bayeslens::finstoch {

namespace {

void check_composable(const StochasticMatrix& f, const StochasticMatrix& g) {
  if (f.cod_card() != g.dom_card())
    throw DimensionMismatchError("compose: codomain " + std::to_string(f.cod_card()) +
                                 " vs domain " + std::to_string(g.dom_card()));
}

}  // namespace

double StochasticMatrix::row_sum_residual() const {
  if (entries.rows() == 0) return 0.0;
  return (entries.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

double StochasticMatrix::min_entry() const {
  if (entries.size() == 0) return 0.0;
  return entries.minCoeff();
}

bool StochasticMatrix::is_stochastic(double tol) const {
  return entries.size() > 0 && min_entry() >= -tol && row_sum_residual() <= tol;
}

FinState make_state(const std::vector<double>& probs) {
  FinState p;
  p.entries = Eigen::Map<const Eigen::RowVectorXd>(probs.data(),
                                                   static_cast<Eigen::Index>(probs.size()));
  return p;
}

FinState dirac(std::size_t index, std::size_t card) {
  if (index >= card) throw DimensionMismatchError("dirac: index out of range");
  FinState p;
  p.entries = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(card));
  p.entries(0, static_cast<Eigen::Index>(index)) = 1.0;
  return p;
}

bool is_state(const StochasticMatrix& m, double tol) {
  return m.dom_card() == 1 && m.is_stochastic(tol);
}

StochasticMatrix identity(std::size_t card) {
  return {Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(card),
                                    static_cast<Eigen::Index>(card))};
}

StochasticMatrix compose(const StochasticMatrix& f, const StochasticMatrix& g) {
  check_composable(f, g);
  return {f.entries * g.entries};
}

StochasticMatrix tensor(const StochasticMatrix& f, const StochasticMatrix& g) {
  const auto fr = f.entries.rows(), fc = f.entries.cols();
  const auto gr = g.entries.rows(), gc = g.entries.cols();
  StochasticMatrix out;
  out.entries.resize(fr * gr, fc * gc);
  for (Eigen::Index i = 0; i < fr; ++i)
    for (Eigen::Index j = 0; j < fc; ++j)
      out.entries.block(i * gr, j * gc, gr, gc) = f.entries(i, j) * g.entries;
  return out;
}

StochasticMatrix copy(std::size_t card) {
  const auto n = static_cast<Eigen::Index>(card);
  StochasticMatrix c;
  c.entries = Eigen::MatrixXd::Zero(n, n * n);
  for (Eigen::Index x = 0; x < n; ++x) c.entries(x, x * n + x) = 1.0;
  return c;
}

StochasticMatrix del(std::size_t card) {
  return {Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(card), 1)};
}

StochasticMatrix swap(std::size_t card_a, std::size_t card_b) {
  const auto a = static_cast<Eigen::Index>(card_a);
  const auto b = static_cast<Eigen::Index>(card_b);
  StochasticMatrix s;
  s.entries = Eigen::MatrixXd::Zero(a * b, b * a);
  for (Eigen::Index x = 0; x < a; ++x)
    for (Eigen::Index y = 0; y < b; ++y) s.entries(x * b + y, y * a + x) = 1.0;
  return s;
}

FinState pushforward(const StochasticMatrix& f, const FinState& p) {
  if (!is_state(p, 1e-6))
    throw DimensionMismatchError("pushforward: prior is not a state row");
  return compose(p, f);
}

StochasticMatrix bayes_invert(const StochasticMatrix& f, const FinState& p,
                              ZeroFillPolicy policy) {
  if (p.cod_card() != f.dom_card())
    throw DimensionMismatchError("bayes_invert: prior lives on card " +
                                 std::to_string(p.cod_card()) + ", kernel domain is " +
                                 std::to_string(f.dom_card()));
  const FinState q = compose(p, f);
  const auto nx = f.entries.rows(), ny = f.entries.cols();
  StochasticMatrix back;
  back.entries.resize(ny, nx);
  for (Eigen::Index y = 0; y < ny; ++y) {
    const double mass = q.entries(0, y);
    if (mass > kSupportTol) {
      for (Eigen::Index x = 0; x < nx; ++x)
        back.entries(y, x) = p.entries(0, x) * f.entries(x, y) / mass;
    } else {
      switch (policy) {
        case ZeroFillPolicy::Uniform:
          back.entries.row(y).setConstant(1.0 / static_cast<double>(nx));
          break;
        case ZeroFillPolicy::FirstIndex:
          back.entries.row(y).setZero();
          back.entries(y, 0) = 1.0;
          break;
        case ZeroFillPolicy::Error:
          throw ZeroMassObservationError("observation " + std::to_string(y) +
                                         " has zero mass under the pushforward");
      }
    }
  }
  return back;
}

FinSupport support_of(const FinState& p, double tol) {
  FinSupport s;
  s.base_card = p.cod_card();
  for (std::size_t i = 0; i < s.base_card; ++i)
    if (p.entries(0, static_cast<Eigen::Index>(i)) > tol) s.indices.push_back(i);
  if (s.indices.empty()) throw EmptySupportError("state has no mass above threshold");

  const auto k = static_cast<Eigen::Index>(s.indices.size());
  const auto n = static_cast<Eigen::Index>(s.base_card);
  s.inclusion.entries = Eigen::MatrixXd::Zero(k, n);
  s.retraction.entries = Eigen::MatrixXd::Zero(n, k);
  // Off-support rows of the retraction spread uniformly over the support; any
  // stochastic choice works, since those rows are hit with probability zero.
  s.retraction.entries.setConstant(1.0 / static_cast<double>(k));
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto i = static_cast<Eigen::Index>(s.indices[static_cast<std::size_t>(j)]);
    s.inclusion.entries(j, i) = 1.0;
    s.retraction.entries.row(i).setZero();
    s.retraction.entries(i, j) = 1.0;
  }
  return s;
}

StochasticMatrix restrict(const StochasticMatrix& h, const FinSupport& s_dom,
                          const FinSupport& s_cod) {
  return compose(compose(s_dom.inclusion, h), s_cod.retraction);
}

StochasticMatrix include(const StochasticMatrix& g, const FinSupport& s_dom,
                         const FinSupport& s_cod) {
  return compose(compose(s_dom.retraction, g), s_cod.inclusion);
}

SupportedInverse bayes_invert_supported(const StochasticMatrix& f, const FinState& p,
                                        double tol) {
  SupportedInverse inv;
  inv.cod_support = support_of(p, tol);
  inv.dom_support = support_of(compose(p, f), tol);
  // Policy choice is erased by the restriction: policy rows live exactly on
  // the observations the dom support discards.
  const StochasticMatrix back = bayes_invert(f, p, ZeroFillPolicy::Uniform);
  inv.kernel = restrict(back, inv.dom_support, inv.cod_support);
  return inv;
}

SupportedInverse copy_inverse_supported(const FinState& p, double tol) {
  const std::size_t n = p.cod_card();
  SupportedInverse inv;
  inv.cod_support = support_of(p, tol);
  inv.dom_support = support_of(compose(p, copy(n)), tol);
  // Surviving pairs are exactly the diagonal (x, x) for supported x, so the
  // two supports have equal size and the inverse is the induced bijection.
  const auto k = static_cast<Eigen::Index>(inv.cod_support.card());
  inv.kernel.entries = Eigen::MatrixXd::Identity(k, k);
  return inv;
}

FinState joint_state(const StochasticMatrix& f, const FinState& p) {
  if (p.cod_card() != f.dom_card())
    throw DimensionMismatchError("joint_state: prior/kernel shape mismatch");
  const auto nx = f.entries.rows(), ny = f.entries.cols();
  FinState j;
  j.entries.resize(1, nx * ny);
  for (Eigen::Index x = 0; x < nx; ++x)
    for (Eigen::Index y = 0; y < ny; ++y)
      j.entries(0, x * ny + y) = p.entries(0, x) * f.entries(x, y);
  return j;
}

double inversion_law_residual(const StochasticMatrix& f, const StochasticMatrix& backward,
                              const FinState& p) {
  if (backward.dom_card() != f.cod_card() || backward.cod_card() != f.dom_card())
    throw DimensionMismatchError("inversion_law_residual: backward has wrong shape");
  const FinState q = compose(p, f);
  double worst = 0.0;
  for (Eigen::Index x = 0; x < f.entries.rows(); ++x)
    for (Eigen::Index y = 0; y < f.entries.cols(); ++y) {
      const double lhs = p.entries(0, x) * f.entries(x, y);
      const double rhs = q.entries(0, y) * backward.entries(y, x);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  return worst;
}

double almost_equal_residual(const StochasticMatrix& f, const StochasticMatrix& g,
                             const FinState& p) {
  if (f.dom_card() != g.dom_card() || f.cod_card() != g.cod_card())
    throw DimensionMismatchError("almost_equal: kernels have different shapes");
  if (p.cod_card() != f.dom_card())
    throw DimensionMismatchError("almost_equal: prior/domain mismatch");
  double worst = 0.0;
  for (Eigen::Index x = 0; x < f.entries.rows(); ++x) {
    const double px = p.entries(0, x);
    for (Eigen::Index y = 0; y < f.entries.cols(); ++y)
      worst = std::max(worst, std::abs(px * (f.entries(x, y) - g.entries(x, y))));
  }
  return worst;
}

bool almost_equal(const StochasticMatrix& f, const StochasticMatrix& g, const FinState& p,
                  double tol) {
  return almost_equal_residual(f, g, p) <= tol;
}

double state_distance(const FinState& a, const FinState& b) {
  if (a.cod_card() != b.cod_card())
    throw DimensionMismatchError("state_distance: different cardinalities");
  return (a.entries - b.entries).cwiseAbs().maxCoeff();
}

}  // namespace bayeslens::finstoch
