#pragma once

#include <functional>
#include <utility>

#include "bayeslens/backend.hpp"

namespace bayeslens {

// A kernel bundled with a prior-dependent backward map. The backward returns
// an ordinary kernel cod -> dom; nothing is claimed off the pushforward's
// support (zero-mass rows follow whatever policy built the lens).
template <MarkovBackend B>
struct BayesianLens {
  typename B::Kernel forward;
  std::function<typename B::Kernel(const typename B::State&)> backward;
};

// Like BayesianLens, but the backward lands between support objects:
// a kernel supp(forward ∘ p) -> supp(p). On those supports the inverse is
// unique, so no policy enters.
template <MarkovBackend B>
struct DependentBayesianLens {
  typename B::Kernel forward;
  std::function<typename B::SupportedInverse(const typename B::State&)> backward;
};

template <MarkovBackend B>
BayesianLens<B> identity_lens(std::size_t size) {
  return {B::identity(size),
          [size](const typename B::State&) { return B::identity(size); }};
}

// Chain rule: the composite backward runs the downstream inverse at the
// pushed-forward prior, then the upstream inverse at the original prior.
template <MarkovBackend B>
BayesianLens<B> lens_compose(const BayesianLens<B>& l1, const BayesianLens<B>& l2) {
  BayesianLens<B> out;
  out.forward = B::compose(l1.forward, l2.forward);
  out.backward = [l1, l2](const typename B::State& p) {
    const auto mid = B::pushforward(l1.forward, p);
    return B::compose(l2.backward(mid), l1.backward(p));
  };
  return out;
}

template <MarkovBackend B>
DependentBayesianLens<B> lens_compose(const DependentBayesianLens<B>& l1,
                                      const DependentBayesianLens<B>& l2) {
  DependentBayesianLens<B> out;
  out.forward = B::compose(l1.forward, l2.forward);
  out.backward = [l1, l2](const typename B::State& p) {
    const auto mid = B::pushforward(l1.forward, p);
    auto down = l2.backward(mid);  // supp(f2∘f1∘p) -> supp(f1∘p)
    auto up = l1.backward(p);      // supp(f1∘p)    -> supp(p)
    if (B::cod_size(down.kernel) != B::dom_size(up.kernel))
      throw DimensionMismatchError(
          "lens_compose: middle supports disagree between the two backwards");
    typename B::SupportedInverse composed;
    composed.dom_support = std::move(down.dom_support);
    composed.cod_support = std::move(up.cod_support);
    composed.kernel = B::compose(down.kernel, up.kernel);
    return composed;
  };
  return out;
}

// Tensor of lenses: backward runs each factor's backward at that factor's
// marginal (delete the other factor), then tensors the results. Exact when
// the prior is a product; a genuinely correlated prior can break the
// inversion law for the tensored lens.
template <MarkovBackend B>
BayesianLens<B> lens_tensor(const BayesianLens<B>& l1, const BayesianLens<B>& l2) {
  BayesianLens<B> out;
  out.forward = B::tensor(l1.forward, l2.forward);
  const std::size_t d1 = B::dom_size(l1.forward);
  const std::size_t d2 = B::dom_size(l2.forward);
  out.backward = [l1, l2, d1, d2](const typename B::State& p) {
    const auto p1 = marginal<B>(p, B::unit_size(), d1, d2);
    const auto p2 = marginal<B>(p, d1, d2, B::unit_size());
    return B::tensor(l1.backward(p1), l2.backward(p2));
  };
  return out;
}

// The inversion functor on kernels: forward = f, backward = Bayes inverse.
// Functorial up to almost-sure equality at the prior.
template <MarkovBackend B>
BayesianLens<B> inversion_functor(const typename B::Kernel& f,
                                  const InvertOptions& options = {}) {
  return {f, [f, options](const typename B::State& p) {
            return B::bayes_invert(f, p, options);
          }};
}

// The exact inversion functor: backward lands between supports, where the
// inverse is unique; functorial on the nose (strictly, not just a.s.).
template <MarkovBackend B>
DependentBayesianLens<B> exact_inversion_functor(const typename B::Kernel& f) {
  return {f, [f](const typename B::State& p) {
            return B::bayes_invert_supported(f, p);
          }};
}

// Re-embed a dependent lens's supported backward into the ambient spaces.
template <MarkovBackend B>
BayesianLens<B> include_lens(const DependentBayesianLens<B>& l) {
  return {l.forward, [l](const typename B::State& p) {
            auto inv = l.backward(p);
            return B::include(inv.kernel, inv.dom_support, inv.cod_support);
          }};
}

struct LawReport {
  double residual = 0.0;
  double tol = 0.0;
  bool pass = false;
};

// Does the lens's backward at p satisfy the inversion law against forward?
template <MarkovBackend B>
LawReport check_lens_law(const BayesianLens<B>& lens, const typename B::State& p,
                         double tol) {
  LawReport r;
  r.tol = tol;
  r.residual = B::inversion_law_residual(lens.forward, lens.backward(p), p);
  r.pass = r.residual <= tol;
  return r;
}

}  // namespace bayeslens
