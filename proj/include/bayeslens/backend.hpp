#pragma once

#include <concepts>
#include <cstddef>
#include <map>
#include <string>

#include "bayeslens/finstoch.hpp"
#include "bayeslens/gauss.hpp"
#include "bayeslens/ir.hpp"

namespace bayeslens {

// Knobs for expression inversion.
//  - zero_policy: row fill for zero-mass observations (FinStoch only).
//  - tol: independence tolerance for the factorized fast path.
//  - factorize: opt in to inverting product layers cell by cell when the
//    incoming state splits as a product.
struct InvertOptions {
  finstoch::ZeroFillPolicy zero_policy = finstoch::ZeroFillPolicy::Uniform;
  double tol = 1e-9;
  bool factorize = false;
};

// Uniform facade over the two kernel categories so lenses, evaluation and
// inversion can be written once. `size` means cardinality or dimension.
struct FinStochBackend {
  static constexpr ir::BackendTag tag = ir::BackendTag::FinStoch;
  using Kernel = finstoch::StochasticMatrix;
  using State = finstoch::FinState;
  using Support = finstoch::FinSupport;
  using SupportedInverse = finstoch::SupportedInverse;

  static std::size_t dom_size(const Kernel& k) { return k.dom_card(); }
  static std::size_t cod_size(const Kernel& k) { return k.cod_card(); }
  static std::size_t unit_size() { return 1; }
  static std::size_t combine(std::size_t a, std::size_t b) { return a * b; }

  static Kernel identity(std::size_t n) { return finstoch::identity(n); }
  static Kernel compose(const Kernel& f, const Kernel& g) { return finstoch::compose(f, g); }
  static Kernel tensor(const Kernel& f, const Kernel& g) { return finstoch::tensor(f, g); }
  static Kernel copy(std::size_t n) { return finstoch::copy(n); }
  static Kernel del(std::size_t n) { return finstoch::del(n); }
  static Kernel swap(std::size_t a, std::size_t b) { return finstoch::swap(a, b); }
  static State pushforward(const Kernel& f, const State& p) {
    return finstoch::pushforward(f, p);
  }

  static Kernel bayes_invert(const Kernel& f, const State& p, const InvertOptions& o) {
    return finstoch::bayes_invert(f, p, o.zero_policy);
  }
  static Support support_of(const State& p) { return finstoch::support_of(p); }
  static Kernel restrict(const Kernel& h, const Support& sd, const Support& sc) {
    return finstoch::restrict(h, sd, sc);
  }
  static Kernel include(const Kernel& g, const Support& sd, const Support& sc) {
    return finstoch::include(g, sd, sc);
  }
  static SupportedInverse bayes_invert_supported(const Kernel& f, const State& p) {
    return finstoch::bayes_invert_supported(f, p);
  }

  static double inversion_law_residual(const Kernel& f, const Kernel& back, const State& p) {
    return finstoch::inversion_law_residual(f, back, p);
  }
  static double almost_equal_residual(const Kernel& f, const Kernel& g, const State& p) {
    return finstoch::almost_equal_residual(f, g, p);
  }
  static double state_distance(const State& a, const State& b) {
    return finstoch::state_distance(a, b);
  }
  static bool is_valid_state(const State& p) { return finstoch::is_state(p, 1e-6); }
};

struct GaussBackend {
  static constexpr ir::BackendTag tag = ir::BackendTag::Gauss;
  using Kernel = gauss::GaussianKernel;
  using State = gauss::GaussState;
  using Support = gauss::AffineSupport;
  using SupportedInverse = gauss::SupportedInverse;

  static std::size_t dom_size(const Kernel& k) { return k.dom_dim(); }
  static std::size_t cod_size(const Kernel& k) { return k.cod_dim(); }
  static std::size_t unit_size() { return 0; }
  static std::size_t combine(std::size_t a, std::size_t b) { return a + b; }

  static Kernel identity(std::size_t n) { return gauss::identity(n); }
  static Kernel compose(const Kernel& f, const Kernel& g) { return gauss::compose(f, g); }
  static Kernel tensor(const Kernel& f, const Kernel& g) { return gauss::tensor(f, g); }
  static Kernel copy(std::size_t n) { return gauss::copy(n); }
  static Kernel del(std::size_t n) { return gauss::del(n); }
  static Kernel swap(std::size_t a, std::size_t b) { return gauss::swap(a, b); }
  static State pushforward(const Kernel& f, const State& p) {
    return gauss::pushforward(f, p);
  }

  static Kernel bayes_invert(const Kernel& f, const State& p, const InvertOptions&) {
    return gauss::bayes_invert(f, p);
  }
  static Support support_of(const State& p) { return gauss::support_of(p); }
  static Kernel restrict(const Kernel& h, const Support& sd, const Support& sc) {
    return gauss::restrict(h, sd, sc);
  }
  static Kernel include(const Kernel& g, const Support& sd, const Support& sc) {
    return gauss::include(g, sd, sc);
  }
  static SupportedInverse bayes_invert_supported(const Kernel& f, const State& p) {
    return gauss::bayes_invert_supported(f, p);
  }

  static double inversion_law_residual(const Kernel& f, const Kernel& back, const State& p) {
    return gauss::inversion_law_residual(f, back, p);
  }
  static double almost_equal_residual(const Kernel& f, const Kernel& g, const State& p) {
    return gauss::almost_equal_residual(f, g, p);
  }
  static double state_distance(const State& a, const State& b) {
    return gauss::state_distance(a, b);
  }
  static bool is_valid_state(const State& p) {
    return gauss::is_state(p) && p.is_valid(1e-8);
  }
};

template <class B>
concept MarkovBackend = requires(const typename B::Kernel& k, const typename B::State& p,
                                 const typename B::Support& s, const InvertOptions& o,
                                 std::size_t n) {
  { B::tag } -> std::convertible_to<ir::BackendTag>;
  { B::dom_size(k) } -> std::same_as<std::size_t>;
  { B::unit_size() } -> std::same_as<std::size_t>;
  { B::combine(n, n) } -> std::same_as<std::size_t>;
  { B::identity(n) } -> std::same_as<typename B::Kernel>;
  { B::compose(k, k) } -> std::same_as<typename B::Kernel>;
  { B::tensor(k, k) } -> std::same_as<typename B::Kernel>;
  { B::pushforward(k, p) } -> std::same_as<typename B::State>;
  { B::bayes_invert(k, p, o) } -> std::same_as<typename B::Kernel>;
  { B::support_of(p) } -> std::same_as<typename B::Support>;
  { B::restrict(k, s, s) } -> std::same_as<typename B::Kernel>;
  { B::inversion_law_residual(k, k, p) } -> std::same_as<double>;
  { B::state_distance(p, p) } -> std::same_as<double>;
};

static_assert(MarkovBackend<FinStochBackend>);
static_assert(MarkovBackend<GaussBackend>);

// Named kernels a diagram's Gen/State leaves resolve to.
template <MarkovBackend B>
using Bindings = std::map<std::string, typename B::Kernel>;

// Marginal of a composite state: delete everything before and after the
// middle block. Sizes are in backend units (cards multiply, dims add).
template <MarkovBackend B>
typename B::State marginal(const typename B::State& p, std::size_t before, std::size_t mid,
                           std::size_t after) {
  auto window = B::tensor(B::tensor(B::del(before), B::identity(mid)), B::del(after));
  return B::compose(p, window);
}

// Does p factor as the tensor of its per-block marginals?
template <MarkovBackend B>
bool is_product_state(const typename B::State& p, const std::vector<std::size_t>& blocks,
                      double tol) {
  if (blocks.size() <= 1) return true;
  std::vector<std::size_t> prefix(blocks.size() + 1, B::unit_size());
  for (std::size_t i = 0; i < blocks.size(); ++i)
    prefix[i + 1] = B::combine(prefix[i], blocks[i]);
  std::vector<std::size_t> suffix(blocks.size() + 1, B::unit_size());
  for (std::size_t i = blocks.size(); i-- > 0;)
    suffix[i] = B::combine(blocks[i], suffix[i + 1]);

  typename B::State acc = marginal<B>(p, prefix[0], blocks[0], suffix[1]);
  for (std::size_t i = 1; i < blocks.size(); ++i)
    acc = B::tensor(acc, marginal<B>(p, prefix[i], blocks[i], suffix[i + 1]));
  return B::state_distance(p, acc) <= tol;
}

}  // namespace bayeslens
