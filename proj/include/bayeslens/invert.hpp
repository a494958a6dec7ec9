#pragma once

#include <utility>
#include <vector>

#include "bayeslens/evaluate.hpp"
#include "bayeslens/lens.hpp"

namespace bayeslens {

namespace detail {

// Ordinary (ambient) Bayesian inverse of one normalized layer at its
// incoming state. The caller restricts the result onto supports, which
// erases any policy dependence.
template <MarkovBackend B>
typename B::Kernel layer_ordinary_inverse(const ir::Layer& layer,
                                          const typename B::Kernel& kernel,
                                          const typename B::State& incoming,
                                          const ir::Signature& sig,
                                          const Bindings<B>& bindings,
                                          const InvertOptions& options) {
  using Kind = ir::KernelExpr::Kind;

  // Purely structural layers are invertible on the nose: identities stay
  // put, swaps flip their arguments. No division, no policy.
  bool structural = true;
  for (const auto& cell : layer.cells)
    if (cell.kind != Kind::Id && cell.kind != Kind::Swap) {
      structural = false;
      break;
    }
  if (structural) {
    std::vector<ir::KernelExpr> mirrored;
    mirrored.reserve(layer.cells.size());
    for (const auto& cell : layer.cells)
      mirrored.push_back(cell.kind == Kind::Id
                             ? cell
                             : ir::KernelExpr::swap(cell.objects[1], cell.objects[0]));
    ir::Layer inverse_layer{std::move(mirrored)};
    return evaluate<B>(inverse_layer.to_expr(), bindings);
  }

  // A lone deleted wire resurrects as the incoming state: the state is
  // itself the kernel unit -> X that the inverse must be.
  if (layer.cells.size() == 1 && layer.cells[0].kind == Kind::Del) return incoming;

  // Opt-in fast path: when the incoming state splits as a product across the
  // layer's cells, invert each cell at its own marginal and tensor.
  if (options.factorize && layer.cells.size() >= 2) {
    std::vector<std::size_t> blocks;
    std::vector<typename B::Kernel> cells;
    blocks.reserve(layer.cells.size());
    cells.reserve(layer.cells.size());
    for (const auto& cell : layer.cells) {
      blocks.push_back(ir::typecheck(cell, sig).dom.size);
      cells.push_back(evaluate<B>(cell, bindings));
    }
    if (is_product_state<B>(incoming, blocks, options.tol)) {
      std::size_t before = B::unit_size();
      std::size_t after = B::unit_size();
      for (std::size_t j = 1; j < blocks.size(); ++j) after = B::combine(after, blocks[j]);

      typename B::Kernel acc =
          B::bayes_invert(cells[0], marginal<B>(incoming, before, blocks[0], after), options);
      for (std::size_t j = 1; j < blocks.size(); ++j) {
        before = B::combine(before, blocks[j - 1]);
        after = B::unit_size();
        for (std::size_t i = j + 1; i < blocks.size(); ++i)
          after = B::combine(after, blocks[i]);
        acc = B::tensor(acc, B::bayes_invert(
                                 cells[j], marginal<B>(incoming, before, blocks[j], after),
                                 options));
      }
      return acc;
    }
  }

  return B::bayes_invert(kernel, incoming, options);
}

}  // namespace detail

// Inverts a diagram layer by layer: normalize, push the prior through the
// layers, invert each layer at its incoming state, restrict each inverse to
// the adjacent supports, and compose back-to-front. The result is the
// dependent lens whose backward is the unique supported inverse of the whole
// diagram — equal (within float drift) to inverting the evaluated kernel
// monolithically, by the chain rule.
template <MarkovBackend B>
DependentBayesianLens<B> invert_expr(const ir::KernelExpr& expr,
                                     const typename B::State& prior,
                                     const ir::Signature& sig,
                                     const Bindings<B>& bindings,
                                     const InvertOptions& options = {}) {
  const ir::KernelType type = ir::typecheck(expr, sig);
  if (type.dom.tag != B::tag)
    throw DimensionMismatchError("invert_expr: diagram belongs to the other backend");
  if (!B::is_valid_state(prior))
    throw DegeneratePriorError("invert_expr: prior fails state validation");
  if (B::cod_size(prior) != type.dom.size)
    throw DimensionMismatchError("invert_expr: prior does not live on the diagram domain");

  ir::NormalForm nf = ir::normalize(expr, sig);

  DependentBayesianLens<B> lens;
  lens.forward = evaluate<B>(expr, bindings);
  lens.backward = [nf = std::move(nf), sig, bindings,
                   options](const typename B::State& p) -> typename B::SupportedInverse {
    if (!B::is_valid_state(p))
      throw DegeneratePriorError("invert_expr backward: prior fails state validation");
    if (B::cod_size(p) != nf.dom.size)
      throw DimensionMismatchError("invert_expr backward: prior on the wrong object");

    const std::size_t m = nf.layers.size();
    std::vector<typename B::Kernel> kernels;
    std::vector<typename B::State> states;
    kernels.reserve(m);
    states.reserve(m + 1);
    states.push_back(p);
    for (const auto& layer : nf.layers) {
      kernels.push_back(evaluate<B>(layer.to_expr(), bindings));
      states.push_back(B::pushforward(kernels.back(), states.back()));
    }
    std::vector<typename B::Support> supports;
    supports.reserve(m + 1);
    for (const auto& s : states) supports.push_back(B::support_of(s));

    typename B::SupportedInverse out;
    out.dom_support = supports[m];
    out.cod_support = supports[0];
    bool have = false;
    for (std::size_t k = m; k-- > 0;) {
      auto ordinary = detail::layer_ordinary_inverse<B>(nf.layers[k], kernels[k],
                                                        states[k], sig, bindings, options);
      auto restricted = B::restrict(ordinary, supports[k + 1], supports[k]);
      out.kernel = have ? B::compose(out.kernel, restricted) : std::move(restricted);
      have = true;
    }
    return out;
  };
  return lens;
}

}  // namespace bayeslens
