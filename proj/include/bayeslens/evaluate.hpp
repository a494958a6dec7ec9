#pragma once

#include "bayeslens/backend.hpp"
#include "bayeslens/ir.hpp"

namespace bayeslens {

// Homomorphic evaluation of a diagram into backend kernels: Seq folds with
// compose, Par with tensor, structural cells with their backend counterparts,
// names with their bindings. Evaluation commutes with normalize by
// associativity/interchange; tests pin that down.
template <MarkovBackend B>
typename B::Kernel evaluate(const ir::KernelExpr& e, const Bindings<B>& bindings) {
  using Kind = ir::KernelExpr::Kind;
  switch (e.kind) {
    case Kind::Gen:
    case Kind::State: {
      auto it = bindings.find(e.name);
      if (it == bindings.end()) throw UnboundNameError(e.name);
      return it->second;
    }
    case Kind::Id:
      if (e.objects[0].tag != B::tag)
        throw DimensionMismatchError("evaluate: object from the wrong backend");
      return B::identity(e.objects[0].size);
    case Kind::Copy:
      if (e.objects[0].tag != B::tag)
        throw DimensionMismatchError("evaluate: object from the wrong backend");
      return B::copy(e.objects[0].size);
    case Kind::Del:
      if (e.objects[0].tag != B::tag)
        throw DimensionMismatchError("evaluate: object from the wrong backend");
      return B::del(e.objects[0].size);
    case Kind::Swap:
      if (e.objects[0].tag != B::tag || e.objects[1].tag != B::tag)
        throw DimensionMismatchError("evaluate: object from the wrong backend");
      return B::swap(e.objects[0].size, e.objects[1].size);
    case Kind::Seq: {
      auto k = evaluate<B>(e.children.at(0), bindings);
      for (std::size_t i = 1; i < e.children.size(); ++i)
        k = B::compose(k, evaluate<B>(e.children[i], bindings));
      return k;
    }
    case Kind::Par: {
      auto k = evaluate<B>(e.children.at(0), bindings);
      for (std::size_t i = 1; i < e.children.size(); ++i)
        k = B::tensor(k, evaluate<B>(e.children[i], bindings));
      return k;
    }
  }
  throw DimensionMismatchError("evaluate: unknown node kind");
}

}  // namespace bayeslens
