#include "bayeslens/ir.hpp"

#include <utility>

namespace bayeslens::ir {

ObjectRef ObjectRef::finite(std::size_t card, std::vector<std::string> labels) {
  ObjectRef o;
  o.tag = BackendTag::FinStoch;
  o.size = card;
  if (labels.size() == card) o.labels = std::move(labels);
  return o;
}

ObjectRef ObjectRef::euclidean(std::size_t dim) {
  ObjectRef o;
  o.tag = BackendTag::Gauss;
  o.size = dim;
  return o;
}

ObjectRef unit_object(BackendTag tag) {
  return tag == BackendTag::FinStoch ? ObjectRef::finite(1) : ObjectRef::euclidean(0);
}

bool is_unit(const ObjectRef& o) {
  return o.size == (o.tag == BackendTag::FinStoch ? 1u : 0u);
}

bool same_object(const ObjectRef& a, const ObjectRef& b) {
  return a.tag == b.tag && a.size == b.size;
}

ObjectRef tensor_object(const ObjectRef& a, const ObjectRef& b) {
  if (a.tag != b.tag)
    throw DimensionMismatchError("cannot tensor objects from different backends");
  ObjectRef o;
  o.tag = a.tag;
  if (a.tag == BackendTag::FinStoch) {
    o.size = a.size * b.size;
    // Pair labels when both factors carry a full label set.
    if (a.labels.size() == a.size && b.labels.size() == b.size) {
      o.labels.reserve(o.size);
      for (const auto& la : a.labels)
        for (const auto& lb : b.labels) o.labels.push_back("(" + la + "," + lb + ")");
    }
  } else {
    o.size = a.size + b.size;
  }
  return o;
}

std::string describe(const ObjectRef& o) {
  return (o.tag == BackendTag::FinStoch ? "fin[" : "eucl[") + std::to_string(o.size) + "]";
}

KernelExpr KernelExpr::gen(std::string name) {
  KernelExpr e;
  e.kind = Kind::Gen;
  e.name = std::move(name);
  return e;
}

KernelExpr KernelExpr::state(std::string name) {
  KernelExpr e;
  e.kind = Kind::State;
  e.name = std::move(name);
  return e;
}

KernelExpr KernelExpr::id(ObjectRef x) {
  KernelExpr e;
  e.kind = Kind::Id;
  e.objects = {std::move(x)};
  return e;
}

KernelExpr KernelExpr::copy(ObjectRef x) {
  KernelExpr e;
  e.kind = Kind::Copy;
  e.objects = {std::move(x)};
  return e;
}

KernelExpr KernelExpr::del(ObjectRef x) {
  KernelExpr e;
  e.kind = Kind::Del;
  e.objects = {std::move(x)};
  return e;
}

KernelExpr KernelExpr::swap(ObjectRef a, ObjectRef b) {
  KernelExpr e;
  e.kind = Kind::Swap;
  e.objects = {std::move(a), std::move(b)};
  return e;
}

KernelExpr KernelExpr::seq(std::vector<KernelExpr> children) {
  KernelExpr e;
  e.kind = Kind::Seq;
  e.children = std::move(children);
  return e;
}

KernelExpr KernelExpr::par(std::vector<KernelExpr> children) {
  KernelExpr e;
  e.kind = Kind::Par;
  e.children = std::move(children);
  return e;
}

std::string to_string(const KernelExpr& e) {
  switch (e.kind) {
    case KernelExpr::Kind::Gen: return "gen(" + e.name + ")";
    case KernelExpr::Kind::State: return "state(" + e.name + ")";
    case KernelExpr::Kind::Id: return "id(" + describe(e.objects[0]) + ")";
    case KernelExpr::Kind::Copy: return "copy(" + describe(e.objects[0]) + ")";
    case KernelExpr::Kind::Del: return "del(" + describe(e.objects[0]) + ")";
    case KernelExpr::Kind::Swap:
      return "swap(" + describe(e.objects[0]) + "," + describe(e.objects[1]) + ")";
    case KernelExpr::Kind::Seq:
    case KernelExpr::Kind::Par: {
      std::string s = e.kind == KernelExpr::Kind::Seq ? "seq[" : "par[";
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i) s += "; ";
        s += to_string(e.children[i]);
      }
      return s + "]";
    }
  }
  return "?";
}

namespace {

std::string child_path(const std::string& base, const char* kind, std::size_t i) {
  std::string p = base.empty() ? std::string() : base + ".";
  return p + kind + "[" + std::to_string(i) + "]";
}

KernelType check(const KernelExpr& e, const Signature& sig, const std::string& path) {
  using Kind = KernelExpr::Kind;
  switch (e.kind) {
    case Kind::Gen: {
      auto it = sig.find(e.name);
      if (it == sig.end()) throw UnboundNameError(e.name, path);
      return it->second;
    }
    case Kind::State: {
      auto it = sig.find(e.name);
      if (it == sig.end()) throw UnboundNameError(e.name, path);
      if (!is_unit(it->second.dom))
        throw TypeMismatchError(path, "state '" + e.name + "' must have unit domain, got " +
                                          describe(it->second.dom));
      return it->second;
    }
    case Kind::Id: return {e.objects[0], e.objects[0]};
    case Kind::Copy: return {e.objects[0], tensor_object(e.objects[0], e.objects[0])};
    case Kind::Del: return {e.objects[0], unit_object(e.objects[0].tag)};
    case Kind::Swap: {
      if (e.objects[0].tag != e.objects[1].tag)
        throw TypeMismatchError(path, "swap across backends");
      return {tensor_object(e.objects[0], e.objects[1]),
              tensor_object(e.objects[1], e.objects[0])};
    }
    case Kind::Seq: {
      if (e.children.empty()) throw TypeMismatchError(path, "empty seq");
      KernelType t = check(e.children[0], sig, child_path(path, "seq", 0));
      for (std::size_t i = 1; i < e.children.size(); ++i) {
        const std::string cp = child_path(path, "seq", i);
        KernelType u = check(e.children[i], sig, cp);
        if (!same_object(t.cod, u.dom))
          throw TypeMismatchError(cp, "composition mismatch: upstream codomain " +
                                           describe(t.cod) + " vs domain " + describe(u.dom));
        t.cod = u.cod;
      }
      return t;
    }
    case Kind::Par: {
      if (e.children.empty()) throw TypeMismatchError(path, "empty par");
      KernelType t = check(e.children[0], sig, child_path(path, "par", 0));
      for (std::size_t i = 1; i < e.children.size(); ++i) {
        const std::string cp = child_path(path, "par", i);
        KernelType u = check(e.children[i], sig, cp);
        if (t.dom.tag != u.dom.tag)
          throw TypeMismatchError(cp, "tensor across backends");
        t.dom = tensor_object(t.dom, u.dom);
        t.cod = tensor_object(t.cod, u.cod);
      }
      return t;
    }
  }
  throw TypeMismatchError(path, "unknown node kind");
}

struct NormPart {
  std::vector<Layer> layers;
  KernelType type;
};

NormPart norm(const KernelExpr& e, const Signature& sig, const std::string& path) {
  using Kind = KernelExpr::Kind;
  if (e.is_primitive()) {
    NormPart part;
    part.type = check(e, sig, path);
    part.layers.push_back(Layer{{e}});
    return part;
  }
  if (e.kind == Kind::Seq) {
    NormPart part;
    bool first = true;
    for (std::size_t i = 0; i < e.children.size(); ++i) {
      NormPart sub = norm(e.children[i], sig, child_path(path, "seq", i));
      if (first) {
        part.type = sub.type;
        first = false;
      } else {
        part.type.cod = sub.type.cod;
      }
      for (auto& l : sub.layers) part.layers.push_back(std::move(l));
    }
    return part;
  }
  // Par: normalize children, pad to equal depth with identity layers on each
  // child's codomain, then zip stage by stage.
  std::vector<NormPart> subs;
  subs.reserve(e.children.size());
  std::size_t depth = 0;
  for (std::size_t i = 0; i < e.children.size(); ++i) {
    subs.push_back(norm(e.children[i], sig, child_path(path, "par", i)));
    depth = std::max(depth, subs.back().layers.size());
  }
  for (auto& sub : subs)
    while (sub.layers.size() < depth)
      sub.layers.push_back(Layer{{KernelExpr::id(sub.type.cod)}});

  NormPart part;
  part.type = subs[0].type;
  for (std::size_t i = 1; i < subs.size(); ++i) {
    part.type.dom = tensor_object(part.type.dom, subs[i].type.dom);
    part.type.cod = tensor_object(part.type.cod, subs[i].type.cod);
  }
  part.layers.resize(depth);
  for (std::size_t j = 0; j < depth; ++j)
    for (auto& sub : subs)
      for (auto& cell : sub.layers[j].cells) part.layers[j].cells.push_back(cell);
  return part;
}

}  // namespace

KernelType typecheck(const KernelExpr& expr, const Signature& sig) {
  return check(expr, sig, "");
}

KernelExpr Layer::to_expr() const {
  if (cells.size() == 1) return cells[0];
  return KernelExpr::par(cells);
}

NormalForm normalize(const KernelExpr& expr, const Signature& sig) {
  typecheck(expr, sig);  // surface errors with full paths before rewriting
  NormPart part = norm(expr, sig, "");
  return NormalForm{std::move(part.layers), part.type.dom, part.type.cod};
}

}  // namespace bayeslens::ir
