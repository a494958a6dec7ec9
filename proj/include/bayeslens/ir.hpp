#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "bayeslens/errors.hpp"

namespace bayeslens::ir {

enum class BackendTag { FinStoch, Gauss };

// A wire type: a finite set (cardinality >= 1) or a Euclidean space
// (dimension >= 0). Labels are optional display names for finite elements;
// they never affect type equality.
struct ObjectRef {
  BackendTag tag = BackendTag::FinStoch;
  std::size_t size = 1;
  std::vector<std::string> labels;

  static ObjectRef finite(std::size_t card, std::vector<std::string> labels = {});
  static ObjectRef euclidean(std::size_t dim);
};

// Monoidal unit: cardinality 1 for FinStoch, dimension 0 for Gauss.
ObjectRef unit_object(BackendTag tag);
bool is_unit(const ObjectRef& o);
bool same_object(const ObjectRef& a, const ObjectRef& b);
ObjectRef tensor_object(const ObjectRef& a, const ObjectRef& b);
std::string describe(const ObjectRef& o);

// Syntax of string diagrams. Gen/State name bound kernels; Id/Copy/Del/Swap
// are the structural cells; Seq is diagram-order composition (left first);
// Par is side-by-side tensoring (leftmost child = leftmost wires).
struct KernelExpr {
  enum class Kind { Gen, State, Id, Copy, Del, Swap, Seq, Par };

  Kind kind = Kind::Id;
  std::string name;                  // Gen, State
  std::vector<ObjectRef> objects;    // Id/Copy/Del: 1 entry; Swap: 2
  std::vector<KernelExpr> children;  // Seq, Par

  static KernelExpr gen(std::string name);
  static KernelExpr state(std::string name);
  static KernelExpr id(ObjectRef x);
  static KernelExpr copy(ObjectRef x);
  static KernelExpr del(ObjectRef x);
  static KernelExpr swap(ObjectRef a, ObjectRef b);
  static KernelExpr seq(std::vector<KernelExpr> children);
  static KernelExpr par(std::vector<KernelExpr> children);

  bool is_primitive() const { return kind != Kind::Seq && kind != Kind::Par; }
};

// Compact s-expression rendering, used in diagnostics.
std::string to_string(const KernelExpr& e);

struct KernelType {
  ObjectRef dom;
  ObjectRef cod;
};

// Declared types of named generators and states.
using Signature = std::map<std::string, KernelType>;

// Assigns a unique (dom, cod) to every well-formed expression. Throws
// UnboundNameError for names missing from the signature and TypeMismatchError
// (with the offending sub-expression's path) for composition or backend
// mismatches. Total otherwise.
KernelType typecheck(const KernelExpr& expr, const Signature& sig);

// One sequential stage of a normalized diagram: a parallel row of primitive
// cells spanning the full wire profile.
struct Layer {
  std::vector<KernelExpr> cells;
  KernelExpr to_expr() const;
};

struct NormalForm {
  std::vector<Layer> layers;
  ObjectRef dom;
  ObjectRef cod;
};

// Sequentializes a well-typed expression into composable layers: primitives
// become singleton layers, Seq concatenates, Par zips its children after
// padding the shorter ones at the tail with identity layers on their
// codomains. evaluate(normalize(e)) == evaluate(e) by construction.
NormalForm normalize(const KernelExpr& expr, const Signature& sig);

}  // namespace bayeslens::ir
