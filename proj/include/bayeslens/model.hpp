#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bayeslens/backend.hpp"
#include "bayeslens/chain.hpp"
#include "bayeslens/ir.hpp"

namespace bayeslens::model {

// The optional "chain" section of a model file, by name; resolved against
// the declared objects/generators by chain_model()/hmm_model().
struct ChainSection {
  std::string parameters;  // object name for Θ
  std::string states;      // object name for S
  std::string transition;  // generator name, (S ⊗ Θ) -> S
  std::string initial;     // generator name, I -> S
  std::optional<std::string> observation;  // generator name S -> O (HMM)
};

// A parsed model file: declared objects, typed generators with their
// kernels, an optional diagram, an optional prior, an optional chain
// section. The declaration order of objects/generators is preserved for
// report output.
struct ModelFile {
  ir::BackendTag category = ir::BackendTag::FinStoch;

  std::vector<std::string> object_order;
  std::map<std::string, ir::ObjectRef> objects;

  std::vector<std::string> generator_order;
  ir::Signature signature;
  Bindings<FinStochBackend> fin_bindings;
  Bindings<GaussBackend> gauss_bindings;

  std::optional<ir::KernelExpr> diagram;

  std::optional<std::string> prior_name;  // set when the prior was named
  std::optional<finstoch::FinState> fin_prior;
  std::optional<gauss::GaussState> gauss_prior;

  std::optional<ChainSection> chain;

  bool has_chain() const { return chain.has_value(); }
  bool has_hmm() const { return chain && chain->observation; }

  // Resolve the chain section into a runnable model. Throws ModelError on
  // missing names or shape mismatches.
  chain::MarkovChainModel chain_model() const;
  chain::HmmModel hmm_model() const;

  // Look up a declared object (throws ModelError if missing; "I" is the
  // unit object).
  const ir::ObjectRef& object(const std::string& name) const;
};

// Parse a model from JSON text / from a file on disk. Structural problems
// (bad schema, unknown names, shape mismatches) throw ModelError; value
// problems (row sums, PSD) are left for validation so `check` can report
// them rather than die.
ModelFile parse_model_text(const std::string& text);
ModelFile load_model(const std::string& path);

}  // namespace bayeslens::model
