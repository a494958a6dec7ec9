#pragma once

#include <cstddef>
#include <vector>

#include "bayeslens/backend.hpp"
#include "bayeslens/finstoch.hpp"
#include "bayeslens/ir.hpp"

namespace bayeslens::chain {

// Parameterized Markov chain: a transition kernel t : S ⊗ Θ -> S (row index
// s * |Θ| + θ), a fixed initial state on S, and a prior on the parameter
// space Θ.
struct MarkovChainModel {
  ir::ObjectRef theta;
  ir::ObjectRef state;
  finstoch::StochasticMatrix transition;
  finstoch::FinState initial;
  finstoch::FinState prior;

  void validate() const;  // shapes + stochasticity; throws ModelError
};

// Chain whose states are observed through an extra emission kernel
// S -> O applied at every step.
struct HmmModel {
  MarkovChainModel chain;
  ir::ObjectRef obs;
  finstoch::StochasticMatrix observation;

  void validate() const;
};

// The length-n trace diagram f_n : Θ -> S^⊗n, already in layer form:
// start the chain, then alternate copy layers (duplicate the current state
// and the parameter) with transition layers (advance one step), deleting
// the parameter wire after its last use. Output wires are ordered earliest
// step first; S^⊗n uses row-major indexing with the first step most
// significant. Layer count is 2n - 1. Generators are named "t" (transition)
// and "s" (initial); HMM adds "o" (observation). Throws for n < 1.
ir::KernelExpr build_trace_expr(const MarkovChainModel& model, std::size_t n);
ir::Signature trace_signature(const MarkovChainModel& model);
Bindings<FinStochBackend> trace_bindings(const MarkovChainModel& model);

// The trace diagram post-composed with one observation kernel per output
// wire: Θ -> O^⊗n, 2n layers.
ir::KernelExpr build_hmm_expr(const HmmModel& model, std::size_t n);
ir::Signature hmm_signature(const HmmModel& model);
Bindings<FinStochBackend> hmm_bindings(const HmmModel& model);

using Trace = std::vector<std::size_t>;

enum class Method { Compositional, Monolithic };

struct PosteriorResult {
  // Posterior over the parameters, carried on its own support (zero-prior
  // and zero-likelihood parameters are both excluded); support.indices maps
  // back to raw Θ indices.
  finstoch::FinState posterior;
  finstoch::FinSupport support;
  double observation_mass = 0.0;  // pushforward mass of the observed tuple
};

// Parameter posterior given an observed trace. Compositional inverts the
// trace diagram layer by layer and applies the result to the observation
// (implemented matrix-free, so wide intermediate profiles never
// materialize); Monolithic inverts the evaluated kernel Θ -> S^⊗n in one
// step. The two agree within float tolerance. Throws
// ZeroMassObservationError when the trace has zero mass under every
// supported parameter.
PosteriorResult posterior_parameters(const MarkovChainModel& model, const Trace& trace,
                                     Method method);
PosteriorResult posterior_parameters_hmm(const HmmModel& model, const Trace& trace,
                                         Method method);

// P(trace | θ) for every raw parameter index, computed matrix-free.
std::vector<double> trace_likelihood(const MarkovChainModel& model, const Trace& trace);
std::vector<double> trace_likelihood_hmm(const HmmModel& model, const Trace& trace);

}  // namespace bayeslens::chain
