#include "bayeslens/chain.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "bayeslens/evaluate.hpp"

namespace bayeslens::chain {

void MarkovChainModel::validate() const {
  if (theta.tag != ir::BackendTag::FinStoch || state.tag != ir::BackendTag::FinStoch)
    throw ModelError("chain model: parameter and state spaces must be finite");
  if (theta.size < 1 || state.size < 1)
    throw ModelError("chain model: empty parameter or state space");
  if (transition.dom_card() != state.size * theta.size || transition.cod_card() != state.size)
    throw ModelError("chain model: transition must map state x parameter to state "
                     "(rows indexed s * |theta| + th)");
  if (!transition.is_stochastic(1e-9))
    throw ModelError("chain model: transition rows must be probability distributions");
  if (!finstoch::is_state(initial, 1e-9) || initial.cod_card() != state.size)
    throw ModelError("chain model: initial must be a state on the state space");
  if (!finstoch::is_state(prior, 1e-9) || prior.cod_card() != theta.size)
    throw DegeneratePriorError("chain model: prior must be a state on the parameter space");
}

void HmmModel::validate() const {
  chain.validate();
  if (obs.tag != ir::BackendTag::FinStoch || obs.size < 1)
    throw ModelError("hmm model: observation space must be finite and nonempty");
  if (observation.dom_card() != chain.state.size || observation.cod_card() != obs.size)
    throw ModelError("hmm model: observation kernel must map states to observations");
  if (!observation.is_stochastic(1e-9))
    throw ModelError("hmm model: observation rows must be probability distributions");
}

ir::KernelExpr build_trace_expr(const MarkovChainModel& model, std::size_t n) {
  if (n < 1) throw DimensionMismatchError("build_trace_expr: trace length must be >= 1");
  const ir::ObjectRef& S = model.state;
  const ir::ObjectRef& Th = model.theta;

  std::vector<ir::KernelExpr> layers;
  if (n == 1) {
    layers.push_back(
        ir::KernelExpr::par({ir::KernelExpr::state("s"), ir::KernelExpr::del(Th)}));
    return ir::KernelExpr::seq(std::move(layers));
  }

  layers.push_back(ir::KernelExpr::par({ir::KernelExpr::state("s"), ir::KernelExpr::id(Th)}));
  for (std::size_t k = 1; k < n; ++k) {
    // Duplicate the current state (one copy becomes output k, the other feeds
    // the next step) and the parameter wire.
    std::vector<ir::KernelExpr> copy_cells;
    for (std::size_t i = 1; i < k; ++i) copy_cells.push_back(ir::KernelExpr::id(S));
    copy_cells.push_back(ir::KernelExpr::copy(S));
    copy_cells.push_back(ir::KernelExpr::copy(Th));
    layers.push_back(ir::KernelExpr::par(std::move(copy_cells)));

    // Advance one step; the parameter wire is deleted after its final use.
    std::vector<ir::KernelExpr> step_cells;
    for (std::size_t i = 0; i < k; ++i) step_cells.push_back(ir::KernelExpr::id(S));
    step_cells.push_back(ir::KernelExpr::gen("t"));
    step_cells.push_back(k + 1 < n ? ir::KernelExpr::id(Th) : ir::KernelExpr::del(Th));
    layers.push_back(ir::KernelExpr::par(std::move(step_cells)));
  }
  return ir::KernelExpr::seq(std::move(layers));
}

ir::Signature trace_signature(const MarkovChainModel& model) {
  ir::Signature sig;
  sig["t"] = {ir::tensor_object(model.state, model.theta), model.state};
  sig["s"] = {ir::unit_object(ir::BackendTag::FinStoch), model.state};
  return sig;
}

Bindings<FinStochBackend> trace_bindings(const MarkovChainModel& model) {
  return {{"t", model.transition}, {"s", model.initial}};
}

ir::KernelExpr build_hmm_expr(const HmmModel& model, std::size_t n) {
  ir::KernelExpr base = build_trace_expr(model.chain, n);
  std::vector<ir::KernelExpr> layers = std::move(base.children);
  std::vector<ir::KernelExpr> obs_cells(n, ir::KernelExpr::gen("o"));
  layers.push_back(ir::KernelExpr::par(std::move(obs_cells)));
  return ir::KernelExpr::seq(std::move(layers));
}

ir::Signature hmm_signature(const HmmModel& model) {
  ir::Signature sig = trace_signature(model.chain);
  sig["o"] = {model.chain.state, model.obs};
  return sig;
}

Bindings<FinStochBackend> hmm_bindings(const HmmModel& model) {
  auto bind = trace_bindings(model.chain);
  bind.emplace("o", model.observation);
  return bind;
}

namespace {

// Matrix-free layer application. A layer is a row of small cells; applying
// the layer's kernel (or its transpose) to a long vector contracts one cell
// axis at a time, so the full layer matrix — whose side can reach |S|^n —
// never exists in memory.
struct Cell {
  Eigen::MatrixXd m;  // dom x cod
  std::size_t dom, cod;
};

using FlowLayer = std::vector<Cell>;

struct Flow {
  std::vector<FlowLayer> layers;
  std::size_t dom = 1, cod = 1;
};

Flow build_flow(const ir::NormalForm& nf, const ir::Signature& sig,
                const Bindings<FinStochBackend>& bind) {
  Flow fl;
  fl.dom = nf.dom.size;
  fl.cod = nf.cod.size;
  fl.layers.reserve(nf.layers.size());
  for (const auto& layer : nf.layers) {
    FlowLayer cells;
    cells.reserve(layer.cells.size());
    for (const auto& cell_expr : layer.cells) {
      const ir::KernelType type = ir::typecheck(cell_expr, sig);
      auto kernel = evaluate<FinStochBackend>(cell_expr, bind);
      cells.push_back({std::move(kernel.entries), type.dom.size, type.cod.size});
    }
    fl.layers.push_back(std::move(cells));
  }
  return fl;
}

Eigen::VectorXd apply_layer(const FlowLayer& cells, Eigen::VectorXd v, bool forward) {
  std::vector<std::size_t> tail(cells.size() + 1, 1);
  for (std::size_t i = cells.size(); i-- > 0;)
    tail[i] = tail[i + 1] * (forward ? cells[i].dom : cells[i].cod);
  std::size_t lead = 1;
  for (std::size_t j = 0; j < cells.size(); ++j) {
    const Cell& c = cells[j];
    const std::size_t in_axis = forward ? c.dom : c.cod;
    const std::size_t out_axis = forward ? c.cod : c.dom;
    const std::size_t trail = tail[j + 1];
    Eigen::VectorXd out =
        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lead * out_axis * trail));
    for (std::size_t l = 0; l < lead; ++l)
      for (std::size_t x = 0; x < in_axis; ++x) {
        const auto in_base = static_cast<Eigen::Index>((l * in_axis + x) * trail);
        for (std::size_t y = 0; y < out_axis; ++y) {
          const double w = forward ? c.m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y))
                                   : c.m(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
          if (w == 0.0) continue;
          out.segment(static_cast<Eigen::Index>((l * out_axis + y) * trail),
                      static_cast<Eigen::Index>(trail)) +=
              w * v.segment(in_base, static_cast<Eigen::Index>(trail));
        }
      }
    v = std::move(out);
    lead *= out_axis;
  }
  return v;
}

std::vector<Eigen::VectorXd> forward_states(const Flow& fl, Eigen::VectorXd p0) {
  std::vector<Eigen::VectorXd> states;
  states.reserve(fl.layers.size() + 1);
  states.push_back(std::move(p0));
  for (const auto& layer : fl.layers)
    states.push_back(apply_layer(layer, states.back(), true));
  return states;
}

// One backward sweep of the layered inverse applied to v: at each stage
// divide by the stage's pushforward (guarded on its support), pull back
// through the transposed layer, and reweight by the incoming state.
Eigen::VectorXd backward_sweep(const Flow& fl, const std::vector<Eigen::VectorXd>& states,
                               Eigen::VectorXd v) {
  for (std::size_t k = fl.layers.size(); k-- > 0;) {
    const Eigen::VectorXd& q = states[k + 1];
    Eigen::VectorXd u = Eigen::VectorXd::Zero(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i)
      if (q(i) > finstoch::kSupportTol) u(i) = v(i) / q(i);
    v = apply_layer(fl.layers[k], std::move(u), false).cwiseProduct(states[k]);
  }
  return v;
}

std::size_t flat_observation(const Trace& trace, std::size_t step_card) {
  std::size_t obs = 0;
  for (std::size_t idx : trace) {
    if (idx >= step_card)
      throw DimensionMismatchError("observation index " + std::to_string(idx) +
                                   " out of range (step card " + std::to_string(step_card) +
                                   ")");
    obs = obs * step_card + idx;
  }
  return obs;
}

PosteriorResult posterior_impl(const ir::KernelExpr& expr, const ir::Signature& sig,
                               const Bindings<FinStochBackend>& bind,
                               const finstoch::FinState& prior, std::size_t step_card,
                               const Trace& trace, Method method) {
  if (trace.empty())
    throw DimensionMismatchError("posterior: need at least one observation");
  const std::size_t obs = flat_observation(trace, step_card);
  const Flow fl = build_flow(ir::normalize(expr, sig), sig, bind);

  Eigen::VectorXd posterior_full;
  double mass = 0.0;

  if (method == Method::Compositional) {
    auto states = forward_states(fl, prior.entries.row(0).transpose());
    mass = states.back()(static_cast<Eigen::Index>(obs));
    if (mass <= finstoch::kSupportTol)
      throw ZeroMassObservationError(
          "observed trace has zero probability under every supported parameter");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(states.back().size());
    v(static_cast<Eigen::Index>(obs)) = 1.0;
    posterior_full = backward_sweep(fl, states, std::move(v));
  } else {
    // Small in the parameter direction: materialize the evaluated kernel
    // Θ -> outputs one parameter row at a time, then invert it in one step.
    const auto tc = static_cast<Eigen::Index>(fl.dom);
    finstoch::StochasticMatrix full_kernel;
    full_kernel.entries.resize(tc, static_cast<Eigen::Index>(fl.cod));
    for (Eigen::Index th = 0; th < tc; ++th) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(tc);
      row(th) = 1.0;
      for (const auto& layer : fl.layers) row = apply_layer(layer, std::move(row), true);
      full_kernel.entries.row(th) = row.transpose();
    }
    const auto q = finstoch::compose(prior, full_kernel);
    mass = q.entries(0, static_cast<Eigen::Index>(obs));
    if (mass <= finstoch::kSupportTol)
      throw ZeroMassObservationError(
          "observed trace has zero probability under every supported parameter");
    const auto inv = finstoch::bayes_invert_supported(full_kernel, prior);
    const auto& dom_idx = inv.dom_support.indices;
    const auto pos = std::lower_bound(dom_idx.begin(), dom_idx.end(), obs) - dom_idx.begin();
    posterior_full = Eigen::VectorXd::Zero(tc);
    for (std::size_t j = 0; j < inv.cod_support.indices.size(); ++j)
      posterior_full(static_cast<Eigen::Index>(inv.cod_support.indices[j])) =
          inv.kernel.entries(pos, static_cast<Eigen::Index>(j));
  }

  finstoch::FinState full;
  full.entries = posterior_full.transpose();
  PosteriorResult result;
  result.support = finstoch::support_of(full);
  // Squeeze onto the support; the retraction keeps total mass at exactly 1.
  result.posterior.entries = full.entries * result.support.retraction.entries;
  result.observation_mass = mass;
  return result;
}

}  // namespace

PosteriorResult posterior_parameters(const MarkovChainModel& model, const Trace& trace,
                                     Method method) {
  model.validate();
  const auto expr = build_trace_expr(model, std::max<std::size_t>(trace.size(), 1));
  return posterior_impl(expr, trace_signature(model), trace_bindings(model), model.prior,
                        model.state.size, trace, method);
}

PosteriorResult posterior_parameters_hmm(const HmmModel& model, const Trace& trace,
                                         Method method) {
  model.validate();
  const auto expr = build_hmm_expr(model, std::max<std::size_t>(trace.size(), 1));
  return posterior_impl(expr, hmm_signature(model), hmm_bindings(model), model.chain.prior,
                        model.obs.size, trace, method);
}

namespace {

std::vector<double> likelihood_impl(const ir::KernelExpr& expr, const ir::Signature& sig,
                                    const Bindings<FinStochBackend>& bind,
                                    std::size_t step_card, const Trace& trace) {
  if (trace.empty())
    throw DimensionMismatchError("trace_likelihood: need at least one observation");
  const std::size_t obs = flat_observation(trace, step_card);
  const Flow fl = build_flow(ir::normalize(expr, sig), sig, bind);
  std::vector<double> like(fl.dom);
  for (std::size_t th = 0; th < fl.dom; ++th) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fl.dom));
    row(static_cast<Eigen::Index>(th)) = 1.0;
    for (const auto& layer : fl.layers) row = apply_layer(layer, std::move(row), true);
    like[th] = row(static_cast<Eigen::Index>(obs));
  }
  return like;
}

}  // namespace

std::vector<double> trace_likelihood(const MarkovChainModel& model, const Trace& trace) {
  model.validate();
  const auto expr = build_trace_expr(model, std::max<std::size_t>(trace.size(), 1));
  return likelihood_impl(expr, trace_signature(model), trace_bindings(model),
                         model.state.size, trace);
}

std::vector<double> trace_likelihood_hmm(const HmmModel& model, const Trace& trace) {
  model.validate();
  const auto expr = build_hmm_expr(model, std::max<std::size_t>(trace.size(), 1));
  return likelihood_impl(expr, hmm_signature(model), hmm_bindings(model), model.obs.size,
                         trace);
}

}  // namespace bayeslens::chain
