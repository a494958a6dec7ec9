#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bayeslens/chain.hpp"
#include "bayeslens/invert.hpp"
#include "bayeslens/json_writer.hpp"
#include "bayeslens/model.hpp"
#include "bayeslens/rng.hpp"
#include "bayeslens/version.hpp"

namespace js = bayeslens::jsonio;
using namespace bayeslens;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitZeroMass = 2;
constexpr int kExitUsage = 64;

void emit(const js::Value& v) { std::cout << v.dump() << "\n"; }

js::Value error_value(const std::string& code, const std::string& detail) {
  js::Value v = js::Value::object();
  v.set("error", code);
  v.set("detail", detail);
  return v;
}

js::Value matrix_value(const Eigen::MatrixXd& m) {
  js::Value rows = js::Value::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    js::Value row = js::Value::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push(m(r, c));
    rows.push(std::move(row));
  }
  return rows;
}

js::Value vector_value(const Eigen::VectorXd& v) {
  js::Value arr = js::Value::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push(v(i));
  return arr;
}

js::Value indices_value(const std::vector<std::size_t>& idx) {
  js::Value arr = js::Value::array();
  for (auto i : idx) arr.push(i);
  return arr;
}

std::optional<std::vector<double>> parse_csv_doubles(const std::string& s) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    const std::string tok = s.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) return std::nullopt;
    } catch (...) {
      return std::nullopt;
    }
    pos = comma + 1;
    if (comma == s.size()) break;
  }
  return out.empty() ? std::nullopt : std::make_optional(out);
}

std::optional<std::vector<std::size_t>> parse_csv_indices(const std::string& s) {
  auto nums = parse_csv_doubles(s);
  if (!nums) return std::nullopt;
  std::vector<std::size_t> out;
  out.reserve(nums->size());
  for (double x : *nums) {
    if (x < 0 || x != static_cast<double>(static_cast<std::size_t>(x))) return std::nullopt;
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

std::string label_or_index(const ir::ObjectRef& obj, std::size_t i) {
  if (obj.labels.size() == obj.size) return obj.labels[i];
  return std::to_string(i);
}

// ----------------------------------------------------------------------
// Validation shared by every command except `check` (which reports instead).

std::optional<js::Value> quiet_validate(const model::ModelFile& mf) {
  for (const auto& name : mf.generator_order) {
    if (mf.category == ir::BackendTag::FinStoch) {
      if (!mf.fin_bindings.at(name).is_stochastic(1e-9))
        return error_value("validation_failed", "generator '" + name + "' is not stochastic");
    } else {
      if (!mf.gauss_bindings.at(name).is_valid(1e-10))
        return error_value("validation_failed",
                           "generator '" + name + "' has an invalid covariance");
    }
  }
  if (mf.diagram) {
    try {
      ir::typecheck(*mf.diagram, mf.signature);
    } catch (const Error& e) {
      return error_value(e.code(), e.what());
    }
  }
  if (mf.fin_prior && !finstoch::is_state(*mf.fin_prior, 1e-9))
    return error_value("degenerate_prior", "prior is not a probability row");
  if (mf.gauss_prior && !(gauss::is_state(*mf.gauss_prior) && mf.gauss_prior->is_valid(1e-8)))
    return error_value("degenerate_prior", "prior is not a valid gaussian state");
  if (mf.has_chain()) {
    try {
      if (mf.has_hmm())
        mf.hmm_model().validate();
      else
        mf.chain_model().validate();
    } catch (const Error& e) {
      return error_value(e.code(), e.what());
    }
  }
  return std::nullopt;
}

// ----------------------------------------------------------------------
// check

int cmd_check(const model::ModelFile& mf) {
  bool ok = true;
  for (const auto& name : mf.generator_order) {
    const auto& type = mf.signature.at(name);
    js::Value line = js::Value::object();
    line.set("generator", name);
    line.set("dom", ir::describe(type.dom));
    line.set("cod", ir::describe(type.cod));
    bool gen_ok = true;
    if (mf.category == ir::BackendTag::FinStoch) {
      const auto& k = mf.fin_bindings.at(name);
      line.set("row_sum_residual", k.row_sum_residual());
      line.set("min_entry", k.min_entry());
      gen_ok = k.is_stochastic(1e-9);
    } else {
      const auto& k = mf.gauss_bindings.at(name);
      line.set("symmetry_residual", k.symmetry_residual());
      line.set("min_eigenvalue", k.min_eigenvalue());
      gen_ok = k.is_valid(1e-10);
    }
    line.set("ok", gen_ok);
    emit(line);
    ok = ok && gen_ok;
  }

  if (mf.diagram) {
    try {
      const ir::KernelType type = ir::typecheck(*mf.diagram, mf.signature);
      js::Value line = js::Value::object();
      line.set("diagram_dom", ir::describe(type.dom));
      line.set("diagram_cod", ir::describe(type.cod));
      line.set("ok", true);
      emit(line);
    } catch (const UnboundNameError& e) {
      js::Value line = js::Value::object();
      line.set("error", "unbound_name");
      line.set("name", e.name());
      line.set("path", e.path());
      emit(line);
      ok = false;
    } catch (const TypeMismatchError& e) {
      js::Value line = js::Value::object();
      line.set("error", "type_mismatch");
      line.set("path", e.path());
      line.set("detail", e.what());
      emit(line);
      ok = false;
    }
  }

  if (mf.fin_prior || mf.gauss_prior) {
    const bool prior_ok =
        mf.category == ir::BackendTag::FinStoch
            ? finstoch::is_state(*mf.fin_prior, 1e-9)
            : (gauss::is_state(*mf.gauss_prior) && mf.gauss_prior->is_valid(1e-8));
    js::Value line = js::Value::object();
    line.set("prior_ok", prior_ok);
    emit(line);
    ok = ok && prior_ok;
  }

  if (mf.has_chain()) {
    js::Value line = js::Value::object();
    try {
      if (mf.has_hmm())
        mf.hmm_model().validate();
      else
        mf.chain_model().validate();
      line.set("chain_ok", true);
      emit(line);
    } catch (const Error& e) {
      line.set("chain_ok", false);
      line.set("error", e.code());
      line.set("detail", std::string(e.what()));
      emit(line);
      ok = false;
    }
  }

  js::Value summary = js::Value::object();
  summary.set("ok", ok);
  emit(summary);
  return ok ? kExitOk : kExitFail;
}

// ----------------------------------------------------------------------
// invert

finstoch::FinState resolve_fin_prior(const model::ModelFile& mf, const std::string& at) {
  if (!at.empty()) {
    auto named = mf.fin_bindings.find(at);
    if (named != mf.fin_bindings.end()) {
      if (!finstoch::is_state(named->second, 1e-9))
        throw DegeneratePriorError("--at generator '" + at + "' is not a state");
      return named->second;
    }
    auto nums = parse_csv_doubles(at);
    if (!nums)
      throw ModelError("--at must name a state generator or list probabilities");
    return finstoch::make_state(*nums);
  }
  if (!mf.fin_prior) throw ModelError("model declares no prior; pass --at");
  return *mf.fin_prior;
}

gauss::GaussState resolve_gauss_prior(const model::ModelFile& mf, const std::string& at) {
  if (!at.empty()) {
    auto named = mf.gauss_bindings.find(at);
    if (named == mf.gauss_bindings.end())
      throw ModelError("--at must name a declared gaussian state generator");
    if (!gauss::is_state(named->second))
      throw DegeneratePriorError("--at generator '" + at + "' is not a state");
    return named->second;
  }
  if (!mf.gauss_prior) throw ModelError("model declares no prior; pass --at");
  return *mf.gauss_prior;
}

js::Value support_value_fin(const finstoch::FinSupport& s) {
  js::Value v = js::Value::object();
  v.set("card", s.card());
  v.set("indices", indices_value(s.indices));
  return v;
}

js::Value support_value_gauss(const gauss::AffineSupport& s) {
  js::Value v = js::Value::object();
  v.set("rank", s.rank);
  v.set("basis", matrix_value(s.basis));
  v.set("offset", vector_value(s.offset));
  return v;
}

int cmd_invert(const model::ModelFile& mf, const std::string& at, const std::string& policy,
               bool supported, double tol) {
  if (auto err = quiet_validate(mf)) {
    emit(*err);
    return kExitFail;
  }
  if (!mf.diagram) {
    emit(error_value("model_error", "invert needs a diagram"));
    return kExitFail;
  }
  const ir::KernelType type = ir::typecheck(*mf.diagram, mf.signature);

  js::Value out = js::Value::object();
  out.set("kind", "backward_kernel");
  out.set("supported", supported);

  if (mf.category == ir::BackendTag::FinStoch) {
    const auto f = evaluate<FinStochBackend>(*mf.diagram, mf.fin_bindings);
    const auto p = resolve_fin_prior(mf, at);
    if (p.cod_card() != f.dom_card())
      throw DimensionMismatchError("prior does not live on the diagram domain");
    if (!finstoch::is_state(p, 1e-9))
      throw DegeneratePriorError("prior is not a probability row");

    if (supported) {
      const auto inv = finstoch::bayes_invert_supported(f, p, tol);
      out.set("observation_support", support_value_fin(inv.dom_support));
      out.set("hypothesis_support", support_value_fin(inv.cod_support));
      out.set("rows", matrix_value(inv.kernel.entries));
    } else {
      out.set("policy", policy);
      finstoch::ZeroFillPolicy zp = finstoch::ZeroFillPolicy::Uniform;
      if (policy == "error") zp = finstoch::ZeroFillPolicy::Error;
      if (policy == "first") zp = finstoch::ZeroFillPolicy::FirstIndex;
      const auto back = finstoch::bayes_invert(f, p, zp);
      out.set("observation_card", f.cod_card());
      out.set("hypothesis_card", f.dom_card());
      if (type.cod.labels.size() == type.cod.size) {
        js::Value labels = js::Value::array();
        for (const auto& l : type.cod.labels) labels.push(l);
        out.set("observation_labels", std::move(labels));
      }
      if (type.dom.labels.size() == type.dom.size) {
        js::Value labels = js::Value::array();
        for (const auto& l : type.dom.labels) labels.push(l);
        out.set("hypothesis_labels", std::move(labels));
      }
      out.set("rows", matrix_value(back.entries));
    }
  } else {
    const auto f = evaluate<GaussBackend>(*mf.diagram, mf.gauss_bindings);
    const auto p = resolve_gauss_prior(mf, at);
    if (p.cod_dim() != f.dom_dim())
      throw DimensionMismatchError("prior does not live on the diagram domain");

    if (supported) {
      const auto inv = gauss::bayes_invert_supported(f, p, tol);
      out.set("observation_support", support_value_gauss(inv.dom_support));
      out.set("hypothesis_support", support_value_gauss(inv.cod_support));
      out.set("M", matrix_value(inv.kernel.M));
      out.set("b", vector_value(inv.kernel.b));
      out.set("S", matrix_value(inv.kernel.S));
    } else {
      const auto back = gauss::bayes_invert(f, p);
      out.set("M", matrix_value(back.M));
      out.set("b", vector_value(back.b));
      out.set("S", matrix_value(back.S));
    }
  }
  emit(out);
  return kExitOk;
}

// ----------------------------------------------------------------------
// infer

struct FinPosterior {
  finstoch::FinState posterior;  // on `support`
  finstoch::FinSupport support;
  double mass = 0.0;
  Eigen::RowVectorXd full;  // over the raw hypothesis space
};

FinPosterior package_fin_posterior(const Eigen::RowVectorXd& full, double mass) {
  FinPosterior out;
  finstoch::FinState full_state;
  full_state.entries = full;
  out.support = finstoch::support_of(full_state);
  out.posterior.entries = full_state.entries * out.support.retraction.entries;
  out.mass = mass;
  out.full = out.posterior.entries * out.support.inclusion.entries;
  return out;
}

js::Value posterior_map(const FinPosterior& post, const ir::ObjectRef& hyp) {
  js::Value v = js::Value::object();
  for (std::size_t j = 0; j < post.support.indices.size(); ++j)
    v.set(label_or_index(hyp, post.support.indices[j]),
          post.posterior.entries(0, static_cast<Eigen::Index>(j)));
  return v;
}

FinPosterior chain_posterior(const model::ModelFile& mf, const chain::Trace& trace,
                             chain::Method method) {
  const auto result = mf.has_hmm()
                          ? chain::posterior_parameters_hmm(mf.hmm_model(), trace, method)
                          : chain::posterior_parameters(mf.chain_model(), trace, method);
  FinPosterior out;
  out.posterior = result.posterior;
  out.support = result.support;
  out.mass = result.observation_mass;
  out.full = result.posterior.entries * result.support.inclusion.entries;
  return out;
}

int infer_chain(const model::ModelFile& mf, const std::string& observe,
                const std::string& method) {
  auto trace_opt = parse_csv_indices(observe);
  if (!trace_opt) {
    std::cerr << "bayeslens: --observe must be comma-separated indices\n";
    return kExitUsage;
  }
  const chain::Trace trace = *trace_opt;
  const auto cm = mf.chain_model();

  FinPosterior post = chain_posterior(
      mf, trace,
      method == "monolithic" ? chain::Method::Monolithic : chain::Method::Compositional);
  double discrepancy = -1.0;
  if (method == "both") {
    const FinPosterior other = chain_posterior(mf, trace, chain::Method::Monolithic);
    discrepancy = std::max((post.full - other.full).cwiseAbs().maxCoeff(),
                           std::abs(post.mass - other.mass));
  }

  // Inversion-law residual on the observed column:
  // max_th | prior(th) * P(obs|th) - mass * posterior(th) |.
  const std::vector<double> like = mf.has_hmm()
                                       ? chain::trace_likelihood_hmm(mf.hmm_model(), trace)
                                       : chain::trace_likelihood(cm, trace);
  double law_residual = 0.0;
  for (std::size_t th = 0; th < like.size(); ++th)
    law_residual = std::max(
        law_residual, std::abs(cm.prior.entries(0, static_cast<Eigen::Index>(th)) * like[th] -
                               post.mass * post.full(static_cast<Eigen::Index>(th))));

  js::Value out = js::Value::object();
  out.set("kind", "inference");
  out.set("model", mf.has_hmm() ? "hmm" : "chain");
  out.set("method", method);
  out.set("observe", indices_value(trace));
  out.set("posterior", posterior_map(post, cm.theta));
  out.set("support_indices", indices_value(post.support.indices));
  out.set("observation_mass", post.mass);
  out.set("law_residual", law_residual);
  if (method == "both") out.set("method_discrepancy", discrepancy);
  emit(out);
  return kExitOk;
}

int infer_fin_diagram(const model::ModelFile& mf, const std::string& observe,
                      const std::string& method) {
  auto obs_opt = parse_csv_indices(observe);
  if (!obs_opt || obs_opt->size() != 1) {
    std::cerr << "bayeslens: --observe for a plain diagram takes a single index\n";
    return kExitUsage;
  }
  const std::size_t obs = (*obs_opt)[0];
  if (!mf.diagram) {
    emit(error_value("model_error", "infer needs a diagram or a chain section"));
    return kExitFail;
  }
  if (!mf.fin_prior) {
    emit(error_value("model_error", "infer needs a declared prior"));
    return kExitFail;
  }
  const auto f = evaluate<FinStochBackend>(*mf.diagram, mf.fin_bindings);
  const auto& p = *mf.fin_prior;
  if (obs >= f.cod_card())
    throw DimensionMismatchError("--observe index out of range for the diagram codomain");
  const ir::KernelType type = ir::typecheck(*mf.diagram, mf.signature);

  const auto run = [&](bool monolithic) -> FinPosterior {
    finstoch::SupportedInverse inv;
    if (monolithic) {
      inv = finstoch::bayes_invert_supported(f, p);
    } else {
      auto lens = invert_expr<FinStochBackend>(*mf.diagram, p, mf.signature, mf.fin_bindings);
      inv = lens.backward(p);
    }
    const auto& idx = inv.dom_support.indices;
    const auto it = std::find(idx.begin(), idx.end(), obs);
    if (it == idx.end())
      throw ZeroMassObservationError("observation has zero mass under the pushforward");
    const auto pos = static_cast<Eigen::Index>(it - idx.begin());
    const Eigen::RowVectorXd row = inv.kernel.entries.row(pos);
    const Eigen::RowVectorXd full = row * inv.cod_support.inclusion.entries;
    const double mass =
        finstoch::pushforward(f, p).entries(0, static_cast<Eigen::Index>(obs));
    return package_fin_posterior(full, mass);
  };

  FinPosterior post = run(method == "monolithic");
  double discrepancy = -1.0;
  if (method == "both") {
    const FinPosterior other = run(true);
    discrepancy = std::max((post.full - other.full).cwiseAbs().maxCoeff(),
                           std::abs(post.mass - other.mass));
  }

  double law_residual = 0.0;
  for (Eigen::Index x = 0; x < f.entries.rows(); ++x)
    law_residual =
        std::max(law_residual,
                 std::abs(p.entries(0, x) * f.entries(x, static_cast<Eigen::Index>(obs)) -
                          post.mass * post.full(x)));

  js::Value out = js::Value::object();
  out.set("kind", "inference");
  out.set("model", "diagram");
  out.set("method", method);
  out.set("observe", indices_value({obs}));
  out.set("posterior", posterior_map(post, type.dom));
  out.set("support_indices", indices_value(post.support.indices));
  out.set("observation_mass", post.mass);
  out.set("law_residual", law_residual);
  if (method == "both") out.set("method_discrepancy", discrepancy);
  emit(out);
  return kExitOk;
}

int infer_gauss_diagram(const model::ModelFile& mf, const std::string& observe,
                        const std::string& method) {
  auto obs_opt = parse_csv_doubles(observe);
  if (!obs_opt) {
    std::cerr << "bayeslens: --observe must be comma-separated numbers\n";
    return kExitUsage;
  }
  if (!mf.diagram) {
    emit(error_value("model_error", "infer needs a diagram"));
    return kExitFail;
  }
  if (!mf.gauss_prior) {
    emit(error_value("model_error", "infer needs a declared prior"));
    return kExitFail;
  }
  const auto f = evaluate<GaussBackend>(*mf.diagram, mf.gauss_bindings);
  const auto& p = *mf.gauss_prior;
  if (obs_opt->size() != f.cod_dim())
    throw DimensionMismatchError("--observe length does not match the diagram codomain");
  Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(obs_opt->data(), static_cast<Eigen::Index>(obs_opt->size()));

  const auto run = [&](bool monolithic) -> gauss::SupportedInverse {
    if (monolithic) return gauss::bayes_invert_supported(f, p);
    auto lens = invert_expr<GaussBackend>(*mf.diagram, p, mf.signature, mf.gauss_bindings);
    return lens.backward(p);
  };

  const gauss::SupportedInverse inv = run(method == "monolithic");

  // The observation must lie in the pushforward's affine support.
  const auto& sup = inv.dom_support;
  const Eigen::VectorXd centered = y - sup.offset;
  const Eigen::VectorXd off_part = centered - sup.basis * (sup.basis.transpose() * centered);
  if (off_part.size() > 0 && off_part.cwiseAbs().maxCoeff() > 1e-9)
    throw ZeroMassObservationError("observation lies outside the pushforward's support");

  const auto posterior_of = [&](const gauss::SupportedInverse& si) -> gauss::GaussState {
    const auto ambient =
        gauss::include(si.kernel, si.dom_support, si.cod_support);
    return gauss::compose(
        gauss::make_state(y, Eigen::MatrixXd::Zero(y.size(), y.size())), ambient);
  };
  const gauss::GaussState post = posterior_of(inv);

  double discrepancy = -1.0;
  if (method == "both")
    discrepancy = gauss::state_distance(post, posterior_of(run(true)));

  // Log-density of the observation under the pushforward, on its support.
  const gauss::GaussState q = gauss::compose(p, f);
  double log_density = 0.0;
  if (q.cod_dim() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gauss::symmetrize(q.S));
    const Eigen::VectorXd lam = es.eigenvalues();
    const double thr = gauss::kRankTol * std::max(1.0, lam.maxCoeff());
    const Eigen::VectorXd centered_q = y - q.b;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      if (lam(i) <= thr) continue;
      const double coord = es.eigenvectors().col(i).dot(centered_q);
      log_density += -0.5 * (coord * coord / lam(i)) -
                     0.5 * std::log(2.0 * 3.141592653589793238462643383279503 * lam(i));
    }
  }

  const double law_residual = gauss::inversion_law_residual(f, gauss::bayes_invert(f, p), p);

  js::Value obs_arr = js::Value::array();
  for (double x : *obs_opt) obs_arr.push(x);

  js::Value posterior = js::Value::object();
  posterior.set("mean", vector_value(post.b));
  posterior.set("cov", matrix_value(post.S));

  js::Value out = js::Value::object();
  out.set("kind", "inference");
  out.set("model", "diagram");
  out.set("category", "gauss");
  out.set("method", method);
  out.set("observe", std::move(obs_arr));
  out.set("posterior", std::move(posterior));
  out.set("support_rank", inv.cod_support.rank);
  out.set("observation_log_density", log_density);
  out.set("law_residual", law_residual);
  if (method == "both") out.set("method_discrepancy", discrepancy);
  emit(out);
  return kExitOk;
}

int cmd_infer(const model::ModelFile& mf, const std::string& observe,
              const std::string& method) {
  if (auto err = quiet_validate(mf)) {
    emit(*err);
    return kExitFail;
  }
  if (mf.has_chain()) return infer_chain(mf, observe, method);
  if (mf.category == ir::BackendTag::FinStoch) return infer_fin_diagram(mf, observe, method);
  return infer_gauss_diagram(mf, observe, method);
}

// ----------------------------------------------------------------------
// lawcheck

finstoch::FinState random_fin_state(Rng& rng, std::size_t n, bool with_zeros) {
  Eigen::RowVectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 0.05 + rng.uniform();
  if (with_zeros && n > 1) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (rng.chance(0.4)) v(i) = 0.0;
    if (v.sum() == 0.0) v(static_cast<Eigen::Index>(rng.index(n))) = 1.0;
  }
  v /= v.sum();
  finstoch::FinState p;
  p.entries = v;
  return p;
}

gauss::GaussState random_gauss_state(Rng& rng, std::size_t n, bool rank_deficient) {
  const auto dim = static_cast<Eigen::Index>(n);
  Eigen::VectorXd mean(dim);
  for (Eigen::Index i = 0; i < dim; ++i) mean(i) = rng.uniform(-1.0, 1.0);
  const Eigen::Index r = rank_deficient && dim > 1 ? dim - 1 : dim;
  Eigen::MatrixXd a(r, dim);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
  return gauss::make_state(std::move(mean), gauss::symmetrize(a.transpose() * a));
}

struct CheckStat {
  double max_residual = 0.0;
  double tol = 0.0;
  void note(double r) { max_residual = std::max(max_residual, r); }
  bool ok() const { return max_residual <= tol; }
  js::Value value() const {
    js::Value v = js::Value::object();
    v.set("max_residual", max_residual);
    v.set("tol", tol);
    v.set("ok", ok());
    return v;
  }
};

int cmd_lawcheck(const model::ModelFile& mf, int trials, std::uint64_t seed, double perturb) {
  if (auto err = quiet_validate(mf)) {
    emit(*err);
    return kExitFail;
  }
  if (!mf.diagram) {
    emit(error_value("model_error", "lawcheck needs a diagram"));
    return kExitFail;
  }
  const ir::KernelType type = ir::typecheck(*mf.diagram, mf.signature);
  Rng rng(seed);

  CheckStat law, supported_law, retraction_id, as_identity, chain_rule;
  const bool fin = mf.category == ir::BackendTag::FinStoch;
  law.tol = fin ? 1e-9 : 1e-8;
  supported_law.tol = fin ? 1e-9 : 1e-8;
  retraction_id.tol = fin ? 1e-12 : 1e-10;
  as_identity.tol = fin ? 1e-12 : 1e-8;
  chain_rule.tol = fin ? 1e-9 : 1e-7;

  for (int t = 0; t < trials; ++t) {
    const bool degenerate = t % 3 == 2;
    if (fin) {
      const auto f = evaluate<FinStochBackend>(*mf.diagram, mf.fin_bindings);
      const auto p = random_fin_state(rng, type.dom.size, degenerate);
      auto back = finstoch::bayes_invert(f, p, finstoch::ZeroFillPolicy::Uniform);
      if (perturb != 0.0) back.entries(0, 0) += perturb;
      law.note(finstoch::inversion_law_residual(f, back, p));

      const auto sup = finstoch::bayes_invert_supported(f, p);
      supported_law.note(finstoch::inversion_law_residual(
          f, finstoch::include(sup.kernel, sup.dom_support, sup.cod_support), p));

      const auto s = finstoch::support_of(p);
      const auto ri = finstoch::compose(s.inclusion, s.retraction);
      retraction_id.note(
          (ri.entries - Eigen::MatrixXd::Identity(ri.entries.rows(), ri.entries.cols()))
              .cwiseAbs()
              .maxCoeff());
      as_identity.note(finstoch::almost_equal_residual(
          finstoch::compose(s.retraction, s.inclusion), finstoch::identity(type.dom.size), p));

      auto lens = invert_expr<FinStochBackend>(*mf.diagram, p, mf.signature, mf.fin_bindings);
      const auto layered = lens.backward(p);
      chain_rule.note(finstoch::almost_equal_residual(
          finstoch::include(layered.kernel, layered.dom_support, layered.cod_support),
          finstoch::include(sup.kernel, sup.dom_support, sup.cod_support),
          finstoch::pushforward(f, p)));
    } else {
      const auto f = evaluate<GaussBackend>(*mf.diagram, mf.gauss_bindings);
      const auto p = random_gauss_state(rng, type.dom.size, degenerate);
      auto back = gauss::bayes_invert(f, p);
      if (perturb != 0.0 && back.b.size() > 0) back.b(0) += perturb;
      law.note(gauss::inversion_law_residual(f, back, p));

      const auto sup = gauss::bayes_invert_supported(f, p);
      supported_law.note(gauss::inversion_law_residual(
          f, gauss::include(sup.kernel, sup.dom_support, sup.cod_support), p));

      const auto s = gauss::support_of(p);
      const auto ri = gauss::compose(s.inclusion, s.retraction);
      const auto idk = gauss::identity(s.rank);
      retraction_id.note(std::max(
          {ri.M.size() ? (ri.M - idk.M).cwiseAbs().maxCoeff() : 0.0,
           ri.b.size() ? ri.b.cwiseAbs().maxCoeff() : 0.0,
           ri.S.size() ? ri.S.cwiseAbs().maxCoeff() : 0.0}));
      as_identity.note(gauss::almost_equal_residual(
          gauss::compose(s.retraction, s.inclusion), gauss::identity(type.dom.size), p));

      auto lens = invert_expr<GaussBackend>(*mf.diagram, p, mf.signature, mf.gauss_bindings);
      const auto layered = lens.backward(p);
      chain_rule.note(gauss::almost_equal_residual(
          gauss::include(layered.kernel, layered.dom_support, layered.cod_support),
          gauss::include(sup.kernel, sup.dom_support, sup.cod_support),
          gauss::pushforward(f, p)));
    }
  }

  const bool ok = law.ok() && supported_law.ok() && retraction_id.ok() &&
                  as_identity.ok() && chain_rule.ok();
  js::Value checks = js::Value::object();
  checks.set("inversion_law", law.value());
  checks.set("supported_inversion_law", supported_law.value());
  checks.set("retraction_after_inclusion", retraction_id.value());
  checks.set("inclusion_after_retraction_as", as_identity.value());
  checks.set("chain_rule", chain_rule.value());

  js::Value out = js::Value::object();
  out.set("kind", "lawcheck");
  out.set("category", fin ? "finstoch" : "gauss");
  out.set("trials", static_cast<long long>(trials));
  out.set("seed", static_cast<long long>(seed));
  out.set("checks", std::move(checks));
  out.set("ok", ok);
  emit(out);
  return ok ? kExitOk : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bayeslens — compositional Bayesian inversion for finite and Gaussian kernels"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string model_path;
  std::string at;
  std::string policy = "uniform";
  bool supported = false;
  double tol = -1.0;
  std::string observe;
  std::string method = "compositional";
  int trials = 20;
  std::uint64_t seed = 0;
  double perturb = 0.0;

  auto* c_check = app.add_subcommand("check", "Validate a model file");
  c_check->add_option("model", model_path, "model JSON file")->required();

  auto* c_invert = app.add_subcommand("invert", "Backward kernel of the model's diagram");
  c_invert->add_option("model", model_path, "model JSON file")->required();
  c_invert->add_option("--at", at, "prior: a state generator name or inline probabilities");
  c_invert->add_option("--policy", policy, "zero-mass observation rows: uniform|error|first")
      ->check(CLI::IsMember({"uniform", "error", "first"}));
  c_invert->add_flag("--support,!--no-support", supported,
                     "squeeze the backward kernel onto supports");
  c_invert->add_option("--tol", tol, "support / rank threshold");

  auto* c_infer = app.add_subcommand("infer", "Posterior for an observation");
  c_infer->add_option("model", model_path, "model JSON file")->required();
  c_infer->add_option("--observe", observe, "observed trace / index / vector (comma-separated)")
      ->required();
  c_infer->add_option("--method", method, "compositional|monolithic|both")
      ->check(CLI::IsMember({"compositional", "monolithic", "both"}));

  auto* c_lawcheck = app.add_subcommand("lawcheck", "Randomized inversion-law checks");
  c_lawcheck->add_option("model", model_path, "model JSON file")->required();
  c_lawcheck->add_option("--trials", trials, "number of random priors")
      ->check(CLI::PositiveNumber);
  c_lawcheck->add_option("--seed", seed, "RNG seed");
  c_lawcheck->add_option("--perturb", perturb,
                         "test hook: corrupt the backward kernel by this amount");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    const model::ModelFile mf = model::load_model(model_path);
    if (c_check->parsed()) return cmd_check(mf);
    if (c_invert->parsed()) {
      const double use_tol =
          tol > 0 ? tol
                  : (mf.category == ir::BackendTag::FinStoch ? finstoch::kSupportTol
                                                             : gauss::kRankTol);
      return cmd_invert(mf, at, policy, supported, use_tol);
    }
    if (c_infer->parsed()) return cmd_infer(mf, observe, method);
    if (c_lawcheck->parsed()) return cmd_lawcheck(mf, trials, seed, perturb);
  } catch (const ZeroMassObservationError& e) {
    emit(error_value(e.code(), e.what()));
    return kExitZeroMass;
  } catch (const Error& e) {
    emit(error_value(e.code(), e.what()));
    return kExitFail;
  } catch (const std::exception& e) {
    emit(error_value("internal", e.what()));
    return kExitFail;
  }
  return kExitUsage;
}
