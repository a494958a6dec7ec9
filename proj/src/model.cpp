#include "bayeslens/model.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace bayeslens::model {

namespace {

using Json = nlohmann::ordered_json;  // preserves declaration order

const Json& expect_object(const Json& j, const std::string& what) {
  if (!j.is_object()) throw ModelError(what + " must be a JSON object");
  return j;
}

std::string expect_string(const Json& j, const std::string& what) {
  if (!j.is_string()) throw ModelError(what + " must be a string");
  return j.get<std::string>();
}

Eigen::MatrixXd parse_matrix(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ModelError(what + " must be a nonempty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  Eigen::MatrixXd m;
  for (std::size_t r = 0; r < rows; ++r) {
    const Json& row = j[r];
    if (!row.is_array()) throw ModelError(what + ": row " + std::to_string(r) + " is not an array");
    if (r == 0) {
      cols = row.size();
      m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    } else if (row.size() != cols) {
      throw ModelError(what + ": ragged rows");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) throw ModelError(what + ": non-numeric entry");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c].get<double>();
    }
  }
  return m;
}

Eigen::VectorXd parse_vector(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ModelError(what + " must be an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ModelError(what + ": non-numeric entry");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

ir::KernelExpr parse_expr(const Json& j, const ModelFile& mf, const std::string& where) {
  expect_object(j, where);
  if (j.size() != 1)
    throw ModelError(where + ": diagram node must have exactly one key "
                             "(seq/par/gen/state/id/copy/delete/swap)");
  const std::string key = j.begin().key();
  const Json& val = j.begin().value();

  if (key == "seq" || key == "par") {
    if (!val.is_array() || val.empty())
      throw ModelError(where + "." + key + " must be a nonempty array");
    std::vector<ir::KernelExpr> children;
    children.reserve(val.size());
    for (std::size_t i = 0; i < val.size(); ++i)
      children.push_back(parse_expr(val[i], mf, where + "." + key + "[" + std::to_string(i) + "]"));
    return key == "seq" ? ir::KernelExpr::seq(std::move(children))
                        : ir::KernelExpr::par(std::move(children));
  }
  if (key == "gen") return ir::KernelExpr::gen(expect_string(val, where + ".gen"));
  if (key == "state") return ir::KernelExpr::state(expect_string(val, where + ".state"));
  if (key == "id") return ir::KernelExpr::id(mf.object(expect_string(val, where + ".id")));
  if (key == "copy") return ir::KernelExpr::copy(mf.object(expect_string(val, where + ".copy")));
  if (key == "delete")
    return ir::KernelExpr::del(mf.object(expect_string(val, where + ".delete")));
  if (key == "swap") {
    if (!val.is_array() || val.size() != 2)
      throw ModelError(where + ".swap must be a pair of object names");
    return ir::KernelExpr::swap(mf.object(expect_string(val[0], where + ".swap[0]")),
                                mf.object(expect_string(val[1], where + ".swap[1]")));
  }
  throw ModelError(where + ": unknown diagram node '" + key + "'");
}

}  // namespace

const ir::ObjectRef& ModelFile::object(const std::string& name) const {
  static const ir::ObjectRef fin_unit = ir::unit_object(ir::BackendTag::FinStoch);
  static const ir::ObjectRef gauss_unit = ir::unit_object(ir::BackendTag::Gauss);
  if (name == "I")
    return category == ir::BackendTag::FinStoch ? fin_unit : gauss_unit;
  auto it = objects.find(name);
  if (it == objects.end()) throw ModelError("unknown object '" + name + "'");
  return it->second;
}

chain::MarkovChainModel ModelFile::chain_model() const {
  if (!chain) throw ModelError("model has no chain section");
  if (category != ir::BackendTag::FinStoch)
    throw ModelError("chain models require the finstoch category");
  chain::MarkovChainModel m;
  m.theta = object(chain->parameters);
  m.state = object(chain->states);
  auto t = fin_bindings.find(chain->transition);
  if (t == fin_bindings.end())
    throw ModelError("chain transition generator '" + chain->transition + "' not declared");
  m.transition = t->second;
  auto s = fin_bindings.find(chain->initial);
  if (s == fin_bindings.end())
    throw ModelError("chain initial generator '" + chain->initial + "' not declared");
  m.initial = s->second;
  if (!fin_prior) throw ModelError("chain model needs a prior on the parameter space");
  m.prior = *fin_prior;
  return m;
}

chain::HmmModel ModelFile::hmm_model() const {
  if (!has_hmm()) throw ModelError("model has no observation kernel in its chain section");
  chain::HmmModel m;
  m.chain = chain_model();
  auto o = fin_bindings.find(*chain->observation);
  if (o == fin_bindings.end())
    throw ModelError("chain observation generator '" + *chain->observation + "' not declared");
  m.observation = o->second;
  auto sig_it = signature.find(*chain->observation);
  m.obs = sig_it->second.cod;
  return m;
}

ModelFile parse_model_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw ModelError(std::string("invalid JSON: ") + e.what());
  }
  expect_object(j, "model");

  ModelFile mf;
  const std::string cat = expect_string(j.value("category", Json("")), "category");
  if (cat == "finstoch") {
    mf.category = ir::BackendTag::FinStoch;
  } else if (cat == "gauss") {
    mf.category = ir::BackendTag::Gauss;
  } else {
    throw ModelError("category must be \"finstoch\" or \"gauss\"");
  }

  if (j.contains("objects")) {
    for (const auto& [name, decl] : expect_object(j["objects"], "objects").items()) {
      if (name == "I") throw ModelError("object name 'I' is reserved for the unit");
      expect_object(decl, "object '" + name + "'");
      ir::ObjectRef obj;
      if (mf.category == ir::BackendTag::FinStoch) {
        if (!decl.contains("card") || !decl["card"].is_number_unsigned() ||
            decl["card"].get<std::size_t>() < 1)
          throw ModelError("object '" + name + "' needs \"card\" >= 1");
        std::vector<std::string> labels;
        if (decl.contains("labels")) {
          for (const auto& l : decl["labels"])
            labels.push_back(expect_string(l, "label of '" + name + "'"));
          if (labels.size() != decl["card"].get<std::size_t>())
            throw ModelError("object '" + name + "': labels must match card");
        }
        obj = ir::ObjectRef::finite(decl["card"].get<std::size_t>(), std::move(labels));
      } else {
        if (!decl.contains("dim") || !decl["dim"].is_number_unsigned())
          throw ModelError("object '" + name + "' needs \"dim\" >= 0");
        obj = ir::ObjectRef::euclidean(decl["dim"].get<std::size_t>());
      }
      mf.object_order.push_back(name);
      mf.objects.emplace(name, std::move(obj));
    }
  }

  if (j.contains("generators")) {
    for (const auto& [name, decl] : expect_object(j["generators"], "generators").items()) {
      expect_object(decl, "generator '" + name + "'");
      if (!decl.contains("dom") || !decl.contains("cod"))
        throw ModelError("generator '" + name + "' needs dom and cod");
      const ir::ObjectRef& dom = mf.object(expect_string(decl["dom"], "dom of '" + name + "'"));
      const ir::ObjectRef& cod = mf.object(expect_string(decl["cod"], "cod of '" + name + "'"));
      mf.generator_order.push_back(name);
      mf.signature[name] = ir::KernelType{dom, cod};

      if (mf.category == ir::BackendTag::FinStoch) {
        if (!decl.contains("rows"))
          throw ModelError("generator '" + name + "' needs \"rows\"");
        finstoch::StochasticMatrix k;
        k.entries = parse_matrix(decl["rows"], "rows of '" + name + "'");
        if (k.dom_card() != dom.size || k.cod_card() != cod.size)
          throw ModelError("generator '" + name + "': rows shape " +
                           std::to_string(k.dom_card()) + "x" + std::to_string(k.cod_card()) +
                           " does not match dom/cod " + std::to_string(dom.size) + "x" +
                           std::to_string(cod.size));
        mf.fin_bindings.emplace(name, std::move(k));
      } else {
        if (!decl.contains("M") || !decl.contains("b") || !decl.contains("S"))
          throw ModelError("generator '" + name + "' needs M, b, S");
        gauss::GaussianKernel k;
        k.M = decl["M"].is_array() && !decl["M"].empty()
                  ? parse_matrix(decl["M"], "M of '" + name + "'")
                  : Eigen::MatrixXd(0, 0);
        k.b = parse_vector(decl["b"], "b of '" + name + "'");
        k.S = decl["S"].is_array() && !decl["S"].empty()
                  ? parse_matrix(decl["S"], "S of '" + name + "'")
                  : Eigen::MatrixXd(0, 0);
        if (k.M.size() == 0)
          k.M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cod.size),
                                      static_cast<Eigen::Index>(dom.size));
        if (k.S.size() == 0)
          k.S = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cod.size),
                                      static_cast<Eigen::Index>(cod.size));
        if (k.dom_dim() != dom.size || k.cod_dim() != cod.size ||
            k.b.size() != static_cast<Eigen::Index>(cod.size) ||
            k.S.rows() != static_cast<Eigen::Index>(cod.size) || k.S.rows() != k.S.cols())
          throw ModelError("generator '" + name + "': M/b/S shapes do not match dom/cod");
        mf.gauss_bindings.emplace(name, std::move(k));
      }
    }
  }

  if (j.contains("diagram")) mf.diagram = parse_expr(j["diagram"], mf, "diagram");

  if (j.contains("prior")) {
    const Json& pj = j["prior"];
    if (pj.is_string()) {
      const std::string pname = pj.get<std::string>();
      mf.prior_name = pname;
      auto sig_it = mf.signature.find(pname);
      if (sig_it == mf.signature.end())
        throw ModelError("prior generator '" + pname + "' not declared");
      if (!ir::is_unit(sig_it->second.dom))
        throw ModelError("prior '" + pname + "' must have unit domain");
      if (mf.category == ir::BackendTag::FinStoch)
        mf.fin_prior = mf.fin_bindings.at(pname);
      else
        mf.gauss_prior = mf.gauss_bindings.at(pname);
    } else if (pj.is_array()) {
      if (mf.category != ir::BackendTag::FinStoch)
        throw ModelError("inline array prior is only valid for finstoch models");
      finstoch::FinState p;
      p.entries = parse_vector(pj, "prior").transpose();
      mf.fin_prior = std::move(p);
    } else if (pj.is_object()) {
      if (mf.category != ir::BackendTag::Gauss)
        throw ModelError("inline mean/cov prior is only valid for gauss models");
      if (!pj.contains("mean") || !pj.contains("cov"))
        throw ModelError("inline gauss prior needs mean and cov");
      Eigen::VectorXd mean = parse_vector(pj["mean"], "prior.mean");
      Eigen::MatrixXd cov = pj["cov"].is_array() && !pj["cov"].empty()
                                ? parse_matrix(pj["cov"], "prior.cov")
                                : Eigen::MatrixXd(0, 0);
      if (cov.rows() != mean.size() || cov.cols() != mean.size())
        throw ModelError("prior.cov shape does not match prior.mean");
      mf.gauss_prior = gauss::make_state(std::move(mean), std::move(cov));
    } else {
      throw ModelError("prior must be a generator name, an array, or {mean, cov}");
    }
  }

  if (j.contains("chain")) {
    const Json& cj = expect_object(j["chain"], "chain");
    ChainSection cs;
    cs.parameters = expect_string(cj.value("parameters", Json("")), "chain.parameters");
    cs.states = expect_string(cj.value("states", Json("")), "chain.states");
    cs.transition = expect_string(cj.value("transition", Json("")), "chain.transition");
    cs.initial = expect_string(cj.value("initial", Json("")), "chain.initial");
    if (cj.contains("observation"))
      cs.observation = expect_string(cj["observation"], "chain.observation");
    mf.chain = std::move(cs);
    // Resolve the referenced names now so a broken chain section fails at
    // load; value-level validation stays with `check`.
    if (mf.has_hmm())
      mf.hmm_model();
    else
      mf.chain_model();
  }

  return mf;
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model_text(buf.str());
}

}  // namespace bayeslens::model
