#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bayeslens/evaluate.hpp"
#include "bayeslens/ir.hpp"
#include "testkit.hpp"

using namespace bayeslens;

namespace {

ir::Signature two_step_sig() {
  ir::Signature sig;
  sig["f"] = ir::KernelType{ir::ObjectRef::finite(2), ir::ObjectRef::finite(3)};
  sig["g"] = ir::KernelType{ir::ObjectRef::finite(3), ir::ObjectRef::finite(2)};
  sig["p"] = ir::KernelType{ir::unit_object(ir::BackendTag::FinStoch), ir::ObjectRef::finite(2)};
  return sig;
}

// Fold a normal form back into one kernel, layer by layer.
template <class B>
typename B::Kernel evaluate_layers(const ir::NormalForm& nf, const Bindings<B>& bind) {
  typename B::Kernel acc = evaluate<B>(nf.layers.front().to_expr(), bind);
  for (std::size_t i = 1; i < nf.layers.size(); ++i)
    acc = B::compose(acc, evaluate<B>(nf.layers[i].to_expr(), bind));
  return acc;
}

}  // namespace

TEST_CASE("object algebra") {
  const auto a = ir::ObjectRef::finite(2, {"x", "y"});
  const auto b = ir::ObjectRef::finite(3);
  const auto ab = ir::tensor_object(a, b);
  CHECK(ab.size == 6);
  CHECK(ab.labels.empty());  // b has no labels, so the pair has none

  const auto aa = ir::tensor_object(a, a);
  REQUIRE(aa.labels.size() == 4);
  CHECK(aa.labels[0] == "(x,x)");
  CHECK(aa.labels[1] == "(x,y)");  // second factor varies fastest
  CHECK(aa.labels[2] == "(y,x)");

  CHECK(ir::is_unit(ir::unit_object(ir::BackendTag::FinStoch)));
  CHECK(ir::unit_object(ir::BackendTag::Gauss).size == 0);
  CHECK(ir::describe(a) == "fin[2]");
  CHECK(ir::describe(ir::ObjectRef::euclidean(3)) == "eucl[3]");
  CHECK(ir::same_object(a, ir::ObjectRef::finite(2)));  // labels don't matter
  CHECK_FALSE(ir::same_object(a, b));
  CHECK_THROWS_AS(ir::tensor_object(a, ir::ObjectRef::euclidean(1)), DimensionMismatchError);
}

TEST_CASE("typecheck reports the failing sub-expression") {
  const auto sig = two_step_sig();

  const auto ok = ir::KernelExpr::seq({ir::KernelExpr::gen("f"), ir::KernelExpr::gen("g")});
  const auto type = ir::typecheck(ok, sig);
  CHECK(type.dom.size == 2);
  CHECK(type.cod.size == 2);

  // g;f breaks at the second child: dom(f)=2 but cod(g)=2 -> f's dom is fine,
  // use f;f instead so sizes clash.
  const auto bad = ir::KernelExpr::seq({ir::KernelExpr::gen("f"), ir::KernelExpr::gen("f")});
  try {
    ir::typecheck(bad, sig);
    FAIL("expected a type mismatch");
  } catch (const TypeMismatchError& e) {
    CHECK(e.path() == "seq[1]");
  }

  const auto nested = ir::KernelExpr::seq(
      {ir::KernelExpr::gen("f"),
       ir::KernelExpr::par({ir::KernelExpr::id(ir::ObjectRef::finite(3)),
                            ir::KernelExpr::gen("missing")})});
  try {
    ir::typecheck(nested, sig);
    FAIL("expected an unbound name");
  } catch (const UnboundNameError& e) {
    CHECK(e.name() == "missing");
    CHECK(e.path() == "seq[1].par[1]");
  }

  // State nodes must be bound to unit-domain kernels.
  const auto bad_state = ir::KernelExpr::state("f");
  CHECK_THROWS_AS(ir::typecheck(bad_state, sig), TypeMismatchError);

  const auto good_state = ir::KernelExpr::state("p");
  CHECK(ir::typecheck(good_state, sig).cod.size == 2);
}

TEST_CASE("normalize: layer structure") {
  const auto sig = two_step_sig();

  const auto seq = ir::KernelExpr::seq({ir::KernelExpr::gen("f"), ir::KernelExpr::gen("g")});
  const auto nf = ir::normalize(seq, sig);
  CHECK(nf.layers.size() == 2);
  CHECK(nf.dom.size == 2);
  CHECK(nf.cod.size == 2);

  const auto par = ir::KernelExpr::par({ir::KernelExpr::gen("f"), ir::KernelExpr::gen("p")});
  const auto nfp = ir::normalize(par, sig);
  CHECK(nfp.layers.size() == 1);
  CHECK(nfp.layers[0].cells.size() == 2);
  CHECK(nfp.cod.size == 6);

  // Uneven parallel branches: the shorter one is padded with identity layers
  // at its tail, so both branches stay aligned stage by stage.
  const auto uneven = ir::KernelExpr::par(
      {ir::KernelExpr::seq({ir::KernelExpr::gen("f"), ir::KernelExpr::gen("g")}),
       ir::KernelExpr::gen("f")});
  const auto nfu = ir::normalize(uneven, sig);
  REQUIRE(nfu.layers.size() == 2);
  REQUIRE(nfu.layers[1].cells.size() == 2);
  CHECK(nfu.layers[1].cells[1].kind == ir::KernelExpr::Kind::Id);
}

TEST_CASE("normalize preserves meaning on random diagrams") {
  Rng rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 120; ++i) {
    auto c = testkit::random_fin_case(rng);
    const auto direct = evaluate<FinStochBackend>(c.expr, c.bindings);
    const auto nf = ir::normalize(c.expr, c.sig);
    const auto layered = evaluate_layers<FinStochBackend>(nf, c.bindings);
    REQUIRE(direct.dom_card() == layered.dom_card());
    REQUIRE(direct.cod_card() == layered.cod_card());
    worst = std::max(worst, (direct.entries - layered.entries).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-12);

  for (int i = 0; i < 120; ++i) {
    auto c = testkit::random_gauss_case(rng);
    const auto direct = evaluate<GaussBackend>(c.expr, c.bindings);
    const auto nf = ir::normalize(c.expr, c.sig);
    const auto layered = evaluate_layers<GaussBackend>(nf, c.bindings);
    REQUIRE(direct.dom_dim() == layered.dom_dim());
    REQUIRE(direct.cod_dim() == layered.cod_dim());
    const double d = std::max(
        {direct.M.size() ? (direct.M - layered.M).cwiseAbs().maxCoeff() : 0.0,
         direct.b.size() ? (direct.b - layered.b).cwiseAbs().maxCoeff() : 0.0,
         direct.S.size() ? (direct.S - layered.S).cwiseAbs().maxCoeff() : 0.0});
    worst = std::max(worst, d);
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("evaluate: structural kernels and bad bindings") {
  Rng rng(1);
  Bindings<FinStochBackend> bind;
  bind.emplace("f", testkit::random_fin_kernel(rng, 2, 2));

  const auto sw = ir::KernelExpr::swap(ir::ObjectRef::finite(2), ir::ObjectRef::finite(3));
  const auto k = evaluate<FinStochBackend>(sw, bind);
  REQUIRE(k.dom_card() == 6);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      CHECK(k.entries(static_cast<Eigen::Index>(a * 3 + b),
                      static_cast<Eigen::Index>(b * 2 + a)) == 1.0);

  CHECK_THROWS_AS(evaluate<FinStochBackend>(ir::KernelExpr::gen("nope"), bind),
                  UnboundNameError);
  CHECK_THROWS_AS(
      evaluate<FinStochBackend>(ir::KernelExpr::id(ir::ObjectRef::euclidean(2)), bind),
      DimensionMismatchError);
}
