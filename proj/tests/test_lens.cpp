#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bayeslens/lens.hpp"
#include "testkit.hpp"

using namespace bayeslens;
namespace fs = bayeslens::finstoch;
namespace gs = bayeslens::gauss;

TEST_CASE("identity lens satisfies the law") {
  Rng rng(71);
  const auto p = testkit::random_fin_state(rng, 5, true);
  const auto lens = identity_lens<FinStochBackend>(5);
  const auto report = check_lens_law<FinStochBackend>(lens, p, 1e-12);
  CHECK(report.pass);
  CHECK(report.residual <= 1e-12);
  CHECK(report.tol == 1e-12);
}

TEST_CASE("lens composition matches the inverse of the composite almost surely") {
  Rng rng(73);
  for (int i = 0; i < 60; ++i) {
    const std::size_t a = 2 + rng.index(3);
    const std::size_t b = 2 + rng.index(3);
    const std::size_t c = 2 + rng.index(3);
    const auto f = testkit::random_fin_kernel(rng, a, b);
    const auto g = testkit::random_fin_kernel(rng, b, c);
    const auto p = testkit::random_fin_state(rng, a, i % 3 == 0);

    const auto composed =
        lens_compose(inversion_functor<FinStochBackend>(f), inversion_functor<FinStochBackend>(g));
    const auto direct = inversion_functor<FinStochBackend>(fs::compose(f, g));

    const auto q = fs::pushforward(fs::compose(f, g), p);
    CHECK(fs::almost_equal_residual(composed.backward(p), direct.backward(p), q) <= 1e-9);
    CHECK(check_lens_law<FinStochBackend>(composed, p, 1e-9).pass);
  }
}

TEST_CASE("plain backwards can disagree off support; supported ones cannot") {
  // f maps everything to the first observation, g is lossy afterwards. With a
  // prior that kills one input, the policy-filled rows of the two plain
  // backwards differ, but only outside the pushforward's support.
  fs::StochasticMatrix f;
  f.entries.resize(2, 2);
  f.entries << 1.0, 0.0, 1.0, 0.0;
  fs::StochasticMatrix g;
  g.entries.resize(2, 2);
  g.entries << 0.7, 0.3, 0.4, 0.6;
  const auto p = fs::make_state({0.5, 0.5});

  const auto composed =
      lens_compose(inversion_functor<FinStochBackend>(f), inversion_functor<FinStochBackend>(g));
  const auto direct = inversion_functor<FinStochBackend>(fs::compose(f, g));
  const auto b1 = composed.backward(p);
  const auto b2 = direct.backward(p);

  const auto q = fs::pushforward(fs::compose(f, g), p);
  CHECK(fs::almost_equal_residual(b1, b2, q) <= 1e-12);

  // The exact (supported) functor is strictly compositional: equal kernels,
  // equal supports, no almost-surely qualifier.
  const auto e1 = lens_compose(exact_inversion_functor<FinStochBackend>(f),
                               exact_inversion_functor<FinStochBackend>(g));
  const auto e2 = exact_inversion_functor<FinStochBackend>(fs::compose(f, g));
  const auto s1 = e1.backward(p);
  const auto s2 = e2.backward(p);
  CHECK(s1.dom_support.indices == s2.dom_support.indices);
  CHECK(s1.cod_support.indices == s2.cod_support.indices);
  CHECK((s1.kernel.entries - s2.kernel.entries).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("exact functoriality on random pairs") {
  Rng rng(79);
  for (int i = 0; i < 60; ++i) {
    const std::size_t a = 2 + rng.index(3);
    const std::size_t b = 2 + rng.index(3);
    const std::size_t c = 2 + rng.index(3);
    const auto f = testkit::random_fin_kernel(rng, a, b);
    const auto g = testkit::random_fin_kernel(rng, b, c);
    const auto p = testkit::random_fin_state(rng, a, i % 2 == 0);

    const auto e1 = lens_compose(exact_inversion_functor<FinStochBackend>(f),
                                 exact_inversion_functor<FinStochBackend>(g));
    const auto e2 = exact_inversion_functor<FinStochBackend>(fs::compose(f, g));
    const auto s1 = e1.backward(p);
    const auto s2 = e2.backward(p);
    REQUIRE(s1.dom_support.indices == s2.dom_support.indices);
    REQUIRE(s1.cod_support.indices == s2.cod_support.indices);
    CHECK((s1.kernel.entries - s2.kernel.entries).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("tensor lens: sound at product priors, unsound at correlated ones") {
  fs::StochasticMatrix f;
  f.entries.resize(2, 2);
  f.entries << 0.9, 0.1, 0.2, 0.8;
  const auto tensor_lens =
      lens_tensor(inversion_functor<FinStochBackend>(f), inversion_functor<FinStochBackend>(f));

  // Product prior: the tensored backward satisfies the law.
  const auto p1 = fs::make_state({0.3, 0.7});
  const auto p2 = fs::make_state({0.6, 0.4});
  const auto prod = fs::tensor(p1, p2);
  CHECK(check_lens_law<FinStochBackend>(tensor_lens, prod, 1e-9).pass);

  // Perfectly correlated prior: the law fails by a wide margin, because the
  // tensored backward only sees the two marginals.
  const auto correlated = fs::make_state({0.5, 0.0, 0.0, 0.5});
  const auto report = check_lens_law<FinStochBackend>(tensor_lens, correlated, 1e-9);
  CHECK_FALSE(report.pass);
  CHECK(report.residual > 0.01);
}

TEST_CASE("gauss lenses compose almost surely") {
  Rng rng(83);
  for (int i = 0; i < 40; ++i) {
    const std::size_t a = 1 + rng.index(3);
    const std::size_t b = 1 + rng.index(3);
    const std::size_t c = rng.index(3);
    const auto f = testkit::random_gauss_kernel(rng, a, b);
    const auto g = testkit::random_gauss_kernel(rng, b, c);
    const auto p = testkit::random_gauss_state(rng, a, i % 3 == 0);

    const auto composed =
        lens_compose(inversion_functor<GaussBackend>(f), inversion_functor<GaussBackend>(g));
    const auto direct = inversion_functor<GaussBackend>(gs::compose(f, g));
    const auto q = gs::pushforward(gs::compose(f, g), p);
    CHECK(gs::almost_equal_residual(composed.backward(p), direct.backward(p), q) <= 1e-7);
    CHECK(check_lens_law<GaussBackend>(composed, p, 1e-7).pass);
  }
}

TEST_CASE("including a dependent lens preserves the law") {
  Rng rng(89);
  for (int i = 0; i < 30; ++i) {
    const std::size_t a = 2 + rng.index(3);
    const std::size_t b = 2 + rng.index(3);
    const auto f = testkit::random_fin_kernel(rng, a, b);
    const auto p = testkit::random_fin_state(rng, a, true);
    const auto plain = include_lens(exact_inversion_functor<FinStochBackend>(f));
    CHECK(check_lens_law<FinStochBackend>(plain, p, 1e-9).pass);
  }
}

TEST_CASE("dependent composition rejects mismatched middles") {
  // Composing dependent lenses whose middle supports disagree must throw
  // rather than silently compose kernels of the wrong shape.
  fs::StochasticMatrix f;
  f.entries.resize(2, 2);
  f.entries << 1.0, 0.0, 1.0, 0.0;  // image = {0}
  fs::StochasticMatrix g;
  g.entries.resize(2, 2);
  g.entries << 0.5, 0.5, 0.5, 0.5;
  const auto p = fs::make_state({0.4, 0.6});

  DependentBayesianLens<FinStochBackend> down = exact_inversion_functor<FinStochBackend>(f);
  DependentBayesianLens<FinStochBackend> up = exact_inversion_functor<FinStochBackend>(g);
  // Sabotage: pretend g's lens was built for a different middle support by
  // feeding it a backward that ignores the state it is given.
  const auto full = fs::make_state({0.5, 0.5});
  up.backward = [g, full](const fs::FinState&) {
    return fs::bayes_invert_supported(g, full);
  };
  const auto composed = lens_compose(down, up);
  CHECK_THROWS_AS(composed.backward(p), DimensionMismatchError);
}
