#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bayeslens/finstoch.hpp"
#include "testkit.hpp"

using namespace bayeslens;
namespace fs = bayeslens::finstoch;

namespace {

fs::StochasticMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.begin()->size());
  fs::StochasticMatrix m;
  m.entries.resize(r, c);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double x : row) m.entries(i, j++) = x;
    ++i;
  }
  return m;
}

// The noisy-parity observation of a fair die: odd faces report "even" with
// probability 0.1, even faces with probability 0.9.
fs::StochasticMatrix parity_channel() {
  return from_rows({{0.1, 0.9}, {0.9, 0.1}, {0.1, 0.9}, {0.9, 0.1}, {0.1, 0.9}, {0.9, 0.1}});
}

fs::FinState uniform_die() {
  return fs::make_state(std::vector<double>(6, 1.0 / 6.0));
}

}  // namespace

TEST_CASE("composition is the matrix product") {
  const auto f = from_rows({{0.9, 0.1}, {0.2, 0.8}});
  const auto ff = fs::compose(f, f);
  CHECK(ff.entries(0, 0) == doctest::Approx(0.83).epsilon(1e-12));
  CHECK(ff.entries(0, 1) == doctest::Approx(0.17).epsilon(1e-12));
  CHECK(ff.entries(1, 0) == doctest::Approx(0.34).epsilon(1e-12));
  CHECK(ff.entries(1, 1) == doctest::Approx(0.66).epsilon(1e-12));
  CHECK(ff.is_stochastic());
}

TEST_CASE("structural kernels") {
  const auto c = fs::copy(3);
  REQUIRE(c.dom_card() == 3);
  REQUIRE(c.cod_card() == 9);
  for (std::size_t x = 0; x < 3; ++x)
    CHECK(c.entries(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x * 3 + x)) == 1.0);

  const auto d = fs::del(4);
  CHECK(d.cod_card() == 1);
  CHECK(d.entries.col(0).minCoeff() == 1.0);

  const auto sw = fs::swap(2, 3);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      CHECK(sw.entries(static_cast<Eigen::Index>(a * 3 + b),
                       static_cast<Eigen::Index>(b * 2 + a)) == 1.0);

  // swap . swap = id
  const auto back = fs::compose(sw, fs::swap(3, 2));
  CHECK((back.entries - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);

  CHECK(fs::dirac(2, 5).entries(0, 2) == 1.0);
  CHECK(fs::is_state(fs::dirac(2, 5)));
}

TEST_CASE("noisy parity of a fair die: backward kernel by enumeration") {
  const auto f = parity_channel();
  const auto p = uniform_die();
  const auto q = fs::pushforward(f, p);
  CHECK(q.entries(0, 0) == doctest::Approx(0.5).epsilon(1e-12));

  const auto back = fs::bayes_invert(f, p, fs::ZeroFillPolicy::Uniform);
  REQUIRE(back.dom_card() == 2);
  REQUIRE(back.cod_card() == 6);

  // Enumerated joint: back(y,x) must be p(x) f(x,y) / q(y).
  for (Eigen::Index y = 0; y < 2; ++y)
    for (Eigen::Index x = 0; x < 6; ++x)
      CHECK(back.entries(y, x) ==
            doctest::Approx(p.entries(0, x) * f.entries(x, y) / q.entries(0, y))
                .epsilon(1e-12));

  // Frozen row for the "even" observation.
  const double expect[6] = {1.0 / 30, 0.3, 1.0 / 30, 0.3, 1.0 / 30, 0.3};
  for (Eigen::Index x = 0; x < 6; ++x)
    CHECK(back.entries(0, x) == doctest::Approx(expect[x]).epsilon(1e-12));

  CHECK(fs::inversion_law_residual(f, back, p) <= 1e-12);
}

TEST_CASE("inversion law on random pairs") {
  Rng rng(11);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t dom = 1 + rng.index(6);
    const std::size_t cod = 1 + rng.index(6);
    const auto f = testkit::random_fin_kernel(rng, dom, cod);
    const auto p = testkit::random_fin_state(rng, dom, i % 3 == 0);
    const auto back = fs::bayes_invert(f, p, fs::ZeroFillPolicy::Uniform);
    worst = std::max(worst, fs::inversion_law_residual(f, back, p));

    // Transpose form of the same statement, straight from the joint.
    const auto q = fs::pushforward(f, p);
    for (Eigen::Index x = 0; x < static_cast<Eigen::Index>(dom); ++x)
      for (Eigen::Index y = 0; y < static_cast<Eigen::Index>(cod); ++y)
        worst = std::max(worst, std::abs(p.entries(0, x) * f.entries(x, y) -
                                         q.entries(0, y) * back.entries(y, x)));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("zero-mass observation policies") {
  // Second observation is unreachable.
  const auto f = from_rows({{1.0, 0.0}, {1.0, 0.0}});
  const auto p = fs::make_state({0.3, 0.7});

  const auto uni = fs::bayes_invert(f, p, fs::ZeroFillPolicy::Uniform);
  CHECK(uni.entries(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(uni.entries(1, 1) == doctest::Approx(0.5).epsilon(1e-12));

  const auto first = fs::bayes_invert(f, p, fs::ZeroFillPolicy::FirstIndex);
  CHECK(first.entries(1, 0) == 1.0);
  CHECK(first.entries(1, 1) == 0.0);

  CHECK_THROWS_AS(fs::bayes_invert(f, p, fs::ZeroFillPolicy::Error),
                  ZeroMassObservationError);

  // The supported row (the reachable observation) is identical either way.
  CHECK((uni.entries.row(0) - first.entries.row(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("support objects: section and retraction") {
  const auto p = fs::make_state({0.5, 0.5, 0.0});
  const auto s = fs::support_of(p);
  REQUIRE(s.card() == 2);
  CHECK(s.indices[0] == 0);
  CHECK(s.indices[1] == 1);

  // retraction . inclusion = id on the support, exactly.
  const auto ri = fs::compose(s.inclusion, s.retraction);
  CHECK((ri.entries - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

  // inclusion . retraction = id almost surely at p (they differ only on the
  // zero-mass point).
  const auto ir_ = fs::compose(s.retraction, s.inclusion);
  CHECK(fs::almost_equal_residual(ir_, fs::identity(3), p) == 0.0);
  CHECK((ir_.entries - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() > 0.1);

  // Off-support retraction rows spread uniformly over the support.
  CHECK(s.retraction.entries(2, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.retraction.entries(2, 1) == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(fs::support_of(fs::FinState{from_rows({{0.0, 0.0}})}), EmptySupportError);
}

TEST_CASE("supported inverse is policy independent") {
  Rng rng(23);
  for (int i = 0; i < 40; ++i) {
    const std::size_t dom = 2 + rng.index(4);
    const std::size_t cod = 2 + rng.index(4);
    auto f = testkit::random_fin_kernel(rng, dom, cod);
    // Knock out a random observation column so some policy rows differ.
    const auto dead = static_cast<Eigen::Index>(rng.index(cod));
    if (cod > 1) {
      f.entries.col(dead).setZero();
      for (Eigen::Index r = 0; r < f.entries.rows(); ++r)
        f.entries.row(r) /= f.entries.row(r).sum();
    }
    const auto p = testkit::random_fin_state(rng, dom, true);
    const auto q = fs::pushforward(f, p);
    const auto sq = fs::support_of(q);
    const auto sp = fs::support_of(p);

    const auto supported = fs::bayes_invert_supported(f, p);
    CHECK(supported.dom_support.indices == sq.indices);
    CHECK(supported.cod_support.indices == sp.indices);

    for (auto policy : {fs::ZeroFillPolicy::Uniform, fs::ZeroFillPolicy::FirstIndex}) {
      const auto restricted = fs::restrict(fs::bayes_invert(f, p, policy), sq, sp);
      CHECK((restricted.entries - supported.kernel.entries).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("supported copy inverse is the identity on the support") {
  Rng rng(31);
  for (int i = 0; i < 30; ++i) {
    const std::size_t n = 1 + rng.index(5);
    const auto p = testkit::random_fin_state(rng, n, true);
    const auto inv = fs::copy_inverse_supported(p);
    const auto k = inv.cod_support.card();
    REQUIRE(inv.kernel.dom_card() == k);
    CHECK((inv.kernel.entries - Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k),
                                                          static_cast<Eigen::Index>(k)))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);

    // The diagonal joint support sits at (j, j).
    const auto sp = fs::support_of(p);
    REQUIRE(inv.dom_support.card() == k);
    for (std::size_t j = 0; j < k; ++j)
      CHECK(inv.dom_support.indices[j] == sp.indices[j] * n + sp.indices[j]);

    // Restricted copy then its supported inverse: the identity on supp(p).
    const auto copy_r = fs::restrict(fs::copy(n), sp, inv.dom_support);
    const auto round = fs::compose(copy_r, inv.kernel);
    CHECK((round.entries - Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k),
                                                     static_cast<Eigen::Index>(k)))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
  }
}

TEST_CASE("joint state and distances") {
  const auto f = from_rows({{0.5, 0.5}, {0.0, 1.0}});
  const auto p = fs::make_state({0.4, 0.6});
  const auto j = fs::joint_state(f, p);
  REQUIRE(j.cod_card() == 4);
  CHECK(j.entries(0, 0) == doctest::Approx(0.2).epsilon(1e-12));  // (x=0,y=0)
  CHECK(j.entries(0, 1) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(j.entries(0, 2) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(j.entries(0, 3) == doctest::Approx(0.6).epsilon(1e-12));

  CHECK(fs::state_distance(p, p) == 0.0);
  CHECK(fs::state_distance(p, fs::make_state({0.5, 0.5})) ==
        doctest::Approx(0.1).epsilon(1e-12));

  CHECK_THROWS_AS(fs::almost_equal_residual(f, from_rows({{1.0}}), p),
                  DimensionMismatchError);
}
