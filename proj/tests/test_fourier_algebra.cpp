#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <nct/fourier_algebra.hpp>
#include <random>

using namespace nct;

namespace {

const AlgebraParams P{0.37, {0.0, 1.0}};

AlgebraElement mono(int m, int n, cplx c = 1.0) { return AlgebraElement::monomial(m, n, c); }

AlgebraElement rand_elem(std::mt19937_64& rng, int B) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::tuple<int, int, cplx>> t;
  for (int m = -B; m <= B; ++m)
    for (int n = -B; n <= B; ++n) t.emplace_back(m, n, cplx(u(rng), u(rng)));
  return AlgebraElement::from_terms(t);
}

// Oracle: words in U^{+-1}, V^{+-1} reordered one transposition at a time.
// Each letter is (generator, exponent sign); VU = q UV gives V^b U^a = q^{ab} U^a V^b.
cplx reorder_phase(std::vector<std::pair<char, int>> word, double theta) {
  cplx ph = 1.0;
  bool moved = true;
  while (moved) {
    moved = false;
    for (std::size_t i = 0; i + 1 < word.size(); ++i)
      if (word[i].first == 'V' && word[i + 1].first == 'U') {
        ph *= phase(theta * word[i].second * word[i + 1].second);
        std::swap(word[i], word[i + 1]);
        moved = true;
      }
  }
  return ph;
}

}  // namespace

TEST(Multiply, GeneratorProducts) {
  auto uv = multiply(mono(1, 0), mono(0, 1), P);
  EXPECT_EQ(uv.coeff(1, 1), cplx(1.0));
  auto vu = multiply(mono(0, 1), mono(1, 0), P);
  EXPECT_NEAR(std::abs(vu.coeff(1, 1) - phase(P.theta)), 0.0, 1e-15);
  auto uvuv = multiply(mono(1, 1), mono(1, 1), P);
  cplx oracle = reorder_phase({{'U', 1}, {'V', 1}, {'U', 1}, {'V', 1}}, P.theta);
  EXPECT_NEAR(std::abs(uvuv.coeff(2, 2) - oracle), 0.0, 1e-15);
  EXPECT_EQ(uvuv.nnz(), 1u);
}

TEST(Multiply, MatchesWordReordering) {
  // U^a V^b U^c V^d against letter-by-letter reordering
  for (int a : {-2, 1, 3})
    for (int b : {-1, 2})
      for (int c : {-3, 1})
        for (int d : {0, 2}) {
          std::vector<std::pair<char, int>> w;
          for (int i = 0; i < std::abs(a); ++i) w.push_back({'U', a > 0 ? 1 : -1});
          for (int i = 0; i < std::abs(b); ++i) w.push_back({'V', b > 0 ? 1 : -1});
          for (int i = 0; i < std::abs(c); ++i) w.push_back({'U', c > 0 ? 1 : -1});
          for (int i = 0; i < std::abs(d); ++i) w.push_back({'V', d > 0 ? 1 : -1});
          auto r = multiply(mono(a, b), mono(c, d), P);
          EXPECT_NEAR(std::abs(r.coeff(a + c, b + d) - reorder_phase(w, P.theta)), 0.0, 1e-13);
        }
}

TEST(Multiply, BandBound) {
  std::mt19937_64 rng(1);
  auto a = rand_elem(rng, 2), b = rand_elem(rng, 3);
  EXPECT_LE(multiply(a, b, P).band(), a.band() + b.band());
}

TEST(Star, Examples) {
  auto u = star(mono(1, 0), P);
  EXPECT_EQ(u.coeff(-1, 0), cplx(1.0));
  auto uv = star(mono(1, 1), P);
  cplx oracle = reorder_phase({{'V', -1}, {'U', -1}}, P.theta);
  EXPECT_NEAR(std::abs(uv.coeff(-1, -1) - oracle), 0.0, 1e-15);
  EXPECT_EQ(star(AlgebraElement::scalar(3.0), P).coeff(0, 0), cplx(3.0));
}

TEST(Trace, Examples) {
  auto a = AlgebraElement::scalar(3.0) + mono(1, 0);
  EXPECT_EQ(trace_phi0(a), cplx(3.0));
  EXPECT_NEAR(std::abs(trace_phi0(multiply(mono(1, 0), star(mono(1, 0), P), P)) - 1.0), 0.0, 1e-15);
  EXPECT_EQ(trace_phi0(multiply(mono(0, 1), mono(1, 0), P)), cplx(0.0));
}

TEST(Derivation, Examples) {
  auto d = derivation(mono(2, 1), Deriv::delta1, P);
  EXPECT_EQ(d.coeff(2, 1), cplx(2.0));
  EXPECT_TRUE(derivation(AlgebraElement::one(), Deriv::delta, P).is_zero());
  auto e = derivation(mono(1, 1), Deriv::delta, P);
  EXPECT_NEAR(std::abs(e.coeff(1, 1) - cplx(1.0, -1.0)), 0.0, 1e-15);
}

TEST(Properties, SeededSuite) {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 25; ++trial) {
    auto a = rand_elem(rng, 3), b = rand_elem(rng, 2), c = rand_elem(rng, 3);
    auto lhs = multiply(multiply(a, b, P), c, P), rhs = multiply(a, multiply(b, c, P), P);
    EXPECT_LE((lhs - rhs).l1(), 1e-12 * lhs.l1());
    EXPECT_LE((star(multiply(a, b, P), P) - multiply(star(b, P), star(a, P), P)).l1(), 1e-12 * lhs.l1());
    EXPECT_LE(std::abs(trace_phi0(multiply(a, b, P)) - trace_phi0(multiply(b, a, P))), 1e-12);
    cplx pos = trace_phi0(multiply(star(a, P), a, P));
    EXPECT_GE(pos.real(), -1e-12);
    EXPECT_LE(std::abs(pos.imag()), 1e-12);
    for (auto w : {Deriv::delta1, Deriv::delta2}) {
      auto l = derivation(multiply(a, b, P), w, P);
      auto r = multiply(derivation(a, w, P), b, P) + multiply(a, derivation(b, w, P), P);
      EXPECT_LE((l - r).l1(), 1e-12 * (1 + l.l1()));
      EXPECT_LE((star(derivation(a, w, P), P) + derivation(star(a, P), w, P)).l1(), 1e-12);
    }
    EXPECT_LE((star(star(a, P), P) - a).l1(), 1e-13);
  }
}

TEST(Exp, ScalarAndZero) {
  auto one = exp_selfadjoint(AlgebraElement(), 1.0, P);
  EXPECT_EQ(one.coeff(0, 0), cplx(1.0));
  auto e = exp_selfadjoint(AlgebraElement::scalar(0.7), 1.0, P);
  EXPECT_NEAR(e.coeff(0, 0).real(), std::exp(0.7), 1e-14);
  EXPECT_EQ(e.nnz(), 1u);
}

TEST(Exp, GroupLawAndSelfAdjoint) {
  std::mt19937_64 rng(5);
  auto r = rand_elem(rng, 2);
  auto h = 0.1 * (r + star(r, P));
  auto k = exp_selfadjoint(h, 1.0, P), ki = exp_selfadjoint(h, -1.0, P);
  EXPECT_LE((multiply(k, ki, P) - AlgebraElement::one()).l1(), 1e-10);
  EXPECT_TRUE(is_selfadjoint(k, P, 1e-12));
}

TEST(Exp, RejectsNonSelfAdjoint) {
  EXPECT_THROW(exp_selfadjoint(mono(1, 0), 1.0, P), NonSelfAdjointInput);
}

TEST(Exp, BandCapTriggersDivergence) {
  ExpOptions o;
  o.band_cap_factor = 1;
  o.band_cap_floor = 2;
  EXPECT_THROW(exp_selfadjoint(cos_u(1.0), 1.0, P, o), SeriesDivergence);
}

TEST(ConformalWeight, Examples) {
  EXPECT_NEAR(std::abs(conformal_weight(AlgebraElement::one(), WeylFactor{}, P) - 1.0), 0.0, 1e-15);
  WeylFactor k{0.4 * cos_u() + 0.2 * cos_v()};
  EXPECT_NEAR(std::abs(conformal_weight(k.pow(2.0, P), k, P) - 1.0), 0.0, 1e-12);
}

TEST(ConformalWeight, MatchesDenseGnsOracle) {
  // phi(U) = <L_U L_{k^-2} 1, 1> with k^{-2} = exp(-2h) taken as a dense matrix exponential
  // of L_h in the window N = 12, independent of the series code
  WeylFactor k{0.3 * cos_u()};
  const int N = 12, S = 2 * N + 1;
  Eigen::MatrixXcd Lh = Eigen::MatrixXcd::Zero(S * S, S * S);
  auto idx = [&](int m, int n) { return (m + N) * S + (n + N); };
  for (int m = -N; m <= N; ++m)
    for (int n = -N; n <= N; ++n)
      for (int dm : {-1, 1})
        if (std::abs(m + dm) <= N) Lh(idx(m + dm, n), idx(m, n)) += 0.15;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Lh);
  Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(S * S);
  e0(idx(0, 0)) = 1.0;
  Eigen::VectorXcd v = es.eigenvectors() *
                       (es.eigenvalues().array() * -2.0).exp().matrix().cast<cplx>().asDiagonal() *
                       es.eigenvectors().adjoint() * e0;
  // U * k^{-2}: the coefficient at (0,0) comes from the (-1,0) coefficient of k^{-2}
  cplx oracle = v(idx(-1, 0));
  EXPECT_NEAR(std::abs(conformal_weight(mono(1, 0), k, P) - oracle), 0.0, 1e-12);
}

TEST(Ribbon, SquareRootLaw) {
  WeylFactor k{0.5 * cos_u() + 0.3 * cos_v()};
  auto kh = k.pow(0.5, P), kmh = k.pow(-0.5, P), kk = k.pow(1.0, P), ki = k.pow(-1.0, P);
  std::mt19937_64 rng(3);
  auto a = rand_elem(rng, 2);
  auto tau = [&](const AlgebraElement& x) { return multiply(multiply(kh, x, P), kmh, P); };
  auto lhs = tau(tau(a));
  auto rhs = multiply(multiply(kk, a, P), ki, P);
  EXPECT_LE((lhs - rhs).l1(), 1e-10);
}

TEST(Element, PruneAndBand) {
  auto a = AlgebraElement::from_terms({{3, -1, 1e-16}, {1, 2, 2.0}});
  EXPECT_EQ(a.nnz(), 1u);
  EXPECT_EQ(a.band(), 2);
  EXPECT_EQ(AlgebraElement().band(), 0);
}

TEST(Element, JsonRoundTripBitExact) {
  std::mt19937_64 rng(11);
  auto a = rand_elem(rng, 2);
  auto j = to_json(a, P);
  AlgebraParams q;
  auto b = element_from_json(nlohmann::json::parse(j.dump()), &q);
  EXPECT_EQ(q.theta, P.theta);
  EXPECT_EQ(a.raw(), b.raw());
  // lexicographic order of coefficients
  auto& c = j["coeffs"];
  for (std::size_t i = 1; i < c.size(); ++i)
    EXPECT_TRUE(std::make_pair(c[i - 1][0].get<int>(), c[i - 1][1].get<int>()) <
                std::make_pair(c[i][0].get<int>(), c[i][1].get<int>()));
}
