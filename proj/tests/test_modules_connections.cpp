#include <gtest/gtest.h>

#include <nct/modules_connections.hpp>

using namespace nct;

namespace {

const AlgebraParams P{0.37, {0.0, 1.0}};
const AlgebraParams P0{0.0, {0.0, 1.0}};

const Idempotent& pr() {
  static Idempotent e = powers_rieffel(0.37, 16);
  return e;
}

// Chern number of the lower band of d.sigma by lattice link variables (Fukui-Hatsugai-Suzuki),
// independent of the Fourier pipeline
double lattice_chern(int L) {
  auto vec = [](double x, double y) {
    double dx = std::sin(kTwoPi * x), dy = std::sin(kTwoPi * y), dz = 1.0 - std::cos(kTwoPi * x) - std::cos(kTwoPi * y);
    Eigen::Matrix2cd H;
    H << dz, cplx(dx, -dy), cplx(dx, dy), -dz;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(H);
    return Eigen::Vector2cd(es.eigenvectors().col(0));
  };
  std::vector<Eigen::Vector2cd> u(std::size_t(L) * L);
  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b) u[std::size_t(a) * L + b] = vec(double(a) / L, double(b) / L);
  auto at = [&](int a, int b) -> const Eigen::Vector2cd& { return u[std::size_t((a + L) % L) * L + (b + L) % L]; };
  auto link = [](const Eigen::Vector2cd& x, const Eigen::Vector2cd& y) {
    cplx z = x.dot(y);
    return z / std::abs(z);
  };
  double total = 0.0;
  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b) {
      cplx f = link(at(a, b), at(a + 1, b)) * link(at(a + 1, b), at(a + 1, b + 1)) *
               link(at(a + 1, b + 1), at(a, b + 1)) * link(at(a, b + 1), at(a, b));
      total += std::arg(f);
    }
  return total / kTwoPi;
}

}  // namespace

TEST(Idempotent, UnitAndDiag) {
  auto e = Idempotent::unit(2);
  EXPECT_EQ(idempotent_defect(e, P), 0.0);
  EXPECT_NEAR(mat_trace(e).real(), 2.0, 1e-15);
  auto d = Idempotent::diag({1, 0});
  EXPECT_EQ(idempotent_defect(d, P), 0.0);
  EXPECT_NEAR(mat_trace(d).real(), 1.0, 1e-15);
}

TEST(Polish, QuadraticConvergence) {
  PolishLog log;
  powers_rieffel(0.37, 3, {}, -1.0, &log);
  ASSERT_GE(log.defects.size(), 4u);
  EXPECT_LE(log.defects.back(), 1e-10);
  // each step at least squares the defect up to a constant, until truncation takes over
  for (std::size_t i = 0; i + 1 < log.defects.size() && log.defects[i] > 1e-6; ++i)
    EXPECT_LE(log.defects[i + 1], 4.0 * log.defects[i] * log.defects[i]) << "step " << i;
}

TEST(Polish, RejectsFarFromIdempotent) {
  Idempotent e;
  e.entries = {AlgebraElement::scalar(0.5)};
  EXPECT_THROW(polish(e, P), PolishDiverged);
}

TEST(PowersRieffel, ContractAndTrace) {
  const auto& e = pr();
  EXPECT_LE(idempotent_defect(e, P), 1e-10);
  EXPECT_LE(selfadjoint_defect(e, P), 1e-12);
  EXPECT_NEAR(mat_trace(e).real(), 0.37, 1e-6);
  // truncating at the sampling band leaves the defect above tolerance
  PolishOptions o;
  o.cap_m = o.cap_n = 16;
  EXPECT_THROW(powers_rieffel(0.37, 16, o), PolishDiverged);
}

TEST(Chern, PowersRieffelHasUnitClass) {
  EXPECT_NEAR(std::abs(chern_number(pr(), P)), 1.0, 1e-6);
  // the opposite product reverses the sign
  EXPECT_NEAR(chern_number(with_side(pr(), Side::right), P), -chern_number(pr(), P), 1e-9);
}

TEST(Chern, BottMatchesLatticeOracle) {
  auto b = bott_projection(8);
  EXPECT_LE(idempotent_defect(b, P0), 1e-10);
  EXPECT_NEAR(mat_trace(b).real(), 1.0, 1e-9);
  double oracle = lattice_chern(48);
  EXPECT_NEAR(std::abs(oracle), 1.0, 1e-9);
  // lower band of d.sigma is the projection 1/2 (1 - d.sigma / |d|)
  EXPECT_NEAR(chern_number(b, P0), oracle, 1e-6);
}

TEST(Chern, TrivialClasses) {
  EXPECT_EQ(chern_number(Idempotent::unit(1), P), 0.0);
  auto h = hopf_line(0.6, P, Side::left);
  EXPECT_LE(idempotent_defect(h, P), 1e-12);
  EXPECT_LE(selfadjoint_defect(h, P), 1e-12);
  EXPECT_NEAR(chern_number(h, P), 0.0, 1e-9);
  EXPECT_NEAR(mat_trace(h).real(), 1.0, 1e-12);
}

TEST(Chern, RejectsNonIntegral) {
  Idempotent e;
  e.entries = {0.3 * AlgebraElement::monomial(1, 0) + 0.3 * AlgebraElement::monomial(0, 1) +
               0.2 * AlgebraElement::monomial(-1, -1) + AlgebraElement::scalar(0.5)};
  EXPECT_THROW(chern_number(e, P), NonIntegral);
}

TEST(Sigma, TranslationAndRibbon) {
  WeylFactor k{0.3 * cos_u() + 0.2 * cos_v()};
  for (Side s : {Side::left, Side::right}) {
    Idempotent e = with_side(pr(), s);
    EXPECT_LE(idempotent_defect(sigma_translate(e, k, P), P), 1e-10);
    Idempotent r = ribbon(e, k, P);
    EXPECT_LE(idempotent_defect(r, P), 1e-10);
    EXPECT_LE(sigma_selfadjoint_defect(r, k, P), 1e-10);
    // the untranslated representative is not sigma-selfadjoint
    EXPECT_GT(sigma_selfadjoint_defect(e, k, P), 1e-3);
  }
  // trivial k changes nothing
  EXPECT_EQ(sigma_translate(pr(), WeylFactor{}, P).entries[0].raw(), pr().entries[0].raw());
}

TEST(Sigma, TraceInvariance) {
  WeylFactor k{0.3 * cos_u() + 0.2 * cos_v()};
  EXPECT_NEAR(std::abs(mat_trace(sigma_translate(pr(), k, P)) - mat_trace(pr())), 0.0, 1e-10);
}

TEST(Sigma, TwistedDerivationRule) {
  // d(ab) = d(a) b + sigma(a) d(b) for d = [D_w, .]_sigma, D_w = L_k D L_k, sigma = Ad k^2
  WeylFactor k{0.4 * cos_u() + 0.3 * cos_v()};
  TwistSpec t;
  t.side = Side::left;
  t.k_plus = t.k_minus = k;
  OddOperator D = exact_dirac(t, P);
  std::mt19937_64 rng(8);
  AlgebraElement a = random_element(rng, 1), b = random_element(rng, 1);
  AlgebraElement k2 = k.pow(2.0, P), km2 = k.pow(-2.0, P);
  auto sig = [&](const AlgebraElement& x) { return multiply(multiply(k2, x, P), km2, P); };
  auto da = exact_twisted_commutator(D, Side::left, a, sig(a), P);
  auto db = exact_twisted_commutator(D, Side::left, b, sig(b), P);
  AlgebraElement ab = multiply(a, b, P);
  auto dab = exact_twisted_commutator(D, Side::left, ab, sig(ab), P);
  AlgebraElement sa = sig(a);
  double worst = 0.0, scale = 0.0;
  for (auto& x : monomial_columns(2, {0, 1}, 3)) {
    Section bx = {multiply(b, x[0], P), multiply(b, x[1], P)};
    Section rhs = da(bx), dbx = db(x);
    for (int i = 0; i < 2; ++i) rhs[i] = rhs[i] + multiply(sa, dbx[i], P);
    Section lhs = dab(x);
    for (int i = 0; i < 2; ++i) {
      worst = std::max(worst, (lhs[i] - rhs[i]).max_abs());
      scale = std::max(scale, lhs[i].max_abs());
    }
  }
  EXPECT_LE(worst, 1e-11 * scale);
}

TEST(Sigma, FormsFromCommutingAlgebra) {
  // w = [D_w, R_r] with the twist on the left: w L_a = L_{sigma(a)} w
  WeylFactor k{0.4 * cos_u() + 0.3 * cos_v()};
  TwistSpec t;
  t.side = Side::left;
  t.k_plus = t.k_minus = k;
  OddOperator D = exact_dirac(t, P);
  std::mt19937_64 rng(10);
  AlgebraElement a = random_element(rng, 1), r = random_element(rng, 1);
  AlgebraElement sa = multiply(multiply(k.pow(2.0, P), a, P), k.pow(-2.0, P), P);
  auto w = exact_twisted_commutator(D, Side::right, r, r, P);
  double worst = 0.0, scale = 0.0;
  for (auto& x : monomial_columns(2, {0, 1}, 3)) {
    Section ax = {multiply(a, x[0], P), multiply(a, x[1], P)};
    Section lhs = w(ax), wx = w(x);
    for (int i = 0; i < 2; ++i) {
      AlgebraElement rhs = multiply(sa, wx[i], P);
      worst = std::max(worst, (lhs[i] - rhs).max_abs());
      scale = std::max(scale, lhs[i].max_abs());
    }
  }
  EXPECT_LE(worst, 1e-11 * scale);
}

TEST(Sigma, PairingIdentity) {
  WeylFactor k{0.3 * cos_u() + 0.2 * cos_v()};
  for (Side s : {Side::left, Side::right}) {
    Idempotent r = ribbon(hopf_line(0.6, P, s), k, P);
    SigmaStructure S{k, s};
    EXPECT_LE(sigma_hermitian_defect(r, S, P), 1e-10);
  }
}

TEST(Coupled, GalerkinHermitianAndMinMax) {
  WeylFactor k{0.3 * cos_u() + 0.2 * cos_v()};
  TwistSpec t;
  t.side = Side::right;
  t.k_plus = k;
  auto C = make_coupled(P, t, {hopf_line(0.6, P, Side::right)});
  GalerkinModel G = galerkin_model(C, 3);
  EXPECT_LE(G.raw_hermiticity, 1e-10);
  EXPECT_LE((G.S.data - Eigen::MatrixXcd::Identity(G.S.dim(), G.S.dim())).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE(minmax_check(G.T, G.S, 20), 1e-8);
  auto v = s_spectrum(G.T, G.S).values;
  std::sort(v.begin(), v.end());
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(v[i], -v[v.size() - 1 - i], 1e-10);
}

TEST(Coupled, UnitModuleIsDirac) {
  auto C = make_coupled(P, TwistSpec::none(), {Idempotent::unit(1)});
  // the kernel of D on H+ is the constants; on H- as well
  EXPECT_EQ(coupled_kernel(C, +1, 4).dim, 1);
  EXPECT_EQ(coupled_kernel(C, -1, 4).dim, 1);
  EXPECT_NEAR(lowest_s_eigenvalue(C, 3), 0.0, 1e-12);
}

TEST(Compressed, GrassmannianOfUnitIsDirac) {
  TruncationWindow w{3, 2};
  GradedMatrix D = build_dirac(w, P);
  auto c = coupled_grassmannian(D, Idempotent::unit(1), WeylFactor{}, w, P);
  EXPECT_LE((c.T.data - D.data).cwiseAbs().maxCoeff(), 1e-15);
  auto S = s_map_matrix(Idempotent::unit(1), WeylFactor{}, w, P);
  EXPECT_LE((S.data - Eigen::MatrixXcd::Identity(S.dim(), S.dim())).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Compressed, GrassmannianMatchesExactOnMargin) {
  Idempotent e = Idempotent::diag({1, 0});
  e.at(0, 1) = 0.0 * AlgebraElement::one();
  TruncationWindow w{4, 3};
  GradedMatrix D = build_dirac(w, P);
  auto c = coupled_grassmannian(D, e, WeylFactor{}, w, P);
  EXPECT_TRUE(c.T.is_odd());
  // sigma(e) (D (x) 1) on the second module slot vanishes
  int d = w.dim();
  EXPECT_EQ(c.T.data.block(d, 0, d, 4 * d).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Compressed, TensorNeedsOppositeSides) {
  TruncationWindow w{2, 1};
  GradedMatrix D = build_dirac(w, P);
  auto u = Idempotent::unit(1);
  EXPECT_THROW(tensor_coupled(D, u, u, WeylFactor{}, WeylFactor{}, w, P), ConfigError);
  auto T = tensor_coupled(D, u, Idempotent::unit(1, Side::right), WeylFactor{}, WeylFactor{}, w, P);
  EXPECT_LE((T.data - D.data).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Compressed, ProjectedPerturbationIsSSelfadjoint) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  int n = 6;
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(n, n), H(n, n), A(n, n);
  for (int i = 0; i < n; ++i) S(i, i) = 0.5 + 0.1 * i;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      H(i, j) = cplx(g(rng), g(rng));
      A(i, j) = cplx(g(rng), g(rng));
    }
  H = (H + H.adjoint()).eval();
  std::vector<int> grading(n, 1);
  GradedMatrix base{S.inverse() * H, grading, {}}, Ag{A, grading, {}}, Sg{S, grading, {}};
  EXPECT_THROW(connection_perturbation(base, Ag, Sg, false, true), STNotHermitian);
  auto r = connection_perturbation(base, Ag, Sg, true, true);
  Eigen::MatrixXcd ST = S * r.data;
  EXPECT_LE((ST - ST.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Json, IdempotentRoundTrip) {
  auto h = hopf_line(0.4, P, Side::right);
  AlgebraParams q;
  auto back = idempotent_from_json(nlohmann::json::parse(to_json(h, P).dump()), &q);
  EXPECT_EQ(back.q, 2);
  EXPECT_EQ(back.side, Side::right);
  for (std::size_t i = 0; i < h.entries.size(); ++i) EXPECT_EQ(back.entries[i].raw(), h.entries[i].raw());
}
