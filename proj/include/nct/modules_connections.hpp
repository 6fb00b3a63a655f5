#pragma once
// Projective modules e A^q, sigma-translations, sigma-Hermitian structures and coupled operators.
//
// A module over the opposite algebra is handled with side = right: its entries multiply with
// a*b := b a and act on H by right multiplication, which is a representation for that product.

#include <random>

#include "spectral_kernel.hpp"

namespace nct {

struct Idempotent {
  int q = 1;
  std::vector<AlgebraElement> entries;  // row-major q x q
  Side side = Side::left;
  bool selfadjoint = true;
  bool sigma_selfadjoint = false;
  std::string label;

  const AlgebraElement& at(int i, int j) const { return entries[std::size_t(i) * q + j]; }
  AlgebraElement& at(int i, int j) { return entries[std::size_t(i) * q + j]; }

  static Idempotent unit(int q = 1, Side s = Side::left) {
    Idempotent e;
    e.q = q;
    e.side = s;
    e.entries.resize(std::size_t(q) * q);
    for (int i = 0; i < q; ++i) e.at(i, i) = AlgebraElement::one();
    e.label = q == 1 ? "unit" : "free" + std::to_string(q);
    return e;
  }
  static Idempotent diag(const std::vector<int>& d, Side s = Side::left) {
    Idempotent e = unit(int(d.size()), s);
    for (int i = 0; i < e.q; ++i)
      if (!d[i]) e.at(i, i) = AlgebraElement();
    e.label = "diag";
    return e;
  }
};

using ElemMatrix = Idempotent;

inline Idempotent mat_mul(const Idempotent& a, const Idempotent& b, const AlgebraParams& p) {
  Idempotent r = a;
  for (int i = 0; i < a.q; ++i)
    for (int j = 0; j < a.q; ++j) {
      AlgebraElement s;
      for (int k = 0; k < a.q; ++k) s = s + side_mul(a.side, a.at(i, k), b.at(k, j), p);
      r.at(i, j) = s;
    }
  return r;
}

inline Idempotent mat_lin(const Idempotent& a, cplx s, const Idempotent& b) {
  Idempotent r = a;
  for (std::size_t i = 0; i < a.entries.size(); ++i) r.entries[i] = AlgebraElement::axpy(a.entries[i], s, b.entries[i]);
  return r;
}

inline Idempotent mat_star(const Idempotent& a, const AlgebraParams& p) {
  Idempotent r = a;
  for (int i = 0; i < a.q; ++i)
    for (int j = 0; j < a.q; ++j) r.at(i, j) = star(a.at(j, i), p);
  return r;
}

inline Idempotent mat_map(const Idempotent& a, const std::function<AlgebraElement(const AlgebraElement&)>& f) {
  Idempotent r = a;
  for (auto& x : r.entries) x = f(x);
  return r;
}

inline double mat_coeff_norm(const Idempotent& a) {
  double s = 0;
  for (auto& x : a.entries) s += x.l1();
  return s;
}

inline cplx mat_trace(const Idempotent& a) {
  cplx s = 0;
  for (int i = 0; i < a.q; ++i) s += trace_phi0(a.at(i, i));
  return s;
}

inline double idempotent_defect(const Idempotent& e, const AlgebraParams& p) {
  return mat_coeff_norm(mat_lin(mat_mul(e, e, p), -1.0, e));
}

inline double selfadjoint_defect(const Idempotent& e, const AlgebraParams& p) {
  return mat_coeff_norm(mat_lin(mat_star(e, p), -1.0, e));
}

// ---------------------------------------------------------------- construction and polish

struct PolishOptions {
  int cap_m = 48, cap_n = 48;
  double tol = 1e-10;
  int max_iter = 40;
  bool symmetrize = true;
};

struct PolishLog {
  std::vector<double> defects;
};

// e <- 3e^2 - 2e^3 with truncation to the caps
inline Idempotent polish(Idempotent e, const AlgebraParams& p, const PolishOptions& o = {}, PolishLog* log = nullptr) {
  auto trunc = [&](const AlgebraElement& x) { return x.truncate(o.cap_m, o.cap_n); };
  double d = idempotent_defect(e, p);
  if (log) log->defects.push_back(d);
  if (!(d < 0.25 * std::max(1.0, mat_coeff_norm(e)))) throw PolishDiverged("initial defect " + std::to_string(d));
  for (int it = 0; it < o.max_iter && d > o.tol; ++it) {
    Idempotent e2 = mat_mul(e, e, p);
    Idempotent e3 = mat_mul(e2, e, p);
    e = mat_map(mat_lin(mat_lin(e2, 2.0, e2), -2.0, e3), trunc);
    if (o.symmetrize && e.selfadjoint) e = mat_map(mat_lin(e, 1.0, mat_star(e, p)), [](const AlgebraElement& x) {
      return 0.5 * x;
    });
    double nd = idempotent_defect(e, p);
    if (log) log->defects.push_back(nd);
    if (!(nd < 1.0)) throw PolishDiverged("defect grew to " + std::to_string(nd));
    d = nd;
  }
  if (d > o.tol) throw PolishDiverged("defect " + std::to_string(d) + " above tolerance; raise the caps");
  return e;
}

inline double smooth_step(double s) {
  if (s <= 0) return 0.0;
  if (s >= 1) return 1.0;
  double a = std::exp(-1.0 / s), b = std::exp(-1.0 / (1.0 - s));
  return a / (a + b);
}

// Fourier coefficients |m| <= band of a 1-periodic function
inline std::vector<cplx> fourier_coefficients(const std::function<double(double)>& f, int band, int samples = 4096) {
  std::vector<double> v(samples);
  for (int j = 0; j < samples; ++j) v[j] = f(double(j) / samples);
  std::vector<cplx> c(2 * band + 1);
  for (int m = -band; m <= band; ++m) {
    cplx s = 0;
    for (int j = 0; j < samples; ++j) s += v[j] * phase(-double(m) * j / samples);
    c[m + band] = s / double(samples);
  }
  return c;
}

inline AlgebraElement function_of_u(const std::vector<cplx>& c) {
  int band = int(c.size() / 2);
  std::vector<std::tuple<int, int, cplx>> t;
  for (int m = -band; m <= band; ++m) t.emplace_back(m, 0, c[m + band]);
  return AlgebraElement::from_terms(t);
}

// p = V* g(U) + f(U) + g(U) V with the bump pair supported on [0, theta + eps]
inline Idempotent powers_rieffel(double theta, int band = 16, PolishOptions o = {}, double eps = -1.0,
                                 PolishLog* log = nullptr) {
  if (!(theta > 0 && theta < 1)) throw ConfigError("powers_rieffel needs 0 < theta < 1");
  if (eps <= 0) eps = std::min(theta, 1.0 - theta);
  AlgebraParams p{theta, {0.0, 1.0}};
  auto f = [=](double x) {
    x -= std::floor(x);
    if (x < eps) return std::pow(std::sin(0.5 * std::numbers::pi * smooth_step(x / eps)), 2);
    if (x < theta) return 1.0;
    if (x < theta + eps) return 1.0 - std::pow(std::sin(0.5 * std::numbers::pi * smooth_step((x - theta) / eps)), 2);
    return 0.0;
  };
  auto g = [=](double x) {
    x -= std::floor(x);
    if (x < eps) return 0.5 * std::sin(std::numbers::pi * smooth_step(x / eps));
    return 0.0;
  };
  AlgebraElement fe = function_of_u(fourier_coefficients(f, band));
  AlgebraElement ge = function_of_u(fourier_coefficients(g, band));
  AlgebraElement V = AlgebraElement::monomial(0, 1), Vs = AlgebraElement::monomial(0, -1);
  Idempotent e;
  e.q = 1;
  e.side = Side::left;
  e.entries = {multiply(Vs, ge, p) + fe + multiply(ge, V, p)};
  e.label = "powers_rieffel";
  o.cap_m = std::max(o.cap_m, band);
  return polish(e, p, o, log);
}

// 2x2 spectral projection of a gapped two-band symbol on the commutative torus (theta = 0)
inline Idempotent bott_projection(int band = 8, PolishOptions o = {}, int grid = 128, PolishLog* log = nullptr) {
  AlgebraParams p{0.0, {0.0, 1.0}};
  std::vector<std::array<cplx, 4>> P(std::size_t(grid) * grid);
  for (int a = 0; a < grid; ++a)
    for (int b = 0; b < grid; ++b) {
      double x = kTwoPi * a / grid, y = kTwoPi * b / grid;
      double dx = std::sin(x), dy = std::sin(y), dz = 1.0 - std::cos(x) - std::cos(y);
      double r = std::sqrt(dx * dx + dy * dy + dz * dz);
      P[std::size_t(a) * grid + b] = {0.5 * (1.0 - dz / r), -0.5 * cplx(dx, -dy) / r, -0.5 * cplx(dx, dy) / r,
                                      0.5 * (1.0 + dz / r)};
    }
  Idempotent e;
  e.q = 2;
  e.side = Side::left;
  e.label = "bott";
  e.entries.resize(4);
  for (int k = 0; k < 4; ++k) {
    std::vector<std::tuple<int, int, cplx>> t;
    for (int m = -band; m <= band; ++m)
      for (int n = -band; n <= band; ++n) {
        cplx s = 0;
        for (int a = 0; a < grid; ++a)
          for (int b = 0; b < grid; ++b)
            s += P[std::size_t(a) * grid + b][k] * phase(-(double(m) * a + double(n) * b) / grid);
        t.emplace_back(m, n, s / double(grid * grid));
      }
    e.entries[k] = AlgebraElement::from_terms(t);
  }
  o.cap_m = std::max(o.cap_m, band);
  o.cap_n = std::max(o.cap_n, band);
  return polish(e, p, o, log);
}

// rank-one projection v v* with v = (cos a(U), V sin a(U)), a = amp (U + U*)/2; class of the unit
inline Idempotent hopf_line(double amp, const AlgebraParams& p, Side side) {
  AlgebraElement a = amp * cos_u();
  AlgebraElement ep = exp_series(a, cplx(0, 1), p), em = exp_series(a, cplx(0, -1), p);
  AlgebraElement c = 0.5 * (ep + em), s = cplx(0, -0.5) * (ep - em);
  std::vector<AlgebraElement> v = {c, side_mul(side, AlgebraElement::monomial(0, 1), s, p)};
  Idempotent e;
  e.q = 2;
  e.side = side;
  e.label = "hopf_line";
  e.entries.resize(4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) e.at(i, j) = side_mul(side, v[i], star(v[j], p), p);
  return e;
}

inline Idempotent with_side(Idempotent e, Side s) {
  e.side = s;
  return e;
}

// 2 pi i * phi0 trace of e[d1 e, d2 e] with integer-multiplier derivations
inline double chern_number(const Idempotent& e, const AlgebraParams& p, double tol = 1e-6) {
  Idempotent d1 = mat_map(e, [&](const AlgebraElement& x) { return derivation(x, Deriv::delta1, p); });
  Idempotent d2 = mat_map(e, [&](const AlgebraElement& x) { return derivation(x, Deriv::delta2, p); });
  Idempotent comm = mat_lin(mat_mul(d1, d2, p), -1.0, mat_mul(d2, d1, p));
  cplx c = cplx(0, kTwoPi) * mat_trace(mat_mul(e, comm, p));
  if (std::abs(c.imag()) > tol || std::abs(c.real() - std::round(c.real())) > tol)
    throw NonIntegral("chern value " + std::to_string(c.real()) + " " + std::to_string(c.imag()));
  return c.real();
}

// ---------------------------------------------------------------- sigma structures

// a -> kappa^s * a * kappa^{-s} in the product of the side of e
inline Idempotent conjugate(const Idempotent& e, const WeylFactor& kappa, double s, const AlgebraParams& p) {
  if (kappa.h.is_zero()) return e;
  AlgebraElement l = kappa.pow(s, p), r = kappa.pow(-s, p);
  return mat_map(e, [&](const AlgebraElement& x) { return side_mul(e.side, side_mul(e.side, l, x, p), r, p); });
}

inline Idempotent sigma_translate(const Idempotent& e, const WeylFactor& kappa, const AlgebraParams& p) {
  Idempotent r = conjugate(e, kappa, 1.0, p);
  r.sigma_selfadjoint = false;
  return r;
}

// kappa^{-1/2} e kappa^{1/2}; sigma(result)* = result when e is selfadjoint
inline Idempotent ribbon(const Idempotent& e, const WeylFactor& kappa, const AlgebraParams& p) {
  Idempotent r = conjugate(e, kappa, -0.5, p);
  r.selfadjoint = kappa.h.is_zero() && e.selfadjoint;
  r.sigma_selfadjoint = e.selfadjoint;
  return r;
}

inline double sigma_selfadjoint_defect(const Idempotent& e, const WeylFactor& kappa, const AlgebraParams& p) {
  return mat_coeff_norm(mat_lin(mat_star(sigma_translate(e, kappa, p), p), -1.0, e));
}

// Metric (xi, eta) = sum xi_i* kappa eta_i on e B^q, s = left multiplication by kappa^{-1}.
struct SigmaStructure {
  WeylFactor kappa;
  Side side = Side::left;

  using Vec = std::vector<AlgebraElement>;

  AlgebraElement pairing(const Vec& a, const Vec& b, const AlgebraParams& p) const {
    AlgebraElement k = kappa.pow(1.0, p), s;
    for (std::size_t i = 0; i < a.size(); ++i) s = s + side_mul(side, side_mul(side, star(a[i], p), k, p), b[i], p);
    return s;
  }
  AlgebraElement sigma(const AlgebraElement& x, const AlgebraParams& p) const {
    return side_mul(side, side_mul(side, kappa.pow(1.0, p), x, p), kappa.pow(-1.0, p), p);
  }
  Vec sigma(const Vec& x, const AlgebraParams& p) const {
    Vec r;
    for (auto& a : x) r.push_back(sigma(a, p));
    return r;
  }
  Vec s_map(const Vec& x, const AlgebraParams& p) const {
    Vec r;
    AlgebraElement ki = kappa.pow(-1.0, p);
    for (auto& a : x) r.push_back(side_mul(side, ki, a, p));
    return r;
  }
};

// (xi1, s sigma(xi2)) - sigma[(s sigma(xi1), xi2)] on seeded elements of e B^q
inline double sigma_hermitian_defect(const Idempotent& e, const SigmaStructure& S, const AlgebraParams& p,
                                     std::uint64_t seed = 3, int trials = 4) {
  std::mt19937_64 rng(seed);
  auto elem = [&]() {
    SigmaStructure::Vec r(e.q), x(e.q);
    for (auto& a : r) a = random_element(rng, 2);
    for (int i = 0; i < e.q; ++i)
      for (int j = 0; j < e.q; ++j) x[i] = x[i] + side_mul(e.side, e.at(i, j), r[j], p);
    return x;
  };
  double worst = 0;
  for (int t = 0; t < trials; ++t) {
    auto x1 = elem(), x2 = elem();
    AlgebraElement lhs = S.pairing(x1, S.s_map(S.sigma(x2, p), p), p);
    AlgebraElement rhs = S.sigma(S.pairing(S.s_map(S.sigma(x1, p), p), x2, p), p);
    worst = std::max(worst, (lhs - rhs).l1());
  }
  return worst;
}

// ---------------------------------------------------------------- coupled operators, exact model

// pi(a) on every component of a section
inline Section act_all(Side s, const AlgebraElement& a, const Section& x, const AlgebraParams& p) {
  Section r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = act(s, a, x[i], p);
  return r;
}

// Module factors at most one per side; a section has 2Q components, grade-major, then the
// factor indices in order.
struct CoupledOperator {
  AlgebraParams p;
  TwistSpec twist;
  std::vector<Idempotent> g;        // representatives used (ribboned when requested)
  std::vector<Idempotent> sigma_g;  // sigma applied per factor side
  std::vector<WeylFactor> kappa;
  std::vector<AlgebraElement> kappa_pos, kappa_neg;  // kappa^{+1}, kappa^{-1}
  OddOperator D;
  int Q() const {
    int q = 1;
    for (auto& f : g) q *= f.q;
    return q;
  }
  int ncomp() const { return 2 * Q(); }

  Section apply_factor(std::size_t slot, const Idempotent& e, const Section& x) const {
    int stride = 1;
    for (std::size_t s = slot + 1; s < g.size(); ++s) stride *= g[s].q;
    int Qt = Q();
    Section r(x.size());
    for (int grade = 0; grade < 2; ++grade)
      for (int c = 0; c < Qt; ++c) {
        int i = (c / stride) % e.q;
        int base = c - i * stride;
        AlgebraElement acc;
        for (int j = 0; j < e.q; ++j) {
          const AlgebraElement& xj = x[grade * Qt + base + j * stride];
          if (xj.is_zero() || e.at(i, j).is_zero()) continue;
          acc = acc + act(e.side, e.at(i, j), xj, p);
        }
        r[grade * Qt + c] = acc;
      }
    return r;
  }

  Section apply_g(const Section& x) const {
    Section y = x;
    for (std::size_t s = 0; s < g.size(); ++s) y = apply_factor(s, g[s], y);
    return y;
  }
  Section apply_sigma_g(const Section& x) const {
    Section y = x;
    for (std::size_t s = 0; s < g.size(); ++s) y = apply_factor(s, sigma_g[s], y);
    return y;
  }
  Section apply_D(const Section& x) const {
    int Qt = Q();
    Section r(x.size());
    for (int c = 0; c < Qt; ++c) {
      r[c] = D.upper(x[Qt + c]);
      r[Qt + c] = D.lower(x[c]);
    }
    return r;
  }
  // D_{g,sigma} = pi(sigma(g)) D_omega
  Section apply_T(const Section& x) const { return apply_sigma_g(apply_D(x)); }
  // metric of H(E): pi(kappa) of every factor
  Section apply_metric(const Section& x) const {
    Section y = x;
    for (std::size_t s = 0; s < g.size(); ++s)
      if (!kappa_pos[s].is_zero()) y = act_all(g[s].side, kappa_pos[s], y, p);
    return y;
  }
  Section apply_s(const Section& x) const {
    Section y = x;
    for (std::size_t s = 0; s < g.size(); ++s)
      if (!kappa_neg[s].is_zero()) y = act_all(g[s].side, kappa_neg[s], y, p);
    return y;
  }
};

inline CoupledOperator make_coupled(const AlgebraParams& p, const TwistSpec& twist, const std::vector<Idempotent>& factors,
                                    bool use_ribbon = true) {
  CoupledOperator C;
  C.p = p;
  C.twist = twist;
  C.D = exact_dirac(twist, p);
  for (auto& e : factors) {
    WeylFactor k = twist.kappa(e.side);
    Idempotent rep = use_ribbon ? ribbon(e, k, p) : e;
    C.g.push_back(rep);
    C.sigma_g.push_back(sigma_translate(rep, k, p));
    C.kappa.push_back(k);
    C.kappa_pos.push_back(k.h.is_zero() ? AlgebraElement() : k.pow(1.0, p));
    C.kappa_neg.push_back(k.h.is_zero() ? AlgebraElement() : k.pow(-1.0, p));
  }
  return C;
}

inline std::vector<int> grade_components(const CoupledOperator& C, int grade) {
  std::vector<int> c;
  for (int i = 0; i < C.Q(); ++i) c.push_back((grade > 0 ? 0 : C.Q()) + i);
  return c;
}

// kernel of D^{+-}_{g,sigma} on g H^{+-}: singular values of [T ; 1 - pi(g)] on margin monomials
inline KernelEstimate coupled_kernel(const CoupledOperator& C, int grade, int M, double cutoff = kKernelCutoff) {
  auto cols = monomial_columns(C.ncomp(), grade_components(C, grade), M);
  std::vector<Section> stacked;
  stacked.reserve(cols.size());
  for (auto& x : cols) {
    Section gx = C.apply_g(x);
    Section tx = C.apply_T(x);
    Section rest = section_axpy(x, -1.0, gx);
    Section s(tx);
    s.insert(s.end(), rest.begin(), rest.end());
    stacked.push_back(std::move(s));
  }
  return kernel_from_singular_values(singular_values_from_gram(gram(stacked)), cutoff);
}

// domain family pi(g) x over margin monomials of one grade
inline std::vector<Section> module_domain(const CoupledOperator& C, int grade, int M) {
  return apply_all([&](const Section& x) { return C.apply_g(x); },
                   monomial_columns(C.ncomp(), grade_components(C, grade), M));
}

// smallest |s-eigenvalue| upper bound from the subspace of margin M: min over both grades of
// the generalized singular value of T in the metrics of H(E) and H(E^sigma)
inline double lowest_s_eigenvalue(const CoupledOperator& C, int M, double rel_cut = 1e-8) {
  double best = std::numeric_limits<double>::infinity();
  for (int grade : {+1, -1}) {
    auto Y = module_domain(C, grade, M);
    auto GY = apply_all([&](const Section& x) { return C.apply_metric(x); }, Y);
    auto TY = apply_all([&](const Section& x) { return C.apply_T(x); }, Y);
    // H(E^sigma) metric is pi(kappa^{-1})
    auto STY = apply_all([&](const Section& x) { return C.apply_s(x); }, TY);
    Eigen::MatrixXcd ZZ = gram(TY, STY);
    ZZ = 0.5 * (ZZ + ZZ.adjoint()).eval();
    Eigen::MatrixXcd W = gram(Y, GY);
    W = 0.5 * (W + W.adjoint()).eval();
    auto sv = generalized_singular_values(ZZ, W, rel_cut);
    if (!sv.empty()) best = std::min(best, sv.front());
  }
  return best;
}

// Galerkin model on span pi(g)(margin monomials): Phi is G-orthonormal, Psi = pi(kappa) Phi.
struct GalerkinModel {
  GradedMatrix T;         // <Psi_i, T Phi_j> in the H(E^sigma) metric
  GradedMatrix S;         // <Phi_i, s Psi_j> in the H(E) metric
  double raw_hermiticity = 0.0;  // relative defect of Y^H G S T Y before orthonormalization
};

inline GalerkinModel galerkin_model(const CoupledOperator& C, int M, double rel_cut = 1e-3) {
  GalerkinModel out;
  std::vector<Eigen::MatrixXcd> coords;
  std::vector<std::vector<Section>> Ys, GYs, TYs;
  for (int grade : {+1, -1}) {
    auto Y = module_domain(C, grade, M);
    auto GY = apply_all([&](const Section& x) { return C.apply_metric(x); }, Y);
    Eigen::MatrixXcd W = gram(Y, GY);
    W = 0.5 * (W + W.adjoint()).eval();
    coords.push_back(orthonormal_coordinates(W, rel_cut));
    Ys.push_back(std::move(Y));
    GYs.push_back(std::move(GY));
  }
  for (int b = 0; b < 2; ++b) TYs.push_back(apply_all([&](const Section& x) { return C.apply_T(x); }, Ys[b]));
  Eigen::Index np = coords[0].cols(), nm = coords[1].cols(), n = np + nm;
  out.T.data = Eigen::MatrixXcd::Zero(n, n);
  out.S.data = Eigen::MatrixXcd::Zero(n, n);
  out.T.grading.assign(n, +1);
  for (Eigen::Index i = np; i < n; ++i) out.T.grading[i] = -1;
  out.S.grading = out.T.grading;
  double defect = 0, scale = 0;
  for (int rb = 0; rb < 2; ++rb)
    for (int cb = 0; cb < 2; ++cb) {
      Eigen::Index r0 = rb ? np : 0, c0 = cb ? np : 0;
      // <Psi, T Phi>_{kappa^{-1}} = Phi^H pi(kappa) pi(kappa^{-1}) T Phi = Y^H T Y in plain coordinates
      Eigen::MatrixXcd K = gram(Ys[rb], TYs[cb]);
      Eigen::MatrixXcd Kt = gram(Ys[cb], TYs[rb]);
      defect = std::max(defect, (K - Kt.adjoint()).cwiseAbs().maxCoeff());
      scale = std::max(scale, K.cwiseAbs().maxCoeff());
      out.T.data.block(r0, c0, coords[rb].cols(), coords[cb].cols()) = coords[rb].adjoint() * K * coords[cb];
      if (rb == cb) {
        // s Psi_j = pi(kappa^{-1}) pi(kappa) Phi_j, measured in the H(E) metric
        auto SPsi = apply_all([&](const Section& x) { return C.apply_s(x); }, GYs[cb]);
        auto GSPsi = apply_all([&](const Section& x) { return C.apply_metric(x); }, SPsi);
        Eigen::MatrixXcd Sm = gram(Ys[rb], GSPsi);
        out.S.data.block(r0, c0, coords[rb].cols(), coords[cb].cols()) = coords[rb].adjoint() * Sm * coords[cb];
      }
    }
  out.raw_hermiticity = defect / std::max(scale, 1e-300);
  return out;
}

// ---------------------------------------------------------------- compressed model versions

inline Eigen::MatrixXcd compressed_module_matrix(const Idempotent& e, const TruncationWindow& w, const AlgebraParams& p) {
  int d = w.dim(), q = e.q;
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(2 * q * d, 2 * q * d);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) {
      if (e.at(i, j).is_zero()) continue;
      Eigen::MatrixXcd A = compressed_action(e.side, e.at(i, j), w, p);
      for (int g = 0; g < 2; ++g) M.block((g * q + i) * d, (g * q + j) * d, d, d) = A;
    }
  return M;
}

// D (x) 1_q with the grade-major layout
inline Eigen::MatrixXcd amplify_dirac(const GradedMatrix& D, int q) {
  int d = int(D.dim() / 2);
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(2 * q * d, 2 * q * d);
  for (int i = 0; i < q; ++i) {
    M.block(i * d, (q + i) * d, d, d) = D.data.block(0, d, d, d);
    M.block((q + i) * d, i * d, d, d) = D.data.block(d, 0, d, d);
  }
  return M;
}

inline std::vector<int> amplified_grading(int q, int d) {
  std::vector<int> g(std::size_t(2 * q * d), +1);
  for (std::size_t i = std::size_t(q * d); i < g.size(); ++i) g[i] = -1;
  return g;
}

struct CoupledMatrices {
  GradedMatrix T;       // sigma(e) (D (x) 1_q)
  GradedMatrix domain;  // pi(e)
  GradedMatrix range;   // pi(sigma(e))
};

inline CoupledMatrices coupled_grassmannian(const GradedMatrix& D, const Idempotent& e, const WeylFactor& kappa,
                                            const TruncationWindow& w, const AlgebraParams& p) {
  Idempotent se = sigma_translate(e, kappa, p);
  CoupledMatrices r;
  auto grading = amplified_grading(e.q, w.dim());
  r.domain = {compressed_module_matrix(e, w, p), grading, w};
  r.range = {compressed_module_matrix(se, w, p), grading, w};
  r.T = {r.range.data * amplify_dirac(D, e.q), grading, w};
  return r;
}

// left multiplication by kappa^{-1} (in the module algebra) on every component
inline GradedMatrix s_map_matrix(const Idempotent& e, const WeylFactor& kappa, const TruncationWindow& w,
                                 const AlgebraParams& p) {
  Idempotent s = Idempotent::unit(e.q, e.side);
  for (int i = 0; i < e.q; ++i) s.at(i, i) = kappa.pow(-1.0, p);
  auto grading = amplified_grading(e.q, w.dim());
  Eigen::MatrixXcd S = compressed_module_matrix(s, w, p);
  Eigen::MatrixXcd E = compressed_module_matrix(e, w, p);
  return {E * S, grading, w};
}

// sigma(e (x) f)(D (x) 1) with e and f acting on opposite sides; layout index = i_e * q_f + i_f
inline GradedMatrix tensor_coupled(const GradedMatrix& D, const Idempotent& e, const Idempotent& f,
                                   const WeylFactor& kappa_e, const WeylFactor& kappa_f, const TruncationWindow& w,
                                   const AlgebraParams& p) {
  if (e.side == f.side) throw ConfigError("tensor_coupled needs commuting sides");
  Idempotent se = sigma_translate(e, kappa_e, p), sf = sigma_translate(f, kappa_f, p);
  int d = w.dim(), q = e.q * f.q;
  Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(2 * q * d, 2 * q * d);
  for (int i = 0; i < e.q; ++i)
    for (int j = 0; j < e.q; ++j)
      for (int a = 0; a < f.q; ++a)
        for (int b = 0; b < f.q; ++b) {
          if (se.at(i, j).is_zero() || sf.at(a, b).is_zero()) continue;
          Eigen::MatrixXcd B = compressed_action(se.side, se.at(i, j), w, p) * compressed_action(sf.side, sf.at(a, b), w, p);
          for (int g = 0; g < 2; ++g)
            G.block((g * q + i * f.q + a) * d, (g * q + j * f.q + b) * d, d, d) = B;
        }
  return {G * amplify_dirac(D, q), amplified_grading(q, d), w};
}

// base + A; with project, A is replaced by its s-selfadjoint part S^{-1} (SA + (SA)^H)/2
inline GradedMatrix connection_perturbation(const GradedMatrix& base, const GradedMatrix& A, const GradedMatrix& S,
                                            bool project, bool assert_hermitian) {
  GradedMatrix r = base;
  Eigen::MatrixXcd Ause = A.data;
  if (project) {
    Eigen::MatrixXcd SA = S.data * A.data;
    Ause = S.data.partialPivLu().solve(0.5 * (SA + SA.adjoint()));
  }
  r.data = base.data + Ause;
  if (assert_hermitian) {
    Eigen::MatrixXcd ST = S.data * r.data;
    double scale = std::max(1.0, ST.cwiseAbs().maxCoeff());
    if (hermiticity_defect(ST) > 1e-10 * scale) throw STNotHermitian("perturbed connection is not s-selfadjoint");
  }
  return r;
}

// ---------------------------------------------------------------- serialization

inline nlohmann::json to_json(const Idempotent& e, const AlgebraParams& p) {
  nlohmann::json a = nlohmann::json::array();
  for (auto& x : e.entries) a.push_back(to_json(x, p));
  return {{"q", e.q}, {"side", side_name(e.side)}, {"label", e.label}, {"entries", a}};
}

inline Idempotent idempotent_from_json(const nlohmann::json& j, AlgebraParams* p = nullptr) {
  Idempotent e;
  e.q = j.at("q").get<int>();
  e.side = j.at("side").get<std::string>() == "right" ? Side::right : Side::left;
  e.label = j.value("label", "");
  for (auto& x : j.at("entries")) e.entries.push_back(element_from_json(x, p));
  return e;
}

}  // namespace nct
