#pragma once
// GNS representations, Dirac operators and their truncations.
//
// Two finite models live here. The compressed model P_N T P_N is a dense matrix on the
// window basis. The exact-image model applies an operator to finitely supported vectors
// with no truncation at all; a "margin" is then the radius of the domain monomials.

#include <Eigen/Dense>
#include <random>

#include "fourier_algebra.hpp"

namespace nct {

enum class Side { left, right };

inline const char* side_name(Side s) { return s == Side::left ? "left" : "right"; }

// pi(a) x: left multiplication for A, right multiplication for the opposite algebra
inline AlgebraElement act(Side s, const AlgebraElement& a, const AlgebraElement& x, const AlgebraParams& p) {
  return s == Side::left ? multiply(a, x, p) : multiply(x, a, p);
}

// product of the algebra acting on side s: a*b for A, b*a for A^o
inline AlgebraElement side_mul(Side s, const AlgebraElement& a, const AlgebraElement& b, const AlgebraParams& p) {
  return s == Side::left ? multiply(a, b, p) : multiply(b, a, p);
}

// ---------------------------------------------------------------- compressed model

struct TruncationWindow {
  int N = 12;
  int margin = 12;

  int side_len() const { return 2 * N + 1; }
  int dim() const { return side_len() * side_len(); }
  int index(int m, int n) const { return (m + N) * side_len() + (n + N); }
  bool contains(int m, int n) const { return std::abs(m) <= N && std::abs(n) <= N; }
  bool in_margin(int m, int n) const { return std::abs(m) <= margin && std::abs(n) <= margin; }
  std::pair<int, int> lattice(int i) const { return {i / side_len() - N, i % side_len() - N}; }
  void validate() const {
    if (N < 0 || margin < 0 || margin > N) throw ConfigError("window requires 0 <= margin <= N");
  }
};

struct GradedMatrix {
  Eigen::MatrixXcd data;
  std::vector<int> grading;  // +1 / -1 per basis index
  TruncationWindow window;

  Eigen::Index dim() const { return data.rows(); }
  Eigen::MatrixXcd gamma() const {
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(dim(), dim());
    for (Eigen::Index i = 0; i < dim(); ++i) g(i, i) = double(grading[i]);
    return g;
  }
  bool is_odd(double tol = 1e-14) const { return parity_defect(+1) <= tol * (1.0 + data.cwiseAbs().maxCoeff()); }
  bool is_even(double tol = 1e-14) const { return parity_defect(-1) <= tol * (1.0 + data.cwiseAbs().maxCoeff()); }

  // largest entry that breaks the requested parity
  double parity_defect(int parity) const {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < dim(); ++i)
      for (Eigen::Index j = 0; j < dim(); ++j)
        if (grading[i] * grading[j] == parity) worst = std::max(worst, std::abs(data(i, j)));
    return worst;
  }
};

// columns of basis vectors supported in [-margin, margin]^2, repeated over every block of size dim
inline std::vector<Eigen::Index> margin_indices(const TruncationWindow& w, int blocks = 1) {
  std::vector<Eigen::Index> idx;
  for (int b = 0; b < blocks; ++b)
    for (int i = 0; i < w.dim(); ++i) {
      auto [m, n] = w.lattice(i);
      if (w.in_margin(m, n)) idx.push_back(Eigen::Index(b) * w.dim() + i);
    }
  return idx;
}

inline Eigen::MatrixXcd compressed_action(Side s, const AlgebraElement& a, const TruncationWindow& w,
                                          const AlgebraParams& p) {
  if (a.band() > w.N) throw BandExceedsWindow("band " + std::to_string(a.band()) + " > N=" + std::to_string(w.N));
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(w.dim(), w.dim());
  for (int j = 0; j < w.dim(); ++j) {
    auto [m, n] = w.lattice(j);
    act(s, a, AlgebraElement::monomial(m, n), p).for_each([&](int r, int c, cplx v) {
      if (w.contains(r, c)) M(w.index(r, c), j) = v;
    });
  }
  return M;
}

inline GradedMatrix even_block(Eigen::MatrixXcd M, const TruncationWindow& w) {
  GradedMatrix g;
  g.grading.assign(M.rows(), +1);
  g.data = std::move(M);
  g.window = w;
  return g;
}

inline GradedMatrix left_mult_matrix(const AlgebraElement& a, const TruncationWindow& w, const AlgebraParams& p) {
  return even_block(compressed_action(Side::left, a, w, p), w);
}

inline GradedMatrix right_mult_matrix(const AlgebraElement& a, const TruncationWindow& w, const AlgebraParams& p) {
  return even_block(compressed_action(Side::right, a, w, p), w);
}

// pi(a) on both grades
inline Eigen::MatrixXcd graded_action(Side s, const AlgebraElement& a, const TruncationWindow& w,
                                      const AlgebraParams& p) {
  Eigen::MatrixXcd A = compressed_action(s, a, w, p);
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(2 * w.dim(), 2 * w.dim());
  M.topLeftCorner(w.dim(), w.dim()) = A;
  M.bottomRightCorner(w.dim(), w.dim()) = A;
  return M;
}

// [[0, d*],[d, 0]] with d the multiplier m + conj(tau) n
inline GradedMatrix build_dirac(const TruncationWindow& w, const AlgebraParams& p) {
  int d = w.dim();
  GradedMatrix D;
  D.window = w;
  D.data = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
  D.grading.assign(2 * d, +1);
  for (int i = 0; i < d; ++i) {
    D.grading[d + i] = -1;
    auto [m, n] = w.lattice(i);
    cplx mult = double(m) + std::conj(p.tau) * double(n);
    D.data(d + i, i) = mult;
    D.data(i, d + i) = std::conj(mult);
  }
  return D;
}

// omega^{+-} = pi(k+-) composed with an optional factor acting on the other side
struct TwistSpec {
  WeylFactor k_plus, k_minus;
  Side side = Side::right;
  WeylFactor other_plus, other_minus;

  static TwistSpec none() { return {}; }
  // the automorphism of the algebra on side s is a -> kappa * a * kappa^{-1} in that algebra's product
  WeylFactor kappa(Side s) const {
    const WeylFactor& a = (s == side) ? k_plus : other_plus;
    const WeylFactor& b = (s == side) ? k_minus : other_minus;
    return {a.h + b.h};
  }
  bool trivial() const {
    return k_plus.h.is_zero() && k_minus.h.is_zero() && other_plus.h.is_zero() && other_minus.h.is_zero();
  }
};

inline Side other(Side s) { return s == Side::left ? Side::right : Side::left; }

inline Eigen::MatrixXcd compressed_omega(const TwistSpec& t, int grade, const TruncationWindow& w,
                                         const AlgebraParams& p) {
  const WeylFactor& k = grade > 0 ? t.k_plus : t.k_minus;
  const WeylFactor& o = grade > 0 ? t.other_plus : t.other_minus;
  Eigen::MatrixXcd A = compressed_action(t.side, k.pow(1.0, p), w, p);
  if (!o.h.is_zero()) A = compressed_action(other(t.side), o.pow(1.0, p), w, p) * A;
  return A;
}

// omega D omega, exact on columns supported in the margin N - (band of the factors)
inline GradedMatrix build_pseudo_inner(const GradedMatrix& D, const TwistSpec& t, const TruncationWindow& w,
                                       const AlgebraParams& p) {
  int d = w.dim();
  Eigen::MatrixXcd Om = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
  Om.topLeftCorner(d, d) = compressed_omega(t, +1, w, p);
  Om.bottomRightCorner(d, d) = compressed_omega(t, -1, w, p);
  GradedMatrix r = D;
  r.data = Om * D.data * Om;
  return r;
}

inline GradedMatrix twisted_commutator(const GradedMatrix& D, const AlgebraElement& a, const AlgebraElement& sigma_a,
                                       const TruncationWindow& w, Side side, const AlgebraParams& p) {
  GradedMatrix r = D;
  r.data = D.data * graded_action(side, a, w, p) - graded_action(side, sigma_a, w, p) * D.data;
  return r;
}

// largest singular value of T restricted to margin-supported columns
inline double margin_norm(const GradedMatrix& T) {
  auto cols = margin_indices(T.window, int(T.dim() / T.window.dim()));
  Eigen::MatrixXcd S(T.dim(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) S.col(j) = T.data.col(cols[j]);
  if (S.cols() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXcd>(S).singularValues()(0);
}

// ---------------------------------------------------------------- exact-image model

// vector of H^c as c algebra elements; graded sections put the + components first
using Section = std::vector<AlgebraElement>;
using SectionOp = std::function<Section(const Section&)>;

inline Section section_axpy(const Section& a, cplx s, const Section& b) {
  Section r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = AlgebraElement::axpy(a[i], s, b[i]);
  return r;
}

inline cplx section_inner(const Section& a, const Section& b) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += coeff_inner(a[i], b[i]);
  return s;
}

// unit monomials in [-M,M]^2 placed in each listed component
inline std::vector<Section> monomial_columns(int ncomp, const std::vector<int>& comps, int M) {
  std::vector<Section> cols;
  for (int c : comps)
    if (c < 0 || c >= ncomp) throw ConfigError("component " + std::to_string(c) + " out of range");
  for (int c : comps)
    for (int m = -M; m <= M; ++m)
      for (int n = -M; n <= M; ++n) {
        Section s(ncomp);
        s[c] = AlgebraElement::monomial(m, n);
        cols.push_back(std::move(s));
      }
  return cols;
}

inline std::vector<Section> apply_all(const SectionOp& op, const std::vector<Section>& xs) {
  std::vector<Section> out;
  out.reserve(xs.size());
  for (auto& x : xs) out.push_back(op(x));
  return out;
}

// A^H B for column families
inline Eigen::MatrixXcd gram(const std::vector<Section>& A, const std::vector<Section>& B) {
  Eigen::MatrixXcd G(A.size(), B.size());
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t j = 0; j < B.size(); ++j) G(i, j) = section_inner(A[i], B[j]);
  return G;
}

inline Eigen::MatrixXcd gram(const std::vector<Section>& A) {
  Eigen::MatrixXcd G(A.size(), A.size());
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t j = i; j < A.size(); ++j) {
      cplx v = section_inner(A[i], A[j]);
      G(i, j) = v;
      G(j, i) = std::conj(v);
    }
  return G;
}

inline double largest_eigenvalue(const Eigen::MatrixXcd& H) {
  if (H.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(H.rows() - 1);
}

// exact margin norm: largest singular value of op on monomials of [-M,M]^2 in the given components
inline double exact_margin_norm(const SectionOp& op, int ncomp, const std::vector<int>& comps, int M) {
  auto imgs = apply_all(op, monomial_columns(ncomp, comps, M));
  return std::sqrt(std::max(0.0, largest_eigenvalue(gram(imgs))));
}

// odd operator on graded sections: upper maps the - part to +, lower the + part to -
struct OddOperator {
  std::function<AlgebraElement(const AlgebraElement&)> upper, lower;

  Section operator()(const Section& x) const {
    std::size_t h = x.size() / 2;
    Section r(x.size());
    for (std::size_t i = 0; i < h; ++i) {
      r[i] = upper(x[h + i]);
      r[h + i] = lower(x[i]);
    }
    return r;
  }
};

// the even factor omega on one grade: k on the twist side, the other factor on the opposite side
inline std::function<AlgebraElement(const AlgebraElement&)> omega_action(const TwistSpec& t, int grade,
                                                                          const AlgebraParams& p) {
  const WeylFactor& k = grade > 0 ? t.k_plus : t.k_minus;
  const WeylFactor& o = grade > 0 ? t.other_plus : t.other_minus;
  AlgebraElement kk = k.h.is_zero() ? AlgebraElement() : k.pow(1.0, p);
  AlgebraElement oo = o.h.is_zero() ? AlgebraElement() : o.pow(1.0, p);
  Side s = t.side;
  return [kk, oo, s, p](const AlgebraElement& x) {
    AlgebraElement y = kk.is_zero() ? x : act(s, kk, x, p);
    return oo.is_zero() ? y : act(other(s), oo, y, p);
  };
}

// true when omega acts trivially through side s
inline bool omega_trivial_on(const TwistSpec& t, Side s) {
  if (t.side == s) return t.k_plus.h.is_zero() && t.k_minus.h.is_zero();
  return t.other_plus.h.is_zero() && t.other_minus.h.is_zero();
}

// omega D omega on H (+) H for a twist; vectors carry no module index here
inline OddOperator exact_dirac(const TwistSpec& t, const AlgebraParams& p) {
  auto wp = omega_action(t, +1, p), wm = omega_action(t, -1, p);
  OddOperator D;
  D.lower = [wp, wm, p](const AlgebraElement& x) { return wm(derivation(wp(x), Deriv::delta, p)); };
  D.upper = [wp, wm, p](const AlgebraElement& x) { return wp(derivation(wm(x), Deriv::delta_bar, p)); };
  return D;
}

// x -> D pi(a) x - pi(sigma_a) D x on two-component graded sections
inline SectionOp exact_twisted_commutator(const OddOperator& D, Side s, const AlgebraElement& a,
                                          const AlgebraElement& sigma_a, const AlgebraParams& p) {
  return [D, s, a, sigma_a, p](const Section& x) {
    Section ax(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) ax[i] = act(s, a, x[i], p);
    Section r = D(ax), dx = D(x);
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = AlgebraElement::axpy(r[i], -1.0, act(s, sigma_a, dx[i], p));
    return r;
  };
}

// max over both grades of the exact margin norm of a graded two-component operator
inline double exact_graded_norm(const SectionOp& op, int M) {
  return std::max(exact_margin_norm(op, 2, {0}, M), exact_margin_norm(op, 2, {1}, M));
}

// |[D_k, U]| and |[D_k, U]_sigma| per window for D_k = L_k D L_k, sigma(a) = k^2 a k^-2
struct CommutatorSweep {
  std::vector<int> windows;
  std::vector<double> untwisted, twisted;
};

inline CommutatorSweep commutator_sweep(const WeylFactor& k, const std::vector<int>& windows, const AlgebraParams& p) {
  TwistSpec t;
  t.side = Side::left;
  t.k_plus = t.k_minus = k;
  OddOperator D = exact_dirac(t, p);
  AlgebraElement U = AlgebraElement::monomial(1, 0);
  AlgebraElement sU = multiply(multiply(k.pow(2.0, p), U, p), k.pow(-2.0, p), p);
  auto tw = exact_twisted_commutator(D, Side::left, U, sU, p);
  auto un = exact_twisted_commutator(D, Side::left, U, U, p);
  CommutatorSweep r;
  for (int M : windows) {
    r.windows.push_back(M);
    r.untwisted.push_back(exact_graded_norm(un, M));
    r.twisted.push_back(exact_graded_norm(tw, M));
  }
  return r;
}

// ---------------------------------------------------------------- GNS checks

// random element with coefficients on [-M,M]^2, unit l2 norm
inline AlgebraElement random_element(std::mt19937_64& rng, int M) {
  std::normal_distribution<double> g;
  std::vector<std::tuple<int, int, cplx>> t;
  for (int m = -M; m <= M; ++m)
    for (int n = -M; n <= M; ++n) t.emplace_back(m, n, cplx(g(rng), g(rng)));
  AlgebraElement a = AlgebraElement::from_terms(t);
  return (1.0 / std::sqrt(std::real(coeff_inner(a, a)))) * a;
}

// max |<R_k a, R_k b>_phi - <a,b>| over seeded margin pairs, <a,b>_phi = phi0(b* a k^{-2});
// probe swaps k^{-2} for k^{-1}
inline double verify_gns_unitarity(const WeylFactor& k, const TruncationWindow& w, const AlgebraParams& p,
                                   std::uint64_t seed = 7, int pairs = 16, bool probe = false) {
  AlgebraElement kk = k.pow(1.0, p);
  AlgebraElement kw = k.pow(probe ? -1.0 : -2.0, p);
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int i = 0; i < pairs; ++i) {
    AlgebraElement a = random_element(rng, w.margin), b = random_element(rng, w.margin);
    AlgebraElement ak = multiply(a, kk, p), bk = multiply(b, kk, p);
    cplx lhs = trace_phi0(multiply(multiply(star(bk, p), ak, p), kw, p));
    cplx rhs = trace_phi0(multiply(star(b, p), a, p));
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

// conjugate gradients for x -> x k^{-2}, the Riesz map of the phi inner product
inline AlgebraElement solve_phi_gram(const AlgebraElement& b, const AlgebraElement& kinv2, const AlgebraParams& p,
                                     double tol = 1e-15, int max_iter = 500) {
  AlgebraElement x, r = b, d = b;
  double rr = std::real(coeff_inner(r, r)), bb = rr;
  for (int it = 0; it < max_iter && rr > tol * tol * bb; ++it) {
    AlgebraElement Ad = multiply(d, kinv2, p);
    double alpha = rr / std::real(coeff_inner(d, Ad));
    x = AlgebraElement::axpy(x, alpha, d);
    r = AlgebraElement::axpy(r, -alpha, Ad);
    double rr2 = std::real(coeff_inner(r, r));
    d = AlgebraElement::axpy(r, rr2 / rr, d);
    rr = rr2;
  }
  return x;
}

// || W^{-1} D_phi W - omega D omega || on margin columns, W = diag(R_k, 1).
// D_phi is assembled from the phi inner product: its odd part is delta, its adjoint is
// G^{-1} delta^dagger with G the phi Gram operator; nothing is truncated.
inline double intertwiner_deviation(const WeylFactor& k, int M, const AlgebraParams& p) {
  AlgebraElement kk = k.pow(1.0, p), kinv = k.pow(-1.0, p), kinv2 = k.pow(-2.0, p);
  TwistSpec t;
  t.side = Side::right;
  t.k_plus = k;
  OddOperator Dw = exact_dirac(t, p);
  std::vector<Section> diff;
  for (int grade : {+1, -1})
    for (int m = -M; m <= M; ++m)
      for (int n = -M; n <= M; ++n) {
        Section x(2);
        x[grade > 0 ? 0 : 1] = AlgebraElement::monomial(m, n);
        Section ref = Dw(x);
        Section got(2);
        if (grade > 0) {
          got[1] = derivation(multiply(x[0], kk, p), Deriv::delta, p);
        } else {
          AlgebraElement y = solve_phi_gram(derivation(x[1], Deriv::delta_bar, p), kinv2, p);
          got[0] = multiply(y, kinv, p);
        }
        diff.push_back(section_axpy(got, -1.0, ref));
      }
  return std::sqrt(std::max(0.0, largest_eigenvalue(gram(diff))));
}

}  // namespace nct
