#pragma once
// Smooth noncommutative torus, finite Fourier support.
// Elements are sum a_{mn} U^m V^n, U-powers to the left, VU = e^{2 pi i theta} UV.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace nct {

using cplx = std::complex<double>;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kDropTol = 1e-15;

struct AlgebraParams {
  double theta = 0.37;
  cplx tau{0.0, 1.0};

  void validate() const {
    if (!(tau.imag() > 0.0)) throw ConfigError("tau must have positive imaginary part");
    if (!std::isfinite(theta)) throw ConfigError("theta must be finite");
  }
};

// e^{2 pi i x}, reduced mod 1 first so large arguments keep their accuracy
inline cplx phase(double x) {
  double r = x - std::nearbyint(x);
  return {std::cos(kTwoPi * r), std::sin(kTwoPi * r)};
}

// Dense storage on the bounding box [m0,m1] x [n0,n1], m-major.
class AlgebraElement {
 public:
  AlgebraElement() = default;

  static AlgebraElement scalar(cplx c) { return monomial(0, 0, c); }
  static AlgebraElement one() { return scalar(1.0); }
  static AlgebraElement monomial(int m, int n, cplx c = 1.0) {
    AlgebraElement a;
    if (std::abs(c) < kDropTol) return a;
    a.m0_ = a.m1_ = m;
    a.n0_ = a.n1_ = n;
    a.c_.assign(1, c);
    return a;
  }

  // takes ownership of a box buffer, prunes entries below drop and shrinks the box
  static AlgebraElement from_box(int m0, int m1, int n0, int n1, std::vector<cplx> data,
                                 double drop = kDropTol) {
    AlgebraElement a;
    a.m0_ = m0;
    a.m1_ = m1;
    a.n0_ = n0;
    a.n1_ = n1;
    a.c_ = std::move(data);
    a.prune(drop);
    return a;
  }

  static AlgebraElement from_terms(const std::vector<std::tuple<int, int, cplx>>& terms) {
    if (terms.empty()) return {};
    int m0 = INT32_MAX, m1 = INT32_MIN, n0 = INT32_MAX, n1 = INT32_MIN;
    for (auto& [m, n, c] : terms) {
      m0 = std::min(m0, m);
      m1 = std::max(m1, m);
      n0 = std::min(n0, n);
      n1 = std::max(n1, n);
    }
    std::vector<cplx> buf(std::size_t(m1 - m0 + 1) * (n1 - n0 + 1));
    for (auto& [m, n, c] : terms) buf[std::size_t(m - m0) * (n1 - n0 + 1) + (n - n0)] += c;
    return from_box(m0, m1, n0, n1, std::move(buf));
  }

  bool is_zero() const { return c_.empty(); }
  int m_lo() const { return m0_; }
  int m_hi() const { return m1_; }
  int n_lo() const { return n0_; }
  int n_hi() const { return n1_; }
  int m_width() const { return is_zero() ? 0 : m1_ - m0_ + 1; }
  int n_width() const { return is_zero() ? 0 : n1_ - n0_ + 1; }
  const std::vector<cplx>& raw() const { return c_; }

  int band() const {
    if (is_zero()) return 0;
    return std::max({std::abs(m0_), std::abs(m1_), std::abs(n0_), std::abs(n1_)});
  }

  cplx coeff(int m, int n) const {
    if (is_zero() || m < m0_ || m > m1_ || n < n0_ || n > n1_) return 0.0;
    return c_[std::size_t(m - m0_) * n_width() + (n - n0_)];
  }
  // unchecked access inside the box
  const cplx& at(int m, int n) const { return c_[std::size_t(m - m0_) * n_width() + (n - n0_)]; }

  template <class F>
  void for_each(F&& f) const {
    if (is_zero()) return;
    int w = n_width();
    for (int m = m0_; m <= m1_; ++m)
      for (int n = n0_; n <= n1_; ++n) {
        const cplx& c = c_[std::size_t(m - m0_) * w + (n - n0_)];
        if (c != 0.0) f(m, n, c);
      }
  }

  std::size_t nnz() const {
    std::size_t k = 0;
    for (auto& c : c_) k += (c != 0.0);
    return k;
  }

  double l1() const {
    double s = 0;
    for (auto& c : c_) s += std::abs(c);
    return s;
  }
  double max_abs() const {
    double s = 0;
    for (auto& c : c_) s = std::max(s, std::abs(c));
    return s;
  }

  AlgebraElement map_coeffs(const std::function<cplx(int, int, cplx)>& f) const {
    if (is_zero()) return {};
    std::vector<cplx> buf(c_.size());
    int w = n_width();
    for (int m = m0_; m <= m1_; ++m)
      for (int n = n0_; n <= n1_; ++n) {
        std::size_t i = std::size_t(m - m0_) * w + (n - n0_);
        if (c_[i] != 0.0) buf[i] = f(m, n, c_[i]);
      }
    return from_box(m0_, m1_, n0_, n1_, std::move(buf));
  }

  // keep only |m| <= bm, |n| <= bn
  AlgebraElement truncate(int bm, int bn) const {
    if (is_zero()) return {};
    int a0 = std::max(m0_, -bm), a1 = std::min(m1_, bm);
    int b0 = std::max(n0_, -bn), b1 = std::min(n1_, bn);
    if (a0 > a1 || b0 > b1) return {};
    std::vector<cplx> buf(std::size_t(a1 - a0 + 1) * (b1 - b0 + 1));
    for (int m = a0; m <= a1; ++m)
      for (int n = b0; n <= b1; ++n) buf[std::size_t(m - a0) * (b1 - b0 + 1) + (n - b0)] = at(m, n);
    return from_box(a0, a1, b0, b1, std::move(buf));
  }
  AlgebraElement truncate(int b) const { return truncate(b, b); }

  friend AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b) {
    return axpy(a, 1.0, b);
  }
  friend AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b) {
    return axpy(a, -1.0, b);
  }
  friend AlgebraElement operator*(cplx s, const AlgebraElement& a) {
    if (s == 0.0 || a.is_zero()) return {};
    std::vector<cplx> buf(a.c_);
    for (auto& c : buf) c *= s;
    return from_box(a.m0_, a.m1_, a.n0_, a.n1_, std::move(buf));
  }
  AlgebraElement operator-() const { return cplx(-1.0) * *this; }

  // a + s b
  static AlgebraElement axpy(const AlgebraElement& a, cplx s, const AlgebraElement& b) {
    if (b.is_zero() || s == 0.0) return a;
    if (a.is_zero()) return s * b;
    int m0 = std::min(a.m0_, b.m0_), m1 = std::max(a.m1_, b.m1_);
    int n0 = std::min(a.n0_, b.n0_), n1 = std::max(a.n1_, b.n1_);
    int w = n1 - n0 + 1;
    std::vector<cplx> buf(std::size_t(m1 - m0 + 1) * w);
    for (int m = a.m0_; m <= a.m1_; ++m)
      for (int n = a.n0_; n <= a.n1_; ++n) buf[std::size_t(m - m0) * w + (n - n0)] += a.at(m, n);
    for (int m = b.m0_; m <= b.m1_; ++m)
      for (int n = b.n0_; n <= b.n1_; ++n) buf[std::size_t(m - m0) * w + (n - n0)] += s * b.at(m, n);
    return from_box(m0, m1, n0, n1, std::move(buf));
  }

 private:
  void prune(double drop) {
    if (c_.empty()) return;
    int w = n1_ - n0_ + 1;
    int a0 = INT32_MAX, a1 = INT32_MIN, b0 = INT32_MAX, b1 = INT32_MIN;
    for (int m = m0_; m <= m1_; ++m)
      for (int n = n0_; n <= n1_; ++n) {
        cplx& c = c_[std::size_t(m - m0_) * w + (n - n0_)];
        if (!(std::abs(c) >= drop)) {
          c = 0.0;
          continue;
        }
        a0 = std::min(a0, m);
        a1 = std::max(a1, m);
        b0 = std::min(b0, n);
        b1 = std::max(b1, n);
      }
    if (a0 > a1) {
      *this = AlgebraElement();
      return;
    }
    if (a0 == m0_ && a1 == m1_ && b0 == n0_ && b1 == n1_) return;
    std::vector<cplx> buf(std::size_t(a1 - a0 + 1) * (b1 - b0 + 1));
    for (int m = a0; m <= a1; ++m)
      for (int n = b0; n <= b1; ++n)
        buf[std::size_t(m - a0) * (b1 - b0 + 1) + (n - b0)] = c_[std::size_t(m - m0_) * w + (n - n0_)];
    m0_ = a0;
    m1_ = a1;
    n0_ = b0;
    n1_ = b1;
    c_ = std::move(buf);
  }

  int m0_ = 0, m1_ = -1, n0_ = 0, n1_ = -1;
  std::vector<cplx> c_;
};

// (U^m V^n)(U^m' V^n') = e^{2 pi i theta n m'} U^{m+m'} V^{n+n'}
inline AlgebraElement multiply(const AlgebraElement& a, const AlgebraElement& b,
                               const AlgebraParams& p, double drop = kDropTol) {
  if (a.is_zero() || b.is_zero()) return {};
  int om0 = a.m_lo() + b.m_lo(), om1 = a.m_hi() + b.m_hi();
  int on0 = a.n_lo() + b.n_lo(), on1 = a.n_hi() + b.n_hi();
  int ow = on1 - on0 + 1, bw = b.n_width();
  std::vector<cplx> out(std::size_t(om1 - om0 + 1) * ow);
  // phase table over (n of a, m' of b)
  int an = a.n_width(), bm = b.m_width();
  std::vector<cplx> ph(std::size_t(an) * bm);
  for (int i = 0; i < an; ++i)
    for (int j = 0; j < bm; ++j)
      ph[std::size_t(i) * bm + j] = phase(p.theta * double(a.n_lo() + i) * double(b.m_lo() + j));
  const cplx* bd = b.raw().data();
  for (int ma = a.m_lo(); ma <= a.m_hi(); ++ma)
    for (int na = a.n_lo(); na <= a.n_hi(); ++na) {
      cplx ca = a.at(ma, na);
      if (ca == 0.0) continue;
      const cplx* phrow = &ph[std::size_t(na - a.n_lo()) * bm];
      for (int j = 0; j < bm; ++j) {
        cplx s = ca * phrow[j];
        const cplx* brow = bd + std::size_t(j) * bw;
        cplx* orow = &out[std::size_t(ma + b.m_lo() + j - om0) * ow + (na + b.n_lo() - on0)];
        for (int k = 0; k < bw; ++k) orow[k] += s * brow[k];
      }
    }
  return AlgebraElement::from_box(om0, om1, on0, on1, std::move(out), drop);
}

// (U^m V^n)* = e^{2 pi i theta m n} U^{-m} V^{-n}
inline AlgebraElement star(const AlgebraElement& a, const AlgebraParams& p) {
  if (a.is_zero()) return {};
  int m0 = -a.m_hi(), m1 = -a.m_lo(), n0 = -a.n_hi(), n1 = -a.n_lo();
  int w = n1 - n0 + 1;
  std::vector<cplx> buf(std::size_t(m1 - m0 + 1) * w);
  a.for_each([&](int m, int n, cplx c) {
    buf[std::size_t(-m - m0) * w + (-n - n0)] = std::conj(c) * phase(p.theta * double(m) * double(n));
  });
  return AlgebraElement::from_box(m0, m1, n0, n1, std::move(buf));
}

inline cplx trace_phi0(const AlgebraElement& a) { return a.coeff(0, 0); }

// standard inner product of coefficient vectors, <a,b> = sum conj(a) b
inline cplx coeff_inner(const AlgebraElement& a, const AlgebraElement& b) {
  if (a.is_zero() || b.is_zero()) return 0.0;
  int m0 = std::max(a.m_lo(), b.m_lo()), m1 = std::min(a.m_hi(), b.m_hi());
  int n0 = std::max(a.n_lo(), b.n_lo()), n1 = std::min(a.n_hi(), b.n_hi());
  cplx s = 0.0;
  for (int m = m0; m <= m1; ++m) {
    const cplx* pa = &a.at(m, n0);
    const cplx* pb = &b.at(m, n0);
    for (int k = 0; k <= n1 - n0; ++k) s += std::conj(pa[k]) * pb[k];
  }
  return s;
}

inline double coeff_norm(const AlgebraElement& a) { return a.l1(); }

enum class Deriv { delta1, delta2, delta, delta_bar };

// multiplies a_{mn} by alpha m + beta n
inline AlgebraElement derive(const AlgebraElement& a, cplx alpha, cplx beta) {
  return a.map_coeffs([&](int m, int n, cplx c) { return (alpha * double(m) + beta * double(n)) * c; });
}

// delta_bar has multiplier m + tau n; it is -(delta)* on the GNS space and acts as the adjoint of delta there
inline AlgebraElement derivation(const AlgebraElement& a, Deriv which, const AlgebraParams& p) {
  switch (which) {
    case Deriv::delta1: return derive(a, 1.0, 0.0);
    case Deriv::delta2: return derive(a, 0.0, 1.0);
    case Deriv::delta: return derive(a, 1.0, std::conj(p.tau));
    case Deriv::delta_bar: return derive(a, 1.0, p.tau);
  }
  return {};
}

struct ExpOptions {
  double tail_tol = 1e-14;
  int band_cap_factor = 4;
  int band_cap_floor = 32;
  int max_terms = 400;
};

// exp(s h) by Taylor series, complex scale allowed
inline AlgebraElement exp_series(const AlgebraElement& h, cplx s, const AlgebraParams& p,
                                 const ExpOptions& opt = {}) {
  if (h.is_zero() || s == 0.0) return AlgebraElement::one();
  int cap = std::max(opt.band_cap_factor * h.band(), opt.band_cap_floor);
  AlgebraElement x = s * h;
  double r = x.l1();
  AlgebraElement sum = AlgebraElement::one();
  AlgebraElement term = AlgebraElement::one();
  double dropped = 0.0;
  for (int k = 1; k <= opt.max_terms; ++k) {
    AlgebraElement next = (1.0 / k) * multiply(term, x, p, 1e-300);
    AlgebraElement kept = next.truncate(cap);
    dropped += (next - kept).l1();
    term = kept;
    sum = AlgebraElement::axpy(sum, 1.0, term);
    double tn = term.l1();
    double q = r / (k + 1);
    if (q < 1.0 && tn * q / (1.0 - q) < opt.tail_tol) {
      if (dropped > opt.tail_tol)
        throw SeriesDivergence("band cap " + std::to_string(cap) + " dropped mass " + std::to_string(dropped));
      return sum;
    }
  }
  throw SeriesDivergence("tail bound not met after " + std::to_string(opt.max_terms) + " terms");
}

inline bool is_selfadjoint(const AlgebraElement& h, const AlgebraParams& p, double tol = 1e-12) {
  return (star(h, p) - h).max_abs() <= tol;
}

inline AlgebraElement exp_selfadjoint(const AlgebraElement& h, double scale, const AlgebraParams& p,
                                      const ExpOptions& opt = {}) {
  if (!is_selfadjoint(h, p)) throw NonSelfAdjointInput("h differs from h*");
  return exp_series(h, scale, p, opt);
}

// Weyl factor k = e^h with cached generator
struct WeylFactor {
  AlgebraElement h;
  AlgebraElement pow(double s, const AlgebraParams& p, const ExpOptions& opt = {}) const {
    return exp_selfadjoint(h, s, p, opt);
  }
  static WeylFactor identity() { return {}; }
};

inline cplx conformal_weight(const AlgebraElement& a, const WeylFactor& k, const AlgebraParams& p,
                             const ExpOptions& opt = {}) {
  return trace_phi0(multiply(a, k.pow(-2.0, p, opt), p));
}

// (U + U*)/2 style helpers
inline AlgebraElement cos_u(double c = 1.0) {
  return AlgebraElement::from_terms({{1, 0, 0.5 * c}, {-1, 0, 0.5 * c}});
}
inline AlgebraElement cos_v(double c = 1.0) {
  return AlgebraElement::from_terms({{0, 1, 0.5 * c}, {0, -1, 0.5 * c}});
}

// value of the symbol at (x,y) when theta = 0
inline cplx evaluate_symbol(const AlgebraElement& a, double x, double y) {
  cplx s = 0.0;
  a.for_each([&](int m, int n, cplx c) { s += c * phase(m * x + n * y); });
  return s;
}

// JSON: {theta, tau:[re,im], coeffs:[[m,n,re,im],...]} sorted by (m,n)
inline nlohmann::json to_json(const AlgebraElement& a, const AlgebraParams& p) {
  nlohmann::json c = nlohmann::json::array();
  a.for_each([&](int m, int n, cplx v) { c.push_back({m, n, v.real(), v.imag()}); });
  return {{"theta", p.theta}, {"tau", {p.tau.real(), p.tau.imag()}}, {"coeffs", c}};
}

inline AlgebraElement element_from_json(const nlohmann::json& j, AlgebraParams* p = nullptr) {
  if (p) {
    p->theta = j.at("theta").get<double>();
    p->tau = {j.at("tau").at(0).get<double>(), j.at("tau").at(1).get<double>()};
  }
  std::vector<std::tuple<int, int, cplx>> terms;
  for (auto& t : j.at("coeffs"))
    terms.emplace_back(t.at(0).get<int>(), t.at(1).get<int>(), cplx(t.at(2).get<double>(), t.at(3).get<double>()));
  return AlgebraElement::from_terms(terms);
}

}  // namespace nct
