#pragma once
// Eigenvalue-bound experiments: the T_F mechanism and the conformal sweeps.

#include <cstdlib>
#include <future>
#include <map>
#include <mutex>

#include "index_pairing.hpp"

namespace nct {

// operator norm of the left action of a, from below, on monomials of [-M,M]^2
inline double element_norm(const AlgebraElement& a, const AlgebraParams& p, int M, Side s = Side::left) {
  if (a.is_zero()) return 0.0;
  return exact_margin_norm([&](const Section& x) { return Section{act(s, a, x[0], p)}; }, 1, {0}, M);
}

// sup of |op y|_{H(E^sigma)} / |y|_{H(E)} over y = pi(g) x, x monomials of either grade
inline double coupled_operator_norm(const CoupledOperator& C, const SectionOp& op, int M) {
  double best = 0.0;
  for (int grade : {+1, -1}) {
    auto Y = module_domain(C, grade, M);
    auto GY = apply_all([&](const Section& x) { return C.apply_metric(x); }, Y);
    auto TY = apply_all(op, Y);
    auto STY = apply_all([&](const Section& x) { return C.apply_s(x); }, TY);
    Eigen::MatrixXcd ZZ = gram(TY, STY), W = gram(Y, GY);
    ZZ = 0.5 * (ZZ + ZZ.adjoint()).eval();
    W = 0.5 * (W + W.adjoint()).eval();
    auto sv = generalized_singular_values(ZZ, W, 1e-10);
    if (!sv.empty()) best = std::max(best, sv.back());
  }
  return best;
}

// Difference of the Grassmannian connections of the splitting F (+) F^perp of the free module:
// T_F = D_w - sigma(f) D_w f - (1 - sigma(f)) D_w (1 - f), f ribboned, on the slot of F inside C.
inline SectionOp splitting_defect_generic(const CoupledOperator& C, std::size_t slot, const Idempotent& F) {
  WeylFactor k = C.twist.kappa(F.side);
  Idempotent fh = ribbon(F, k, C.p), sfh = sigma_translate(fh, k, C.p);
  return [&C, slot, fh, sfh](const Section& x) {
    Section fx = C.apply_factor(slot, fh, x);
    Section rx = section_axpy(x, -1.0, fx);
    Section Dx = C.apply_D(x), Dfx = C.apply_D(fx), Drx = C.apply_D(rx);
    Section a = C.apply_factor(slot, sfh, Dfx);
    Section b = section_axpy(Drx, -1.0, C.apply_factor(slot, sfh, Drx));
    return section_axpy(section_axpy(Dx, -1.0, a), -1.0, b);
  };
}

// When omega acts trivially through the side of F it commutes with f, and
// T_F = omega (1 - 2f) [D, f] omega with [D, f] the action of the derivative of f.
inline SectionOp splitting_defect(const CoupledOperator& C, std::size_t slot, const Idempotent& F) {
  if (!omega_trivial_on(C.twist, F.side) || !C.twist.kappa(F.side).h.is_zero())
    return splitting_defect_generic(C, slot, F);
  const AlgebraParams& p = C.p;
  Idempotent one_m2f = mat_lin(Idempotent::unit(F.q, F.side), -2.0, F);
  Idempotent down = mat_mul(one_m2f, mat_map(F, [&](const AlgebraElement& a) { return derivation(a, Deriv::delta, p); }), p);
  Idempotent up = mat_mul(one_m2f, mat_map(F, [&](const AlgebraElement& a) { return derivation(a, Deriv::delta_bar, p); }), p);
  auto wp = omega_action(C.twist, +1, p), wm = omega_action(C.twist, -1, p);
  return [&C, slot, down, up, wp, wm](const Section& x) {
    int Qt = C.Q();
    Section w(x.size());
    for (int c = 0; c < Qt; ++c) {
      w[c] = x[c].is_zero() ? x[c] : wp(x[c]);
      w[Qt + c] = x[Qt + c].is_zero() ? x[Qt + c] : wm(x[Qt + c]);
    }
    Section gd = C.apply_factor(slot, down, w), gu = C.apply_factor(slot, up, w);
    Section r(x.size());
    for (int c = 0; c < Qt; ++c) {
      r[Qt + c] = gd[c].is_zero() ? gd[c] : wm(gd[c]);
      r[c] = gu[Qt + c].is_zero() ? gu[Qt + c] : wp(gu[Qt + c]);
    }
    return r;
  };
}

struct BoundRecord {
  double t = 0.0;
  double lambda1 = 0.0;
  double norm_k = 0.0, norm_k_inv = 0.0;
  double tf_norm = 0.0;
  double bound_rhs = 0.0;
  double ratio = 0.0;
  std::map<std::string, double> factors;
};

struct BoundReport {
  std::string name;
  std::vector<BoundRecord> records;
  double sup_ratio = 0.0;
  std::vector<double> violations;
  nlohmann::json extra = nlohmann::json::object();
};

struct SweepConfig {
  AlgebraElement h;          // selfadjoint generator, k_t = exp(t h)
  AlgebraElement h_left;     // second generator for the two-sided sweep
  std::vector<double> t_grid;
  double theta = 0.37;
  double hopf_amp = 0.6;
  int m_lambda = 4;          // margin for the variational lambda_1
  int m_norm = 6;            // margin for operator norms
  double slack = 0.01;

  void validate() const {
    if (t_grid.empty()) throw ConfigError("empty t grid");
    if (!std::is_sorted(t_grid.begin(), t_grid.end())) throw ConfigError("t grid must be sorted");
    if (std::find(t_grid.begin(), t_grid.end(), 0.0) == t_grid.end()) throw ConfigError("t grid must contain 0");
    AlgebraParams p{theta, {0.0, 1.0}};
    if (!is_selfadjoint(h, p, 1e-14) || !is_selfadjoint(h_left, p, 1e-14)) throw NonSelfAdjointInput("sweep generator");
    if (m_lambda < 1 || m_norm < 1) throw ConfigError("margins must be positive");
  }
};

inline std::vector<double> uniform_grid(double t_max, int steps) {
  if (steps < 2) throw ConfigError("need at least two grid points");
  std::vector<double> g;
  for (int i = 0; i < steps; ++i) g.push_back(t_max * double(i) / double(steps - 1));
  return g;
}

inline int sweep_threads() {
  if (const char* s = std::getenv("NCT_THREADS")) {
    int n = std::atoi(s);
    if (n > 0) return n;
  }
  return int(std::max(1u, std::thread::hardware_concurrency()));
}

// evaluates f at every grid point with bounded concurrency; results land in grid order
inline std::vector<BoundRecord> map_grid(const std::vector<double>& grid, const std::function<BoundRecord(double)>& f) {
  std::vector<BoundRecord> out(grid.size());
  int nt = std::min<int>(sweep_threads(), int(grid.size()));
  if (nt <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = f(grid[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errs(nt);
  std::vector<std::thread> pool;
  for (int w = 0; w < nt; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < grid.size(); i = next++) out[i] = f(grid[i]);
      } catch (...) {
        errs[w] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

inline void finish_report(BoundReport& r, double slack) {
  r.sup_ratio = 0.0;
  r.violations.clear();
  for (auto& x : r.records) {
    r.sup_ratio = std::max(r.sup_ratio, x.ratio);
    if (x.bound_rhs > 0 && x.lambda1 > x.bound_rhs * (1.0 + slack)) r.violations.push_back(x.t);
  }
}

// relative growth of the sup ratio from a coarse to a refined report
inline double refinement_growth(const BoundReport& coarse, const BoundReport& fine) {
  return (fine.sup_ratio - coarse.sup_ratio) / coarse.sup_ratio;
}

// largest relative jump of the ratio between neighbouring grid points
inline double max_adjacent_jump(const BoundReport& r) {
  double j = 0.0;
  for (std::size_t i = 1; i < r.records.size(); ++i) {
    double a = r.records[i - 1].ratio, b = r.records[i].ratio;
    j = std::max(j, std::abs(b - a) / std::max(std::abs(a), 1e-300));
  }
  return j;
}

// ---------------------------------------------------------------- T_F mechanism

struct MechanismSetup {
  AlgebraParams p;
  TwistSpec twist;
  Idempotent E, F;
};

// one window: lambda_1 of the E-coupled operator against |kappa_E^{-1}| |T_F|
inline BoundRecord mechanism_record(const MechanismSetup& S, int m_lambda, int m_norm) {
  CoupledOperator CE = make_coupled(S.p, S.twist, {S.E});
  CoupledOperator CF = make_coupled(S.p, S.twist, {Idempotent::unit(S.F.q, S.F.side)});
  WeylFactor kE = S.twist.kappa(S.E.side);
  BoundRecord r;
  r.lambda1 = lowest_s_eigenvalue(CE, m_lambda);
  r.tf_norm = coupled_operator_norm(CF, splitting_defect(CF, 0, S.F), m_norm);
  r.norm_k = kE.h.is_zero() ? 1.0 : element_norm(kE.pow(1.0, S.p), S.p, m_norm);
  r.norm_k_inv = kE.h.is_zero() ? 1.0 : element_norm(kE.pow(-1.0, S.p), S.p, m_norm);
  r.bound_rhs = r.norm_k_inv * r.tf_norm;
  r.ratio = r.lambda1 / r.bound_rhs;
  return r;
}

// |sigma^E (x) T_F| on the E-coupled domain, E and F on opposite sides
inline double sigma_tf_norm(const MechanismSetup& S, int M) {
  CoupledOperator C = make_coupled(S.p, S.twist, {S.E, Idempotent::unit(S.F.q, S.F.side)});
  return coupled_operator_norm(C, splitting_defect(C, 1, S.F), M);
}

// smallest singular value of the E (x) F coupled operator on the grade carrying the kernel
inline double tensor_smallest_sv(const MechanismSetup& S, int grade, int M) {
  CoupledOperator C = make_coupled(S.p, S.twist, {S.E, S.F});
  return coupled_kernel(C, grade, M).smallest;
}

struct MechanismReport {
  BoundReport bounds;
  IndexResult pairing;
  std::vector<int> sigma_windows;
  std::vector<double> sigma_tf;     // |sigma^E (x) T_F| per sigma window
  std::vector<int> scan_windows;
  std::vector<double> scan_smallest;
  bool scan_monotone = false;
};

// lambda_1 is variational, so its value at a margin below the window bounds the windowed value from above
// and the inequality checked with it is the more demanding one
inline MechanismReport tf_mechanism_check(const MechanismSetup& S, const std::vector<int>& windows,
                                          const std::vector<int>& scan_windows, const Ladder& L = Ladder{{8, 12}},
                                          double slack = 0.01, int lambda_cap = 8,
                                          const std::vector<int>& sigma_windows = {}) {
  MechanismReport out;
  out.bounds.name = "tf-check";
  Idempotent left = S.E.side == Side::left ? S.E : S.F, right = S.E.side == Side::left ? S.F : S.E;
  out.pairing = poincare_pairing(left, right, S.twist, S.p, L);
  if (!out.pairing.certified || out.pairing.value == 0.0)
    throw PairingNotCertified("pairing " + std::to_string(out.pairing.value) +
                              (out.pairing.certified ? " is zero" : " not certified"));
  for (int M : windows) {
    BoundRecord r = mechanism_record(S, std::min(M, lambda_cap), M);
    r.t = M;
    r.factors["lambda_margin"] = std::min(M, lambda_cap);
    out.bounds.records.push_back(r);
  }
  finish_report(out.bounds, slack);
  for (int M : sigma_windows) {
    out.sigma_windows.push_back(M);
    out.sigma_tf.push_back(sigma_tf_norm(S, M));
  }
  int grade = out.pairing.ker_plus.dim > 0 ? +1 : -1;
  out.scan_monotone = true;
  for (int M : scan_windows) {
    out.scan_windows.push_back(M);
    out.scan_smallest.push_back(tensor_smallest_sv(S, grade, M));
    std::size_t n = out.scan_smallest.size();
    if (n > 1 && !(out.scan_smallest[n - 1] < out.scan_smallest[n - 2])) out.scan_monotone = false;
  }
  return out;
}

// ---------------------------------------------------------------- sweeps

// D_{phi_t} = omega D omega with omega = diag(R_k, 1); E over the opposite algebra, F = partner on the left
inline BoundReport nc_torus_vw_sweep(const SweepConfig& cfg, const Idempotent& F) {
  cfg.validate();
  AlgebraParams p{cfg.theta, {0.0, 1.0}};
  Idempotent E = hopf_line(cfg.hopf_amp, p, Side::right);
  BoundReport rep;
  rep.name = "vw-sweep";
  rep.records = map_grid(cfg.t_grid, [&](double t) {
    TwistSpec tw;
    tw.side = Side::right;
    tw.k_plus = WeylFactor{t * cfg.h};
    MechanismSetup S{p, tw, E, with_side(F, Side::left)};
    BoundRecord r = mechanism_record(S, cfg.m_lambda, cfg.m_norm);
    r.t = t;
    r.ratio = r.lambda1 / (r.norm_k * r.norm_k);
    WeylFactor k = tw.k_plus;
    AlgebraElement kmh = k.pow(-0.5, p);
    r.factors["norm_k_mhalf"] = element_norm(kmh, p, cfg.m_norm);
    r.factors["norm_k_3half"] = element_norm(k.pow(1.5, p), p, cfg.m_norm);
    r.factors["norm_k_half_dk_mhalf"] =
        element_norm(multiply(k.pow(0.5, p), derivation(kmh, Deriv::delta, p), p), p, cfg.m_norm);
    return r;
  });
  finish_report(rep, cfg.slack);
  return rep;
}

// omega = L_{k1} R_{k2} on both grades, k1 = exp(t h_left), k2 = exp(t h)
inline BoundReport conformal_deformation_sweep(const SweepConfig& cfg, const Idempotent& F) {
  cfg.validate();
  AlgebraParams p{cfg.theta, {0.0, 1.0}};
  Idempotent E = hopf_line(cfg.hopf_amp, p, Side::right);
  BoundReport rep;
  rep.name = "conformal-sweep";
  rep.records = map_grid(cfg.t_grid, [&](double t) {
    TwistSpec tw;
    tw.side = Side::right;
    tw.k_plus = tw.k_minus = WeylFactor{t * cfg.h};
    tw.other_plus = tw.other_minus = WeylFactor{t * cfg.h_left};
    MechanismSetup S{p, tw, E, with_side(F, Side::left)};
    BoundRecord r = mechanism_record(S, cfg.m_lambda, cfg.m_norm);
    r.t = t;
    AlgebraElement k1 = tw.other_plus.pow(1.0, p), k1i = tw.other_plus.pow(-1.0, p), k2 = tw.k_plus.pow(1.0, p);
    double n1i = element_norm(k1i, p, cfg.m_norm);
    double n12 = exact_margin_norm(
        [&](const Section& x) { return Section{act(Side::right, k2, act(Side::left, k1, x[0], p), p)}; }, 1, {0},
        cfg.m_norm);
    r.factors["norm_k1_inv"] = n1i;
    r.factors["norm_k1k2"] = n12;
    r.factors["norm_k1"] = element_norm(k1, p, cfg.m_norm);
    r.factors["product"] = n1i * n12 * n12;
    r.ratio = r.lambda1 / r.factors["product"];
    return r;
  });
  finish_report(rep, cfg.slack);
  return rep;
}

// max of exp(t h) over a grid x grid sampling of the symbol, theta = 0
struct SymbolRange {
  double lo = 0.0, hi = 0.0;
};

inline SymbolRange symbol_range(const AlgebraElement& h, int grid = 512) {
  SymbolRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (int a = 0; a < grid; ++a)
    for (int b = 0; b < grid; ++b) {
      double v = evaluate_symbol(h, double(a) / grid, double(b) / grid).real();
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
  return r;
}

inline double sup_norm_exp(const SymbolRange& r, double t) { return std::exp(std::max(t * r.hi, t * r.lo)); }

// values of a on the grid x grid sampling of the torus, row-major in (x, y), theta = 0
inline std::vector<cplx> symbol_grid(const AlgebraElement& a, int grid) {
  std::vector<cplx> tab(std::size_t(grid), 0.0);
  for (int j = 0; j < grid; ++j) tab[std::size_t(j)] = phase(double(j) / grid);
  auto wrap = [grid](long v) { return std::size_t(((v % grid) + grid) % grid); };
  std::map<int, std::vector<cplx>> inner;
  a.for_each([&](int m, int n, cplx c) {
    auto& row = inner.try_emplace(m, std::size_t(grid), cplx(0.0)).first->second;
    for (int b = 0; b < grid; ++b) row[std::size_t(b)] += c * tab[wrap(long(n) * b)];
  });
  std::vector<cplx> out(std::size_t(grid) * grid, 0.0);
  for (auto& [m, row] : inner)
    for (int x = 0; x < grid; ++x) {
      cplx ph = tab[wrap(long(m) * x)];
      cplx* o = &out[std::size_t(x) * grid];
      for (int b = 0; b < grid; ++b) o[b] += ph * row[std::size_t(b)];
    }
  return out;
}

// sup over the torus of |w(x) (1 - 2f(x)) d f(x)| for both derivations: the norm of the
// multiplication operator T_F at theta = 0 when omega^2 = w
inline double commutative_tf_norm(const Idempotent& F, const AlgebraElement& log_w, int grid = 512) {
  AlgebraParams p{0.0, {0.0, 1.0}};
  int q = F.q;
  auto sample = [&](const std::function<AlgebraElement(const AlgebraElement&)>& g) {
    std::vector<std::vector<cplx>> v;
    for (auto& e : F.entries) v.push_back(e.is_zero() ? std::vector<cplx>(std::size_t(grid) * grid, 0.0) : symbol_grid(g(e), grid));
    return v;
  };
  auto f = sample([](const AlgebraElement& e) { return e; });
  auto df = sample([&](const AlgebraElement& e) { return derivation(e, Deriv::delta, p); });
  auto dbf = sample([&](const AlgebraElement& e) { return derivation(e, Deriv::delta_bar, p); });
  std::vector<cplx> lw = log_w.is_zero() ? std::vector<cplx>(std::size_t(grid) * grid, 0.0) : symbol_grid(log_w, grid);
  double best = 0.0;
  Eigen::MatrixXcd Fm(q, q), A(q, q), B(q, q);
  Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(q, q);
  for (std::size_t i = 0; i < lw.size(); ++i) {
    for (int r = 0; r < q; ++r)
      for (int c = 0; c < q; ++c) {
        std::size_t k = std::size_t(r * q + c);
        Fm(r, c) = f[k][i];
        A(r, c) = df[k][i];
        B(r, c) = dbf[k][i];
      }
    double w = std::exp(lw[i].real());
    Eigen::MatrixXcd R = I - 2.0 * Fm;
    Eigen::JacobiSVD<Eigen::MatrixXcd> sa(R * A), sb(R * B);
    best = std::max(best, w * std::max(sa.singularValues()(0), sb.singularValues()(0)));
  }
  return best;
}

// sqrt(k) D sqrt(k) at theta = 0 coupled with a line module; F is the partner class
inline BoundReport commutative_conformal_sweep(const SweepConfig& cfg, const Idempotent& F, int symmetry_margin = 3) {
  SweepConfig c0 = cfg;
  c0.theta = 0.0;
  c0.validate();
  AlgebraParams p{0.0, {0.0, 1.0}};
  // every factor on the left: the twist acts on the right, so all module metrics are flat
  Idempotent E = hopf_line(cfg.hopf_amp, p, Side::left);
  SymbolRange range = symbol_range(cfg.h, 512);
  Idempotent Fl = with_side(F, Side::left);
  BoundReport rep;
  rep.name = "commutative-sweep";
  rep.extra["symbol_min"] = range.lo;
  rep.extra["symbol_max"] = range.hi;
  rep.records = map_grid(c0.t_grid, [&](double t) {
    TwistSpec tw;
    tw.side = Side::right;
    tw.k_plus = tw.k_minus = WeylFactor{0.5 * t * cfg.h};
    CoupledOperator CE = make_coupled(p, tw, {E});
    BoundRecord r;
    r.t = t;
    r.lambda1 = lowest_s_eigenvalue(CE, cfg.m_lambda);
    // kappa_E = 1 here; T_F is a multiplication operator with symbol k (1 - 2f) df
    r.tf_norm = commutative_tf_norm(Fl, t * cfg.h, 512);
    r.norm_k_inv = 1.0;
    r.bound_rhs = r.tf_norm;
    r.norm_k = sup_norm_exp(range, t);
    r.ratio = r.lambda1 / r.norm_k;
    // spectrum of the coupled operator is symmetric under negation
    GalerkinModel G = galerkin_model(make_coupled(p, tw, {E}), symmetry_margin);
    auto v = s_spectrum(G.T, G.S).values;
    std::sort(v.begin(), v.end());
    double sym = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) sym = std::max(sym, std::abs(v[i] + v[v.size() - 1 - i]));
    r.factors["symmetry_defect"] = sym;
    return r;
  });
  finish_report(rep, c0.slack);
  for (auto& r : rep.records)
    if (r.factors["symmetry_defect"] > 1e-10) throw InvariantViolation("spectrum not symmetric at t=" + std::to_string(r.t));
  return rep;
}

// ---------------------------------------------------------------- serialization

inline nlohmann::json to_json(const BoundRecord& r) {
  nlohmann::json j = {{"t", r.t},
                      {"lambda1", r.lambda1},
                      {"norm_k", r.norm_k},
                      {"norm_k_inv", r.norm_k_inv},
                      {"tf_norm", r.tf_norm},
                      {"bound_rhs", r.bound_rhs},
                      {"ratio", r.ratio}};
  for (auto& [k, v] : r.factors) j["factors"][k] = v;
  return j;
}

inline nlohmann::json to_json(const BoundReport& r) {
  nlohmann::json recs = nlohmann::json::array();
  for (auto& x : r.records) recs.push_back(to_json(x));
  return {{"name", r.name}, {"records", recs}, {"sup_ratio", r.sup_ratio}, {"violations", r.violations}, {"extra", r.extra}};
}

}  // namespace nct
