#pragma once
// Certified indices of coupled operators and the pairing between left and right module classes.
//
// Windows here are margin radii M of the exact-image model: the operator is applied exactly to
// every monomial in [-M,M]^2 and kernels are counted from the stacked map [T ; 1 - pi(g)].

#include "modules_connections.hpp"

namespace nct {

// the cutoff applies at the reference rung and shrinks like M^-2 above it: true kernel vectors
// are resolved better as the window grows while genuine small singular values stay put
struct Ladder {
  std::vector<int> rungs{8, 12, 16, 20};
  double cutoff = kKernelCutoff;
  int reference = 8;

  double cutoff_at(int M) const { return cutoff * std::pow(double(reference) / double(M), 2); }
};

struct IndexResult {
  double value = 0.0;
  bool certified = false;
  KernelEstimate ker_plus, ker_minus;
  std::vector<int> windows_used;
  std::vector<std::pair<KernelEstimate, KernelEstimate>> history;
};

// walks the ladder until two consecutive rungs give determinate and equal kernel dimensions
inline IndexResult certified_index(const CoupledOperator& C, const Ladder& L = {}) {
  IndexResult r;
  bool prev_ok = false;
  int prev_p = -1, prev_m = -1;
  for (int M : L.rungs) {
    KernelEstimate kp = coupled_kernel(C, +1, M, L.cutoff_at(M));
    KernelEstimate km = coupled_kernel(C, -1, M, L.cutoff_at(M));
    r.windows_used.push_back(M);
    r.history.emplace_back(kp, km);
    r.ker_plus = kp;
    r.ker_minus = km;
    r.value = kp.dim - km.dim;
    bool ok = !kp.indeterminate && !km.indeterminate;
    if (ok && prev_ok && kp.dim == prev_p && km.dim == prev_m) {
      r.certified = true;
      break;
    }
    prev_ok = ok;
    prev_p = kp.dim;
    prev_m = km.dim;
  }
  return r;
}

inline int require_certified(const IndexResult& r) {
  if (!r.certified) {
    std::string w;
    for (int M : r.windows_used) w += " " + std::to_string(M);
    throw Indeterminate("index not certified over windows" + w);
  }
  return int(std::lround(r.value));
}

// untwisted D coupled to a selfadjoint idempotent
inline IndexResult index_ordinary(const Idempotent& e, const AlgebraParams& p, const Ladder& L = {}) {
  if (selfadjoint_defect(e, p) > 1e-10) throw ConfigError("index_ordinary needs a selfadjoint idempotent");
  return certified_index(make_coupled(p, TwistSpec::none(), {e}, false), L);
}

// omega D omega coupled to the ribbon representative of e
inline IndexResult index_twisted(const Idempotent& e, const TwistSpec& twist, const AlgebraParams& p,
                                 const Ladder& L = {}) {
  return certified_index(make_coupled(p, twist, {e}, true), L);
}

inline IndexResult poincare_pairing(const Idempotent& e_left, const Idempotent& f_right, const TwistSpec& twist,
                                    const AlgebraParams& p, const Ladder& L = {}) {
  if (e_left.side == f_right.side) throw ConfigError("pairing needs one module on each side");
  return certified_index(make_coupled(p, twist, {e_left, f_right}, true), L);
}

struct PairingMatrix {
  std::vector<std::vector<IndexResult>> entries;
  Eigen::MatrixXd values;
  double determinant = 0.0;
  bool certified = true;
};

inline PairingMatrix pairing_matrix(const std::vector<Idempotent>& lefts, const std::vector<Idempotent>& rights,
                                    const TwistSpec& twist, const AlgebraParams& p, const Ladder& L = {}) {
  PairingMatrix pm;
  pm.values = Eigen::MatrixXd::Zero(Eigen::Index(lefts.size()), Eigen::Index(rights.size()));
  for (std::size_t i = 0; i < lefts.size(); ++i) {
    pm.entries.emplace_back();
    for (std::size_t j = 0; j < rights.size(); ++j) {
      IndexResult r = poincare_pairing(lefts[i], rights[j], twist, p, L);
      pm.certified = pm.certified && r.certified;
      pm.values(Eigen::Index(i), Eigen::Index(j)) = r.value;
      pm.entries.back().push_back(std::move(r));
    }
  }
  if (pm.values.rows() == pm.values.cols()) pm.determinant = pm.values.determinant();
  return pm;
}

// block sum e (+) f of two idempotents on the same side
inline Idempotent direct_sum(const Idempotent& e, const Idempotent& f) {
  if (e.side != f.side) throw ConfigError("direct_sum needs a common side");
  Idempotent r = Idempotent::unit(e.q + f.q, e.side);
  for (auto& x : r.entries) x = AlgebraElement();
  for (int i = 0; i < e.q; ++i)
    for (int j = 0; j < e.q; ++j) r.at(i, j) = e.at(i, j);
  for (int i = 0; i < f.q; ++i)
    for (int j = 0; j < f.q; ++j) r.at(e.q + i, e.q + j) = f.at(i, j);
  r.selfadjoint = e.selfadjoint && f.selfadjoint;
  r.label = e.label + "+" + f.label;
  return r;
}

// g^{-1} e g for a constant invertible q x q matrix g
inline Idempotent similar(const Idempotent& e, const Eigen::MatrixXcd& g) {
  Eigen::MatrixXcd gi = g.inverse();
  Idempotent r = e;
  for (int i = 0; i < e.q; ++i)
    for (int j = 0; j < e.q; ++j) {
      AlgebraElement s;
      for (int a = 0; a < e.q; ++a)
        for (int b = 0; b < e.q; ++b) {
          cplx c = gi(i, a) * g(b, j);
          if (std::abs(c) > 0 && !e.at(a, b).is_zero()) s = AlgebraElement::axpy(s, c, e.at(a, b));
        }
      r.at(i, j) = s;
    }
  r.selfadjoint = e.selfadjoint && (g.adjoint() * g - Eigen::MatrixXcd::Identity(e.q, e.q)).norm() < 1e-12;
  r.label = "similar(" + e.label + ")";
  return r;
}

inline nlohmann::json to_json(const IndexResult& r) {
  nlohmann::json gaps = nlohmann::json::array();
  for (auto& [a, b] : r.history) gaps.push_back({to_json(a)["gap_ratio"], to_json(b)["gap_ratio"]});
  nlohmann::json dims = nlohmann::json::array();
  for (auto& [a, b] : r.history) dims.push_back({a.dim, b.dim});
  return {{"value", r.value},
          {"certified", r.certified},
          {"windows", r.windows_used},
          {"ker_dims", dims},
          {"gaps", gaps},
          {"smallest", {r.ker_plus.smallest, r.ker_minus.smallest}}};
}

}  // namespace nct
