#pragma once
// Dense spectra, singular values, s-spectra and gap-certified kernel counts.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <limits>

#include "gns_representation.hpp"

namespace nct {

struct SpectralReport {
  std::vector<double> values;
  std::vector<double> residuals;  // per value, empty when not computed
  double residual = 0.0;
  TruncationWindow window;
  bool stable = false;
};

// ascending |x|, ties by signed value
inline void sort_by_abs(std::vector<double>& v) {
  std::sort(v.begin(), v.end(), [](double a, double b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
    return a < b;
  });
}

inline double hermiticity_defect(const Eigen::MatrixXcd& M) { return (M - M.adjoint()).cwiseAbs().maxCoeff(); }

inline SpectralReport hermitian_eigen(const GradedMatrix& M) {
  double scale = M.data.size() ? M.data.cwiseAbs().maxCoeff() : 0.0;
  if (M.data.size() && hermiticity_defect(M.data) > 1e-12 * std::max(scale, 1e-300))
    throw NotHermitian("defect " + std::to_string(hermiticity_defect(M.data)));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M.data);
  SpectralReport r;
  r.window = M.window;
  const auto& V = es.eigenvectors();
  for (Eigen::Index j = 0; j < M.dim(); ++j) {
    double lam = es.eigenvalues()(j);
    double res = (M.data * V.col(j) - lam * V.col(j)).norm();
    r.values.push_back(lam);
    r.residuals.push_back(res);
    r.residual = std::max(r.residual, res);
  }
  std::vector<std::size_t> order(r.values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    double x = r.values[a], y = r.values[b];
    if (std::abs(x) != std::abs(y)) return std::abs(x) < std::abs(y);
    return x < y;
  });
  SpectralReport s = r;
  for (std::size_t i = 0; i < order.size(); ++i) {
    s.values[i] = r.values[order[i]];
    s.residuals[i] = r.residuals[order[i]];
  }
  return s;
}

// coarse is stable when its lowest quartile by |value| matches the refined report. Signs are compared as
// multisets below the quartile edge, since +-lambda ties come out in either order.
inline bool mark_stability(SpectralReport& coarse, const SpectralReport& fine, double tol = 1e-8) {
  std::size_t q = coarse.values.size() / 4;
  auto close = [&](double a, double b) { return std::abs(a - b) <= tol * (1.0 + std::abs(b)); };
  bool ok = q > 0 && fine.values.size() >= q;
  for (std::size_t i = 0; ok && i < q; ++i) ok = close(std::abs(coarse.values[i]), std::abs(fine.values[i]));
  if (ok) {
    double edge = std::abs(coarse.values[q - 1]) - tol * (1.0 + std::abs(coarse.values[q - 1]));
    std::vector<double> a, b;
    for (std::size_t i = 0; i < q; ++i) {
      if (std::abs(coarse.values[i]) < edge) a.push_back(coarse.values[i]);
      if (std::abs(fine.values[i]) < edge) b.push_back(fine.values[i]);
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    ok = a.size() == b.size();
    for (std::size_t i = 0; ok && i < a.size(); ++i) ok = close(a[i], b[i]);
  }
  coarse.stable = ok;
  return ok;
}

inline std::vector<double> singular_values(const Eigen::MatrixXcd& T) {
  std::vector<double> v;
  if (T.size() == 0) return v;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(T);
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) v.push_back(svd.singularValues()(i));
  std::sort(v.begin(), v.end());
  return v;
}

inline SpectralReport singular_values(const GradedMatrix& T) {
  SpectralReport r;
  r.window = T.window;
  r.values = singular_values(T.data);
  return r;
}

// eigenvalues of S T, general solver; S even and T odd in the graded setting
inline SpectralReport s_spectrum(const GradedMatrix& T, const GradedMatrix& S, double herm_tol = 1e-10) {
  Eigen::MatrixXcd ST = S.data * T.data;
  double scale = std::max(1.0, ST.cwiseAbs().maxCoeff());
  if (hermiticity_defect(ST) > herm_tol * scale)
    throw STNotHermitian("defect " + std::to_string(hermiticity_defect(ST)));
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(ST);
  SpectralReport r;
  r.window = T.window;
  for (Eigen::Index j = 0; j < ST.rows(); ++j) {
    cplx lam = es.eigenvalues()(j);
    double res = (ST * es.eigenvectors().col(j) - lam * es.eigenvectors().col(j)).norm();
    r.residual = std::max(r.residual, res);
    r.values.push_back(lam.real());
  }
  sort_by_abs(r.values);
  return r;
}

// max over j <= count of | |lambda_j(T)| - mu_j(T) |
inline double minmax_check(const GradedMatrix& T, const GradedMatrix& S, int count) {
  auto lam = s_spectrum(T, S).values;
  auto mu = singular_values(T.data);
  int c = std::min<int>(count, int(std::min(lam.size(), mu.size())));
  double dev = 0.0;
  for (int j = 0; j < c; ++j) dev = std::max(dev, std::abs(std::abs(lam[j]) - mu[j]));
  return dev;
}

struct KernelEstimate {
  int dim = 0;
  double cutoff = 1e-2;
  double gap_ratio = std::numeric_limits<double>::infinity();
  bool indeterminate = false;
  double largest_below = 0.0;
  double smallest = 0.0;
};

inline constexpr double kKernelCutoff = 1e-2;
inline constexpr double kGapRatio = 10.0;

inline KernelEstimate kernel_from_singular_values(std::vector<double> sv, double cutoff = kKernelCutoff) {
  if (!(cutoff > 0)) throw ConfigError("cutoff must be positive");
  std::sort(sv.begin(), sv.end());
  KernelEstimate k;
  k.cutoff = cutoff;
  k.smallest = sv.empty() ? 0.0 : sv.front();
  for (double s : sv) {
    if (s < cutoff) {
      ++k.dim;
      k.largest_below = s;
    } else {
      k.gap_ratio = s / cutoff;
      break;
    }
  }
  k.indeterminate = k.gap_ratio < kGapRatio;
  return k;
}

inline KernelEstimate kernel_dim(const GradedMatrix& T, double cutoff = kKernelCutoff) {
  return kernel_from_singular_values(singular_values(T.data), cutoff);
}

// singular values from a Gram matrix Z^H Z
inline std::vector<double> singular_values_from_gram(const Eigen::MatrixXcd& G) {
  std::vector<double> v;
  if (G.rows() == 0) return v;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G, Eigen::EigenvaluesOnly);
  for (Eigen::Index i = 0; i < G.rows(); ++i) v.push_back(std::sqrt(std::max(0.0, es.eigenvalues()(i))));
  return v;
}

// G-orthonormal coordinates for the span of a family with Gram W: columns C with C^H W C = 1,
// dropping directions below rel_cut of the largest Gram eigenvalue
inline Eigen::MatrixXcd orthonormal_coordinates(const Eigen::MatrixXcd& W, double rel_cut) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(W);
  double top = es.eigenvalues().size() ? es.eigenvalues().maxCoeff() : 0.0;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < W.rows(); ++i)
    if (es.eigenvalues()(i) > rel_cut * top) keep.push_back(i);
  Eigen::MatrixXcd C(W.rows(), keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j)
    C.col(j) = es.eigenvectors().col(keep[j]) / std::sqrt(es.eigenvalues()(keep[j]));
  return C;
}

// singular values of y -> Z y relative to the norm from W (pencil Z^H Z, W), ascending
inline std::vector<double> generalized_singular_values(const Eigen::MatrixXcd& ZZ, const Eigen::MatrixXcd& W,
                                                       double rel_cut = 1e-8) {
  Eigen::MatrixXcd C = orthonormal_coordinates(W, rel_cut);
  Eigen::MatrixXcd H = C.adjoint() * ZZ * C;
  H = 0.5 * (H + H.adjoint()).eval();
  return singular_values_from_gram(H);
}

inline nlohmann::json to_json(const KernelEstimate& k) {
  return {{"dim", k.dim},
          {"cutoff", k.cutoff},
          {"gap_ratio", std::isfinite(k.gap_ratio) ? nlohmann::json(k.gap_ratio) : nlohmann::json("inf")},
          {"indeterminate", k.indeterminate},
          {"largest_below", k.largest_below},
          {"smallest", k.smallest}};
}

inline nlohmann::json to_json(const SpectralReport& r) {
  return {{"values", r.values}, {"residual", r.residual}, {"window", {r.window.N, r.window.margin}}, {"stable", r.stable}};
}

}  // namespace nct
