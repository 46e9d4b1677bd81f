#pragma once

// Left-invariant inner products on su(2) (+) R^n and their reduction to the
// decoupled normal form on su(2) (+) R^3.
//
// A decoupled Milnor basis (v1, v2, v3, f1, f2, f3) is g-orthogonal, the f_i
// are g-orthonormal and central, and u_i = v_i - d f_i is a standard Milnor
// basis ([u_i, u_j] = u_k cyclically). Its parameters are a_i = |v_i|_g and
// the tilt d; canonically a1 <= a2 <= a3 and d >= 0.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "su2vol/algebra.hpp"
#include "su2vol/errors.hpp"

namespace su2vol {

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

/// SPD Gram matrix of an inner product on su(2) (+) R^n, in the reference
/// basis (u1, u2, u3, e1, ..., en).
class MetricTensor {
 public:
  explicit MetricTensor(MatX gram) : gram_(std::move(gram)) { validate(); }

  static MetricTensor reference(int n_center = 3) {
    return MetricTensor(MatX::Identity(3 + n_center, 3 + n_center));
  }

  const MatX& gram() const { return gram_; }
  int dim() const { return static_cast<int>(gram_.rows()); }
  int n_center() const { return dim() - 3; }

  double inner(const VecX& x, const VecX& y) const { return x.dot(gram_ * y); }
  double norm(const VecX& x) const { return std::sqrt(inner(x, x)); }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<MatX> es(gram_, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
  }

 private:
  void validate() const {
    if (gram_.rows() != gram_.cols() || gram_.rows() < 3) {
      throw Error(ErrorKind::NotSPD, "gram matrix must be square of size >= 3");
    }
    if (!gram_.allFinite()) throw Error(ErrorKind::NotSPD, "gram matrix has non-finite entries");
    const double scale = std::max(1.0, gram_.cwiseAbs().maxCoeff());
    if ((gram_ - gram_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw Error(ErrorKind::NotSPD, "gram matrix is not symmetric");
    }
    if (min_eigenvalue() <= 0.0) throw Error(ErrorKind::NotSPD, "gram matrix is not positive definite");
  }

  MatX gram_;
};

struct Parameters {
  std::array<double, 3> a{1.0, 1.0, 1.0};
  double d = 0.0;

  bool is_canonical() const { return a[0] <= a[1] && a[1] <= a[2] && d >= 0.0 && a[0] > 0.0; }
};

/// A decoupled Milnor basis of an inner product on su(2) (+) R^3 together
/// with its parameters. The inner product itself is the one for which
/// {v_i / a_i, f_i} is orthonormal.
class DecoupledMetric {
 public:
  DecoupledMetric(std::array<AlgebraElement, 3> v, std::array<AlgebraElement, 3> f, Parameters params)
      : v_(v), f_(f), params_(params) {}

  const std::array<AlgebraElement, 3>& v() const { return v_; }
  const std::array<AlgebraElement, 3>& f() const { return f_; }
  const Parameters& params() const { return params_; }
  double a(int i) const { return params_.a[i]; }
  double d() const { return params_.d; }

  AlgebraElement u(int i) const { return v_[i] - params_.d * f_[i]; }

  /// Columns v1, v2, v3, f1, f2, f3 in reference coordinates.
  Mat6 basis() const {
    Mat6 b;
    for (int i = 0; i < 3; ++i) {
      b.col(i) = v_[i].coeffs();
      b.col(3 + i) = f_[i].coeffs();
    }
    return b;
  }

  Mat6 gram() const {
    const Mat6 binv = basis().inverse();
    Vec6 diag;
    diag << params_.a[0] * params_.a[0], params_.a[1] * params_.a[1], params_.a[2] * params_.a[2], 1.0, 1.0,
        1.0;
    return binv.transpose() * diag.asDiagonal() * binv;
  }

  MetricTensor tensor() const {
    Mat6 g = gram();
    g = 0.5 * (g + g.transpose()).eval();
    return MetricTensor(MatX(g));
  }

  /// Coefficients (alpha | beta) of x in the basis (v | f).
  Vec6 frame_coordinates(const AlgebraElement& x) const { return basis().partialPivLu().solve(x.coeffs()); }

  /// Reference-basis element sum alpha_i v_i + beta_i f_i.
  AlgebraElement from_frame(const Vec3& alpha, const Vec3& beta) const {
    Vec6 c = Vec6::Zero();
    for (int i = 0; i < 3; ++i) c += alpha(i) * v_[i].coeffs() + beta(i) * f_[i].coeffs();
    return AlgebraElement(c);
  }

  /// g-norm of sum alpha_i v_i + beta_i f_i, using orthogonality of the frame.
  double frame_norm(const Vec3& alpha, const Vec3& beta) const {
    double s = beta.squaredNorm();
    for (int i = 0; i < 3; ++i) s += params_.a[i] * params_.a[i] * alpha(i) * alpha(i);
    return std::sqrt(s);
  }

 private:
  std::array<AlgebraElement, 3> v_;
  std::array<AlgebraElement, 3> f_;
  Parameters params_;
};

// ---------------------------------------------------------------------------
// Standard Milnor bases on su(2)

struct MilnorFrame {
  Mat3 u;   // columns: u1, u2, u3 in Pauli coordinates, g0-orthonormal, det +1
  Vec3 a;   // ascending
};

/// Milnor basis of an inner product g3 on su(2) given in Pauli coordinates.
/// Eigenvectors of the operator A with <Au, w>_{g0} = <u, w>_g; since the
/// Pauli basis is g0-orthonormal, A is g3 itself.
inline MilnorFrame extract_milnor_su2(const Mat3& g3) {
  if (!g3.allFinite() || (g3 - g3.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, g3.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::NotSPD, "extract_milnor_su2: input is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (g3 + g3.transpose()));
  if (es.info() != Eigen::Success || es.eigenvalues()(0) <= 0.0) {
    throw Error(ErrorKind::NotSPD, "extract_milnor_su2: input is not positive definite");
  }
  Mat3 q = es.eigenvectors();
  // Re-orthonormalize (ties leave the solver free inside an eigenspace).
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < j; ++k) q.col(j) -= q.col(k).dot(q.col(j)) * q.col(k);
    q.col(j).normalize();
  }
  if (q.determinant() < 0.0) q.col(2) = -q.col(2);
  MilnorFrame out;
  out.u = q;
  out.a = es.eigenvalues().cwiseSqrt();
  return out;
}

/// max |[u_i, u_j] - u_k| over cyclic (i, j, k), Pauli coordinates.
inline double milnor_bracket_residual(const Mat3& u) {
  double r = 0.0;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const int k = (i + 2) % 3;
    r = std::max(r, (Vec3(u.col(i)).cross(Vec3(u.col(j))) - u.col(k)).cwiseAbs().maxCoeff());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Skewed basis v_i = u_i + h_i in the g-orthogonal complement of the center

struct SkewedBasis {
  MilnorFrame milnor;  // u_i and a_i = |v_i|_g
  MatX h;              // n x 3, column i = h_i in reference center coordinates
  MatX v;              // (3+n) x 3, column i = v_i in reference coordinates
  Mat3 schur;          // g restricted to z-perp, in Pauli coordinates of P u
};

/// The projection P onto z-perp along z sends u + h to u + H u with
/// H = -G_zz^{-1} G_zu; the projected bracket in the u-coordinate is the plain
/// su(2) bracket and the restricted inner product is the Schur complement
/// G_uu - G_uz G_zz^{-1} G_zu.
inline SkewedBasis skewed_basis(const MetricTensor& g) {
  const int n = g.n_center();
  const MatX& G = g.gram();
  SkewedBasis out;
  MatX H(n, 3);
  Mat3 schur = G.topLeftCorner(3, 3);
  if (n > 0) {
    const Eigen::LLT<MatX> llt(G.bottomRightCorner(n, n));
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotSPD, "center block is not positive definite");
    H = -llt.solve(G.bottomLeftCorner(n, 3));
    schur += G.topRightCorner(3, n) * H;
  }
  schur = 0.5 * (schur + schur.transpose()).eval();
  out.schur = schur;
  out.milnor = extract_milnor_su2(schur);
  out.h = H * out.milnor.u;
  out.v = MatX(3 + n, 3);
  out.v.topRows(3) = out.milnor.u;
  if (n > 0) out.v.bottomRows(n) = out.h;
  return out;
}

// ---------------------------------------------------------------------------
// Lifting h_1, h_2, h_3 in R^n to orthonormal f_i in R^{n+3}

struct LiftedVectors {
  MatX f;      // (n+3) x 3, orthonormal columns with first n rows equal to h / d
  double d = 0.0;
};

inline constexpr double kZeroTiltEigenvalue = 1e-14;

/// d = sqrt(lambda_max(Gram(h))); the last three coordinates w_i satisfy
/// <w_i, w_j> = d^2 delta_ij - <h_i, h_j>, taken from the symmetric square
/// root of that PSD matrix (negative eigenvalues clamped to zero).
inline LiftedVectors lift_vectors(const MatX& h) {
  const int n = static_cast<int>(h.rows());
  LiftedVectors out;
  out.f = MatX::Zero(n + 3, 3);
  const Mat3 gram = n > 0 ? Mat3(h.transpose() * h) : Mat3::Zero();
  Eigen::SelfAdjointEigenSolver<Mat3> es(gram);
  const double lmax = es.eigenvalues()(2);
  if (lmax < kZeroTiltEigenvalue) {
    out.d = 0.0;
    out.f.bottomRows(3) = Mat3::Identity();
    return out;
  }
  out.d = std::sqrt(lmax);
  const Mat3 deficit = lmax * Mat3::Identity() - gram;
  Eigen::SelfAdjointEigenSolver<Mat3> ds(0.5 * (deficit + deficit.transpose()));
  const Vec3 lam = ds.eigenvalues().cwiseMax(0.0);
  const Mat3 w = ds.eigenvectors() * lam.cwiseSqrt().asDiagonal() * ds.eigenvectors().transpose();
  if (n > 0) out.f.topRows(n) = h / out.d;
  out.f.bottomRows(3) = w / out.d;
  return out;
}

// ---------------------------------------------------------------------------
// Lift to a decoupled inner product on su(2) (+) R^{n+3}

struct LiftResult {
  MatX lifted;       // (n+6) x (n+6) Gram on su(2) (+) R^{n+3}; R^{n+3} Euclidean
  MatX projection;   // (n+3) x (n+6), Lie algebra homomorphism onto su(2) (+) R^n
  MatX frame;        // (n+6) x (n+6) lifted-orthonormal frame (v'_i / a_i, e_1..e_{n+3})
  MilnorFrame milnor;
  MatX f;            // (n+3) x 3, f_1..f_3 in the Euclidean coordinates of R^{n+3}
  double d = 0.0;
};

/// The center z of g is identified with R^n through a g-orthonormal frame
/// (Cholesky G_zz = L L^T, coordinates L^T h). The projection acts as the
/// identity on su(2) and as L^{-T} on the first n lifted coordinates.
inline LiftResult lift_to_decoupled(const MetricTensor& g) {
  const int n = g.n_center();
  const SkewedBasis sk = skewed_basis(g);
  MatX L = MatX::Identity(n, n);
  if (n > 0) {
    const Eigen::LLT<MatX> llt(g.gram().bottomRightCorner(n, n));
    L = llt.matrixL();
  }
  const MatX h_ortho = n > 0 ? MatX(L.transpose() * sk.h) : MatX(0, 3);
  const LiftedVectors lv = lift_vectors(h_ortho);

  LiftResult out;
  out.milnor = sk.milnor;
  out.f = lv.f;
  out.d = lv.d;

  const int dim = n + 6;
  MatX basis = MatX::Zero(dim, dim);
  for (int i = 0; i < 3; ++i) {
    basis.block(0, i, 3, 1) = sk.milnor.u.col(i);
    basis.block(3, i, n + 3, 1) = lv.d * lv.f.col(i);
  }
  basis.bottomRightCorner(n + 3, n + 3) = MatX::Identity(n + 3, n + 3);
  VecX scale = VecX::Ones(dim);
  for (int i = 0; i < 3; ++i) scale(i) = sk.milnor.a(i);
  const MatX binv = basis.inverse();
  out.lifted = binv.transpose() * VecX(scale.array().square()).asDiagonal() * binv;
  out.lifted = 0.5 * (out.lifted + out.lifted.transpose()).eval();
  out.frame = basis * VecX(scale.cwiseInverse()).asDiagonal();

  out.projection = MatX::Zero(n + 3, dim);
  out.projection.topLeftCorner(3, 3) = Mat3::Identity();
  if (n > 0) {
    out.projection.block(3, 3, n, n) = L.transpose().triangularView<Eigen::Upper>().solve(MatX::Identity(n, n));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Canonical parameters

/// Builds a decoupled metric from a Milnor frame (Pauli coordinates), center
/// frame (columns in R^3) and parameters; v_i = u_i + d f_i.
inline DecoupledMetric make_decoupled(const Mat3& u, const Mat3& f, const Parameters& p) {
  std::array<AlgebraElement, 3> vv;
  std::array<AlgebraElement, 3> ff;
  for (int i = 0; i < 3; ++i) {
    ff[i] = AlgebraElement(Vec3::Zero(), Vec3(f.col(i)));
    vv[i] = AlgebraElement(Vec3(u.col(i)), Vec3::Zero()) + p.d * ff[i];
  }
  return DecoupledMetric(vv, ff, p);
}

/// Reorders and re-signs the basis so that a1 <= a2 <= a3 and d >= 0. A
/// permutation sigma with sign s maps (v_i, f_i) to (s v_sigma(i), s f_sigma(i)),
/// which keeps u_i a Milnor basis and d unchanged; flipping all f_i flips d.
inline DecoupledMetric canonicalize(const DecoupledMetric& m) {
  std::array<int, 3> perm{0, 1, 2};
  std::stable_sort(perm.begin(), perm.end(), [&](int i, int j) { return m.a(i) < m.a(j); });
  int inversions = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (perm[i] > perm[j]) ++inversions;
  const double s = (inversions % 2 == 0) ? 1.0 : -1.0;
  std::array<AlgebraElement, 3> v;
  std::array<AlgebraElement, 3> f;
  Parameters p;
  p.d = m.d();
  for (int i = 0; i < 3; ++i) {
    v[i] = s * m.v()[perm[i]];
    f[i] = s * m.f()[perm[i]];
    p.a[i] = m.a(perm[i]);
  }
  if (p.d < 0.0) {
    p.d = -p.d;
    for (auto& fi : f) fi = -fi;
  }
  return DecoupledMetric(v, f, p);
}

inline void validate_parameters(const Parameters& p) {
  const bool finite = std::isfinite(p.a[0]) && std::isfinite(p.a[1]) && std::isfinite(p.a[2]) && std::isfinite(p.d);
  if (!finite || !(p.a[0] > 0.0) || p.a[0] > p.a[1] || p.a[1] > p.a[2] || p.d < 0.0) {
    throw Error(ErrorKind::InvalidParameters, "expected 0 < a1 <= a2 <= a3 and d >= 0");
  }
}

/// Decoupled metric with the Pauli matrices as Milnor basis and the standard
/// basis of R^3 as f_i.
inline DecoupledMetric from_parameters(const Parameters& p) {
  validate_parameters(p);
  return make_decoupled(Mat3::Identity(), Mat3::Identity(), p);
}

inline DecoupledMetric from_parameters(double a1, double a2, double a3, double d) {
  return from_parameters(Parameters{{a1, a2, a3}, d});
}

/// Parameters of the decoupled factor of the lift of g. The output lives on
/// su(2) (+) R^3 where R^3 carries the coordinates of (f1, f2, f3); the
/// discarded factor span{f4, ...} is flat.
inline DecoupledMetric reduce_to_decoupled(const MetricTensor& g) {
  const SkewedBasis sk = skewed_basis(g);
  const int n = g.n_center();
  MatX L = MatX::Identity(n, n);
  if (n > 0) L = Eigen::LLT<MatX>(g.gram().bottomRightCorner(n, n)).matrixL();
  const MatX h_ortho = n > 0 ? MatX(L.transpose() * sk.h) : MatX(0, 3);
  const LiftedVectors lv = lift_vectors(h_ortho);
  Parameters p;
  for (int i = 0; i < 3; ++i) p.a[i] = sk.milnor.a(i);
  p.d = lv.d;
  return canonicalize(make_decoupled(sk.milnor.u, Mat3::Identity(), p));
}

// ---------------------------------------------------------------------------
// Invariant checks

struct DecoupledResiduals {
  double bracket = 0.0;        // |[u_i, u_j] - u_k|
  double orthogonality = 0.0;  // normalized |<x, y>_g| over distinct basis vectors
  double f_norm = 0.0;         // | |f_i|_g - 1 |
  double f_central = 0.0;      // su(2) part of f_i
  double milnor_norm = 0.0;    // relative |<u_i, u_j>_g - (a_i^2 + d^2) delta_ij|
  double a_norm = 0.0;         // relative | |v_i|_g - a_i |
  bool ordered = false;

  double max_abs() const {
    return std::max({bracket, orthogonality, f_norm, f_central, milnor_norm, a_norm});
  }
};

inline DecoupledResiduals check_decoupled(const DecoupledMetric& m) {
  DecoupledResiduals r;
  const Mat6 G = m.gram();
  const Mat6 B = m.basis();
  const Mat6 ip = B.transpose() * G * B;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      if (i != j) r.orthogonality = std::max(r.orthogonality, std::abs(ip(i, j)) / std::sqrt(ip(i, i) * ip(j, j)));
  Mat3 u;
  for (int i = 0; i < 3; ++i) {
    u.col(i) = m.u(i).su2();
    r.f_central = std::max(r.f_central, m.f()[i].su2().cwiseAbs().maxCoeff());
    r.f_norm = std::max(r.f_norm, std::abs(std::sqrt(ip(3 + i, 3 + i)) - 1.0));
    r.a_norm = std::max(r.a_norm, std::abs(std::sqrt(ip(i, i)) - m.a(i)) / m.a(i));
    // u_i must have no center component once d f_i is removed.
    r.f_central = std::max(r.f_central, m.u(i).center().cwiseAbs().maxCoeff());
  }
  r.bracket = milnor_bracket_residual(u);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double gij = m.u(i).coeffs().dot(G * m.u(j).coeffs());
      const double expect = (i == j) ? m.a(i) * m.a(i) + m.d() * m.d() : 0.0;
      const double scale = std::sqrt((m.a(i) * m.a(i) + m.d() * m.d()) * (m.a(j) * m.a(j) + m.d() * m.d()));
      r.milnor_norm = std::max(r.milnor_norm, std::abs(gij - expect) / scale);
    }
  }
  r.ordered = m.params().is_canonical();
  return r;
}

/// Checks on the lift: the frame is orthonormal for the lifted metric and the
/// projection maps it to a g-orthonormal family followed by three zeros.
struct LiftResiduals {
  double frame_orthonormality = 0.0;
  double partial_isometry = 0.0;
  double homomorphism = 0.0;
};

inline LiftResiduals check_lift(const MetricTensor& g, const LiftResult& lift) {
  LiftResiduals r;
  const int n = g.n_center();
  const MatX fo = lift.frame.transpose() * lift.lifted * lift.frame;
  r.frame_orthonormality = (fo - MatX::Identity(fo.rows(), fo.cols())).cwiseAbs().maxCoeff();
  const MatX pf = lift.projection * lift.frame;
  const MatX img = pf.transpose() * g.gram() * pf;
  MatX expect = MatX::Zero(n + 6, n + 6);
  expect.topLeftCorner(n + 3, n + 3) = MatX::Identity(n + 3, n + 3);
  r.partial_isometry = (img - expect).cwiseAbs().maxCoeff();
  // Projection is the identity on su(2) and maps the center into the center.
  r.homomorphism = std::max((lift.projection.topLeftCorner(3, 3) - Mat3::Identity()).cwiseAbs().maxCoeff(),
                            lift.projection.block(0, 3, 3, n + 3).cwiseAbs().maxCoeff() +
                                lift.projection.block(3, 0, n, 3).cwiseAbs().maxCoeff());
  return r;
}

}  // namespace su2vol
