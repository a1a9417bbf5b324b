#include "msd/lti.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "msd/errors.hpp"

namespace msd {
namespace {

using cdouble = std::complex<double>;

// Roots of c[0] z^n + c[1] z^(n-1) + ... + c[n].
std::vector<cdouble> descending_roots(std::vector<double> c) {
  while (!c.empty() && c.front() == 0.0) c.erase(c.begin());
  std::vector<cdouble> roots;
  while (c.size() > 1 && c.back() == 0.0) {
    c.pop_back();
    roots.emplace_back(0.0, 0.0);
  }
  const auto n = static_cast<Eigen::Index>(c.size()) - 1;
  if (n <= 0) return roots;
  Matrix companion = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) companion(0, j) = -c[static_cast<std::size_t>(j + 1)] / c[0];
  for (Eigen::Index i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Matrix> es(companion, false);
  if (es.info() != Eigen::Success) throw NumericalError("polynomial root finding did not converge");
  for (Eigen::Index i = 0; i < n; ++i) roots.push_back(es.eigenvalues()(i));
  return roots;
}

// Zeroes coefficients below `rel` times the largest magnitude.
Polynomial clean(const Polynomial& p, double rel = 1e-14) {
  double scale = 0.0;
  for (double c : p.coeffs()) scale = std::max(scale, std::abs(c));
  std::vector<double> out = p.coeffs();
  for (double& c : out)
    if (std::abs(c) <= rel * scale) c = 0.0;
  return Polynomial(std::move(out));
}

Polynomial shifted(const Polynomial& p, std::size_t delay) {
  std::vector<double> c(delay, 0.0);
  c.insert(c.end(), p.coeffs().begin(), p.coeffs().end());
  return Polynomial(std::move(c));
}

void require_siso(const StateSpace& ss, const char* what) {
  ss.validate();
  if (!ss.is_siso()) throw InputError(std::string(what) + ": SISO system required");
}

}  // namespace

// ---------------------------------------------------------------------------
// Polynomial

bool Polynomial::is_zero() const noexcept {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return c == 0.0; });
}

int Polynomial::degree() const noexcept {
  for (auto i = static_cast<int>(coeffs_.size()) - 1; i >= 0; --i)
    if (coeffs_[static_cast<std::size_t>(i)] != 0.0) return i;
  return 0;
}

Polynomial Polynomial::normalized() const {
  std::vector<double> c = coeffs_;
  while (!c.empty() && c.back() == 0.0) c.pop_back();
  return Polynomial(std::move(c));
}

Polynomial Polynomial::reversed() const {
  std::vector<double> c = normalized().coeffs_;
  std::reverse(c.begin(), c.end());
  return Polynomial(std::move(c));
}

std::complex<double> Polynomial::evaluate(std::complex<double> z) const {
  // Horner in w = z^-1.
  const cdouble w = 1.0 / z;
  cdouble acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * w + *it;
  return acc;
}

std::vector<std::complex<double>> Polynomial::roots_in_z() const {
  return descending_roots(normalized().coeffs_);
}

Polynomial Polynomial::from_roots(const std::vector<std::complex<double>>& roots, double gain) {
  std::vector<cdouble> c{1.0};
  for (const auto& r : roots) {
    c.push_back(0.0);
    for (std::size_t i = c.size() - 1; i > 0; --i) c[i] -= r * c[i - 1];
  }
  std::vector<double> out(c.size());
  std::transform(c.begin(), c.end(), out.begin(), [gain](cdouble v) { return gain * v.real(); });
  return Polynomial(std::move(out));
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  std::vector<double> c(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = a[i] + b[i];
  return Polynomial(std::move(c));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-1.0) * b; }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.size() == 0 || b.size() == 0) return Polynomial{};
  std::vector<double> c(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
  return Polynomial(std::move(c));
}

Polynomial operator*(double s, const Polynomial& p) {
  std::vector<double> c = p.coeffs_;
  for (double& v : c) v *= s;
  return Polynomial(std::move(c));
}

double max_coeff_diff(const Polynomial& a, const Polynomial& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// ---------------------------------------------------------------------------
// RationalTF

RationalTF::RationalTF(Polynomial n, Polynomial d) : num(std::move(n)), den(std::move(d)) {
  if (num.size() == 0) num = Polynomial{0.0};
  if (den[0] == 0.0) throw InputError("improper transfer function: leading denominator coefficient is zero");
}

RationalTF RationalTF::normalized() const {
  const double a0 = den[0];
  Polynomial n = ((1.0 / a0) * num).normalized();
  Polynomial d = ((1.0 / a0) * den).normalized();
  if (n.size() == 0) return RationalTF{};
  return RationalTF(std::move(n), std::move(d));
}

RationalTF RationalTF::reduced(double tol) const {
  const RationalTF t = normalized();
  if (t.num.is_zero()) return t;

  // Common padding so that both become ordinary polynomials in z.
  const std::size_t n = std::max(t.num.size(), t.den.size());
  std::vector<double> nz = t.num.coeffs(), dz = t.den.coeffs();
  nz.resize(n, 0.0);
  dz.resize(n, 0.0);
  auto lead = [](const std::vector<double>& c) {
    for (double v : c)
      if (v != 0.0) return v;
    return 0.0;
  };
  const double num_lead = lead(nz);
  const double den_lead = lead(dz);
  std::vector<cdouble> nr = descending_roots(nz);
  std::vector<cdouble> dr = descending_roots(dz);

  bool cancelled = false;
  for (auto it = nr.begin(); it != nr.end();) {
    auto best = dr.end();
    double best_dist = tol;
    for (auto jt = dr.begin(); jt != dr.end(); ++jt) {
      const double dist = std::abs(*it - *jt);
      if (dist <= best_dist) {
        best_dist = dist;
        best = jt;
      }
    }
    if (best != dr.end()) {
      dr.erase(best);
      it = nr.erase(it);
      cancelled = true;
    } else {
      ++it;
    }
  }
  if (!cancelled) return t;

  // Rebuild in z, then divide through by z^(deg den) to return to z^-1.
  const std::size_t dn = nr.size(), dd = dr.size();
  if (dn > dd) throw InternalError("cancellation produced an improper transfer function");
  Polynomial num_new = shifted(Polynomial::from_roots(nr, num_lead), dd - dn);
  Polynomial den_new = Polynomial::from_roots(dr, den_lead);
  return RationalTF(std::move(num_new), std::move(den_new)).normalized();
}

std::complex<double> RationalTF::evaluate(std::complex<double> z) const {
  return num.evaluate(z) / den.evaluate(z);
}

RationalTF operator*(const RationalTF& a, const RationalTF& b) {
  return RationalTF(a.num * b.num, a.den * b.den);
}

RationalTF operator+(const RationalTF& a, const RationalTF& b) {
  return RationalTF(a.num * b.den + b.num * a.den, a.den * b.den);
}

RationalTF feedback(const RationalTF& a, const RationalTF& b) {
  return RationalTF(a.num * b.den, a.den * b.den + a.num * b.num);
}

// ---------------------------------------------------------------------------
// StateSpace

StateSpace::StateSpace()
    : A(Matrix::Zero(0, 0)), B(Matrix::Zero(0, 1)), C(Matrix::Zero(1, 0)), D(Matrix::Zero(1, 1)) {}

StateSpace::StateSpace(Matrix a, Matrix b, Matrix c, Matrix d)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)) {
  validate();
}

void StateSpace::validate() const {
  if (A.rows() != A.cols()) throw InputError("state matrix A must be square");
  if (B.rows() != A.rows()) throw InputError("B must have as many rows as A");
  if (C.cols() != A.cols()) throw InputError("C must have as many columns as A");
  if (D.rows() != C.rows() || D.cols() != B.cols()) throw InputError("D must be outputs x inputs");
}

StateSpace StateSpace::gain(double k) {
  StateSpace s;
  s.D(0, 0) = k;
  return s;
}

StateSpace scaled(const StateSpace& sys, double k) {
  return StateSpace(sys.A, sys.B, k * sys.C, k * sys.D);
}

StateSpace series(const StateSpace& first, const StateSpace& second) {
  first.validate();
  second.validate();
  if (first.outputs() != second.inputs()) throw InputError("series: dimension mismatch");
  const auto n1 = first.states(), n2 = second.states();
  Matrix A = Matrix::Zero(n1 + n2, n1 + n2);
  A.topLeftCorner(n1, n1) = first.A;
  A.bottomLeftCorner(n2, n1) = second.B * first.C;
  A.bottomRightCorner(n2, n2) = second.A;
  Matrix B(n1 + n2, first.inputs());
  B << first.B, second.B * first.D;
  Matrix C(second.outputs(), n1 + n2);
  C << second.D * first.C, second.C;
  return StateSpace(std::move(A), std::move(B), std::move(C), second.D * first.D);
}

StateSpace transformed(const StateSpace& sys, const Matrix& T) {
  const Matrix Ti = T.inverse();
  return StateSpace(T * sys.A * Ti, T * sys.B, sys.C * Ti, sys.D);
}

// ---------------------------------------------------------------------------
// Conversions

StateSpace ss_from_tf(const RationalTF& tf_in) {
  if (tf_in.den[0] == 0.0) throw InputError("improper transfer function: leading denominator coefficient is zero");
  const RationalTF tf = tf_in.normalized();
  const std::size_t len = std::max(tf.num.size(), tf.den.size());
  const auto n = static_cast<Eigen::Index>(len) - 1;
  const double b0 = tf.num[0];

  Matrix A = Matrix::Zero(n, n);
  Matrix B = Matrix::Zero(n, 1);
  Matrix C = Matrix::Zero(1, n);
  Matrix D = Matrix::Constant(1, 1, b0);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto i = static_cast<std::size_t>(j + 1);
    A(0, j) = -tf.den[i];
    C(0, j) = tf.num[i] - b0 * tf.den[i];
  }
  for (Eigen::Index i = 1; i < n; ++i) A(i, i - 1) = 1.0;
  if (n > 0) B(0, 0) = 1.0;
  return StateSpace(std::move(A), std::move(B), std::move(C), std::move(D));
}

StateSpace fir_state_space(const Polynomial& taps) {
  return ss_from_tf(RationalTF(taps.normalized(), Polynomial{1.0}));
}

Polynomial char_poly(const Matrix& A) {
  if (A.rows() != A.cols()) throw InputError("char_poly: square matrix required");
  if (A.rows() == 0) return Polynomial{1.0};
  Eigen::EigenSolver<Matrix> es(A, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation did not converge");
  std::vector<cdouble> eig(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  return Polynomial::from_roots(eig);
}

RationalTF tf_from_ss(const StateSpace& ss, bool reduce) {
  require_siso(ss, "tf_from_ss");
  const double d = ss.D(0, 0);
  if (ss.states() == 0) return RationalTF(Polynomial{d}, Polynomial{1.0});
  // det(zI - A + BC) = det(zI - A) (1 + C (zI - A)^-1 B) for rank-one BC.
  const Polynomial den = char_poly(ss.A);
  const Polynomial closed = char_poly(ss.A - ss.B * ss.C);
  const Polynomial num = clean(closed - den + d * den);
  RationalTF tf(num, clean(den));
  return reduce ? tf.reduced(kReduceTol) : tf.normalized();
}

ImpulseResponse impulse_response(const StateSpace& ss, std::size_t horizon) {
  require_siso(ss, "impulse_response");
  ImpulseResponse out;
  out.horizon = horizon;
  out.g.resize(horizon + 1);
  out.g[0] = ss.D(0, 0);
  Vector x = ss.B.col(0);
  Vector next(x.size());
  for (std::size_t k = 1; k <= horizon; ++k) {
    out.g[k] = ss.C.row(0).dot(x);
    next.noalias() = ss.A * x;
    x.swap(next);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stability, Lyapunov, H2

SchurTest is_schur(const Matrix& A) {
  if (A.rows() != A.cols()) throw InputError("is_schur: square matrix required");
  if (A.rows() == 0) return {true, 0.0};
  if (!A.allFinite()) throw NumericalError("is_schur: non-finite matrix entries");
  Eigen::EigenSolver<Matrix> es(A, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation did not converge");
  const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
  return {rho < 1.0 - kSchurMargin, rho};
}

double dlyap_residual(const Matrix& A, const Matrix& Q, const Matrix& X) {
  const double a = A.norm();
  const double scale = Q.norm() + a * a * X.norm();
  return (X - A * X * A.transpose() - Q).norm() / (scale > 0.0 ? scale : 1.0);
}

namespace {

Matrix dlyap_doubling(const Matrix& A, const Matrix& Q) {
  Matrix X = Q;
  Matrix Ak = A;
  for (int it = 0; it < 200; ++it) {
    const Matrix step = Ak * X * Ak.transpose();
    X += step;
    const double xn = X.norm();
    if (step.norm() <= 1e-12 * (xn > 0.0 ? xn : 1.0)) break;
    Ak = (Ak * Ak).eval();
  }
  return 0.5 * (X + X.transpose());
}

// Direct solve of (I - A (x) A) vec X = vec Q; used for small n.
constexpr Eigen::Index kKroneckerMax = 12;

Matrix dlyap_kronecker(const Matrix& A, const Matrix& Q) {
  const auto n = A.rows();
  Matrix M = Matrix::Identity(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) M.block(i * n, j * n, n, n) -= A(i, j) * A;
  // vec is column-major: vec(A X A') = (A (x) A) vec X.
  const Vector x = M.partialPivLu().solve(Eigen::Map<const Vector>(Q.data(), n * n));
  const Matrix X = Eigen::Map<const Matrix>(x.data(), n, n);
  return 0.5 * (X + X.transpose());
}

}  // namespace

Matrix solve_dlyap(const Matrix& A, const Matrix& Q) {
  if (A.rows() != A.cols() || Q.rows() != A.rows() || Q.cols() != A.cols())
    throw InputError("solve_dlyap: dimension mismatch");
  if (A.rows() == 0) return Matrix::Zero(0, 0);
  const SchurTest st = is_schur(A);
  if (!st.stable)
    throw StabilityError("solve_dlyap: A is not Schur (spectral radius " + std::to_string(st.spectral_radius) + ")");

  Matrix X = A.rows() <= kKroneckerMax ? dlyap_kronecker(A, Q) : dlyap_doubling(A, Q);
  for (int refine = 0; refine < 3 && dlyap_residual(A, Q, X) > 1e-14; ++refine) {
    const Matrix R = A * X * A.transpose() + Q - X;
    X += A.rows() <= kKroneckerMax ? dlyap_kronecker(A, 0.5 * (R + R.transpose()))
                                   : dlyap_doubling(A, 0.5 * (R + R.transpose()));
  }
  if (dlyap_residual(A, Q, X) > 1e-10) throw NumericalError("solve_dlyap: residual above 1e-10");
  return X;
}

double h2_norm_sq(const StateSpace& ss) {
  require_siso(ss, "h2_norm_sq");
  const double d2 = ss.D(0, 0) * ss.D(0, 0);
  if (ss.states() == 0) return d2;
  const SchurTest st = is_schur(ss.A);
  if (!st.stable) throw StabilityError("H2 norm undefined: system is not stable");
  const Matrix X = solve_dlyap(ss.A, ss.B * ss.B.transpose());
  return (ss.C * X * ss.C.transpose())(0, 0) + d2;
}

std::size_t impulse_horizon(double spectral_radius, double tol) {
  constexpr std::size_t kCap = 1'000'000;
  if (spectral_radius <= 0.0) return 1;
  if (spectral_radius >= 1.0) return kCap;
  const double n = std::ceil(std::log(tol) / std::log(spectral_radius));
  return n >= static_cast<double>(kCap) ? kCap : std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

StateSpace feedback_interconnect(const StateSpace& P, const StateSpace& K, const StateSpace& H) {
  require_siso(P, "feedback_interconnect (P)");
  require_siso(K, "feedback_interconnect (K)");
  require_siso(H, "feedback_interconnect (H)");
  if (P.D(0, 0) != 0.0) throw InputError("ill-posed loop: plant must be strictly proper (D_P = 0)");

  const auto np = P.states(), nk = K.states(), nh = H.states();
  const auto n = np + nk + nh;

  // u = [D_K C_P, C_K, 0] x
  Matrix u_row = Matrix::Zero(1, n);
  u_row.block(0, 0, 1, np) = K.D * P.C;
  u_row.block(0, np, 1, nk) = K.C;
  // H output = D_H u + [0, 0, C_H] x
  Matrix h_row = H.D(0, 0) * u_row;
  h_row.block(0, np + nk, 1, nh) += H.C;

  Matrix A = Matrix::Zero(n, n);
  A.block(0, 0, np, np) = P.A;
  A.topRows(np) -= P.B * h_row;
  A.block(np, 0, nk, np) = K.B * P.C;
  A.block(np, np, nk, nk) = K.A;
  A.bottomRows(nh) += H.B * u_row;
  A.block(np + nk, np + nk, nh, nh) += H.A;

  Matrix B = Matrix::Zero(n, 1);
  B.topRows(np) = P.B;
  return StateSpace(std::move(A), std::move(B), std::move(u_row), Matrix::Zero(1, 1));
}

}  // namespace msd
