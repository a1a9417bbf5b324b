#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include <Eigen/Dense>

namespace msd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Polynomial in the delay operator z^-1; coeffs()[i] multiplies z^-i.
///
/// Trailing zeros are allowed and kept until normalized(). The zero
/// polynomial is represented by an empty coefficient list after
/// normalization and reports degree 0.
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(std::initializer_list<double> coeffs) : coeffs_(coeffs) {}
  explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {}

  const std::vector<double>& coeffs() const noexcept { return coeffs_; }
  std::size_t size() const noexcept { return coeffs_.size(); }

  /// Coefficient of z^-i; zero past the end.
  double operator[](std::size_t i) const noexcept {
    return i < coeffs_.size() ? coeffs_[i] : 0.0;
  }

  bool is_zero() const noexcept;
  int degree() const noexcept;
  Polynomial normalized() const;

  /// Same coefficients read backwards, i.e. z^-deg * p(z).
  Polynomial reversed() const;

  std::complex<double> evaluate(std::complex<double> z) const;

  /// Finite zeros of p in the z-plane: the roots of the ordinary polynomial
  /// in z with coefficients coeffs() read from the highest power down.
  /// Leading zero coefficients (pure delays) contribute no roots.
  std::vector<std::complex<double>> roots_in_z() const;

  /// Monic-in-z^-1 product prod_k (1 - r_k z^-1) scaled by gain.
  static Polynomial from_roots(const std::vector<std::complex<double>>& roots,
                               double gain = 1.0);

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(double s, const Polynomial& p);

 private:
  std::vector<double> coeffs_;
};

/// Largest absolute coefficient difference; missing entries count as zero.
double max_coeff_diff(const Polynomial& a, const Polynomial& b);

/// num(z^-1) / den(z^-1) with den[0] != 0.
struct RationalTF {
  Polynomial num;
  Polynomial den;

  RationalTF() : num{0.0}, den{1.0} {}
  RationalTF(Polynomial n, Polynomial d);

  /// den[0] == 1, trailing zeros of both polynomials stripped.
  RationalTF normalized() const;

  /// Cancels common roots closer than `tol` and normalizes.
  RationalTF reduced(double tol = 1e-8) const;

  std::complex<double> evaluate(std::complex<double> z) const;

  friend RationalTF operator*(const RationalTF& a, const RationalTF& b);
  friend RationalTF operator+(const RationalTF& a, const RationalTF& b);
};

/// a / (1 + a*b) by polynomial arithmetic, no cancellation.
RationalTF feedback(const RationalTF& a, const RationalTF& b);

/// x(k+1) = A x + B u, y = C x + D u.
struct StateSpace {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;

  StateSpace();
  StateSpace(Matrix a, Matrix b, Matrix c, Matrix d);

  Eigen::Index states() const noexcept { return A.rows(); }
  Eigen::Index inputs() const noexcept { return B.cols(); }
  Eigen::Index outputs() const noexcept { return C.rows(); }
  bool is_siso() const noexcept { return inputs() == 1 && outputs() == 1; }

  /// Throws InputError unless A is square and B, C, D conform.
  void validate() const;

  static StateSpace gain(double k);
};

/// Output scaled by `k`.
StateSpace scaled(const StateSpace& sys, double k);

/// second(first(.)): feeds the output of `first` into `second`.
StateSpace series(const StateSpace& first, const StateSpace& second);

/// Similarity transform x' = T x.
StateSpace transformed(const StateSpace& sys, const Matrix& T);

struct ImpulseResponse {
  std::vector<double> g;  // g[k], k = 0..horizon
  std::size_t horizon = 0;

  double operator()(long k) const noexcept {
    return k < 0 || static_cast<std::size_t>(k) >= g.size() ? 0.0 : g[static_cast<std::size_t>(k)];
  }
};

struct SchurTest {
  bool stable = false;
  double spectral_radius = 0.0;
};

inline constexpr double kSchurMargin = 1e-9;
inline constexpr double kReduceTol = 1e-8;

/// Controllable canonical realization. Throws InputError if den[0] == 0.
StateSpace ss_from_tf(const RationalTF& tf);

/// Shift-register realization of a finite impulse response.
StateSpace fir_state_space(const Polynomial& taps);

/// C (zI - A)^-1 B + D in z^-1, reduced when `reduce` is set.
RationalTF tf_from_ss(const StateSpace& ss, bool reduce = true);

ImpulseResponse impulse_response(const StateSpace& ss, std::size_t horizon);

/// Spectral radius and the open-unit-disk test with margin kSchurMargin.
SchurTest is_schur(const Matrix& A);

/// Characteristic polynomial det(I - z^-1 A) as a polynomial in z^-1.
Polynomial char_poly(const Matrix& A);

/// Solves X = A X A' + Q by squaring (doubling). Throws StabilityError if
/// A is not Schur and NumericalError if the residual cannot be brought
/// below 1e-10 relative.
Matrix solve_dlyap(const Matrix& A, const Matrix& Q);

/// Normwise backward error ||X - A X A' - Q|| / (||Q|| + ||A||^2 ||X||).
double dlyap_residual(const Matrix& A, const Matrix& Q, const Matrix& X);

/// Squared H2 norm sum_k g(k)^2 of a stable SISO system.
double h2_norm_sq(const StateSpace& ss);

/// Horizon N with rho^N <= tol, capped at 10^6.
std::size_t impulse_horizon(double spectral_radius, double tol = 1e-12);

/// Realization of d -> u for the loop e = w - H u, y = P e, u = K y, where
/// w is the disturbance entering at the plant input summing junction.
/// Requires D_P == 0. State ordering is [x_P; x_K; x_H].
StateSpace feedback_interconnect(const StateSpace& P, const StateSpace& K,
                                 const StateSpace& H);

}  // namespace msd
