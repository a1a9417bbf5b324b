#include "msd/synthesis.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "msd/analysis.hpp"
#include "msd/errors.hpp"

namespace msd {
namespace {

constexpr double kMaxCondition = 1e12;
constexpr int kMaxFixedPointIterations = 10000;

double condition_number(const Matrix& M) {
  if (M.size() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

// True iff [M1 - lambda I, M2] (or its stacked dual) keeps full row rank at
// every eigenvalue of M1 outside the open stability region.
bool pbh_full_rank(const Matrix& A, const Matrix& B) {
  const auto n = A.rows();
  if (n == 0) return true;
  Eigen::EigenSolver<Matrix> es(A, false);
  if (es.info() != Eigen::Success) throw NumericalError("PBH test: eigenvalue computation failed");
  const Eigen::MatrixXcd Ac = A.cast<std::complex<double>>();
  const Eigen::MatrixXcd Bc = B.cast<std::complex<double>>();
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    if (std::abs(lambda) < 1.0 - kSchurMargin) continue;
    Eigen::MatrixXcd M(n, n + B.cols());
    M << Ac - lambda * Eigen::MatrixXcd::Identity(n, n), Bc;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    const auto& s = svd.singularValues();
    if (s(n - 1) <= 1e-9 * std::max(1.0, s(0))) return false;
  }
  return true;
}

// Right-hand side of the Riccati equation at X. `scale` receives the sum of
// the norms of its terms, the denominator of the normwise backward error.
Matrix dare_rhs(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, const Matrix& S,
                const Matrix& X, Matrix* gain_out, double* scale = nullptr) {
  const Matrix inner = R + B.transpose() * X * B;
  if (condition_number(inner) > kMaxCondition)
    throw RiccatiError(RiccatiFailure::kSingularInner,
                       "Riccati inner matrix R + B'XB is singular (condition number above 1e12)");
  const Matrix cross = B.transpose() * X * A + S.transpose();
  const Matrix gain = inner.fullPivLu().solve(cross);
  if (gain_out) *gain_out = gain;
  const Matrix quad = A.transpose() * X * A;
  const Matrix corr = cross.transpose() * gain;
  if (scale) *scale = X.norm() + quad.norm() + corr.norm() + Q.norm();
  Matrix next = quad - corr + Q;
  return 0.5 * (next + next.transpose());
}

double backward_error(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, const Matrix& S,
                      const Matrix& X, Matrix* gain_out) {
  double scale = 0.0;
  const Matrix next = dare_rhs(A, B, Q, R, S, X, gain_out, &scale);
  return (next - X).norm() / std::max(scale, 1e-300);
}

// Structure-preserving doubling for X = A'X(I + GX)^-1 A + H.
bool doubling(const Matrix& A, const Matrix& G, const Matrix& H, Matrix& X, int& iterations) {
  const auto n = A.rows();
  Matrix Ak = A, Gk = G, Hk = H;
  const Matrix I = Matrix::Identity(n, n);
  for (iterations = 1; iterations <= 100; ++iterations) {
    const Eigen::FullPivLU<Matrix> W(I + Gk * Hk);
    if (!W.isInvertible()) return false;
    const Matrix WA = W.solve(Ak);
    const Matrix WG = W.solve(Gk);
    const Matrix Hn = Hk + Ak.transpose() * Hk * WA;
    Gk = Gk + Ak * WG * Ak.transpose();
    Ak = Ak * WA;
    const bool done = (Hn - Hk).norm() <= 1e-13 * std::max(Hn.norm(), 1e-300);
    Hk = 0.5 * (Hn + Hn.transpose());
    Gk = 0.5 * (Gk + Gk.transpose()).eval();
    if (!Hk.allFinite()) return false;
    if (done) {
      X = Hk;
      return true;
    }
  }
  return false;
}

DareSolution finish(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, const Matrix& S, Matrix X,
                    int iterations, bool used_doubling) {
  DareSolution sol;
  X = 0.5 * (X + X.transpose());
  Matrix gain;
  sol.residual = backward_error(A, B, Q, R, S, X, &gain);
  sol.X = std::move(X);
  sol.gain = std::move(gain);
  sol.closed_loop = A - B * sol.gain;
  sol.iterations = iterations;
  sol.used_doubling = used_doubling;
  return sol;
}

bool acceptable(const DareSolution& s) {
  return s.residual <= 1e-10 && s.X.allFinite() && is_schur(s.closed_loop).stable;
}

// Gain of the regularized problem Q = I, R = I; stabilizing whenever (A, B)
// is stabilizable.
Matrix stabilizing_gain(const Matrix& A, const Matrix& B) {
  const auto n = A.rows(), m = B.cols();
  if (is_schur(A).stable) return Matrix::Zero(m, n);
  Matrix X;
  int it = 0;
  if (!doubling(A, B * B.transpose(), Matrix::Identity(n, n), X, it))
    throw RiccatiError(RiccatiFailure::kNoConvergence, "no stabilizing initial gain found");
  return (Matrix::Identity(m, m) + B.transpose() * X * B).ldlt().solve(B.transpose() * X * A);
}

// Newton iteration on the gain: each step solves one Lyapunov equation for
// the cost of the current closed loop. Stays on stabilizing gains. Near a
// marginal closed loop the last digits stall, so the caller judges the
// result by its residual.
bool newton(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, const Matrix& S, Matrix gain,
            Matrix& X, int& iterations) {
  for (iterations = 1; iterations <= 50; ++iterations) {
    const Matrix Acl = A - B * gain;
    if (!is_schur(Acl).stable) return false;
    Matrix Qk = Q - S * gain - gain.transpose() * S.transpose() + gain.transpose() * R * gain;
    Qk = 0.5 * (Qk + Qk.transpose());
    X = solve_dlyap(Acl.transpose(), Qk);
    const Matrix inner = R + B.transpose() * X * B;
    if (condition_number(inner) > kMaxCondition) return false;
    const Matrix next = inner.fullPivLu().solve(B.transpose() * X * A + S.transpose());
    const bool done = (next - gain).norm() <= 1e-14 * (1.0 + gain.norm());
    gain = next;
    if (done) return true;
  }
  return X.allFinite();
}

}  // namespace

bool is_stabilizable(const Matrix& A, const Matrix& B) { return pbh_full_rank(A, B); }

bool is_detectable(const Matrix& C, const Matrix& A) {
  return pbh_full_rank(A.transpose(), C.transpose());
}

double dare_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, const Matrix& S,
                     const Matrix& X) {
  return backward_error(A, B, Q, R, S, X, nullptr);
}

DareSolution solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, const Matrix& S) {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != B.cols() ||
      R.cols() != B.cols() || S.rows() != n || S.cols() != B.cols())
    throw InputError("solve_dare: dimension mismatch");

  std::string doubling_failure;
  if (condition_number(R) <= kMaxCondition) {
    const auto Rlu = R.fullPivLu();
    const Matrix Abar = A - B * Rlu.solve(S.transpose());
    const Matrix G = B * Rlu.solve(B.transpose());
    Matrix H = Q - S * Rlu.solve(S.transpose());
    H = 0.5 * (H + H.transpose());
    Matrix X;
    int it = 0;
    if (doubling(Abar, 0.5 * (G + G.transpose()), H, X, it)) {
      try {
        DareSolution sol = finish(A, B, Q, R, S, X, it, true);
        if (acceptable(sol)) return sol;
        doubling_failure = "doubling reached a non-stabilizing or inaccurate point";
      } catch (const RiccatiError& e) {
        doubling_failure = e.what();
      }
    } else {
      doubling_failure = "doubling did not converge";
    }
  }

  // Doubling returns the minimal solution, which is not stabilizing when
  // unstable modes carry no weight; Newton from a stabilizing gain is not
  // affected by that.
  try {
    Matrix X;
    int it = 0;
    if (newton(A, B, Q, R, S, stabilizing_gain(A, B), X, it)) {
      DareSolution sol = finish(A, B, Q, R, S, X, it, false);
      if (acceptable(sol)) return sol;
    }
  } catch (const Error&) {
    // fall through to the difference iteration
  }

  // Riccati difference iteration from X = Q.
  Matrix X = Q;
  int it = 0;
  for (; it < kMaxFixedPointIterations; ++it) {
    Matrix next = dare_rhs(A, B, Q, R, S, X, nullptr);
    if (!next.allFinite())
      throw RiccatiError(RiccatiFailure::kNoConvergence, "Riccati iteration diverged");
    const bool done = (next - X).norm() <= 1e-14 * std::max(next.norm(), 1e-300);
    X = std::move(next);
    if (done) break;
  }
  if (it == kMaxFixedPointIterations)
    throw RiccatiError(RiccatiFailure::kNoConvergence, "Riccati iteration did not converge in 10^4 steps" +
                                                           (doubling_failure.empty() ? "" : " (" + doubling_failure + ")"));
  DareSolution sol = finish(A, B, Q, R, S, X, it, false);
  if (!is_schur(sol.closed_loop).stable)
    throw RiccatiError(RiccatiFailure::kNotStabilizing, "Riccati fixed point is not stabilizing");
  if (sol.residual > 1e-10)
    throw RiccatiError(RiccatiFailure::kResidual,
                       "Riccati residual " + std::to_string(sol.residual) + " above 1e-10");
  return sol;
}

GeneralPlant build_general_plant(const StateSpace& P, const StateSpace& H, const StateSpace& Phi) {
  for (const StateSpace* s : {&P, &H, &Phi}) {
    s->validate();
    if (!s->is_siso()) throw InputError("build_general_plant: SISO components required");
  }
  if (P.D(0, 0) != 0.0) throw InputError("build_general_plant: plant must be strictly proper");

  GeneralPlant g;
  g.n_p = P.states();
  g.n_phi = Phi.states();
  g.n_h = H.states();
  const auto n = g.n_p + g.n_phi + g.n_h;
  const Eigen::Index ip = 0, iphi = g.n_p, ih = g.n_p + g.n_phi;

  g.A = Matrix::Zero(n, n);
  g.A.block(ip, ip, g.n_p, g.n_p) = P.A;
  g.A.block(iphi, iphi, g.n_phi, g.n_phi) = Phi.A;
  g.A.block(ih, ih, g.n_h, g.n_h) = H.A;
  g.A.block(ip, ih, g.n_p, g.n_h) = -P.B * H.C;

  g.B1 = Matrix::Zero(n, 1);
  g.B1.block(ip, 0, g.n_p, 1) = P.B;

  g.B2 = Matrix::Zero(n, 1);
  g.B2.block(ip, 0, g.n_p, 1) = -P.B * H.D;
  g.B2.block(iphi, 0, g.n_phi, 1) = Phi.B;
  g.B2.block(ih, 0, g.n_h, 1) = H.B;

  g.C1 = Matrix::Zero(1, n);
  g.C1.block(0, iphi, 1, g.n_phi) = Phi.C;
  g.C2 = Matrix::Zero(1, n);
  g.C2.block(0, ip, 1, g.n_p) = P.C;
  g.D12 = Phi.D;

  g.zero_cost = g.C1.isZero(0.0) && g.D12.isZero(0.0);
  return g;
}

GeneralPlant build_general_plant(const StateSpace& P, const Polynomial& H, const Polynomial& Phi) {
  return build_general_plant(P, fir_state_space(H), fir_state_space(Phi));
}

DareSolution solve_control_dare(const GeneralPlant& g) {
  return solve_dare(g.A, g.B2, g.C1.transpose() * g.C1, g.D12.transpose() * g.D12, g.C1.transpose() * g.D12);
}

DareSolution solve_filter_dare(const GeneralPlant& g) {
  const Matrix At = g.A.transpose();
  const Matrix Bt = g.C2.transpose();
  return solve_dare(At, Bt, g.B1 * g.B1.transpose(), Matrix::Zero(g.C2.rows(), g.C2.rows()),
                    Matrix::Zero(g.states(), g.C2.rows()));
}

SynthesisResult synthesize(const StateSpace& P, const StateSpace& H, const StateSpace& Phi) {
  GeneralPlant plant = build_general_plant(P, H, Phi);
  if (!is_stabilizable(plant.A, plant.B2))
    throw RiccatiError(RiccatiFailure::kNotStabilizable, "general plant: (A, B2) is not stabilizable");
  if (!is_detectable(plant.C2, plant.A))
    throw RiccatiError(RiccatiFailure::kNotDetectable, "general plant: (C2, A) is not detectable");

  SynthesisResult out;
  GeneralPlant design = plant;
  if (plant.zero_cost) {
    // Every stabilizing controller attains J = 0; regulate the measured
    // output instead so that the Riccati pair still yields one.
    design.C1 = plant.C2;
    design.D12 = Matrix::Identity(1, 1);
    out.degenerate = true;
    out.note = "channel uncertainty is zero (Phi = 0): cost vanishes for every stabilizing controller; "
               "returned controller regulates the plant output";
  }

  const DareSolution xs = solve_control_dare(design);
  const DareSolution ys = solve_filter_dare(design);
  const Matrix& A = design.A;
  const Matrix& B2 = design.B2;
  const Matrix& C2 = design.C2;

  out.X = xs.X;
  out.Y = ys.X;
  out.x_residual = xs.residual;
  out.y_residual = ys.residual;
  out.F = -xs.gain;
  out.L = -ys.gain.transpose();
  const Matrix CYC = C2 * out.Y * C2.transpose();
  out.L0 = out.F * out.Y * C2.transpose() * CYC.inverse();

  out.K = StateSpace(A + B2 * out.F + out.L * C2 - B2 * out.L0 * C2, out.L - B2 * out.L0, out.L0 * C2 - out.F,
                     out.L0);
  out.K_tf = tf_from_ss(out.K);

  // Small-gain route: G = PK/(1+PKH), then ||Phi G||^2.
  const StateSpace G = feedback_interconnect(P, out.K, H);
  const SchurTest st = is_schur(G.A);
  out.closed_loop_radius = st.spectral_radius;
  if (!st.stable)
    throw RiccatiError(RiccatiFailure::kNotStabilizing, "synthesized controller does not stabilize the nominal loop");
  out.J_star = h2_norm_sq(series(G, Phi));

  // General plant route: v -> z with the true (not surrogate) cost output.
  const auto n = plant.states(), nk = out.K.states();
  Matrix Acl(n + nk, n + nk);
  Acl << plant.A + plant.B2 * out.K.D * plant.C2, plant.B2 * out.K.C, out.K.B * plant.C2, out.K.A;
  Matrix Bcl = Matrix::Zero(n + nk, 1);
  Bcl.topRows(n) = plant.B1;
  Matrix Ccl(1, n + nk);
  Ccl << plant.C1 + plant.D12 * out.K.D * plant.C2, plant.D12 * out.K.C;
  out.J_plant = h2_norm_sq(StateSpace(Acl, Bcl, Ccl, Matrix::Zero(1, 1)));

  if (std::abs(out.J_plant - out.J_star) > 1e-8 * std::max(1.0, out.J_star))
    throw InternalError("synthesis: closed-loop cost routes disagree (" + std::to_string(out.J_star) + " vs " +
                        std::to_string(out.J_plant) + ")");
  out.ms_stabilizable = out.J_star < 1.0;
  return out;
}

SynthesisResult synthesize(const StateSpace& P, const ChannelSpec& spec) {
  const SpectralFactor sf = spectral_factor(spec);
  return synthesize(P, fir_state_space(mean_channel(spec).normalized()), fir_state_space(sf.phi));
}

}  // namespace msd
