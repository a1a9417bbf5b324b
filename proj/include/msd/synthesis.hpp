#pragma once

#include <string>

#include "msd/channel.hpp"
#include "msd/lti.hpp"

namespace msd {

/// Aggregate of plant P, mean channel H and spectral factor Phi with state
/// [x_P; x_Phi; x_H]:
///   x+ = A x + B1 v + B2 u,  z = C1 x + D12 u,  y = C2 x.
struct GeneralPlant {
  Matrix A, B1, B2, C1, C2, D12;
  Eigen::Index n_p = 0, n_phi = 0, n_h = 0;
  bool zero_cost = false;  // Phi == 0: the cost output is identically zero

  Eigen::Index states() const noexcept { return A.rows(); }
};

GeneralPlant build_general_plant(const StateSpace& P, const StateSpace& H, const StateSpace& Phi);

/// Shift-register realizations of H and Phi.
GeneralPlant build_general_plant(const StateSpace& P, const Polynomial& H, const Polynomial& Phi);

/// PBH test on eigenvalues with modulus >= 1 - kSchurMargin.
bool is_stabilizable(const Matrix& A, const Matrix& B);
bool is_detectable(const Matrix& C, const Matrix& A);

struct DareSolution {
  Matrix X;
  Matrix gain;         // (R + B'XB)^-1 (B'XA + S')
  Matrix closed_loop;  // A - B * gain, Schur on success
  double residual = 0.0;
  int iterations = 0;
  bool used_doubling = false;
};

/// Stabilizing solution of
///   X = A'XA - (A'XB + S)(R + B'XB)^-1 (B'XA + S') + Q.
/// Structure-preserving doubling when R is invertible, fixed-point
/// iteration from X = Q otherwise or when doubling fails. Throws
/// RiccatiError with the failure kind.
DareSolution solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, const Matrix& S);

/// Normwise backward error ||X - rhs(X)|| / (||X|| + ||A'XA|| + ||correction|| + ||Q||).
double dare_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, const Matrix& S,
                     const Matrix& X);

/// X-equation of the H2 problem; returns X and F = -gain, closed loop A + B2 F.
DareSolution solve_control_dare(const GeneralPlant& plant);

/// Y-equation Y = AYA' + B1B1' - AYC2'(C2YC2')^-1 C2YA'. The returned gain
/// is L' with L = -AYC2'(C2YC2')^-1; closed_loop is (A + L C2)'.
DareSolution solve_filter_dare(const GeneralPlant& plant);

struct SynthesisResult {
  StateSpace K;      // x^+ = (A + B2F + LC2 - B2L0C2) x^ + (L - B2L0) y, u = (L0C2 - F) x^ + L0 y
  RationalTF K_tf;   // reduced
  Matrix F, L, L0, X, Y;
  double x_residual = 0.0;
  double y_residual = 0.0;
  double J_star = 0.0;   // small-gain route on the closed P/K/H loop
  double J_plant = 0.0;  // H2 norm v -> z of the general plant closed loop
  double closed_loop_radius = 0.0;
  bool ms_stabilizable = false;
  bool degenerate = false;
  std::string note;
};

SynthesisResult synthesize(const StateSpace& P, const ChannelSpec& spec);

/// Same synthesis on caller-supplied realizations of H and Phi.
SynthesisResult synthesize(const StateSpace& P, const StateSpace& H, const StateSpace& Phi);

}  // namespace msd
