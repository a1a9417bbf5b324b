#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "msd/channel.hpp"
#include "msd/lti.hpp"

namespace msd {

/// Kernels of the second-moment recursion:
///   g_hat(n) = g(n)^2,
///   t_hat(m) = 1/2 sum_{i1,i2} [g(m-i1) a_i1 - g(m-i2) a_i2]^2 p_i1 p_i2.
struct RecursionKernels {
  std::vector<double> g_hat;
  std::vector<double> t_hat;
  std::size_t horizon = 0;
};

enum class TraceSource { kRecursion, kFormula, kEmpirical };

std::string_view to_string(TraceSource s) noexcept;

struct VarianceTrace {
  std::vector<double> sigma_sq;  // indexed by k = 0..horizon
  TraceSource source = TraceSource::kRecursion;

  static VarianceTrace constant(double value, std::size_t horizon, TraceSource source = TraceSource::kFormula) {
    return {std::vector<double>(horizon + 1, value), source};
  }
};

struct SmallGain {
  bool nominal_stable = false;
  double spectral_radius = 0.0;
  std::optional<double> J;  // absent when the nominal loop is unstable
  bool ms_stable = false;
};

struct AnalysisReport {
  Polynomial H;
  Polynomial Phi;
  bool degenerate_channel = false;
  StateSpace G;
  bool nominal_stable = false;
  double spectral_radius = 0.0;
  std::optional<double> J;
  std::optional<double> g_norm_sq;
  bool ms_stable = false;
  std::optional<double> sigma_u_inf;
};

/// Nominal loop G = PK / (1 + PKH) with H realized as an FIR shift register.
StateSpace nominal_loop(const StateSpace& P, const StateSpace& K, const ChannelSpec& spec);

/// J = ||Phi G||_2^2 via the Lyapunov route on the series connection.
SmallGain small_gain(const StateSpace& G, const Polynomial& phi);

/// J from the autocorrelation directly, sum_l r(l) sum_k g(k) g(k+l). Needs
/// no spectral factor, so it also covers marginal channels.
double small_gain_laurent(const StateSpace& G, const ChannelSpec& spec);

/// Throws InputError if g(0) != 0 or horizon < tau.
RecursionKernels recursion_kernels(const StateSpace& G, const ChannelSpec& spec, std::size_t horizon);

/// sigma_u^2(k) = sum_{n=1}^k g_hat(n) sigma_v^2(k-n) + sum_{n=1}^k t_hat(n) sigma_u^2(k-n)
/// for k = 0..kernels.horizon. The n = 0 terms vanish since both kernels
/// start at zero.
VarianceTrace variance_recursion(const RecursionKernels& kernels, const VarianceTrace& sigma_v);

/// Resolvent coefficients S(0) = 1, S(k) = sum_{j<k} S(j) t_hat(k-j).
std::vector<double> s_hat_sequence(const RecursionKernels& kernels);

/// ||G||^2 sigma_v^2 / (1 - J). Throws StabilityError when the nominal loop
/// is unstable or J >= 1.
double asymptotic_variance(const StateSpace& G, const Polynomial& phi, double sigma_v_sq);

/// Output variance with v = 0 and x_G(0) ~ (0, sigma0):
///   sigma_u^2(k) = C A^k sigma0 A'^k C' + sum_{n=1}^k t_hat(n) sigma_u^2(k-n).
VarianceTrace zero_input_recursion(const StateSpace& G, const Matrix& sigma0, const RecursionKernels& kernels);

struct CertifiedHorizon {
  std::size_t horizon = 0;
  bool certified = false;
};

/// Smallest power-of-two multiple of a spectral-radius estimate at which the
/// partial sums of g_hat, t_hat (and S when J < 1) are within `tol` of their
/// known limits. The partial sums are monotone, so the check is a bound.
CertifiedHorizon certified_horizon(const StateSpace& G, const ChannelSpec& spec, const Polynomial& phi,
                                   double tol = 1e-8, std::size_t cap = 1u << 15);

AnalysisReport analyze(const StateSpace& P, const StateSpace& K, const ChannelSpec& spec, double sigma_v_sq);

}  // namespace msd
