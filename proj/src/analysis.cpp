#include "msd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "msd/errors.hpp"

namespace msd {

std::string_view to_string(TraceSource s) noexcept {
  switch (s) {
    case TraceSource::kRecursion: return "recursion";
    case TraceSource::kFormula: return "formula";
    case TraceSource::kEmpirical: return "empirical";
  }
  return "unknown";
}

StateSpace nominal_loop(const StateSpace& P, const StateSpace& K, const ChannelSpec& spec) {
  return feedback_interconnect(P, K, fir_state_space(mean_channel(spec)));
}

SmallGain small_gain(const StateSpace& G, const Polynomial& phi) {
  SmallGain out;
  const SchurTest st = is_schur(G.A);
  out.nominal_stable = st.stable;
  out.spectral_radius = st.spectral_radius;
  if (!st.stable) return out;
  out.J = h2_norm_sq(series(G, fir_state_space(phi)));
  out.ms_stable = *out.J < 1.0;
  return out;
}

double small_gain_laurent(const StateSpace& G, const ChannelSpec& spec) {
  if (!G.is_siso()) throw InputError("small_gain_laurent: SISO system required");
  if (!is_schur(G.A).stable) throw StabilityError("small_gain_laurent: nominal loop is unstable");
  const AutoCorr ac = autocorrelation(spec);
  const double d = G.D(0, 0);
  const Matrix X = G.states() > 0 ? solve_dlyap(G.A, G.B * G.B.transpose()) : Matrix::Zero(0, 0);
  const ImpulseResponse g = impulse_response(G, ac.r.size());
  // gamma(l) = sum_k g(k) g(k+l) = D g(l) + C A^l X C'
  Matrix AlXC = X * G.C.transpose();
  double J = 0.0;
  for (std::size_t l = 0; l < ac.r.size(); ++l) {
    const double gamma = d * g(static_cast<long>(l)) + (G.states() > 0 ? (G.C * AlXC)(0, 0) : 0.0);
    J += (l == 0 ? 1.0 : 2.0) * ac.r[l] * gamma;
    if (G.states() > 0) AlXC = (G.A * AlXC).eval();
  }
  return J;
}

RecursionKernels recursion_kernels(const StateSpace& G, const ChannelSpec& spec, std::size_t horizon) {
  if (horizon < spec.max_delay()) throw InputError("recursion_kernels: horizon must be at least the maximum delay");
  if (G.is_siso() && G.D(0, 0) != 0.0)
    throw InputError("recursion_kernels: nominal loop must be strictly proper (g(0) = 0)");
  const ImpulseResponse g = impulse_response(G, horizon);
  const auto& p = spec.pmf();
  const auto& a = spec.weights();
  const std::size_t n_d = p.size();

  RecursionKernels k;
  k.horizon = horizon;
  k.g_hat.resize(horizon + 1);
  k.t_hat.resize(horizon + 1);
  std::vector<double> x(n_d);
  for (std::size_t m = 0; m <= horizon; ++m) {
    k.g_hat[m] = g.g[m] * g.g[m];
    for (std::size_t i = 0; i < n_d; ++i) x[i] = a[i] * g(static_cast<long>(m) - static_cast<long>(i));
    double t = 0.0;
    for (std::size_t i1 = 0; i1 < n_d; ++i1)
      for (std::size_t i2 = i1 + 1; i2 < n_d; ++i2) {
        const double diff = x[i1] - x[i2];
        t += diff * diff * p[i1] * p[i2];
      }
    k.t_hat[m] = t;  // the symmetric 1/2 sum counts each unordered pair once
  }
  if (k.t_hat[0] != 0.0) throw InternalError("t_hat(0) must vanish for a strictly proper loop");
  return k;
}

VarianceTrace variance_recursion(const RecursionKernels& kernels, const VarianceTrace& sigma_v) {
  const std::size_t N = kernels.horizon;
  if (sigma_v.sigma_sq.size() < N + 1 || kernels.g_hat.size() != N + 1 || kernels.t_hat.size() != N + 1)
    throw InputError("variance_recursion: input trace shorter than the kernel horizon");
  VarianceTrace out{std::vector<double>(N + 1, 0.0), TraceSource::kRecursion};
  auto& su = out.sigma_sq;
  const auto& sv = sigma_v.sigma_sq;
  for (std::size_t k = 0; k <= N; ++k) {
    double acc = 0.0;
    for (std::size_t n = 1; n <= k; ++n) acc += kernels.g_hat[n] * sv[k - n] + kernels.t_hat[n] * su[k - n];
    su[k] = acc;
  }
  return out;
}

std::vector<double> s_hat_sequence(const RecursionKernels& kernels) {
  const std::size_t N = kernels.horizon;
  std::vector<double> s(N + 1, 0.0);
  s[0] = 1.0;
  for (std::size_t k = 1; k <= N; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += s[j] * kernels.t_hat[k - j];
    s[k] = acc;
  }
  return s;
}

double asymptotic_variance(const StateSpace& G, const Polynomial& phi, double sigma_v_sq) {
  const SmallGain sg = small_gain(G, phi);
  if (!sg.nominal_stable) throw StabilityError("no finite asymptotic variance: nominal loop is unstable");
  if (!sg.ms_stable)
    throw StabilityError("no finite asymptotic variance: J = " + std::to_string(*sg.J) + " >= 1");
  return h2_norm_sq(G) * sigma_v_sq / (1.0 - *sg.J);
}

VarianceTrace zero_input_recursion(const StateSpace& G, const Matrix& sigma0, const RecursionKernels& kernels) {
  if (sigma0.rows() != G.states() || sigma0.cols() != G.states())
    throw InputError("zero_input_recursion: initial covariance must match the state dimension");
  const std::size_t N = kernels.horizon;
  VarianceTrace out{std::vector<double>(N + 1, 0.0), TraceSource::kRecursion};
  Matrix cov = sigma0;
  for (std::size_t k = 0; k <= N; ++k) {
    double acc = G.states() > 0 ? (G.C * cov * G.C.transpose())(0, 0) : 0.0;
    for (std::size_t n = 1; n <= k; ++n) acc += kernels.t_hat[n] * out.sigma_sq[k - n];
    out.sigma_sq[k] = acc;
    cov = (G.A * cov * G.A.transpose()).eval();
  }
  return out;
}

CertifiedHorizon certified_horizon(const StateSpace& G, const ChannelSpec& spec, const Polynomial& phi, double tol,
                                   std::size_t cap) {
  const SmallGain sg = small_gain(G, phi);
  if (!sg.nominal_stable) throw StabilityError("certified_horizon: nominal loop is unstable");
  const double J = *sg.J;
  const double g2 = h2_norm_sq(G);
  // g_hat and t_hat decay like rho^(2n).
  std::size_t N = std::max<std::size_t>(spec.max_delay() + 1, impulse_horizon(sg.spectral_radius * sg.spectral_radius, tol));
  N = std::min(N, cap);
  for (;;) {
    const RecursionKernels k = recursion_kernels(G, spec, N);
    double sum_t = 0.0, sum_g = 0.0;
    for (std::size_t n = 0; n <= N; ++n) {
      sum_t += k.t_hat[n];
      sum_g += k.g_hat[n];
    }
    bool ok = std::abs(sum_t - J) <= tol * std::max(1.0, J) && std::abs(sum_g - g2) <= tol * std::max(1.0, g2);
    if (ok && J < 1.0) {
      const std::vector<double> s = s_hat_sequence(k);
      double sum_s = 0.0;
      for (double v : s) sum_s += v;
      const double limit = 1.0 / (1.0 - J);
      ok = std::abs(sum_s - limit) <= tol * limit;
    }
    if (ok) return {N, true};
    if (N >= cap) return {N, false};
    N = std::min(2 * N, cap);
  }
}

AnalysisReport analyze(const StateSpace& P, const StateSpace& K, const ChannelSpec& spec, double sigma_v_sq) {
  if (sigma_v_sq < 0.0) throw InputError("analyze: sigma_v_sq must be nonnegative");
  AnalysisReport r;
  r.H = mean_channel(spec).normalized();
  const SpectralFactor sf = spectral_factor(spec);
  r.Phi = sf.phi;
  r.degenerate_channel = sf.degenerate;
  r.G = feedback_interconnect(P, K, fir_state_space(r.H));
  const SmallGain sg = small_gain(r.G, r.Phi);
  r.nominal_stable = sg.nominal_stable;
  r.spectral_radius = sg.spectral_radius;
  r.J = sg.J;
  r.ms_stable = sg.ms_stable;
  if (r.nominal_stable) r.g_norm_sq = h2_norm_sq(r.G);
  if (r.ms_stable) r.sigma_u_inf = *r.g_norm_sq * sigma_v_sq / (1.0 - *r.J);
  return r;
}

}  // namespace msd
