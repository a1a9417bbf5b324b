#pragma once

#include <cstdint>
#include <vector>

#include "msd/lti.hpp"
#include "msd/rng.hpp"

namespace msd {

/// Delay law of the channel: pmf[i] = Pr{tau_n = i}, and the weight applied
/// to a packet that arrives with delay i. Both have length tau + 1.
class ChannelSpec {
 public:
  static constexpr double kPmfTolerance = 1e-12;

  /// Throws InputError on unequal lengths, empty input, negative or
  /// non-finite probabilities, or |sum(pmf) - 1| > kPmfTolerance.
  /// The PMF is never renormalized.
  ChannelSpec(std::vector<double> pmf, std::vector<double> weights);

  const std::vector<double>& pmf() const noexcept { return pmf_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::size_t max_delay() const noexcept { return pmf_.size() - 1; }

 private:
  std::vector<double> pmf_;
  std::vector<double> weights_;
};

/// r(0..tau); r(-l) = r(l) and r(l) = 0 for |l| > tau.
struct AutoCorr {
  std::vector<double> r;

  double operator()(long l) const noexcept {
    const auto a = static_cast<std::size_t>(l < 0 ? -l : l);
    return a < r.size() ? r[a] : 0.0;
  }
};

/// Laurent coefficients of S(z) = sum_l r(l) z^-l for -tau <= l <= tau.
struct SpectralDensity {
  std::vector<double> coeffs;  // coeffs[l + tau]
  std::size_t tau = 0;

  double at(long l) const noexcept;
  /// S(e^{j theta}) = r(0) + 2 sum_l r(l) cos(l theta).
  double on_unit_circle(double theta) const noexcept;
  /// Minimum of S over an evenly spaced grid on [0, pi].
  double grid_minimum(std::size_t points = 1024) const noexcept;
};

struct SpectralFactor {
  Polynomial phi;           // minimum phase, phi[0] > 0
  bool degenerate = false;  // S is identically zero; phi is the zero polynomial
};

inline constexpr double kUnitCircleTol = 1e-8;

/// H(z) = sum_i weights[i] pmf[i] z^-i, full length tau + 1.
Polynomial mean_channel(const ChannelSpec& spec);

AutoCorr autocorrelation(const ChannelSpec& spec);

/// Throws InternalError if S dips below -1e-12 on the frequency grid.
SpectralDensity spectral_density(const ChannelSpec& spec);

/// Minimum-phase factor with S(z) = phi(z^-1) phi(z). Throws
/// MarginalFactorizationError when S has zeros on the unit circle.
SpectralFactor spectral_factor(const ChannelSpec& spec);

/// Coefficientwise phi(z^-1) phi(z) as a Laurent table (index l + deg).
std::vector<double> factor_product(const Polynomial& phi);

/// Draws tau in {0..tau_max} with probability pmf[tau]. Consumes exactly
/// one uniform from `rng`.
std::size_t sample_delay(const ChannelSpec& spec, CounterRng& rng);

/// Same mapping for a caller-supplied uniform in [0, 1).
std::size_t delay_from_uniform(const ChannelSpec& spec, double u);

}  // namespace msd
