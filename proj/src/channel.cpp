#include "msd/channel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <string>

#include "msd/errors.hpp"

namespace msd {

ChannelSpec::ChannelSpec(std::vector<double> pmf, std::vector<double> weights)
    : pmf_(std::move(pmf)), weights_(std::move(weights)) {
  if (pmf_.empty()) throw InputError("channel: pmf must not be empty");
  if (pmf_.size() != weights_.size())
    throw InputError("channel: pmf and weights must have equal length (got " + std::to_string(pmf_.size()) +
                     " and " + std::to_string(weights_.size()) + ")");
  for (std::size_t i = 0; i < pmf_.size(); ++i) {
    if (!std::isfinite(pmf_[i]) || pmf_[i] < 0.0)
      throw InputError("channel: pmf[" + std::to_string(i) + "] must be a finite nonnegative probability");
    if (!std::isfinite(weights_[i])) throw InputError("channel: weights[" + std::to_string(i) + "] is not finite");
  }
  const double total = std::accumulate(pmf_.begin(), pmf_.end(), 0.0);
  if (std::abs(total - 1.0) > kPmfTolerance)
    throw InputError("channel: pmf sums to " + std::to_string(total) + ", expected 1 within 1e-12");
}

Polynomial mean_channel(const ChannelSpec& spec) {
  std::vector<double> h(spec.pmf().size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = spec.weights()[i] * spec.pmf()[i];
  return Polynomial(std::move(h));
}

AutoCorr autocorrelation(const ChannelSpec& spec) {
  const auto& p = spec.pmf();
  const auto& a = spec.weights();
  const std::size_t tau = spec.max_delay();
  AutoCorr out;
  out.r.assign(tau + 1, 0.0);
  for (std::size_t i = 0; i <= tau; ++i) out.r[0] += a[i] * a[i] * p[i] * (1.0 - p[i]);
  for (std::size_t l = 1; l <= tau; ++l)
    for (std::size_t i = 0; i + l <= tau; ++i) out.r[l] -= a[i] * a[i + l] * p[i] * p[i + l];
  return out;
}

double SpectralDensity::at(long l) const noexcept {
  const long t = static_cast<long>(tau);
  return l < -t || l > t ? 0.0 : coeffs[static_cast<std::size_t>(l + t)];
}

double SpectralDensity::on_unit_circle(double theta) const noexcept {
  double s = at(0);
  for (std::size_t l = 1; l <= tau; ++l) s += 2.0 * at(static_cast<long>(l)) * std::cos(static_cast<double>(l) * theta);
  return s;
}

double SpectralDensity::grid_minimum(std::size_t points) const noexcept {
  double m = on_unit_circle(0.0);
  for (std::size_t k = 1; k < points; ++k)
    m = std::min(m, on_unit_circle(std::numbers::pi * static_cast<double>(k) / static_cast<double>(points - 1)));
  return m;
}

SpectralDensity spectral_density(const ChannelSpec& spec) {
  const AutoCorr ac = autocorrelation(spec);
  SpectralDensity s;
  s.tau = spec.max_delay();
  s.coeffs.resize(2 * s.tau + 1);
  for (long l = -static_cast<long>(s.tau); l <= static_cast<long>(s.tau); ++l)
    s.coeffs[static_cast<std::size_t>(l + static_cast<long>(s.tau))] = ac(l);
  if (s.grid_minimum() < -1e-12)
    throw InternalError("spectral density is negative on the unit circle; autocorrelation is inconsistent");
  return s;
}

std::vector<double> factor_product(const Polynomial& phi) {
  const std::size_t d = phi.size() == 0 ? 0 : phi.size() - 1;
  std::vector<double> out(2 * d + 1, 0.0);
  for (std::size_t l = 0; l <= d; ++l) {
    double acc = 0.0;
    for (std::size_t j = 0; j + l <= d; ++j) acc += phi[j + l] * phi[j];
    out[d + l] = acc;
    out[d - l] = acc;
  }
  return out;
}

namespace {

// Largest coefficient error of phi(z^-1) phi(z) against r(0..t).
double factor_error(const std::vector<double>& phi, const std::vector<double>& r) {
  double err = 0.0;
  for (std::size_t l = 0; l < r.size(); ++l) {
    double acc = 0.0;
    for (std::size_t j = 0; j + l < phi.size(); ++j) acc += phi[j + l] * phi[j];
    err = std::max(err, std::abs(acc - r[l]));
  }
  return err;
}

// Newton steps on sum_j phi[j+l] phi[j] = r[l], l = 0..t. The Jacobian is
// nonsingular whenever phi has no reciprocal root pairs, which holds for a
// strictly minimum-phase starting point.
void polish(std::vector<double>& phi, const std::vector<double>& r) {
  const auto n = static_cast<Eigen::Index>(phi.size());
  for (int it = 0; it < 4 && factor_error(phi, r) > 1e-15; ++it) {
    Matrix J = Matrix::Zero(n, n);
    Vector f(n);
    for (Eigen::Index l = 0; l < n; ++l) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j + l < n; ++j) acc += phi[static_cast<std::size_t>(j + l)] * phi[static_cast<std::size_t>(j)];
      f(l) = acc - r[static_cast<std::size_t>(l)];
      for (Eigen::Index j = 0; j < n; ++j) {
        double d = 0.0;
        if (j + l < n) d += phi[static_cast<std::size_t>(j + l)];
        if (j - l >= 0) d += phi[static_cast<std::size_t>(j - l)];
        J(l, j) = d;
      }
    }
    const Vector step = J.fullPivLu().solve(f);
    if (!step.allFinite()) return;
    std::vector<double> trial = phi;
    for (Eigen::Index j = 0; j < n; ++j) trial[static_cast<std::size_t>(j)] -= step(j);
    if (factor_error(trial, r) >= factor_error(phi, r)) return;
    phi.swap(trial);
  }
}

}  // namespace

SpectralFactor spectral_factor(const ChannelSpec& spec) {
  const SpectralDensity sd = spectral_density(spec);
  const AutoCorr ac = autocorrelation(spec);

  std::size_t t = 0;
  bool any = false;
  for (std::size_t l = 0; l < ac.r.size(); ++l)
    if (ac.r[l] != 0.0) {
      t = l;
      any = true;
    }
  if (!any) return SpectralFactor{Polynomial{}, true};

  const std::vector<double> r(ac.r.begin(), ac.r.begin() + static_cast<long>(t) + 1);
  if (t == 0) return SpectralFactor{Polynomial{std::sqrt(r[0])}, false};

  // z^t S(z) is palindromic of degree 2t; its roots pair as (w, 1/w).
  std::vector<double> laurent(2 * t + 1);
  for (std::size_t j = 0; j <= 2 * t; ++j) laurent[j] = r[j > t ? j - t : t - j];
  const std::vector<std::complex<double>> roots = Polynomial(laurent).roots_in_z();

  double scale = 0.0;
  for (double v : r) scale += std::abs(v);
  std::vector<std::complex<double>> inside;
  for (const auto& w : roots) {
    const double dist = std::abs(std::abs(w) - 1.0);
    // A double zero on the circle splits into a pair ~sqrt(eps) away, so
    // near-circle roots are also judged by the density at their angle.
    if (dist <= kUnitCircleTol ||
        (dist <= 1e-4 && sd.on_unit_circle(std::arg(w)) <= 1e-14 * scale))
      throw MarginalFactorizationError("spectral density has a zero on the unit circle at angle " +
                                       std::to_string(std::arg(w)) + "; no strictly minimum-phase factor exists");
    if (std::abs(w) < 1.0) inside.push_back(w);
  }
  if (inside.size() != t)
    throw MarginalFactorizationError("spectral zeros do not split evenly across the unit circle");

  Polynomial monic = Polynomial::from_roots(inside);
  double ss = 0.0;
  for (double c : monic.coeffs()) ss += c * c;
  std::vector<double> phi = (std::sqrt(r[0] / ss) * monic).coeffs();
  polish(phi, r);
  if (phi[0] < 0.0)
    for (double& c : phi) c = -c;

  if (factor_error(phi, r) > 1e-10) throw NumericalError("spectral factorization roundtrip error above 1e-10");
  for (const auto& w : Polynomial(phi).roots_in_z())
    if (std::abs(w) >= 1.0 - kUnitCircleTol)
      throw MarginalFactorizationError("spectral factor is not strictly minimum phase");
  return SpectralFactor{Polynomial(std::move(phi)), false};
}

std::size_t delay_from_uniform(const ChannelSpec& spec, double u) {
  const auto& p = spec.pmf();
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) last_positive = i;
    cum += p[i];
    if (u < cum && p[i] > 0.0) return i;
  }
  // Rounding left cum slightly below 1.
  return last_positive;
}

std::size_t sample_delay(const ChannelSpec& spec, CounterRng& rng) {
  return delay_from_uniform(spec, rng.next_uniform());
}

}  // namespace msd
