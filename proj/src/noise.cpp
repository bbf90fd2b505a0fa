#include "spme/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace spme {

namespace {

// Philox 4x32-10 (Salmon et al., SC 2011).
constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;

inline std::uint32_t mulhi(std::uint32_t a, std::uint32_t b, std::uint32_t* lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  *lo = static_cast<std::uint32_t>(p);
  return static_cast<std::uint32_t>(p >> 32);
}

struct Ctr4 {
  std::uint32_t v[4];
};

Ctr4 philox4x32_10(Ctr4 ctr, std::uint32_t k0, std::uint32_t k1) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, lo1;
    const std::uint32_t hi0 = mulhi(kPhiloxM0, ctr.v[0], &lo0);
    const std::uint32_t hi1 = mulhi(kPhiloxM1, ctr.v[2], &lo1);
    Ctr4 next;
    next.v[0] = hi1 ^ ctr.v[1] ^ k0;
    next.v[1] = lo1;
    next.v[2] = hi0 ^ ctr.v[3] ^ k1;
    next.v[3] = lo0;
    ctr = next;
    k0 += kPhiloxW32A;
    k1 += kPhiloxW32B;
  }
  return ctr;
}

}  // namespace

double counter_uniform(std::uint64_t seed, std::uint32_t path, std::uint32_t step,
                       std::uint32_t channel) {
  Ctr4 ctr{{path, step, channel, 0x53504d45u}};  // last word: stream domain tag
  const Ctr4 out = philox4x32_10(ctr, static_cast<std::uint32_t>(seed),
                                 static_cast<std::uint32_t>(seed >> 32));
  const std::uint64_t bits =
      (static_cast<std::uint64_t>(out.v[0]) << 32) | out.v[1];
  // 53 significant bits, strictly inside (0,1).
  return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

double inverse_normal_cdf(double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("inverse_normal_cdf: u outside (0,1)");
  // Acklam's rational approximation followed by one Halley step against erfc.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (u < plow) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - plow) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / M_SQRT2) - u;
  const double v = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x -= v / (1.0 + 0.5 * x * v);
  return x;
}

double counter_gaussian(std::uint64_t seed, std::uint32_t path, std::uint32_t step,
                        std::uint32_t channel) {
  return inverse_normal_cdf(counter_uniform(seed, path, step, channel));
}

NoiseStream::NoiseStream(const NoiseModel& model, std::uint32_t path_index)
    : model_(model), path_(path_index), sqrt_dt_(std::sqrt(model.dt)) {
  if (model.dt <= 0.0) throw std::invalid_argument("noise: dt must be positive");
}

NoiseIncrements NoiseStream::increments(int step) const {
  if (step < 0 || step >= model_.n_steps)
    throw std::out_of_range("noise: step outside [0, n_steps)");
  NoiseIncrements inc;
  inc.beta.resize(model_.d_transport);
  inc.w.resize(model_.k_noise);
  const auto s = static_cast<std::uint32_t>(step);
  for (int i = 0; i < model_.d_transport; ++i)
    inc.beta[i] = sqrt_dt_ * counter_gaussian(model_.seed, path_, s, static_cast<std::uint32_t>(i));
  for (int k = 0; k < model_.k_noise; ++k)
    inc.w[k] = sqrt_dt_ * counter_gaussian(model_.seed, path_, s,
                                           static_cast<std::uint32_t>(model_.d_transport + k));
  return inc;
}

NoiseStream make_stream(const NoiseModel& model, int path_index) {
  if (path_index < 0) throw std::invalid_argument("noise: path_index must be >= 0");
  return NoiseStream(model, static_cast<std::uint32_t>(path_index));
}

}  // namespace spme
