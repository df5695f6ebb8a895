#include "learnrisk/normal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "learnrisk/error.hpp"

namespace learnrisk {

double NormalPdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double NormalSf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double NormalQuantile(double p) {
  if (!(p > 0.0 && p < 1.0)) Fail(ErrorKind::kInvalidArgument, "normal quantile needs p in (0,1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

namespace {

struct Standardized {
  double a;
  double b;
  double z;
};

// Locates the standard-normal point z whose CDF sits at fraction p between
// Phi(a) and Phi(b), working in the upper tail when that keeps precision.
Standardized Locate(double p, double mu, double sigma) {
  const double a = (0.0 - mu) / sigma;
  const double b = (1.0 - mu) / sigma;
  const double lower = (1.0 - p) * NormalCdf(a) + p * NormalCdf(b);
  double z;
  if (lower <= 0.5) {
    z = lower > 0.0 ? NormalQuantile(lower) : a;
  } else {
    const double upper = (1.0 - p) * NormalSf(a) + p * NormalSf(b);
    z = upper > 0.0 ? -NormalQuantile(upper) : b;
  }
  return {a, b, std::clamp(z, a, b)};
}

void CheckArguments(double p, double sigma) {
  if (!(p > 0.0 && p < 1.0)) {
    Fail(ErrorKind::kInvalidArgument, "truncated quantile needs p in (0,1)");
  }
  if (!(sigma >= 0.0)) Fail(ErrorKind::kInvalidArgument, "sigma must be non-negative");
}

}  // namespace

double TruncatedQuantile(double p, double mu, double sigma) {
  CheckArguments(p, sigma);
  if (sigma == 0.0) return std::clamp(mu, 0.0, 1.0);
  const Standardized s = Locate(p, mu, sigma);
  return std::clamp(mu + sigma * s.z, 0.0, 1.0);
}

QuantileGradient TruncatedQuantileGradient(double p, double mu, double sigma) {
  CheckArguments(p, sigma);
  if (sigma == 0.0) {
    // One-sided limit as sigma -> 0 with mu strictly inside the interval.
    return {std::clamp(mu, 0.0, 1.0), 1.0, NormalQuantile(p)};
  }
  const Standardized s = Locate(p, mu, sigma);
  // phi(a)/phi(z) and phi(b)/phi(z) without underflow.
  const double ra = std::exp(0.5 * (s.z * s.z - s.a * s.a));
  const double rb = std::exp(0.5 * (s.z * s.z - s.b * s.b));
  QuantileGradient g;
  g.value = std::clamp(mu + sigma * s.z, 0.0, 1.0);
  g.d_mu = 1.0 - ((1.0 - p) * ra + p * rb);
  g.d_sigma = s.z + ((1.0 - p) * ra * mu - p * rb * (1.0 - mu)) / sigma;
  return g;
}

}  // namespace learnrisk
