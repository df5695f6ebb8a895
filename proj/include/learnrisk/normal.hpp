#pragma once

namespace learnrisk {

double NormalPdf(double x);
double NormalCdf(double x);
// Upper tail 1 - Phi(x), accurate for large positive x.
double NormalSf(double x);
double NormalQuantile(double p);

// Quantile of Normal(mu, sigma^2) truncated to [0, 1]. sigma == 0 returns
// clamp(mu, 0, 1). Throws for p outside (0, 1) or negative sigma.
double TruncatedQuantile(double p, double mu, double sigma);

struct QuantileGradient {
  double value = 0.0;
  double d_mu = 0.0;
  double d_sigma = 0.0;
};
QuantileGradient TruncatedQuantileGradient(double p, double mu, double sigma);

}  // namespace learnrisk
