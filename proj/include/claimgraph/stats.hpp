#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "claimgraph/common.hpp"

namespace claimgraph::stats {

/// Row-major n x k regressor matrix whose first column is the intercept,
/// plus the response.
struct DesignMatrix {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::string> names;  // k names, "const" first

  /// Prepends a column of ones to `columns` (each of length y.size()).
  static DesignMatrix with_intercept(const std::vector<std::vector<double>>& columns,
                                     std::vector<double> y, std::vector<std::string> names);

  [[nodiscard]] double at(std::size_t row, std::size_t col) const { return x[row * k + col]; }
};

struct Coefficient {
  std::string name;
  double estimate;
  double standard_error;
  double t;
  double p;
};

struct OlsResult {
  std::vector<Coefficient> coefficients;
  std::vector<double> residuals;
  double rss = 0.0;
  double sigma2 = 0.0;
  double r_squared = 0.0;
  double adjusted_r_squared = 0.0;
  std::size_t n_observations = 0;

  [[nodiscard]] const Coefficient& coefficient(const std::string& name) const;
};

/// Least squares via Householder QR. Standard errors come from
/// sigma^2 (R^T R)^-1 with sigma^2 = RSS / (n - k). Throws on rank
/// deficiency or n <= k.
OlsResult ols(const DesignMatrix& design);

struct WelchResult {
  double t;
  double df;
  double p;  // two-sided
};

/// Welch's unequal-variance t-test (mean_a - mean_b).
WelchResult welch_t(std::span<const double> a, std::span<const double> b);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

/// Add-one two-sided permutation p-value. A replicate counts as at least as
/// extreme when its distance from the pooled mean (replicates plus observed)
/// is >= the observed distance. Needs >= 100 replicates.
double permutation_p(double observed, std::span<const double> replicates);

struct Summary {
  double mean;
  std::optional<double> sd;  // sample SD (n - 1)
  std::optional<double> se;  // sd / sqrt(n)
  std::size_t n;
};

Summary mean_sd_se(std::span<const double> sample);

struct Correlation {
  double rho;
  double p;  // two-sided, t approximation with n - 2 df
};

Correlation spearman(std::span<const double> x, std::span<const double> y);

/// Adjusted Rand index between two labelings of the same items.
double adjusted_rand_index(std::span<const long long> a, std::span<const long long> b);

/// Kolmogorov-Smirnov distance between the sample and Uniform(0, 1).
double ks_uniform_statistic(std::vector<double> sample);

/// Asymptotic one-sample KS critical value at level alpha.
double ks_critical_value(std::size_t n, double alpha);

}  // namespace claimgraph::stats
