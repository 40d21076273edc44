#include "claimgraph/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace claimgraph::stats {

DesignMatrix DesignMatrix::with_intercept(const std::vector<std::vector<double>>& columns,
                                          std::vector<double> y, std::vector<std::string> names) {
  DesignMatrix d;
  d.n = y.size();
  d.k = columns.size() + 1;
  if (names.size() == columns.size()) {
    names.insert(names.begin(), "const");
  }
  if (names.size() != d.k) {
    throw Error("design matrix needs one name per column");
  }
  d.names = std::move(names);
  d.x.resize(d.n * d.k);
  for (std::size_t i = 0; i < d.n; ++i) {
    d.x[i * d.k] = 1.0;
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j].size() != d.n) {
        throw Error("design matrix column length mismatch");
      }
      d.x[i * d.k + j + 1] = columns[j][i];
    }
  }
  d.y = std::move(y);
  return d;
}

const Coefficient& OlsResult::coefficient(const std::string& name) const {
  for (const auto& c : coefficients) {
    if (c.name == name) {
      return c;
    }
  }
  throw Error("no coefficient named " + name);
}

OlsResult ols(const DesignMatrix& design) {
  const std::size_t n = design.n;
  const std::size_t k = design.k;
  if (design.x.size() != n * k || design.y.size() != n) {
    throw Error("design matrix shape mismatch");
  }
  if (n <= k) {
    throw Error("ols needs more observations than parameters");
  }
  for (double v : design.x) {
    if (!std::isfinite(v)) {
      throw Error("non-finite entry in design matrix");
    }
  }
  for (double v : design.y) {
    if (!std::isfinite(v)) {
      throw Error("non-finite response");
    }
  }

  // Column-major working copy; Householder reflections turn it into R.
  std::vector<double> a(n * k);
  std::vector<double> col_norm(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      a[j * n + i] = design.at(i, j);
      col_norm[j] += design.at(i, j) * design.at(i, j);
    }
    col_norm[j] = std::sqrt(col_norm[j]);
  }
  std::vector<double> qty = design.y;
  std::vector<double> v(n);

  for (std::size_t j = 0; j < k; ++j) {
    double* col = &a[j * n];
    double norm = 0.0;
    for (std::size_t i = j; i < n; ++i) {
      norm += col[i] * col[i];
    }
    norm = std::sqrt(norm);
    if (norm <= 1e-10 * std::max(col_norm[j], 1e-300)) {
      throw Error("rank-deficient design matrix (column " + design.names[j] + ")");
    }
    const double alpha = col[j] > 0 ? -norm : norm;
    double vnorm2 = 0.0;
    for (std::size_t i = j; i < n; ++i) {
      v[i] = col[i];
    }
    v[j] -= alpha;
    for (std::size_t i = j; i < n; ++i) {
      vnorm2 += v[i] * v[i];
    }
    auto reflect = [&](double* target) {
      double dot = 0.0;
      for (std::size_t i = j; i < n; ++i) {
        dot += v[i] * target[i];
      }
      const double scale = 2.0 * dot / vnorm2;
      for (std::size_t i = j; i < n; ++i) {
        target[i] -= scale * v[i];
      }
    };
    for (std::size_t c = j; c < k; ++c) {
      reflect(&a[c * n]);
    }
    reflect(qty.data());
  }
  auto r_at = [&](std::size_t row, std::size_t col) { return a[col * n + row]; };

  // Back substitution R beta = (Q^T y)[0..k).
  std::vector<double> beta(k);
  for (std::size_t jj = k; jj-- > 0;) {
    double s = qty[jj];
    for (std::size_t c = jj + 1; c < k; ++c) {
      s -= r_at(jj, c) * beta[c];
    }
    beta[jj] = s / r_at(jj, jj);
  }

  // R^-1 (upper triangular), then diag((R^T R)^-1) = row sums of squares.
  std::vector<double> rinv(k * k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    rinv[j * k + j] = 1.0 / r_at(j, j);
    for (std::size_t i = j; i-- > 0;) {
      double s = 0.0;
      for (std::size_t m = i + 1; m <= j; ++m) {
        s += r_at(i, m) * rinv[m * k + j];
      }
      rinv[i * k + j] = -s / r_at(i, i);
    }
  }

  OlsResult out;
  out.n_observations = n;
  out.residuals.resize(n);
  double mean_y = 0.0;
  for (double yi : design.y) {
    mean_y += yi;
  }
  mean_y /= static_cast<double>(n);
  double tss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double fit = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      fit += design.at(i, j) * beta[j];
    }
    out.residuals[i] = design.y[i] - fit;
    out.rss += out.residuals[i] * out.residuals[i];
    tss += (design.y[i] - mean_y) * (design.y[i] - mean_y);
  }
  const double dof = static_cast<double>(n - k);
  out.sigma2 = out.rss / dof;
  out.r_squared = tss > 0.0 ? 1.0 - out.rss / tss : 1.0;
  out.adjusted_r_squared =
      1.0 - (1.0 - out.r_squared) * static_cast<double>(n - 1) / dof;
  for (std::size_t j = 0; j < k; ++j) {
    double diag = 0.0;
    for (std::size_t m = j; m < k; ++m) {
      diag += rinv[j * k + m] * rinv[j * k + m];
    }
    const double se = std::sqrt(out.sigma2 * diag);
    double t = 0.0;
    double p = 1.0;
    if (se > 0.0) {
      t = beta[j] / se;
      p = student_t_two_sided_p(t, dof);
    } else if (beta[j] != 0.0) {
      t = std::copysign(std::numeric_limits<double>::infinity(), beta[j]);
      p = 0.0;
    }
    out.coefficients.push_back({design.names[j], beta[j], se, t, p});
  }
  return out;
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 1000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) {
    d = kTiny;
  }
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) {
      d = kTiny;
    }
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) {
      c = kTiny;
    }
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) {
      d = kTiny;
    }
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) {
      c = kTiny;
    }
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) {
      return h;
    }
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) {
    return 0.0;
  }
  if (x >= 1.0) {
    return 1.0;
  }
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) {
    throw Error("degrees of freedom must be positive");
  }
  if (std::isinf(t)) {
    return 0.0;
  }
  const double x = df / (df + t * t);
  return std::clamp(incomplete_beta(df / 2.0, 0.5, x), 0.0, 1.0);
}

WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error("welch_t needs at least 2 observations per sample");
  }
  const auto sa = mean_sd_se(a);
  const auto sb = mean_sd_se(b);
  const double va = *sa.sd * *sa.sd / static_cast<double>(a.size());
  const double vb = *sb.sd * *sb.sd / static_cast<double>(b.size());
  if (va + vb == 0.0) {
    throw Error("welch_t needs nonzero variance in at least one sample");
  }
  const double t = (sa.mean - sb.mean) / std::sqrt(va + vb);
  const double df = (va + vb) * (va + vb) /
                    (va * va / static_cast<double>(a.size() - 1) +
                     vb * vb / static_cast<double>(b.size() - 1));
  return {t, df, student_t_two_sided_p(t, df)};
}

double permutation_p(double observed, std::span<const double> replicates) {
  if (replicates.size() < 100) {
    throw Error("permutation_p needs at least 100 replicates");
  }
  double sum = observed;
  for (double r : replicates) {
    sum += r;
  }
  const double center = sum / static_cast<double>(replicates.size() + 1);
  const double obs_dev = std::abs(observed - center);
  const double slack = 1e-12 * std::max(1.0, std::abs(center));
  std::size_t extreme = 0;
  for (double r : replicates) {
    if (std::abs(r - center) >= obs_dev - slack) {
      ++extreme;
    }
  }
  return static_cast<double>(1 + extreme) / static_cast<double>(1 + replicates.size());
}

Summary mean_sd_se(std::span<const double> sample) {
  if (sample.empty()) {
    throw Error("empty sample");
  }
  const auto n = static_cast<double>(sample.size());
  double sum = 0.0;
  for (double x : sample) {
    sum += x;
  }
  Summary s{sum / n, std::nullopt, std::nullopt, sample.size()};
  if (sample.size() >= 2) {
    double ss = 0.0;
    for (double x : sample) {
      ss += (x - s.mean) * (x - s.mean);
    }
    s.sd = std::sqrt(ss / (n - 1.0));
    s.se = *s.sd / std::sqrt(n);
  }
  return s;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
      ++j;
    }
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t m = i; m <= j; ++m) {
      ranks[order[m]] = rank;
    }
    i = j + 1;
  }
  return ranks;
}

}  // namespace

Correlation spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) {
    throw Error("spearman needs two equal-length samples of size >= 3");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error("spearman undefined for a constant sample");
  }
  const double rho = sxy / std::sqrt(sxx * syy);
  if (std::abs(rho) >= 1.0) {
    return {rho, 0.0};
  }
  const double t = rho * std::sqrt((n - 2.0) / (1.0 - rho * rho));
  return {rho, student_t_two_sided_p(t, n - 2.0)};
}

double adjusted_rand_index(std::span<const long long> a, std::span<const long long> b) {
  if (a.size() != b.size()) {
    throw Error("labelings differ in length");
  }
  auto comb2 = [](double x) { return x * (x - 1.0) / 2.0; };
  std::map<std::pair<long long, long long>, double> joint;
  std::map<long long, double> row;
  std::map<long long, double> col;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    row[a[i]] += 1.0;
    col[b[i]] += 1.0;
  }
  double index = 0.0;
  for (const auto& [key, c] : joint) {
    index += comb2(c);
  }
  double sum_a = 0.0;
  double sum_b = 0.0;
  for (const auto& [key, c] : row) {
    sum_a += comb2(c);
  }
  for (const auto& [key, c] : col) {
    sum_b += comb2(c);
  }
  const double total = comb2(static_cast<double>(a.size()));
  const double expected = total > 0.0 ? sum_a * sum_b / total : 0.0;
  const double max_index = (sum_a + sum_b) / 2.0;
  if (max_index == expected) {
    return 1.0;
  }
  return (index - expected) / (max_index - expected);
}

double ks_uniform_statistic(std::vector<double> sample) {
  if (sample.empty()) {
    throw Error("empty sample");
  }
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double x = std::clamp(sample[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - x, x - static_cast<double>(i) / n});
  }
  return d;
}

double ks_critical_value(std::size_t n, double alpha) {
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

}  // namespace claimgraph::stats
