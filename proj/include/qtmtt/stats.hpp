#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace qtmtt {

namespace detail {

// Continued-fraction evaluation for the regularized incomplete beta function
// (modified Lentz method).
inline double betacf(double a, double b, double x)
{
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kFpMin = 1e-300;

  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("betacf: continued fraction failed to converge");
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double incomplete_beta(double a, double b, double x)
{
  if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("incomplete_beta: a, b must be > 0");
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("incomplete_beta: x must be in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log(1.0 - x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * detail::betacf(a, b, x) / a;
  return 1.0 - bt * detail::betacf(b, a, 1.0 - x) / b;
}

/// One-sided Student-t quantile: the t with P(T <= t) = p at `df` degrees of
/// freedom. Inverted from I_x(df/2, 1/2) by bisection.
inline double student_t_quantile(double p, int df)
{
  if (df < 1) throw std::invalid_argument("student_t_quantile: df must be >= 1");
  if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("student_t_quantile: p must be in (0,1)");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -student_t_quantile(1.0 - p, df);

  // For t >= 0: 1 - CDF(t) = I_x(df/2, 1/2) / 2 with x = df / (df + t^2).
  const double target = 2.0 * (1.0 - p);
  double lo = 0.0, hi = 1.0;  // I_x grows with x; solve I_x = target
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (incomplete_beta(0.5 * df, 0.5, mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  const double x = 0.5 * (lo + hi);
  return std::sqrt(df * (1.0 - x) / x);
}

/// Quartiles by rank interpolation at p*(n+1) (the exclusive convention).
/// Input must be sorted.
inline double quantile_exclusive(const std::vector<double>& sorted, double p)
{
  const std::size_t n = sorted.size();
  if (n == 0) throw std::invalid_argument("quantile_exclusive: empty input");
  double rank = p * double(n + 1);
  rank = std::clamp(rank, 1.0, double(n));
  const std::size_t lo = std::size_t(rank) - 1;
  const double frac = rank - double(lo + 1);
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

/// Values surviving Tukey's fences at Q1 - 1.5 IQR and Q3 + 1.5 IQR.
inline std::vector<double> tukey_filter(const std::vector<double>& values)
{
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double q1 = quantile_exclusive(sorted, 0.25);
  const double q3 = quantile_exclusive(sorted, 0.75);
  const double iqr = q3 - q1;
  const double lo = q1 - 1.5 * iqr, hi = q3 + 1.5 * iqr;
  std::vector<double> out;
  for (double v : values)
    if (v >= lo && v <= hi) out.push_back(v);
  return out;
}

/// Adaptive timing protocol: measurements repeat until the two-sided
/// confidence half-width falls below beta times the mean,
///   2 * (sigma / sqrt(m)) * t_alpha(m - 1) < beta * mean,
/// with Tukey outlier filtering once more than 8 samples have accumulated.
struct TimingSeries {
  std::vector<double> measurements;  // seconds, consumed before the callback
  double alpha = 0.99;
  double beta = 0.01;
  int min_m = 4;
  int max_m = 64;
};

struct RobustMeanResult {
  double mean = 0.0;
  int measurements_taken = 0;
  int retained = 0;
  bool converged = false;
};

/// Runs the protocol over the preloaded series, pulling further measurements
/// from `next_measurement` as needed. A drained callback (or none) ends the
/// run unconverged rather than raising.
inline RobustMeanResult robust_mean_time(
    const TimingSeries& series,
    const std::function<std::optional<double>()>& next_measurement = nullptr)
{
  if (series.min_m < 2 || series.max_m < series.min_m)
    throw std::invalid_argument("robust_mean_time: need 2 <= min_m <= max_m");
  if (series.beta <= 0.0 || series.alpha <= 0.5 || series.alpha >= 1.0)
    throw std::invalid_argument("robust_mean_time: bad alpha/beta");

  std::vector<double> taken;
  std::size_t preloaded = 0;
  auto pull = [&]() -> bool {
    if (preloaded < series.measurements.size()) {
      taken.push_back(series.measurements[preloaded++]);
      return true;
    }
    if (!next_measurement) return false;
    const std::optional<double> v = next_measurement();
    if (!v) return false;
    taken.push_back(*v);
    return true;
  };

  auto finish = [&](const std::vector<double>& kept, bool ok) {
    RobustMeanResult r;
    r.measurements_taken = int(taken.size());
    r.retained = int(kept.size());
    double s = 0.0;
    for (double v : kept) s += v;
    r.mean = kept.empty() ? 0.0 : s / double(kept.size());
    r.converged = ok;
    return r;
  };

  while (true) {
    if (int(taken.size()) < series.min_m) {
      if (pull()) continue;
      return finish(taken, false);
    }
    std::vector<double> kept = int(taken.size()) > 8 ? tukey_filter(taken) : taken;
    const int m = int(kept.size());
    if (m >= 2) {
      double mean = 0.0;
      for (double v : kept) mean += v;
      mean /= m;
      double ss = 0.0;
      for (double v : kept) ss += (v - mean) * (v - mean);
      const double sd = std::sqrt(ss / (m - 1));
      const double half = 2.0 * (sd / std::sqrt(double(m))) *
                          student_t_quantile(series.alpha, m - 1);
      if (half < series.beta * mean) return finish(kept, true);
    }
    if (int(taken.size()) >= series.max_m) return finish(kept, false);
    if (!pull()) return finish(kept, false);
  }
}

}  // namespace qtmtt
