#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qtmtt {

/// Encoding-time saving of a test run against its anchor.
inline double ets(double t_anchor, double t_test)
{
  if (t_anchor <= 0.0) throw std::invalid_argument("ets: anchor time must be positive");
  return (t_anchor - t_test) / t_anchor;
}

/// Acceleration factor equivalent to a time saving: 1 / (1 - ETS).
inline double eta(double ets_value)
{
  if (ets_value >= 1.0) throw std::invalid_argument("eta: time saving must be below 1");
  return 1.0 / (1.0 - ets_value);
}

struct TimeBreakdown {
  double t_enc = 0.0;
  double t_net = 0.0;
  double t_post = 0.0;
};

/// Share of the pipeline spent outside the encoder proper.
inline double overhead_rho(const TimeBreakdown& b)
{
  if (b.t_enc < 0.0 || b.t_net < 0.0 || b.t_post < 0.0)
    throw std::invalid_argument("overhead_rho: negative time component");
  const double total = b.t_enc + b.t_net + b.t_post;
  if (total <= 0.0) throw std::invalid_argument("overhead_rho: empty breakdown");
  return (b.t_net + b.t_post) / total;
}

struct RhoSummary {
  double mean_of_rho = 0.0;  // average of per-breakdown overhead shares
  double rho_of_sums = 0.0;  // overhead share of the summed breakdown
};

/// The two aggregations differ whenever breakdown magnitudes differ; both are
/// reported so callers can pick the convention they need.
inline RhoSummary mean_overhead_rho(const std::vector<TimeBreakdown>& bs)
{
  if (bs.empty()) throw std::invalid_argument("mean_overhead_rho: empty input");
  RhoSummary s;
  TimeBreakdown sum;
  for (const TimeBreakdown& b : bs) {
    s.mean_of_rho += overhead_rho(b);
    sum.t_enc += b.t_enc;
    sum.t_net += b.t_net;
    sum.t_post += b.t_post;
  }
  s.mean_of_rho /= double(bs.size());
  s.rho_of_sums = overhead_rho(sum);
  return s;
}

// ---- BD-rate ----

struct RdPoint {
  double bitrate = 0.0;  // kbps
  double psnr = 0.0;     // dB
};

enum class BdInterp {
  Auto,           // NaturalCubic for exactly 4 points, MonotoneCubic beyond
  NaturalCubic,
  MonotoneCubic,  // Fritsch-Carlson, shape preserving
};

namespace detail {

struct CubicSegment {
  double x0 = 0.0, x1 = 0.0;
  double c0 = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0;  // in powers of (x - x0)

  double integral(double a, double b) const
  {
    auto anti = [&](double t) {
      return ((c3 / 4.0 * t + c2 / 3.0) * t + c1 / 2.0) * t * t + c0 * t;
    };
    return anti(b - x0) - anti(a - x0);
  }
};

inline std::vector<CubicSegment> natural_cubic(const std::vector<double>& x,
                                               const std::vector<double>& y)
{
  const int n = int(x.size());
  std::vector<double> h(n - 1);
  for (int i = 0; i + 1 < n; ++i) h[i] = x[i + 1] - x[i];

  // Second derivatives with natural ends, Thomas solve.
  std::vector<double> m(n, 0.0);
  if (n > 2) {
    std::vector<double> diag(n - 2), rhs(n - 2), upper(n - 2);
    for (int i = 1; i + 1 < n; ++i) {
      diag[i - 1] = 2.0 * (h[i - 1] + h[i]);
      upper[i - 1] = h[i];
      rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    for (int i = 1; i < n - 2; ++i) {
      const double w = h[i] / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    for (int i = n - 3; i >= 0; --i) {
      double v = rhs[i];
      if (i + 1 < n - 2) v -= upper[i] * m[i + 2];
      m[i + 1] = v / diag[i];
    }
  }

  std::vector<CubicSegment> segs(n - 1);
  for (int i = 0; i + 1 < n; ++i) {
    CubicSegment& s = segs[i];
    s.x0 = x[i];
    s.x1 = x[i + 1];
    s.c0 = y[i];
    s.c1 = (y[i + 1] - y[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
    s.c2 = m[i] / 2.0;
    s.c3 = (m[i + 1] - m[i]) / (6.0 * h[i]);
  }
  return segs;
}

inline std::vector<CubicSegment> monotone_cubic(const std::vector<double>& x,
                                                const std::vector<double>& y)
{
  const int n = int(x.size());
  std::vector<double> h(n - 1), delta(n - 1), d(n);
  for (int i = 0; i + 1 < n; ++i) {
    h[i] = x[i + 1] - x[i];
    delta[i] = (y[i + 1] - y[i]) / h[i];
  }
  for (int i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) {
      d[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  auto edge = [](double h0, double h1, double d0, double d1) {
    double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0.0)
      s = 0.0;
    else if (d0 * d1 < 0.0 && std::fabs(s) > 3.0 * std::fabs(d0))
      s = 3.0 * d0;
    return s;
  };
  d[0] = n > 2 ? edge(h[0], h[1], delta[0], delta[1]) : delta[0];
  d[n - 1] = n > 2 ? edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]) : delta[n - 2];

  std::vector<CubicSegment> segs(n - 1);
  for (int i = 0; i + 1 < n; ++i) {
    CubicSegment& s = segs[i];
    s.x0 = x[i];
    s.x1 = x[i + 1];
    s.c0 = y[i];
    s.c1 = d[i];
    s.c2 = (3.0 * delta[i] - 2.0 * d[i] - d[i + 1]) / h[i];
    s.c3 = (d[i] + d[i + 1] - 2.0 * delta[i]) / (h[i] * h[i]);
  }
  return segs;
}

inline double integrate(const std::vector<CubicSegment>& segs, double lo, double hi)
{
  double sum = 0.0;
  for (const CubicSegment& s : segs) {
    const double a = std::max(lo, s.x0);
    const double b = std::min(hi, s.x1);
    if (a < b) sum += s.integral(a, b);
  }
  return sum;
}

inline std::vector<CubicSegment> fit_log_rate(std::vector<RdPoint> pts, BdInterp interp,
                                              const char* which)
{
  if (pts.size() < 4)
    throw std::invalid_argument(std::string("bd_rate: ") + which + " needs at least 4 points");
  std::sort(pts.begin(), pts.end(),
            [](const RdPoint& a, const RdPoint& b) { return a.psnr < b.psnr; });
  std::vector<double> x, y;
  for (const RdPoint& p : pts) {
    if (p.bitrate <= 0.0)
      throw std::invalid_argument(std::string("bd_rate: ") + which + " has non-positive bitrate");
    if (!x.empty() && p.psnr <= x.back())
      throw std::invalid_argument(std::string("bd_rate: ") + which + " has duplicate PSNR");
    x.push_back(p.psnr);
    y.push_back(std::log10(p.bitrate));
  }
  const bool natural =
      interp == BdInterp::NaturalCubic || (interp == BdInterp::Auto && pts.size() == 4);
  return natural ? natural_cubic(x, y) : monotone_cubic(x, y);
}

}  // namespace detail

/// Average bitrate difference in percent between test and anchor RD curves:
/// log10(bitrate) is interpolated piecewise-cubically over PSNR, averaged
/// over the common PSNR range, and mapped back from the log domain.
inline double bd_rate(const std::vector<RdPoint>& anchor, const std::vector<RdPoint>& test,
                      BdInterp interp = BdInterp::Auto)
{
  const auto sa = detail::fit_log_rate(anchor, interp, "anchor");
  const auto st = detail::fit_log_rate(test, interp, "test");
  const double lo = std::max(sa.front().x0, st.front().x0);
  const double hi = std::min(sa.back().x1, st.back().x1);
  if (lo >= hi) throw std::invalid_argument("bd_rate: PSNR ranges do not overlap");
  const double avg_diff =
      (detail::integrate(st, lo, hi) - detail::integrate(sa, lo, hi)) / (hi - lo);
  return (std::pow(10.0, avg_diff) - 1.0) * 100.0;
}

// ---- configuration-set deltas ----

struct DeltaMetrics {
  double delta_ets = 0.0;   // percent
  double delta_bdbr = 0.0;  // percent
};

/// Relative change of summed time savings and of BD-rate when moving from the
/// basic QP set to the full set. The sums are balanced by the size ratio of
/// the two sets, so identical per-QP values give a delta of zero.
inline DeltaMetrics delta_metrics(const std::map<int, double>& ets_total,
                                  const std::map<int, double>& ets_basic, double bdbr_total,
                                  double bdbr_basic)
{
  if (ets_basic.empty()) throw std::invalid_argument("delta_metrics: empty basic set");
  for (const auto& [qp, unused] : ets_basic)
    if (!ets_total.count(qp))
      throw std::invalid_argument("delta_metrics: basic QP " + std::to_string(qp) +
                                  " missing from total set");
  if (bdbr_basic == 0.0) throw std::invalid_argument("delta_metrics: zero basic BD-rate");
  double sum_total = 0.0, sum_basic = 0.0;
  for (const auto& [qp, v] : ets_total) sum_total += v;
  for (const auto& [qp, v] : ets_basic) sum_basic += v;
  const double factor = double(ets_total.size()) / double(ets_basic.size());
  if (sum_basic == 0.0) throw std::invalid_argument("delta_metrics: zero basic ETS sum");
  DeltaMetrics d;
  d.delta_ets = (sum_total / (factor * sum_basic) - 1.0) * 100.0;
  d.delta_bdbr = (bdbr_total / bdbr_basic - 1.0) * 100.0;
  return d;
}

}  // namespace qtmtt
