#include "core/ratefit.hpp"

#include <cmath>
#include <stdexcept>

namespace stochls {

std::vector<LevelStats> level_stats(const std::vector<SummaryRow>& rows) {
  std::vector<LevelStats> out;
  std::vector<double> sums;
  for (const auto& r : rows) {
    size_t i = 0;
    while (i < out.size() && out[i].eps != r.eps) ++i;
    if (i == out.size()) {
      out.push_back({r.eps, 0.0, 0, 0});
      sums.push_back(0.0);
    }
    if (r.censored) {
      out[i].censored += 1;
    } else {
      out[i].used += 1;
      sums[i] += static_cast<double>(r.T);
    }
  }
  for (size_t i = 0; i < out.size(); ++i)
    out[i].mean_T = out[i].used > 0 ? sums[i] / static_cast<double>(out[i].used) : 0.0;
  return out;
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least squares needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("least squares needs distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

RateFit fit_rate(const std::vector<SummaryRow>& rows, Regime regime) {
  RateFit fit;
  fit.regime = regime;
  fit.levels = level_stats(rows);
  if (fit.levels.size() < 3) throw std::invalid_argument("rate fit needs at least 3 eps levels");
  std::vector<double> x, y;
  for (const auto& l : fit.levels) {
    if (l.used + l.censored < 10) fit.warnings.push_back("fewer than 10 seeds at eps " + std::to_string(l.eps));
    if (l.censored > 0)
      fit.warnings.push_back(std::to_string(l.censored) + " censored seeds at eps " + std::to_string(l.eps));
    if (l.used == 0) {
      fit.refused = true;
      fit.reason = "every seed censored at eps " + std::to_string(l.eps);
      return fit;
    }
    x.push_back(std::log(1.0 / l.eps));
    if (regime == Regime::strongly_convex) {
      y.push_back(l.mean_T);
    } else {
      if (!(l.mean_T > 0)) {
        fit.refused = true;
        fit.reason = "zero mean stopping time at eps " + std::to_string(l.eps);
        return fit;
      }
      y.push_back(std::log(l.mean_T));
    }
  }
  const LinearFit lf = least_squares(x, y);
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  fit.r_squared = lf.r_squared;
  return fit;
}

}  // namespace stochls
