#include "tailforge/empirical.hpp"

#include <algorithm>
#include <cmath>

#include "tailforge/error.hpp"

namespace tailforge {

Sample::Sample(std::vector<double> values) : values_(std::move(values)) {
  require(!values_.empty(), "sample must not be empty");
  for (double v : values_) require(std::isfinite(v), "sample values must be finite");
  std::stable_sort(values_.begin(), values_.end());
}

ExceedanceSet exceedances(const Sample& sample, std::size_t k, ExceedanceMode mode) {
  const std::size_t n = sample.size();
  ExceedanceSet out;
  out.k = k;
  out.mode = mode;
  out.values.resize(k);
  if (mode == ExceedanceMode::difference) {
    require(k >= 2 && k <= n, "difference mode needs 2 <= k <= n");
    out.threshold = (k == n) ? 0.0 : sample.order_stat(n - k);
    if (k == n) require(sample.min() >= 0.0, "k = n needs nonnegative data (threshold 0)");
    for (std::size_t j = 1; j <= k; ++j) out.values[j - 1] = sample.order_stat(n - j + 1) - out.threshold;
  } else {
    require(k >= 2 && k <= n - 1, "ratio mode needs 2 <= k <= n-1");
    out.threshold = sample.order_stat(n - k);
    if (!(out.threshold > 0.0)) fail(ErrorKind::infeasible, "ratio mode needs a positive threshold");
    for (std::size_t j = 1; j <= k; ++j) out.values[j - 1] = sample.order_stat(n - j + 1) / out.threshold;
  }
  return out;
}

double hill(const Sample& sample, std::size_t k) {
  const std::size_t n = sample.size();
  require(k >= 1 && k <= n - 1, "hill needs 1 <= k <= n-1");
  const double threshold = sample.order_stat(n - k);
  if (!(threshold > 0.0)) fail(ErrorKind::infeasible, "hill needs a positive threshold");
  const double log_t = std::log(threshold);
  double sum = 0.0;
  for (std::size_t j = 1; j <= k; ++j) sum += std::log(sample.order_stat(n - j + 1)) - log_t;
  return sum / static_cast<double>(k);
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> values) : sorted_(std::move(values)) {
  require(!sorted_.empty(), "empirical cdf needs at least one value");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double u) const {
  auto it = std::upper_bound(sorted_.begin(), sorted_.end(), u);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

EmpiricalCdf empirical_cdf(std::span<const double> values) {
  return EmpiricalCdf(std::vector<double>(values.begin(), values.end()));
}

namespace {

// Smooths one optional series; entries lacking a value are left untouched
// and do not contribute.
template <typename Get>
std::vector<std::optional<double>> smooth(const std::vector<PathEntry>& e, std::size_t window, Get get) {
  const std::size_t n = e.size();
  const std::size_t half = window / 2;
  std::vector<std::optional<double>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!get(e[i])) continue;
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t j = lo; j <= hi; ++j) {
      if (auto v = get(e[j])) {
        sum += *v;
        ++cnt;
      }
    }
    out[i] = sum / static_cast<double>(cnt);
  }
  return out;
}

}  // namespace

KPath moving_average(const KPath& path, std::size_t window) {
  require(window % 2 == 1, "moving average window must be odd");
  require(window <= path.entries.size(), "moving average window exceeds path length");
  if (window == 1) return path;
  KPath out = path;
  const auto& e = path.entries;
  auto xi = smooth(e, window, [](const PathEntry& p) { return std::optional<double>(p.xi); });
  auto sigma = smooth(e, window, [](const PathEntry& p) { return p.sigma; });
  auto tau = smooth(e, window, [](const PathEntry& p) { return p.tau; });
  auto delta = smooth(e, window, [](const PathEntry& p) { return p.delta; });
  auto tail = smooth(e, window, [](const PathEntry& p) { return p.tail_prob; });
  for (std::size_t i = 0; i < e.size(); ++i) {
    out.entries[i].xi = *xi[i];
    out.entries[i].sigma = sigma[i];
    out.entries[i].tau = tau[i];
    out.entries[i].delta = delta[i];
    out.entries[i].tail_prob = tail[i];
  }
  return out;
}

}  // namespace tailforge
