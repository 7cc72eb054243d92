#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tailforge {

// Ordered sample X_{1,n} <= ... <= X_{n,n}. Immutable once built.
class Sample {
 public:
  Sample() = default;
  // Sorts (stable) and validates finiteness.
  explicit Sample(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  // i-th order statistic, 1-based as in X_{i,n}.
  double order_stat(std::size_t i) const { return values_[i - 1]; }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }

 private:
  std::vector<double> values_;
};

enum class ExceedanceMode { difference, ratio };

// Top-k exceedances over the random threshold X_{n-k,n}, ordered from the
// largest observation down (Y_{1,k} corresponds to X_{n,n}).
struct ExceedanceSet {
  std::size_t k = 0;
  double threshold = 0.0;
  ExceedanceMode mode = ExceedanceMode::difference;
  std::vector<double> values;
};

// Difference mode: Y_j = X_{n-j+1,n} - X_{n-k,n}; k = n uses threshold 0.
// Ratio mode: Y_j = X_{n-j+1,n} / X_{n-k,n}, requires X_{n-k,n} > 0 and k < n.
ExceedanceSet exceedances(const Sample& sample, std::size_t k, ExceedanceMode mode);

// Hill estimator: mean of log(X_{n-j+1,n} / X_{n-k,n}), j = 1..k.
double hill(const Sample& sample, std::size_t k);

// Right-continuous step function u -> #{v <= u} / count.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> values);
  double operator()(double u) const;
  std::size_t count() const { return sorted_.size(); }

 private:
  std::vector<double> sorted_;
};

EmpiricalCdf empirical_cdf(std::span<const double> values);

// One point of an estimate path.
struct PathEntry {
  std::size_t k = 0;
  double xi = 0.0;
  std::optional<double> sigma;
  std::optional<double> tau;
  std::optional<double> delta;
  std::optional<double> tail_prob;
  bool converged = false;
};

struct KPath {
  std::string method;
  std::vector<PathEntry> entries;  // k strictly increasing
};

// Centered moving average of every estimate series with truncated windows
// at the edges. Window must be odd and not exceed the path length.
KPath moving_average(const KPath& path, std::size_t window);

}  // namespace tailforge
