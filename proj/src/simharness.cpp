#include "tailforge/simharness.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "tailforge/error.hpp"
#include "tailforge/inference.hpp"
#include "tailforge/json_io.hpp"

namespace tailforge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Neumaier-compensated running sum.
class Accumulator {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
    ++count_;
  }
  double total() const { return sum_ + comp_; }
  std::size_t count() const { return count_; }
  double mean() const { return count_ ? total() / static_cast<double>(count_) : kNaN; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
  std::size_t count_ = 0;
};

// Results of one method on one replication, per k.
struct RepResult {
  std::vector<double> xi;      // NaN when the fit failed
  std::vector<double> logp;    // ks.size() * p_targets.size(), NaN when undefined
  std::vector<unsigned char> capped;
  std::string error;
};

std::string format_double(double v, int precision) {
  char buf[64];
  const auto r = precision > 0 ? std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, precision)
                               : std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    fail(ErrorKind::invalid_argument, "malformed number '" + std::string(s) + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<double> smooth_series(const std::vector<double>& v, std::size_t window) {
  if (window <= 1 || v.size() < 2) return v;
  const std::size_t half = window / 2;
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(v.size() - 1, i + half);
    Accumulator a;
    for (std::size_t j = lo; j <= hi; ++j) a.add(v[j]);
    out[i] = a.mean();
  }
  return out;
}

}  // namespace

std::string ExperimentMethod::display_label() const {
  if (!label.empty()) return label;
  if (!candidates.empty()) return to_string(candidates.front().method) + "(min-variance)";
  return config.label();
}

void ExperimentSpec::validate() const {
  require(replications >= 1, "replications must be at least 1");
  require(n >= 6, "n must be at least 6");
  require(smoothing_window % 2 == 1, "smoothing window must be odd");
  for (double p : p_targets) require(p > 0.0 && p < 0.5, "tail targets must lie in (0, 0.5)");
  for (const auto& m : methods) {
    if (m.candidates.empty()) {
      m.config.validate();
    } else {
      for (const auto& c : m.candidates) {
        c.validate();
        require(c.method == m.candidates.front().method, "candidates must share one method");
      }
    }
  }
  for (std::size_t k : ks) require(k >= 1 && k <= n, "k grid entries must lie in [1, n]");
  for (std::size_t k : selection_ks) require(k >= 1 && k <= n, "selection k entries must lie in [1, n]");
}

std::vector<std::size_t> default_k_grid(std::size_t n) {
  std::vector<std::size_t> ks;
  if (n <= 200) {
    for (std::size_t k = 5; k + 1 <= n; ++k) ks.push_back(k);
    return ks;
  }
  const double lo = std::log(5.0), hi = std::log(static_cast<double>(n - 1));
  for (int i = 0; i < 100; ++i) {
    const auto k = static_cast<std::size_t>(std::llround(std::exp(lo + (hi - lo) * i / 99.0)));
    if (ks.empty() || k > ks.back()) ks.push_back(k);
  }
  return ks;
}

bool CurveSet::same_curves(const CurveSet& other) const {
  auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
  if (p_targets != other.p_targets || cells.size() != other.cells.size()) return false;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& a = cells[i];
    const auto& b = other.cells[i];
    if (a.method != b.method || a.k != b.k || a.n_ok != b.n_ok || a.n_capped != b.n_capped) return false;
    if (!same(a.bias_xi, b.bias_xi) || !same(a.rmse_xi, b.rmse_xi)) return false;
    if (a.bias_logp.size() != b.bias_logp.size() || a.rmse_logp.size() != b.rmse_logp.size()) return false;
    for (std::size_t j = 0; j < a.bias_logp.size(); ++j)
      if (!same(a.bias_logp[j], b.bias_logp[j]) || !same(a.rmse_logp[j], b.rmse_logp[j])) return false;
  }
  return true;
}

unsigned worker_threads() {
  if (const char* env = std::getenv("TAILFORGE_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

CurveSet run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const std::vector<std::size_t> ks = spec.ks.empty() ? default_k_grid(spec.n) : spec.ks;
  const std::vector<std::size_t> sel_ks = spec.selection_ks.empty() ? ks : spec.selection_ks;
  const std::size_t n_methods = spec.methods.size();
  const std::size_t n_p = spec.p_targets.size();
  const double xi_true = spec.distribution.true_xi();
  std::vector<double> anchors;
  for (double p : spec.p_targets) anchors.push_back(tail_anchor(spec.distribution, p));

  std::vector<std::vector<RepResult>> results(spec.replications, std::vector<RepResult>(n_methods));

  auto run_one = [&](std::size_t r) {
    const Sample s(sample(spec.distribution, spec.n, spec.base_seed ^ static_cast<std::uint64_t>(r)));
    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      const auto& em = spec.methods[mi];
      RepResult& out = results[r][mi];
      out.xi.assign(ks.size(), kNaN);
      out.logp.assign(ks.size() * n_p, kNaN);
      out.capped.assign(ks.size() * n_p, 0);
      try {
        MethodConfig cfg = em.config;
        if (!em.candidates.empty()) cfg = min_variance_select(s, em.candidates, sel_ks).config;
        PathFitter fitter(s, cfg);
        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
          const std::size_t k = ks[ki];
          if (k < min_k(cfg.method) || k > max_k(cfg.method, spec.n)) continue;
          const FitResult f = fitter.fit(k);
          if (!f.converged || !std::isfinite(f.xi)) {
            if (out.error.empty() && !f.message.empty()) out.error = f.message;
            continue;
          }
          out.xi[ki] = f.xi;
          for (std::size_t pi = 0; pi < n_p; ++pi) {
            if (anchors[pi] < f.threshold) continue;
            const double phat = tail_prob(f, anchors[pi], spec.n).value;
            double lr = phat > 0.0 ? std::log(spec.p_targets[pi] / phat) : kLogRatioCap;
            if (std::abs(lr) > kLogRatioCap) {
              lr = std::copysign(kLogRatioCap, lr);
              out.capped[ki * n_p + pi] = 1;
            }
            out.logp[ki * n_p + pi] = lr;
          }
        }
      } catch (const Error& e) {
        out.error = e.what();
      }
    }
  };

  const unsigned workers = std::min<std::size_t>(worker_threads(), spec.replications);
  if (workers <= 1) {
    for (std::size_t r = 0; r < spec.replications; ++r) run_one(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < spec.replications; r = next++) run_one(r);
      });
    }
    for (auto& t : pool) t.join();
  }

  CurveSet out;
  out.p_targets = spec.p_targets;
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    const std::string label = spec.methods[mi].display_label();
    std::size_t failures = 0;
    std::string first_error;
    for (std::size_t r = 0; r < spec.replications; ++r) {
      if (!results[r][mi].error.empty()) {
        ++failures;
        if (first_error.empty()) first_error = results[r][mi].error;
      }
    }
    if (failures > 0)
      out.warnings.push_back(label + ": " + std::to_string(failures) + " replication(s) with failed fits, e.g. " +
                             first_error);

    std::vector<CurveCell> cells;
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      CurveCell c;
      c.method = label;
      c.k = ks[ki];
      Accumulator e1, e2;
      std::vector<Accumulator> l1(n_p), l2(n_p);
      for (std::size_t r = 0; r < spec.replications; ++r) {
        const RepResult& rr = results[r][mi];
        const double x = rr.xi[ki];
        if (!std::isfinite(x)) continue;
        e1.add(x - xi_true);
        e2.add((x - xi_true) * (x - xi_true));
        for (std::size_t pi = 0; pi < n_p; ++pi) {
          const double v = rr.logp[ki * n_p + pi];
          if (!std::isfinite(v)) continue;
          l1[pi].add(v);
          l2[pi].add(v * v);
          c.n_capped += rr.capped[ki * n_p + pi];
        }
      }
      c.n_ok = e1.count();
      c.bias_xi = e1.mean();
      c.rmse_xi = std::sqrt(e2.mean());
      for (std::size_t pi = 0; pi < n_p; ++pi) {
        c.bias_logp.push_back(l1[pi].mean());
        c.rmse_logp.push_back(std::sqrt(l2[pi].mean()));
      }
      cells.push_back(std::move(c));
    }
    if (spec.smoothing_window > 1 && cells.size() > 1) {
      const std::size_t w = std::min(spec.smoothing_window, cells.size() % 2 ? cells.size() : cells.size() - 1);
      auto apply = [&](auto get) {
        std::vector<double> v;
        for (auto& c : cells) v.push_back(get(c));
        v = smooth_series(v, w);
        for (std::size_t i = 0; i < cells.size(); ++i) get(cells[i]) = v[i];
      };
      apply([](CurveCell& c) -> double& { return c.bias_xi; });
      apply([](CurveCell& c) -> double& { return c.rmse_xi; });
      for (std::size_t pi = 0; pi < n_p; ++pi) {
        apply([pi](CurveCell& c) -> double& { return c.bias_logp[pi]; });
        apply([pi](CurveCell& c) -> double& { return c.rmse_logp[pi]; });
      }
    }
    for (auto& c : cells) out.cells.push_back(std::move(c));
  }
  return out;
}

std::string export_curves(const CurveSet& curves, ExportFormat format) {
  if (format == ExportFormat::json) return to_json(curves).dump();

  std::ostringstream os;
  os << "method,k,bias_xi,rmse_xi";
  for (double p : curves.p_targets) {
    const std::string ps = format_double(p, 0);
    os << ",bias_logp_" << ps << ",rmse_logp_" << ps;
  }
  os << ",n_ok,n_capped\n";
  for (const auto& c : curves.cells) {
    os << csv_field(c.method) << ',' << c.k << ',' << format_double(c.bias_xi, 17) << ','
       << format_double(c.rmse_xi, 17);
    for (std::size_t i = 0; i < curves.p_targets.size(); ++i)
      os << ',' << format_double(c.bias_logp[i], 17) << ',' << format_double(c.rmse_logp[i], 17);
    os << ',' << c.n_ok << ',' << c.n_capped << '\n';
  }
  return os.str();
}

CurveSet import_curves(const std::string& text, ExportFormat format) {
  if (format == ExportFormat::json) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::invalid_argument, std::string("malformed curve JSON: ") + e.what());
    }
    return curves_from_json(j);
  }

  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) fail(ErrorKind::invalid_argument, "empty curve CSV");
  const auto header = split_csv_line(line);
  require(header.size() >= 6 && (header.size() - 6) % 2 == 0, "unexpected curve CSV header");
  CurveSet out;
  const std::size_t n_p = (header.size() - 6) / 2;
  for (std::size_t i = 0; i < n_p; ++i) {
    const std::string& h = header[4 + 2 * i];
    const std::string prefix = "bias_logp_";
    require(h.rfind(prefix, 0) == 0, "unexpected curve CSV column '" + h + "'");
    out.p_targets.push_back(parse_double(h.substr(prefix.size())));
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    require(f.size() == header.size(), "curve CSV row has the wrong number of fields");
    CurveCell c;
    c.method = f[0];
    c.k = static_cast<std::size_t>(parse_double(f[1]));
    c.bias_xi = parse_double(f[2]);
    c.rmse_xi = parse_double(f[3]);
    for (std::size_t i = 0; i < n_p; ++i) {
      c.bias_logp.push_back(parse_double(f[4 + 2 * i]));
      c.rmse_logp.push_back(parse_double(f[5 + 2 * i]));
    }
    c.n_ok = static_cast<std::size_t>(parse_double(f[4 + 2 * n_p]));
    c.n_capped = static_cast<std::size_t>(parse_double(f[5 + 2 * n_p]));
    out.cells.push_back(std::move(c));
  }
  return out;
}

}  // namespace tailforge
