#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "tailforge/dataset.hpp"
#include "tailforge/json_io.hpp"
#include "tailforge/selection.hpp"
#include "tailforge/simharness.hpp"

namespace tailforge {

// String-valued request parameters, shared by the CLI and the HTTP API so
// that both produce identical documents.
using Params = std::map<std::string, std::string>;

double param_double(const Params& p, const std::string& key);
std::optional<double> param_opt_double(const Params& p, const std::string& key);
std::optional<std::size_t> param_opt_size(const Params& p, const std::string& key);

// method, a, rho, rho_tilde, kstar (or k_star), m, xi0, tol, max_iter.
MethodConfig method_config_from_params(const Params& p);

struct PathRequest {
  MethodConfig config;
  std::size_t k_lo = 1;
  std::size_t k_hi = std::numeric_limits<std::size_t>::max();
  std::optional<double> c;         // adds tail probabilities at c
  std::optional<double> ci_level;  // adds intervals for extended methods
  std::size_t window = 1;          // moving-average smoothing
  bool select = false;             // minimum-variance choice over the default grid
};

// Reads k (single rank) or k_min/k_max, c, ci, window, select on top of the method.
PathRequest path_request_from_params(const Params& p);

Json path_document(const Sample& sample, const PathRequest& req);

// Tail probability at c, or tail quantile at p, for every k of the request.
Json tail_document(const Sample& sample, const PathRequest& req, std::optional<double> c, std::optional<double> p);

Json gof_document(const Sample& sample, double xi0, double sigma0, double a);

Json dataset_summary(const Dataset& ds);

// Simulation jobs, run one at a time on a background worker.
class JobStore {
 public:
  JobStore();
  ~JobStore();
  JobStore(const JobStore&) = delete;
  JobStore& operator=(const JobStore&) = delete;

  std::string submit(ExperimentSpec spec);
  // Throws not_found for unknown ids.
  Json status(const std::string& id) const;
  // Blocks until the job is no longer queued or running.
  void wait(const std::string& id) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// HTTP front end over a dataset registry and a job store.
class Service {
 public:
  Service();
  ~Service();

  // Binds and starts serving on a background thread; port 0 picks a free
  // port. Returns the bound port.
  int start(const std::string& host, int port);
  // Serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

  DatasetRegistry& registry();
  JobStore& jobs();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tailforge
