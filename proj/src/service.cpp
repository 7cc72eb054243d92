#include "tailforge/service.hpp"

#include <charconv>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "tailforge/bernstein.hpp"
#include "tailforge/inference.hpp"

namespace tailforge {

namespace {

std::optional<std::string> lookup(const Params& p, const std::string& key) {
  const auto it = p.find(key);
  if (it == p.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

double parse_strict(const std::string& key, const std::string& s) {
  double v = 0.0;
  const char* b = s.data();
  if (!s.empty() && s.front() == '+') ++b;
  const auto r = std::from_chars(b, s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
    fail(ErrorKind::invalid_argument, "parameter '" + key + "' is not a finite number: '" + s + "'");
  return v;
}

bool parse_flag(const std::string& key, const std::string& s) {
  if (s == "1" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "no") return false;
  fail(ErrorKind::invalid_argument, "parameter '" + key + "' must be true or false");
}

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return 400;
    case ErrorKind::not_found: return 404;
    case ErrorKind::conflict: return 409;
    case ErrorKind::infeasible:
    case ErrorKind::degenerate: return 422;
  }
  return 500;
}

std::vector<std::size_t> feasible_ks(const PathRequest& req, const Sample& sample) {
  const std::size_t n = sample.size();
  const std::size_t lo = std::max(req.k_lo, min_k(req.config.method));
  const std::size_t hi = std::min(req.k_hi, max_k(req.config.method, sample));
  if (n < 2 || lo > hi) fail(ErrorKind::infeasible, "no feasible k in the requested range for " + to_string(req.config.method));
  std::vector<std::size_t> ks;
  for (std::size_t k = lo; k <= hi; ++k) ks.push_back(k);
  return ks;
}

Selection run_selection(const Sample& sample, const PathRequest& req, std::span<const std::size_t> ks) {
  const auto grid = default_grid(req.config.method, sample.size());
  return min_variance_select(sample, grid, ks);
}

}  // namespace

double param_double(const Params& p, const std::string& key) {
  const auto v = lookup(p, key);
  if (!v) fail(ErrorKind::invalid_argument, "missing parameter '" + key + "'");
  return parse_strict(key, *v);
}

std::optional<double> param_opt_double(const Params& p, const std::string& key) {
  const auto v = lookup(p, key);
  if (!v) return std::nullopt;
  return parse_strict(key, *v);
}

std::optional<std::size_t> param_opt_size(const Params& p, const std::string& key) {
  const auto v = param_opt_double(p, key);
  if (!v) return std::nullopt;
  if (*v < 0.0 || *v != std::floor(*v) || *v > 1e15)
    fail(ErrorKind::invalid_argument, "parameter '" + key + "' must be a nonnegative integer");
  return static_cast<std::size_t>(*v);
}

MethodConfig method_config_from_params(const Params& p) {
  const auto name = lookup(p, "method");
  if (!name) fail(ErrorKind::invalid_argument, "missing parameter 'method'");
  MethodConfig cfg;
  cfg.method = method_from_string(*name);
  cfg.a = param_opt_double(p, "a");
  cfg.rho = param_opt_double(p, "rho");
  cfg.rho_tilde = param_opt_double(p, "rho_tilde");
  cfg.k_star = param_opt_size(p, "kstar");
  if (!cfg.k_star) cfg.k_star = param_opt_size(p, "k_star");
  cfg.m = param_opt_size(p, "m");
  cfg.xi0 = param_opt_double(p, "xi0");
  if (auto t = param_opt_double(p, "tol")) cfg.tol = *t;
  if (auto it = param_opt_size(p, "max_iter")) cfg.max_iter = static_cast<int>(*it);
  return cfg;
}

PathRequest path_request_from_params(const Params& p) {
  PathRequest req;
  req.config = method_config_from_params(p);
  if (const auto v = lookup(p, "select")) req.select = parse_flag("select", *v);
  if (!req.select) req.config.validate();
  if (const auto k = param_opt_size(p, "k")) {
    req.k_lo = req.k_hi = *k;
  } else {
    if (const auto lo = param_opt_size(p, "k_min")) req.k_lo = *lo;
    if (const auto hi = param_opt_size(p, "k_max")) req.k_hi = *hi;
  }
  req.c = param_opt_double(p, "c");
  req.ci_level = param_opt_double(p, "ci");
  if (req.ci_level) require(*req.ci_level >= 0.0 && *req.ci_level < 1.0, "ci level must lie in [0, 1)");
  if (const auto w = param_opt_size(p, "window")) req.window = *w;
  require(req.window >= 1 && req.window % 2 == 1, "window must be odd and positive");
  return req;
}

Json path_document(const Sample& sample, const PathRequest& req) {
  const auto ks = feasible_ks(req, sample);
  MethodConfig cfg = req.config;
  Json selection;
  if (req.select) {
    const auto sel = run_selection(sample, req, ks);
    cfg = sel.config;
    Json scores = Json::array();
    for (const auto& s : sel.scores) scores.push_back(s ? Json(*s) : Json(nullptr));
    selection = {{"config", to_json(sel.config)}, {"score", sel.score}, {"index", sel.index}, {"scores", scores}};
  }
  const auto fits = fit_path(sample, cfg, ks);
  KPath path = to_kpath(cfg, fits, sample, req.c);
  PathIntervals cis;
  const bool want_ci = req.ci_level && is_extended(cfg.method);
  if (want_ci) {
    cis.level = *req.ci_level;
    for (const auto& f : fits) {
      std::optional<Interval> ci;
      if (f.converged && std::isfinite(f.xi)) {
        try {
          ci = ci_xi(f, *req.ci_level);
        } catch (const Error&) {
        }
      }
      cis.intervals.push_back(ci);
    }
  }
  if (req.window > 1) path = moving_average(path, req.window);
  Json doc = to_json(path, want_ci ? &cis : nullptr);
  doc["config"] = to_json(cfg);
  doc["n"] = sample.size();
  if (req.select) doc["selection"] = selection;
  return doc;
}

Json tail_document(const Sample& sample, const PathRequest& req, std::optional<double> c, std::optional<double> p) {
  require(c.has_value() != p.has_value(), "give exactly one of c and p");
  const auto ks = feasible_ks(req, sample);
  MethodConfig cfg = req.config;
  if (req.select) cfg = run_selection(sample, req, ks).config;
  PathFitter fitter(sample, cfg);
  Json entries = Json::array();
  for (std::size_t k : ks) {
    const FitResult f = fitter.fit(k);
    Json e{{"k", k}, {"converged", f.converged}};
    try {
      if (!std::isfinite(f.xi)) fail(ErrorKind::infeasible, f.message);
      const TailEstimate t = c ? tail_prob(f, *c, sample.size()) : tail_quantile(f, *p, sample.size());
      e["value"] = t.value;
      e["threshold"] = t.threshold;
    } catch (const Error& err) {
      e["value"] = nullptr;
      e["error"] = err.what();
    }
    entries.push_back(std::move(e));
  }
  Json doc{{"schema_version", kSchemaVersion},
           {"method", to_string(cfg.method)},
           {"config", to_json(cfg)},
           {"n", sample.size()},
           {"quantity", c ? "probability" : "quantile"},
           {"entries", entries}};
  if (c) doc["c"] = *c;
  if (p) doc["p"] = *p;
  return doc;
}

Json gof_document(const Sample& sample, double xi0, double sigma0, double a) {
  require(a > 0.0 && a <= 1.0, "a must lie in (0, 1]");
  const std::size_t m = bernstein_degree(sample.size(), a);
  Json doc = to_json(gof_pp(sample, xi0, sigma0, m));
  doc["xi0"] = xi0;
  doc["sigma0"] = sigma0;
  doc["m"] = m;
  return doc;
}

Json dataset_summary(const Dataset& ds) {
  return {{"schema_version", kSchemaVersion},
          {"id", ds.id},
          {"name", ds.name},
          {"n", ds.sample.size()},
          {"rows", ds.rows},
          {"skipped_lines", ds.skipped_lines},
          {"checksum", ds.checksum},
          {"min", ds.sample.min()},
          {"max", ds.sample.max()}};
}

// ---------------------------------------------------------------------------

struct JobStore::Impl {
  struct Job {
    std::string status = "queued";
    ExperimentSpec spec;
    Json result;
    Json error;
  };

  mutable std::mutex mutex;
  mutable std::condition_variable changed;
  std::map<std::string, Job> jobs;
  std::deque<std::string> queue;
  std::size_t next = 1;
  bool stopping = false;
  std::thread worker;

  void loop() {
    std::unique_lock lock(mutex);
    for (;;) {
      changed.wait(lock, [&] { return stopping || !queue.empty(); });
      if (stopping) return;
      const std::string id = queue.front();
      queue.pop_front();
      Job& job = jobs.at(id);
      job.status = "running";
      const ExperimentSpec spec = job.spec;
      lock.unlock();
      Json result, error;
      try {
        result = to_json(run_experiment(spec));
      } catch (const Error& e) {
        error = error_json(e.kind(), e.what())["error"];
      } catch (const std::exception& e) {
        error = {{"kind", "internal"}, {"message", e.what()}};
      }
      lock.lock();
      Job& done = jobs.at(id);
      done.status = error.is_null() ? "done" : "failed";
      done.result = std::move(result);
      done.error = std::move(error);
      changed.notify_all();
    }
  }
};

JobStore::JobStore() : impl_(std::make_unique<Impl>()) {
  impl_->worker = std::thread([this] { impl_->loop(); });
}

JobStore::~JobStore() {
  {
    std::lock_guard lock(impl_->mutex);
    impl_->stopping = true;
  }
  impl_->changed.notify_all();
  impl_->worker.join();
}

std::string JobStore::submit(ExperimentSpec spec) {
  spec.validate();
  std::lock_guard lock(impl_->mutex);
  const std::string id = "job" + std::to_string(impl_->next++);
  impl_->jobs[id].spec = std::move(spec);
  impl_->queue.push_back(id);
  impl_->changed.notify_all();
  return id;
}

Json JobStore::status(const std::string& id) const {
  std::lock_guard lock(impl_->mutex);
  const auto it = impl_->jobs.find(id);
  if (it == impl_->jobs.end()) fail(ErrorKind::not_found, "unknown job '" + id + "'");
  Json j{{"schema_version", kSchemaVersion}, {"id", id}, {"status", it->second.status}};
  if (!it->second.result.is_null()) j["result"] = it->second.result;
  if (!it->second.error.is_null()) j["error"] = it->second.error;
  return j;
}

void JobStore::wait(const std::string& id) const {
  std::unique_lock lock(impl_->mutex);
  if (!impl_->jobs.count(id)) fail(ErrorKind::not_found, "unknown job '" + id + "'");
  impl_->changed.wait(lock, [&] {
    const auto& s = impl_->jobs.at(id).status;
    return impl_->stopping || (s != "queued" && s != "running");
  });
}

// ---------------------------------------------------------------------------

struct Service::Impl {
  DatasetRegistry registry;
  JobStore jobs;
  httplib::Server server;
  std::thread thread;

  static Params params_of(const httplib::Request& req) {
    Params p;
    for (const auto& [k, v] : req.params) p[k] = v;
    return p;
  }

  static void reply(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <class F>
  static void guard(httplib::Response& res, F f) {
    try {
      f();
    } catch (const Error& e) {
      reply(res, http_status(e.kind()), error_json(e.kind(), e.what()));
    } catch (const Json::exception& e) {
      reply(res, 400, error_json(ErrorKind::invalid_argument, e.what()));
    } catch (const std::exception& e) {
      Json body{{"schema_version", kSchemaVersion}, {"error", {{"kind", "internal"}, {"message", e.what()}}}};
      reply(res, 500, body);
    }
  }

  void install() {
    server.Post("/datasets", [this](const httplib::Request& req, httplib::Response& res) {
      guard(res, [&] {
        const Params p = params_of(req);
        IngestOptions opts;
        if (auto c = p.find("column"); c != p.end() && !c->second.empty()) {
          const auto& v = c->second;
          if (v.find_first_not_of("0123456789") == std::string::npos)
            opts.column_index = static_cast<std::size_t>(std::stoull(v));
          else
            opts.column_name = v;
        }
        if (auto h = p.find("header"); h != p.end() && !h->second.empty())
          opts.header = parse_flag("header", h->second) ? HeaderMode::present : HeaderMode::absent;
        Dataset ds = ingest_csv(req.body, opts);
        if (auto id = p.find("id"); id != p.end()) ds.id = id->second;
        if (auto nm = p.find("name"); nm != p.end()) ds.name = nm->second;
        const std::string id = registry.add(std::move(ds));
        reply(res, 201, dataset_summary(*registry.get(id)));
      });
    });
    server.Get("/datasets", [this](const httplib::Request&, httplib::Response& res) {
      guard(res, [&] {
        Json items = Json::array();
        for (const auto& ds : registry.list()) {
          Json s = dataset_summary(*ds);
          s.erase("schema_version");
          items.push_back(std::move(s));
        }
        reply(res, 200, {{"schema_version", kSchemaVersion}, {"datasets", items}});
      });
    });
    server.Get(R"(/datasets/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guard(res, [&] { reply(res, 200, dataset_summary(*registry.get(req.matches[1]))); });
    });
    server.Get(R"(/datasets/([^/]+)/path)", [this](const httplib::Request& req, httplib::Response& res) {
      guard(res, [&] {
        const auto ds = registry.get(req.matches[1]);
        Json doc = path_document(ds->sample, path_request_from_params(params_of(req)));
        doc["dataset"] = ds->id;
        reply(res, 200, doc);
      });
    });
    server.Get(R"(/datasets/([^/]+)/tail)", [this](const httplib::Request& req, httplib::Response& res) {
      guard(res, [&] {
        const auto ds = registry.get(req.matches[1]);
        const Params p = params_of(req);
        Json doc = tail_document(ds->sample, path_request_from_params(p), param_opt_double(p, "c"),
                                 param_opt_double(p, "p"));
        doc["dataset"] = ds->id;
        reply(res, 200, doc);
      });
    });
    server.Get(R"(/datasets/([^/]+)/gof)", [this](const httplib::Request& req, httplib::Response& res) {
      guard(res, [&] {
        const auto ds = registry.get(req.matches[1]);
        const Params p = params_of(req);
        Json doc = gof_document(ds->sample, param_double(p, "xi0"), param_double(p, "sigma0"),
                                param_opt_double(p, "a").value_or(0.99));
        doc["dataset"] = ds->id;
        reply(res, 200, doc);
      });
    });
    server.Post("/simulate", [this](const httplib::Request& req, httplib::Response& res) {
      guard(res, [&] {
        Json body;
        try {
          body = Json::parse(req.body);
        } catch (const Json::exception& e) {
          fail(ErrorKind::invalid_argument, std::string("malformed JSON body: ") + e.what());
        }
        const std::string id = jobs.submit(experiment_from_json(body));
        reply(res, 202, {{"schema_version", kSchemaVersion}, {"job_id", id}, {"status", "queued"}});
      });
    });
    server.Get(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guard(res, [&] { reply(res, 200, jobs.status(req.matches[1])); });
    });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        const ErrorKind kind = res.status == 404 ? ErrorKind::not_found : ErrorKind::invalid_argument;
        res.set_content(error_json(kind, "no such endpoint").dump(), "application/json");
      }
    });
  }
};

Service::Service() : impl_(std::make_unique<Impl>()) { impl_->install(); }

Service::~Service() { stop(); }

int Service::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) fail(ErrorKind::conflict, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) fail(ErrorKind::conflict, "cannot listen on " + host + ":" + std::to_string(port));
}

void Service::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

DatasetRegistry& Service::registry() { return impl_->registry; }
JobStore& Service::jobs() { return impl_->jobs; }

}  // namespace tailforge
