// Command-line front end: fit, tail, gof, simulate, serve.
#include <cmath>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tailforge/service.hpp"

namespace tf = tailforge;

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

struct DataArgs {
  std::string file;
  std::string column;
  bool no_header = false;
};

struct MethodArgs {
  std::string method;
  std::string k, k_min, k_max, rho, rho_tilde, a, kstar, m, xi0, ci, c, window;
  bool select = false;
};

struct OutputArgs {
  std::string out;
  std::string format = "json";
};

void add_data_options(CLI::App* app, DataArgs& d) {
  app->add_option("data", d.file, "CSV file with one observation per row")->required();
  app->add_option("--column", d.column, "column name or 0-based index");
  app->add_flag("--no-header", d.no_header, "first line is data");
}

void add_method_options(CLI::App* app, MethodArgs& m) {
  app->add_option("--method", m.method, "ParetoML, GpdML, Ep, Ep+, Epbar, Epbar+, Tpbar, Tpbar+")->required();
  app->add_option("--k", m.k, "single threshold rank");
  app->add_option("--k-min", m.k_min, "smallest threshold rank");
  app->add_option("--k-max", m.k_max, "largest threshold rank");
  app->add_option("--rho", m.rho, "second-order parameter of Ep+");
  app->add_option("--rho-tilde", m.rho_tilde, "second-order parameter of Ep");
  app->add_option("--a", m.a, "Bernstein degree exponent, m = k^a");
  app->add_option("--kstar", m.kstar, "reference rank for Epbar/Epbar+");
  app->add_option("--m", m.m, "Bernstein degree at the reference rank for Epbar/Epbar+");
  app->add_option("--xi0", m.xi0, "fixed pilot xi for the bias shape");
  app->add_flag("--select", m.select, "pick hyperparameters by minimum path variance");
}

void add_output_options(CLI::App* app, OutputArgs& o, bool csv) {
  app->add_option("--out", o.out, "output file (default stdout)");
  if (csv)
    app->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

tf::Params to_params(const MethodArgs& m) {
  tf::Params p;
  const auto put = [&](const char* key, const std::string& v) {
    if (!v.empty()) p[key] = v;
  };
  put("method", m.method);
  put("k", m.k);
  put("k_min", m.k_min);
  put("k_max", m.k_max);
  put("rho", m.rho);
  put("rho_tilde", m.rho_tilde);
  put("a", m.a);
  put("kstar", m.kstar);
  put("m", m.m);
  put("xi0", m.xi0);
  put("ci", m.ci);
  put("c", m.c);
  put("window", m.window);
  if (m.select) p["select"] = "true";
  return p;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) tf::fail(tf::ErrorKind::not_found, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

tf::Dataset load(const DataArgs& d) {
  tf::IngestOptions opts;
  if (!d.column.empty()) {
    if (d.column.find_first_not_of("0123456789") == std::string::npos)
      opts.column_index = std::stoull(d.column);
    else
      opts.column_name = d.column;
  }
  if (d.no_header) opts.header = tf::HeaderMode::absent;
  tf::Dataset ds = tf::ingest_csv(read_file(d.file), opts);
  ds.name = d.file;
  return ds;
}

void emit(const OutputArgs& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    if (text.empty() || text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(o.out, std::ios::binary);
  if (!out) tf::fail(tf::ErrorKind::invalid_argument, "cannot write '" + o.out + "'");
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

std::string cell(const tf::Json& j) {
  if (j.is_null()) return "";
  return j.dump();
}

// Flat table of a path document: one row per k.
std::string path_csv(const tf::Json& doc) {
  std::ostringstream out;
  out << "k,xi,sigma,delta,converged,tail_prob,ci_lower,ci_upper\n";
  for (const auto& e : doc.at("entries")) {
    const auto field = [&](const char* key) { return e.contains(key) ? cell(e.at(key)) : std::string(); };
    out << e.at("k").get<std::size_t>() << ',' << field("xi") << ',' << field("sigma") << ',' << field("delta")
        << ',' << (e.at("converged").get<bool>() ? 1 : 0) << ',' << field("tail_prob") << ',';
    if (e.contains("ci")) out << cell(e.at("ci").at("lower")) << ',' << cell(e.at("ci").at("upper"));
    else out << ',';
    out << '\n';
  }
  return out.str();
}

bool is_known_method(const std::string& name) {
  try {
    tf::method_from_string(name);
    return true;
  } catch (const tf::Error&) {
    return false;
  }
}

tf::Service* g_service = nullptr;

extern "C" void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tailforge: bias-reduced peaks-over-threshold tail estimation"};
  app.require_subcommand(1);

  DataArgs data;
  MethodArgs method;
  OutputArgs output;

  auto* fit = app.add_subcommand("fit", "estimate xi along a range of threshold ranks");
  add_data_options(fit, data);
  add_method_options(fit, method);
  fit->add_option("--ci", method.ci, "confidence level for extended methods, e.g. 0.95");
  fit->add_option("--c", method.c, "also report P(X > c) at every k");
  fit->add_option("--window", method.window, "odd moving-average window");
  add_output_options(fit, output, true);

  std::string tail_c, tail_p;
  auto* tail = app.add_subcommand("tail", "tail probability at c or quantile at p for every k");
  add_data_options(tail, data);
  add_method_options(tail, method);
  tail->add_option("--c", tail_c, "level whose exceedance probability is estimated");
  tail->add_option("--p", tail_p, "probability whose quantile is estimated");
  add_output_options(tail, output, false);

  std::string xi0, sigma0, gof_a = "0.99";
  auto* gof = app.add_subcommand("gof", "P-P goodness-of-fit points against a GPD");
  add_data_options(gof, data);
  gof->add_option("--xi0", xi0, "GPD shape")->required();
  gof->add_option("--sigma0", sigma0, "GPD scale")->required();
  gof->add_option("--a", gof_a, "Bernstein degree exponent, m = n^a");
  add_output_options(gof, output, false);

  std::string spec_file;
  std::optional<std::uint64_t> seed;
  auto* simulate = app.add_subcommand("simulate", "run a Monte Carlo experiment from a JSON spec");
  simulate->add_option("spec", spec_file, "experiment spec (JSON)")->required();
  simulate->add_option("--seed", seed, "override the base seed");
  add_output_options(simulate, output, true);

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "serve the HTTP API");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  if ((*fit || *tail) && !is_known_method(method.method)) {
    std::cerr << "error: unknown method '" << method.method << "'\n";
    return kUsageError;
  }

  try {
    if (*fit) {
      const tf::Dataset ds = load(data);
      const tf::Json doc = tf::path_document(ds.sample, tf::path_request_from_params(to_params(method)));
      emit(output, output.format == "csv" ? path_csv(doc) : doc.dump(2));
    } else if (*tail) {
      const tf::Dataset ds = load(data);
      tf::Params p = to_params(method);
      if (!tail_c.empty()) p["c"] = tail_c;
      if (!tail_p.empty()) p["p"] = tail_p;
      const tf::PathRequest req = tf::path_request_from_params(p);
      emit(output, tf::tail_document(ds.sample, req, tf::param_opt_double(p, "c"), tf::param_opt_double(p, "p")).dump(2));
    } else if (*gof) {
      const tf::Dataset ds = load(data);
      const tf::Params p{{"xi0", xi0}, {"sigma0", sigma0}, {"a", gof_a}};
      emit(output, tf::gof_document(ds.sample, tf::param_double(p, "xi0"), tf::param_double(p, "sigma0"),
                                    tf::param_double(p, "a")).dump(2));
    } else if (*simulate) {
      tf::Json body;
      try {
        body = tf::Json::parse(read_file(spec_file));
      } catch (const tf::Json::exception& e) {
        tf::fail(tf::ErrorKind::invalid_argument, std::string("malformed spec: ") + e.what());
      }
      tf::ExperimentSpec spec = tf::experiment_from_json(body);
      if (seed) spec.base_seed = *seed;
      const tf::CurveSet curves = tf::run_experiment(spec);
      emit(output, tf::export_curves(curves, output.format == "csv" ? tf::ExportFormat::csv : tf::ExportFormat::json));
    } else if (*serve) {
      tf::Service service;
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << host << ':' << port << '\n';
      service.run(host, port);
      g_service = nullptr;
    }
  } catch (const tf::Error& e) {
    std::cerr << tf::error_json(e.kind(), e.what()).dump() << '\n';
    return e.kind() == tf::ErrorKind::invalid_argument ? kUsageError : kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
