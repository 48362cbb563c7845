// roughsheet: command-line front end.
//
//   roughsheet noise | variance-table | gap-table | isometry | simulate | holder | verify
//
// Every command takes --config FILE (flat "key = value", keys are the long
// flag names); flags on the command line win over the file. Results go to
// <out>/<manifest hash>/{manifest.json, fields/, tables/, charts/}.
//
// Exit codes: 0 ok, 1 scientific check failed, 2 usage or domain error,
// 3 numerical failure.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "roughsheet/acceptance.hpp"
#include "roughsheet/binary_io.hpp"
#include "roughsheet/errors.hpp"
#include "roughsheet/isometry.hpp"
#include "roughsheet/manifest.hpp"
#include "roughsheet/noise.hpp"
#include "roughsheet/regularity.hpp"
#include "roughsheet/solver.hpp"
#include "roughsheet/spectral.hpp"
#include "roughsheet/svg_chart.hpp"
#include "roughsheet/table.hpp"

namespace fs = std::filesystem;
using namespace roughsheet;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;
constexpr int kNumerical = 3;

// a scientific check failed; the report has already been printed
struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string out = "runs";
  std::size_t threads = 1;
};

struct GridFlags {
  double tmax = 1.0;
  std::size_t nt = 64;
  double xmin = -4.0;
  double xmax = 4.0;
  std::size_t nx = 256;

  GridSpec spec() const { return {tmax, nt, xmin, xmax, nx}; }
};

void add_common(CLI::App* sub, Common& c, bool threads) {
  sub->add_option("--config", "flat key = value file with flag names as keys");
  sub->add_option("--out", c.out, "root of the run directory tree")->capture_default_str();
  if (threads)
    sub->add_option("--threads", c.threads, "worker threads")
        ->envname("ROUGH_SHEET_THREADS")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

void add_grid(CLI::App* sub, GridFlags& g) {
  sub->add_option("--tmax", g.tmax, "final time")->capture_default_str();
  sub->add_option("--nt", g.nt, "time steps")->capture_default_str();
  sub->add_option("--xmin", g.xmin, "left end of the space window")->capture_default_str();
  sub->add_option("--xmax", g.xmax, "right end of the space window")->capture_default_str();
  sub->add_option("--nx", g.nx, "space cells (power of two)")->capture_default_str();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Fills every option of `sub` that the command line left unset from a flat
// "key = value" file. Blank lines and lines starting with '#' are skipped.
void apply_config(CLI::App* sub) {
  const CLI::Option* cfg = sub->get_option("--config");
  if (cfg->count() == 0) return;
  const std::string path = cfg->as<std::string>();
  std::ifstream is(path);
  if (!is) throw DomainError("cannot open config file " + path);
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(is, line)) {
    ++lineNo;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DomainError(path + ":" + std::to_string(lineNo) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt || key == "config") throw DomainError(path + ":" + std::to_string(lineNo) + ": unknown key '" + key + "'");
    if (opt->count() > 0) continue;  // the command line wins
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw DomainError(path + ":" + std::to_string(lineNo) + ": " + e.what());
    }
  }
}

fs::path prepare_run(const std::string& root, RunManifest& m) {
  m.stamp();
  const fs::path dir = fs::path(root) / m.hash();
  for (const char* sub : {"fields", "tables", "charts"}) fs::create_directories(dir / sub);
  m.save((dir / "manifest.json").string());
  return dir;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s;
}

// centred log-log slopes, one-sided at the ends
std::vector<double> local_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> s(x.size(), std::nan(""));
  if (x.size() < 2) return s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == x.size() ? i : i + 1;
    s[i] = std::log(y[b] / y[a]) / std::log(x[b] / x[a]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// noise

struct NoiseArgs {
  double H = 0.25;
  std::size_t d = 1;
  std::uint64_t seed = 1;
  GridFlags grid;
};

int cmd_noise(const NoiseArgs& a, const Common& c) {
  require_hurst(a.H);
  const GridSpec grid = a.grid.spec();
  grid.validate();
  RunManifest m;
  m.command = "noise";
  m.H = a.H;
  m.d = a.d;
  m.grid = grid;
  m.sigma = identity_matrix(a.d);
  m.baseSeed = a.seed;
  const NoiseSheet sheet = sample_sheet(grid, a.H, a.d, a.seed);
  const fs::path dir = prepare_run(c.out, m);
  const fs::path file = dir / "fields" / "sheet.bin";
  write_sheet(file.string(), sheet);
  std::cout << "sheet: " << file.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// variance-table and gap-table

struct VarianceArgs {
  std::string op = "heat";
  double H = 0.25;
  double tMin = 0.01;
  double tMax = 10.0;
  std::size_t points = 9;
  std::vector<double> times;
};

std::vector<double> requested_grid(const std::vector<double>& explicitPoints, double lo, double hi, std::size_t n,
                                   const char* what) {
  if (!explicitPoints.empty()) {
    for (double v : explicitPoints)
      if (!(v > 0.0)) throw DomainError(std::string(what) + " values must be positive");
    return explicitPoints;
  }
  if (n == 0) throw DomainError(std::string("empty ") + what + " grid");
  if (n == 1) return {lo};
  return log_spaced(lo, hi, n);
}

void report_fit(const std::vector<double>& x, const std::vector<double>& y, double expected) {
  if (x.size() < 4) return;
  std::vector<double> pos;
  for (double v : y)
    if (v > 0.0) pos.push_back(v);
  if (pos.size() != y.size()) return;
  const ExponentFit fit = fit_power_law(x, y, *std::min_element(x.begin(), x.end()), *std::max_element(x.begin(), x.end()));
  std::cerr << "fitted_exponent: " << format_double(fit.slope) << "\n"
            << "expected_exponent: " << format_double(expected) << "\n";
}

int cmd_variance_table(const VarianceArgs& a, const Common& c) {
  const OperatorKind op = parse_operator(a.op);
  require_hurst(a.H);
  const std::vector<double> ts = requested_grid(a.times, a.tMin, a.tMax, a.points, "t");
  const SpectralDensity density = make_density(a.H);
  std::vector<double> values;
  for (double t : ts) {
    try {
      values.push_back(variance_integral(op, t, density));
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (op " + a.op + ", t " + format_double(t) + ", H " +
                               format_double(a.H) + ")",
                           e.estimate(), e.errorBound());
    }
  }
  const std::vector<double> slopes = local_slopes(ts, values);
  Table table({"t", "value", "local_slope"});
  for (std::size_t i = 0; i < ts.size(); ++i) table.add_row({ts[i], values[i], slopes[i]});

  RunManifest m;
  m.command = "variance-table";
  m.op = op;
  m.H = a.H;
  m.extra["t"] = ts;
  const fs::path dir = prepare_run(c.out, m);
  table.save((dir / "tables" / "variance.csv").string());
  table.write(std::cout);
  report_fit(ts, values, op == OperatorKind::Heat ? a.H : 1.0 + 2.0 * a.H);
  return kOk;
}

struct GapArgs {
  std::string op = "heat";
  double H = 0.25;
  double t = 1.0;
  double xMin = 0.01;
  double xMax = 1.0;
  std::size_t points = 13;
  std::vector<double> xs;
};

int cmd_gap_table(const GapArgs& a, const Common& c) {
  const OperatorKind op = parse_operator(a.op);
  require_hurst(a.H);
  if (!(a.t > 0.0)) throw DomainError("t must be positive");
  const std::vector<double> xs = requested_grid(a.xs, a.xMin, a.xMax, a.points, "x");
  const SpectralDensity density = make_density(a.H);
  std::vector<double> gaps;
  for (double x : xs) {
    try {
      gaps.push_back(covariance_gap(op, a.t, x, density));
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (op " + a.op + ", t " + format_double(a.t) + ", x " +
                               format_double(x) + ", H " + format_double(a.H) + ")",
                           e.estimate(), e.errorBound());
    }
  }
  const std::vector<double> slopes = local_slopes(xs, gaps);
  Table table({"x", "gap", "ratio", "local_slope"});
  for (std::size_t i = 0; i < xs.size(); ++i)
    table.add_row({xs[i], gaps[i], gaps[i] / std::pow(xs[i], 2.0 * a.H), slopes[i]});

  RunManifest m;
  m.command = "gap-table";
  m.op = op;
  m.H = a.H;
  m.extra["t"] = a.t;
  m.extra["x"] = xs;
  const fs::path dir = prepare_run(c.out, m);
  table.save((dir / "tables" / "gap.csv").string());
  table.write(std::cout);
  report_fit(xs, gaps, 2.0 * a.H);
  return kOk;
}

// ---------------------------------------------------------------------------
// isometry

struct IsometryArgs {
  std::vector<double> H = {0.25};
  std::string phi = "all";
  std::size_t replicas = 20000;
  std::uint64_t seed = 1;
  double zMax = 3.0;
  GridFlags grid{1.0, 2, -8.0, 8.0, 4096};
};

int cmd_isometry(const IsometryArgs& a, const Common& c) {
  const GridSpec grid = a.grid.spec();
  grid.validate();
  std::vector<IsometryIntegrand> family = isometry_family();
  if (a.phi != "all") family = {find_integrand(family, a.phi)};
  for (double H : a.H) require_hurst(H);

  RunManifest m;
  m.command = "isometry";
  m.H = a.H.front();
  m.grid = grid;
  m.nReplicas = a.replicas;
  m.baseSeed = a.seed;
  m.tolerances["z"] = a.zMax;
  m.extra["H"] = a.H;
  m.extra["phi"] = a.phi;

  std::vector<IsometryResult> all;
  for (double H : a.H) {
    auto res = isometry_check(family, H, grid, a.replicas, a.seed);
    all.insert(all.end(), res.begin(), res.end());
  }
  const fs::path dir = prepare_run(c.out, m);
  Table table({"phi", "H", "target", "variance", "std_error", "z", "relative_gap", "fourth_moment_ratio"});
  bool ok = true;
  for (const auto& r : all) {
    table.add_row({r.name, r.H, r.target, r.variance, r.stdError, r.z, r.relativeGap, r.fourthMomentRatio});
    if (!(std::abs(r.z) <= a.zMax)) ok = false;
  }
  table.save((dir / "tables" / "isometry.csv").string());
  table.write(std::cout);
  std::cerr << "verdict: " << (ok ? "pass" : "fail") << "\n";
  return ok ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string op = "heat";
  double H = 0.25;
  std::size_t d = 1;
  std::vector<double> sigma;
  std::string drift = "none";
  std::vector<double> driftParams;
  std::string method = "spectral";
  std::size_t replicas = 8;
  std::uint64_t seed = 1;
  GridFlags grid;
  std::optional<double> windowLo, windowHi;
  std::string init = "zero";
  double initAlpha = 0.15;
  double initAmplitude = 1.0;
  std::size_t picardMaxIters = PicardConfig{}.maxIters;
  double picardTol = PicardConfig{}.supTol;
  std::string manifest;
};

InitialData make_initial_data(const std::string& name, double alpha, double amplitude) {
  if (name == "zero") return InitialData::zero();
  if (name == "constant") return InitialData::constant(amplitude);
  if (name == "weierstrass") return InitialData::weierstrass(alpha, amplitude);
  throw DomainError("unknown initial data '" + name + "' (expected zero|constant|weierstrass)");
}

RunManifest simulate_manifest(const SimulateArgs& a) {
  RunManifest m;
  m.command = "simulate";
  m.op = parse_operator(a.op);
  m.H = a.H;
  m.d = a.d;
  m.grid = a.grid.spec();
  m.driftName = a.drift;
  m.driftParams = a.driftParams;
  m.sigma = a.sigma.empty() ? identity_matrix(a.d) : a.sigma;
  m.nReplicas = a.replicas;
  m.baseSeed = a.seed;
  m.extra["method"] = a.method;
  m.extra["init"] = {{"name", a.init}, {"alpha", a.initAlpha}, {"amplitude", a.initAmplitude}};
  if (a.windowLo || a.windowHi) {
    if (!(a.windowLo && a.windowHi)) throw DomainError("give both --window-lo and --window-hi");
    m.extra["window"] = {*a.windowLo, *a.windowHi};
  }
  if (a.method == "picard") {
    m.extra["picardMaxIters"] = a.picardMaxIters;
    m.tolerances["picardSupTol"] = a.picardTol;
  }
  return m;
}

int cmd_simulate(SimulateArgs a, const Common& c) {
  RunManifest m = a.manifest.empty() ? simulate_manifest(a) : RunManifest::load(a.manifest);
  if (m.command != "simulate") throw DomainError("manifest is for '" + m.command + "', not simulate");

  ModelSpec model;
  model.op = m.op;
  model.H = m.H;
  model.d = m.d;
  model.sigma = m.sigma;
  model.drift = DriftSpec::from_name(m.driftName, m.driftParams);
  const auto& init = m.extra.at("init");
  model.init = make_initial_data(init.at("name").get<std::string>(), init.at("alpha").get<double>(),
                                 init.at("amplitude").get<double>());
  EnsembleOptions eo;
  eo.method = parse_method(m.extra.at("method").get<std::string>());
  eo.threads = c.threads;
  if (m.extra.contains("window"))
    eo.window = std::make_pair(m.extra["window"][0].get<double>(), m.extra["window"][1].get<double>());
  if (eo.method == Method::Picard) {
    eo.picard.maxIters = m.extra.value("picardMaxIters", eo.picard.maxIters);
    if (m.tolerances.count("picardSupTol")) eo.picard.supTol = m.tolerances.at("picardSupTol");
  }
  if (m.nReplicas == 0) throw DomainError("need at least one replica");
  m.grid.validate();
  model.init.validate(m.grid.xMin, m.grid.xMax);
  const EnsembleRunner runner(model, m.grid, eo);

  const fs::path dir = prepare_run(c.out, m);
  EnsembleWriter writer((dir / "fields" / "ensemble.bin").string(), (dir / "fields" / "index.jsonl").string(), m.op,
                        m.H);
  Table picardTable({"replica", "iteration", "distance"});

  // Results may finish out of order; they are written in replica order so
  // the files do not depend on scheduling.
  std::mutex mutex;
  std::map<std::size_t, SolutionField> pending;
  std::map<std::size_t, std::vector<double>> distances;
  std::size_t nextToWrite = 0;
  auto deliver = [&](std::size_t r, SolutionField f) {
    std::lock_guard lock(mutex);
    pending.emplace(r, std::move(f));
    while (!pending.empty() && pending.begin()->first == nextToWrite) {
      writer.append(nextToWrite, pending.begin()->second);
      pending.erase(pending.begin());
      ++nextToWrite;
    }
  };

  if (eo.method == Method::Picard) {
    // same scheduling as EnsembleRunner::for_each, keeping the distances
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    auto worker = [&] {
      for (;;) {
        const std::size_t r = next.fetch_add(1);
        if (r >= m.nReplicas) return;
        try {
          PicardResult res = runner.picard_replica(m.baseSeed + r);
          {
            std::lock_guard lock(mutex);
            distances[r] = res.distances;
          }
          res.field.method = "picard";
          deliver(r, std::move(res.field));
        } catch (const NonConvergenceError& e) {
          std::lock_guard lock(mutex);
          distances[r] = e.distances();
          if (!failure) failure = std::current_exception();
          next.store(m.nReplicas);
          return;
        } catch (...) {
          std::lock_guard lock(mutex);
          if (!failure) failure = std::current_exception();
          next.store(m.nReplicas);
          return;
        }
      }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(c.threads, m.nReplicas));
    std::vector<std::thread> pool;
    for (std::size_t q = 1; q < threads; ++q) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& [r, ds] : distances)
      for (std::size_t k = 0; k < ds.size(); ++k)
        picardTable.add_row({static_cast<long long>(r), static_cast<long long>(k + 1), ds[k]});
    picardTable.save((dir / "tables" / "picard.csv").string());
    if (failure) {
      try {
        std::rethrow_exception(failure);
      } catch (const NonConvergenceError& e) {
        std::cerr << "picard did not converge; distances: " << join(e.distances()) << "\n";
        throw CheckFailed(e.what());
      }
    }
    bool decreasing = true;
    for (const auto& [r, ds] : distances)
      for (std::size_t k = 2; k < ds.size(); ++k)
        if (!(ds[k] < ds[k - 1])) decreasing = false;
    std::cout << "picard_distances_replica_0: " << join(distances.begin()->second) << "\n"
              << "picard_strictly_decreasing_after_2: " << (decreasing ? "yes" : "no") << "\n";
  } else {
    runner.for_each(m.nReplicas, m.baseSeed, deliver);
  }
  writer.finish();
  std::cout << "run: " << dir.string() << "\n"
            << "replicas: " << m.nReplicas << "\n"
            << "method: " << to_string(eo.method) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// holder

struct HolderArgs {
  std::string run;
  std::string direction = "both";
  double p = 2.0;
  double tolerance = 0.1;
  std::optional<double> alpha;
  std::size_t lagMin = 4;
  std::optional<std::size_t> lagMax;
  std::size_t timeStride = 0;
  std::size_t spaceStride = 4;
  std::size_t minSamples = 100;
};

int cmd_holder(const HolderArgs& a, const Common&) {
  const fs::path dir(a.run);
  const fs::path index = dir / "fields" / "index.jsonl";
  const fs::path data = dir / "fields" / "ensemble.bin";
  if (!fs::exists(dir / "manifest.json") || !fs::exists(index) || !fs::exists(data))
    throw DomainError("no ensemble in " + a.run + " (expected manifest.json and fields/ from simulate)");
  const RunManifest m = RunManifest::load((dir / "manifest.json").string());
  const GridSpec& grid = m.grid;

  double alpha = 1.0;
  if (a.alpha) {
    alpha = *a.alpha;
  } else if (m.extra.contains("init") && m.extra["init"].value("name", "zero") == "weierstrass") {
    alpha = m.extra["init"].at("alpha").get<double>();
  }

  std::vector<Direction> dirs;
  if (a.direction == "both")
    dirs = {Direction::Spatial, Direction::Temporal};
  else
    dirs = {parse_direction(a.direction)};

  const std::vector<EnsembleEntry> entries = read_ensemble_index(index.string());
  std::vector<StructureAccumulator> accs;
  for (Direction d : dirs) {
    StructureAccumulator::Options o;
    o.direction = d;
    o.orders = {a.p};
    if (d == Direction::Spatial) {
      std::size_t jLo = 0, jHi = grid.nX;
      if (m.extra.contains("window"))
        std::tie(jLo, jHi) = DirectConvolution::window_nodes(grid, m.extra["window"][0].get<double>(),
                                                             m.extra["window"][1].get<double>());
      o.lags = half_dyadic_lags(a.lagMin, a.lagMax.value_or((jHi - jLo) / 8));
      const std::size_t stride = a.timeStride ? a.timeStride : std::max<std::size_t>(1, grid.nT / 16);
      for (std::size_t n = grid.nT / 2; n <= grid.nT; n += stride)
        if (n > 0) o.timeSlots.push_back(n);
    } else {
      o.lags = half_dyadic_lags(a.lagMin, a.lagMax.value_or(grid.nT / 8));
      o.spaceStride = a.spaceStride;
    }
    accs.emplace_back(o);
  }
  for_each_stored_field(data.string(), entries, [&](const EnsembleEntry&, const StoredField& s) {
    for (auto& acc : accs) acc.add(s.field);
  });

  bool ok = true;
  nlohmann::json summary = nlohmann::json::array();
  for (std::size_t q = 0; q < dirs.size(); ++q) {
    const StructureFunction sf = accs[q].result(0, a.minSamples);
    const ExponentFit fit = fit_exponent(sf, sf.lags.front(), sf.lags.back());
    const HolderReport rep = holder_report(m.op, m.H, sf, fit, a.tolerance, alpha);
    ok = ok && rep.pass;
    const std::string name(to_string(dirs[q]));

    Table table({"lag", "value", "std_error", "samples"});
    for (std::size_t l = 0; l < sf.lags.size(); ++l)
      table.add_row({sf.lags[l], sf.values[l], sf.stdErrors[l], static_cast<long long>(sf.sampleCounts[l])});
    table.save((dir / "tables" / ("structure_" + name + ".csv")).string());

    LogLogChart chart;
    chart.title = std::string(to_string(m.op)) + " H=" + format_double(m.H) + ", " + name + " structure function, p=" +
                  format_double(a.p);
    chart.xLabel = name == "spatial" ? "lag (space)" : "lag (time)";
    chart.yLabel = "mean |increment|^p";
    chart.series.push_back({"estimate", sf.lags, sf.values, "#1f77b4", true, false});
    chart.add_power_line("fit, slope " + format_double(std::round(fit.slope * 1e4) / 1e4), fit.slope, fit.intercept,
                         "#d62728", false);
    // guide through the geometric middle of the data with the theoretical slope
    double lx = 0.0, ly = 0.0;
    for (std::size_t l = 0; l < sf.lags.size(); ++l) {
      lx += std::log(sf.lags[l]);
      ly += std::log(sf.values[l]);
    }
    lx /= static_cast<double>(sf.lags.size());
    ly /= static_cast<double>(sf.lags.size());
    chart.add_power_line("theory, slope " + format_double(rep.theoretical), rep.theoretical, ly - rep.theoretical * lx,
                         "#2ca02c", true);
    chart.save((dir / "charts" / ("structure_" + name + ".svg")).string());

    std::cout << "direction: " << name << "\n"
              << "op: " << to_string(m.op) << "\n"
              << "H: " << format_double(m.H) << "\n"
              << "p: " << format_double(a.p) << "\n"
              << "replicas: " << accs[q].replicas() << "\n"
              << "lags: " << sf.lags.size() << " from " << format_double(sf.lags.front()) << " to "
              << format_double(sf.lags.back()) << "\n"
              << "slope: " << format_double(fit.slope) << "\n"
              << "slope_std_error: " << format_double(fit.stdErr) << "\n"
              << "r_squared: " << format_double(fit.rSquared) << "\n"
              << "theoretical: " << format_double(rep.theoretical) << "\n"
              << "tolerance: " << format_double(rep.tolerance) << "\n"
              << "margin: " << format_double(rep.margin) << "\n"
              << "verdict: " << (rep.pass ? "pass" : "fail") << "\n\n";
    summary.push_back({{"direction", name},
                       {"p", a.p},
                       {"slope", fit.slope},
                       {"stdErr", fit.stdErr},
                       {"theoretical", rep.theoretical},
                       {"tolerance", rep.tolerance},
                       {"pass", rep.pass}});
  }
  std::ofstream((dir / "holder.json").string()) << summary.dump(2) << "\n";
  return ok ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::vector<std::string> only;
  bool quick = false;
  std::uint64_t seed = AcceptanceOptions{}.seed;
  bool verbose = false;
};

int cmd_verify(const VerifyArgs& a, const Common& c) {
  AcceptanceOptions o;
  o.quick = a.quick;
  o.threads = c.threads;
  o.seed = a.seed;
  o.only = a.only;
  if (a.verbose) o.log = [](const std::string& s) { std::cerr << "  " << s << "\n"; };

  RunManifest m;
  m.command = "verify";
  m.baseSeed = a.seed;
  m.extra["quick"] = a.quick;
  m.extra["only"] = a.only;
  const fs::path dir = prepare_run(c.out, m);

  Table table({"id", "key", "pass", "margin", "seconds", "detail"});
  std::vector<std::string> failed;
  run_acceptance(o, [&](const CriterionResult& r) {
    std::cout << format_result_line(r) << std::endl;
    table.add_row({static_cast<long long>(r.id), r.key, std::string(r.pass ? "pass" : "fail"), r.margin, r.seconds,
                   r.detail});
    if (!r.pass) failed.push_back(r.key);
  });
  table.save((dir / "tables" / "acceptance.csv").string());
  if (failed.empty()) return kOk;
  std::cout << "failed:";
  for (const auto& k : failed) std::cout << ' ' << k;
  std::cout << "\n";
  return kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional-noise stochastic heat and wave equations: simulation and regularity checks"};
  app.require_subcommand(1);
  Common common;

  NoiseArgs noise;
  auto* noiseCmd = app.add_subcommand("noise", "sample a fractional noise sheet and write it to disk");
  add_common(noiseCmd, common, false);
  noiseCmd->add_option("--H", noise.H, "Hurst index, 0 < H <= 0.5")->capture_default_str();
  noiseCmd->add_option("--d", noise.d, "components")->capture_default_str();
  noiseCmd->add_option("--seed", noise.seed)->capture_default_str();
  add_grid(noiseCmd, noise.grid);

  VarianceArgs var;
  auto* varCmd = app.add_subcommand("variance-table", "Var u(t,x) by quadrature over a grid of times");
  add_common(varCmd, common, false);
  varCmd->add_option("--op", var.op, "heat or wave")->capture_default_str();
  varCmd->add_option("--H", var.H)->capture_default_str();
  varCmd->add_option("--t-min", var.tMin)->capture_default_str();
  varCmd->add_option("--t-max", var.tMax)->capture_default_str();
  varCmd->add_option("--points", var.points, "log-spaced times")->capture_default_str();
  varCmd->add_option("--t", var.times, "explicit times (overrides the log grid)")->delimiter(',');

  GapArgs gap;
  auto* gapCmd = app.add_subcommand("gap-table", "covariance gap R(0) - R(x) by quadrature");
  add_common(gapCmd, common, false);
  gapCmd->add_option("--op", gap.op)->capture_default_str();
  gapCmd->add_option("--H", gap.H)->capture_default_str();
  gapCmd->add_option("--t", gap.t)->capture_default_str();
  gapCmd->add_option("--x-min", gap.xMin)->capture_default_str();
  gapCmd->add_option("--x-max", gap.xMax)->capture_default_str();
  gapCmd->add_option("--points", gap.points)->capture_default_str();
  gapCmd->add_option("--x", gap.xs, "explicit distances")->delimiter(',');

  IsometryArgs iso;
  auto* isoCmd = app.add_subcommand("isometry", "Monte Carlo check of the Wiener-integral isometry");
  add_common(isoCmd, common, false);
  isoCmd->add_option("--H", iso.H, "one or more Hurst indices")->delimiter(',')->capture_default_str();
  isoCmd->add_option("--phi", iso.phi, "gauss|odd-step|wave-packet|zero|all")->capture_default_str();
  isoCmd->add_option("--replicas", iso.replicas)->capture_default_str();
  isoCmd->add_option("--seed", iso.seed)->capture_default_str();
  isoCmd->add_option("--z-max", iso.zMax, "largest accepted |z|")->capture_default_str();
  add_grid(isoCmd, iso.grid);

  SimulateArgs sim;
  auto* simCmd = app.add_subcommand("simulate", "run an ensemble of solutions and store the fields");
  add_common(simCmd, common, true);
  simCmd->add_option("--op", sim.op)->capture_default_str();
  simCmd->add_option("--H", sim.H)->capture_default_str();
  simCmd->add_option("--d", sim.d)->capture_default_str();
  simCmd->add_option("--sigma", sim.sigma, "d x d row-major (identity if omitted)")->delimiter(',');
  simCmd->add_option("--drift", sim.drift, "none|sin|linear|constant")->capture_default_str();
  simCmd->add_option("--drift-param", sim.driftParams)->delimiter(',');
  simCmd->add_option("--method", sim.method, "spectral|direct|picard")->capture_default_str();
  simCmd->add_option("--replicas", sim.replicas)->capture_default_str();
  simCmd->add_option("--seed", sim.seed, "replica r uses seed + r")->capture_default_str();
  add_grid(simCmd, sim.grid);
  simCmd->add_option("--window-lo", sim.windowLo, "evaluation window (direct method)");
  simCmd->add_option("--window-hi", sim.windowHi);
  simCmd->add_option("--init", sim.init, "zero|constant|weierstrass")->capture_default_str();
  simCmd->add_option("--init-alpha", sim.initAlpha)->capture_default_str();
  simCmd->add_option("--init-amplitude", sim.initAmplitude)->capture_default_str();
  simCmd->add_option("--picard-max-iters", sim.picardMaxIters)->capture_default_str();
  simCmd->add_option("--picard-tol", sim.picardTol)->capture_default_str();
  simCmd->add_option("--manifest", sim.manifest, "replay a saved manifest (other model flags are ignored)");

  HolderArgs hol;
  auto* holCmd = app.add_subcommand("holder", "structure functions and Holder exponents of a stored ensemble");
  add_common(holCmd, common, false);
  holCmd->add_option("--run", hol.run, "run directory written by simulate")->required();
  holCmd->add_option("--direction", hol.direction, "spatial|temporal|both")->capture_default_str();
  holCmd->add_option("--p", hol.p, "moment order")->capture_default_str();
  holCmd->add_option("--tolerance", hol.tolerance)->capture_default_str();
  holCmd->add_option("--alpha", hol.alpha, "Holder exponent of the initial data");
  holCmd->add_option("--lag-min", hol.lagMin, "smallest lag in cells or steps")->capture_default_str();
  holCmd->add_option("--lag-max", hol.lagMax, "largest lag (default window/8)");
  holCmd->add_option("--time-stride", hol.timeStride, "spacing of spatial base times (default nT/16)");
  holCmd->add_option("--space-stride", hol.spaceStride)->capture_default_str();
  holCmd->add_option("--min-samples", hol.minSamples)->capture_default_str();

  VerifyArgs ver;
  auto* verCmd = app.add_subcommand("verify", "run the acceptance suite");
  add_common(verCmd, common, true);
  verCmd->add_option("--only", ver.only, "criterion keys or numbers")->delimiter(',');
  verCmd->add_flag("--quick", ver.quick, "half the replicas, tolerances x1.5");
  verCmd->add_option("--seed", ver.seed)->capture_default_str();
  verCmd->add_flag("--verbose", ver.verbose, "progress on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    for (CLI::App* sub : app.get_subcommands()) apply_config(sub);
    if (*noiseCmd) return cmd_noise(noise, common);
    if (*varCmd) return cmd_variance_table(var, common);
    if (*gapCmd) return cmd_gap_table(gap, common);
    if (*isoCmd) return cmd_isometry(iso, common);
    if (*simCmd) return cmd_simulate(sim, common);
    if (*holCmd) return cmd_holder(hol, common);
    if (*verCmd) return cmd_verify(ver, common);
  } catch (const CheckFailed& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return kCheckFailed;
  } catch (const NonConvergenceError& e) {
    std::cerr << "error: " << e.what() << "; distances: " << join(e.distances()) << "\n";
    return kCheckFailed;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const PartialResultsError& e) {
    std::cerr << "error: " << e.what() << " (" << e.completed() << " completed)\n";
    return kNumerical;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigurationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InsufficientDataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed manifest: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kUsage;
}
