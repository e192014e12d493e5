#include "dpmnorm_cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "dpmnorm/dpm_prior.hpp"
#include "dpmnorm/errors.hpp"
#include "dpmnorm/version.hpp"

namespace dpmnorm::cli {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;
constexpr double kReportedSize = 0.1;

struct RunConfig {
  std::string command;
  std::string data;
  std::string alpha_grid;
  int replicates = 10000;
  std::uint64_t seed = 1;
  std::string output;
  std::string format = "csv";
  int parallelism = 1;
  std::string dist = "normal";
  int n = 100;
  int p = 1;
  int datasets = 100;
  int paths = 20;
  std::string checkpoints = "100,500,2000";
  int runs = 100;
  int gibbs_iters = 10000;
  double alpha = 1.0;
  std::string grid = "-4..4..0.01";
  double eps = kDefaultResidualTolerance;
  std::string weights;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_number(std::string_view s, double& v) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  return ec == std::errc() && ptr == t.data() + t.size();
}

double require_number(std::string_view s, std::string_view what) {
  double v;
  if (!parse_number(s, v)) throw InputError("cannot parse " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

std::vector<std::string> split(std::string_view s, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    const auto k = s.find(sep, pos);
    out.emplace_back(s.substr(pos, k == std::string_view::npos ? std::string_view::npos : k - pos));
    if (k == std::string_view::npos) break;
    pos = k + sep.size();
  }
  return out;
}

// log2 of a grid endpoint written as "2^k" or as a positive value.
double grid_exponent(std::string_view s) {
  const std::string t = trim(s);
  if (t.rfind("2^", 0) == 0) return require_number(t.substr(2), "alpha grid exponent");
  const double v = require_number(t, "alpha grid endpoint");
  if (!(v > 0.0)) throw InputError("alpha grid endpoints must be positive");
  return std::log2(v);
}

std::string config_line(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string s = "#";
  for (const auto& [k, v] : kv) s += " " + k + "=" + v;
  return s;
}

class Emitter {
 public:
  Emitter(const RunConfig& cfg, std::ostream& out) : cfg_(cfg), out_(&out) {
    if (!cfg.output.empty()) {
      file_ = std::make_unique<std::ofstream>(cfg.output);
      if (!*file_) throw InputError("cannot open output file '" + cfg.output + "'");
      out_ = file_.get();
    }
  }

  std::ostream& stream() { return *out_; }
  bool json_format() const { return cfg_.format == "json"; }

  void csv_preamble(const std::vector<std::pair<std::string, std::string>>& echo) {
    *out_ << "# dpmnorm " << version() << "\n" << config_line(echo) << "\n";
  }

  // Side file next to the output (skipped when writing to stdout).
  void side_file(const std::string& suffix, const std::string& content) {
    if (cfg_.output.empty()) return;
    std::ofstream f(cfg_.output + suffix);
    if (!f) throw InputError("cannot open output file '" + cfg_.output + suffix + "'");
    f << content;
  }

 private:
  const RunConfig& cfg_;
  std::ostream* out_;
  std::unique_ptr<std::ofstream> file_;
};

json config_json(const std::vector<std::pair<std::string, std::string>>& echo) {
  json j = json::object();
  for (const auto& [k, v] : echo) j[k] = v;
  return j;
}

json header_json(const std::vector<std::pair<std::string, std::string>>& echo) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["version"] = std::string(version());
  j["config"] = config_json(echo);
  return j;
}

std::string fmt(double v) { return format_double(v); }

std::vector<std::pair<std::string, std::string>> base_echo(const RunConfig& c) {
  return {{"command", c.command}, {"seed", std::to_string(c.seed)}, {"format", c.format}};
}

std::vector<double> parse_weights(const std::string& text, std::size_t count) {
  if (text.empty()) return std::vector<double>(count, 1.0 / static_cast<double>(count));
  std::vector<double> w;
  for (const auto& s : split(text, ",")) w.push_back(require_number(s, "weight"));
  if (w.size() != count) throw InputError("--weights needs one value per grid point");
  double total = 0.0;
  for (double v : w) {
    if (!(v >= 0.0)) throw InputError("--weights must be non-negative");
    total += v;
  }
  if (!(total > 0.0)) throw InputError("--weights must not all be zero");
  for (double& v : w) v /= total;
  return w;
}

int cmd_test(const RunConfig& c, std::ostream& out) {
  if (c.data.empty()) throw InputError("test: --data is required");
  const DataMatrix x = read_data_csv(c.data);
  const AlphaGrid grid = c.alpha_grid.empty() ? report_grid() : parse_alpha_grid(c.alpha_grid);
  const BfCurve curve = bf_curve(x, grid, c.replicates, c.seed, c.parallelism);
  const std::vector<double> w = parse_weights(c.weights, grid.values.size());
  const double log_hm = combine_log_bf(curve, w);

  auto echo = base_echo(c);
  echo.insert(echo.end(), {{"data", c.data},
                           {"alpha_grid", c.alpha_grid.empty() ? "2^-6..2^13" : c.alpha_grid},
                           {"replicates", std::to_string(c.replicates)},
                           {"weights", c.weights.empty() ? "uniform" : c.weights}});
  const double ln10 = std::log(10.0);
  json summary = header_json(echo);
  summary["n"] = x.rows();
  summary["p"] = x.cols();
  summary["min_log10_bf"] = curve.min_log_bf / ln10;
  summary["argmin_alpha"] = curve.argmin_alpha;
  summary["harmonic_mean_log10_bf"] = log_hm / ln10;
  summary["log_marginal_null"] = curve.estimates.front().log_marginal_null;

  Emitter em(c, out);
  if (em.json_format()) {
    json rows = json::array();
    for (std::size_t j = 0; j < curve.alpha.size(); ++j) {
      const auto& e = curve.estimates[j];
      rows.push_back({{"alpha", curve.alpha[j]},
                      {"log10_bf", e.log_bf / ln10},
                      {"mc_se", e.mc_se_log / ln10},
                      {"ess", e.ess}});
    }
    summary["curve"] = rows;
    em.stream() << summary.dump(2) << "\n";
    return kOk;
  }
  em.csv_preamble(echo);
  em.stream() << "alpha,log10_bf,mc_se,ess\n";
  for (std::size_t j = 0; j < curve.alpha.size(); ++j) {
    const auto& e = curve.estimates[j];
    em.stream() << fmt(curve.alpha[j]) << "," << fmt(e.log_bf / ln10) << "," << fmt(e.mc_se_log / ln10) << ","
                << fmt(e.ess) << "\n";
  }
  em.side_file(".summary.json", summary.dump(2) + "\n");
  return kOk;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  const Distribution d = parse_distribution(c.dist);
  Rng rng = substream(c.seed, Stream::kSimulate, 0);
  const DataMatrix x = simulate(d, c.n, c.p, rng);
  auto echo = base_echo(c);
  echo.insert(echo.end(), {{"dist", c.dist}, {"n", std::to_string(c.n)}, {"p", std::to_string(c.p)}});
  Emitter em(c, out);
  if (em.json_format()) {
    json j = header_json(echo);
    json rows = json::array();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index k = 0; k < x.cols(); ++k) row.push_back(x(i, k));
      rows.push_back(row);
    }
    j["data"] = rows;
    em.stream() << j.dump(2) << "\n";
    return kOk;
  }
  em.csv_preamble(echo);
  for (Eigen::Index k = 0; k < x.cols(); ++k) em.stream() << (k ? "," : "") << "x" << k + 1;
  em.stream() << "\n";
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index k = 0; k < x.cols(); ++k) em.stream() << (k ? "," : "") << fmt(x(i, k));
    em.stream() << "\n";
  }
  return kOk;
}

int cmd_power(const RunConfig& c, std::ostream& out) {
  PowerOptions opt;
  opt.alternative = parse_distribution(c.dist);
  if (opt.alternative == Distribution::kCopulaDemo) throw InputError("power: copula-demo is bivariate");
  opt.n = c.n;
  opt.datasets = c.datasets;
  opt.replicates = c.replicates;
  opt.grid = c.alpha_grid.empty() ? test_grid() : parse_alpha_grid(c.alpha_grid);
  opt.seed = c.seed;
  opt.parallelism = c.parallelism;
  const PowerResult r = power_size_study(opt);

  auto echo = base_echo(c);
  echo.insert(echo.end(), {{"dist", c.dist},
                           {"n", std::to_string(c.n)},
                           {"datasets", std::to_string(c.datasets)},
                           {"replicates", std::to_string(c.replicates)},
                           {"alpha_grid", c.alpha_grid.empty() ? "2^-6..2^4" : c.alpha_grid}});
  json summary = header_json(echo);
  summary["size"] = kReportedSize;
  summary["power_dpm"] = power_at_size(r.roc_dpm, kReportedSize);
  summary["power_ad"] = power_at_size(r.roc_ad, kReportedSize);

  Emitter em(c, out);
  if (em.json_format()) {
    auto roc = [](const std::vector<RocPoint>& pts) {
      json a = json::array();
      for (const auto& pt : pts) a.push_back({{"threshold", pt.threshold}, {"size", pt.size}, {"power", pt.power}});
      return a;
    };
    summary["roc_dpm"] = roc(r.roc_dpm);
    summary["roc_ad"] = roc(r.roc_ad);
    summary["null_min_log_bf"] = r.null_min_log_bf;
    summary["alt_min_log_bf"] = r.alt_min_log_bf;
    summary["null_ad"] = r.null_ad;
    summary["alt_ad"] = r.alt_ad;
    em.stream() << summary.dump(2) << "\n";
    return kOk;
  }
  em.csv_preamble(echo);
  em.stream() << "method,threshold,size,power\n";
  for (const auto& pt : r.roc_dpm)
    em.stream() << "dpm_min_bf," << fmt(pt.threshold) << "," << fmt(pt.size) << "," << fmt(pt.power) << "\n";
  for (const auto& pt : r.roc_ad)
    em.stream() << "anderson_darling," << fmt(pt.threshold) << "," << fmt(pt.size) << "," << fmt(pt.power)
                << "\n";
  std::ostringstream stats;
  stats << "group,dataset,min_log_bf,ad\n";
  for (std::size_t k = 0; k < r.null_ad.size(); ++k)
    stats << "null," << k << "," << fmt(r.null_min_log_bf[k]) << "," << fmt(r.null_ad[k]) << "\n";
  for (std::size_t k = 0; k < r.alt_ad.size(); ++k)
    stats << "alt," << k << "," << fmt(r.alt_min_log_bf[k]) << "," << fmt(r.alt_ad[k]) << "\n";
  em.side_file(".stats.csv", stats.str());
  em.side_file(".summary.json", summary.dump(2) + "\n");
  return kOk;
}

int cmd_consistency(const RunConfig& c, std::ostream& out) {
  ConsistencyOptions opt;
  opt.checkpoints = parse_int_list(c.checkpoints);
  opt.paths = c.paths;
  opt.alpha = c.alpha;
  opt.replicates = c.replicates;
  opt.p = c.p;
  opt.seed = c.seed;
  opt.parallelism = c.parallelism;
  const ConsistencyResult r = consistency_study(opt);

  auto echo = base_echo(c);
  echo.insert(echo.end(), {{"checkpoints", c.checkpoints},
                           {"paths", std::to_string(c.paths)},
                           {"alpha", fmt(c.alpha)},
                           {"p", std::to_string(c.p)},
                           {"replicates", std::to_string(c.replicates)}});
  Emitter em(c, out);
  if (em.json_format()) {
    json j = header_json(echo);
    json s = json::array();
    for (const auto& cs : r.summary)
      s.push_back({{"n", cs.n},
                   {"q025", cs.q025},
                   {"median", cs.median},
                   {"q975", cs.q975},
                   {"fraction_positive", cs.fraction_positive}});
    j["summary"] = s;
    j["log_bf"] = r.log_bf;
    j["mc_se"] = r.mc_se;
    em.stream() << j.dump(2) << "\n";
    return kOk;
  }
  em.csv_preamble(echo);
  em.stream() << "n,q025_log_bf,median_log_bf,q975_log_bf,fraction_bf_above_1\n";
  for (const auto& cs : r.summary)
    em.stream() << cs.n << "," << fmt(cs.q025) << "," << fmt(cs.median) << "," << fmt(cs.q975) << ","
                << fmt(cs.fraction_positive) << "\n";
  std::ostringstream paths;
  paths << "path,n,log_bf,mc_se\n";
  for (std::size_t p = 0; p < r.log_bf.size(); ++p)
    for (std::size_t k = 0; k < r.checkpoints.size(); ++k)
      paths << p << "," << r.checkpoints[k] << "," << fmt(r.log_bf[p][k]) << "," << fmt(r.mc_se[p][k]) << "\n";
  em.side_file(".paths.csv", paths.str());
  return kOk;
}

int cmd_bench(const RunConfig& c, std::ostream& out) {
  DataMatrix x;
  if (c.data.empty()) {
    Rng rng = substream(c.seed, Stream::kSimulate, 0);
    x = simulate(Distribution::kNormal, c.n, 1, rng);
  } else {
    x = read_data_csv(c.data);
  }
  BenchOptions opt;
  opt.alpha = c.alpha;
  opt.runs = c.runs;
  opt.replicates = c.replicates;
  opt.gibbs_iters = c.gibbs_iters;
  opt.seed = c.seed;
  opt.parallelism = c.parallelism;
  const BenchResult r = estimator_benchmark(x, opt);

  auto echo = base_echo(c);
  echo.insert(echo.end(), {{"data", c.data.empty() ? "simulated-normal" : c.data},
                           {"n", std::to_string(x.rows())},
                           {"alpha", fmt(c.alpha)},
                           {"runs", std::to_string(c.runs)},
                           {"replicates", std::to_string(c.replicates)},
                           {"gibbs_iters", std::to_string(c.gibbs_iters)}});
  auto summary_json = [](const BenchSummary& s) {
    return json{{"mean", s.mean}, {"min", s.min}, {"q1", s.q1}, {"median", s.median},
                {"q3", s.q3},     {"max", s.max}, {"iqr", s.iqr()}};
  };
  json summary = header_json(echo);
  summary["importance_sampler"] = summary_json(r.sis);
  summary["basu_chib"] = summary_json(r.bc);

  std::ostringstream timing;
  timing << "run,sis_seconds,bc_seconds\n";
  for (std::size_t k = 0; k < r.runs.size(); ++k)
    timing << k << "," << fmt(r.runs[k].sis_seconds) << "," << fmt(r.runs[k].bc_seconds) << "\n";
  timing << "median," << fmt(r.sis.median_seconds) << "," << fmt(r.bc.median_seconds) << "\n";

  Emitter em(c, out);
  if (em.json_format()) {
    json runs = json::array();
    for (const auto& run : r.runs)
      runs.push_back({{"sis_log_bf", run.sis_log_bf},
                      {"sis_mc_se", run.sis_se},
                      {"bc_log_bf", run.bc_log_bf},
                      {"bc_mc_se", run.bc_se}});
    summary["runs"] = runs;
    em.stream() << summary.dump(2) << "\n";
  } else {
    em.csv_preamble(echo);
    em.stream() << "run,sis_log_bf,sis_mc_se,bc_log_bf,bc_mc_se\n";
    for (std::size_t k = 0; k < r.runs.size(); ++k)
      em.stream() << k << "," << fmt(r.runs[k].sis_log_bf) << "," << fmt(r.runs[k].sis_se) << ","
                  << fmt(r.runs[k].bc_log_bf) << "," << fmt(r.runs[k].bc_se) << "\n";
    em.side_file(".summary.json", summary.dump(2) + "\n");
  }
  // Wall clock varies between runs, so it never enters the main output.
  em.side_file(".timing.csv", timing.str());
  return kOk;
}

int cmd_draw_prior(const RunConfig& c, std::ostream& out) {
  const Eigen::VectorXd grid = parse_linear_grid(c.grid);
  const int draws = std::max(1, c.replicates);
  const NormalParams anchor{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)};
  std::vector<Eigen::VectorXd> dens;
  for (int r = 0; r < draws; ++r) {
    Rng rng = substream(c.seed, Stream::kPrior, static_cast<std::uint64_t>(r));
    dens.push_back(prior_draw_density(draw_prior(anchor, c.alpha, c.eps, rng), grid));
  }
  auto echo = base_echo(c);
  echo.insert(echo.end(), {{"alpha", fmt(c.alpha)},
                           {"grid", c.grid},
                           {"draws", std::to_string(draws)},
                           {"eps", fmt(c.eps)}});
  Emitter em(c, out);
  if (em.json_format()) {
    json j = header_json(echo);
    j["x"] = std::vector<double>(grid.data(), grid.data() + grid.size());
    json d = json::array();
    for (const auto& v : dens) d.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    j["density"] = d;
    em.stream() << j.dump(2) << "\n";
    return kOk;
  }
  em.csv_preamble(echo);
  em.stream() << "x,anchor_density";
  for (int r = 0; r < draws; ++r) em.stream() << ",draw_" << r + 1;
  em.stream() << "\n";
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    em.stream() << fmt(grid(g)) << "," << fmt(std::exp(-0.5 * grid(g) * grid(g) - 0.5 * kLogTwoPi));
    for (const auto& v : dens) em.stream() << "," << fmt(v(g));
    em.stream() << "\n";
  }
  return kOk;
}

}  // namespace

AlphaGrid parse_alpha_grid(std::string_view text) {
  const auto parts = split(text, "..");
  if (parts.empty() || parts.size() > 3) throw InputError("alpha grid must be lo..hi[..log2step]");
  const double lo = grid_exponent(parts[0]);
  const double hi = parts.size() > 1 ? grid_exponent(parts[1]) : lo;
  const double step = parts.size() == 3 ? require_number(parts[2], "alpha grid step") : 1.0;
  if (!(step > 0.0) || !(hi >= lo)) throw InputError("alpha grid needs lo <= hi and a positive step");
  return AlphaGrid::log2_range(lo, hi, step);
}

Eigen::VectorXd parse_linear_grid(std::string_view text) {
  const auto parts = split(text, "..");
  if (parts.size() != 3) throw InputError("grid must be lo..hi..step");
  const double lo = require_number(parts[0], "grid start");
  const double hi = require_number(parts[1], "grid end");
  const double step = require_number(parts[2], "grid step");
  if (!(step > 0.0) || !(hi >= lo)) throw InputError("grid needs lo <= hi and a positive step");
  const auto count = static_cast<Eigen::Index>(std::floor((hi - lo) / step + 1e-9)) + 1;
  Eigen::VectorXd g(count);
  for (Eigen::Index k = 0; k < count; ++k) g(k) = lo + static_cast<double>(k) * step;
  return g;
}

std::vector<int> parse_int_list(std::string_view text) {
  std::vector<int> out;
  for (const auto& s : split(text, ",")) {
    const double v = require_number(s, "integer list entry");
    if (v != std::floor(v)) throw InputError("expected an integer, got '" + s + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

DataMatrix parse_data_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split(t, ",");
    std::vector<double> row;
    bool numeric = true;
    for (const auto& f : fields) {
      double v;
      if (!parse_number(f, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw InputError("non-numeric value on line " + std::to_string(lineno));
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError("inconsistent column count on line " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("no data rows");
  DataMatrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) x(i, j) = rows[i][j];
  if (!x.allFinite()) throw InputError("data contain non-finite values");
  return x;
}

DataMatrix read_data_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open data file '" + path + "'");
  return parse_data_csv(f);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayes factor test of normality against a Dirichlet process mixture alternative", "dpmnorm"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);
  RunConfig c;

  auto common = [&](CLI::App* s) {
    s->add_option("--seed", c.seed, "master seed");
    s->add_option("--output", c.output, "output file (default stdout)");
    s->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    s->add_option("--parallelism", c.parallelism, "worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);
  };
  auto* test = app.add_subcommand("test", "Bayes factor curve over an alpha grid");
  test->add_option("--data", c.data, "CSV file, one observation per row");
  test->add_option("--alpha-grid", c.alpha_grid, "lo..hi[..log2step], e.g. 2^-6..2^13");
  test->add_option("--replicates", c.replicates, "importance replicates per alpha")->check(CLI::PositiveNumber);
  test->add_option("--weights", c.weights, "comma separated prior weights over the grid");
  common(test);

  auto* sim = app.add_subcommand("simulate", "write a synthetic dataset");
  sim->add_option("--dist", c.dist, "normal, t3, skewnormal, uniform or copula-demo");
  sim->add_option("--n", c.n, "observations")->check(CLI::PositiveNumber);
  sim->add_option("--p", c.p, "dimension")->check(CLI::PositiveNumber);
  common(sim);

  auto* power = app.add_subcommand("power", "power/size study against Anderson-Darling");
  power->add_option("--dist", c.dist, "alternative distribution");
  power->add_option("--n", c.n, "observations per dataset")->check(CLI::PositiveNumber);
  power->add_option("--datasets", c.datasets, "datasets per hypothesis")->check(CLI::PositiveNumber);
  power->add_option("--replicates", c.replicates, "importance replicates per alpha")->check(CLI::PositiveNumber);
  power->add_option("--alpha-grid", c.alpha_grid, "grid for the minimum Bayes factor");
  common(power);

  auto* cons = app.add_subcommand("consistency", "Bayes factor paths under normal data");
  cons->add_option("--checkpoints", c.checkpoints, "increasing sample sizes, comma separated");
  cons->add_option("--paths", c.paths, "number of paths")->check(CLI::PositiveNumber);
  cons->add_option("--alpha", c.alpha, "DP precision");
  cons->add_option("--p", c.p, "dimension")->check(CLI::PositiveNumber);
  cons->add_option("--replicates", c.replicates, "importance replicates")->check(CLI::PositiveNumber);
  common(cons);

  auto* bench = app.add_subcommand("bench", "importance sampler against Basu-Chib on one dataset");
  bench->add_option("--data", c.data, "univariate CSV (default: simulated standard normal)");
  bench->add_option("--n", c.n, "size of the simulated dataset")->check(CLI::PositiveNumber);
  bench->add_option("--runs", c.runs, "repetitions")->check(CLI::PositiveNumber);
  bench->add_option("--alpha", c.alpha, "DP precision");
  bench->add_option("--replicates", c.replicates, "samples per run")->check(CLI::PositiveNumber);
  bench->add_option("--gibbs-iters", c.gibbs_iters, "Gibbs sweeps per pass")->check(CLI::PositiveNumber);
  common(bench);

  auto* draw = app.add_subcommand("draw-prior", "densities of prior draws around N(0, 1)");
  draw->add_option("--alpha", c.alpha, "DP precision");
  draw->add_option("--grid", c.grid, "lo..hi..step");
  draw->add_option("--replicates", c.replicates, "number of draws")->default_str("1");
  draw->add_option("--eps", c.eps, "stick-breaking residual tolerance");
  common(draw);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  // The draw-prior count defaults to a single draw.
  if (draw->parsed() && draw->count("--replicates") == 0) c.replicates = 1;

  try {
    if (test->parsed()) return (c.command = "test", cmd_test(c, out));
    if (sim->parsed()) return (c.command = "simulate", cmd_simulate(c, out));
    if (power->parsed()) return (c.command = "power", cmd_power(c, out));
    if (cons->parsed()) return (c.command = "consistency", cmd_consistency(c, out));
    if (bench->parsed()) return (c.command = "bench", cmd_bench(c, out));
    if (draw->parsed()) return (c.command = "draw-prior", cmd_draw_prior(c, out));
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const PreconditionError& e) {
    err << "precondition violated: " << e.what() << "\n";
    return kPreconditionError;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::invalid_argument& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::domain_error& e) {
    err << "precondition violated: " << e.what() << "\n";
    return kPreconditionError;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumericError;
  }
  return kInputError;
}

}  // namespace dpmnorm::cli
