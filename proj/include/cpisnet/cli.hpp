#pragma once

// Command-line front end. Lives in a header so that tests can drive it
// in-process; tools/cpisnet_main.cpp is a thin wrapper.
//
// Exit codes: 0 success, 1 data error, 2 usage error.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cpisnet/cpisnet.hpp"

namespace cpisnet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;
inline constexpr const char* kDataDirEnv = "CPISNET_DATA_DIR";

struct RunConfig {
  std::string command;
  std::string assets_path;
  std::string gdp_path;
  std::string years;  // "2009", "2001-2009" or "2001,2004"
  std::string rule = "A";
  double t = kDefaultGdpThreshold;
  std::string model;
  int trials = 2000;
  int samples = 10000;
  int null_samples = 1;  // gen-null
  double alpha = 0.05;
  std::uint64_t seed = kDefaultSeed;
  unsigned jobs = 1;
  std::string out = "-";
  std::string format;
  // command specific
  std::string graph_format = "edge-list";
  std::string assortativity = "out-in";
  double correction = kDefaultSigmaCorrection;
  std::string sigma_divisor = "dof";
  bool estimate_correction = false;
  double censor_floor = kReportingFloorMusd;
  std::string ci_out;
  std::string reports_out;
  std::string initial;
  double d1 = 0.1;
  double d2 = 0.1;
  double haircut = 1.0;
  std::string d1_grid = "0,0.1,0.25,0.5,0.75";
  std::string d2_grid = "0,0.1,0.25,0.5,0.75";
  int k_max = 3;
  bool pigs = false;
  std::string group = "ES,GR,IE,PT";
  std::string ranking_out;
  std::string severity_out;
  std::size_t top = 10;
  int swap_factor = kDefaultSwapFactor;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    const auto t = cpisnet::detail::trim(cur);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

inline std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  for (const auto& f : split(s, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(f, &used));
      if (used != f.size()) throw std::invalid_argument(f);
    } catch (const std::exception&) {
      throw UsageError("bad grid value '" + f + "'");
    }
  }
  if (out.empty()) throw UsageError("empty grid");
  return out;
}

inline std::string resolve_input(const std::string& given, const char* file) {
  if (!given.empty()) return given;
  if (const char* dir = std::getenv(kDataDirEnv); dir != nullptr && *dir != '\0')
    return (std::filesystem::path(dir) / file).string();
  throw UsageError(std::string("no --") + (std::string(file) == "assets.csv" ? "assets" : "gdp") +
                   " path given and " + kDataDirEnv + " is unset");
}

template <typename Parser>
auto load(const std::string& path, const char* what, Parser parse) {
  if (path == "-") return parse(std::cin);
  std::ifstream in(path);
  if (!in) throw DataError(std::string("cannot open ") + what + " file '" + path + "'");
  try {
    return parse(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

struct Inputs {
  AssetPanel assets;
  GdpPanel gdp;
};

inline Inputs load_inputs(const RunConfig& c) {
  const auto assets_path = resolve_input(c.assets_path, "assets.csv");
  const auto gdp_path = resolve_input(c.gdp_path, "gdp.csv");
  Inputs in;
  in.assets = load(assets_path, "assets", [](std::istream& s) { return parse_asset_table(s); });
  in.gdp = load(gdp_path, "gdp", [](std::istream& s) { return parse_gdp_table(s); });
  return in;
}

inline std::vector<int> parse_years(const std::string& spec, const Inputs& in) {
  std::vector<int> years;
  auto to_int = [](const std::string& s) {
    try {
      std::size_t used = 0;
      const int y = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return y;
    } catch (const std::exception&) {
      throw UsageError("bad year '" + s + "'");
    }
  };
  if (spec.empty()) {
    const auto gdp_years = in.gdp.years();
    for (int y : in.assets.years())
      if (gdp_years.contains(y)) years.push_back(y);
    if (years.empty()) throw DataError("no year is present in both panels");
    return years;
  }
  for (const auto& part : split(spec, ',')) {
    const auto dash = part.find('-', 1);
    if (dash == std::string::npos) {
      years.push_back(to_int(part));
    } else {
      const int a = to_int(part.substr(0, dash));
      const int b = to_int(part.substr(dash + 1));
      if (b < a) throw UsageError("empty year range '" + part + "'");
      for (int y = a; y <= b; ++y) years.push_back(y);
    }
  }
  return years;
}

inline ThresholdRule parse_rule(const RunConfig& c) {
  if (c.rule == "A") return ThresholdRule::rule_a();
  if (c.rule == "B") {
    if (!(c.t > 0.0)) throw UsageError("--t must be positive");
    return ThresholdRule::rule_b(c.t);
  }
  throw UsageError("--rule must be A or B");
}

inline std::vector<ThresholdRule> parse_rules(const RunConfig& c) {
  if (c.rule == "both") {
    RunConfig b = c;
    b.rule = "B";
    return {ThresholdRule::rule_a(), parse_rule(b)};
  }
  return {parse_rule(c)};
}

inline NullModelKind parse_model(const std::string& s) {
  const auto k = parse_null_model(s);
  if (!k) throw UsageError("unknown null model '" + s + "'");
  return *k;
}

inline AssortativityVariant parse_assortativity(const std::string& s) {
  if (s == "out-in") return AssortativityVariant::out_in;
  if (s == "in-out") return AssortativityVariant::in_out;
  if (s == "out-out") return AssortativityVariant::out_out;
  if (s == "in-in") return AssortativityVariant::in_in;
  if (s == "total-total") return AssortativityVariant::total_total;
  throw UsageError("unknown assortativity variant '" + s + "'");
}

inline LogNormalFitOptions fit_options(const RunConfig& c) {
  LogNormalFitOptions o;
  if (!(c.correction > 0.0)) throw UsageError("--correction must be positive");
  o.correction_factor = c.correction;
  if (c.sigma_divisor == "dof") {
    o.divisor = SigmaDivisor::residual_dof;
  } else if (c.sigma_divisor == "ml") {
    o.divisor = SigmaDivisor::maximum_likelihood;
  } else {
    throw UsageError("--sigma-divisor must be dof or ml");
  }
  return o;
}

// Settings echoed into every output's metadata header.
inline std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& c) {
  auto num = [](double v) { return cpisnet::detail::format_number(v); };
  std::vector<std::pair<std::string, std::string>> kv = {
      {"command", c.command}, {"years", c.years.empty() ? "all" : c.years},
      {"seed", std::to_string(c.seed)}};
  const auto& cmd = c.command;
  if (cmd == "build" || cmd == "export" || cmd == "gen-null" || cmd == "knockout" ||
      cmd == "ci-table") {
    kv.emplace_back("rule", c.rule);
    if (c.rule != "A") kv.emplace_back("t", num(c.t));
  }
  if (cmd == "knockout" || cmd == "ci-table" || cmd == "gen-null") kv.emplace_back("model", c.model.empty() ? "none" : c.model);
  if (cmd == "knockout") kv.emplace_back("trials", std::to_string(c.trials));
  if (cmd == "knockout" || cmd == "ci-table") kv.emplace_back("samples", std::to_string(c.samples));
  if (cmd == "gen-null") kv.emplace_back("samples", std::to_string(c.null_samples));
  if (cmd == "knockout" || cmd == "ci-table") {
    kv.emplace_back("alpha", num(c.alpha));
    kv.emplace_back("assortativity", c.assortativity);
  }
  if (cmd == "fit-lognormal" || cmd == "gen-null" || cmd == "knockout" || cmd == "ci-table") {
    kv.emplace_back("correction", num(c.correction));
    kv.emplace_back("sigma_divisor", c.sigma_divisor);
  }
  if (cmd == "lgd" || cmd == "lgd-sweep" || cmd == "pigs-grid") {
    kv.emplace_back("haircut", num(c.haircut));
    if (!c.initial.empty()) {
      kv.emplace_back("initial", c.initial);
      kv.emplace_back("d1", num(c.d1));
      kv.emplace_back("d2", num(c.d2));
    } else if (cmd == "pigs-grid" || c.pigs) {
      kv.emplace_back("group", c.group);
    } else {
      kv.emplace_back("d1_grid", c.d1_grid);
      kv.emplace_back("d2_grid", c.d2_grid);
      kv.emplace_back("k_max", std::to_string(c.k_max));
    }
  }
  return kv;
}

inline std::string csv_header(const RunConfig& c) {
  std::ostringstream h;
  h << "# cpisnet " << kVersion << '\n';
  std::string line = "# config:";
  for (const auto& [k, v] : config_echo(c)) line += " " + k + "=" + v;
  h << line << '\n';
  return h.str();
}

inline nlohmann::json json_meta(const RunConfig& c) {
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : config_echo(c)) cfg[k] = v;
  return {{"tool", "cpisnet"}, {"version", kVersion}, {"seed", c.seed}, {"config", cfg}};
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw DataError("cannot write '" + path + "'");
      stream_ = file_.get();
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

inline bool want_json(const RunConfig& c, bool json_default) {
  if (c.format.empty()) return json_default;
  if (c.format == "json") return true;
  if (c.format == "csv") return false;
  throw UsageError("--format must be csv or json");
}

inline std::vector<AssetSlice> load_slices(const RunConfig& c, const Inputs& in) {
  std::vector<AssetSlice> out;
  for (int y : parse_years(c.years, in)) out.push_back(core_slice(in.assets, in.gdp, y));
  return out;
}

// ---------------------------------------------------------------------------

inline int cmd_build(const RunConfig& c, std::ostream& out_stream) {
  const auto rule = parse_rule(c);
  const bool json = want_json(c, false);
  const auto in = load_inputs(c);
  const auto slices = load_slices(c, in);
  Output out(c.out, out_stream);
  if (json) {
    nlohmann::json doc{{"meta", json_meta(c)}, {"networks", nlohmann::json::array()}};
    for (const auto& s : slices) {
      const auto net = apply_rule(s, rule);
      nlohmann::json edges = nlohmann::json::array();
      for (const auto& [i, j] : net.edges())
        edges.push_back({net.countries()[i], net.countries()[j]});
      doc["networks"].push_back({{"year", s.year()},
                                 {"n", net.size()},
                                 {"edges", net.edge_count()},
                                 {"mean_degree", static_cast<double>(net.edge_count()) /
                                                     static_cast<double>(net.size())},
                                 {"coverage", s.coverage()},
                                 {"edge_list", edges}});
    }
    *out << doc.dump(2) << '\n';
    return kExitOk;
  }
  *out << csv_header(c);
  std::ostringstream body;
  body << "year,holder,issuer\n";
  for (const auto& s : slices) {
    const auto net = apply_rule(s, rule);
    *out << "# summary year=" << s.year() << " n=" << net.size() << " edges=" << net.edge_count()
         << " mean_degree="
         << cpisnet::detail::format_number(static_cast<double>(net.edge_count()) /
                                           static_cast<double>(net.size()))
         << " coverage=" << cpisnet::detail::format_number(s.coverage()) << '\n';
    for (const auto& [i, j] : net.edges())
      body << s.year() << ',' << net.countries()[i] << ',' << net.countries()[j] << '\n';
  }
  *out << body.str();
  return kExitOk;
}

inline int cmd_export(const RunConfig& c, std::ostream& out_stream) {
  const auto rule = parse_rule(c);
  GraphFormat fmt = GraphFormat::edge_list;
  if (c.graph_format == "dot") {
    fmt = GraphFormat::dot;
  } else if (c.graph_format != "edge-list") {
    throw UsageError("--graph-format must be edge-list or dot");
  }
  const auto in = load_inputs(c);
  const auto years = parse_years(c.years, in);
  if (years.size() != 1) throw UsageError("export needs exactly one --year");
  const auto slice = core_slice(in.assets, in.gdp, years.front());
  Output out(c.out, out_stream);
  if (fmt == GraphFormat::edge_list) *out << csv_header(c);
  *out << export_graph(apply_rule(slice, rule), slice, fmt);
  return kExitOk;
}

inline int cmd_fit(const RunConfig& c, std::ostream& out_stream) {
  const auto opts = fit_options(c);
  const auto in = load_inputs(c);
  const auto slices = load_slices(c, in);
  nlohmann::json doc{{"meta", json_meta(c)}, {"fits", nlohmann::json::array()}};
  std::vector<double> pooled;
  for (const auto& s : slices) {
    const auto fit = fit_lognormal(s, opts);
    auto j = to_json(fit);
    if (c.estimate_correction) {
      Rng local(derive_seed(c.seed, static_cast<std::uint64_t>(s.year())));
      j["estimated_correction"] =
          estimate_sigma_correction(fit.alpha, fit.beta, fit.sigma_raw,
                                    CensorOptions{c.censor_floor, true}, c.trials, local,
                                    opts.divisor, c.jobs);
    }
    doc["fits"].push_back(j);
    pooled.insert(pooled.end(), fit.residuals.begin(), fit.residuals.end());
  }
  doc["pooled_residuals"] = to_json(summarize_residuals(pooled));
  Output out(c.out, out_stream);
  *out << doc.dump(2) << '\n';
  return kExitOk;
}

inline int cmd_gen_null(const RunConfig& c, std::ostream& out_stream) {
  const auto rule = parse_rule(c);
  if (c.model.empty()) throw UsageError("gen-null needs --model");
  const auto kind = parse_model(c.model);
  const auto in = load_inputs(c);
  const auto years = parse_years(c.years, in);
  if (years.size() != 1) throw UsageError("gen-null needs exactly one --year");
  const auto slice = core_slice(in.assets, in.gdp, years.front());
  const auto empirical = apply_rule(slice, rule);
  auto spec = make_null_spec(kind, empirical, &slice, fit_options(c));
  spec.swap_factor = c.swap_factor;
  const bool json = want_json(c, false);
  Output out(c.out, out_stream);
  nlohmann::json doc{{"meta", json_meta(c)}, {"samples", nlohmann::json::array()}};
  if (!json) *out << csv_header(c) << "sample,holder,issuer\n";
  for (int s = 0; s < c.null_samples; ++s) {
    Rng rng(derive_seed(c.seed, static_cast<std::uint64_t>(s)));
    const auto net = sample_null(spec, rng);
    if (json) {
      nlohmann::json edges = nlohmann::json::array();
      for (const auto& [i, j] : net.edges()) edges.push_back({net.countries()[i], net.countries()[j]});
      doc["samples"].push_back({{"sample", s}, {"edges", edges}});
    } else {
      for (const auto& [i, j] : net.edges())
        *out << s << ',' << net.countries()[i] << ',' << net.countries()[j] << '\n';
    }
  }
  if (json) *out << doc.dump(2) << '\n';
  return kExitOk;
}

inline std::vector<CiReport> run_ci(const RunConfig& c, const std::vector<AssetSlice>& slices,
                                    const std::vector<ThresholdRule>& rules,
                                    const std::vector<NullModelKind>& models) {
  std::vector<CiReport> reports;
  CiOptions opt;
  opt.samples = c.samples;
  opt.alpha = c.alpha;
  opt.jobs = c.jobs;
  opt.assortativity = parse_assortativity(c.assortativity);
  const auto fit_opts = fit_options(c);
  for (std::size_t r = 0; r < rules.size(); ++r)
    for (const auto& s : slices) {
      const auto net = apply_rule(s, rules[r]);
      const auto empirical = compute_measures(net, opt.assortativity);
      for (auto kind : models) {
        auto spec = make_null_spec(kind, net, &s, fit_opts);
        spec.swap_factor = c.swap_factor;
        opt.seed = derive_seed(c.seed, static_cast<std::uint64_t>(s.year()),
                               static_cast<std::uint64_t>(kind) * 2 + r);
        auto rep = ci_compare(empirical, spec, opt);
        rep.year = s.year();
        reports.push_back(std::move(rep));
      }
    }
  return reports;
}

inline void write_ci(const RunConfig& c, const std::vector<CiReport>& reports,
                     const std::string& path, std::ostream& fallback) {
  const auto rows = ci_table(reports);
  Output out(path, fallback);
  if (want_json(c, false)) {
    nlohmann::json doc{{"meta", json_meta(c)}, {"table", to_json(rows)},
                       {"reports", nlohmann::json::array()}};
    for (const auto& r : reports) doc["reports"].push_back(to_json(r));
    *out << doc.dump(2) << '\n';
  } else {
    *out << csv_header(c) << ci_table_to_csv(rows);
  }
}

inline int cmd_knockout(const RunConfig& c, std::ostream& out_stream) {
  const auto rule = parse_rule(c);
  if (c.trials < 1) throw UsageError("--trials must be >= 1");
  const auto in = load_inputs(c);
  const auto slices = load_slices(c, in);
  std::vector<BinaryNetwork> nets;
  for (const auto& s : slices) nets.push_back(apply_rule(s, rule));

  struct Curve {
    std::string source;
    CurveSummary summary;
  };
  std::vector<Curve> curves;
  for (auto strategy : {Strategy::error, Strategy::attack})
    curves.push_back({"empirical", ensemble_knockout(nets, strategy, c.trials,
                                                     derive_seed(c.seed, 0, static_cast<std::uint64_t>(strategy)), c.jobs)});

  std::optional<NullModelKind> kind;
  if (!c.model.empty()) kind = parse_model(c.model);
  if (kind) {
    // each trial runs on a freshly generated null network
    std::vector<NullModelSpec> specs;
    for (std::size_t y = 0; y < slices.size(); ++y) {
      specs.push_back(make_null_spec(*kind, nets[y], &slices[y], fit_options(c)));
      specs.back().swap_factor = c.swap_factor;
    }
    for (auto strategy : {Strategy::error, Strategy::attack}) {
      const std::uint64_t master = derive_seed(c.seed, 1, static_cast<std::uint64_t>(strategy));
      const std::size_t per = static_cast<std::size_t>(c.trials);
      std::vector<std::vector<double>> grid(specs.size() * per);
      parallel_for(grid.size(), c.jobs, [&](std::size_t idx) {
        Rng rng(derive_seed(master, idx / per, idx % per));
        const auto null_net = sample_null(specs[idx / per], rng);
        const auto trace = run_knockout(null_net, strategy, rng());
        grid[idx].resize(kCurveGridPoints);
        for (std::size_t k = 0; k < kCurveGridPoints; ++k)
          grid[idx][k] = interpolate_trace(trace.aspl_series, grid_fraction(k));
      });
      CurveSummary s;
      s.strategy = strategy;
      s.traces = grid.size();
      for (std::size_t k = 0; k < kCurveGridPoints; ++k) {
        double mean = 0.0, m2 = 0.0;
        std::size_t n = 0;
        for (const auto& g : grid) {
          ++n;
          const double d = g[k] - mean;
          mean += d / static_cast<double>(n);
          m2 += d * (g[k] - mean);
        }
        s.fraction.push_back(grid_fraction(k));
        s.mean.push_back(mean);
        s.std.push_back(n ? std::sqrt(std::max(m2, 0.0) / static_cast<double>(n)) : 0.0);
      }
      curves.push_back({std::string(null_model_name(*kind)), std::move(s)});
    }
  }

  Output out(c.out, out_stream);
  if (want_json(c, false)) {
    nlohmann::json doc{{"meta", json_meta(c)}, {"curves", nlohmann::json::array()}};
    for (const auto& cv : curves) {
      auto j = to_json(cv.summary);
      j["source"] = cv.source;
      doc["curves"].push_back(j);
    }
    *out << doc.dump(2) << '\n';
  } else {
    *out << csv_header(c) << "source,strategy,grid_point,mean,std\n";
    for (const auto& cv : curves) {
      const auto& s = cv.summary;
      for (std::size_t k = 0; k < s.fraction.size(); ++k)
        *out << cv.source << ',' << strategy_name(s.strategy) << ','
             << cpisnet::detail::format_number(s.fraction[k]) << ','
             << cpisnet::detail::format_number(s.mean[k]) << ','
             << cpisnet::detail::format_number(s.std[k]) << '\n';
    }
  }
  if (kind && !c.ci_out.empty()) write_ci(c, run_ci(c, slices, {rule}, {*kind}), c.ci_out, out_stream);
  return kExitOk;
}

inline int cmd_ci_table(const RunConfig& c, std::ostream& out_stream) {
  const auto rules = parse_rules(c);
  std::vector<NullModelKind> models;
  if (c.model.empty()) {
    models.assign(kAllNullModels.begin(), kAllNullModels.end());
  } else {
    for (const auto& m : split(c.model, ',')) models.push_back(parse_model(m));
  }
  if (c.samples < 100) throw UsageError("--samples must be >= 100");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw UsageError("--alpha must lie in (0,1)");
  const auto in = load_inputs(c);
  const auto slices = load_slices(c, in);
  const auto reports = run_ci(c, slices, rules, models);
  write_ci(c, reports, c.out, out_stream);
  if (!c.reports_out.empty()) {
    Output rep(c.reports_out, out_stream);
    nlohmann::json doc{{"meta", json_meta(c)}, {"reports", nlohmann::json::array()}};
    for (const auto& r : reports) doc["reports"].push_back(to_json(r));
    *rep << doc.dump(2) << '\n';
  }
  return kExitOk;
}

inline int cmd_lgd_sweep(const RunConfig& c, std::ostream& out_stream) {
  const auto d1 = parse_grid(c.d1_grid);
  const auto d2 = parse_grid(c.d2_grid);
  if (c.k_max < 1 || c.k_max > 3) throw UsageError("--k-max must be 1, 2 or 3");
  LgdSpec{0.0, 0.0, c.haircut}.validate();
  const auto in = load_inputs(c);
  const auto slices = load_slices(c, in);
  std::vector<ImpactSummary> all;
  for (const auto& s : slices) {
    auto part = sweep_grid(s, d1, d2, c.k_max, c.haircut, c.jobs);
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  Output out(c.out, out_stream);
  *out << csv_header(c) << sweep_to_csv(all);
  if (!c.ranking_out.empty()) {
    Output r(c.ranking_out, out_stream);
    *r << csv_header(c) << ranking_to_csv(influence_ranking(all, c.top));
  }
  if (!c.severity_out.empty()) {
    Output r(c.severity_out, out_stream);
    *r << csv_header(c) << severity_columns_to_csv(all);
  }
  return kExitOk;
}

inline int cmd_pigs_grid(const RunConfig& c, std::ostream& out_stream) {
  const auto group = split(c.group, ',');
  if (group.empty()) throw UsageError("--group is empty");
  const auto in = load_inputs(c);
  const auto years = parse_years(c.years, in);
  if (years.size() != 1) throw UsageError("pigs-grid needs exactly one --year");
  const auto slice = core_slice(in.assets, in.gdp, years.front());
  for (const auto& g : group)
    if (!slice.index_of(g)) throw DataError("country '" + g + "' is not in the " + std::to_string(slice.year()) + " core slice");
  const auto grids = pigs_grid(slice, group, kPigsD1Axis, kPigsD2Axis, c.haircut, c.jobs);
  Output out(c.out, out_stream);
  *out << csv_header(c) << pigs_to_csv(grids);
  return kExitOk;
}

inline int cmd_lgd(const RunConfig& c, std::ostream& out_stream) {
  if (c.pigs) return cmd_pigs_grid(c, out_stream);
  if (c.initial.empty()) return cmd_lgd_sweep(c, out_stream);
  const auto initial = split(c.initial, ',');
  const LgdSpec spec{c.d1, c.d2, c.haircut};
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const auto in = load_inputs(c);
  const auto years = parse_years(c.years, in);
  if (years.size() != 1) throw UsageError("lgd --initial needs exactly one --year");
  const auto slice = core_slice(in.assets, in.gdp, years.front());
  for (const auto& g : initial)
    if (!slice.index_of(g)) throw DataError("country '" + g + "' is not in the " + std::to_string(slice.year()) + " core slice");
  auto doc = to_json(cascade(slice, initial, spec));
  doc["year"] = slice.year();
  doc["meta"] = json_meta(c);
  Output out(c.out, out_stream);
  *out << doc.dump(2) << '\n';
  return kExitOk;
}

}  // namespace detail

// Parses argv and runs one subcommand. Diagnostics go to `err`; command output
// goes to --out or to `out`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  RunConfig c;
  CLI::App app{"cpisnet: cross-border asset network analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  auto data_opts = [&](CLI::App* sub) {
    sub->add_option("--assets", c.assets_path, "assets CSV (year,holder,issuer,value_musd); '-' for stdin");
    sub->add_option("--gdp", c.gdp_path, "GDP CSV (year,country,gdp_musd)");
    sub->add_option("--year,--years", c.years, "year, range 2001-2009 or list");
    sub->add_option("--seed", c.seed, "master seed");
    sub->add_option("--jobs", c.jobs, "worker threads")->check(CLI::Range(1u, 1024u));
    sub->add_option("-o,--out", c.out, "output path ('-' for stdout)");
    sub->add_option("--format", c.format, "csv or json");
  };
  auto rule_opts = [&](CLI::App* sub) {
    sub->add_option("--rule", c.rule, "A (above-average exposure) or B (GDP-normalized)");
    sub->add_option("--t", c.t, "rule B threshold as a fraction of GDP");
  };
  auto fit_opts = [&](CLI::App* sub) {
    sub->add_option("--correction", c.correction, "sigma correction factor");
    sub->add_option("--sigma-divisor", c.sigma_divisor, "dof or ml");
  };

  auto* build = app.add_subcommand("build", "threshold core slices into binary networks");
  data_opts(build);
  rule_opts(build);

  auto* exp = app.add_subcommand("export", "edge list or dot file with exposure classes");
  data_opts(exp);
  rule_opts(exp);
  exp->add_option("--graph-format", c.graph_format, "edge-list or dot");

  auto* fit = app.add_subcommand("fit-lognormal", "fit the log-normal holdings model");
  data_opts(fit);
  fit_opts(fit);
  fit->add_flag("--estimate-correction", c.estimate_correction, "estimate the sigma correction by simulation");
  fit->add_option("--trials", c.trials, "simulation trials for --estimate-correction");
  fit->add_option("--censor-floor", c.censor_floor, "reporting floor in millions of USD");

  auto* gen = app.add_subcommand("gen-null", "sample null-model networks");
  data_opts(gen);
  rule_opts(gen);
  fit_opts(gen);
  gen->add_option("--model", c.model, "er, out-degree, in-degree, rewiring, log-normal");
  gen->add_option("--samples", c.null_samples, "number of networks");
  gen->add_option("--swap-factor", c.swap_factor, "rewiring swaps per edge");

  auto* ko = app.add_subcommand("knockout", "error/attack knockout curves");
  data_opts(ko);
  rule_opts(ko);
  fit_opts(ko);
  ko->add_option("--model", c.model, "also simulate this null model");
  ko->add_option("--trials", c.trials, "traces per network");
  ko->add_option("--samples", c.samples, "null samples for --ci-out");
  ko->add_option("--alpha", c.alpha, "CI level");
  ko->add_option("--ci-out", c.ci_out, "write the CI table for --model here");
  ko->add_option("--assortativity", c.assortativity, "out-in, in-out, out-out, in-in, total-total");
  ko->add_option("--swap-factor", c.swap_factor, "rewiring swaps per edge");

  auto* ci = app.add_subcommand("ci-table", "confidence-interval comparison against null models");
  data_opts(ci);
  rule_opts(ci);
  fit_opts(ci);
  ci->add_option("--model", c.model, "comma-separated models (default: all five)");
  ci->add_option("--samples", c.samples, "null networks per model and year");
  ci->add_option("--alpha", c.alpha, "CI level");
  ci->add_option("--reports-out", c.reports_out, "per-year reports as JSON");
  ci->add_option("--assortativity", c.assortativity, "out-in, in-out, out-out, in-in, total-total");
  ci->add_option("--swap-factor", c.swap_factor, "rewiring swaps per edge");

  auto lgd_common = [&](CLI::App* sub) {
    data_opts(sub);
    sub->add_option("--haircut", c.haircut, "share of exposure lost on default");
  };
  auto sweep_opts = [&](CLI::App* sub) {
    sub->add_option("--d1-grid", c.d1_grid, "portfolio thresholds");
    sub->add_option("--d2-grid", c.d2_grid, "GDP thresholds");
    sub->add_option("--k-max", c.k_max, "largest initial default set");
    sub->add_option("--ranking-out", c.ranking_out, "influence ranking CSV");
    sub->add_option("--severity-out", c.severity_out, "severity-sorted impact columns CSV");
    sub->add_option("--top", c.top, "ranking length");
  };
  auto* lgd = app.add_subcommand("lgd", "cascade trace, sweep or PIGS grid");
  lgd_common(lgd);
  sweep_opts(lgd);
  lgd->add_option("--initial", c.initial, "comma-separated initial defaults (cascade trace)");
  lgd->add_option("--d1", c.d1, "portfolio threshold");
  lgd->add_option("--d2", c.d2, "GDP threshold");
  lgd->add_flag("--pigs-grid", c.pigs, "fine threshold grid over --group");
  lgd->add_option("--group", c.group, "scenario group");

  auto* sweep = app.add_subcommand("lgd-sweep", "impact summaries over a d1 x d2 grid");
  lgd_common(sweep);
  sweep_opts(sweep);

  auto* pigs = app.add_subcommand("pigs-grid", "fine d1 x d2 grid for a scenario group");
  lgd_common(pigs);
  pigs->add_option("--group", c.group, "scenario group");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  c.command = app.get_subcommands().front()->get_name();
  try {
    if (c.command == "build") return detail::cmd_build(c, out);
    if (c.command == "export") return detail::cmd_export(c, out);
    if (c.command == "fit-lognormal") return detail::cmd_fit(c, out);
    if (c.command == "gen-null") return detail::cmd_gen_null(c, out);
    if (c.command == "knockout") return detail::cmd_knockout(c, out);
    if (c.command == "ci-table") return detail::cmd_ci_table(c, out);
    if (c.command == "lgd") return detail::cmd_lgd(c, out);
    if (c.command == "lgd-sweep") return detail::cmd_lgd_sweep(c, out);
    if (c.command == "pigs-grid") return detail::cmd_pigs_grid(c, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  err << "error: unknown command\n";
  return kExitUsage;
}

}  // namespace cpisnet::cli
