#pragma once

// Null-model graph families and the log-normal holdings model
//   ln(s_ij + 1) = alpha_i + beta_j + eps_ij,  eps ~ N(0, sigma).

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cpisnet/error.hpp"
#include "cpisnet/ingest.hpp"
#include "cpisnet/netbuild.hpp"
#include "cpisnet/parallel.hpp"
#include "cpisnet/rng.hpp"

namespace cpisnet {

// ---------------------------------------------------------------------------
// Bernoulli families

namespace detail {

inline void check_probability(double p, std::string_view what) {
  if (!(p >= 0.0 && p <= 1.0))
    throw InvalidArgument(std::string(what) + ": edge probability outside [0,1]");
}

}  // namespace detail

// Each ordered pair carries an edge independently with p = d_bar / (n - 1).
inline BinaryNetwork gen_er(std::vector<CountryCode> labels, double d_bar, Rng& rng) {
  const std::size_t n = labels.size();
  if (n < 2) throw InvalidArgument("gen_er: need at least 2 nodes");
  const double p = d_bar / static_cast<double>(n - 1);
  detail::check_probability(p, "gen_er");
  BinaryNetwork net(std::move(labels));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && bernoulli(rng, p)) net.add_edge(i, j);
  return net;
}

inline BinaryNetwork gen_er(std::size_t n, double d_bar, Rng& rng) {
  return gen_er(BinaryNetwork::with_size(n).countries(), d_bar, rng);
}

// Edge i -> j with probability out_seq[i] / (n - 1).
inline BinaryNetwork gen_outdeg(std::span<const std::size_t> out_seq,
                                std::vector<CountryCode> labels, Rng& rng) {
  const std::size_t n = out_seq.size();
  if (labels.size() != n) throw InvalidArgument("gen_outdeg: label count mismatch");
  if (n < 2) throw InvalidArgument("gen_outdeg: need at least 2 nodes");
  BinaryNetwork net(std::move(labels));
  for (std::size_t i = 0; i < n; ++i) {
    if (out_seq[i] > n - 1) throw InvalidArgument("gen_outdeg: degree out of range");
    const double p = static_cast<double>(out_seq[i]) / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && bernoulli(rng, p)) net.add_edge(i, j);
  }
  return net;
}

inline BinaryNetwork gen_outdeg(std::span<const std::size_t> out_seq, Rng& rng) {
  return gen_outdeg(out_seq, BinaryNetwork::with_size(out_seq.size()).countries(), rng);
}

// Edge i -> j with probability in_seq[j] / (n - 1).
inline BinaryNetwork gen_indeg(std::span<const std::size_t> in_seq,
                               std::vector<CountryCode> labels, Rng& rng) {
  const std::size_t n = in_seq.size();
  if (labels.size() != n) throw InvalidArgument("gen_indeg: label count mismatch");
  if (n < 2) throw InvalidArgument("gen_indeg: need at least 2 nodes");
  for (std::size_t d : in_seq)
    if (d > n - 1) throw InvalidArgument("gen_indeg: degree out of range");
  BinaryNetwork net(std::move(labels));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double p = static_cast<double>(in_seq[j]) / static_cast<double>(n - 1);
      if (bernoulli(rng, p)) net.add_edge(i, j);
    }
  return net;
}

inline BinaryNetwork gen_indeg(std::span<const std::size_t> in_seq, Rng& rng) {
  return gen_indeg(in_seq, BinaryNetwork::with_size(in_seq.size()).countries(), rng);
}

inline constexpr int kDefaultSwapFactor = 20;

// Degree-preserving randomisation: swap_factor * |E| attempted swaps
// (a->b, c->d) => (a->d, c->b); swaps creating self-loops or multi-edges are
// rejected, as is drawing the same edge twice.
inline BinaryNetwork gen_rewired(const BinaryNetwork& net, int swap_factor, Rng& rng) {
  if (swap_factor < 1) throw InvalidArgument("gen_rewired: swap_factor must be >= 1");
  BinaryNetwork out = net;
  auto edges = net.edges();
  const std::size_t m = edges.size();
  if (m < 2) return out;
  const std::uint64_t attempts = static_cast<std::uint64_t>(swap_factor) * m;
  for (std::uint64_t t = 0; t < attempts; ++t) {
    const std::size_t e1 = uniform_index(rng, m);
    const std::size_t e2 = uniform_index(rng, m);
    if (e1 == e2) continue;
    const auto [a, b] = edges[e1];
    const auto [c, d] = edges[e2];
    if (a == d || c == b) continue;
    if (out.has_edge(a, d) || out.has_edge(c, b)) continue;
    out.remove_edge(a, b);
    out.remove_edge(c, d);
    out.add_edge(a, d);
    out.add_edge(c, b);
    edges[e1] = {a, d};
    edges[e2] = {c, b};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Residual diagnostics

struct JarqueBera {
  double statistic = 0.0;
  double p_value = 1.0;
};

// JB = N/6 (skew^2 + (kurtosis - 3)^2 / 4), p-value from the chi-squared(2)
// upper tail, which is exp(-JB/2).
inline JarqueBera jarque_bera(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 8) throw InvalidArgument("jarque_bera: need at least 8 observations");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  if (!(m2 > 0.0)) throw InvalidArgument("jarque_bera: zero variance");
  const double skew = m3 / std::pow(m2, 1.5);
  const double kurt = m4 / (m2 * m2);
  JarqueBera jb;
  jb.statistic = static_cast<double>(n) / 6.0 *
                 (skew * skew + (kurt - 3.0) * (kurt - 3.0) / 4.0);
  jb.p_value = std::exp(-jb.statistic / 2.0);
  return jb;
}

struct ResidualSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // population
  double skew = 0.0;
  double kurtosis = 0.0;
  std::optional<JarqueBera> jb;  // absent for degenerate samples
};

inline ResidualSummary summarize_residuals(std::span<const double> r) {
  ResidualSummary s;
  s.count = r.size();
  if (r.empty()) return s;
  for (double v : r) s.mean += v;
  s.mean /= static_cast<double>(r.size());
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : r) {
    const double d = v - s.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  const double n = static_cast<double>(r.size());
  m2 /= n;
  m3 /= n;
  m4 /= n;
  s.std = std::sqrt(m2);
  if (m2 > 0.0) {
    s.skew = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2);
    if (r.size() >= 8) s.jb = jarque_bera(r);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Log-normal holdings model

inline constexpr double kDefaultSigmaCorrection = 1.183;
inline constexpr double kReportingFloorMusd = 0.5;

// Divisor for the residual variance: N (maximum likelihood) or N - (2n - 1)
// (residual degrees of freedom).
enum class SigmaDivisor { residual_dof, maximum_likelihood };

struct LogNormalFitOptions {
  double correction_factor = kDefaultSigmaCorrection;
  SigmaDivisor divisor = SigmaDivisor::residual_dof;
};

struct LogNormalFit {
  int year = 0;
  std::vector<CountryCode> countries;
  std::vector<double> gdp;     // carried over for generated slices
  std::vector<double> alpha;   // holder effects
  std::vector<double> beta;    // issuer effects, beta[0] == 0
  double sigma_raw = 0.0;
  double correction_factor = kDefaultSigmaCorrection;
  double sigma_corrected = 0.0;
  SigmaDivisor divisor = SigmaDivisor::residual_dof;
  std::vector<double> residuals;  // off-diagonal pairs in row-major order
  std::string identification;

  std::size_t size() const { return countries.size(); }
};

namespace detail {

// Least-squares fit of y_ij = alpha_i + beta_j over ordered pairs i != j with
// beta_0 = 0. `y` is n x n row-major; the diagonal is ignored.
struct TwoWayFit {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> residuals;
  double rss = 0.0;
};

inline TwoWayFit fit_two_way(std::span<const double> y, std::size_t n) {
  if (n < 3) throw InvalidArgument("log-normal fit needs at least 3 countries");
  const Eigen::Index p = static_cast<Eigen::Index>(2 * n - 1);
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
  const double off = static_cast<double>(n - 1);
  // alpha_i at index i, beta_j (j >= 1) at index n + j - 1
  for (std::size_t i = 0; i < n; ++i) {
    normal(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = off;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double v = y[i * n + j];
      rhs(static_cast<Eigen::Index>(i)) += v;
      if (j == 0) continue;
      const auto bj = static_cast<Eigen::Index>(n + j - 1);
      rhs(bj) += v;
      normal(static_cast<Eigen::Index>(i), bj) = 1.0;
      normal(bj, static_cast<Eigen::Index>(i)) = 1.0;
    }
  }
  for (std::size_t j = 1; j < n; ++j) {
    const auto bj = static_cast<Eigen::Index>(n + j - 1);
    normal(bj, bj) = off;
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw DataError("log-normal fit: rank-deficient design");
  const Eigen::VectorXd theta = ldlt.solve(rhs);

  TwoWayFit fit;
  fit.alpha.resize(n);
  fit.beta.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) fit.alpha[i] = theta(static_cast<Eigen::Index>(i));
  for (std::size_t j = 1; j < n; ++j)
    fit.beta[j] = theta(static_cast<Eigen::Index>(n + j - 1));
  fit.residuals.reserve(n * (n - 1));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double e = y[i * n + j] - fit.alpha[i] - fit.beta[j];
      fit.residuals.push_back(e);
      fit.rss += e * e;
    }
  return fit;
}

inline double sigma_from_rss(double rss, std::size_t n, SigmaDivisor divisor) {
  const double obs = static_cast<double>(n * (n - 1));
  const double dof = divisor == SigmaDivisor::maximum_likelihood
                         ? obs
                         : obs - static_cast<double>(2 * n - 1);
  return std::sqrt(rss / dof);
}

}  // namespace detail

// Fits ln(s_ij + 1) on holder and issuer dummies over all ordered pairs,
// censored zeros included as ln(1) = 0.
inline LogNormalFit fit_lognormal(const AssetSlice& slice,
                                  const LogNormalFitOptions& options = {}) {
  if (!(options.correction_factor > 0.0))
    throw InvalidArgument("correction factor must be positive");
  const std::size_t n = slice.size();
  if (n < 3) throw InvalidArgument("fit_lognormal needs at least 3 countries");
  std::vector<double> y(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) y[i * n + j] = std::log1p(slice.holding(i, j));
  auto tw = detail::fit_two_way(y, n);

  LogNormalFit fit;
  fit.year = slice.year();
  fit.countries = slice.countries();
  fit.gdp = slice.gdp();
  fit.alpha = std::move(tw.alpha);
  fit.beta = std::move(tw.beta);
  fit.divisor = options.divisor;
  fit.sigma_raw = detail::sigma_from_rss(tw.rss, n, options.divisor);
  fit.correction_factor = options.correction_factor;
  fit.sigma_corrected = fit.correction_factor * fit.sigma_raw;
  fit.residuals = std::move(tw.residuals);
  fit.identification = "issuer_baseline:" + fit.countries.front();
  return fit;
}

// Observation process applied to generated holdings. A floor <= 0 disables
// censoring; when rounding is on, negative draws are clipped to 0 first.
struct CensorOptions {
  double floor_musd = kReportingFloorMusd;
  bool round_to_integer = true;
};

inline constexpr CensorOptions kNoCensoring{0.0, false};

// Censor below the floor first, then round half-to-even to whole millions.
inline double observe_holding(double s, const CensorOptions& c) {
  if (c.floor_musd > 0.0 && s < c.floor_musd) return 0.0;
  if (c.round_to_integer) return std::nearbyint(std::max(s, 0.0));
  return s;
}

// Draws ln(s_ij + 1) = alpha_i + beta_j + eps_ij before any censoring; n x n
// row-major with a zero diagonal.
inline std::vector<double> draw_log_holdings(std::span<const double> alpha,
                                             std::span<const double> beta,
                                             double sigma, Rng& rng) {
  const std::size_t n = alpha.size();
  std::vector<double> y(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) y[i * n + j] = alpha[i] + beta[j] + sigma * standard_normal(rng);
  return y;
}

// Synthetic slice from a fit, with eps ~ N(0, sigma_corrected), censoring and
// rounding. GDPs are those of the fitted slice.
inline AssetSlice gen_lognormal_slice(const LogNormalFit& fit, Rng& rng,
                                      const CensorOptions& censor = {}) {
  const std::size_t n = fit.size();
  const auto y = draw_log_holdings(fit.alpha, fit.beta, fit.sigma_corrected, rng);
  SquareMatrix s(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) {
        const double v = observe_holding(std::expm1(y[i * n + j]), censor);
        s(i, j) = std::max(v, 0.0);
      }
  return AssetSlice(fit.year, fit.countries, std::move(s), fit.gdp, 1.0);
}

// Mean of sigma / sigma_refit over synthetic slices drawn from the model and
// passed through the observation process.
inline double estimate_sigma_correction(std::span<const double> alpha,
                                        std::span<const double> beta, double sigma,
                                        const CensorOptions& censor, int trials,
                                        Rng& rng,
                                        SigmaDivisor divisor = SigmaDivisor::residual_dof,
                                        unsigned jobs = 1) {
  if (trials < 100) throw InvalidArgument("estimate_sigma_correction: trials must be >= 100");
  if (!(sigma > 0.0)) throw InvalidArgument("estimate_sigma_correction: sigma must be positive");
  if (alpha.size() != beta.size()) throw InvalidArgument("alpha/beta length mismatch");
  const std::size_t n = alpha.size();
  const std::uint64_t master = rng();
  std::vector<double> ratio(static_cast<std::size_t>(trials));
  parallel_for(ratio.size(), jobs, [&](std::size_t t) {
    Rng local(derive_seed(master, t));
    auto y = draw_log_holdings(alpha, beta, sigma, local);
    const bool observed = censor.floor_musd > 0.0 || censor.round_to_integer;
    if (observed)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (i != j) y[i * n + j] = std::log1p(observe_holding(std::expm1(y[i * n + j]), censor));
    const auto tw = detail::fit_two_way(y, n);
    const double refit = detail::sigma_from_rss(tw.rss, n, divisor);
    if (!(refit > 0.0)) throw DataError("estimate_sigma_correction: degenerate refit");
    ratio[t] = sigma / refit;
  });
  double s = 0.0;
  for (double r : ratio) s += r;
  return s / static_cast<double>(trials);
}

inline nlohmann::json to_json(const ResidualSummary& s) {
  nlohmann::json j{{"count", s.count}, {"mean", s.mean},          {"std", s.std},
                   {"skew", s.skew},   {"kurtosis", s.kurtosis}};
  if (s.jb) {
    j["jb_statistic"] = s.jb->statistic;
    j["jb_p_value"] = s.jb->p_value;
  } else {
    j["jb_statistic"] = nullptr;
    j["jb_p_value"] = nullptr;
  }
  return j;
}

inline nlohmann::json to_json(const LogNormalFit& fit) {
  return nlohmann::json{
      {"year", fit.year},
      {"countries", fit.countries},
      {"alpha", fit.alpha},
      {"beta", fit.beta},
      {"sigma_raw", fit.sigma_raw},
      {"sigma_corrected", fit.sigma_corrected},
      {"correction_factor", fit.correction_factor},
      {"sigma_divisor", fit.divisor == SigmaDivisor::maximum_likelihood ? "ml" : "dof"},
      {"identification", fit.identification},
      {"residuals", to_json(summarize_residuals(fit.residuals))},
  };
}

// ---------------------------------------------------------------------------
// Null-model specifications

enum class NullModelKind { er, out_degree, in_degree, rewiring, log_normal };

inline constexpr std::array<NullModelKind, 5> kAllNullModels = {
    NullModelKind::er, NullModelKind::out_degree, NullModelKind::in_degree,
    NullModelKind::rewiring, NullModelKind::log_normal};

inline std::string_view null_model_name(NullModelKind k) {
  switch (k) {
    case NullModelKind::er: return "er";
    case NullModelKind::out_degree: return "out-degree";
    case NullModelKind::in_degree: return "in-degree";
    case NullModelKind::rewiring: return "rewiring";
    case NullModelKind::log_normal: return "log-normal";
  }
  return "?";
}

inline std::optional<NullModelKind> parse_null_model(std::string_view s) {
  for (auto k : kAllNullModels)
    if (null_model_name(k) == s) return k;
  return std::nullopt;
}

// Parameters of one null-model family, extracted from an empirical network
// (and, for the log-normal family, its slice).
struct NullModelSpec {
  NullModelKind kind = NullModelKind::er;
  std::vector<CountryCode> labels;
  double d_bar = 0.0;
  std::vector<std::size_t> out_seq;
  std::vector<std::size_t> in_seq;
  std::optional<BinaryNetwork> reference;  // rewiring
  int swap_factor = kDefaultSwapFactor;
  std::optional<LogNormalFit> fit;         // log-normal
  ThresholdRule rule;                      // rule of the empirical network
  CensorOptions censor;                    // log-normal
};

inline NullModelSpec make_null_spec(NullModelKind kind, const BinaryNetwork& empirical,
                                    const AssetSlice* slice = nullptr,
                                    const LogNormalFitOptions& fit_options = {}) {
  NullModelSpec spec;
  spec.kind = kind;
  spec.labels = empirical.countries();
  if (empirical.rule()) spec.rule = *empirical.rule();
  switch (kind) {
    case NullModelKind::er:
      spec.d_bar = static_cast<double>(empirical.edge_count()) /
                   static_cast<double>(empirical.size());
      break;
    case NullModelKind::out_degree:
      spec.out_seq = empirical.out_degrees();
      break;
    case NullModelKind::in_degree:
      spec.in_seq = empirical.in_degrees();
      break;
    case NullModelKind::rewiring:
      spec.reference = empirical;
      break;
    case NullModelKind::log_normal:
      if (slice == nullptr) throw InvalidArgument("log-normal null model needs the asset slice");
      if (!empirical.rule()) throw InvalidArgument("log-normal null model needs the network's rule");
      spec.fit = fit_lognormal(*slice, fit_options);
      break;
  }
  return spec;
}

inline BinaryNetwork sample_null(const NullModelSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case NullModelKind::er: return gen_er(spec.labels, spec.d_bar, rng);
    case NullModelKind::out_degree: return gen_outdeg(spec.out_seq, spec.labels, rng);
    case NullModelKind::in_degree: return gen_indeg(spec.in_seq, spec.labels, rng);
    case NullModelKind::rewiring:
      if (!spec.reference) throw InvalidArgument("rewiring spec lacks a reference network");
      return gen_rewired(*spec.reference, spec.swap_factor, rng);
    case NullModelKind::log_normal:
      if (!spec.fit) throw InvalidArgument("log-normal spec lacks a fit");
      return apply_rule(gen_lognormal_slice(*spec.fit, rng, spec.censor), spec.rule);
  }
  throw InvalidArgument("unknown null model");
}

}  // namespace cpisnet
