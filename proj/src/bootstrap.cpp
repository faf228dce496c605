#include "releff/bootstrap.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <random>

#include "releff/error.hpp"
#include "releff/inference.hpp"
#include "releff/numeric.hpp"
#include "releff/trial.hpp"

namespace releff {

namespace {

const char* kModule = "double_bootstrap";

template <class Dataset, class YAt>
WeightedSource compress_rows(const Dataset& data, int K, YAt y_at) {
  WeightedSource s;
  s.schema = data.schema;
  s.K = K;
  std::map<std::vector<double>, std::size_t> seen;
  std::vector<std::size_t> first;
  std::vector<double> key(data.w.cols() + 1);
  for (std::size_t i = 0; i < data.n(); ++i) {
    key[0] = y_at(i);
    for (Eigen::Index j = 0; j < data.w.cols(); ++j) key[j + 1] = data.w(i, j);
    auto [it, fresh] = seen.emplace(key, s.y.size());
    if (fresh) {
      s.y.push_back(key[0]);
      s.count.push_back(0.0);
      first.push_back(i);
    }
    s.count[it->second] += wt_at(data.wt, i);
  }
  s.w.resize(first.size(), data.w.cols());
  for (std::size_t r = 0; r < first.size(); ++r) s.w.row(r) = data.w.row(first[r]);
  return s;
}

// Multinomial(size, probs) by sequential conditional binomials.
std::vector<long long> multinomial(long long size, const std::vector<double>& probs, Stream& stream) {
  std::vector<long long> out(probs.size(), 0);
  double mass = 0.0;
  for (double p : probs) mass += p;
  long long left = size;
  for (std::size_t r = 0; r < probs.size() && left > 0; ++r) {
    if (r + 1 == probs.size()) {
      out[r] = left;
      break;
    }
    const double q = mass > 0 ? std::clamp(probs[r] / mass, 0.0, 1.0) : 1.0;
    std::binomial_distribution<long long> bin(left, q);
    out[r] = bin(stream);
    left -= out[r];
    mass -= probs[r];
  }
  return out;
}

double centered_ss(const std::vector<double>& x) {
  const double m = pairwise_sum(x) / static_cast<double>(x.size());
  std::vector<double> t(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) t[i] = (x[i] - m) * (x[i] - m);
  return pairwise_sum(t);
}

}  // namespace

double WeightedSource::total() const { return pairwise_sum(count); }

BootstrapConfig BootstrapConfig::resolved(std::size_t n) const {
  BootstrapConfig c = *this;
  if (c.B2 <= 0) c.B2 = std::max<int>(2 * static_cast<int>(n), 500);
  if (c.N <= 0) c.N = std::max<int>(4 * static_cast<int>(n), 2000);
  return c;
}

void BootstrapConfig::validate() const {
  if (B1 < 1) throw config_error("BadConfig", kModule, "B1 must be >= 1");
  if (B2 < 2) throw config_error("BadConfig", kModule, "B2 must be >= 2");
  if (N < 2) throw config_error("BadConfig", kModule, "N must be >= 2");
  if (!(pi > 0.0 && pi < 1.0)) throw config_error("BadPi", kModule, "pi must lie in (0,1)");
  if (!(level > 0.0 && level < 1.0)) throw config_error("BadConfig", kModule, "level must lie in (0,1)");
  if (!(min_valid_fraction >= 0.0 && min_valid_fraction <= 1.0))
    throw config_error("BadConfig", kModule, "min_valid_fraction must lie in [0,1]");
}

WeightedSource compress(const OrdinalDataset& data) {
  return compress_rows(data, data.K, [&](std::size_t i) { return static_cast<double>(data.y[i]); });
}

WeightedSource compress(const ContinuousDataset& data) {
  return compress_rows(data, 0, [&](std::size_t i) { return data.y[i]; });
}

WeightedSource resample(const WeightedSource& src, std::size_t size, Stream& stream) {
  const std::vector<long long> m = multinomial(static_cast<long long>(size), src.count, stream);
  WeightedSource out;
  out.schema = src.schema;
  out.K = src.K;
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < m.size(); ++r)
    if (m[r] > 0) keep.push_back(r);
  out.w.resize(keep.size(), src.w.cols());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.y.push_back(src.y[keep[r]]);
    out.count.push_back(static_cast<double>(m[keep[r]]));
    out.w.row(r) = src.w.row(keep[r]);
  }
  return out;
}

TrialDataset simulate_trial(const WeightedSource& source, std::size_t N, double pi, Stream& stream) {
  if (source.y.empty()) throw data_error("EmptyFile", kModule, "cannot simulate a trial from an empty source");
  const std::vector<long long> m = multinomial(static_cast<long long>(N), source.count, stream);
  TrialDataset t;
  t.schema = source.schema;
  t.K = source.K;
  t.pi = pi;
  std::vector<std::pair<std::size_t, int>> cells;
  std::vector<double> cnt;
  for (std::size_t r = 0; r < m.size(); ++r) {
    if (m[r] == 0) continue;
    std::binomial_distribution<long long> arm(m[r], pi);
    const long long m1 = arm(stream);
    if (m1 > 0) {
      cells.emplace_back(r, 1);
      cnt.push_back(static_cast<double>(m1));
    }
    if (m[r] - m1 > 0) {
      cells.emplace_back(r, 0);
      cnt.push_back(static_cast<double>(m[r] - m1));
    }
  }
  t.w.resize(cells.size(), source.w.cols());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    t.y.push_back(source.y[cells[c].first]);
    t.a.push_back(cells[c].second);
    t.w.row(c) = source.w.row(cells[c].first);
  }
  t.wt = std::move(cnt);
  return t;
}

PhiTilde phi_tilde(const WeightedSource& source, const std::vector<Estimand>& ests, const BootstrapConfig& cfg,
                   std::uint64_t outer_index, const TransformU* u) {
  const std::size_t E = ests.size();
  std::vector<std::vector<double>> psi_u(E), psi_m(E);
  for (int j = 0; j < cfg.B2; ++j) {
    Stream s(cfg.seed, {outer_index, static_cast<std::uint64_t>(j) + 1});
    const TrialDataset trial = simulate_trial(source, static_cast<std::size_t>(cfg.N), cfg.pi, s);
    std::vector<TrialEstimate> wm;
    bool wm_ok = true;
    try {
      wm = working_model_estimates(trial, ests, u);
    } catch (const Error&) {
      wm_ok = false;
    }
    for (std::size_t e = 0; e < E; ++e) {
      double m = 0.0, un = 0.0;
      try {
        if (!wm_ok) {
          // One estimand may still be computable (LOR boundary vs DIM).
          m = working_model_estimate(trial, ests[e], u).psi;
        } else {
          m = wm[e].psi;
        }
        un = unadjusted_estimate(trial, ests[e], u).psi;
      } catch (const Error&) {
        continue;
      }
      if (!std::isfinite(m) || !std::isfinite(un)) continue;
      psi_m[e].push_back(m);
      psi_u[e].push_back(un);
    }
  }
  PhiTilde out;
  for (std::size_t e = 0; e < E; ++e) {
    const int valid = static_cast<int>(psi_u[e].size());
    out.invalid.push_back(cfg.B2 - valid);
    if (valid < 2 || static_cast<double>(valid) < cfg.min_valid_fraction * cfg.B2)
      throw numerical_error("TooManyInvalidReplicates", kModule,
                            to_string(ests[e]) + ": only " + std::to_string(valid) + " of " +
                                std::to_string(cfg.B2) + " inner replicates are valid");
    const double den = centered_ss(psi_u[e]);
    if (!(den > 0.0)) throw numerical_error("DegenerateDenominator", kModule, "unadjusted estimates are all equal");
    out.phi.push_back(centered_ss(psi_m[e]) / den);
  }
  return out;
}

std::vector<BootstrapResult> run_bootstrap(const WeightedSource& data, const std::vector<Estimand>& ests,
                                           const BootstrapConfig& cfg_in, const TransformU* u) {
  const auto n = static_cast<std::size_t>(std::llround(data.total()));
  const BootstrapConfig cfg = cfg_in.resolved(n);
  cfg.validate();
  const std::size_t E = ests.size();
  const int B1 = cfg.B1;
  std::vector<PhiTilde> reps(B1 + 1);
  std::vector<std::exception_ptr> errs(B1 + 1);
  std::atomic<int> done{0};

#pragma omp parallel for schedule(dynamic, 1)
  for (int b = 0; b <= B1; ++b) {
    try {
      if (b == 0) {
        reps[b] = phi_tilde(data, ests, cfg, 0, u);
      } else {
        Stream s(cfg.seed, {static_cast<std::uint64_t>(b), 0});
        reps[b] = phi_tilde(resample(data, n, s), ests, cfg, static_cast<std::uint64_t>(b), u);
      }
    } catch (...) {
      errs[b] = std::current_exception();
    }
    const int d = ++done;
    if (cfg.progress) std::fprintf(stderr, "\rbootstrap: %d / %d replicates", d, B1 + 1);
  }
  if (cfg.progress) std::fprintf(stderr, "\n");
  for (const auto& e : errs)
    if (e) std::rethrow_exception(e);

  const double z = z_quantile(cfg.level);
  std::vector<BootstrapResult> out(E);
  for (std::size_t e = 0; e < E; ++e) {
    BootstrapResult& r = out[e];
    r.config = cfg;
    r.phi_tilde = reps[0].phi[e];
    for (int b = 0; b <= B1; ++b) r.invalid_inner_counts.push_back(reps[b].invalid[e]);
    for (int b = 1; b <= B1; ++b) r.replicate_values.push_back(reps[b].phi[e]);
    if (B1 >= 2) {
      r.se = std::sqrt(centered_ss(r.replicate_values) / (B1 - 1.0));
    } else {
      r.se = 0.0;
      r.warnings.push_back("B1 = 1: standard error is zero, interval is a point");
    }
    r.lo = r.phi_tilde - z * r.se;
    r.hi = r.phi_tilde + z * r.se;
    long inv = 0;
    for (int c : r.invalid_inner_counts) inv += c;
    if (inv > 0) r.warnings.push_back(std::to_string(inv) + " invalid inner replicates dropped");
  }
  return out;
}

BootstrapResult run_bootstrap(const OrdinalDataset& data, Estimand est, const BootstrapConfig& cfg,
                              const TransformU* u) {
  data.validate();
  return run_bootstrap(compress(data), std::vector<Estimand>{est}, cfg, u).front();
}

BootstrapResult run_bootstrap(const ContinuousDataset& data, const BootstrapConfig& cfg) {
  data.validate();
  return run_bootstrap(compress(data), std::vector<Estimand>{Estimand::ATE}, cfg).front();
}

}  // namespace releff
