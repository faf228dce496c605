#include <benchmark/benchmark.h>

#include "releff/bootstrap.hpp"
#include "releff/parallel.hpp"
#include "releff/simulation.hpp"
#include "releff/survival.hpp"

using namespace releff;

namespace {

struct SurvivalFixture {
  SurvivalDataset data;
  DiscreteSurvivalFit fit;
  Eigen::MatrixXd G;

  explicit SurvivalFixture(std::size_t n) {
    Stream s(1);
    ExpSurvivalDgp dgp;
    dgp.grid_step = 0.05;  // 60 grid points up to t = 3
    data = gen_exp_survival(n, s, dgp);
    fit = fit_discrete_survival(data, default_survival(data.schema));
    G = TrialCensoringSpec::exponential(0.1).tabulate(data);
  }
};

const SurvivalFixture& fixture() {
  static const SurvivalFixture f(20000);
  return f;
}

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::parallel : Exec::serial; }

void BM_AdjustedRd(benchmark::State& st) {
  const SurvivalFixture& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(adjusted_variance_rd(f.data, f.fit, f.G, 60, exec_of(st)).bundle.sigma2);
  st.SetItemsProcessed(st.iterations() * f.data.n());
}

void BM_AdjustedRmst(benchmark::State& st) {
  const SurvivalFixture& f = fixture();
  for (auto _ : st)
    benchmark::DoNotOptimize(
        adjusted_variance_rmst(f.data, f.fit, f.G, 60, RmstAlgorithm::fast, exec_of(st)).bundle.sigma2);
  st.SetItemsProcessed(st.iterations() * f.data.n());
}

void BM_RmstSummand(benchmark::State& st) {
  const int k = static_cast<int>(st.range(1));
  Stream s(2);
  std::vector<double> S(k), tau(k), G(k, 0.9), a(k, 1.0);
  double cur = 1.0;
  for (int j = 0; j < k; ++j) {
    cur *= 0.97;
    S[j] = cur;
    tau[j] = s.uniform() - 0.5;
  }
  for (auto _ : st) {
    const double v = st.range(0) ? rmst_summand_fast(S.data(), tau.data(), G.data(), a.data(), k, nullptr)
                                 : rmst_summand_naive(S.data(), tau.data(), G.data(), k, nullptr);
    benchmark::DoNotOptimize(v);
  }
}

void BM_PhiTilde(benchmark::State& st) {
  Stream s(3);
  const WeightedSource src = compress(gen_cdc(1000, s));
  BootstrapConfig cfg;
  cfg.B2 = 500;
  cfg.N = 4000;
  cfg.seed = 4;
  for (auto _ : st) benchmark::DoNotOptimize(phi_tilde(src, {Estimand::DIM, Estimand::MW, Estimand::LOR}, cfg, 1).phi);
}

}  // namespace

BENCHMARK(BM_AdjustedRd)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AdjustedRmst)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RmstSummand)->ArgNames({"fast", "k"})->ArgsProduct({{0, 1}, {6, 15, 60}});
BENCHMARK(BM_PhiTilde)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
