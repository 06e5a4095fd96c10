#include <benchmark/benchmark.h>

#include "rediscover/callback.hpp"
#include "rediscover/canon.hpp"
#include "rediscover/expr.hpp"
#include "rediscover/probe.hpp"
#include "rediscover/program.hpp"

using namespace rediscover;

namespace {

const char* kForm = "sqrt(((v1^2)-(v2*((2*v1*sin(((1.5708+v4)-v3)))-v2))))";

void BM_Parse(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(parse(kForm));
}
BENCHMARK(BM_Parse);

void BM_Canonicalize(benchmark::State& state) {
  const auto e = parse("((1*((v1*v2)+(v3*v4)))/(v1+v3+(0*v2)+(v4-v4)))");
  for (auto _ : state) benchmark::DoNotOptimize(canonicalize(e));
}
BENCHMARK(BM_Canonicalize);

void BM_EvaluateRows(benchmark::State& state) {
  const Program p(parse(kForm));
  std::vector<double> rows(200 * 4, 1.5);
  std::vector<double> out(200);
  for (auto _ : state) {
    p.eval_rows(rows, 4, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_EvaluateRows);

void BM_RelativeError(benchmark::State& state) {
  std::vector<double> y(200, 1.0), p(200, 1.0 + 1e-9);
  for (auto _ : state) benchmark::DoNotOptimize(relative_error(y, p));
}
BENCHMARK(BM_RelativeError);

void BM_Probe(benchmark::State& state) {
  const std::vector<SamplingSpec> domain = {{1, Distribution::uniform, 1, 10, Sign::positive},
                                            {2, Distribution::uniform, 1, 10, Sign::positive}};
  const auto a = parse("(-(v1)/((3.3356e-9*v2)-1))");
  const auto b = parse("((-2.9979e8*v1)/(v2-2.9979e8))");
  for (auto _ : state) benchmark::DoNotOptimize(probe_equivalence(a, b, domain));
}
BENCHMARK(BM_Probe);

}  // namespace
BENCHMARK_MAIN();
