#include <benchmark/benchmark.h>

#include <random>

#include "netadmin/hardening.hpp"
#include "netadmin/recordstore.hpp"

using namespace netadmin;

namespace {

// n strict-valid records with short random descriptions.
std::string make_store(std::size_t n) {
  std::mt19937_64 rng(n);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    FirewallRule r;
    r.id = i + 1;
    r.owner = "user" + std::to_string(rng() % 50);
    r.ip = "10.10." + std::to_string(rng() % 256) + "." + std::to_string(rng() % 256);
    r.port = 1 + static_cast<int>(rng() % 65535);
    r.created = 1700000000;
    r.expires = r.created + kRuleLifetime;
    r.description = std::string(rng() % 80, 'd');
    out += store::serialize_rule(r, store::SerializeMode::strict);
  }
  return out;
}

void BM_ParseLegacy(benchmark::State& state) {
  const auto bytes = make_store(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(store::parse_legacy(bytes));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes.size()));
}
BENCHMARK(BM_ParseLegacy)->Arg(100)->Arg(10000);

void BM_ParseStrict(benchmark::State& state) {
  const auto bytes = make_store(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(store::parse_strict(bytes));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes.size()));
}
BENCHMARK(BM_ParseStrict)->Arg(100)->Arg(10000);

void BM_SerializeStrict(benchmark::State& state) {
  FirewallRule r;
  r.id = 42;
  r.owner = "alice";
  r.ip = "10.10.1.5";
  r.port = 443;
  r.created = 1700000000;
  r.expires = r.created + kRuleLifetime;
  r.description = std::string(200, 'x');
  for (auto _ : state) benchmark::DoNotOptimize(store::serialize_rule(r, store::SerializeMode::strict));
}
BENCHMARK(BM_SerializeStrict);

void BM_Sanitize(benchmark::State& state) {
  const std::string desc(256, 'a');
  for (auto _ : state) benchmark::DoNotOptimize(hardening::sanitize_description(desc));
}
BENCHMARK(BM_Sanitize);

void BM_VerifyEnvelope(benchmark::State& state) {
  const auto key = hardening::random_bytes(32);
  const auto env = hardening::sign_envelope(std::string(static_cast<std::size_t>(state.range(0)), 'b'), "k", key);
  for (auto _ : state) benchmark::DoNotOptimize(hardening::verify_envelope(env, key));
}
BENCHMARK(BM_VerifyEnvelope)->Arg(64)->Arg(1024);

}  // namespace

// libbenchmark_main.a ships LTO bytecode from another compiler release.
BENCHMARK_MAIN();
