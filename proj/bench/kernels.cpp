// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "cleanbench/constraints.hpp"
#include "cleanbench/detect.hpp"
#include "cleanbench/model.hpp"
#include "cleanbench/repair.hpp"
#include "cleanbench/stats.hpp"

using namespace cleanbench;

namespace {

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(rows, cols);
    for (auto& v : m.data) v = n(rng);
    return m;
}

Dataset address_table(std::size_t rows) {
    Rng rng(17);
    std::uniform_int_distribution<int> zip(0, 49), city(0, 59), price(0, 999);
    std::string text = "zip,city,price\n";
    for (std::size_t r = 0; r < rows; ++r)
        text += std::to_string(zip(rng)) + ",c" + std::to_string(city(rng)) + "," + std::to_string(price(rng)) + "\n";
    return dataset_from_csv_text(text, "bench");
}

std::vector<DenialConstraint> address_rules(const Dataset& ds) {
    auto dcs = parse_constraints("FD: zip -> city\nDC: t1.price > t2.price AND t1.zip = t2.zip AND t1.city = t2.city\n");
    bind_constraints(dcs, ds);
    return dcs;
}

Dataset holey_table(std::size_t rows, DetectionMask& mask) {
    Rng rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    std::bernoulli_distribution hole(0.1);
    std::string text = "a,b,c,d\n";
    std::vector<CellRef> cells;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            bool missing = hole(rng);
            if (missing) cells.push_back({r, c});
            text += (c ? "," : "") + (missing ? std::string() : format_number(n(rng)));
        }
        text += "\n";
    }
    mask = DetectionMask(std::move(cells), "bench");
    return dataset_from_csv_text(text, "bench");
}

std::vector<int> assignments(std::size_t rows, int k) {
    std::vector<int> a(rows);
    for (std::size_t i = 0; i < rows; ++i) a[i] = static_cast<int>(i % static_cast<std::size_t>(k));
    return a;
}

std::vector<std::uint32_t> doubled_ranks(std::size_t n) {
    std::vector<std::uint32_t> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = static_cast<std::uint32_t>(2 * (i + 1));
    return r;
}

}  // namespace

static void BM_FindViolations_Serial(benchmark::State& state) {
    auto ds = address_table(static_cast<std::size_t>(state.range(0)));
    auto dcs = address_rules(ds);
    for (auto _ : state) benchmark::DoNotOptimize(serial::find_violations(ds, dcs));
}
static void BM_FindViolations_Parallel(benchmark::State& state) {
    auto ds = address_table(static_cast<std::size_t>(state.range(0)));
    auto dcs = address_rules(ds);
    for (auto _ : state) benchmark::DoNotOptimize(find_violations(ds, dcs));
}
BENCHMARK(BM_FindViolations_Serial)->Arg(200)->Arg(800);
BENCHMARK(BM_FindViolations_Parallel)->Arg(200)->Arg(800);

static void BM_KnnIndices_Serial(benchmark::State& state) {
    auto train = gaussian_matrix(static_cast<std::size_t>(state.range(0)), 8, 1), q = gaussian_matrix(200, 8, 2);
    for (auto _ : state) benchmark::DoNotOptimize(serial::knn_indices(train, q, 5));
}
static void BM_KnnIndices_Parallel(benchmark::State& state) {
    auto train = gaussian_matrix(static_cast<std::size_t>(state.range(0)), 8, 1), q = gaussian_matrix(200, 8, 2);
    for (auto _ : state) benchmark::DoNotOptimize(knn_indices(train, q, 5));
}
BENCHMARK(BM_KnnIndices_Serial)->Arg(1000)->Arg(4000);
BENCHMARK(BM_KnnIndices_Parallel)->Arg(1000)->Arg(4000);

static void BM_Silhouette_Serial(benchmark::State& state) {
    auto n = static_cast<std::size_t>(state.range(0));
    auto x = gaussian_matrix(n, 4, 3);
    auto a = assignments(n, 4);
    for (auto _ : state) benchmark::DoNotOptimize(serial::silhouette(x, a));
}
static void BM_Silhouette_Parallel(benchmark::State& state) {
    auto n = static_cast<std::size_t>(state.range(0));
    auto x = gaussian_matrix(n, 4, 3);
    auto a = assignments(n, 4);
    for (auto _ : state) benchmark::DoNotOptimize(silhouette(x, a));
}
BENCHMARK(BM_Silhouette_Serial)->Arg(500)->Arg(2000);
BENCHMARK(BM_Silhouette_Parallel)->Arg(500)->Arg(2000);

static void BM_IforestScores_Serial(benchmark::State& state) {
    auto x = gaussian_matrix(static_cast<std::size_t>(state.range(0)), 6, 4);
    IsolationForest forest(x, 100, 256, 9);
    for (auto _ : state) benchmark::DoNotOptimize(serial::iforest_scores(forest, x));
}
static void BM_IforestScores_Parallel(benchmark::State& state) {
    auto x = gaussian_matrix(static_cast<std::size_t>(state.range(0)), 6, 4);
    IsolationForest forest(x, 100, 256, 9);
    for (auto _ : state) benchmark::DoNotOptimize(forest.scores(x));
}
BENCHMARK(BM_IforestScores_Serial)->Arg(2000)->Arg(8000);
BENCHMARK(BM_IforestScores_Parallel)->Arg(2000)->Arg(8000);

static void BM_KnnRepair_Serial(benchmark::State& state) {
    DetectionMask mask;
    auto ds = holey_table(static_cast<std::size_t>(state.range(0)), mask);
    for (auto _ : state) benchmark::DoNotOptimize(serial::repair_impute_knn(ds, mask, 5));
}
static void BM_KnnRepair_Parallel(benchmark::State& state) {
    DetectionMask mask;
    auto ds = holey_table(static_cast<std::size_t>(state.range(0)), mask);
    for (auto _ : state) benchmark::DoNotOptimize(repair_impute_knn(ds, mask, 5));
}
BENCHMARK(BM_KnnRepair_Serial)->Arg(500)->Arg(2000);
BENCHMARK(BM_KnnRepair_Parallel)->Arg(500)->Arg(2000);

static void BM_WilcoxonExact_Serial(benchmark::State& state) {
    auto r = doubled_ranks(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(serial::wilcoxon_exact_p(r, 40));
}
static void BM_WilcoxonExact_Parallel(benchmark::State& state) {
    auto r = doubled_ranks(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(wilcoxon_exact_p(r, 40));
}
BENCHMARK(BM_WilcoxonExact_Serial)->Arg(16)->Arg(20);
BENCHMARK(BM_WilcoxonExact_Parallel)->Arg(16)->Arg(20);

BENCHMARK_MAIN();
