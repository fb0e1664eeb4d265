#include "cleanbench/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>

#include "cleanbench/common.hpp"

namespace cleanbench {

Summary summarize(const std::vector<double>& values) {
    if (values.empty()) throw InputError("summarize: empty list");
    Summary s;
    s.n = values.size();
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    return s;
}

std::string to_string(WilcoxonMode mode) {
    switch (mode) {
        case WilcoxonMode::automatic: return "auto";
        case WilcoxonMode::exact: return "exact";
        case WilcoxonMode::normal_approx: return "normal_approx";
    }
    return "auto";
}

WilcoxonMode parse_wilcoxon_mode(const std::string& name) {
    for (auto m : {WilcoxonMode::automatic, WilcoxonMode::exact, WilcoxonMode::normal_approx})
        if (to_string(m) == name) return m;
    throw InputError("unknown wilcoxon mode: " + name);
}

std::vector<double> average_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

namespace {

std::uint64_t count_at_most(const std::vector<std::uint32_t>& ranks, std::uint64_t total, std::uint64_t w,
                            std::uint64_t begin, std::uint64_t end) {
    std::uint64_t hits = 0;
    for (std::uint64_t mask = begin; mask < end; ++mask) {
        std::uint64_t plus = 0;
        for (std::size_t i = 0; i < ranks.size(); ++i)
            if (mask >> i & 1U) plus += ranks[i];
        if (std::min(plus, total - plus) <= w) ++hits;
    }
    return hits;
}

void check_exact_size(std::size_t n) {
    if (n == 0) throw InputError("wilcoxon: no non-zero differences");
    if (n > kMaxExactPairs)
        throw InputError("wilcoxon: exact enumeration limited to " + std::to_string(kMaxExactPairs) + " pairs");
}

}  // namespace

double wilcoxon_exact_p(const std::vector<std::uint32_t>& doubled_ranks, std::uint64_t doubled_w) {
    check_exact_size(doubled_ranks.size());
    const std::uint64_t total = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), std::uint64_t{0});
    const std::uint64_t space = std::uint64_t{1} << doubled_ranks.size();
    // fixed block count keeps the reduction independent of the thread count
    const std::int64_t blocks = static_cast<std::int64_t>(std::min<std::uint64_t>(space, 1024));
    const std::uint64_t width = space / static_cast<std::uint64_t>(blocks);
    std::uint64_t hits = 0;
    auto deadline = current_deadline();
    std::atomic<bool> timed_out{false};
#pragma omp parallel for schedule(static) reduction(+ : hits)
    for (std::int64_t b = 0; b < blocks; ++b) {
        if (timed_out.load(std::memory_order_relaxed)) continue;
        if (deadline && std::chrono::steady_clock::now() > *deadline) {
            timed_out = true;
            continue;
        }
        std::uint64_t begin = static_cast<std::uint64_t>(b) * width;
        hits += count_at_most(doubled_ranks, total, doubled_w, begin, begin + width);
    }
    if (timed_out) throw TimeoutError("wilcoxon exact enumeration exceeded its deadline");
    return std::min(1.0, static_cast<double>(hits) / static_cast<double>(space));
}

namespace serial {
double wilcoxon_exact_p(const std::vector<std::uint32_t>& doubled_ranks, std::uint64_t doubled_w) {
    check_exact_size(doubled_ranks.size());
    const std::uint64_t total = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), std::uint64_t{0});
    const std::uint64_t space = std::uint64_t{1} << doubled_ranks.size();
    return static_cast<double>(count_at_most(doubled_ranks, total, doubled_w, 0, space)) /
           static_cast<double>(space);
}
}  // namespace serial

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double wilcoxon_normal_p(const std::vector<double>& ranks, double w) {
    const double n = static_cast<double>(ranks.size());
    std::map<double, double> ties;
    for (double r : ranks) ties[r] += 1.0;
    double tie = 0.0;
    for (const auto& [r, t] : ties) tie += t * t * t - t;
    double sigma = std::sqrt(n * (n + 1) * (2 * n + 1) / 24.0 - tie / 48.0);
    double z = (w - n * (n + 1) / 4.0 + 0.5) / sigma;
    return std::min(1.0, 2.0 * normal_cdf(z));
}

ABTestResult wilcoxon_signed_rank(const PairedSample& sample, double alpha, WilcoxonMode mode) {
    if (sample.pairs.empty()) throw InputError("wilcoxon: empty sample");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("wilcoxon: alpha must lie in (0, 1)");
    ABTestResult out;
    out.alpha = alpha;
    out.label_a = sample.label_a;
    out.label_b = sample.label_b;

    std::vector<double> diffs;
    for (const auto& [a, b] : sample.pairs) {
        if (!std::isfinite(a) || !std::isfinite(b)) throw InputError("wilcoxon: non-finite metric value");
        if (a != b) diffs.push_back(a - b);
    }
    out.n_effective = diffs.size();
    if (diffs.empty()) {
        out.degenerate = true;
        out.mode = mode == WilcoxonMode::normal_approx ? mode : WilcoxonMode::exact;
        return out;
    }
    std::vector<double> abs_d(diffs.size());
    std::transform(diffs.begin(), diffs.end(), abs_d.begin(), [](double d) { return std::abs(d); });
    auto ranks = average_ranks(abs_d);
    double w_plus = 0.0, w_minus = 0.0;
    for (std::size_t i = 0; i < diffs.size(); ++i) (diffs[i] > 0 ? w_plus : w_minus) += ranks[i];
    out.w = std::min(w_plus, w_minus);

    if (mode == WilcoxonMode::automatic)
        mode = diffs.size() <= kAutoExactPairs ? WilcoxonMode::exact : WilcoxonMode::normal_approx;
    out.mode = mode;
    if (mode == WilcoxonMode::exact) {
        // average ranks are multiples of 0.5, so doubling makes every sum exact
        std::vector<std::uint32_t> doubled(ranks.size());
        std::transform(ranks.begin(), ranks.end(), doubled.begin(),
                       [](double r) { return static_cast<std::uint32_t>(std::lround(2 * r)); });
        out.p_value = wilcoxon_exact_p(doubled, static_cast<std::uint64_t>(std::llround(2 * out.w)));
    } else {
        out.p_value = wilcoxon_normal_p(ranks, out.w);
    }
    out.reject_h0 = out.p_value < alpha;
    return out;
}

}  // namespace cleanbench
