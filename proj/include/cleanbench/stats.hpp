#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cleanbench {

struct Summary {
    double mean = 0.0;
    std::optional<double> std;  // absent for a single value
    std::size_t n = 0;
};

/// Arithmetic mean and sample standard deviation. Throws InputError on an empty list.
Summary summarize(const std::vector<double>& values);

struct PairedSample {
    std::vector<std::pair<double, double>> pairs;  // (a, b) aligned by seed
    std::string label_a;
    std::string label_b;
};

enum class WilcoxonMode { automatic, exact, normal_approx };

std::string to_string(WilcoxonMode mode);
WilcoxonMode parse_wilcoxon_mode(const std::string& name);

/// Largest n accepted by exact enumeration.
inline constexpr std::size_t kMaxExactPairs = 26;
/// automatic picks exact up to this n.
inline constexpr std::size_t kAutoExactPairs = 12;

struct ABTestResult {
    double w = 0.0;
    double p_value = 1.0;
    double alpha = 0.05;
    bool reject_h0 = false;
    std::size_t n_effective = 0;
    WilcoxonMode mode = WilcoxonMode::exact;  // never automatic
    bool degenerate = false;                  // every difference was zero
    std::string label_a;
    std::string label_b;
};

/// Two-tailed Wilcoxon signed-rank test on d = a - b. Zero differences are
/// dropped, ties get average ranks, W = min(W+, W-).
ABTestResult wilcoxon_signed_rank(const PairedSample& sample, double alpha = 0.05,
                                  WilcoxonMode mode = WilcoxonMode::automatic);

/// Average ranks of |d| (1-based). Exposed for tests.
std::vector<double> average_ranks(const std::vector<double>& values);

/// P(min(W+, W-) <= w) over all 2^n sign assignments, ranks given doubled.
double wilcoxon_exact_p(const std::vector<std::uint32_t>& doubled_ranks, std::uint64_t doubled_w);

/// Continuity-corrected normal approximation, two-tailed, clipped to 1.
double wilcoxon_normal_p(const std::vector<double>& ranks, double w);

double normal_cdf(double z);

namespace serial {
double wilcoxon_exact_p(const std::vector<std::uint32_t>& doubled_ranks, std::uint64_t doubled_w);
}  // namespace serial

}  // namespace cleanbench
