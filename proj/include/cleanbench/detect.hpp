#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cleanbench/constraints.hpp"
#include "cleanbench/model.hpp"
#include "cleanbench/tabular.hpp"

namespace cleanbench {

enum class DetectorKind { mvd, disguised, sd, iqr, iforest, rule, key_collision, mislabel, min_k, max_entropy };

/// Short names: mvd, fahes, sd, iqr, if, rule, dedup, cl, mink, maxent.
std::string_view to_string(DetectorKind kind);
DetectorKind parse_detector_kind(std::string_view name);

struct DetectorSpec {
    DetectorKind kind = DetectorKind::mvd;
    double n = 3.0;                  // sd
    double k = 1.5;                  // iqr multiplier
    std::size_t trees = 100;         // iforest
    std::size_t subsample = 256;     // iforest
    std::optional<double> contamination;  // iforest; context default when unset
    std::optional<std::uint64_t> seed;    // iforest, cl, maxent; context seed when unset
    std::vector<std::string> constraint_ids;  // rule; empty = all
    std::vector<std::string> key_columns;     // dedup
    std::size_t folds = 5;           // cl
    std::string base_model = "logit";  // cl
    std::size_t min_k = 2;           // mink
    std::size_t label_budget = 20;   // maxent
    std::vector<DetectorSpec> base;  // mink, maxent

    /// Canonical text form, parseable by parse_detector_spec.
    std::string name() const;
    void validate() const;
};

/// `name[:key=value,...]`. Lists use `|` inside brackets, e.g.
/// `mink:k=2,base=[sd:n=2|iqr|mvd]`, `dedup:keys=[id|name]`.
DetectorSpec parse_detector_spec(std::string_view text);

/// Inputs some detectors need beyond the dataset itself.
struct DetectionContext {
    std::vector<DenialConstraint> constraints;  // rule
    std::optional<std::string> label_column;    // cl
    const DetectionMask* oracle = nullptr;      // maxent labels
    double default_contamination = 0.1;         // iforest
    std::uint64_t seed = 0;
};

struct MaxEntropyRound {
    std::size_t detector = 0;  // index into the base list
    std::string name;
    double entropy = 0.0;
    std::size_t sampled = 0;
    std::size_t sampled_dirty = 0;
    double precision = 0.0;
    bool accepted = false;
};

struct DetectorRun {
    DetectorSpec spec;
    DetectionMask mask;
    double runtime = 0.0;
    std::vector<MaxEntropyRound> rounds;  // maxent only
};

DetectorRun run_detector(const DetectorSpec& spec, const Dataset& ds, const DetectionContext& ctx);

// --- individual detectors ----------------------------------------------------

DetectionMask detect_missing(const Dataset& ds);
DetectionMask detect_disguised(const Dataset& ds);
DetectionMask detect_outliers_sd(const Dataset& ds, double n);
DetectionMask detect_outliers_iqr(const Dataset& ds, double k);
DetectionMask detect_outliers_iforest(const Dataset& ds, std::size_t trees, std::size_t subsample,
                                      std::uint64_t seed, double contamination);
DetectionMask detect_duplicates(const Dataset& ds, const std::vector<std::string>& key_columns);
DetectionMask detect_mislabels(const Dataset& ds, const std::string& label_column, std::size_t folds,
                               const std::string& base_model, std::uint64_t seed);
DetectionMask ensemble_min_k(const std::vector<DetectionMask>& runs, std::size_t k);
DetectorRun ensemble_max_entropy(const Dataset& ds, const std::vector<DetectorSpec>& base,
                                 const DetectionContext& ctx, std::size_t label_budget, std::uint64_t seed);

// --- building blocks exposed for testing ---------------------------------------

/// Quantile of sorted data by linear interpolation at index p*(n-1).
double quantile_sorted(const std::vector<double>& sorted, double p);

/// True for an optional '-' followed by two or more copies of one digit.
bool is_repeated_digit_number(std::string_view text);

/// Confident-learning rule: flags sample i when probs(i, given_i) < t_given
/// and the argmax class differs from given_i, where t_c is the mean
/// probability of class c over samples labelled c.
std::vector<std::size_t> confident_learning_flags(const Matrix& probs, const std::vector<int>& given);

/// Normalizer c(n) = 2H(n-1) - 2(n-1)/n of isolation-forest path lengths.
double iforest_c(std::size_t n);

/// Isolation forest fit on rows of `x`.
class IsolationForest {
public:
    IsolationForest(const Matrix& x, std::size_t trees, std::size_t subsample, std::uint64_t seed);

    /// Anomaly scores 2^(-E[h(x)]/c(psi)) for each row of `x`.
    std::vector<double> scores(const Matrix& x) const;
    double path_length(std::span<const double> row, std::size_t tree) const;
    std::size_t tree_count() const { return trees_.size(); }
    std::size_t sample_size() const { return psi_; }

private:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        std::size_t size = 0;
    };
    std::vector<std::vector<Node>> trees_;
    std::size_t psi_ = 0;
};

namespace serial {
std::vector<double> iforest_scores(const IsolationForest& forest, const Matrix& x);
}  // namespace serial

}  // namespace cleanbench
