#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "cleanbench/tabular.hpp"

namespace cleanbench {

enum class Task { classification, regression, clustering };

std::string_view to_string(Task task);
Task parse_task(std::string_view name);

/// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
};

double squared_distance(std::span<const double> a, std::span<const double> b);

// --- encoding ------------------------------------------------------------

struct NumericEncoding {
    std::size_t column = 0;
    double mean = 0.0;
    double sd = 1.0;
};

struct CategoricalEncoding {
    std::size_t column = 0;
    std::vector<std::string> categories;  // one-hot order
    bool has_other = false;               // trailing "other" bucket
};

struct EncoderState {
    std::vector<NumericEncoding> numeric;
    std::vector<CategoricalEncoding> categorical;
    std::vector<std::string> feature_names;
    std::vector<std::string> dropped_features;
};

struct EncodedMatrix {
    Matrix features;
    std::vector<double> target;      // regression
    std::vector<int> labels;         // classification: index into classes
    std::vector<std::string> classes;
    std::vector<std::size_t> source_rows;  // dataset row of each encoded row
    std::size_t dropped_rows = 0;          // rows without a usable target
    std::shared_ptr<const EncoderState> encoder;
};

inline constexpr std::size_t kMaxOneHotCategories = 20;

/// Fits the encoder on `train` and applies it to both sets. Numeric columns
/// are z-scored with the training mean and sample std (constant columns are
/// dropped); categorical and text columns are one-hot over the 20 most
/// frequent training categories plus an "other" bucket. Missing or
/// unparsable numeric cells take the training mean. The target column (if
/// any) is excluded from the features; rows whose target is unusable are
/// dropped and counted.
std::pair<EncodedMatrix, EncodedMatrix> encode(const Dataset& train, const Dataset& test,
                                               const std::optional<std::string>& target, Task task);

// --- models --------------------------------------------------------------

enum class ModelKind { knn_classifier, knn_regressor, tree_classifier, tree_regressor, logistic, ridge, kmeans };

std::string_view to_string(ModelKind kind);

struct ModelSpec {
    ModelKind kind = ModelKind::ridge;
    std::size_t k = 5;  // knn neighbours or kmeans clusters
    std::size_t max_depth = 8;
    std::size_t min_leaf = 5;
    double learning_rate = 0.1;
    std::size_t epochs = 500;
    double l2 = 1e-3;
    double lambda = 1.0;
    std::size_t max_iter = 100;
    std::size_t restarts = 5;
    std::uint64_t seed = 0;

    Task task() const;
    /// Short name with non-default parameters, e.g. "knn:k=3".
    std::string name() const;
    void validate() const;
};

/// Parses `name[:param=value,...]` with names knn, dt, ridge, logit, kmeans.
/// knn and dt resolve to the classifier or regressor form by task.
ModelSpec parse_model_spec(std::string_view text, Task task);

/// CART tree. Classification nodes keep class distributions, regression
/// nodes the mean target.
class DecisionTree {
public:
    struct Node {
        int feature = -1;
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
        std::vector<double> distribution;
        std::size_t depth = 0;
    };

    void fit_regression(const Matrix& x, std::span<const double> y, std::size_t max_depth, std::size_t min_leaf);
    void fit_classification(const Matrix& x, std::span<const int> y, std::size_t classes, std::size_t max_depth,
                            std::size_t min_leaf);

    const Node& leaf(std::span<const double> row) const;
    double predict_value(std::span<const double> row) const { return leaf(row).value; }
    std::size_t depth() const;
    const std::vector<Node>& nodes() const { return nodes_; }

private:
    std::vector<Node> nodes_;
    std::size_t classes_ = 0;
};

struct KnnModel {
    Matrix x;
    std::vector<double> y;
    std::vector<int> labels;
    std::size_t classes = 0;
};

struct LogisticModel {
    std::size_t classes = 0;
    std::size_t dims = 0;
    std::vector<double> params;  // classes x dims weights, then classes biases
};

struct RidgeModel {
    std::vector<double> weights;
    double intercept = 0.0;
};

struct KMeansModel {
    Matrix centers;
    double inertia = 0.0;
    std::vector<double> inertia_history;  // best restart, one entry per Lloyd iteration
};

struct TreeModel {
    DecisionTree tree;
    bool classification = false;
};

struct FittedModel {
    ModelSpec spec;
    std::variant<KnnModel, TreeModel, LogisticModel, RidgeModel, KMeansModel> state;
    std::size_t dims = 0;
    std::size_t classes = 0;
    double train_runtime = 0.0;
};

struct Predictions {
    std::vector<double> values;  // regression
    std::vector<int> labels;     // classification classes or cluster ids
};

FittedModel fit(const ModelSpec& spec, const EncodedMatrix& train);
Predictions predict(const FittedModel& model, const EncodedMatrix& data);
/// Class probabilities (rows x classes) for classifiers.
Matrix predict_proba(const FittedModel& model, const Matrix& features);

/// Mean softmax cross-entropy plus (l2/2)|W|^2 and its gradient with
/// respect to the flattened parameters (weights then biases).
double logistic_objective(const Matrix& x, std::span<const int> labels, std::size_t classes, double l2,
                          std::span<const double> params, std::vector<double>* gradient);

/// Solves (X^T X + lambda I) w = X^T y. Throws DataError when singular.
std::vector<double> solve_ridge(const Matrix& x, std::span<const double> y, double lambda);

/// Lloyd iterations from the given centers; returns assignments and appends
/// the inertia after each assignment step to `history`.
std::vector<int> lloyd(const Matrix& x, Matrix& centers, std::size_t max_iter, std::vector<double>* history);

/// Index of the nearest center; ties go to the lowest index.
int nearest_center(const Matrix& centers, std::span<const double> row);

// --- kernels with serial references ---------------------------------------

/// Indices of the k nearest training rows to each query row (ties by index).
std::vector<std::vector<std::size_t>> knn_indices(const Matrix& train, const Matrix& queries, std::size_t k);

/// Mean silhouette. Singleton clusters contribute 0. Throws InputError for
/// fewer than two non-empty clusters.
double silhouette(const Matrix& x, std::span<const int> assignments);

namespace serial {
std::vector<std::vector<std::size_t>> knn_indices(const Matrix& train, const Matrix& queries, std::size_t k);
double silhouette(const Matrix& x, std::span<const int> assignments);
}  // namespace serial

}  // namespace cleanbench
