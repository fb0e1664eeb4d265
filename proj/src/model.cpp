#include "cleanbench/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace cleanbench {

std::string_view to_string(Task task) {
    switch (task) {
        case Task::classification: return "classification";
        case Task::regression: return "regression";
        case Task::clustering: return "clustering";
    }
    return "regression";
}

Task parse_task(std::string_view name) {
    if (name == "classification") return Task::classification;
    if (name == "regression") return Task::regression;
    if (name == "clustering") return Task::clustering;
    throw InputError("unknown task: " + std::string(name));
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// --- encoding ------------------------------------------------------------

namespace {

std::vector<double> encode_row(const EncoderState& enc, const Dataset& ds, std::size_t r) {
    std::vector<double> out;
    out.reserve(enc.feature_names.size());
    for (const auto& n : enc.numeric) {
        const auto& cell = ds.cell(r, n.column);
        double v = cell.parsed ? *cell.parsed : n.mean;
        out.push_back((v - n.mean) / n.sd);
    }
    for (const auto& c : enc.categorical) {
        std::size_t width = c.categories.size() + (c.has_other ? 1 : 0);
        std::size_t base = out.size();
        out.resize(base + width, 0.0);
        const auto& cell = ds.cell(r, c.column);
        if (cell.is_empty) continue;
        auto it = std::find(c.categories.begin(), c.categories.end(), cell.raw);
        // The "other" bucket is filled by the caller; unseen categories stay all-zero.
        if (it != c.categories.end()) out[base + static_cast<std::size_t>(it - c.categories.begin())] = 1.0;
    }
    return out;
}

}  // namespace

std::pair<EncodedMatrix, EncodedMatrix> encode(const Dataset& train, const Dataset& test,
                                               const std::optional<std::string>& target, Task task) {
    if (train.row_count() == 0) throw InputError("encode: empty training set");
    if (train.column_names() != test.column_names()) throw InputError("encode: train/test columns differ");
    std::optional<std::size_t> target_col;
    if (target) target_col = train.column_index(*target);
    if (task != Task::clustering && !target_col) throw InputError("encode: supervised task needs a target column");

    auto enc = std::make_shared<EncoderState>();
    // Training categories beyond the top 20, per categorical column, for the "other" bucket.
    std::map<std::size_t, std::set<std::string>> other_members;

    for (std::size_t c = 0; c < train.col_count(); ++c) {
        if (target_col && c == *target_col) continue;
        const Column& col = train.column(c);
        if (col.is_numeric()) {
            std::vector<double> v;
            for (const auto& cell : col.cells)
                if (cell.parsed) v.push_back(*cell.parsed);
            double mean = v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
            if (sd == 0.0) {
                enc->dropped_features.push_back(col.name);
                continue;
            }
            enc->numeric.push_back({c, mean, sd});
        } else {
            std::map<std::string, std::size_t> freq;
            for (const auto& cell : col.cells)
                if (!cell.is_empty) ++freq[cell.raw];
            std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
            std::stable_sort(ranked.begin(), ranked.end(),
                             [](const auto& a, const auto& b) { return a.second > b.second; });
            CategoricalEncoding ce;
            ce.column = c;
            for (std::size_t i = 0; i < ranked.size(); ++i) {
                if (i < kMaxOneHotCategories)
                    ce.categories.push_back(ranked[i].first);
                else
                    other_members[c].insert(ranked[i].first);
            }
            ce.has_other = ranked.size() > kMaxOneHotCategories;
            if (ce.categories.size() + (ce.has_other ? 1 : 0) < 2) {
                enc->dropped_features.push_back(col.name);
                continue;
            }
            enc->categorical.push_back(std::move(ce));
        }
    }
    for (const auto& n : enc->numeric) enc->feature_names.push_back(train.column(n.column).name);
    for (const auto& c : enc->categorical) {
        for (const auto& cat : c.categories) enc->feature_names.push_back(train.column(c.column).name + "=" + cat);
        if (c.has_other) enc->feature_names.push_back(train.column(c.column).name + "=<other>");
    }
    if (enc->feature_names.empty()) throw DataError("encode: all features dropped");

    std::vector<std::string> classes;
    if (task == Task::classification) {
        std::set<std::string> seen;
        for (const auto& cell : train.column(*target_col).cells)
            if (!cell.is_empty) seen.insert(cell.raw);
        classes.assign(seen.begin(), seen.end());
        std::set<std::string> extra;
        for (const auto& cell : test.column(*target_col).cells)
            if (!cell.is_empty && !seen.count(cell.raw)) extra.insert(cell.raw);
        classes.insert(classes.end(), extra.begin(), extra.end());
    }

    auto build = [&](const Dataset& ds) {
        EncodedMatrix m;
        m.encoder = enc;
        m.classes = classes;
        std::vector<std::vector<double>> rows;
        for (std::size_t r = 0; r < ds.row_count(); ++r) {
            if (task == Task::regression) {
                const auto& t = ds.cell(r, *target_col);
                if (!t.parsed) {
                    ++m.dropped_rows;
                    continue;
                }
                m.target.push_back(*t.parsed);
            } else if (task == Task::classification) {
                const auto& t = ds.cell(r, *target_col);
                if (t.is_empty) {
                    ++m.dropped_rows;
                    continue;
                }
                auto it = std::find(classes.begin(), classes.end(), t.raw);
                m.labels.push_back(static_cast<int>(it - classes.begin()));
            }
            auto row = encode_row(*enc, ds, r);
            // "other" bucket: training categories outside the top 20.
            std::size_t offset = enc->numeric.size();
            for (const auto& c : enc->categorical) {
                if (c.has_other) {
                    const auto& cell = ds.cell(r, c.column);
                    auto members = other_members.find(c.column);
                    if (!cell.is_empty && members != other_members.end() && members->second.count(cell.raw))
                        row[offset + c.categories.size()] = 1.0;
                }
                offset += c.categories.size() + (c.has_other ? 1 : 0);
            }
            rows.push_back(std::move(row));
            m.source_rows.push_back(r);
        }
        m.features = Matrix(rows.size(), enc->feature_names.size());
        for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), m.features.row(i).begin());
        return m;
    };
    auto tr = build(train);
    if (tr.features.rows == 0) throw DataError("encode: no training rows with a usable target");
    return {std::move(tr), build(test)};
}

// --- specs ----------------------------------------------------------------

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::knn_classifier:
        case ModelKind::knn_regressor: return "knn";
        case ModelKind::tree_classifier:
        case ModelKind::tree_regressor: return "dt";
        case ModelKind::logistic: return "logit";
        case ModelKind::ridge: return "ridge";
        case ModelKind::kmeans: return "kmeans";
    }
    return "ridge";
}

Task ModelSpec::task() const {
    switch (kind) {
        case ModelKind::knn_classifier:
        case ModelKind::tree_classifier:
        case ModelKind::logistic: return Task::classification;
        case ModelKind::knn_regressor:
        case ModelKind::tree_regressor:
        case ModelKind::ridge: return Task::regression;
        case ModelKind::kmeans: return Task::clustering;
    }
    return Task::regression;
}

std::string ModelSpec::name() const {
    ModelSpec defaults;
    defaults.kind = kind;
    if (kind == ModelKind::kmeans) defaults.k = 2;
    std::vector<std::string> params;
    auto add = [&](const char* key, auto value, auto def) {
        if (value != def) {
            std::ostringstream os;
            os << key << "=" << value;
            params.push_back(os.str());
        }
    };
    switch (kind) {
        case ModelKind::knn_classifier:
        case ModelKind::knn_regressor: add("k", k, defaults.k); break;
        case ModelKind::tree_classifier:
        case ModelKind::tree_regressor:
            add("max_depth", max_depth, defaults.max_depth);
            add("min_leaf", min_leaf, defaults.min_leaf);
            break;
        case ModelKind::logistic:
            add("lr", learning_rate, defaults.learning_rate);
            add("epochs", epochs, defaults.epochs);
            add("l2", l2, defaults.l2);
            break;
        case ModelKind::ridge: add("lambda", lambda, defaults.lambda); break;
        case ModelKind::kmeans:
            add("k", k, defaults.k);
            add("max_iter", max_iter, defaults.max_iter);
            add("restarts", restarts, defaults.restarts);
            break;
    }
    std::string out(to_string(kind));
    for (std::size_t i = 0; i < params.size(); ++i) out += (i ? "," : ":") + params[i];
    return out;
}

void ModelSpec::validate() const {
    auto bad = [&](const std::string& what) { throw InputError(name() + ": " + what); };
    switch (kind) {
        case ModelKind::knn_classifier:
        case ModelKind::knn_regressor:
            if (k < 1) bad("k must be >= 1");
            break;
        case ModelKind::tree_classifier:
        case ModelKind::tree_regressor:
            if (max_depth < 1 || min_leaf < 1) bad("max_depth and min_leaf must be >= 1");
            break;
        case ModelKind::logistic:
            if (!(learning_rate > 0) || epochs < 1 || l2 < 0) bad("lr > 0, epochs >= 1, l2 >= 0 required");
            break;
        case ModelKind::ridge:
            if (lambda < 0) bad("lambda must be >= 0");
            break;
        case ModelKind::kmeans:
            if (k < 2 || max_iter < 1 || restarts < 1) bad("k >= 2, max_iter >= 1, restarts >= 1 required");
            break;
    }
}

ModelSpec parse_model_spec(std::string_view text, Task task) {
    auto colon = text.find(':');
    std::string name(text.substr(0, colon));
    ModelSpec spec;
    if (name == "knn") {
        if (task == Task::clustering) throw InputError("knn needs a supervised task");
        spec.kind = task == Task::classification ? ModelKind::knn_classifier : ModelKind::knn_regressor;
    } else if (name == "dt") {
        if (task == Task::clustering) throw InputError("dt needs a supervised task");
        spec.kind = task == Task::classification ? ModelKind::tree_classifier : ModelKind::tree_regressor;
    } else if (name == "logit") {
        spec.kind = ModelKind::logistic;
    } else if (name == "ridge") {
        spec.kind = ModelKind::ridge;
    } else if (name == "kmeans") {
        spec.kind = ModelKind::kmeans;
        spec.k = 2;
    } else {
        throw InputError("unknown model: " + name);
    }
    if (spec.task() != task)
        throw InputError("model '" + name + "' does not fit task " + std::string(to_string(task)));
    if (colon != std::string_view::npos) {
        std::stringstream params{std::string(text.substr(colon + 1))};
        std::string kv;
        while (std::getline(params, kv, ',')) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) throw InputError("model parameter needs key=value: " + kv);
            std::string key = kv.substr(0, eq);
            auto value = parse_number(kv.substr(eq + 1));
            if (!value) throw InputError("model parameter '" + key + "' is not a number");
            auto count = [&] {
                if (*value < 0 || std::floor(*value) != *value) throw InputError("'" + key + "' must be a whole number");
                return static_cast<std::size_t>(*value);
            };
            if (key == "k") spec.k = count();
            else if (key == "max_depth") spec.max_depth = count();
            else if (key == "min_leaf") spec.min_leaf = count();
            else if (key == "lr") spec.learning_rate = *value;
            else if (key == "epochs") spec.epochs = count();
            else if (key == "l2") spec.l2 = *value;
            else if (key == "lambda") spec.lambda = *value;
            else if (key == "max_iter") spec.max_iter = count();
            else if (key == "restarts") spec.restarts = count();
            else throw InputError("unknown model parameter: " + key);
        }
    }
    spec.validate();
    return spec;
}

// --- CART -------------------------------------------------------------------

namespace {

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double score = std::numeric_limits<double>::infinity();  // child impurity sum
};

template <typename Impurity>
SplitChoice best_split(const Matrix& x, const std::vector<std::size_t>& idx, std::size_t min_leaf, Impurity make) {
    SplitChoice best;
    std::vector<std::size_t> order(idx);
    for (std::size_t f = 0; f < x.cols; ++f) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            double va = x.at(a, f), vb = x.at(b, f);
            return va < vb || (va == vb && a < b);
        });
        auto acc = make();
        acc.reset(order);
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            acc.move_left(order[i]);
            std::size_t left = i + 1, right = order.size() - left;
            double here = x.at(order[i], f), next = x.at(order[i + 1], f);
            if (here == next || left < min_leaf || right < min_leaf) continue;
            double score = acc.score();
            if (score < best.score - 1e-12) {
                best.score = score;
                best.feature = static_cast<int>(f);
                best.threshold = here + (next - here) / 2.0;
            }
        }
    }
    return best;
}

// Sum of squared errors of both children, maintained incrementally.
struct VarianceAcc {
    std::span<const double> y;
    double lsum = 0, lsq = 0, rsum = 0, rsq = 0;
    std::size_t ln = 0, rn = 0;
    void reset(const std::vector<std::size_t>& idx) {
        lsum = lsq = rsum = rsq = 0;
        ln = 0;
        rn = idx.size();
        for (auto i : idx) {
            rsum += y[i];
            rsq += y[i] * y[i];
        }
    }
    void move_left(std::size_t i) {
        lsum += y[i];
        lsq += y[i] * y[i];
        rsum -= y[i];
        rsq -= y[i] * y[i];
        ++ln;
        --rn;
    }
    double score() const {
        double l = lsq - lsum * lsum / static_cast<double>(ln);
        double r = rsq - rsum * rsum / static_cast<double>(rn);
        return std::max(0.0, l) + std::max(0.0, r);
    }
};

// Size-weighted Gini impurity of both children.
struct GiniAcc {
    std::span<const int> y;
    std::size_t classes = 0;
    std::vector<double> left, right;
    std::size_t ln = 0, rn = 0;
    void reset(const std::vector<std::size_t>& idx) {
        left.assign(classes, 0.0);
        right.assign(classes, 0.0);
        ln = 0;
        rn = idx.size();
        for (auto i : idx) right[static_cast<std::size_t>(y[i])] += 1.0;
    }
    void move_left(std::size_t i) {
        auto c = static_cast<std::size_t>(y[i]);
        left[c] += 1.0;
        right[c] -= 1.0;
        ++ln;
        --rn;
    }
    static double gini(const std::vector<double>& counts, std::size_t n) {
        double s = 0.0;
        for (double c : counts) s += c * c;
        return static_cast<double>(n) - s / static_cast<double>(n);  // n * (1 - sum p^2)
    }
    double score() const { return gini(left, ln) + gini(right, rn); }
};

}  // namespace

void DecisionTree::fit_regression(const Matrix& x, std::span<const double> y, std::size_t max_depth,
                                  std::size_t min_leaf) {
    if (x.rows == 0) throw DataError("tree: no training rows");
    nodes_.clear();
    classes_ = 0;
    std::vector<std::pair<std::vector<std::size_t>, int>> stack;
    std::vector<std::size_t> all(x.rows);
    std::iota(all.begin(), all.end(), std::size_t{0});
    nodes_.push_back({});
    stack.emplace_back(std::move(all), 0);
    while (!stack.empty()) {
        check_deadline();
        auto [idx, id] = std::move(stack.back());
        stack.pop_back();
        double sum = 0, sq = 0;
        for (auto i : idx) {
            sum += y[i];
            sq += y[i] * y[i];
        }
        double n = static_cast<double>(idx.size());
        nodes_[id].value = sum / n;
        double sse = sq - sum * sum / n;
        if (nodes_[id].depth >= max_depth || idx.size() < 2 * min_leaf || sse <= 1e-12 * std::max(1.0, sq)) continue;
        auto split = best_split(x, idx, min_leaf, [&] { return VarianceAcc{y}; });
        if (split.feature < 0 || split.score >= sse - 1e-12) continue;
        std::vector<std::size_t> l, r;
        for (auto i : idx) (x.at(i, static_cast<std::size_t>(split.feature)) <= split.threshold ? l : r).push_back(i);
        nodes_[id].feature = split.feature;
        nodes_[id].threshold = split.threshold;
        std::size_t depth = nodes_[id].depth + 1;
        nodes_[id].left = static_cast<int>(nodes_.size());
        nodes_.emplace_back().depth = depth;
        nodes_[id].right = static_cast<int>(nodes_.size());
        nodes_.emplace_back().depth = depth;
        stack.emplace_back(std::move(r), nodes_[id].right);
        stack.emplace_back(std::move(l), nodes_[id].left);
    }
}

void DecisionTree::fit_classification(const Matrix& x, std::span<const int> y, std::size_t classes,
                                      std::size_t max_depth, std::size_t min_leaf) {
    if (x.rows == 0) throw DataError("tree: no training rows");
    nodes_.clear();
    classes_ = classes;
    std::vector<std::pair<std::vector<std::size_t>, int>> stack;
    std::vector<std::size_t> all(x.rows);
    std::iota(all.begin(), all.end(), std::size_t{0});
    nodes_.push_back({});
    stack.emplace_back(std::move(all), 0);
    while (!stack.empty()) {
        check_deadline();
        auto [idx, id] = std::move(stack.back());
        stack.pop_back();
        std::vector<double> counts(classes, 0.0);
        for (auto i : idx) counts[static_cast<std::size_t>(y[i])] += 1.0;
        double gini = GiniAcc::gini(counts, idx.size());
        auto best = std::max_element(counts.begin(), counts.end());  // first max: lowest class index
        nodes_[id].value = static_cast<double>(best - counts.begin());
        for (auto& c : counts) c /= static_cast<double>(idx.size());
        nodes_[id].distribution = std::move(counts);
        if (nodes_[id].depth >= max_depth || idx.size() < 2 * min_leaf || gini <= 1e-12) continue;
        auto split = best_split(x, idx, min_leaf, [&] { return GiniAcc{y, classes, {}, {}, 0, 0}; });
        if (split.feature < 0 || split.score >= gini - 1e-12) continue;
        std::vector<std::size_t> l, r;
        for (auto i : idx) (x.at(i, static_cast<std::size_t>(split.feature)) <= split.threshold ? l : r).push_back(i);
        nodes_[id].feature = split.feature;
        nodes_[id].threshold = split.threshold;
        std::size_t depth = nodes_[id].depth + 1;
        nodes_[id].left = static_cast<int>(nodes_.size());
        nodes_.emplace_back().depth = depth;
        nodes_[id].right = static_cast<int>(nodes_.size());
        nodes_.emplace_back().depth = depth;
        stack.emplace_back(std::move(r), nodes_[id].right);
        stack.emplace_back(std::move(l), nodes_[id].left);
    }
}

const DecisionTree::Node& DecisionTree::leaf(std::span<const double> row) const {
    if (nodes_.empty()) throw Error("tree not fitted");
    const Node* n = &nodes_[0];
    while (n->feature >= 0)
        n = &nodes_[static_cast<std::size_t>(row[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left
                                                                                                   : n->right)];
    return *n;
}

std::size_t DecisionTree::depth() const {
    std::size_t d = 0;
    for (const auto& n : nodes_) d = std::max(d, n.depth);
    return d;
}

// --- logistic ---------------------------------------------------------------

double logistic_objective(const Matrix& x, std::span<const int> labels, std::size_t classes, double l2,
                          std::span<const double> params, std::vector<double>* gradient) {
    const std::size_t d = x.cols, n = x.rows;
    const double* w = params.data();
    const double* b = params.data() + classes * d;
    if (gradient) gradient->assign(params.size(), 0.0);
    double loss = 0.0;
    std::vector<double> z(classes);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = x.row(i);
        for (std::size_t k = 0; k < classes; ++k) {
            double s = b[k];
            for (std::size_t j = 0; j < d; ++j) s += w[k * d + j] * row[j];
            z[k] = s;
        }
        double zmax = *std::max_element(z.begin(), z.end());
        double norm = 0.0;
        for (double v : z) norm += std::exp(v - zmax);
        double log_norm = zmax + std::log(norm);
        auto yi = static_cast<std::size_t>(labels[i]);
        loss -= z[yi] - log_norm;
        if (!gradient) continue;
        for (std::size_t k = 0; k < classes; ++k) {
            double g = std::exp(z[k] - log_norm) - (k == yi ? 1.0 : 0.0);
            for (std::size_t j = 0; j < d; ++j) (*gradient)[k * d + j] += g * row[j];
            (*gradient)[classes * d + k] += g;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    loss *= inv_n;
    double penalty = 0.0;
    for (std::size_t i = 0; i < classes * d; ++i) penalty += w[i] * w[i];
    loss += 0.5 * l2 * penalty;
    if (gradient) {
        for (auto& g : *gradient) g *= inv_n;
        for (std::size_t i = 0; i < classes * d; ++i) (*gradient)[i] += l2 * w[i];
    }
    return loss;
}

// --- ridge --------------------------------------------------------------------

std::vector<double> solve_ridge(const Matrix& x, std::span<const double> y, double lambda) {
    const auto n = static_cast<Eigen::Index>(x.rows), d = static_cast<Eigen::Index>(x.cols);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> xm(x.data.data(), n, d);
    Eigen::Map<const Eigen::VectorXd> ym(y.data(), n);
    Eigen::MatrixXd gram = xm.transpose() * xm;
    gram.diagonal().array() += lambda;
    Eigen::VectorXd rhs = xm.transpose() * ym;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
    if (qr.rank() < d) throw DataError("ridge: singular system (rank " + std::to_string(qr.rank()) + " < " +
                                       std::to_string(d) + "), increase lambda");
    Eigen::VectorXd w = qr.solve(rhs);
    return {w.data(), w.data() + w.size()};
}

// --- k-means -------------------------------------------------------------------

int nearest_center(const Matrix& centers, std::span<const double> row) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < centers.rows; ++k) {
        double d = squared_distance(centers.row(k), row);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(k);
        }
    }
    return best;
}

std::vector<int> lloyd(const Matrix& x, Matrix& centers, std::size_t max_iter, std::vector<double>* history) {
    std::vector<int> assign(x.rows, -1);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        check_deadline();
        bool changed = false;
        double inertia = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            int c = nearest_center(centers, x.row(i));
            inertia += squared_distance(centers.row(static_cast<std::size_t>(c)), x.row(i));
            if (c != assign[i]) changed = true;
            assign[i] = c;
        }
        if (history) history->push_back(inertia);
        if (!changed) break;
        Matrix sums(centers.rows, centers.cols);
        std::vector<std::size_t> counts(centers.rows, 0);
        for (std::size_t i = 0; i < x.rows; ++i) {
            auto c = static_cast<std::size_t>(assign[i]);
            ++counts[c];
            for (std::size_t j = 0; j < x.cols; ++j) sums.at(c, j) += x.at(i, j);
        }
        for (std::size_t c = 0; c < centers.rows; ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its center
            for (std::size_t j = 0; j < x.cols; ++j) centers.at(c, j) = sums.at(c, j) / static_cast<double>(counts[c]);
        }
    }
    return assign;
}

namespace {

Matrix kmeans_plus_plus(const Matrix& x, std::size_t k, Rng& rng) {
    Matrix centers(k, x.cols);
    std::uniform_int_distribution<std::size_t> first(0, x.rows - 1);
    auto pick = first(rng);
    std::copy(x.row(pick).begin(), x.row(pick).end(), centers.row(0).begin());
    std::vector<double> d2(x.rows, std::numeric_limits<double>::infinity());
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            d2[i] = std::min(d2[i], squared_distance(x.row(i), centers.row(c - 1)));
            total += d2[i];
        }
        std::size_t chosen = 0;
        if (total > 0.0) {
            double u = std::uniform_real_distribution<double>(0.0, total)(rng);
            double acc = 0.0;
            chosen = x.rows - 1;
            for (std::size_t i = 0; i < x.rows; ++i) {
                acc += d2[i];
                if (u < acc) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = first(rng);
        }
        std::copy(x.row(chosen).begin(), x.row(chosen).end(), centers.row(c).begin());
    }
    return centers;
}

}  // namespace

// --- kernels ----------------------------------------------------------------

namespace {

std::vector<std::size_t> nearest_k(const Matrix& train, std::span<const double> q, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> d(train.rows);
    for (std::size_t i = 0; i < train.rows; ++i) d[i] = {squared_distance(train.row(i), q), i};
    k = std::min(k, d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = d[i].second;
    return out;
}

double silhouette_point(const Matrix& x, std::span<const int> assign, std::size_t i,
                        const std::vector<std::size_t>& sizes) {
    auto own = static_cast<std::size_t>(assign[i]);
    if (sizes[own] <= 1) return 0.0;
    std::vector<double> sums(sizes.size(), 0.0);
    for (std::size_t j = 0; j < x.rows; ++j) {
        if (j == i) continue;
        sums[static_cast<std::size_t>(assign[j])] += std::sqrt(squared_distance(x.row(i), x.row(j)));
    }
    double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sizes.size(); ++c)
        if (c != own && sizes[c] > 0) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    double m = std::max(a, b);
    return m == 0.0 ? 0.0 : (b - a) / m;
}

std::vector<std::size_t> cluster_sizes(std::span<const int> assign) {
    std::size_t k = 0;
    for (int a : assign) {
        if (a < 0) throw InputError("silhouette: negative cluster id");
        k = std::max(k, static_cast<std::size_t>(a) + 1);
    }
    std::vector<std::size_t> sizes(k, 0);
    for (int a : assign) ++sizes[static_cast<std::size_t>(a)];
    std::size_t non_empty = static_cast<std::size_t>(std::count_if(sizes.begin(), sizes.end(), [](auto s) { return s > 0; }));
    if (non_empty < 2) throw InputError("silhouette needs at least two non-empty clusters");
    return sizes;
}

}  // namespace

std::vector<std::vector<std::size_t>> knn_indices(const Matrix& train, const Matrix& queries, std::size_t k) {
    std::vector<std::vector<std::size_t>> out(queries.rows);
    const auto n = static_cast<long long>(queries.rows);
#pragma omp parallel for schedule(static)
    for (long long q = 0; q < n; ++q) out[static_cast<std::size_t>(q)] = nearest_k(train, queries.row(static_cast<std::size_t>(q)), k);
    return out;
}

double silhouette(const Matrix& x, std::span<const int> assignments) {
    if (assignments.size() != x.rows) throw InputError("silhouette: assignment count mismatch");
    auto sizes = cluster_sizes(assignments);
    double total = 0.0;
    const auto n = static_cast<long long>(x.rows);
#pragma omp parallel for reduction(+ : total) schedule(dynamic, 8)
    for (long long i = 0; i < n; ++i) total += silhouette_point(x, assignments, static_cast<std::size_t>(i), sizes);
    return total / static_cast<double>(x.rows);
}

namespace serial {

std::vector<std::vector<std::size_t>> knn_indices(const Matrix& train, const Matrix& queries, std::size_t k) {
    std::vector<std::vector<std::size_t>> out;
    out.reserve(queries.rows);
    for (std::size_t q = 0; q < queries.rows; ++q) out.push_back(nearest_k(train, queries.row(q), k));
    return out;
}

double silhouette(const Matrix& x, std::span<const int> assignments) {
    if (assignments.size() != x.rows) throw InputError("silhouette: assignment count mismatch");
    auto sizes = cluster_sizes(assignments);
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) total += silhouette_point(x, assignments, i, sizes);
    return total / static_cast<double>(x.rows);
}

}  // namespace serial

// --- fit / predict -----------------------------------------------------------

FittedModel fit(const ModelSpec& spec, const EncodedMatrix& train) {
    spec.validate();
    check_deadline();  // an expired budget fails even kernels too short to poll
    Stopwatch clock;
    FittedModel model;
    model.spec = spec;
    model.dims = train.features.cols;
    model.classes = train.classes.size();
    const Matrix& x = train.features;
    if (x.rows == 0) throw DataError("fit: empty training matrix");
    const Task task = spec.task();
    if (task == Task::classification && train.labels.size() != x.rows) throw InputError("fit: classifier needs labels");
    if (task == Task::regression && train.target.size() != x.rows) throw InputError("fit: regressor needs a target");

    switch (spec.kind) {
        case ModelKind::knn_classifier:
        case ModelKind::knn_regressor:
            model.state = KnnModel{x, train.target, train.labels, model.classes};
            break;
        case ModelKind::tree_classifier: {
            TreeModel tm;
            tm.classification = true;
            tm.tree.fit_classification(x, train.labels, model.classes, spec.max_depth, spec.min_leaf);
            model.state = std::move(tm);
            break;
        }
        case ModelKind::tree_regressor: {
            TreeModel tm;
            tm.tree.fit_regression(x, train.target, spec.max_depth, spec.min_leaf);
            model.state = std::move(tm);
            break;
        }
        case ModelKind::logistic: {
            LogisticModel lm;
            lm.classes = std::max<std::size_t>(model.classes, 2);
            lm.dims = x.cols;
            lm.params.assign(lm.classes * (x.cols + 1), 0.0);
            std::vector<double> grad;
            for (std::size_t e = 0; e < spec.epochs; ++e) {
                if (e % 32 == 0) check_deadline();
                logistic_objective(x, train.labels, lm.classes, spec.l2, lm.params, &grad);
                for (std::size_t i = 0; i < lm.params.size(); ++i) lm.params[i] -= spec.learning_rate * grad[i];
            }
            model.state = std::move(lm);
            break;
        }
        case ModelKind::ridge: {
            std::vector<double> mean(x.cols, 0.0);
            double ymean = 0.0;
            for (std::size_t i = 0; i < x.rows; ++i) {
                for (std::size_t j = 0; j < x.cols; ++j) mean[j] += x.at(i, j);
                ymean += train.target[i];
            }
            for (auto& m : mean) m /= static_cast<double>(x.rows);
            ymean /= static_cast<double>(x.rows);
            Matrix centered = x;
            std::vector<double> yc(x.rows);
            for (std::size_t i = 0; i < x.rows; ++i) {
                for (std::size_t j = 0; j < x.cols; ++j) centered.at(i, j) -= mean[j];
                yc[i] = train.target[i] - ymean;
            }
            RidgeModel rm;
            rm.weights = solve_ridge(centered, yc, spec.lambda);
            rm.intercept = ymean;
            for (std::size_t j = 0; j < x.cols; ++j) rm.intercept -= rm.weights[j] * mean[j];
            model.state = std::move(rm);
            break;
        }
        case ModelKind::kmeans: {
            if (x.rows < spec.k) throw DataError("kmeans: fewer rows than clusters");
            KMeansModel best;
            best.inertia = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < spec.restarts; ++r) {
                Rng rng(derive_seed(spec.seed, "kmeans", r));
                KMeansModel run;
                run.centers = kmeans_plus_plus(x, spec.k, rng);
                auto assign = lloyd(x, run.centers, spec.max_iter, &run.inertia_history);
                run.inertia = 0.0;
                for (std::size_t i = 0; i < x.rows; ++i)
                    run.inertia += squared_distance(x.row(i), run.centers.row(static_cast<std::size_t>(nearest_center(run.centers, x.row(i)))));
                if (run.inertia < best.inertia) best = std::move(run);
            }
            model.state = std::move(best);
            break;
        }
    }
    model.train_runtime = clock.seconds();
    return model;
}

Matrix predict_proba(const FittedModel& model, const Matrix& features) {
    if (features.cols != model.dims) throw InputError("predict: feature dimension mismatch");
    const std::size_t classes = std::max<std::size_t>(model.classes, 1);
    Matrix out(features.rows, classes);
    if (const auto* knn = std::get_if<KnnModel>(&model.state); knn && model.spec.kind == ModelKind::knn_classifier) {
        auto nn = knn_indices(knn->x, features, model.spec.k);
        for (std::size_t i = 0; i < features.rows; ++i) {
            for (auto j : nn[i]) out.at(i, static_cast<std::size_t>(knn->labels[j])) += 1.0;
            for (std::size_t c = 0; c < classes; ++c) out.at(i, c) /= static_cast<double>(nn[i].size());
        }
    } else if (const auto* tm = std::get_if<TreeModel>(&model.state); tm && tm->classification) {
        for (std::size_t i = 0; i < features.rows; ++i) {
            const auto& dist = tm->tree.leaf(features.row(i)).distribution;
            for (std::size_t c = 0; c < dist.size() && c < classes; ++c) out.at(i, c) = dist[c];
        }
    } else if (const auto* lm = std::get_if<LogisticModel>(&model.state)) {
        const std::size_t d = lm->dims;
        std::vector<double> z(lm->classes);
        for (std::size_t i = 0; i < features.rows; ++i) {
            auto row = features.row(i);
            for (std::size_t k = 0; k < lm->classes; ++k) {
                double s = lm->params[lm->classes * d + k];
                for (std::size_t j = 0; j < d; ++j) s += lm->params[k * d + j] * row[j];
                z[k] = s;
            }
            double zmax = *std::max_element(z.begin(), z.end());
            double norm = 0.0;
            for (double v : z) norm += std::exp(v - zmax);
            for (std::size_t k = 0; k < classes && k < lm->classes; ++k) out.at(i, k) = std::exp(z[k] - zmax) / norm;
        }
    } else {
        throw InputError("predict_proba: model is not a classifier");
    }
    return out;
}

Predictions predict(const FittedModel& model, const EncodedMatrix& data) {
    const Matrix& x = data.features;
    if (x.cols != model.dims) throw InputError("predict: feature dimension mismatch (" + std::to_string(x.cols) +
                                               " vs " + std::to_string(model.dims) + ")");
    Predictions out;
    switch (model.spec.task()) {
        case Task::classification: {
            Matrix p = predict_proba(model, x);
            out.labels.resize(x.rows);
            for (std::size_t i = 0; i < x.rows; ++i) {
                auto row = p.row(i);
                out.labels[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
            }
            break;
        }
        case Task::regression: {
            out.values.resize(x.rows);
            if (const auto* knn = std::get_if<KnnModel>(&model.state)) {
                auto nn = knn_indices(knn->x, x, model.spec.k);
                for (std::size_t i = 0; i < x.rows; ++i) {
                    double s = 0.0;
                    for (auto j : nn[i]) s += knn->y[j];
                    out.values[i] = s / static_cast<double>(nn[i].size());
                }
            } else if (const auto* tm = std::get_if<TreeModel>(&model.state)) {
                for (std::size_t i = 0; i < x.rows; ++i) out.values[i] = tm->tree.predict_value(x.row(i));
            } else if (const auto* rm = std::get_if<RidgeModel>(&model.state)) {
                for (std::size_t i = 0; i < x.rows; ++i) {
                    double s = rm->intercept;
                    for (std::size_t j = 0; j < x.cols; ++j) s += rm->weights[j] * x.at(i, j);
                    out.values[i] = s;
                }
            }
            break;
        }
        case Task::clustering: {
            const auto& km = std::get<KMeansModel>(model.state);
            out.labels.resize(x.rows);
            for (std::size_t i = 0; i < x.rows; ++i) out.labels[i] = nearest_center(km.centers, x.row(i));
            break;
        }
    }
    return out;
}

}  // namespace cleanbench
