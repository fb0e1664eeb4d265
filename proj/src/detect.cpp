#include "cleanbench/detect.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "cleanbench/inject.hpp"

namespace cleanbench {

std::string_view to_string(DetectorKind kind) {
    switch (kind) {
        case DetectorKind::mvd: return "mvd";
        case DetectorKind::disguised: return "fahes";
        case DetectorKind::sd: return "sd";
        case DetectorKind::iqr: return "iqr";
        case DetectorKind::iforest: return "if";
        case DetectorKind::rule: return "rule";
        case DetectorKind::key_collision: return "dedup";
        case DetectorKind::mislabel: return "cl";
        case DetectorKind::min_k: return "mink";
        case DetectorKind::max_entropy: return "maxent";
    }
    return "mvd";
}

DetectorKind parse_detector_kind(std::string_view name) {
    for (auto k : {DetectorKind::mvd, DetectorKind::disguised, DetectorKind::sd, DetectorKind::iqr,
                   DetectorKind::iforest, DetectorKind::rule, DetectorKind::key_collision, DetectorKind::mislabel,
                   DetectorKind::min_k, DetectorKind::max_entropy})
        if (to_string(k) == name) return k;
    throw InputError("unknown detector: " + std::string(name));
}

// --- spec text form ------------------------------------------------------------

namespace {

// Splits on `sep` outside square brackets.
std::vector<std::string> split_top(std::string_view text, char sep) {
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char ch : text) {
        if (ch == '[') ++depth;
        if (ch == ']') --depth;
        if (depth < 0) throw InputError("unbalanced ']' in detector spec");
        if (ch == sep && depth == 0) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (depth != 0) throw InputError("unbalanced '[' in detector spec");
    out.push_back(cur);
    return out;
}

std::vector<std::string> parse_list(const std::string& value) {
    if (value.size() < 2 || value.front() != '[' || value.back() != ']')
        return {value};
    std::string inner = value.substr(1, value.size() - 2);
    if (inner.empty()) return {};
    return split_top(inner, '|');
}

std::string join_list(const std::vector<std::string>& items) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "|" : "") + items[i];
    return out + "]";
}

}  // namespace

std::string DetectorSpec::name() const {
    DetectorSpec d;
    std::vector<std::string> params;
    auto num = [&](const char* key, double v, double def) {
        if (v != def) params.push_back(std::string(key) + "=" + format_number(v));
    };
    switch (kind) {
        case DetectorKind::sd: num("n", n, d.n); break;
        case DetectorKind::iqr: num("k", k, d.k); break;
        case DetectorKind::iforest:
            num("trees", static_cast<double>(trees), static_cast<double>(d.trees));
            num("subsample", static_cast<double>(subsample), static_cast<double>(d.subsample));
            if (contamination) params.push_back("contamination=" + format_number(*contamination));
            break;
        case DetectorKind::rule:
            if (!constraint_ids.empty()) params.push_back("ids=" + join_list(constraint_ids));
            break;
        case DetectorKind::key_collision: params.push_back("keys=" + join_list(key_columns)); break;
        case DetectorKind::mislabel:
            num("folds", static_cast<double>(folds), static_cast<double>(d.folds));
            if (base_model != d.base_model) params.push_back("model=" + base_model);
            break;
        case DetectorKind::min_k:
        case DetectorKind::max_entropy: {
            if (kind == DetectorKind::min_k)
                params.push_back("k=" + std::to_string(min_k));
            else
                num("budget", static_cast<double>(label_budget), static_cast<double>(d.label_budget));
            std::vector<std::string> names;
            for (const auto& b : base) names.push_back(b.name());
            params.push_back("base=" + join_list(names));
            break;
        }
        default: break;
    }
    if (seed) params.push_back("seed=" + std::to_string(*seed));
    std::string out(to_string(kind));
    for (std::size_t i = 0; i < params.size(); ++i) out += (i ? "," : ":") + params[i];
    return out;
}

void DetectorSpec::validate() const {
    auto bad = [&](const std::string& msg) { throw InputError("detector " + std::string(to_string(kind)) + ": " + msg); };
    switch (kind) {
        case DetectorKind::sd:
            if (!(n > 0)) bad("n must be > 0");
            break;
        case DetectorKind::iqr:
            if (!(k > 0)) bad("k must be > 0");
            break;
        case DetectorKind::iforest:
            if (trees < 1 || subsample < 2) bad("trees >= 1 and subsample >= 2 required");
            if (contamination && (*contamination < 0 || *contamination > 1)) bad("contamination must lie in [0,1]");
            break;
        case DetectorKind::key_collision:
            if (key_columns.empty()) bad("key column list is empty");
            break;
        case DetectorKind::mislabel:
            if (folds < 2) bad("folds must be >= 2");
            break;
        case DetectorKind::min_k:
            if (base.empty()) bad("empty base detector list");
            if (min_k < 1 || min_k > base.size()) bad("k must lie in [1, |base|]");
            break;
        case DetectorKind::max_entropy:
            if (base.empty()) bad("empty base detector list");
            if (label_budget < base.size()) bad("label budget must be >= |base|");
            break;
        default: break;
    }
    for (const auto& b : base) b.validate();
}

DetectorSpec parse_detector_spec(std::string_view text) {
    auto colon = text.find(':');
    DetectorSpec spec;
    spec.kind = parse_detector_kind(text.substr(0, colon));
    if (colon != std::string_view::npos && colon + 1 < text.size()) {
        for (const auto& kv : split_top(text.substr(colon + 1), ',')) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) throw InputError("detector parameter needs key=value: " + kv);
            std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
            auto number = [&] {
                auto v = parse_number(value);
                if (!v) throw InputError("detector parameter '" + key + "' is not a number: " + value);
                return *v;
            };
            auto count = [&] {
                double v = number();
                if (v < 0 || std::floor(v) != v) throw InputError("'" + key + "' must be a whole number");
                return static_cast<std::size_t>(v);
            };
            const auto kind = spec.kind;
            if (key == "seed") spec.seed = static_cast<std::uint64_t>(count());
            else if (key == "n" && kind == DetectorKind::sd) spec.n = number();
            else if (key == "k" && kind == DetectorKind::iqr) spec.k = number();
            else if (key == "k" && kind == DetectorKind::min_k) spec.min_k = count();
            else if (key == "trees" && kind == DetectorKind::iforest) spec.trees = count();
            else if (key == "subsample" && kind == DetectorKind::iforest) spec.subsample = count();
            else if (key == "contamination" && kind == DetectorKind::iforest) spec.contamination = number();
            else if (key == "ids" && kind == DetectorKind::rule) spec.constraint_ids = parse_list(value);
            else if (key == "keys" && kind == DetectorKind::key_collision) spec.key_columns = parse_list(value);
            else if (key == "folds" && kind == DetectorKind::mislabel) spec.folds = count();
            else if (key == "model" && kind == DetectorKind::mislabel) spec.base_model = value;
            else if (key == "budget" && kind == DetectorKind::max_entropy) spec.label_budget = count();
            else if (key == "base" && (kind == DetectorKind::min_k || kind == DetectorKind::max_entropy)) {
                for (const auto& b : parse_list(value)) spec.base.push_back(parse_detector_spec(b));
            } else {
                throw InputError("unknown parameter '" + key + "' for detector " + std::string(to_string(kind)));
            }
        }
    }
    spec.validate();
    return spec;
}

// --- statistics helpers ----------------------------------------------------------

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw InputError("quantile of empty data");
    double pos = p * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

bool is_repeated_digit_number(std::string_view text) {
    if (!text.empty() && text.front() == '-') text.remove_prefix(1);
    if (text.size() < 2 || text[0] < '0' || text[0] > '9') return false;
    return std::all_of(text.begin(), text.end(), [&](char c) { return c == text[0]; });
}

namespace {

std::vector<double> parsed_values(const Column& col) {
    std::vector<double> v;
    for (const auto& cell : col.cells)
        if (cell.parsed) v.push_back(*cell.parsed);
    return v;
}

bool unparsable(const CellValue& cell) { return !cell.is_empty && !cell.parsed; }

bool repeated_char(std::string_view s) {
    return s.size() >= 3 && std::all_of(s.begin(), s.end(), [&](char c) { return c == s[0]; });
}

}  // namespace

// --- simple detectors -------------------------------------------------------------

DetectionMask detect_missing(const Dataset& ds) {
    std::vector<CellRef> cells;
    for (std::size_t c = 0; c < ds.col_count(); ++c)
        for (std::size_t r = 0; r < ds.row_count(); ++r)
            if (ds.cell(r, c).is_empty) cells.push_back({r, c});
    return DetectionMask(std::move(cells), "mvd");
}

DetectionMask detect_disguised(const Dataset& ds) {
    std::set<std::string> dictionary(disguise_tokens().begin(), disguise_tokens().end());
    dictionary.insert(disguise_codes().begin(), disguise_codes().end());
    std::vector<CellRef> cells;
    for (std::size_t c = 0; c < ds.col_count(); ++c) {
        const Column& col = ds.column(c);
        if (!col.is_numeric()) {
            for (std::size_t r = 0; r < ds.row_count(); ++r) {
                const auto& raw = col.cells[r].raw;
                if (dictionary.count(raw) || repeated_char(raw)) cells.push_back({r, c});
            }
            continue;
        }
        auto values = parsed_values(col);
        if (values.empty()) continue;
        std::sort(values.begin(), values.end());
        double q1 = quantile_sorted(values, 0.25), q3 = quantile_sorted(values, 0.75);
        double lo = q1 - 3.0 * (q3 - q1), hi = q3 + 3.0 * (q3 - q1);
        for (std::size_t r = 0; r < ds.row_count(); ++r) {
            const auto& cell = col.cells[r];
            if (cell.parsed && is_repeated_digit_number(cell.raw) && (*cell.parsed < lo || *cell.parsed > hi))
                cells.push_back({r, c});
        }
    }
    return DetectionMask(std::move(cells), "fahes");
}

DetectionMask detect_outliers_sd(const Dataset& ds, double n) {
    if (!(n > 0)) throw InputError("sd: n must be > 0");
    std::vector<CellRef> cells;
    for (std::size_t c = 0; c < ds.col_count(); ++c) {
        const Column& col = ds.column(c);
        if (!col.is_numeric()) continue;
        auto values = parsed_values(col);
        if (values.size() < 3) continue;
        double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        double limit = n * std::sqrt(ss / static_cast<double>(values.size() - 1));
        for (std::size_t r = 0; r < ds.row_count(); ++r) {
            const auto& cell = col.cells[r];
            if (unparsable(cell) || (cell.parsed && std::abs(*cell.parsed - mean) > limit)) cells.push_back({r, c});
        }
    }
    return DetectionMask(std::move(cells), "sd");
}

DetectionMask detect_outliers_iqr(const Dataset& ds, double k) {
    if (!(k > 0)) throw InputError("iqr: k must be > 0");
    std::vector<CellRef> cells;
    for (std::size_t c = 0; c < ds.col_count(); ++c) {
        const Column& col = ds.column(c);
        if (!col.is_numeric()) continue;
        auto values = parsed_values(col);
        std::sort(values.begin(), values.end());
        double lo = -INFINITY, hi = INFINITY;
        if (!values.empty()) {
            double q1 = quantile_sorted(values, 0.25), q3 = quantile_sorted(values, 0.75);
            lo = q1 - k * (q3 - q1);
            hi = q3 + k * (q3 - q1);
        }
        for (std::size_t r = 0; r < ds.row_count(); ++r) {
            const auto& cell = col.cells[r];
            if (unparsable(cell) || (cell.parsed && (*cell.parsed < lo || *cell.parsed > hi))) cells.push_back({r, c});
        }
    }
    return DetectionMask(std::move(cells), "iqr");
}

DetectionMask detect_duplicates(const Dataset& ds, const std::vector<std::string>& key_columns) {
    if (key_columns.empty()) throw InputError("dedup: empty key column list");
    std::vector<std::size_t> keys;
    for (const auto& name : key_columns) keys.push_back(ds.column_index(name));
    std::set<std::vector<std::string>> seen;
    std::vector<CellRef> cells;
    for (std::size_t r = 0; r < ds.row_count(); ++r) {
        std::vector<std::string> key;
        for (auto c : keys) key.push_back(ds.cell(r, c).raw);
        if (seen.insert(std::move(key)).second) continue;
        for (std::size_t c = 0; c < ds.col_count(); ++c) cells.push_back({r, c});
    }
    return DetectionMask(std::move(cells), "dedup");
}

DetectionMask ensemble_min_k(const std::vector<DetectionMask>& runs, std::size_t k) {
    if (k < 1 || k > runs.size()) throw InputError("mink: k must lie in [1, number of masks]");
    std::map<CellRef, std::size_t> counts;
    for (const auto& m : runs)
        for (const auto& cell : m.cells()) ++counts[cell];
    std::vector<CellRef> cells;
    for (const auto& [cell, n] : counts)
        if (n >= k) cells.push_back(cell);
    return DetectionMask(std::move(cells), "mink");
}

// --- isolation forest ---------------------------------------------------------------

double iforest_c(std::size_t n) {
    if (n <= 1) return 0.0;
    if (n == 2) return 1.0;
    const double m = static_cast<double>(n - 1);
    const double harmonic = std::log(m) + 0.5772156649015329;
    return 2.0 * harmonic - 2.0 * m / static_cast<double>(n);
}

IsolationForest::IsolationForest(const Matrix& x, std::size_t trees, std::size_t subsample, std::uint64_t seed) {
    if (x.rows < 2) throw DataError("iforest: need at least two rows");
    if (trees < 1) throw InputError("iforest: trees must be >= 1");
    psi_ = std::min(subsample, x.rows);
    const auto height_limit = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(psi_))));
    trees_.resize(trees);
    std::vector<std::size_t> all(x.rows);
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (std::size_t t = 0; t < trees; ++t) {
        check_deadline();
        Rng rng(derive_seed(seed, "iforest", t));
        std::shuffle(all.begin(), all.end(), rng);
        auto& nodes = trees_[t];
        struct Work {
            std::vector<std::size_t> idx;
            int node;
            std::size_t depth;
        };
        std::vector<Work> stack;
        nodes.push_back({});
        stack.push_back({{all.begin(), all.begin() + static_cast<std::ptrdiff_t>(psi_)}, 0, 0});
        while (!stack.empty()) {
            Work w = std::move(stack.back());
            stack.pop_back();
            nodes[static_cast<std::size_t>(w.node)].size = w.idx.size();
            if (w.depth >= height_limit || w.idx.size() <= 1) continue;
            std::vector<std::size_t> usable;
            std::vector<std::pair<double, double>> range(x.cols);
            for (std::size_t f = 0; f < x.cols; ++f) {
                double lo = INFINITY, hi = -INFINITY;
                for (auto i : w.idx) {
                    lo = std::min(lo, x.at(i, f));
                    hi = std::max(hi, x.at(i, f));
                }
                range[f] = {lo, hi};
                if (lo < hi) usable.push_back(f);
            }
            if (usable.empty()) continue;
            auto f = usable[std::uniform_int_distribution<std::size_t>(0, usable.size() - 1)(rng)];
            double threshold = std::uniform_real_distribution<double>(range[f].first, range[f].second)(rng);
            Work left{{}, 0, w.depth + 1}, right{{}, 0, w.depth + 1};
            for (auto i : w.idx) (x.at(i, f) < threshold ? left.idx : right.idx).push_back(i);
            auto& node = nodes[static_cast<std::size_t>(w.node)];
            node.feature = static_cast<int>(f);
            node.threshold = threshold;
            node.left = static_cast<int>(nodes.size());
            left.node = node.left;
            node.right = node.left + 1;
            right.node = node.right;
            nodes.emplace_back();
            nodes.emplace_back();
            stack.push_back(std::move(right));
            stack.push_back(std::move(left));
        }
    }
}

double IsolationForest::path_length(std::span<const double> row, std::size_t tree) const {
    const auto& nodes = trees_[tree];
    std::size_t id = 0, depth = 0;
    while (nodes[id].feature >= 0) {
        id = static_cast<std::size_t>(row[static_cast<std::size_t>(nodes[id].feature)] < nodes[id].threshold
                                          ? nodes[id].left
                                          : nodes[id].right);
        ++depth;
    }
    return static_cast<double>(depth) + iforest_c(nodes[id].size);
}

namespace {

double anomaly_score(const IsolationForest& forest, std::span<const double> row) {
    double total = 0.0;
    for (std::size_t t = 0; t < forest.tree_count(); ++t) total += forest.path_length(row, t);
    double mean = total / static_cast<double>(forest.tree_count());
    return std::pow(2.0, -mean / iforest_c(forest.sample_size()));
}

}  // namespace

std::vector<double> IsolationForest::scores(const Matrix& x) const {
    std::vector<double> out(x.rows);
    const auto n = static_cast<long long>(x.rows);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = anomaly_score(*this, x.row(static_cast<std::size_t>(i)));
    return out;
}

namespace serial {

std::vector<double> iforest_scores(const IsolationForest& forest, const Matrix& x) {
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = anomaly_score(forest, x.row(i));
    return out;
}

}  // namespace serial

DetectionMask detect_outliers_iforest(const Dataset& ds, std::size_t trees, std::size_t subsample,
                                      std::uint64_t seed, double contamination) {
    if (contamination < 0 || contamination > 1) throw InputError("iforest: contamination must lie in [0,1]");
    std::vector<std::size_t> cols;
    std::vector<double> medians, mads;
    for (std::size_t c = 0; c < ds.col_count(); ++c) {
        if (!ds.column(c).is_numeric()) continue;
        auto v = parsed_values(ds.column(c));
        if (v.empty()) continue;
        std::sort(v.begin(), v.end());
        double med = quantile_sorted(v, 0.5);
        for (auto& x : v) x = std::abs(x - med);
        std::sort(v.begin(), v.end());
        cols.push_back(c);
        medians.push_back(med);
        mads.push_back(quantile_sorted(v, 0.5));
    }
    if (cols.empty()) throw DataError("iforest: dataset has no numeric columns");
    DetectionMask out("if");
    const std::size_t rows = ds.row_count();
    const auto flagged = static_cast<std::size_t>(std::ceil(contamination * static_cast<double>(rows) - 1e-9));
    if (flagged == 0) return out;

    Matrix x(rows, cols.size());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto& cell = ds.cell(r, cols[j]);
            x.at(r, j) = cell.parsed ? *cell.parsed : medians[j];
        }
    IsolationForest forest(x, trees, subsample, seed);
    auto scores = forest.scores(x);
    std::vector<std::size_t> order(rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

    std::vector<CellRef> cells;
    for (std::size_t i = 0; i < std::min(flagged, rows); ++i) {
        std::size_t r = order[i];
        std::vector<CellRef> extreme, all;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            all.push_back({r, cols[j]});
            const auto& cell = ds.cell(r, cols[j]);
            if (!cell.parsed) continue;
            double dev = std::abs(*cell.parsed - medians[j]);
            bool outlying = mads[j] > 0 ? dev / (1.4826 * mads[j]) > 3.0 : dev > 0;
            if (outlying) extreme.push_back({r, cols[j]});
        }
        auto& chosen = extreme.empty() ? all : extreme;
        cells.insert(cells.end(), chosen.begin(), chosen.end());
    }
    return DetectionMask(std::move(cells), "if");
}

// --- confident learning ------------------------------------------------------------

std::vector<std::size_t> confident_learning_flags(const Matrix& probs, const std::vector<int>& given) {
    if (given.size() != probs.rows) throw InputError("confident learning: label count mismatch");
    std::vector<double> sum(probs.cols, 0.0);
    std::vector<std::size_t> count(probs.cols, 0);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        auto c = static_cast<std::size_t>(given[i]);
        sum[c] += probs.at(i, c);
        ++count[c];
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < probs.rows; ++i) {
        auto c = static_cast<std::size_t>(given[i]);
        double threshold = sum[c] / static_cast<double>(count[c]);
        auto row = probs.row(i);
        auto argmax = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        if (row[c] < threshold && argmax != c) out.push_back(i);
    }
    return out;
}

DetectionMask detect_mislabels(const Dataset& ds, const std::string& label_column, std::size_t folds,
                               const std::string& base_model, std::uint64_t seed) {
    if (folds < 2) throw InputError("cl: folds must be >= 2");
    const std::size_t label = ds.column_index(label_column);
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t r = 0; r < ds.row_count(); ++r)
        if (!ds.cell(r, label).is_empty) by_class[ds.cell(r, label).raw].push_back(r);
    if (by_class.size() < 2) throw DataError("cl: label column '" + label_column + "' has fewer than two classes");
    std::vector<std::string> classes;
    for (const auto& [name, members] : by_class) {
        if (members.size() < folds)
            throw DataError("cl: class '" + name + "' has " + std::to_string(members.size()) + " members, fewer than " +
                            std::to_string(folds) + " folds");
        classes.push_back(name);
    }

    // Stratified fold assignment.
    Rng rng(derive_seed(seed, "cl.folds", 0));
    std::vector<int> fold_of(ds.row_count(), -1);
    for (auto& [name, members] : by_class) {
        auto shuffled = members;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        for (std::size_t i = 0; i < shuffled.size(); ++i) fold_of[shuffled[i]] = static_cast<int>(i % folds);
    }

    ModelSpec spec = parse_model_spec(base_model, Task::classification);
    spec.seed = derive_seed(seed, "cl.model", 0);
    std::vector<std::size_t> labelled;
    for (std::size_t r = 0; r < ds.row_count(); ++r)
        if (fold_of[r] >= 0) labelled.push_back(r);
    Matrix probs(ds.row_count(), classes.size());
    for (std::size_t f = 0; f < folds; ++f) {
        check_deadline();
        std::vector<std::size_t> train_rows, test_rows;
        for (auto r : labelled) (static_cast<std::size_t>(fold_of[r]) == f ? test_rows : train_rows).push_back(r);
        auto [train, test] = encode(ds.select_rows(train_rows), ds.select_rows(test_rows), label_column,
                                    Task::classification);
        auto model = fit(spec, train);
        Matrix p = predict_proba(model, test.features);
        for (std::size_t i = 0; i < test.features.rows; ++i) {
            std::size_t r = test_rows[test.source_rows[i]];
            for (std::size_t c = 0; c < train.classes.size(); ++c) {
                auto global = std::lower_bound(classes.begin(), classes.end(), train.classes[c]) - classes.begin();
                probs.at(r, static_cast<std::size_t>(global)) = p.at(i, c);
            }
        }
    }
    Matrix sub(labelled.size(), classes.size());
    std::vector<int> given(labelled.size());
    for (std::size_t i = 0; i < labelled.size(); ++i) {
        std::copy(probs.row(labelled[i]).begin(), probs.row(labelled[i]).end(), sub.row(i).begin());
        given[i] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), ds.cell(labelled[i], label).raw) -
                                    classes.begin());
    }
    std::vector<CellRef> cells;
    for (auto i : confident_learning_flags(sub, given)) cells.push_back({labelled[i], label});
    return DetectionMask(std::move(cells), "cl");
}

// --- max entropy ensemble ---------------------------------------------------------

namespace {

double binary_entropy(std::size_t dirty, std::size_t total) {
    if (total == 0 || dirty == 0 || dirty == total) return 0.0;
    double p = static_cast<double>(dirty) / static_cast<double>(total);
    return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

}  // namespace

DetectorRun ensemble_max_entropy(const Dataset& ds, const std::vector<DetectorSpec>& base,
                                 const DetectionContext& ctx, std::size_t label_budget, std::uint64_t seed) {
    if (base.empty()) throw InputError("maxent: empty base detector list");
    if (!ctx.oracle) throw InputError("maxent: needs an oracle mask for labels");
    if (label_budget < base.size()) throw InputError("maxent: label budget must be >= number of base detectors");
    Stopwatch clock;
    std::vector<DetectionMask> masks;
    for (const auto& spec : base) masks.push_back(run_detector(spec, ds, ctx).mask);

    DetectorRun run;
    run.spec.kind = DetectorKind::max_entropy;
    run.spec.base = base;
    run.spec.label_budget = label_budget;
    const std::size_t per_round = label_budget / base.size();
    std::vector<bool> done(base.size(), false);
    DetectionMask decided, accepted;
    for (std::size_t round = 0; round < base.size(); ++round) {
        const std::size_t remaining = base.size() - round;
        const std::size_t per_detector = std::max<std::size_t>(1, per_round / remaining);
        std::vector<MaxEntropyRound> candidates(base.size());
        int best = -1;
        for (std::size_t d = 0; d < base.size(); ++d) {
            if (done[d]) continue;
            auto pool = masks[d].subtract(decided).cells();
            Rng rng(derive_seed(seed, "maxent." + std::to_string(round), d));
            std::shuffle(pool.begin(), pool.end(), rng);
            pool.resize(std::min(pool.size(), per_detector));
            auto& cand = candidates[d];
            cand.detector = d;
            cand.name = base[d].name();
            cand.sampled = pool.size();
            for (const auto& cell : pool) cand.sampled_dirty += ctx.oracle->contains(cell);
            cand.entropy = binary_entropy(cand.sampled_dirty, cand.sampled);
            cand.precision = cand.sampled ? static_cast<double>(cand.sampled_dirty) / static_cast<double>(cand.sampled) : 0.0;
            cand.accepted = cand.sampled > 0 && cand.precision >= 0.5;
            if (best < 0 || cand.entropy > candidates[static_cast<std::size_t>(best)].entropy) best = static_cast<int>(d);
        }
        auto& chosen = candidates[static_cast<std::size_t>(best)];
        done[chosen.detector] = true;
        decided = decided.unite(masks[chosen.detector]);
        if (chosen.accepted) accepted = accepted.unite(masks[chosen.detector]);
        run.rounds.push_back(chosen);
    }
    accepted.set_source("maxent");
    run.mask = std::move(accepted);
    run.runtime = clock.seconds();
    return run;
}

// --- dispatch ----------------------------------------------------------------------

DetectorRun run_detector(const DetectorSpec& spec, const Dataset& ds, const DetectionContext& ctx) {
    spec.validate();
    check_deadline();  // an expired budget fails even kernels too short to poll
    Stopwatch clock;
    const std::uint64_t seed = spec.seed.value_or(ctx.seed);
    DetectorRun run;
    run.spec = spec;
    switch (spec.kind) {
        case DetectorKind::mvd: run.mask = detect_missing(ds); break;
        case DetectorKind::disguised: run.mask = detect_disguised(ds); break;
        case DetectorKind::sd: run.mask = detect_outliers_sd(ds, spec.n); break;
        case DetectorKind::iqr: run.mask = detect_outliers_iqr(ds, spec.k); break;
        case DetectorKind::iforest:
            run.mask = detect_outliers_iforest(ds, spec.trees, spec.subsample, seed,
                                               spec.contamination.value_or(ctx.default_contamination));
            break;
        case DetectorKind::rule: {
            auto dcs = spec.constraint_ids.empty() ? ctx.constraints
                                                   : select_constraints(ctx.constraints, spec.constraint_ids);
            bind_constraints(dcs, ds);
            run.mask = find_violations(ds, dcs);
            break;
        }
        case DetectorKind::key_collision: run.mask = detect_duplicates(ds, spec.key_columns); break;
        case DetectorKind::mislabel:
            if (!ctx.label_column) throw InputError("cl: no label column configured");
            run.mask = detect_mislabels(ds, *ctx.label_column, spec.folds, spec.base_model, seed);
            break;
        case DetectorKind::min_k: {
            std::vector<DetectionMask> masks;
            for (const auto& b : spec.base) masks.push_back(run_detector(b, ds, ctx).mask);
            run.mask = ensemble_min_k(masks, spec.min_k);
            break;
        }
        case DetectorKind::max_entropy: {
            auto inner = ensemble_max_entropy(ds, spec.base, ctx, spec.label_budget, seed);
            run.mask = std::move(inner.mask);
            run.rounds = std::move(inner.rounds);
            break;
        }
    }
    run.mask.set_source(spec.name());
    run.runtime = clock.seconds();
    return run;
}

}  // namespace cleanbench
