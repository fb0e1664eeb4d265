#include "cleanbench/inject.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <unordered_map>

namespace cleanbench {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::explicit_mv: return "explicit_mv";
        case ErrorKind::implicit_mv: return "implicit_mv";
        case ErrorKind::gaussian_outlier: return "gaussian_outlier";
        case ErrorKind::keyboard_typo: return "keyboard_typo";
        case ErrorKind::value_swap: return "value_swap";
        case ErrorKind::duplicate_row: return "duplicate_row";
        case ErrorKind::mislabel: return "mislabel";
        case ErrorKind::rule_violation: return "rule_violation";
    }
    return "explicit_mv";
}

ErrorKind parse_error_kind(std::string_view name) {
    for (auto k : {ErrorKind::explicit_mv, ErrorKind::implicit_mv, ErrorKind::gaussian_outlier,
                   ErrorKind::keyboard_typo, ErrorKind::value_swap, ErrorKind::duplicate_row, ErrorKind::mislabel,
                   ErrorKind::rule_violation})
        if (to_string(k) == name) return k;
    throw InputError("unknown error kind: " + std::string(name));
}

namespace {

bool is_row_level(ErrorKind k) { return k == ErrorKind::duplicate_row || k == ErrorKind::mislabel; }

}  // namespace

void ErrorProfile::validate() const {
    double cell_rates = 0.0;
    for (const auto& e : entries) {
        if (!(e.rate >= 0.0) || e.rate > 1.0)
            throw InputError(std::string(to_string(e.kind)) + ": rate must lie in [0,1]");
        if (e.kind == ErrorKind::gaussian_outlier && !(e.degree > 0.0))
            throw InputError("gaussian_outlier: degree must be > 0");
        if (e.kind == ErrorKind::mislabel && e.label_column.empty())
            throw InputError("mislabel: label_column is required");
        if (!is_row_level(e.kind)) cell_rates += e.rate;
    }
    if (cell_rates > 1.0 + 1e-12) throw InputError("sum of cell-level rates exceeds 1");
}

std::size_t requested_cells(double rate, std::size_t rows, std::size_t cols) {
    return static_cast<std::size_t>(std::llround(rate * static_cast<double>(rows) * static_cast<double>(cols)));
}

const std::vector<std::string>& disguise_codes() {
    static const std::vector<std::string> codes{"-1", "0", "99", "999", "9999", "99999"};
    return codes;
}

const std::vector<std::string>& disguise_tokens() {
    static const std::vector<std::string> tokens{"NA", "none", "empty", "?"};
    return tokens;
}

// --- keyboard ------------------------------------------------------------

std::string_view qwerty_neighbors(char key) {
    static const auto table = [] {
        const char* rows[] = {"1234567890", "qwertyuiop", "asdfghjkl", "zxcvbnm"};
        std::unordered_map<char, std::string> map;
        for (int r = 0; r < 4; ++r) {
            std::string_view row(rows[r]);
            for (std::size_t i = 0; i < row.size(); ++i) {
                double x = static_cast<double>(i) + 0.5 * r;
                std::string& out = map[row[i]];
                for (int r2 = std::max(0, r - 1); r2 <= std::min(3, r + 1); ++r2) {
                    std::string_view other(rows[r2]);
                    for (std::size_t j = 0; j < other.size(); ++j) {
                        double x2 = static_cast<double>(j) + 0.5 * r2;
                        double dx = std::abs(x2 - x);
                        bool adjacent = r2 == r ? dx == 1.0 : dx <= 0.5;
                        if (adjacent) out.push_back(other[j]);
                    }
                }
            }
        }
        return map;
    }();
    auto it = table.find(static_cast<char>(std::tolower(static_cast<unsigned char>(key))));
    return it == table.end() ? std::string_view{} : std::string_view(it->second);
}

std::string keyboard_typo(std::string_view text, Rng& rng) {
    const std::string original(text);
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
    auto neighbor_of = [&](char c) -> char {
        auto n = qwerty_neighbors(c);
        char out = n.empty() ? static_cast<char>('a' + pick(26)) : n[pick(n.size())];
        if (std::isupper(static_cast<unsigned char>(c))) out = static_cast<char>(std::toupper(out));
        return out;
    };

    for (int attempt = 0; attempt < 64; ++attempt) {
        std::string s = original;
        switch (pick(4)) {
            case 0: {  // adjacent-key substitution
                std::vector<std::size_t> keys;
                for (std::size_t i = 0; i < s.size(); ++i)
                    if (!qwerty_neighbors(s[i]).empty()) keys.push_back(i);
                if (keys.empty()) continue;
                std::size_t i = keys[pick(keys.size())];
                s[i] = neighbor_of(s[i]);
                break;
            }
            case 1: {  // insertion of a key next to a neighbouring character
                std::size_t pos = pick(s.size() + 1);
                char anchor = pos > 0 ? s[pos - 1] : (s.empty() ? 'a' : s[0]);
                s.insert(s.begin() + static_cast<std::ptrdiff_t>(pos), neighbor_of(anchor));
                break;
            }
            case 2: {  // deletion
                if (s.empty()) continue;
                s.erase(s.begin() + static_cast<std::ptrdiff_t>(pick(s.size())));
                break;
            }
            default: {  // transposition of two adjacent distinct characters
                std::vector<std::size_t> spots;
                for (std::size_t i = 0; i + 1 < s.size(); ++i)
                    if (s[i] != s[i + 1]) spots.push_back(i);
                if (spots.empty()) continue;
                std::size_t i = spots[pick(spots.size())];
                std::swap(s[i], s[i + 1]);
            }
        }
        if (s != original) return s;
    }
    return original + "x";
}

// --- injection -----------------------------------------------------------

namespace {

struct ColumnStats {
    double mean = 0.0;
    double sd = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 0;
};

ColumnStats column_stats(const Column& col) {
    ColumnStats s;
    std::vector<double> v;
    for (const auto& cell : col.cells)
        if (cell.parsed) v.push_back(*cell.parsed);
    s.count = v.size();
    if (v.empty()) return s;
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    s.min = *lo;
    s.max = *hi;
    return s;
}

class Injector {
public:
    Injector(const Dataset& gt, const ErrorProfile& profile, std::uint64_t seed,
             const std::vector<DenialConstraint>& constraints)
        : gt_(gt), dirty_(gt), profile_(profile), seed_(seed), constraints_(constraints),
          used_(gt.row_count() * gt.col_count(), 0) {
        for (const auto& name : profile.protected_columns) protected_.insert(gt.column_index(name));
    }

    InjectionResult run() {
        profile_.validate();
        // Rule violations need intact row pairs; duplicates copy finished rows.
        std::vector<std::size_t> order(profile_.entries.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto rank = [&](std::size_t i) {
            auto k = profile_.entries[i].kind;
            return k == ErrorKind::rule_violation ? 0 : k == ErrorKind::duplicate_row ? 2 : 1;
        };
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rank(a) < rank(b); });

        std::map<ErrorKind, int> occurrences;
        for (std::size_t i : order) {
            const auto& spec = profile_.entries[i];
            Rng rng(derive_seed(seed_, to_string(spec.kind), static_cast<std::uint64_t>(occurrences[spec.kind]++)));
            apply(spec, rng);
        }

        InjectionResult result;
        result.report.seed = seed_;
        std::vector<CellRef> all;
        for (auto& [kind, cells] : cells_) {
            DetectionMask mask(cells, std::string(to_string(kind)));
            result.report.totals[kind] = mask.size();
            if (kind != ErrorKind::duplicate_row) result.report.cell_total += mask.size();
            all.insert(all.end(), mask.cells().begin(), mask.cells().end());
            result.report.masks.emplace(kind, std::move(mask));
        }
        std::size_t grid = gt_.cell_count();
        result.report.achieved_rate =
            grid == 0 ? 0.0 : static_cast<double>(result.report.cell_total) / static_cast<double>(grid);
        result.pair.ground_truth = gt_;
        result.pair.dirty = std::move(dirty_);
        result.pair.error_mask = DetectionMask(std::move(all), "injected");
        result.pair.duplicate_source = std::move(duplicate_source_);
        return result;
    }

private:
    std::size_t index(std::size_t r, std::size_t c) const { return r * gt_.col_count() + c; }
    bool is_used(std::size_t r, std::size_t c) const { return used_[index(r, c)] != 0; }

    void record(ErrorKind kind, std::size_t r, std::size_t c, std::string raw) {
        dirty_.set_raw(r, c, std::move(raw));
        used_[index(r, c)] = 1;
        cells_[kind].push_back({r, c});
    }

    std::vector<std::size_t> eligible_columns(const ErrorSpec& spec) const {
        std::vector<std::size_t> cols;
        if (!spec.columns.empty()) {
            for (const auto& name : spec.columns) cols.push_back(gt_.column_index(name));
        } else {
            for (std::size_t c = 0; c < gt_.col_count(); ++c)
                if (!protected_.count(c)) cols.push_back(c);
        }
        return cols;
    }

    [[noreturn]] void infeasible(const ErrorSpec& spec, std::size_t want, std::size_t got) const {
        throw InputError(std::string(to_string(spec.kind)) + ": rate infeasible, requested " + std::to_string(want) +
                         " cells but only " + std::to_string(got) + " eligible");
    }

    /// Visits eligible cells in a seeded random order, applying `transform`
    /// (which returns nullopt to skip a cell) until `want` cells changed.
    template <typename Transform>
    void sample_cells(const ErrorSpec& spec, const std::vector<std::size_t>& cols, std::size_t want, Rng& rng,
                      Transform transform) {
        if (want == 0) return;
        std::vector<CellRef> candidates;
        for (std::size_t r = 0; r < gt_.row_count(); ++r)
            for (std::size_t c : cols) candidates.push_back({r, c});
        std::shuffle(candidates.begin(), candidates.end(), rng);
        std::size_t done = 0;
        for (const auto& ref : candidates) {
            if (done == want) break;
            if (is_used(ref.row, ref.col)) continue;
            const CellValue& cell = dirty_.cell(ref);
            auto next = transform(ref, cell, rng);
            if (!next || *next == cell.raw) continue;
            record(spec.kind, ref.row, ref.col, std::move(*next));
            ++done;
        }
        if (done < want) infeasible(spec, want, done);
    }

    void apply(const ErrorSpec& spec, Rng& rng) {
        const std::size_t rows = gt_.row_count();
        const std::size_t want = is_row_level(spec.kind) ? static_cast<std::size_t>(std::llround(spec.rate * rows))
                                                          : requested_cells(spec.rate, rows, gt_.col_count());
        cells_[spec.kind];  // report every requested kind, even at rate 0
        switch (spec.kind) {
            case ErrorKind::explicit_mv:
                sample_cells(spec, eligible_columns(spec), want, rng,
                             [](CellRef, const CellValue& cell, Rng&) -> std::optional<std::string> {
                                 if (cell.is_empty) return std::nullopt;
                                 return std::string();
                             });
                break;
            case ErrorKind::implicit_mv: inject_implicit(spec, want, rng); break;
            case ErrorKind::gaussian_outlier: inject_outliers(spec, want, rng); break;
            case ErrorKind::keyboard_typo:
                sample_cells(spec, eligible_columns(spec), want, rng,
                             [](CellRef, const CellValue& cell, Rng& g) -> std::optional<std::string> {
                                 if (cell.is_empty) return std::nullopt;
                                 return keyboard_typo(cell.raw, g);
                             });
                break;
            case ErrorKind::value_swap: inject_swaps(spec, want, rng); break;
            case ErrorKind::duplicate_row: inject_duplicates(spec, want, rng); break;
            case ErrorKind::mislabel: inject_mislabels(spec, want, rng); break;
            case ErrorKind::rule_violation: inject_rule_violations(spec, want, rng); break;
        }
    }

    void inject_implicit(const ErrorSpec& spec, std::size_t want, Rng& rng) {
        auto cols = eligible_columns(spec);
        std::map<std::size_t, std::string> code_for;
        for (std::size_t c : cols) {
            if (!gt_.column(c).is_numeric()) continue;
            auto st = column_stats(gt_.column(c));
            std::string chosen;
            for (const auto& code : disguise_codes())
                if (*parse_number(code) > st.max) chosen = code;  // codes ascend: keeps the largest
            if (chosen.empty())
                for (const auto& code : disguise_codes())
                    if (*parse_number(code) < st.min) {
                        chosen = code;
                        break;
                    }
            code_for[c] = chosen;
        }
        const auto& tokens = disguise_tokens();
        sample_cells(spec, cols, want, rng,
                     [&](CellRef ref, const CellValue& cell, Rng& g) -> std::optional<std::string> {
                         if (cell.is_empty) return std::nullopt;
                         if (gt_.column(ref.col).is_numeric()) {
                             const std::string& code = code_for[ref.col];
                             if (!code.empty()) return code;
                             for (const auto& alt : disguise_codes())
                                 if (alt != cell.raw) return alt;
                             return std::nullopt;
                         }
                         std::vector<const std::string*> options;
                         for (const auto& t : tokens)
                             if (t != cell.raw) options.push_back(&t);
                         return *options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(g)];
                     });
    }

    void inject_outliers(const ErrorSpec& spec, std::size_t want, Rng& rng) {
        std::vector<std::size_t> cols;
        std::map<std::size_t, ColumnStats> stats;
        for (std::size_t c : eligible_columns(spec)) {
            if (!gt_.column(c).is_numeric()) {
                if (!spec.columns.empty())
                    throw InputError("gaussian_outlier: column '" + gt_.column(c).name + "' is not numeric");
                continue;
            }
            auto st = column_stats(gt_.column(c));
            if (st.count < 2 || st.sd == 0.0) continue;
            cols.push_back(c);
            stats[c] = st;
        }
        if (cols.empty() && want > 0) throw InputError("gaussian_outlier: no numeric column with spread to target");
        std::normal_distribution<double> normal(0.0, 1.0);
        std::bernoulli_distribution coin(0.5);
        sample_cells(spec, cols, want, rng,
                     [&](CellRef ref, const CellValue& cell, Rng& g) -> std::optional<std::string> {
                         if (!cell.parsed) return std::nullopt;
                         const auto& st = stats[ref.col];
                         double sign = coin(g) ? 1.0 : -1.0;
                         double gap = spec.degree * st.sd;
                         double x = st.mean + sign * (gap + std::abs(normal(g)) * st.sd);
                         // Guard the bound against rounding in the addition.
                         while (std::abs(x - st.mean) < gap) x = std::nextafter(x, sign * HUGE_VAL);
                         return format_number(x);
                     });
    }

    void inject_swaps(const ErrorSpec& spec, std::size_t want, Rng& rng) {
        if (want == 0) return;
        if (want == 1) infeasible(spec, want, 0);
        auto cols = eligible_columns(spec);
        std::vector<std::size_t> rows(gt_.row_count());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        std::size_t done = 0;
        // An odd budget ends with one three-way rotation.
        const bool rotate_last = want % 2 == 1;
        const std::size_t pair_budget = rotate_last ? want - 3 : want;

        bool progress = true;
        while (done < pair_budget && progress) {
            progress = false;
            std::shuffle(rows.begin(), rows.end(), rng);
            for (std::size_t r : rows) {
                if (done >= pair_budget) break;
                std::vector<std::size_t> free;
                for (std::size_t c : cols)
                    if (!is_used(r, c) && !dirty_.cell(r, c).is_empty) free.push_back(c);
                std::shuffle(free.begin(), free.end(), rng);
                bool swapped = false;
                for (std::size_t i = 0; i < free.size() && !swapped; ++i)
                    for (std::size_t j = i + 1; j < free.size() && !swapped; ++j) {
                        std::string a = dirty_.cell(r, free[i]).raw, b = dirty_.cell(r, free[j]).raw;
                        if (a == b) continue;
                        record(spec.kind, r, free[i], b);
                        record(spec.kind, r, free[j], a);
                        done += 2;
                        swapped = progress = true;
                    }
            }
        }
        if (rotate_last && done == pair_budget) {
            std::shuffle(rows.begin(), rows.end(), rng);
            for (std::size_t r : rows) {
                std::vector<std::size_t> free;
                for (std::size_t c : cols)
                    if (!is_used(r, c) && !dirty_.cell(r, c).is_empty) free.push_back(c);
                std::shuffle(free.begin(), free.end(), rng);
                bool rotated = false;
                for (std::size_t i = 0; i < free.size() && !rotated; ++i)
                    for (std::size_t j = i + 1; j < free.size() && !rotated; ++j)
                        for (std::size_t k = j + 1; k < free.size() && !rotated; ++k) {
                            std::string a = dirty_.cell(r, free[i]).raw, b = dirty_.cell(r, free[j]).raw,
                                        c = dirty_.cell(r, free[k]).raw;
                            if (a == b || b == c || a == c) continue;
                            record(spec.kind, r, free[i], b);
                            record(spec.kind, r, free[j], c);
                            record(spec.kind, r, free[k], a);
                            done += 3;
                            rotated = true;
                        }
                if (rotated) break;
            }
        }
        if (done < want) infeasible(spec, want, done);
    }

    void inject_duplicates(const ErrorSpec& spec, std::size_t want, Rng& rng) {
        const std::size_t rows = gt_.row_count();
        if (want > rows) infeasible(spec, want, rows);
        std::vector<std::size_t> sources(rows);
        std::iota(sources.begin(), sources.end(), std::size_t{0});
        std::shuffle(sources.begin(), sources.end(), rng);
        sources.resize(want);
        std::bernoulli_distribution fuzzy(0.5);
        auto cols = eligible_columns(spec);
        for (std::size_t source : sources) {
            std::size_t row = dirty_.row_count();
            dirty_.append_row_copy(source, row);
            duplicate_source_[row] = source;
            for (std::size_t c = 0; c < gt_.col_count(); ++c) cells_[spec.kind].push_back({row, c});
            if (!fuzzy(rng)) continue;
            std::vector<std::size_t> typeable;
            for (std::size_t c : cols)
                if (!dirty_.cell(row, c).is_empty) typeable.push_back(c);
            if (typeable.empty()) continue;
            std::size_t c = typeable[std::uniform_int_distribution<std::size_t>(0, typeable.size() - 1)(rng)];
            dirty_.set_raw(row, c, keyboard_typo(dirty_.cell(row, c).raw, rng));
        }
    }

    void inject_mislabels(const ErrorSpec& spec, std::size_t want, Rng& rng) {
        std::size_t col = gt_.column_index(spec.label_column);
        std::set<std::string> class_set;
        for (const auto& cell : gt_.column(col).cells)
            if (!cell.is_empty) class_set.insert(cell.raw);
        if (class_set.size() < 2)
            throw InputError("mislabel: label column '" + spec.label_column + "' has fewer than 2 classes");
        std::vector<std::string> classes(class_set.begin(), class_set.end());
        ErrorSpec restricted = spec;
        restricted.columns = {spec.label_column};
        sample_cells(restricted, {col}, want, rng,
                     [&](CellRef, const CellValue& cell, Rng& g) -> std::optional<std::string> {
                         if (cell.is_empty) return std::nullopt;
                         std::vector<const std::string*> others;
                         for (const auto& c : classes)
                             if (c != cell.raw) others.push_back(&c);
                         return *others[std::uniform_int_distribution<std::size_t>(0, others.size() - 1)(g)];
                     });
    }

    void inject_rule_violations(const ErrorSpec& spec, std::size_t want, Rng& rng) {
        if (want == 0) return;
        const auto selected = select_constraints(constraints_, spec.constraint_ids);
        std::vector<const DenialConstraint*> fds;
        for (const auto& dc : selected)
            if (dc.fd) fds.push_back(&dc);
        if (fds.empty()) throw InputError("rule_violation: no functional dependency constraints available");

        struct BoundFd {
            std::vector<std::size_t> lhs;
            std::size_t rhs;
        };
        std::vector<BoundFd> bound;
        for (const auto* dc : fds) {
            BoundFd b;
            for (const auto& c : dc->fd->lhs) {
                b.lhs.push_back(gt_.column_index(c));
                if (protected_.count(b.lhs.back()))
                    throw InputError("rule_violation: lhs column '" + c + "' is protected");
            }
            b.rhs = gt_.column_index(dc->fd->rhs);
            bound.push_back(std::move(b));
        }

        const std::size_t rows = gt_.row_count();
        if (rows < 2) infeasible(spec, want, 0);
        std::uniform_int_distribution<std::size_t> pick_row(0, rows - 1);
        std::uniform_int_distribution<std::size_t> pick_fd(0, bound.size() - 1);
        std::size_t done = 0;
        const std::size_t max_attempts = 1000 * want + 100000;
        for (std::size_t attempt = 0; attempt < max_attempts && done < want; ++attempt) {
            const auto& fd = bound[pick_fd(rng)];
            std::size_t t1 = pick_row(rng), t2 = pick_row(rng);
            if (t1 == t2) continue;
            const auto& rhs1 = dirty_.cell(t1, fd.rhs);
            const auto& rhs2 = dirty_.cell(t2, fd.rhs);
            if (rhs1.is_empty || rhs2.is_empty || rhs1.raw == rhs2.raw) continue;
            std::vector<std::size_t> overwrite;
            bool usable = true;
            for (std::size_t c : fd.lhs) {
                if (dirty_.cell(t1, c).is_empty) usable = false;
                if (dirty_.cell(t1, c).raw != dirty_.cell(t2, c).raw) overwrite.push_back(c);
            }
            if (!usable || overwrite.empty() || overwrite.size() > want - done) continue;
            if (std::any_of(overwrite.begin(), overwrite.end(), [&](std::size_t c) { return is_used(t2, c); })) continue;
            for (std::size_t c : overwrite) record(spec.kind, t2, c, dirty_.cell(t1, c).raw);
            // Keep the other cells of the violating pair intact for later kinds.
            for (std::size_t c : fd.lhs) used_[index(t1, c)] = 1;
            used_[index(t1, fd.rhs)] = 1;
            used_[index(t2, fd.rhs)] = 1;
            done += overwrite.size();
        }
        if (done < want) infeasible(spec, want, done);
    }

    const Dataset& gt_;
    Dataset dirty_;
    const ErrorProfile& profile_;
    std::uint64_t seed_;
    const std::vector<DenialConstraint>& constraints_;
    std::vector<unsigned char> used_;
    std::set<std::size_t> protected_;
    std::map<ErrorKind, std::vector<CellRef>> cells_;
    std::map<std::size_t, std::size_t> duplicate_source_;
};

}  // namespace

InjectionResult inject(const Dataset& gt, const ErrorProfile& profile, std::uint64_t seed,
                       const std::vector<DenialConstraint>& constraints) {
    return Injector(gt, profile, seed, constraints).run();
}

// --- synthetic -----------------------------------------------------------

SyntheticKind parse_synthetic_kind(std::string_view name) {
    if (name == "linear_regression") return SyntheticKind::linear_regression;
    if (name == "blobs") return SyntheticKind::blobs;
    if (name == "two_class") return SyntheticKind::two_class;
    throw InputError("unknown synthetic generator: " + std::string(name));
}

namespace {

// Six significant digits keep generated CSVs readable; the rounded value is
// the ground truth from then on.
double round6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return *parse_number(buf);
}

std::string join_numbers(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ";" : "") + format_number(v[i]);
    return out;
}

}  // namespace

Dataset make_synthetic(const SyntheticSpec& spec) {
    if (spec.rows == 0) throw InputError("synthetic dataset size must be positive");
    Rng rng(derive_seed(spec.seed, "synthetic"));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows(spec.rows);
    CsvOptions opts;
    std::map<std::string, std::string> meta{{"seed", std::to_string(spec.seed)}};

    switch (spec.kind) {
        case SyntheticKind::linear_regression:
        case SyntheticKind::two_class: {
            const std::size_t d = spec.weights.size();
            if (d == 0) throw InputError("synthetic generator needs at least one weight");
            for (std::size_t j = 0; j < d; ++j) header.push_back("x" + std::to_string(j + 1));
            const bool regression = spec.kind == SyntheticKind::linear_regression;
            header.push_back(regression ? "y" : "label");
            for (auto& row : rows) {
                double dot = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    double x = round6(normal(rng));
                    dot += spec.weights[j] * x;
                    row.push_back(format_number(x));
                }
                if (regression)
                    row.push_back(format_number(round6(dot + spec.noise * normal(rng))));
                else
                    row.push_back(dot + spec.bias > 0.0 ? "pos" : "neg");
            }
            for (const auto& h : header) opts.schema[h] = ColumnType::numeric;
            if (!regression) opts.schema["label"] = ColumnType::categorical;
            meta["generator"] = regression ? "linear_regression" : "two_class";
            meta["weights"] = join_numbers(spec.weights);
            if (regression) meta["noise"] = format_number(spec.noise);
            else meta["bias"] = format_number(spec.bias);
            break;
        }
        case SyntheticKind::blobs: {
            if (spec.centers.empty()) throw InputError("blobs needs at least one center");
            const std::size_t d = spec.centers.front().size();
            for (const auto& c : spec.centers)
                if (c.size() != d || d == 0) throw InputError("blob centers must share a positive dimension");
            for (std::size_t j = 0; j < d; ++j) header.push_back("x" + std::to_string(j + 1));
            header.push_back("cluster");
            for (std::size_t i = 0; i < spec.rows; ++i) {
                std::size_t k = i % spec.centers.size();
                for (std::size_t j = 0; j < d; ++j)
                    rows[i].push_back(format_number(round6(spec.centers[k][j] + spec.cluster_std * normal(rng))));
                rows[i].push_back("k" + std::to_string(k));
            }
            for (const auto& h : header) opts.schema[h] = ColumnType::numeric;
            opts.schema["cluster"] = ColumnType::categorical;
            meta["generator"] = "blobs";
            meta["cluster_std"] = format_number(spec.cluster_std);
            for (std::size_t k = 0; k < spec.centers.size(); ++k)
                meta["center." + std::to_string(k)] = join_numbers(spec.centers[k]);
            break;
        }
    }
    Dataset ds = make_dataset(meta["generator"], header, rows, opts);
    ds.metadata() = std::move(meta);
    return ds;
}

}  // namespace cleanbench
