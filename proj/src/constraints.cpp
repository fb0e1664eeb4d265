#include "cleanbench/constraints.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cleanbench {

std::string_view to_string(CompareOp op) {
    switch (op) {
        case CompareOp::eq: return "=";
        case CompareOp::ne: return "!=";
        case CompareOp::lt: return "<";
        case CompareOp::le: return "<=";
        case CompareOp::gt: return ">";
        case CompareOp::ge: return ">=";
    }
    return "=";
}

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool is_order(CompareOp op) { return op != CompareOp::eq && op != CompareOp::ne; }

std::string operand_text(const ColumnOperand& o) { return "t" + std::to_string(o.tuple) + "." + o.column; }

[[noreturn]] void syntax_error(std::size_t line, const std::string& what) {
    throw InputError("constraint line " + std::to_string(line) + ": " + what);
}

/// Splits on the keyword AND (case-insensitive, whitespace-delimited) outside quotes.
std::vector<std::string> split_conjunction(std::string_view body) {
    std::vector<std::string> parts;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
        char ch = body[i];
        if (ch == '\'') quoted = !quoted;
        if (!quoted && (ch == ' ' || ch == '\t') && i + 4 < body.size()) {
            std::string word(body.substr(i + 1, 3));
            std::transform(word.begin(), word.end(), word.begin(), ::toupper);
            char after = body[i + 4];
            if (word == "AND" && (after == ' ' || after == '\t')) {
                parts.push_back(trim(current));
                current.clear();
                i += 4;
                continue;
            }
        }
        current.push_back(ch);
    }
    parts.push_back(trim(current));
    return parts;
}

struct OpToken {
    std::string_view text;
    CompareOp op;
};

// Longest tokens first so "<=" wins over "<".
constexpr OpToken kOps[] = {
    {"!=", CompareOp::ne}, {"<>", CompareOp::ne}, {"<=", CompareOp::le}, {">=", CompareOp::ge},
    {"\xE2\x89\xA0", CompareOp::ne}, {"\xE2\x89\xA4", CompareOp::le}, {"\xE2\x89\xA5", CompareOp::ge},
    {"=", CompareOp::eq}, {"<", CompareOp::lt}, {">", CompareOp::gt},
};

std::optional<ColumnOperand> parse_column_operand(const std::string& text) {
    if (text.size() < 4 || text[0] != 't' || (text[1] != '1' && text[1] != '2') || text[2] != '.') return std::nullopt;
    ColumnOperand o;
    o.tuple = text[1] - '0';
    o.column = text.substr(3);
    if (o.column.empty()) return std::nullopt;
    return o;
}

Predicate parse_predicate(const std::string& text, std::size_t line) {
    bool quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\'') quoted = !quoted;
        if (quoted) continue;
        for (const auto& tok : kOps) {
            if (text.compare(i, tok.text.size(), tok.text) != 0) continue;
            Predicate p;
            p.op = tok.op;
            std::string left = trim(std::string_view(text).substr(0, i));
            std::string right = trim(std::string_view(text).substr(i + tok.text.size()));
            auto lhs = parse_column_operand(left);
            if (!lhs) syntax_error(line, "left operand must be t1.<col> or t2.<col>, got '" + left + "'");
            p.left = *lhs;
            if (right.empty()) syntax_error(line, "missing right operand");
            if (auto rhs = parse_column_operand(right)) {
                p.right = *rhs;
            } else if (right.front() == '\'') {
                if (right.size() < 2 || right.back() != '\'') syntax_error(line, "unterminated string literal");
                p.right = Constant{right.substr(1, right.size() - 2), true};
            } else {
                if (!parse_number(right)) syntax_error(line, "expected column, quoted string, or number: '" + right + "'");
                p.right = Constant{right, false};
            }
            return p;
        }
    }
    syntax_error(line, "no comparison operator in '" + text + "'");
}

void check_columns(const DenialConstraint& dc, const std::vector<std::string>& columns, std::size_t line) {
    auto known = [&](const std::string& c) { return std::find(columns.begin(), columns.end(), c) != columns.end(); };
    for (const auto& p : dc.predicates) {
        if (!known(p.left.column)) syntax_error(line, "unknown column '" + p.left.column + "'");
        if (auto* r = std::get_if<ColumnOperand>(&p.right); r && !known(r->column))
            syntax_error(line, "unknown column '" + r->column + "'");
    }
}

// Cell-side view of an operand for a given row.
struct Operand {
    const CellValue* cell = nullptr;
    const Constant* constant = nullptr;
    std::optional<double> number;
};

}  // namespace

std::string DenialConstraint::describe() const {
    std::string out = "not(";
    for (std::size_t i = 0; i < predicates.size(); ++i) {
        const auto& p = predicates[i];
        if (i) out += " AND ";
        out += operand_text(p.left) + " " + std::string(to_string(p.op)) + " ";
        if (auto* r = std::get_if<ColumnOperand>(&p.right)) {
            out += operand_text(*r);
        } else {
            const auto& c = std::get<Constant>(p.right);
            out += c.quoted ? "'" + c.text + "'" : c.text;
        }
    }
    return out + ")";
}

DenialConstraint fd_to_denial_constraint(const FunctionalDependency& fd, std::string id) {
    if (fd.lhs.empty()) throw InputError("functional dependency needs at least one lhs column");
    if (std::find(fd.lhs.begin(), fd.lhs.end(), fd.rhs) != fd.lhs.end())
        throw InputError("functional dependency rhs '" + fd.rhs + "' appears in its lhs");
    DenialConstraint dc;
    dc.id = std::move(id);
    dc.scope = ConstraintScope::tuple_pair;
    dc.fd = fd;
    for (const auto& col : fd.lhs) dc.predicates.push_back({{1, col}, CompareOp::eq, ColumnOperand{2, col}});
    dc.predicates.push_back({{1, fd.rhs}, CompareOp::ne, ColumnOperand{2, fd.rhs}});
    return dc;
}

std::vector<DenialConstraint> parse_constraints(std::string_view text, const std::vector<std::string>* columns) {
    std::vector<DenialConstraint> out;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = trim(raw);
        if (s.empty() || s.front() == '#') continue;
        auto colon = s.find(':');
        if (colon == std::string::npos) syntax_error(line, "expected 'FD:' or 'DC:'");
        std::string kind = trim(std::string_view(s).substr(0, colon));
        std::string body = trim(std::string_view(s).substr(colon + 1));
        std::string id = "c" + std::to_string(out.size() + 1);

        DenialConstraint dc;
        if (kind == "FD") {
            auto arrow = body.find("->");
            if (arrow == std::string::npos) syntax_error(line, "FD needs '->'");
            FunctionalDependency fd;
            std::stringstream lhs(body.substr(0, arrow));
            std::string col;
            while (std::getline(lhs, col, ',')) {
                col = trim(col);
                if (col.empty()) syntax_error(line, "empty column in FD lhs");
                fd.lhs.push_back(col);
            }
            fd.rhs = trim(std::string_view(body).substr(arrow + 2));
            if (fd.lhs.empty() || fd.rhs.empty()) syntax_error(line, "FD needs columns on both sides");
            try {
                dc = fd_to_denial_constraint(fd, id);
            } catch (const InputError& e) {
                syntax_error(line, e.what());
            }
        } else if (kind == "DC") {
            if (body.empty()) syntax_error(line, "DC needs at least one predicate");
            dc.id = id;
            bool pair = false;
            for (const auto& part : split_conjunction(body)) {
                if (part.empty()) syntax_error(line, "empty predicate");
                auto p = parse_predicate(part, line);
                if (p.left.tuple == 2) pair = true;
                if (auto* r = std::get_if<ColumnOperand>(&p.right); r && r->tuple == 2) pair = true;
                dc.predicates.push_back(std::move(p));
            }
            bool uses_t1 = false;
            for (const auto& p : dc.predicates) {
                if (p.left.tuple == 1) uses_t1 = true;
                if (auto* r = std::get_if<ColumnOperand>(&p.right); r && r->tuple == 1) uses_t1 = true;
            }
            if (pair && !uses_t1) {
                // Only t2 referenced: the rule is really about a single tuple.
                for (auto& p : dc.predicates) {
                    p.left.tuple = 1;
                    if (auto* r = std::get_if<ColumnOperand>(&p.right)) r->tuple = 1;
                }
                pair = false;
            }
            dc.scope = pair ? ConstraintScope::tuple_pair : ConstraintScope::single_tuple;
        } else {
            syntax_error(line, "unknown constraint kind '" + kind + "'");
        }
        if (columns) check_columns(dc, *columns, line);
        out.push_back(std::move(dc));
    }
    return out;
}

std::vector<DenialConstraint> load_constraints(const std::filesystem::path& path,
                                               const std::vector<std::string>* columns) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_constraints(buf.str(), columns);
}

void bind_constraints(const std::vector<DenialConstraint>& dcs, const Dataset& ds) {
    for (const auto& dc : dcs) {
        for (const auto& p : dc.predicates) {
            std::size_t left = ds.column_index(p.left.column);
            if (auto* r = std::get_if<ColumnOperand>(&p.right)) {
                std::size_t right = ds.column_index(r->column);
                if (is_order(p.op) && (!ds.column(left).is_numeric() || !ds.column(right).is_numeric()))
                    throw InputError(dc.id + ": '" + std::string(to_string(p.op)) +
                                     "' needs numeric columns, got " + p.left.column + " and " + r->column);
            } else if (is_order(p.op)) {
                const auto& c = std::get<Constant>(p.right);
                if (!ds.column(left).is_numeric() || c.quoted)
                    throw InputError(dc.id + ": '" + std::string(to_string(p.op)) + "' needs a numeric column and literal");
            }
        }
    }
}

std::vector<DenialConstraint> select_constraints(const std::vector<DenialConstraint>& dcs,
                                                 const std::vector<std::string>& ids) {
    if (ids.empty()) return dcs;
    std::vector<DenialConstraint> out;
    for (const auto& id : ids) {
        auto it = std::find_if(dcs.begin(), dcs.end(), [&](const auto& dc) { return dc.id == id; });
        if (it == dcs.end()) throw InputError("unknown constraint id: " + id);
        out.push_back(*it);
    }
    return out;
}

bool predicate_holds(const Dataset& ds, const Predicate& p, std::size_t r1, std::size_t r2) {
    auto resolve_column = [&](const ColumnOperand& o) -> const CellValue& {
        return ds.cell(o.tuple == 1 ? r1 : r2, ds.column_index(o.column));
    };
    const CellValue& left = resolve_column(p.left);
    if (left.is_empty) return false;

    std::string_view right_raw;
    std::optional<double> right_num;
    if (auto* r = std::get_if<ColumnOperand>(&p.right)) {
        const CellValue& cell = resolve_column(*r);
        if (cell.is_empty) return false;
        right_raw = cell.raw;
        right_num = cell.parsed;
    } else {
        const auto& c = std::get<Constant>(p.right);
        right_raw = c.text;
        if (!c.quoted) right_num = parse_number(c.text);
    }

    bool numeric = left.parsed && right_num;
    switch (p.op) {
        case CompareOp::eq: return numeric ? *left.parsed == *right_num : left.raw == right_raw;
        case CompareOp::ne: return numeric ? *left.parsed != *right_num : left.raw != right_raw;
        case CompareOp::lt: return numeric && *left.parsed < *right_num;
        case CompareOp::le: return numeric && *left.parsed <= *right_num;
        case CompareOp::gt: return numeric && *left.parsed > *right_num;
        case CompareOp::ge: return numeric && *left.parsed >= *right_num;
    }
    return false;
}

namespace {

// Column indices resolved once per constraint.
struct BoundPredicate {
    int left_tuple;
    std::size_t left_col;
    CompareOp op;
    bool right_is_column;
    int right_tuple;
    std::size_t right_col;
    std::string constant_raw;
    std::optional<double> constant_num;
};

struct BoundConstraint {
    std::vector<BoundPredicate> predicates;
    bool pair = false;
    std::vector<std::size_t> t1_cols, t2_cols;  // cells flagged in each row on violation
    // Blocking keys: equality between a t1 column and a t2 column.
    std::vector<std::size_t> key_t1, key_t2;
};

BoundConstraint bind(const Dataset& ds, const DenialConstraint& dc) {
    BoundConstraint b;
    b.pair = dc.scope == ConstraintScope::tuple_pair;
    auto add_col = [&](int tuple, std::size_t col) {
        auto& v = tuple == 1 ? b.t1_cols : b.t2_cols;
        if (std::find(v.begin(), v.end(), col) == v.end()) v.push_back(col);
    };
    for (const auto& p : dc.predicates) {
        BoundPredicate bp{};
        bp.left_tuple = p.left.tuple;
        bp.left_col = ds.column_index(p.left.column);
        bp.op = p.op;
        add_col(bp.left_tuple, bp.left_col);
        if (auto* r = std::get_if<ColumnOperand>(&p.right)) {
            bp.right_is_column = true;
            bp.right_tuple = r->tuple;
            bp.right_col = ds.column_index(r->column);
            add_col(bp.right_tuple, bp.right_col);
            if (b.pair && p.op == CompareOp::eq && bp.left_tuple != bp.right_tuple) {
                b.key_t1.push_back(bp.left_tuple == 1 ? bp.left_col : bp.right_col);
                b.key_t2.push_back(bp.left_tuple == 1 ? bp.right_col : bp.left_col);
            }
        } else {
            const auto& c = std::get<Constant>(p.right);
            bp.right_is_column = false;
            bp.constant_raw = c.text;
            if (!c.quoted) bp.constant_num = parse_number(c.text);
        }
        b.predicates.push_back(std::move(bp));
    }
    return b;
}

bool holds(const Dataset& ds, const BoundPredicate& p, std::size_t r1, std::size_t r2) {
    const CellValue& left = ds.cell(p.left_tuple == 1 ? r1 : r2, p.left_col);
    if (left.is_empty) return false;
    std::string_view right_raw;
    std::optional<double> right_num;
    if (p.right_is_column) {
        const CellValue& cell = ds.cell(p.right_tuple == 1 ? r1 : r2, p.right_col);
        if (cell.is_empty) return false;
        right_raw = cell.raw;
        right_num = cell.parsed;
    } else {
        right_raw = p.constant_raw;
        right_num = p.constant_num;
    }
    bool numeric = left.parsed && right_num;
    switch (p.op) {
        case CompareOp::eq: return numeric ? *left.parsed == *right_num : left.raw == right_raw;
        case CompareOp::ne: return numeric ? *left.parsed != *right_num : left.raw != right_raw;
        case CompareOp::lt: return numeric && *left.parsed < *right_num;
        case CompareOp::le: return numeric && *left.parsed <= *right_num;
        case CompareOp::gt: return numeric && *left.parsed > *right_num;
        case CompareOp::ge: return numeric && *left.parsed >= *right_num;
    }
    return false;
}

bool violated(const Dataset& ds, const BoundConstraint& b, std::size_t r1, std::size_t r2) {
    for (const auto& p : b.predicates)
        if (!holds(ds, p, r1, r2)) return false;
    return true;
}

// Key text consistent with predicate equality: numbers compare by value,
// everything else by raw text. Empty cells never match.
std::optional<std::string> block_key(const Dataset& ds, std::size_t row, const std::vector<std::size_t>& cols) {
    std::string key;
    for (std::size_t c : cols) {
        const CellValue& v = ds.cell(row, c);
        if (v.is_empty) return std::nullopt;
        if (v.parsed) {
            double d = *v.parsed == 0.0 ? 0.0 : *v.parsed;
            char bytes[sizeof(double)];
            std::memcpy(bytes, &d, sizeof(double));
            key.push_back('n');
            key.append(bytes, sizeof(double));
        } else {
            key.push_back('s');
            key += std::to_string(v.raw.size());
            key.push_back(':');
            key += v.raw;
        }
    }
    return key;
}

class CellFlags {
public:
    CellFlags(std::size_t rows, std::size_t cols) : cols_(cols), flags_(rows * cols) {}
    void set(std::size_t row, std::size_t col) { flags_[row * cols_ + col].store(1, std::memory_order_relaxed); }
    DetectionMask to_mask(std::string source) const {
        std::vector<CellRef> cells;
        for (std::size_t i = 0; i < flags_.size(); ++i)
            if (flags_[i].load(std::memory_order_relaxed)) cells.push_back({i / cols_, i % cols_});
        return DetectionMask(std::move(cells), std::move(source));
    }

private:
    std::size_t cols_;
    std::vector<std::atomic<unsigned char>> flags_;
};

}  // namespace

DetectionMask find_violations(const Dataset& ds, const std::vector<DenialConstraint>& dcs) {
    bind_constraints(dcs, ds);
    const std::size_t n = ds.row_count();
    CellFlags flags(n, ds.col_count());
    const auto deadline = current_deadline();
    std::atomic<bool> timed_out{false};
    auto expired = [&] {
        if (!deadline) return false;
        if (timed_out.load(std::memory_order_relaxed)) return true;
        if (std::chrono::steady_clock::now() > *deadline) timed_out.store(true);
        return timed_out.load();
    };

    for (const auto& dc : dcs) {
        BoundConstraint b = bind(ds, dc);
        const auto rows = static_cast<long long>(n);
        if (!b.pair) {
#pragma omp parallel for schedule(static)
            for (long long r = 0; r < rows; ++r) {
                auto row = static_cast<std::size_t>(r);
                if (violated(ds, b, row, row))
                    for (std::size_t c : b.t1_cols) flags.set(row, c);
            }
            continue;
        }

        std::unordered_map<std::string, std::vector<std::size_t>> blocks;
        std::vector<std::optional<std::string>> t1_keys;
        const bool blocked = !b.key_t1.empty();
        if (blocked) {
            t1_keys.resize(n);
            for (std::size_t r = 0; r < n; ++r) {
                t1_keys[r] = block_key(ds, r, b.key_t1);
                if (auto k2 = block_key(ds, r, b.key_t2)) blocks[*k2].push_back(r);
            }
        }
#pragma omp parallel for schedule(dynamic, 16)
        for (long long r = 0; r < rows; ++r) {
            if (expired()) continue;
            auto r1 = static_cast<std::size_t>(r);
            auto check = [&](std::size_t r2) {
                if (r2 == r1 || !violated(ds, b, r1, r2)) return;
                for (std::size_t c : b.t1_cols) flags.set(r1, c);
                for (std::size_t c : b.t2_cols) flags.set(r2, c);
            };
            if (blocked) {
                if (!t1_keys[r1]) continue;
                auto it = blocks.find(*t1_keys[r1]);
                if (it == blocks.end()) continue;
                for (std::size_t r2 : it->second) check(r2);
            } else {
                for (std::size_t r2 = 0; r2 < n; ++r2) check(r2);
            }
        }
        if (timed_out) throw TimeoutError("find_violations: deadline exceeded");
    }
    return flags.to_mask("rule");
}

namespace serial {

DetectionMask find_violations(const Dataset& ds, const std::vector<DenialConstraint>& dcs) {
    bind_constraints(dcs, ds);
    std::vector<CellRef> cells;
    const std::size_t n = ds.row_count();
    for (const auto& dc : dcs) {
        bool pair = dc.scope == ConstraintScope::tuple_pair;
        for (std::size_t r1 = 0; r1 < n; ++r1) {
            check_deadline();
            for (std::size_t r2 = 0; r2 < (pair ? n : 1); ++r2) {
                if (pair && r1 == r2) continue;
                std::size_t other = pair ? r2 : r1;
                bool all = std::all_of(dc.predicates.begin(), dc.predicates.end(),
                                       [&](const Predicate& p) { return predicate_holds(ds, p, r1, other); });
                if (!all) continue;
                for (const auto& p : dc.predicates) {
                    cells.push_back({p.left.tuple == 1 ? r1 : other, ds.column_index(p.left.column)});
                    if (auto* r = std::get_if<ColumnOperand>(&p.right))
                        cells.push_back({r->tuple == 1 ? r1 : other, ds.column_index(r->column)});
                }
            }
        }
    }
    return DetectionMask(std::move(cells), "rule");
}

}  // namespace serial

}  // namespace cleanbench
