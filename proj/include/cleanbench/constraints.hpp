#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cleanbench/tabular.hpp"

namespace cleanbench {

enum class CompareOp { eq, ne, lt, le, gt, ge };

std::string_view to_string(CompareOp op);

struct ColumnOperand {
    int tuple = 1;  // 1 or 2
    std::string column;
};

struct Constant {
    std::string text;
    bool quoted = false;
};

struct Predicate {
    ColumnOperand left;
    CompareOp op = CompareOp::eq;
    std::variant<ColumnOperand, Constant> right;
};

struct FunctionalDependency {
    std::vector<std::string> lhs;
    std::string rhs;
};

enum class ConstraintScope { single_tuple, tuple_pair };

/// A forbidden conjunction of predicates: the constraint is violated when
/// every predicate holds for some tuple (or ordered pair of distinct tuples).
struct DenialConstraint {
    std::string id;
    std::vector<Predicate> predicates;
    ConstraintScope scope = ConstraintScope::single_tuple;
    std::optional<FunctionalDependency> fd;  // set when expanded from an FD line

    std::string describe() const;
};

DenialConstraint fd_to_denial_constraint(const FunctionalDependency& fd, std::string id);

/// Parses the rule file grammar:
///   FD: col[,col...] -> col
///   DC: t1.a < 0 AND t1.b = 'x' AND t1.c != t2.c
/// Blank lines and lines starting with '#' are skipped. Constraint ids are
/// c1, c2, ... in file order. When `columns` is given, every referenced
/// column must be in it.
std::vector<DenialConstraint> parse_constraints(std::string_view text,
                                                const std::vector<std::string>* columns = nullptr);

std::vector<DenialConstraint> load_constraints(const std::filesystem::path& path,
                                               const std::vector<std::string>* columns = nullptr);

/// Throws InputError for unknown columns and order comparisons on
/// non-numeric columns.
void bind_constraints(const std::vector<DenialConstraint>& dcs, const Dataset& ds);

/// Constraints whose id is in `ids` (all when `ids` is empty).
std::vector<DenialConstraint> select_constraints(const std::vector<DenialConstraint>& dcs,
                                                 const std::vector<std::string>& ids);

/// Cells referenced by violated constraints. Pair constraints are evaluated
/// over ordered pairs (t1, t2), t1 != t2; a violation flags the cells t1 and
/// t2 reference in their own rows. Equality predicates between tuples are
/// used to hash-partition rows before scanning.
DetectionMask find_violations(const Dataset& ds, const std::vector<DenialConstraint>& dcs);

namespace serial {
/// Reference checker: every row, every ordered pair, no blocking.
DetectionMask find_violations(const Dataset& ds, const std::vector<DenialConstraint>& dcs);
}  // namespace serial

/// True when predicate holds for rows (r1, r2); r2 is ignored for single-tuple predicates.
bool predicate_holds(const Dataset& ds, const Predicate& p, std::size_t r1, std::size_t r2);

}  // namespace cleanbench
