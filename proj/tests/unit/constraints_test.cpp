#include "doctest.h"

#include <set>

#include "cleanbench/constraints.hpp"
#include "test_util.hpp"

using namespace cleanbench;

namespace {

// Independent all-pairs checker for integer-valued tables: compares parsed
// numbers directly, empty cells never satisfy a predicate.
std::set<CellRef> oracle_violations(const Dataset& ds, const std::vector<DenialConstraint>& dcs) {
    std::set<CellRef> out;
    auto value = [&](std::size_t r, const std::string& col) -> std::optional<double> {
        for (std::size_t c = 0; c < ds.col_count(); ++c)
            if (ds.column(c).name == col) return ds.cell(r, c).parsed;
        return std::nullopt;
    };
    auto col_of = [&](const std::string& col) {
        for (std::size_t c = 0; c < ds.col_count(); ++c)
            if (ds.column(c).name == col) return c;
        return std::size_t{0};
    };
    auto cmp = [](double a, CompareOp op, double b) {
        switch (op) {
            case CompareOp::eq: return a == b;
            case CompareOp::ne: return a != b;
            case CompareOp::lt: return a < b;
            case CompareOp::le: return a <= b;
            case CompareOp::gt: return a > b;
            case CompareOp::ge: return a >= b;
        }
        return false;
    };
    for (const auto& dc : dcs) {
        for (std::size_t i = 0; i < ds.row_count(); ++i) {
            for (std::size_t j = 0; j < ds.row_count(); ++j) {
                bool pair = dc.scope == ConstraintScope::tuple_pair;
                if (pair ? i == j : j != 0) continue;
                std::size_t other = pair ? j : i;
                bool all = true;
                for (const auto& p : dc.predicates) {
                    auto l = value(p.left.tuple == 1 ? i : other, p.left.column);
                    std::optional<double> r;
                    if (auto* o = std::get_if<ColumnOperand>(&p.right))
                        r = value(o->tuple == 1 ? i : other, o->column);
                    else
                        r = std::stod(std::get<Constant>(p.right).text);
                    if (!l || !r || !cmp(*l, p.op, *r)) {
                        all = false;
                        break;
                    }
                }
                if (!all) continue;
                for (const auto& p : dc.predicates) {
                    out.insert({p.left.tuple == 1 ? i : other, col_of(p.left.column)});
                    if (auto* o = std::get_if<ColumnOperand>(&p.right))
                        out.insert({o->tuple == 1 ? i : other, col_of(o->column)});
                }
            }
        }
    }
    return out;
}

std::set<CellRef> as_set(const DetectionMask& m) { return {m.cells().begin(), m.cells().end()}; }

}  // namespace

TEST_CASE("FD line expands to canonical denial constraint") {
    auto dcs = parse_constraints("FD: zip -> city\n");
    REQUIRE(dcs.size() == 1);
    const auto& dc = dcs[0];
    CHECK(dc.id == "c1");
    CHECK(dc.scope == ConstraintScope::tuple_pair);
    REQUIRE(dc.predicates.size() == 2);
    CHECK(dc.predicates[0].op == CompareOp::eq);
    CHECK(dc.predicates[0].left.column == "zip");
    CHECK(std::get<ColumnOperand>(dc.predicates[0].right).tuple == 2);
    CHECK(dc.predicates[1].op == CompareOp::ne);
    CHECK(dc.predicates[1].left.column == "city");
    CHECK(dc.describe() == "not(t1.zip = t2.zip AND t1.city != t2.city)");
    REQUIRE(dc.fd);
    CHECK(dc.fd->lhs == std::vector<std::string>{"zip"});
}

TEST_CASE("multi-column FD and single-tuple DC") {
    auto dcs = parse_constraints("# rules\n\nFD: a, b -> c\nDC: t1.age < 0\nDC: t1.s = 'x AND y' and t1.n >= 2.5\n");
    REQUIRE(dcs.size() == 3);
    CHECK(dcs[0].predicates.size() == 3);
    CHECK(dcs[1].scope == ConstraintScope::single_tuple);
    CHECK(std::get<Constant>(dcs[1].predicates[0].right).text == "0");
    CHECK(dcs[2].predicates.size() == 2);
    CHECK(std::get<Constant>(dcs[2].predicates[0].right).text == "x AND y");
    CHECK(std::get<Constant>(dcs[2].predicates[0].right).quoted);
    CHECK(dcs[2].predicates[1].op == CompareOp::ge);
    CHECK(dcs[2].id == "c3");
}

TEST_CASE("empty file and parse errors") {
    CHECK(parse_constraints("").empty());
    CHECK(parse_constraints("   \n# only a comment\n").empty());
    CHECK_THROWS_WITH_AS(parse_constraints("FD: a -> b\nXX: foo\n"), doctest::Contains("line 2"), InputError);
    CHECK_THROWS_AS(parse_constraints("FD: a b\n"), InputError);
    CHECK_THROWS_AS(parse_constraints("FD: a -> a\n"), InputError);
    CHECK_THROWS_AS(parse_constraints("DC: age < 0\n"), InputError);
    CHECK_THROWS_AS(parse_constraints("DC: t1.age ~ 0\n"), InputError);
    CHECK_THROWS_AS(parse_constraints("DC: t1.age < zero\n"), InputError);
    std::vector<std::string> cols{"zip", "city"};
    CHECK_THROWS_WITH_AS(parse_constraints("FD: zip -> state\n", &cols), doctest::Contains("unknown column"),
                         InputError);
}

TEST_CASE("FD violation flags the four referenced cells") {
    Dataset ds = testutil::csv("zip,city\n1,A\n1,B\n2,C\n");
    auto dcs = parse_constraints("FD: zip -> city");
    auto mask = find_violations(ds, dcs);
    CHECK(mask.size() == 4);
    CHECK(mask.contains({0, 0}));
    CHECK(mask.contains({1, 1}));
    CHECK_FALSE(mask.contains({2, 0}));

    Dataset clean = testutil::csv("zip,city\n1,A\n1,A\n2,C\n");
    CHECK(find_violations(clean, dcs).empty());
}

TEST_CASE("single-tuple DC flags referenced cells of the row") {
    Dataset ds = testutil::csv("age,name\n-3,x\n4,y\n");
    auto mask = find_violations(ds, parse_constraints("DC: t1.age < 0"));
    CHECK(as_set(mask) == std::set<CellRef>{{0, 0}});
}

TEST_CASE("order comparison on categorical column is a type error") {
    Dataset ds = testutil::csv("age,name\n1,x\n");
    CHECK_THROWS_AS(find_violations(ds, parse_constraints("DC: t1.name < 3")), InputError);
    CHECK_THROWS_AS(find_violations(ds, parse_constraints("DC: t1.age < '3'")), InputError);
}

TEST_CASE("blocked checker matches brute force on random tables") {
    std::mt19937_64 rng(5);
    const char* rules =
        "FD: c0 -> c1\n"
        "FD: c1, c2 -> c3\n"
        "DC: t1.c0 = t2.c0 AND t1.c2 < t2.c2 AND t1.c3 > t2.c3\n"
        "DC: t1.c1 > 3 AND t1.c2 <= 1\n"
        "DC: t1.c0 < t2.c1 AND t1.c2 = t2.c3 AND t1.c1 != t2.c1\n";
    auto dcs = parse_constraints(rules);
    for (int trial = 0; trial < 40; ++trial) {
        std::size_t rows = 5 + trial * 5;
        Dataset ds = testutil::random_table(rng, rows, 4, 5);
        auto fast = find_violations(ds, dcs);
        auto reference = serial::find_violations(ds, dcs);
        CHECK(fast == reference);
        CHECK(as_set(fast) == oracle_violations(ds, dcs));
    }
}

TEST_CASE("find_violations is monotone in the constraint set") {
    std::mt19937_64 rng(9);
    Dataset ds = testutil::random_table(rng, 60, 4, 4);
    auto all = parse_constraints("FD: c0 -> c1\nFD: c2 -> c3\nDC: t1.c1 > 2\n");
    DetectionMask previous;
    for (std::size_t k = 1; k <= all.size(); ++k) {
        std::vector<DenialConstraint> prefix(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
        auto mask = find_violations(ds, prefix);
        CHECK(previous.subtract(mask).empty());
        previous = mask;
    }
}

TEST_CASE("FD masks are symmetric under tuple order") {
    std::mt19937_64 rng(13);
    Dataset ds = testutil::random_table(rng, 80, 3, 3);
    auto forward = find_violations(ds, parse_constraints("FD: c0 -> c1"));
    auto backward = find_violations(ds, parse_constraints("DC: t2.c0 = t1.c0 AND t2.c1 != t1.c1"));
    CHECK(forward == backward);
}

TEST_CASE("numeric equality treats 5 and 5.0 as equal, text by raw value") {
    CsvOptions opts;
    opts.schema["k"] = ColumnType::numeric;
    Dataset ds = testutil::csv("k,v\n5,a\n5.0,b\nx,c\nx,d\n", opts);
    auto mask = find_violations(ds, parse_constraints("FD: k -> v"));
    CHECK(mask.size() == 8);
}

TEST_CASE("select_constraints by id") {
    auto dcs = parse_constraints("FD: a -> b\nFD: b -> c\n");
    CHECK(select_constraints(dcs, {"c2"}).front().id == "c2");
    CHECK(select_constraints(dcs, {}).size() == 2);
    CHECK_THROWS_AS(select_constraints(dcs, {"c9"}), InputError);
}

TEST_CASE("deadline aborts the pair scan") {
    std::mt19937_64 rng(1);
    Dataset ds = testutil::random_table(rng, 400, 3, 2);
    auto dcs = parse_constraints("DC: t1.c0 < t2.c0 AND t1.c1 != t2.c1");
    DeadlineScope scope(std::chrono::steady_clock::now() - std::chrono::seconds(1));
    CHECK_THROWS_AS(find_violations(ds, dcs), TimeoutError);
}
