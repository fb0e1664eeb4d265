#include "doctest.h"

#include <cmath>
#include <random>

#include "cleanbench/inject.hpp"
#include "cleanbench/model.hpp"
#include "test_util.hpp"

using namespace cleanbench;

namespace {

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m.at(i, j) = rows[i][j];
    return m;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (auto& v : m.data) v = normal(rng);
    return m;
}

// Direct O(n^2) silhouette written from the definition.
double brute_silhouette(const Matrix& x, const std::vector<int>& a) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        std::map<int, std::pair<double, int>> per;
        for (std::size_t j = 0; j < x.rows; ++j) {
            if (i == j) continue;
            auto& e = per[a[j]];
            e.first += std::sqrt(squared_distance(x.row(i), x.row(j)));
            ++e.second;
        }
        if (!per.count(a[i])) continue;  // singleton
        double own = per[a[i]].first / per[a[i]].second;
        double other = 1e300;
        for (auto& [c, e] : per)
            if (c != a[i]) other = std::min(other, e.first / e.second);
        total += (other - own) / std::max(own, other);
    }
    return total / static_cast<double>(x.rows);
}

}  // namespace

TEST_CASE("silhouette of two tight pairs") {
    Matrix x = from_rows({{0}, {1}, {10}, {11}});
    std::vector<int> a{0, 0, 1, 1};
    // Outer points score 9.5/10.5, inner points 8.5/9.5.
    CHECK(silhouette(x, a) == doctest::Approx(0.8997).epsilon(1e-4));
    CHECK(serial::silhouette(x, a) == doctest::Approx(silhouette(x, a)));
    CHECK_THROWS_AS(silhouette(x, std::vector<int>{0, 0, 0, 0}), InputError);
}

TEST_CASE("silhouette matches the brute-force definition") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix x = random_matrix(30, 3, 100 + trial);
        std::vector<int> a(30);
        std::uniform_int_distribution<int> pick(0, 3);
        for (auto& v : a) v = pick(rng);
        a[0] = 0;
        a[1] = 1;
        CHECK(silhouette(x, a) == doctest::Approx(brute_silhouette(x, a)).epsilon(1e-12));
        CHECK(serial::silhouette(x, a) == doctest::Approx(brute_silhouette(x, a)).epsilon(1e-12));
    }
}

TEST_CASE("knn indices parallel equals serial and breaks ties by index") {
    Matrix train = random_matrix(50, 4, 3);
    Matrix queries = random_matrix(20, 4, 4);
    CHECK(knn_indices(train, queries, 5) == serial::knn_indices(train, queries, 5));
    Matrix dup = from_rows({{1}, {1}, {1}, {5}});
    auto nn = knn_indices(dup, from_rows({{1}}), 2);
    CHECK(nn[0] == std::vector<std::size_t>{0, 1});
    CHECK(knn_indices(dup, from_rows({{1}}), 10)[0].size() == 4);
}

TEST_CASE("ridge recovers linear weights") {
    SyntheticSpec spec;
    spec.rows = 500;
    spec.noise = 0.0;
    spec.seed = 11;
    Dataset ds = make_synthetic(spec);
    auto [train, test] = encode(ds, ds, std::string("y"), Task::regression);
    ModelSpec ms;
    ms.kind = ModelKind::ridge;
    ms.lambda = 0.0;
    auto model = fit(ms, train);
    const auto& rm = std::get<RidgeModel>(model.state);
    // Features are z-scored, so map weights back to raw scale.
    const auto& enc = *train.encoder;
    REQUIRE(enc.numeric.size() == 2);
    // Inputs were rounded to 6 significant digits, so recovery is near-exact.
    CHECK(rm.weights[0] / enc.numeric[0].sd == doctest::Approx(3.0).epsilon(1e-5));
    CHECK(rm.weights[1] / enc.numeric[1].sd == doctest::Approx(-2.0).epsilon(1e-5));
}

TEST_CASE("ridge solution satisfies the normal equations") {
    Matrix x = random_matrix(40, 5, 21);
    std::vector<double> y(40);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : y) v = normal(rng);
    for (double lambda : {0.0, 0.5, 10.0}) {
        auto w = solve_ridge(x, y, lambda);
        for (std::size_t j = 0; j < x.cols; ++j) {
            double lhs = lambda * w[j], rhs = 0.0;
            for (std::size_t i = 0; i < x.rows; ++i) {
                double pred = 0.0;
                for (std::size_t k = 0; k < x.cols; ++k) pred += x.at(i, k) * w[k];
                lhs += x.at(i, j) * pred;
                rhs += x.at(i, j) * y[i];
            }
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
        }
    }
    Matrix singular = from_rows({{1, 2}, {2, 4}, {3, 6}});
    CHECK_THROWS_AS(solve_ridge(singular, std::vector<double>{1, 2, 3}, 0.0), DataError);
    CHECK_NOTHROW(solve_ridge(singular, std::vector<double>{1, 2, 3}, 1.0));
}

TEST_CASE("depth-one tree finds the single split") {
    Matrix x = from_rows({{1}, {2}, {3}, {10}, {11}, {12}});
    std::vector<double> y{0, 0, 0, 5, 5, 5};
    DecisionTree tree;
    tree.fit_regression(x, y, 1, 1);
    CHECK(tree.depth() == 1);
    CHECK(tree.nodes()[0].threshold == doctest::Approx(6.5));
    CHECK(tree.predict_value(std::vector<double>{0}) == 0.0);
    CHECK(tree.predict_value(std::vector<double>{20}) == 5.0);

    std::vector<int> labels{0, 0, 0, 1, 1, 1};
    DecisionTree cls;
    cls.fit_classification(x, labels, 2, 8, 1);
    CHECK(cls.nodes().size() == 3);  // pure children stop growing
    CHECK(cls.leaf(std::vector<double>{11}).distribution == std::vector<double>{0.0, 1.0});
}

TEST_CASE("tree respects depth and leaf limits") {
    Matrix x = random_matrix(200, 3, 8);
    std::vector<double> y(200);
    for (std::size_t i = 0; i < 200; ++i) y[i] = x.at(i, 0) * x.at(i, 1) + x.at(i, 2);
    DecisionTree tree;
    tree.fit_regression(x, y, 4, 7);
    CHECK(tree.depth() <= 4);
    std::map<const DecisionTree::Node*, int> counts;
    for (std::size_t i = 0; i < 200; ++i) ++counts[&tree.leaf(x.row(i))];
    for (auto& [node, n] : counts) CHECK(n >= 7);
}

TEST_CASE("kmeans recovers blob centers") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SyntheticSpec spec;
        spec.kind = SyntheticKind::blobs;
        spec.rows = 200;
        spec.seed = seed;
        Dataset ds = make_synthetic(spec);
        // Fit on the raw coordinates so centers compare directly.
        Matrix coords(ds.row_count(), 2);
        for (std::size_t r = 0; r < ds.row_count(); ++r)
            for (std::size_t c = 0; c < 2; ++c) coords.at(r, c) = *ds.cell(r, c).parsed;
        EncodedMatrix em;
        em.features = coords;
        ModelSpec ms = parse_model_spec("kmeans", Task::clustering);
        ms.seed = seed;
        auto model = fit(ms, em);
        const auto& km = std::get<KMeansModel>(model.state);
        for (const auto& truth : spec.centers) {
            double best = 1e300;
            for (std::size_t k = 0; k < km.centers.rows; ++k)
                best = std::min(best, std::sqrt(squared_distance(km.centers.row(k), truth)));
            CHECK(best < 0.5);
        }
        for (std::size_t i = 1; i < km.inertia_history.size(); ++i)
            CHECK(km.inertia_history[i] <= km.inertia_history[i - 1] + 1e-9);
    }
}

TEST_CASE("lloyd inertia never increases from a poor start") {
    Matrix x = random_matrix(120, 2, 17);
    Matrix centers = from_rows({{5, 5}, {5.1, 5}, {5, 5.1}});
    std::vector<double> history;
    lloyd(x, centers, 50, &history);
    REQUIRE(history.size() >= 2);
    for (std::size_t i = 1; i < history.size(); ++i) CHECK(history[i] <= history[i - 1] + 1e-9);
    CHECK(nearest_center(from_rows({{0}, {2}}), std::vector<double>{1}) == 0);
}

TEST_CASE("1-nn reproduces training labels") {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::two_class;
    spec.rows = 80;
    spec.seed = 3;
    Dataset ds = make_synthetic(spec);
    auto [train, test] = encode(ds, ds, std::string("label"), Task::classification);
    auto model = fit(parse_model_spec("knn:k=1", Task::classification), train);
    CHECK(predict(model, train).labels == train.labels);
}

TEST_CASE("logistic gradient matches finite differences") {
    Matrix x = random_matrix(25, 3, 31);
    std::vector<int> labels(25);
    for (std::size_t i = 0; i < 25; ++i) labels[i] = static_cast<int>(i % 3);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal(0.0, 0.5);
    std::vector<double> params(3 * 4);
    for (auto& p : params) p = normal(rng);
    std::vector<double> grad;
    logistic_objective(x, labels, 3, 0.01, params, &grad);
    const double h = 1e-6;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto plus = params, minus = params;
        plus[i] += h;
        minus[i] -= h;
        double fd = (logistic_objective(x, labels, 3, 0.01, plus, nullptr) -
                     logistic_objective(x, labels, 3, 0.01, minus, nullptr)) /
                    (2 * h);
        CHECK(std::abs(fd - grad[i]) < 1e-5);
    }
}

TEST_CASE("logistic regression separates a linear boundary") {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::two_class;
    spec.rows = 300;
    spec.seed = 12;
    Dataset ds = make_synthetic(spec);
    auto [train, test] = encode(ds, ds, std::string("label"), Task::classification);
    auto model = fit(parse_model_spec("logit", Task::classification), train);
    auto pred = predict(model, train);
    std::size_t right = 0;
    for (std::size_t i = 0; i < pred.labels.size(); ++i) right += pred.labels[i] == train.labels[i];
    CHECK(static_cast<double>(right) / static_cast<double>(pred.labels.size()) > 0.9);
    Matrix p = predict_proba(model, train.features);
    for (std::size_t i = 0; i < p.rows; ++i) CHECK(p.at(i, 0) + p.at(i, 1) == doctest::Approx(1.0));
}

TEST_CASE("encoder z-scores numerics and one-hot encodes categories") {
    auto train = testutil::csv("a,b,y\n0,red,1\n10,blue,2\n");
    auto test = testutil::csv("a,b,y\n,green,3\n5,red,\n");
    auto [tr, te] = encode(train, test, std::string("y"), Task::regression);
    REQUIRE(tr.features.cols == 3);
    CHECK(tr.encoder->feature_names == std::vector<std::string>{"a", "b=blue", "b=red"});
    CHECK(tr.features.at(0, 0) == doctest::Approx(-0.70710678));
    CHECK(tr.features.at(1, 0) == doctest::Approx(0.70710678));
    // Missing numeric takes the mean; unseen category is an all-zero block.
    REQUIRE(te.features.rows == 1);
    CHECK(te.dropped_rows == 1);
    CHECK(te.features.at(0, 0) == 0.0);
    CHECK(te.features.at(0, 1) == 0.0);
    CHECK(te.features.at(0, 2) == 0.0);
}

TEST_CASE("encoder drops constant columns and caps one-hot width") {
    std::string text = "k,c,y\n";
    for (int i = 0; i < 30; ++i) text += "7,v" + std::to_string(i) + "," + std::to_string(i) + "\n";
    text += "7,v0,1\n";
    auto ds = testutil::csv(text);
    auto [tr, te] = encode(ds, ds, std::string("y"), Task::regression);
    CHECK(tr.encoder->dropped_features == std::vector<std::string>{"k"});
    CHECK(tr.features.cols == kMaxOneHotCategories + 1);
    CHECK(tr.encoder->feature_names.front() == "c=v0");
    auto constant = testutil::csv("k,y\n1,1\n1,2\n");
    CHECK_THROWS_AS(encode(constant, constant, std::string("y"), Task::regression), DataError);
}

TEST_CASE("model specs parse and validate") {
    auto knn = parse_model_spec("knn:k=3", Task::classification);
    CHECK(knn.kind == ModelKind::knn_classifier);
    CHECK(knn.k == 3);
    CHECK(knn.name() == "knn:k=3");
    CHECK(parse_model_spec("dt", Task::regression).kind == ModelKind::tree_regressor);
    CHECK(parse_model_spec("kmeans", Task::clustering).k == 2);
    CHECK_THROWS_AS(parse_model_spec("ridge", Task::classification), InputError);
    CHECK_THROWS_AS(parse_model_spec("knn:k=0", Task::classification), InputError);
    CHECK_THROWS_AS(parse_model_spec("knn:q=1", Task::classification), InputError);
    CHECK_THROWS_AS(parse_model_spec("svm", Task::classification), InputError);
    CHECK_THROWS_AS(parse_task("ranking"), InputError);
}
