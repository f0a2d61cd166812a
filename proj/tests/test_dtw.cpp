#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "align/dtw.hpp"
#include "align/rng.hpp"
#include "test_util.hpp"

using namespace align;

namespace {

SimilarityMatrix make_matrix(const std::vector<double>& data, int n, int m) {
    SimilarityMatrix s;
    s.rows = n;
    s.cols = m;
    s.data = data;
    return s;
}

bool valid_path(const WarpPath& p, int n, int m) {
    if (p.steps.empty()) return false;
    if (p.steps.front() != std::pair<int, int>{0, 0}) return false;
    if (p.steps.back() != std::pair<int, int>{n - 1, m - 1}) return false;
    for (size_t k = 1; k < p.steps.size(); ++k) {
        int di = p.steps[k].first - p.steps[k - 1].first;
        int dj = p.steps[k].second - p.steps[k - 1].second;
        bool ok = (di == 1 && dj == 0) || (di == 0 && dj == 1) || (di == 1 && dj == 1);
        if (!ok) return false;
    }
    return true;
}

} // namespace

TEST_CASE("enumerate_paths counts follow the Delannoy recurrence") {
    CHECK(testutil::enumerate_paths(1, 1).size() == 1);
    CHECK(testutil::enumerate_paths(2, 2).size() == 3);
    CHECK(testutil::enumerate_paths(3, 3).size() == 13);
    // d(i,j) = d(i-1,j) + d(i,j-1) + d(i-1,j-1)
    int d[7][7];
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j)
            d[i][j] = (i == 0 || j == 0) ? 1 : d[i - 1][j] + d[i][j - 1] + d[i - 1][j - 1];
    CHECK(testutil::enumerate_paths(4, 5).size() == size_t(d[3][4]));
    CHECK(testutil::enumerate_paths(6, 6).size() == size_t(d[5][5]));
    CHECK_THROWS(testutil::enumerate_paths(7, 3));
}

TEST_CASE("dtw_exact on an identity cost matrix") {
    std::vector<double> m = {0, 1, 1, 1, 0, 1, 1, 1, 0};
    auto path = dtw_exact(make_matrix(m, 3, 3));
    CHECK(path.cost == 0.0);
    REQUIRE(path.steps.size() == 3);
    CHECK(path.steps[0] == std::pair<int, int>{0, 0});
    CHECK(path.steps[1] == std::pair<int, int>{1, 1});
    CHECK(path.steps[2] == std::pair<int, int>{2, 2});
}

TEST_CASE("dtw_exact on a single row visits every column") {
    std::vector<double> m = {1, 2, 3, 4};
    auto path = dtw_exact(make_matrix(m, 1, 4));
    CHECK(path.cost == doctest::Approx(10.0));
    CHECK(path.steps.size() == 4);
}

TEST_CASE("dtw_exact rejects empty matrices") {
    SimilarityMatrix empty;
    CHECK_THROWS(dtw_exact(empty));
}

TEST_CASE("dtw_exact equals brute force on random small matrices") {
    Rng rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> m(16);
        for (auto& v : m) v = double(rng.range(0, 2));
        auto path = dtw_exact(make_matrix(m, 4, 4));
        CHECK(valid_path(path, 4, 4));
        double brute = testutil::brute_force_cost(m, 4, 4);
        CHECK(std::fabs(path.cost - brute) < 1e-12);
        // cost really is the sum over the path cells
        double sum = 0.0;
        for (auto [i, j] : path.steps) sum += m[size_t(i) * 4 + j];
        CHECK(path.cost == doctest::Approx(sum));
    }
}

TEST_CASE("scaling all costs scales the optimum and keeps the path") {
    Rng rng(55);
    std::vector<double> m(25);
    for (auto& v : m) v = rng.uniform(0, 2);
    auto p1 = dtw_exact(make_matrix(m, 5, 5));
    std::vector<double> m2 = m;
    for (auto& v : m2) v *= 3.5;
    auto p2 = dtw_exact(make_matrix(m2, 5, 5));
    CHECK(p1.steps == p2.steps);
    CHECK(p2.cost == doctest::Approx(3.5 * p1.cost));
}

TEST_CASE("fastdtw: diagonal zero matrix gives the diagonal path at any radius") {
    int n = 64;
    std::vector<double> m(size_t(n) * n, 1.0);
    for (int i = 0; i < n; ++i) m[size_t(i) * n + i] = 0.0;
    for (int r : {0, 1, 10}) {
        auto path = fastdtw(make_matrix(m, n, n), r);
        CHECK(path.cost == 0.0);
        CHECK(valid_path(path, n, n));
    }
}

TEST_CASE("fastdtw never beats exact, matches it with a full window") {
    Rng rng(77);
    double excess_sum = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> m(64 * 64);
        for (auto& v : m) v = rng.uniform(0, 1);
        auto sm = make_matrix(m, 64, 64);
        auto exact = dtw_exact(sm);
        auto fast = fastdtw(sm, 10);
        CHECK(valid_path(fast, 64, 64));
        CHECK(fast.cost >= exact.cost - 1e-12);
        excess_sum += (fast.cost - exact.cost) / exact.cost;

        auto full = fastdtw(sm, 64);
        CHECK(std::fabs(full.cost - exact.cost) < 1e-9);
    }
    CHECK(excess_sum / 100.0 < 0.05);
}

TEST_CASE("fastdtw on non-square and degenerate shapes") {
    Rng rng(13);
    std::vector<double> m(48 * 96);
    for (auto& v : m) v = rng.uniform(0, 1);
    auto path = fastdtw(make_matrix(m, 48, 96), 5);
    CHECK(valid_path(path, 48, 96));

    std::vector<double> row(20, 0.5);
    auto p1 = fastdtw(make_matrix(row, 1, 20), 3);
    CHECK(valid_path(p1, 1, 20));
    CHECK(p1.cost == doctest::Approx(10.0));
}

TEST_CASE("path_to_timemap median rule and monotonicity") {
    WarpPath diag;
    for (int i = 0; i < 5; ++i) diag.steps.emplace_back(i, i);
    auto tm = path_to_timemap(diag, 512, 22050.0);
    for (int i = 0; i < 5; ++i) CHECK(tm[i] == doctest::Approx(i * 512.0 / 22050.0));

    WarpPath p;
    p.steps = {{0, 0}, {0, 1}, {0, 2}, {1, 2}};
    auto tm2 = path_to_timemap(p, 512, 22050.0);
    CHECK(tm2[0] == doctest::Approx(1 * 512.0 / 22050.0));  // median of {0,1,2}
    CHECK(tm2[1] == doctest::Approx(2 * 512.0 / 22050.0));

    Rng rng(5);
    std::vector<double> m(32 * 32);
    for (auto& v : m) v = rng.uniform(0, 1);
    auto rp = dtw_exact(make_matrix(m, 32, 32));
    auto tm3 = path_to_timemap(rp, 512, 22050.0);
    for (size_t i = 1; i < tm3.size(); ++i) CHECK(tm3[i] >= tm3[i - 1]);
}

TEST_CASE("path csv export") {
    WarpPath p;
    p.steps = {{0, 0}, {1, 1}};
    auto csv = path_to_csv(p);
    CHECK(csv == "score_frame,perf_frame\n0,0\n1,1\n");
}
