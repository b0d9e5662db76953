#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "tfs/errors.hpp"
#include "tfs/metrics.hpp"

using namespace tfs;
using namespace tfs::metrics;

TEST_CASE("confusion counts") {
    SUBCASE("all correct") {
        std::vector<Label> y{0, 1, 2, 1, 1};
        auto c = confusion(y, y, 1);
        CHECK(c.fp == 0);
        CHECK(c.fn == 0);
        CHECK(c.tp == 3);
        CHECK(c.tn == 2);
    }
    SUBCASE("always predicting theta when it never occurs") {
        std::vector<Label> pred(6, 2), truth{0, 1, 0, 1, 0, 1};
        auto c = confusion(pred, truth, 2);
        CHECK(c.tp == 0);
        CHECK(c.fp == 6);
        CHECK(c.fp_rate() == 1.0);
        CHECK(c.fn_rate() == 0.0);
    }
    SUBCASE("8-row hand tally, theta = 1") {
        //                     tp tn fp fn tp tn fn tn
        std::vector<Label> truth{1, 0, 2, 1, 1, 2, 1, 0};
        std::vector<Label> pred{1, 0, 1, 0, 1, 0, 2, 2};
        ConfusionCounts expected{2, 1, 3, 2};
        auto c = confusion(pred, truth, 1);
        CHECK(c == expected);
        CHECK(c.total() == 8);
        CHECK(c.fp_rate() == doctest::Approx(1.0 / 4.0));
        CHECK(c.fn_rate() == doctest::Approx(2.0 / 4.0));
    }
    SUBCASE("length mismatch") {
        std::vector<Label> a{1, 0}, b{1};
        CHECK_THROWS_AS(confusion(a, b, 1), ContractViolation);
    }
}

TEST_CASE("confusion counts are invariant under a joint permutation") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Label> pred(40), truth(40);
        for (std::size_t i = 0; i < 40; ++i) {
            pred[i] = static_cast<Label>(rng() % 3);
            truth[i] = static_cast<Label>(rng() % 3);
        }
        auto base = confusion(pred, truth, 0);
        CHECK(base.total() == 40);
        std::vector<std::size_t> perm(40);
        for (std::size_t i = 0; i < 40; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<Label> p2(40), t2(40);
        for (std::size_t i = 0; i < 40; ++i) {
            p2[i] = pred[perm[i]];
            t2[i] = truth[perm[i]];
        }
        CHECK(confusion(p2, t2, 0) == base);
    }
}

TEST_CASE("f1") {
    CHECK(f1({7, 0, 3, 0}) == 1.0);
    CHECK(f1({0, 0, 5, 0}) == 0.0);
    CHECK(f1({0, 2, 5, 3}) == 0.0);
    CHECK(f1({3, 1, 0, 2}) == doctest::Approx(6.0 / 9.0).epsilon(1e-15));

    // Harmonic mean of precision and recall whenever both are defined.
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        ConfusionCounts c{1 + rng() % 50, rng() % 50, rng() % 50, rng() % 50};
        const double precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
        const double recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
        const double value = f1(c);
        CHECK(value >= 0.0);
        CHECK(value <= 1.0);
        CHECK(value == doctest::Approx(2.0 * precision * recall / (precision + recall)).epsilon(1e-12));
    }
}

namespace {

Evaluation make_eval(std::size_t k, double conf, double var, double fp, double fn, double f) {
    Evaluation e;
    e.feature_count = k;
    e.confidence.confidence_theta = conf;
    e.confidence.variance = var;
    e.fp_rate = fp;
    e.fn_rate = fn;
    e.f1 = f;
    return e;
}

}  // namespace

TEST_CASE("assemble_trend") {
    SUBCASE("single round") {
        std::vector<Evaluation> h{make_eval(1, 0.5, 0.01, 0.1, 0.2, 0.7)};
        auto t = assemble_trend(h);
        CHECK(t.size() == 1);
        CHECK(t.confidence.size() == 1);
        CHECK(t.f1 == std::vector<double>{0.7});
    }
    SUBCASE("arrays follow history order and survive a CSV round trip") {
        std::vector<Evaluation> h;
        for (std::size_t k = 1; k <= 6; ++k)
            h.push_back(make_eval(k, 0.1 * static_cast<double>(k), 1.0 / 3.0 / static_cast<double>(k),
                                  0.3 / static_cast<double>(k), 0.05 * static_cast<double>(k), 0.123456789 * static_cast<double>(k)));
        auto t = assemble_trend(h);
        REQUIRE(t.size() == 6);
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK(t.features[i] == i + 1);
            CHECK(t.confidence[i] == h[i].confidence.confidence_theta);
            CHECK(t.confidence_var[i] == h[i].confidence.variance);
            CHECK(t.fp_rate[i] == h[i].fp_rate);
            CHECK(t.fn_rate[i] == h[i].fn_rate);
            CHECK(t.f1[i] == h[i].f1);
        }
        std::stringstream buf;
        write_trend_csv(t, buf);
        CHECK(buf.str().rfind("features,confidence,confidence_var,fp_rate,fn_rate,f1\n", 0) == 0);
        auto back = read_trend_csv(buf);
        CHECK(back == t);
    }
}

TEST_CASE("read_trend_csv rejects malformed input") {
    std::stringstream wrong_header("a,b\n1,2\n");
    CHECK_THROWS_AS(read_trend_csv(wrong_header), DataError);
    std::stringstream bad_cell("features,confidence,confidence_var,fp_rate,fn_rate,f1\n1,x,0,0,0,0\n");
    CHECK_THROWS_AS(read_trend_csv(bad_cell), DataError);
    std::stringstream short_row("features,confidence,confidence_var,fp_rate,fn_rate,f1\n1,0.5\n");
    CHECK_THROWS_AS(read_trend_csv(short_row), DataError);
}

TEST_CASE("read_trend_csv rejects a non-integer feature count") {
    std::stringstream in("features,confidence,confidence_var,fp_rate,fn_rate,f1\nfive,0,0,0,0,0\n");
    CHECK_THROWS_AS(read_trend_csv(in), DataError);
}
