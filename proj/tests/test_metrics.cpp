#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "binspike/metrics.hpp"
#include "binspike/rng.hpp"

using namespace binspike;

TEST_CASE("tolerance-window matching", "[metrics]") {
    SECTION("single feasible pair") {
        const std::vector<std::size_t> truth{10, 20}, est{11, 40};
        const MatchResult r = match_spikes(truth, est, 2);
        CHECK(r.true_positives == 1);
        CHECK(r.precision == Catch::Approx(0.5));
        CHECK(r.recall == Catch::Approx(0.5));
        CHECK(r.f_score == Catch::Approx(0.5));
        REQUIRE(r.pairs.size() == 1);
        CHECK(r.pairs[0] == std::pair<std::size_t, std::size_t>{10, 11});
    }
    SECTION("perfect recovery at t0=0") {
        const std::vector<std::size_t> s{3, 7, 9};
        const MatchResult r = match_spikes(s, s, 0);
        CHECK(r.f_score == 1.0);
        CHECK(r.true_positives == 3);
    }
    SECTION("empty estimate") {
        const std::vector<std::size_t> truth{1, 2};
        const MatchResult r = match_spikes(truth, {}, 2);
        CHECK(r.precision == 0.0);
        CHECK(r.recall == 0.0);
        CHECK(r.f_score == 0.0);
    }
    SECTION("empty truth with estimates") {
        const std::vector<std::size_t> est{1, 2};
        CHECK(match_spikes({}, est, 2).f_score == 0.0);
    }
    SECTION("both empty counts as perfect") {
        const MatchResult r = match_spikes({}, {}, 2);
        CHECK(r.f_score == 1.0);
        CHECK(r.precision == 1.0);
        CHECK(r.recall == 1.0);
    }
    SECTION("matching is one-to-one") {
        // two estimates near one truth: only one may match
        const std::vector<std::size_t> truth{10}, est{9, 11};
        const MatchResult r = match_spikes(truth, est, 2);
        CHECK(r.true_positives == 1);
        CHECK(r.precision == Catch::Approx(0.5));
        CHECK(r.recall == 1.0);
    }
    SECTION("F=1 exactly when everything pairs") {
        Rng rng(8);
        for (int t = 0; t < 50; ++t) {
            std::vector<std::size_t> truth, est;
            for (std::size_t i = 0; i < 60; ++i)
                if (rng.bernoulli(0.3)) truth.push_back(i);
            for (std::size_t i = 0; i < 60; ++i)
                if (rng.bernoulli(0.3)) est.push_back(i);
            const MatchResult r = match_spikes(truth, est, 1);
            const bool all_paired =
                r.true_positives == truth.size() && r.true_positives == est.size();
            REQUIRE((r.f_score == 1.0) == all_paired);
        }
    }
    SECTION("enlarging the window never loses matches") {
        Rng rng(9);
        for (int t = 0; t < 50; ++t) {
            std::vector<std::size_t> truth, est;
            for (std::size_t i = 0; i < 80; ++i) {
                if (rng.bernoulli(0.25)) truth.push_back(i);
                if (rng.bernoulli(0.25)) est.push_back(i);
            }
            std::size_t prev = 0;
            for (std::size_t t0 = 0; t0 <= 6; ++t0) {
                const MatchResult r = match_spikes(truth, est, t0);
                REQUIRE(r.true_positives >= prev);
                prev = r.true_positives;
            }
        }
    }
}

TEST_CASE("count error", "[metrics]") {
    CHECK(count_error(std::vector<int>{1, 1, 0}, std::vector<int>{1, 1, 0}) == 0);
    CHECK(count_error(std::vector<int>{1, 1, 0}, std::vector<int>{1, 0, 1}) == 2);
    CHECK(count_error(std::vector<int>{}, std::vector<int>{}) == 0);
    CHECK_THROWS_AS(count_error(std::vector<int>{1}, std::vector<int>{1, 2}), shape_error);
}

TEST_CASE("spike index extraction", "[metrics]") {
    SpikeTrain t;
    t.values = {0, 2, 0, 2, 0};
    CHECK(spike_indices(t) == std::vector<std::size_t>{1, 3});
    const std::vector<double> relaxed{0.1, 1.6, 0.9, 2.0};
    CHECK(spike_indices(relaxed, 1.0) == std::vector<std::size_t>{1, 3});
}
