#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "binspike/analysis.hpp"
#include "binspike/decoder.hpp"
#include "binspike/rng.hpp"

using namespace binspike;

TEST_CASE("q_function", "[analysis]") {
    CHECK(q_function(0.0) == Catch::Approx(0.5));
    for (double x : {0.1, 0.7, 1.3, 2.9}) CHECK(q_function(x) + q_function(-x) == Catch::Approx(1.0).margin(1e-7));
    CHECK(q_function(1.6449) == Catch::Approx(0.05).margin(1e-4));
    CHECK(q_function(8.0) < 1e-14);
}

TEST_CASE("noise budgets", "[analysis]") {
    SECTION("alpha=0.9, D=2") {
        const NoiseBudget b = noise_budget(build_codebook(ArModel(0.9, 1.0, 2)), 0.1);
        CHECK(b.exact_recovery_bound == Catch::Approx(0.025));
        REQUIRE(b.count_recovery_bound.has_value());
        CHECK(*b.count_recovery_bound == Catch::Approx(0.225));
        CHECK(b.sigma1_sq == Catch::Approx((1.0 + std::pow(0.9, 4)) * 0.01));
    }
    SECTION("count bound absent outside the clustering region") {
        const NoiseBudget b = noise_budget(build_codebook(ArModel(0.5, 1.0, 5)), 0.1);
        CHECK_FALSE(b.count_recovery_bound.has_value());
    }
    SECTION("sigma=0 gives zero differenced variance") {
        CHECK(noise_budget(build_codebook(ArModel(0.9, 1.0, 2)), 0.0).sigma1_sq == 0.0);
    }
    SECTION("count bound never undercuts the exact bound") {
        for (double alpha : {0.7, 0.8, 0.9, 0.95}) {
            for (int d = 1; d <= 10; ++d) {
                const NoiseBudget b = noise_budget(build_codebook(ArModel(alpha, 1.0, d)), 0.05);
                if (b.count_recovery_bound)
                    REQUIRE(*b.count_recovery_bound >= b.exact_recovery_bound - 1e-15);
            }
        }
    }
    SECTION("collisions are rejected") {
        const Codebook bad = build_codebook(ArModel((std::sqrt(5.0) - 1.0) / 2.0, 1.0, 3));
        CHECK_THROWS_AS(noise_budget(bad, 0.1), degenerate_codebook_error);
    }
}

TEST_CASE("snr condition", "[analysis]") {
    const Codebook cb = build_codebook(ArModel(0.5, 1.0, 2));  // min gap 0.5
    CHECK(snr_condition(cb, 0.05, 100, 0.01));                 // 100 >= 39.61
    CHECK_FALSE(snr_condition(cb, 10.0, 100, 0.01));
    CHECK_THROWS_AS(snr_condition(cb, 0.0, 100, 0.01), parameter_error);
    CHECK_THROWS_AS(snr_condition(cb, 0.05, 100, 1.5), parameter_error);
}

TEST_CASE("whole-train error bound", "[analysis]") {
    SECTION("plug-in value") {
        const Codebook cb = build_codebook(ArModel(0.5, 1.0, 2));
        CHECK(error_bound(cb, 0.05, 100) == Catch::Approx(1.2087e-8).epsilon(1e-3));
    }
    SECTION("vanishes as sigma shrinks") {
        const Codebook cb = build_codebook(ArModel(0.5, 1.0, 2));
        CHECK(error_bound(cb, 1e-4, 100) < 1e-300);
    }
    SECTION("capped at one") {
        const Codebook cb = build_codebook(ArModel(0.9, 1.0, 8));
        CHECK(error_bound(cb, 5.0, 1000) == 1.0);
    }
}

TEST_CASE("exact per-block error probability", "[analysis]") {
    SECTION("D=1 reduces to a two-point constellation") {
        const Codebook cb = build_codebook(ArModel(0.6, 1.0, 1));
        const double s1 = std::sqrt(differenced_noise_variance(cb.model, 0.2));
        for (double p : {0.2, 0.5, 0.8})
            CHECK(block_error_prob(cb, 0.2, p) == Catch::Approx(q_function(1.0 / (2.0 * s1))));
    }
    SECTION("vanishes as sigma shrinks") {
        const Codebook cb = build_codebook(ArModel(0.9, 1.0, 3));
        CHECK(block_error_prob(cb, 1e-5, 0.35) < 1e-12);
    }
    SECTION("guard") {
        CHECK_THROWS_AS(block_error_prob(build_codebook(ArModel(0.5, 1.0, 22), 24), 0.1, 0.5),
                        size_error);
    }
    SECTION("matches Monte Carlo per-block error frequency") {
        const ArModel model(0.9, 1.0, 3);
        const Codebook cb = build_codebook(model);
        const double sigma = 0.02, p = 0.35;
        const double pe = block_error_prob(cb, sigma, p);

        Rng rng(314159);
        const std::size_t trials = 20000;
        std::size_t errors = 0;
        const std::vector<double> h = block_weights(model);
        const double ad = std::pow(model.alpha, model.decimation);
        for (std::size_t t = 0; t < trials; ++t) {
            std::uint64_t bits = 0;
            for (int i = 0; i < model.decimation; ++i) bits = (bits << 1) | (rng.bernoulli(p) ? 1 : 0);
            double c = 0.0;
            for (int i = 0; i < model.decimation; ++i)
                if ((bits >> (model.decimation - 1 - i)) & 1u) c += h[static_cast<std::size_t>(i)];
            const double e = rng.gaussian(sigma) - ad * rng.gaussian(sigma);
            const std::size_t j = detail::nearest_index(cb.thetas, c + e);
            if (cb.perm[j] != bits) ++errors;
        }
        const double emp = static_cast<double>(errors) / static_cast<double>(trials);
        const double se = std::sqrt(pe * (1.0 - pe) / static_cast<double>(trials));
        CHECK(std::abs(emp - pe) <= 3.0 * se);
    }
}

TEST_CASE("bound properties at safe operating points", "[analysis]") {
    // Union-bound slack: 1 - (1 - pe)^(M-1) <= bound whenever bound < 1.
    // The spiking rate matters: once the closed-form bound is nontrivial it
    // only dominates at low p, so these points pin p = 0.1.
    for (double alpha : {0.5, 0.9}) {
        for (int d = 2; d <= 8; ++d) {
            const Codebook cb = build_codebook(ArModel(alpha, 1.0, d));
            const std::size_t m = 99 / static_cast<std::size_t>(d) + 1;
            const double sigma = sigma_for_bound(cb, m, 0.5);
            const double bound = error_bound(cb, sigma, m);
            REQUIRE(bound == Catch::Approx(0.5).margin(1e-9));
            const double pe = block_error_prob(cb, sigma, 0.1);
            const double train_err = 1.0 - std::pow(1.0 - pe, static_cast<double>(m - 1));
            REQUIRE(train_err <= bound + 1e-12);
        }
    }
}
