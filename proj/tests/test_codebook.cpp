#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "binspike/codebook.hpp"

using namespace binspike;

namespace {

double theta_of(std::uint64_t bits, const ArModel& model) {
    const std::vector<double> h = block_weights(model);
    const std::vector<double> v = codeword(bits, model);
    double s = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) s += h[i] * v[i];
    return s;
}

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("codeword materializes the bit pattern MSB-first", "[codebook]") {
    const ArModel model(0.5, 1.0, 2);
    CHECK(codeword(0, model) == std::vector<double>{0.0, 0.0});
    CHECK(codeword(3, model) == std::vector<double>{1.0, 1.0});
    CHECK(codeword(2, model) == std::vector<double>{1.0, 0.0});
    CHECK(codeword(7, ArModel(0.5, 2.5, 3)) == std::vector<double>{2.5, 2.5, 2.5});
    CHECK_THROWS_AS(codeword(4, model), parameter_error);
}

TEST_CASE("build_codebook sorts all block responses", "[codebook]") {
    SECTION("alpha=0.5, D=2") {
        const Codebook cb = build_codebook(ArModel(0.5, 1.0, 2));
        CHECK(cb.thetas == std::vector<double>{0.0, 0.5, 1.0, 1.5});
        CHECK(cb.perm == std::vector<std::uint64_t>{0, 2, 1, 3});
        CHECK(min_gap(cb) == Catch::Approx(0.5));
        CHECK(cb.collision_free);
    }
    SECTION("alpha=0.9, D=2") {
        const Codebook cb = build_codebook(ArModel(0.9, 1.0, 2));
        REQUIRE(cb.thetas.size() == 4);
        CHECK(cb.thetas[1] == Catch::Approx(0.9));
        CHECK(cb.thetas[2] == Catch::Approx(1.0));
        CHECK(cb.thetas[3] == Catch::Approx(1.9));
        CHECK(min_gap(cb) == Catch::Approx(0.1));
    }
    SECTION("D=1 has the two amplitudes") {
        const Codebook cb = build_codebook(ArModel(0.3, 2.0, 1));
        CHECK(cb.thetas == std::vector<double>{0.0, 2.0});
        CHECK(min_gap(cb) == Catch::Approx(2.0));
        CHECK(cb.collision_free);
    }
    SECTION("endpoints are 0 and the full response") {
        const Codebook cb = build_codebook(ArModel(0.7, 1.5, 6));
        CHECK(cb.thetas.front() == 0.0);
        double full = 0.0;
        for (double w : block_weights(cb.model)) full += w;
        CHECK(cb.thetas.back() == Catch::Approx(1.5 * full));
    }
    SECTION("memory guard") {
        CHECK_THROWS_AS(build_codebook(ArModel(0.5, 1.0, 30)), size_error);
        CHECK_NOTHROW(build_codebook(ArModel(0.5, 1.0, 25), 25));
    }
}

TEST_CASE("perm maps sorted values back to their codewords", "[codebook]") {
    for (double alpha : {0.3, 0.5, 0.9, 0.99}) {
        for (int d : {1, 3, 7, 10}) {
            const Codebook cb = build_codebook(ArModel(alpha, 1.0, d));
            for (std::size_t j = 0; j < cb.size(); ++j)
                REQUIRE(std::abs(theta_of(cb.perm[j], cb.model) - cb.thetas[j]) < 1e-12);
        }
    }
}

TEST_CASE("collision detection distinguishes good and bad filter values", "[codebook]") {
    SECTION("binary fractions are collision free") {
        for (int d : {2, 6, 12}) CHECK(is_collision_free(build_codebook(ArModel(0.5, 1.0, d))));
    }
    SECTION("root of x^2+x-1 collides at D=3") {
        const double alpha = (std::sqrt(5.0) - 1.0) / 2.0;
        const Codebook cb = build_codebook(ArModel(alpha, 1.0, 3));
        CHECK_FALSE(is_collision_free(cb));
        CHECK_THROWS_AS(min_gap(cb), degenerate_codebook_error);
        // the actual colliding pair: 110 and 001 both map to alpha^2+alpha = 1
        CHECK(std::abs(theta_of(0b110, cb.model) - theta_of(0b001, cb.model)) < 1e-15);
    }
    SECTION("D=1 never collides") {
        const double alpha = (std::sqrt(5.0) - 1.0) / 2.0;
        CHECK(is_collision_free(build_codebook(ArModel(alpha, 1.0, 1))));
    }
    SECTION("strict monotonicity when collision free (bijection)") {
        for (double alpha : {0.3, 0.5, 0.9}) {
            for (int d = 1; d <= 16; d += 3) {
                const Codebook cb = build_codebook(ArModel(alpha, 1.0, d));
                REQUIRE(cb.collision_free);
                for (std::size_t j = 1; j < cb.size(); ++j)
                    REQUIRE(cb.thetas[j] > cb.thetas[j - 1]);
            }
        }
    }
}

TEST_CASE("minimum gap equals alpha^(D-1) on (0, 0.5]", "[codebook]") {
    for (int i = 1; i <= 10; ++i) {
        const double alpha = 0.05 * i;
        for (int d = 1; d <= 12; ++d) {
            const Codebook cb = build_codebook(ArModel(alpha, 1.0, d));
            REQUIRE(min_gap(cb) == Catch::Approx(std::pow(alpha, d - 1)).margin(1e-12));
        }
    }
}

TEST_CASE("cluster statistics match exhaustive enumeration", "[codebook]") {
    SECTION("hand example alpha=0.9, D=2") {
        const ClusterStats st = cluster_stats(build_codebook(ArModel(0.9, 1.0, 2)));
        CHECK(st.theta_min[0] == 0.0);
        CHECK(st.theta_max[0] == 0.0);
        CHECK(st.theta_min[1] == Catch::Approx(0.9));
        CHECK(st.theta_max[1] == Catch::Approx(1.0));
        CHECK(st.theta_min[2] == Catch::Approx(1.9));
        CHECK(st.theta_max[2] == Catch::Approx(1.9));
        CHECK(st.clustered);
        REQUIRE(st.cluster_min_gap.has_value());
        CHECK(*st.cluster_min_gap == Catch::Approx(0.9));
    }
    SECTION("closed forms equal brute-force extrema for D <= 12") {
        for (double alpha : {0.2, 0.5, 0.75, 0.9, 0.97}) {
            for (int d : {1, 2, 5, 9, 12}) {
                const ArModel model(alpha, 1.3, d);
                const Codebook cb = build_codebook(model);
                const ClusterStats st = cluster_stats(cb);
                std::vector<double> lo(static_cast<std::size_t>(d) + 1, 1e300);
                std::vector<double> hi(static_cast<std::size_t>(d) + 1, -1e300);
                for (std::uint64_t k = 0; k < cb.size(); ++k) {
                    const auto ones = static_cast<std::size_t>(std::popcount(k));
                    const double t = theta_of(k, model);
                    lo[ones] = std::min(lo[ones], t);
                    hi[ones] = std::max(hi[ones], t);
                }
                for (std::size_t k = 0; k <= static_cast<std::size_t>(d); ++k) {
                    REQUIRE(st.theta_min[k] == Catch::Approx(lo[k]).margin(1e-12));
                    REQUIRE(st.theta_max[k] == Catch::Approx(hi[k]).margin(1e-12));
                }
            }
        }
    }
}

TEST_CASE("count-clustering predicate", "[codebook]") {
    SECTION("D=2 reduces to alpha^2 < alpha") {
        for (double alpha : {0.01, 0.3, 0.6, 0.99}) CHECK(in_f_d(alpha, 2));
    }
    SECTION("paper operating points at D=5") {
        CHECK(in_f_d(0.9, 5));
        CHECK_FALSE(in_f_d(0.5, 5));
    }
    SECTION("membership implies the clustering inequalities") {
        for (int d = 1; d <= 10; ++d) {
            for (int i = 1; i < 100; ++i) {
                const double alpha = i / 100.0;
                if (!in_f_d(alpha, d)) continue;
                const ClusterStats st = cluster_stats(build_codebook(ArModel(alpha, 1.0, d)));
                REQUIRE(st.clustered);
            }
        }
    }
}

TEST_CASE("codebook files round-trip bit-exactly", "[codebook]") {
    const ArModel model(0.8342, 1.75, 9);
    const Codebook cb = build_codebook(model);
    const auto path = temp_file("binspike_cb_roundtrip.bin");

    save_codebook(cb, path);
    const Codebook loaded = load_codebook(path);
    CHECK(loaded.model.alpha == cb.model.alpha);
    CHECK(loaded.model.amplitude == cb.model.amplitude);
    CHECK(loaded.model.decimation == cb.model.decimation);
    CHECK(loaded.thetas == cb.thetas);
    CHECK(loaded.perm == cb.perm);
    CHECK(loaded.min_adjacent_gap == cb.min_adjacent_gap);
    CHECK(loaded.collision_free == cb.collision_free);

    SECTION("model check on load") {
        CHECK_NOTHROW(load_codebook(path, model));
        CHECK_THROWS_AS(load_codebook(path, ArModel(0.5, 1.75, 9)), model_mismatch_error);
        CHECK_THROWS_AS(load_codebook(path, ArModel(0.8342, 1.75, 8)), model_mismatch_error);
    }
    SECTION("corrupt magic is rejected") {
        auto bad = temp_file("binspike_cb_badmagic.bin");
        std::filesystem::copy_file(path, bad, std::filesystem::copy_options::overwrite_existing);
        std::fstream f(bad, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("NOPE", 4);
        f.close();
        CHECK_THROWS_AS(load_codebook(bad), format_error);
        std::filesystem::remove(bad);
    }
    SECTION("truncation is rejected") {
        auto bad = temp_file("binspike_cb_trunc.bin");
        std::filesystem::copy_file(path, bad, std::filesystem::copy_options::overwrite_existing);
        std::filesystem::resize_file(bad, std::filesystem::file_size(bad) / 2);
        CHECK_THROWS_AS(load_codebook(bad), format_error);
        std::filesystem::remove(bad);
    }
    std::filesystem::remove(path);
}
