#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "binspike/errors.hpp"
#include "binspike/model.hpp"

namespace binspike {

/// Block measurement weights [alpha^(D-1), ..., alpha, 1].
inline std::vector<double> block_weights(const ArModel& model) {
    std::vector<double> h(static_cast<std::size_t>(model.decimation));
    double w = 1.0;
    for (std::size_t i = h.size(); i-- > 0;) {
        h[i] = w;
        w *= model.alpha;
    }
    return h;
}

/// Materializes codeword k as a length-D block. Bit convention: the most
/// significant of the D bits is the earliest slot of the block, so slot d
/// carries A * b_d(k) with b_1 the MSB.
inline std::vector<double> codeword(std::uint64_t k, const ArModel& model) {
    const int d = model.decimation;
    if (d >= 64 || k >= (std::uint64_t{1} << d))
        throw parameter_error("codeword index out of range for this decimation factor");
    std::vector<double> v(static_cast<std::size_t>(d), 0.0);
    for (int slot = 1; slot <= d; ++slot)
        if ((k >> (d - slot)) & 1u) v[static_cast<std::size_t>(slot - 1)] = model.amplitude;
    return v;
}

/// Sorted block-measurement codebook. thetas holds the 2^D values
/// A * h_alpha . v in ascending order; perm[j] is the packed codeword whose
/// value landed at sorted position j (same bit convention as codeword()).
/// Ties keep index order and clear collision_free instead of aborting.
struct Codebook {
    ArModel model;
    std::vector<double> thetas;
    std::vector<std::uint64_t> perm;
    double min_adjacent_gap = 0.0;
    bool collision_free = false;

    std::size_t size() const { return thetas.size(); }
    double max_theta() const { return thetas.back(); }

    /// Adjacent entries closer than this are treated as collisions.
    double collision_tolerance() const { return 1e-10 * (1.0 + thetas.back()); }
};

inline Codebook build_codebook(const ArModel& model, int max_decimation = 24) {
    if (model.decimation > max_decimation)
        throw size_error("codebook guarded to D <= " + std::to_string(max_decimation) +
                         " (2^D entries); raise the guard explicitly to go larger");
    const int d = model.decimation;
    const std::size_t n = std::size_t{1} << d;

    Codebook cb{model, std::vector<double>(n), std::vector<std::uint64_t>(n)};
    // Bit j (LSB = 0) is slot D-j and carries weight A*alpha^j; doubling
    // fills all 2^D sums in one pass.
    cb.thetas[0] = 0.0;
    double w = model.amplitude;
    for (int j = 0; j < d; ++j) {
        const std::size_t half = std::size_t{1} << j;
        for (std::size_t k = 0; k < half; ++k) cb.thetas[half + k] = cb.thetas[k] + w;
        w *= model.alpha;
    }

    std::iota(cb.perm.begin(), cb.perm.end(), std::uint64_t{0});
    std::stable_sort(cb.perm.begin(), cb.perm.end(),
                     [&](std::uint64_t a, std::uint64_t b) { return cb.thetas[a] < cb.thetas[b]; });
    std::vector<double> sorted(n);
    for (std::size_t j = 0; j < n; ++j) sorted[j] = cb.thetas[cb.perm[j]];
    cb.thetas = std::move(sorted);

    cb.min_adjacent_gap = n > 1 ? cb.thetas.back() : 0.0;
    for (std::size_t j = 1; j < n; ++j)
        cb.min_adjacent_gap = std::min(cb.min_adjacent_gap, cb.thetas[j] - cb.thetas[j - 1]);
    cb.collision_free = cb.min_adjacent_gap > cb.collision_tolerance();
    return cb;
}

inline bool is_collision_free(const Codebook& cb) { return cb.collision_free; }

/// Minimum adjacent distance of the sorted codebook. Undefined (throws)
/// when the codebook has collisions.
inline double min_gap(const Codebook& cb) {
    if (!cb.collision_free)
        throw degenerate_codebook_error("codebook has colliding entries; minimum gap is degenerate");
    return cb.min_adjacent_gap;
}

/// Per-count extrema of the codebook values and the clustering structure
/// they induce. theta_min[k]/theta_max[k] bound the values of all patterns
/// with exactly k spikes; when consecutive count ranges do not overlap the
/// codebook is `clustered` and cluster_min_gap is the smallest separation
/// between consecutive count clusters.
struct ClusterStats {
    std::vector<double> theta_min;
    std::vector<double> theta_max;
    bool clustered = false;
    std::optional<double> cluster_min_gap;
};

inline ClusterStats cluster_stats(const Codebook& cb) {
    const int d = cb.model.decimation;
    const double a = cb.model.alpha;
    const double amp = cb.model.amplitude;

    // Closed forms: the maximum over k-spike patterns packs the spikes into
    // the last k slots, the minimum into the first k slots.
    std::vector<double> pow_a(static_cast<std::size_t>(d) + 1);
    pow_a[0] = 1.0;
    for (int j = 1; j <= d; ++j) pow_a[static_cast<std::size_t>(j)] = pow_a[static_cast<std::size_t>(j - 1)] * a;

    ClusterStats st;
    st.theta_min.resize(static_cast<std::size_t>(d) + 1, 0.0);
    st.theta_max.resize(static_cast<std::size_t>(d) + 1, 0.0);
    for (int k = 1; k <= d; ++k) {
        double lo = 0.0, hi = 0.0;
        for (int j = d - k; j <= d - 1; ++j) lo += pow_a[static_cast<std::size_t>(j)];
        for (int j = 0; j <= k - 1; ++j) hi += pow_a[static_cast<std::size_t>(j)];
        st.theta_min[static_cast<std::size_t>(k)] = amp * lo;
        st.theta_max[static_cast<std::size_t>(k)] = amp * hi;
    }

    st.clustered = true;
    for (int k = 0; k < d; ++k)
        if (!(st.theta_min[static_cast<std::size_t>(k + 1)] > st.theta_max[static_cast<std::size_t>(k)])) {
            st.clustered = false;
            break;
        }
    if (st.clustered) {
        double g = st.theta_min[1] - st.theta_max[0];
        for (int k = 1; k < d; ++k)
            g = std::min(g, st.theta_min[static_cast<std::size_t>(k + 1)] -
                                st.theta_max[static_cast<std::size_t>(k)]);
        st.cluster_min_gap = g;
    }
    return st;
}

/// Membership in the count-clustering region: with k0 = floor(D/2), tests
/// alpha^D - alpha^(D-k0-1) - alpha^k0 + 1 < 0.
inline bool in_f_d(double alpha, int decimation) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw parameter_error("filter parameter alpha must lie in (0,1)");
    if (decimation < 1) throw parameter_error("decimation factor must be >= 1");
    const int k0 = decimation / 2;
    const double v = std::pow(alpha, decimation) - std::pow(alpha, decimation - k0 - 1) -
                     std::pow(alpha, k0) + 1.0;
    return v < 0.0;
}

namespace detail {

inline void put_u16(std::ostream& os, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline bool get_u16(std::istream& is, std::uint16_t& v) {
    unsigned char b[2];
    if (!is.read(reinterpret_cast<char*>(b), 2)) return false;
    v = static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    return true;
}

inline bool get_u32(std::istream& is, std::uint32_t& v) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
    v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return true;
}

inline bool get_u64(std::istream& is, std::uint64_t& v) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) return false;
    v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return true;
}

inline bool get_f64(std::istream& is, double& v) {
    std::uint64_t u;
    if (!get_u64(is, u)) return false;
    v = std::bit_cast<double>(u);
    return true;
}

}  // namespace detail

inline constexpr char codebook_magic[4] = {'B', 'S', 'R', 'C'};
inline constexpr std::uint16_t codebook_version = 1;

/// File layout: magic "BSRC", version u16, alpha f64, amplitude f64, D u32,
/// then 2^D thetas (f64) and 2^D perm entries (u64), all little-endian.
inline void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw format_error("cannot open codebook file for writing: " + path.string());
    os.write(codebook_magic, 4);
    detail::put_u16(os, codebook_version);
    detail::put_f64(os, cb.model.alpha);
    detail::put_f64(os, cb.model.amplitude);
    detail::put_u32(os, static_cast<std::uint32_t>(cb.model.decimation));
    for (double t : cb.thetas) detail::put_f64(os, t);
    for (std::uint64_t p : cb.perm) detail::put_u64(os, p);
    if (!os) throw format_error("short write while saving codebook: " + path.string());
}

inline Codebook load_codebook(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw format_error("cannot open codebook file: " + path.string());
    char magic[4];
    if (!is.read(magic, 4) || !std::equal(magic, magic + 4, codebook_magic))
        throw format_error("bad codebook magic: " + path.string());
    std::uint16_t version;
    if (!detail::get_u16(is, version) || version != codebook_version)
        throw format_error("unsupported codebook version: " + path.string());
    double alpha, amplitude;
    std::uint32_t d;
    if (!detail::get_f64(is, alpha) || !detail::get_f64(is, amplitude) || !detail::get_u32(is, d))
        throw format_error("truncated codebook header: " + path.string());
    if (d == 0 || d > 63) throw format_error("implausible decimation in codebook header");

    Codebook cb{ArModel(alpha, amplitude, static_cast<int>(d)),
                std::vector<double>(std::size_t{1} << d),
                std::vector<std::uint64_t>(std::size_t{1} << d)};
    for (double& t : cb.thetas)
        if (!detail::get_f64(is, t)) throw format_error("truncated codebook values");
    for (std::uint64_t& p : cb.perm)
        if (!detail::get_u64(is, p)) throw format_error("truncated codebook permutation");

    const std::size_t n = cb.size();
    cb.min_adjacent_gap = n > 1 ? cb.thetas.back() : 0.0;
    for (std::size_t j = 1; j < n; ++j) {
        if (cb.thetas[j] < cb.thetas[j - 1])
            throw format_error("codebook values are not sorted; file is corrupt");
        cb.min_adjacent_gap = std::min(cb.min_adjacent_gap, cb.thetas[j] - cb.thetas[j - 1]);
    }
    std::vector<bool> seen(n, false);
    for (std::uint64_t p : cb.perm) {
        if (p >= n || seen[p]) throw format_error("codebook permutation is not a permutation");
        seen[p] = true;
    }
    cb.collision_free = cb.min_adjacent_gap > cb.collision_tolerance();
    return cb;
}

inline Codebook load_codebook(const std::filesystem::path& path, const ArModel& expected) {
    Codebook cb = load_codebook(path);
    if (!cb.model.same_system(expected))
        throw model_mismatch_error("codebook at " + path.string() +
                                   " was built for a different model");
    return cb;
}

}  // namespace binspike
