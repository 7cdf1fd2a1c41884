#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace binspike {

/// Base class for all errors thrown by this library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter is outside its documented domain (alpha, p, sigma, index, ...).
class parameter_error : public error {
public:
    using error::error;
};

/// Sequence lengths are inconsistent with each other or with the model.
class shape_error : public error {
public:
    using error::error;
};

/// A size guard (memory or compute) was exceeded.
class size_error : public error {
public:
    using error::error;
};

/// A persisted file is malformed (bad magic, version, truncation).
class format_error : public error {
public:
    using error::error;
};

/// A loaded artifact does not match the requested model.
class model_mismatch_error : public error {
public:
    using error::error;
};

/// The codebook has colliding entries; the requested quantity is undefined.
class degenerate_codebook_error : public error {
public:
    using error::error;
};

/// Exact decoding found no codebook entry within tolerance. Carries the
/// offending block index when raised during train decoding.
class not_in_codebook_error : public error {
public:
    explicit not_in_codebook_error(const std::string& msg) : error(msg) {}
    not_in_codebook_error(const std::string& msg, std::size_t block)
        : error(msg), block_(block), has_block_(true) {}

    bool has_block() const { return has_block_; }
    std::size_t block() const { return block_; }

private:
    std::size_t block_ = 0;
    bool has_block_ = false;
};

/// The construction does not apply to the given input (documented exclusions).
class not_applicable_error : public error {
public:
    using error::error;
};

/// The measurement sequence admits no feasible point for the program.
class infeasibility_error : public error {
public:
    using error::error;
};

/// An iterative solver did not reach its tolerance within the iteration cap.
class convergence_error : public error {
public:
    convergence_error(const std::string& msg, std::size_t iterations, double last_change)
        : error(msg), iterations_(iterations), last_change_(last_change) {}

    std::size_t iterations() const { return iterations_; }
    double last_change() const { return last_change_; }

private:
    std::size_t iterations_;
    double last_change_;
};

/// Amplitude estimation ended with an empty survivor set.
class estimation_error : public error {
public:
    using error::error;
};

/// The chosen amplitude pivot is below the declared noise floor.
class pivot_error : public error {
public:
    using error::error;
};

/// Invalid experiment/sweep configuration.
class config_error : public error {
public:
    using error::error;
};

}  // namespace binspike
