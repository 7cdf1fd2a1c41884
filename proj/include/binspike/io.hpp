#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "binspike/decoder.hpp"
#include "binspike/errors.hpp"
#include "binspike/model.hpp"

namespace binspike {

/// Shortest decimal form that round-trips a double.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Writes a value series as CSV with header `n,value`.
inline void write_series_csv(const std::filesystem::path& path, std::span<const double> values) {
    std::ofstream os(path);
    if (!os) throw format_error("cannot open for writing: " + path.string());
    os << "n,value\n";
    for (std::size_t n = 0; n < values.size(); ++n)
        os << n << ',' << format_double(values[n]) << '\n';
    if (!os) throw format_error("short write: " + path.string());
}

inline std::vector<double> read_series_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw format_error("cannot open: " + path.string());
    std::string line;
    if (!std::getline(is, line) || line.rfind("n,value", 0) != 0)
        throw format_error("expected `n,value` header in " + path.string());
    std::vector<double> values;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw format_error("malformed row in " + path.string() + ": " + line);
        std::size_t n = 0;
        try {
            n = std::stoull(line.substr(0, comma));
            values.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw format_error("malformed row in " + path.string() + ": " + line);
        }
        if (n != row)
            throw format_error("non-contiguous sample index in " + path.string());
        ++row;
    }
    return values;
}

inline void write_trace_csv(const std::filesystem::path& path, const Trace& trace) {
    write_series_csv(path, trace.values);
}

inline void write_train_csv(const std::filesystem::path& path, const SpikeTrain& train) {
    write_series_csv(path, train.values);
}

/// Model metadata stored next to simulated traces.
struct ModelSidecar {
    ArModel model;
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".json");
    return p;
}

inline void write_model_sidecar(const std::filesystem::path& path, const ModelSidecar& meta) {
    nlohmann::json j{{"alpha", meta.model.alpha},
                     {"amplitude", meta.model.amplitude},
                     {"decimation", meta.model.decimation},
                     {"sigma", meta.sigma},
                     {"seed", meta.seed}};
    std::ofstream os(path);
    if (!os) throw format_error("cannot open for writing: " + path.string());
    os << j.dump(2) << '\n';
}

inline ModelSidecar read_model_sidecar(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw format_error("cannot open: " + path.string());
    nlohmann::json j;
    try {
        is >> j;
        return ModelSidecar{ArModel(j.at("alpha").get<double>(), j.at("amplitude").get<double>(),
                                    j.at("decimation").get<int>()),
                            j.value("sigma", 0.0), j.value("seed", std::uint64_t{0})};
    } catch (const nlohmann::json::exception& e) {
        throw format_error("malformed model sidecar " + path.string() + ": " + e.what());
    }
}

inline nlohmann::json report_to_json(const DecodeReport& report) {
    return nlohmann::json{{"counts", report.counts},
                          {"residuals", report.residuals},
                          {"amplitude", report.amplitude_used}};
}

}  // namespace binspike
