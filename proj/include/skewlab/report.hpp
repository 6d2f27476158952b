#pragma once

// Machine-readable experiment reports: a versioned JSON summary envelope
// (verdicts, tolerances, seeds, timings, config hash) plus CSV data tables
// with locale-independent, bit-stable formatting.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace skewlab {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kReportSchemaVersion = "skewlab-report/1";

// Shortest round-trip decimal formatting (%.17g) so reruns are byte-identical.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// 64-bit FNV-1a hex digest of the canonical config dump; embedded in
// reports so runs can be matched to their exact configuration.
inline std::string config_hash(const nlohmann::json& config) {
    const std::string s = config.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline nlohmann::json report_envelope(const std::string& command,
                                      const nlohmann::json& config) {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = command;
    j["config"] = config;
    j["config_hash"] = config_hash(config);
    return j;
}

inline void write_json_report(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("failed writing " + path);
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<std::string> cells) {
        if (cells.size() != header_.size())
            throw std::invalid_argument("CsvTable: row width mismatch");
        rows_.push_back(std::move(cells));
    }

    std::string str() const {
        std::string s = join_(header_);
        for (const auto& r : rows_) s += join_(r);
        return s;
    }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open " + path + " for writing");
        out << str();
        if (!out) throw IoError("failed writing " + path);
    }

private:
    static std::string join_(const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) line += ",";
            line += cells[i];
        }
        line += "\n";
        return line;
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace skewlab
