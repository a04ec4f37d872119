#pragma once
// CSV report tables and JSON run manifests for the command-line tools.
// Every run writes one CSV with the measured rows and one manifest recording
// how to reproduce it; the manifest carries an FNV digest of the CSV text,
// so two runs compare bitwise without diffing whole files.

#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "heislab/util.hpp"
#include "heislab/version.hpp"

namespace heislab {

// shortest decimal form that round-trips, so digests are host independent
inline std::string num(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc{}) throw std::runtime_error("num: conversion failed");
    return std::string(buf, res.ptr);
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> r) {
        if (r.size() != header.size()) {
            throw std::invalid_argument("CsvTable: row width does not match the header");
        }
        rows.push_back(std::move(r));
    }

    std::string to_string() const {
        std::string out;
        const auto cell = [](const std::string& s) {
            if (s.find_first_of(",\"\n") == std::string::npos) return s;
            std::string q = "\"";
            for (char c : s) {
                if (c == '"') q += '"';
                q += c;
            }
            return q + "\"";
        };
        for (std::size_t i = 0; i < header.size(); ++i) {
            out += cell(header[i]);
            out += (i + 1 < header.size() ? "," : "\n");
        }
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                out += cell(row[i]);
                out += (i + 1 < row.size() ? "," : "\n");
            }
        }
        return out;
    }
};

struct RunManifest {
    std::string command;
    nlohmann::json params = nlohmann::json::object();
    double wall_ms = 0.0;
    std::uint64_t csv_digest = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema"] = kManifestSchema;
        j["tool_version"] = kVersion;
        j["command"] = command;
        j["params"] = params;
        j["wall_ms"] = wall_ms;
        j["csv_digest"] = csv_digest;
        return j;
    }
};

struct WallTimer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start)
            .count();
    }
};

inline std::string default_out_dir() {
    const char* env = std::getenv("HEISLAB_OUT");
    return env && *env ? env : ".";
}

// writes <dir>/<stem>.csv and <dir>/<stem>.json, filling the digest first
inline void write_artifacts(const std::string& dir, const std::string& stem,
                            const CsvTable& table, RunManifest& manifest) {
    const std::string csv = table.to_string();
    manifest.csv_digest = fnv1a64(csv);
    std::filesystem::create_directories(dir);
    const std::filesystem::path base = std::filesystem::path(dir) / stem;
    {
        std::ofstream f(base.string() + ".csv", std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + base.string() + ".csv");
        f << csv;
    }
    {
        std::ofstream f(base.string() + ".json", std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + base.string() + ".json");
        f << manifest.to_json().dump(2) << "\n";
    }
}

}  // namespace heislab
