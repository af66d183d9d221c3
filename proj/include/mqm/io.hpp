#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

// Columnar CSV emission, content checksums, and the per-run manifest.
// Everything written here must be byte-reproducible from config + seed, so
// no timestamps or machine identifiers belong in these files.

namespace mqm {

using json = nlohmann::json;

// 17 significant digits round-trips every double exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
    if (!columns.empty())
        for (const auto& c : columns)
            if (c.size() != columns.front().size())
                throw std::invalid_argument("write_csv: ragged columns");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path.string());
    for (std::size_t c = 0; c < header.size(); ++c)
        out << header[c] << (c + 1 < header.size() ? "," : "\n");
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < columns.size(); ++c)
            out << format_double(columns[c][r]) << (c + 1 < columns.size() ? "," : "\n");
    if (!out) throw std::runtime_error("write_csv: write failed for " + path.string());
}

// Dense row-major dump of a 2D grid; the JSON descriptor carries the axes.
inline void write_grid_csv(const std::filesystem::path& path, const std::vector<double>& values,
                           std::size_t n_rows, std::size_t n_cols) {
    if (values.size() != n_rows * n_cols)
        throw std::invalid_argument("write_grid_csv: size mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_grid_csv: cannot open " + path.string());
    for (std::size_t r = 0; r < n_rows; ++r)
        for (std::size_t c = 0; c < n_cols; ++c)
            out << format_double(values[r * n_cols + c]) << (c + 1 < n_cols ? "," : "\n");
    if (!out) throw std::runtime_error("write_grid_csv: write failed for " + path.string());
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_json: cannot open " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("write_json: write failed for " + path.string());
}

inline std::uint64_t fnv1a64(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("fnv1a64: cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

// Collects every file a run produces; written last as manifest.json.
class OutputManifest {
  public:
    OutputManifest(std::filesystem::path out_dir, json resolved_config)
        : dir_(std::move(out_dir)), config_(std::move(resolved_config)) {}

    void add(const std::filesystem::path& file) { files_.push_back(file); }

    void write() const {
        json entries = json::array();
        for (const auto& f : files_) {
            entries.push_back({{"path", std::filesystem::relative(f, dir_).generic_string()},
                               {"bytes", std::filesystem::file_size(f)},
                               {"fnv1a64", hex64(fnv1a64(f))}});
        }
        write_json(dir_ / "manifest.json", json{{"config", config_}, {"outputs", entries}});
    }

  private:
    std::filesystem::path dir_;
    json config_;
    std::vector<std::filesystem::path> files_;
};

}  // namespace mqm
