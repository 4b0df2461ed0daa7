// Flat-file output helpers: round-trip float formatting, CSV tables, content
// hashes, run manifests and a minimal SVG line plot for decay curves.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace obl {

/// Shortest-round-trip-safe decimal formatting ("%.17g").
std::string format_g17(double v);

std::uint64_t fnv1a64(const void* data, std::size_t len);
std::string fnv1a64_hex(const std::string& bytes);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::string to_csv() const;
    /// Two-column whitespace format consumable by gnuplot.
    std::string to_gnuplot(std::size_t xcol, std::size_t ycol) const;
};

/// Minimal static SVG polyline plot (x linear, y in log10 when logy is set).
std::string svg_series_plot(const std::string& title,
                            const std::vector<std::pair<double, double>>& points, bool logy);

struct ManifestEntry {
    std::string path;   // relative to the output directory
    std::size_t bytes = 0;
    std::string hash;   // fnv1a64 of the content
};

/// Records what a run produced; written next to the data files. Wall time
/// lives only here so the data files stay byte-reproducible.
struct Manifest {
    std::string command;
    std::string config_path;
    std::string config_hash;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    double wall_time_s = 0;
    std::vector<ManifestEntry> entries;

    void add(const std::string& out_dir, const std::string& rel_path);
    void write(const std::string& out_dir) const;
};

}  // namespace obl
