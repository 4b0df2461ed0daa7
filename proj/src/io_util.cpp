#include "obl/io_util.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "obl/common.hpp"

namespace obl {

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for writing: " + path);
    f << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string Table::to_csv() const {
    std::ostringstream ss;
    for (std::size_t i = 0; i < header.size(); ++i) ss << (i ? "," : "") << header[i];
    ss << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) ss << (i ? "," : "") << row[i];
        ss << "\n";
    }
    return ss.str();
}

std::string Table::to_gnuplot(std::size_t xcol, std::size_t ycol) const {
    std::ostringstream ss;
    ss << "# " << header[xcol] << " " << header[ycol] << "\n";
    for (const auto& row : rows) ss << row[xcol] << " " << row[ycol] << "\n";
    return ss.str();
}

std::string svg_series_plot(const std::string& title,
                            const std::vector<std::pair<double, double>>& points, bool logy) {
    const double W = 640, H = 420, ml = 60, mr = 20, mt = 36, mb = 42;
    std::vector<std::pair<double, double>> pts;
    for (auto [x, y] : points) {
        if (logy) {
            if (y <= 0) continue;
            y = std::log10(y);
        }
        pts.push_back({x, y});
    }
    std::ostringstream ss;
    ss << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    ss << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
       << "</text>\n";
    if (pts.size() >= 2) {
        double x0 = pts[0].first, x1 = pts[0].first, y0 = pts[0].second, y1 = pts[0].second;
        for (auto [x, y] : pts) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
        if (x1 == x0) x1 = x0 + 1;
        if (y1 == y0) y1 = y0 + 1;
        auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
        auto py = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };
        ss << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
        for (auto [x, y] : pts) ss << px(x) << "," << py(y) << " ";
        ss << "\"/>\n";
        for (auto [x, y] : pts)
            ss << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"2.5\" fill=\"#1f77b4\"/>\n";
        ss << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
           << H - mb << "\" stroke=\"black\"/>\n";
        ss << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
           << "\" stroke=\"black\"/>\n";
        ss << "<text x=\"" << ml << "\" y=\"" << H - mb + 16 << "\" font-size=\"11\">" << x0
           << "</text>\n<text x=\"" << W - mr - 30 << "\" y=\"" << H - mb + 16
           << "\" font-size=\"11\">" << x1 << "</text>\n";
        ss << "<text x=\"4\" y=\"" << H - mb << "\" font-size=\"11\">" << (logy ? "1e" : "")
           << (logy ? format_g17(y0) : format_g17(y0)) << "</text>\n";
        ss << "<text x=\"4\" y=\"" << mt + 10 << "\" font-size=\"11\">" << (logy ? "1e" : "")
           << (logy ? format_g17(y1) : format_g17(y1)) << "</text>\n";
    }
    ss << "</svg>\n";
    return ss.str();
}

void Manifest::add(const std::string& out_dir, const std::string& rel_path) {
    ManifestEntry e;
    e.path = rel_path;
    const std::string bytes = read_text_file(out_dir + "/" + rel_path);
    e.bytes = bytes.size();
    e.hash = fnv1a64_hex(bytes);
    entries.push_back(e);
}

void Manifest::write(const std::string& out_dir) const {
    nlohmann::json j;
    j["command"] = command;
    j["config_path"] = config_path;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["threads"] = threads;
    j["wall_time_s"] = wall_time_s;
    j["versions"] = {{"openbilliard", "0.1.0"},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                   std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)}};
    nlohmann::json files = nlohmann::json::array();
    for (const auto& e : entries)
        files.push_back({{"path", e.path}, {"bytes", e.bytes}, {"fnv1a64", e.hash}});
    j["outputs"] = files;
    write_text_file(out_dir + "/manifest.json", j.dump(2) + "\n");
}

}  // namespace obl
