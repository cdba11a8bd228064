#pragma once

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "codetree/attractor.hpp"
#include "codetree/config.hpp"
#include "codetree/errors.hpp"
#include "codetree/version.hpp"

namespace codetree {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// FNV-1a over the canonical JSON export, so the hash pins every resolved
// field and not just the input text.
inline std::uint64_t config_hash(const RunConfig& rc) {
    std::string s = export_config(rc);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

inline std::string file_header(std::uint64_t cfg_hash, std::uint64_t seed,
                               const std::string& cmd) {
    std::string s;
    s += std::string("# codetree ") + kVersion + "\n";
    s += "# config=" + hash_hex(cfg_hash) + "\n";
    s += "# seed=" + std::to_string(seed) + "\n";
    if (!cmd.empty()) s += "# cmd=" + cmd + "\n";
    return s;
}

struct CurveRow {
    double alpha = 0.0;
    std::size_t depth = 0;
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double std_error = 0.0;
};

inline std::string curve_csv(const std::vector<CurveRow>& rows,
                             std::uint64_t cfg_hash, std::uint64_t seed,
                             const std::string& cmd) {
    std::string s = file_header(cfg_hash, seed, cmd);
    s += "# columns=alpha,depth,value,lower,upper,std_error\n";
    for (const auto& r : rows) {
        s += format_double(r.alpha);
        s += ',';
        s += std::to_string(r.depth);
        s += ',';
        s += format_double(r.value);
        s += ',';
        s += format_double(r.lower);
        s += ',';
        s += format_double(r.upper);
        s += ',';
        s += format_double(r.std_error);
        s += '\n';
    }
    return s;
}

inline std::string cloud_csv(const PointCloud& cloud, std::uint64_t cfg_hash,
                             std::uint64_t seed, const std::string& cmd) {
    std::string s = file_header(cfg_hash, seed, cmd);
    s += "# columns=";
    for (int i = 0; i < cloud.dimension; ++i) s += "x" + std::to_string(i + 1) + ",";
    s += "depth,diameter\n";
    for (const auto& p : cloud.points) {
        for (int i = 0; i < cloud.dimension; ++i) {
            s += format_double(p.x[i]);
            s += ',';
        }
        s += std::to_string(p.depth);
        s += ',';
        s += format_double(p.diameter);
        s += '\n';
    }
    return s;
}

// Inverse of cloud_csv, tolerant of extra comment lines. Dimension is
// inferred from the column count of the first data row.
inline PointCloud parse_cloud_csv(const std::string& text) {
    PointCloud cloud;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> cols;
        std::size_t start = 0;
        for (;;) {
            std::size_t comma = line.find(',', start);
            std::string tok = comma == std::string::npos
                                  ? line.substr(start)
                                  : line.substr(start, comma - start);
            try {
                std::size_t used = 0;
                double v = std::stod(tok, &used);
                while (used < tok.size() &&
                       (tok[used] == ' ' || tok[used] == '\t'))
                    ++used;
                if (used != tok.size()) throw std::invalid_argument(tok);
                cols.push_back(v);
            } catch (const std::exception&) {
                throw SchemaError("points CSV: '" + tok +
                                  "' is not a number at line " +
                                  std::to_string(lineno));
            }
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cols.size() < 3)
            throw SchemaError("points CSV: line " + std::to_string(lineno) +
                              " needs coordinates, depth, diameter");
        int d = (int)cols.size() - 2;
        if (d > kMaxDim)
            throw SchemaError("points CSV: line " + std::to_string(lineno) +
                              " implies dimension > 4");
        if (cloud.points.empty()) {
            cloud.dimension = d;
        } else if (d != cloud.dimension) {
            throw SchemaError("points CSV: inconsistent column count at line " +
                              std::to_string(lineno));
        }
        CloudPoint p;
        p.x = Vec::zero(d);
        for (int i = 0; i < d; ++i) p.x[i] = cols[(std::size_t)i];
        p.depth = (std::size_t)cols[(std::size_t)d];
        p.diameter = cols[(std::size_t)d + 1];
        cloud.points.push_back(p);
    }
    if (cloud.points.empty())
        throw SchemaError("points CSV contains no data rows");
    return cloud;
}

inline std::string pgm_bytes(const OccupancyGrid& g, std::uint64_t cfg_hash,
                             std::uint64_t seed) {
    std::string s = "P5\n";
    s += "# codetree " + std::string(kVersion) + " config=" + hash_hex(cfg_hash) +
         " seed=" + std::to_string(seed) + "\n";
    s += std::to_string(g.width) + " " + std::to_string(g.height) + "\n255\n";
    s.append(reinterpret_cast<const char*>(g.data.data()), g.data.size());
    return s;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file '" + path + "'");
    f.write(bytes.data(), (std::streamsize)bytes.size());
    f.flush();
    if (!f) throw ConfigError("failed while writing '" + path + "'");
}

}  // namespace codetree
