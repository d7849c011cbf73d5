#include "scralign/pts_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scralign {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
    throw std::runtime_error("pts: " + path + ": " + why);
}

} // namespace

Shape read_pts(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");

    std::string line;
    int n_points = -1;
    bool in_body = false;
    Shape shape;
    while (std::getline(in, line)) {
        // strip CR and surrounding blanks
        while (!line.empty() && (line.back() == '\r' || std::isspace(static_cast<unsigned char>(line.back()))))
            line.pop_back();
        std::size_t start = 0;
        while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
        line = line.substr(start);
        if (line.empty()) continue;

        if (!in_body) {
            if (line.rfind("version:", 0) == 0) continue;
            if (line.rfind("n_points:", 0) == 0) {
                n_points = std::atoi(line.c_str() + 9);
                continue;
            }
            if (line == "{") {
                if (n_points <= 0) fail(path, "missing or bad n_points header");
                in_body = true;
                continue;
            }
            fail(path, "unexpected header line '" + line + "'");
        }
        if (line == "}") break;
        std::istringstream ls(line);
        Point p;
        if (!(ls >> p.x >> p.y)) fail(path, "malformed coordinate line '" + line + "'");
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) fail(path, "non-finite coordinate");
        shape.points.push_back(p);
    }
    if (!in_body) fail(path, "missing '{' body");
    if (shape.size() != n_points)
        fail(path, "declared " + std::to_string(n_points) + " points, found " +
                       std::to_string(shape.size()));
    return shape;
}

void write_pts(const std::string& path, const Shape& shape) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("pts: cannot write " + path);
    out << "version: 1\n";
    out << "n_points: " << shape.size() << "\n{\n";
    char buf[64];
    for (const Point& p : shape.points) {
        std::snprintf(buf, sizeof(buf), "%.6f %.6f\n", p.x, p.y);
        out << buf;
    }
    out << "}\n";
}

Shape read_pts_for_scheme(const std::string& path, const LandmarkScheme& scheme) {
    Shape raw = read_pts(path);
    if (raw.size() == scheme.P) return raw;
    if (raw.size() == 68 && scheme.P == 49) {
        Shape out;
        out.points.reserve(49);
        for (int idx : subset_68_to_49()) out.points.push_back(raw.points[idx]);
        return out;
    }
    fail(path, "has " + std::to_string(raw.size()) + " points, scheme expects " +
                   std::to_string(scheme.P));
}

} // namespace scralign
