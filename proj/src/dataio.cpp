#include "scralign/dataio.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>

#include <omp.h>

#include <json.hpp>

#include "scralign/codec.hpp"
#include "scralign/pts_io.hpp"

namespace fs = std::filesystem;

namespace scralign {

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

} // namespace

std::string subject_of(const std::string& sample_id) {
    const std::size_t pos = sample_id.rfind('_');
    return pos == std::string::npos ? sample_id : sample_id.substr(0, pos);
}

LandmarkScheme load_scheme_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scheme config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw std::runtime_error("scheme config parse error in " + path + ": " + ex.what());
    }
    LandmarkScheme s;
    try {
        s.P = j.at("P").get<int>();
        for (const auto& g : j.at("groups")) {
            s.groups.push_back({g.at("name").get<std::string>(), g.at("begin").get<int>(),
                                g.at("size").get<int>()});
        }
        const auto& iod = j.at("interocular");
        s.iod_a = iod.at(0).get<int>();
        s.iod_b = iod.at(1).get<int>();
    } catch (const nlohmann::json::exception& ex) {
        throw std::runtime_error("scheme config schema violation in " + path + ": " + ex.what());
    }
    s.validate();
    return s;
}

std::vector<AnnotatedSample> load_annotated_set(const std::string& image_dir,
                                                const std::string& annotation_dir,
                                                const LandmarkScheme& scheme) {
    scheme.validate();
    if (!fs::is_directory(image_dir))
        throw std::runtime_error("load_annotated_set: not a directory: " + image_dir);
    if (!fs::is_directory(annotation_dir))
        throw std::runtime_error("load_annotated_set: not a directory: " + annotation_dir);

    std::map<std::string, fs::path> images;
    for (const auto& e : fs::directory_iterator(image_dir)) {
        if (e.is_regular_file() && is_image_file(e.path()))
            images[e.path().stem().string()] = e.path();
    }
    std::map<std::string, fs::path> annots;
    for (const auto& e : fs::directory_iterator(annotation_dir)) {
        if (e.is_regular_file() && e.path().extension() == ".pts")
            annots[e.path().stem().string()] = e.path();
    }

    std::vector<std::pair<fs::path, fs::path>> pairs;
    std::vector<std::string> ids;
    for (const auto& [stem, img] : images) {
        auto it = annots.find(stem);
        if (it == annots.end()) {
            std::cerr << "warning: no annotation for " << img.string() << ", skipped\n";
            continue;
        }
        pairs.emplace_back(img, it->second);
        ids.push_back(stem);
    }
    for (const auto& [stem, pts] : annots) {
        if (!images.count(stem))
            std::cerr << "warning: no image for " << pts.string() << ", skipped\n";
    }

    std::vector<AnnotatedSample> samples(pairs.size());
    std::string error;
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(pairs.size()); ++i) {
        try {
            AnnotatedSample s;
            s.image = load_image_gray(pairs[i].first.string());
            s.ground_truth = read_pts_for_scheme(pairs[i].second.string(), scheme);
            s.id = ids[i];
            for (const Point& p : s.ground_truth.points) {
                if (p.x < 0 || p.y < 0 || p.x > s.image.width - 1 || p.y > s.image.height - 1)
                    throw std::runtime_error("ground truth outside image bounds in sample " + s.id);
            }
            samples[i] = std::move(s);
        } catch (const std::exception& ex) {
#pragma omp critical
            if (error.empty()) error = ex.what();
        }
    }
    if (!error.empty()) throw std::runtime_error(error);
    return samples; // already id-sorted via the map
}

} // namespace scralign
