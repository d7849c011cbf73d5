#include "scralign/codec.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scralign {

ImageGray load_image_gray(const std::string& path) {
    cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
    if (bgr.empty()) throw std::runtime_error("cannot decode image: " + path);
    ImageGray out(bgr.cols, bgr.rows);
    for (int y = 0; y < bgr.rows; ++y) {
        const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            out.at(x, y) = luma601(row[x][0], row[x][1], row[x][2]);
        }
    }
    return out;
}

void save_image_png(const std::string& path, const ImageGray& image) {
    cv::Mat m(image.height, image.width, CV_8UC1);
    for (int y = 0; y < image.height; ++y) {
        unsigned char* row = m.ptr<unsigned char>(y);
        for (int x = 0; x < image.width; ++x) {
            const float v = std::clamp(image.at(x, y), 0.0f, 1.0f);
            row[x] = static_cast<unsigned char>(std::lround(v * 255.0f));
        }
    }
    if (!cv::imwrite(path, m)) throw std::runtime_error("cannot write image: " + path);
}

} // namespace scralign
