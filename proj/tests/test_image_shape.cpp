#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "scralign/codec.hpp"
#include "scralign/dataio.hpp"
#include "scralign/image.hpp"
#include "scralign/pts_io.hpp"
#include "scralign/rng.hpp"
#include "scralign/shape.hpp"

using namespace scralign;
namespace fs = std::filesystem;

namespace {

ImageGray random_image(int w, int h, std::uint64_t seed) {
    ImageGray img(w, h);
    Rng rng(seed);
    for (float& v : img.data) v = static_cast<float>(rng.uniform());
    return img;
}

} // namespace

TEST_CASE("extract_patch constant image") {
    ImageGray img(64, 64, 0.5f);
    const ImageGray p = extract_patch(img, 10.2, 50.7, 16);
    for (float v : p.data) CHECK(v == 0.5f);
}

TEST_CASE("extract_patch replicates edges at the corner") {
    ImageGray img(32, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) img.at(x, y) = static_cast<float>(x + 32 * y) / 1024.0f;
    const ImageGray p = extract_patch(img, 0, 0, 8);
    // rows/cols that fall outside replicate the first row/col
    for (int y = 0; y < 4; ++y)
        for (int x = 4; x < 8; ++x) CHECK(p.at(x, y) == img.at(x - 4, 0));
    for (int y = 4; y < 8; ++y)
        for (int x = 0; x < 4; ++x) CHECK(p.at(x, y) == img.at(0, y - 4));
}

TEST_CASE("extract_patch equals naive crop in the interior") {
    const ImageGray img = random_image(128, 128, 42);
    const int side = 32;
    const ImageGray p = extract_patch(img, 64, 64, side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) CHECK(p.at(x, y) == img.at(64 - 16 + x, 64 - 16 + y));
}

TEST_CASE("extract_patch translation consistency") {
    const ImageGray img = random_image(96, 96, 3);
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const int cx = 30 + rng.uniform_int(20), cy = 30 + rng.uniform_int(20);
        const int dx = rng.uniform_int(8), dy = rng.uniform_int(8);
        ImageGray shifted(96, 96);
        for (int y = 0; y < 96; ++y)
            for (int x = 0; x < 96; ++x) shifted.at(x, y) = img.at_clamped(x - dx, y - dy);
        const ImageGray a = extract_patch(img, cx, cy, 16);
        const ImageGray b = extract_patch(shifted, cx + dx, cy + dy, 16);
        CHECK(a.data == b.data);
    }
}

TEST_CASE("extract_patch rejects odd or small sides") {
    ImageGray img(32, 32, 0.0f);
    CHECK_THROWS(extract_patch(img, 16, 16, 7));
    CHECK_THROWS(extract_patch(img, 16, 16, 6));
}

TEST_CASE("shape vectorization round-trips") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        Shape s;
        const int n = 1 + rng.uniform_int(60);
        for (int i = 0; i < n; ++i) s.points.push_back({rng.gaussian(0, 100), rng.gaussian(0, 100)});
        const Shape back = Shape::from_vector(s.to_vector());
        REQUIRE(back.size() == s.size());
        for (int i = 0; i < n; ++i) {
            CHECK(back.points[i].x == s.points[i].x);
            CHECK(back.points[i].y == s.points[i].y);
        }
    }
}

TEST_CASE("canonical scheme partitions 49 points") {
    const LandmarkScheme& s = canonical_scheme_49();
    CHECK(s.P == 49);
    std::vector<int> seen(49, 0);
    int mouth = 0, leye = 0, reye = 0, nose = 0, brows = 0;
    for (const auto& g : s.groups) {
        for (int i = g.begin; i < g.begin + g.size; ++i) ++seen[i];
        if (g.name == "mouth") mouth = g.size;
        if (g.name == "left_eye") leye = g.size;
        if (g.name == "right_eye") reye = g.size;
        if (g.name == "nose") nose = g.size;
        if (g.name == "eyebrows") brows = g.size;
    }
    for (int c : seen) CHECK(c == 1);
    CHECK(mouth == 18);
    CHECK(leye == 6);
    CHECK(reye == 6);
    CHECK(nose == 9);
    CHECK(brows == 10);
}

TEST_CASE("68-point subset map") {
    const auto& idx = subset_68_to_49();
    REQUIRE(idx.size() == 49);
    // no jaw points, no inner mouth corners
    for (int i : idx) {
        CHECK(i >= 17);
        CHECK(i != 60);
        CHECK(i != 64);
    }
    // outer eye corners land on the scheme's inter-ocular indices
    const LandmarkScheme& s = canonical_scheme_49();
    CHECK(idx[s.iod_a] == 36);
    CHECK(idx[s.iod_b] == 45);
}

TEST_CASE("interocular distance basics") {
    const LandmarkScheme& s = canonical_scheme_49();
    Shape sh;
    sh.points.assign(49, Point{0, 0});
    sh.points[s.iod_a] = {0, 0};
    sh.points[s.iod_b] = {3, 4};
    CHECK(interocular_distance(sh, s) == doctest::Approx(5.0));

    Shape doubled = sh;
    for (Point& p : doubled.points) {
        p.x *= 2;
        p.y *= 2;
    }
    CHECK(interocular_distance(doubled, s) == doctest::Approx(10.0));

    Shape degenerate = sh;
    degenerate.points[s.iod_b] = {0, 0};
    CHECK_THROWS(interocular_distance(degenerate, s));
}

TEST_CASE("pts round trip and 68->49 mapping") {
    const fs::path dir = fs::temp_directory_path() / "scralign_pts_test";
    fs::create_directories(dir);

    Shape s68;
    Rng rng(17);
    for (int i = 0; i < 68; ++i) s68.points.push_back({rng.uniform(0, 200), rng.uniform(0, 200)});
    const std::string p68 = (dir / "a.pts").string();
    write_pts(p68, s68);

    // the text format carries six decimal places
    const Shape back = read_pts(p68);
    REQUIRE(back.size() == 68);
    for (int i = 0; i < 68; ++i) CHECK(std::fabs(back.points[i].x - s68.points[i].x) <= 1e-5);

    const Shape s49 = read_pts_for_scheme(p68, canonical_scheme_49());
    REQUIRE(s49.size() == 49);
    const auto& idx = subset_68_to_49();
    for (int i = 0; i < 49; ++i)
        CHECK(std::fabs(s49.points[i].x - s68.points[idx[i]].x) <= 1e-5);

    // malformed file names itself in the error
    const std::string bad = (dir / "bad.pts").string();
    std::ofstream(bad) << "version: 1\nn_points: 2\n{\n1.0 2.0\nnot numbers\n}\n";
    CHECK_THROWS_WITH_AS(read_pts(bad), doctest::Contains("bad.pts"), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("load_annotated_set behaviors") {
    const fs::path dir = fs::temp_directory_path() / "scralign_dataio_test";
    fs::remove_all(dir);
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "annotations");
    const LandmarkScheme& scheme = canonical_scheme_49();

    SUBCASE("empty directories give an empty list") {
        CHECK(load_annotated_set((dir / "images").string(), (dir / "annotations").string(), scheme)
                  .empty());
    }

    SUBCASE("matched pair loads, unmatched skipped, out-of-bounds raises") {
        const ImageGray img = random_image(120, 120, 1);
        save_image_png((dir / "images" / "s1_a.png").string(), img);
        Shape sh;
        Rng rng(2);
        for (int i = 0; i < 49; ++i) sh.points.push_back({rng.uniform(10, 110), rng.uniform(10, 110)});
        write_pts((dir / "annotations" / "s1_a.pts").string(), sh);
        write_pts((dir / "annotations" / "orphan.pts").string(), sh); // no image

        auto samples = load_annotated_set((dir / "images").string(),
                                          (dir / "annotations").string(), scheme);
        REQUIRE(samples.size() == 1);
        CHECK(samples[0].id == "s1_a");
        CHECK(samples[0].image.width == 120);

        Shape out = sh;
        out.points[3] = {500.0, 20.0};
        save_image_png((dir / "images" / "s2_b.png").string(), img);
        write_pts((dir / "annotations" / "s2_b.pts").string(), out);
        CHECK_THROWS_WITH_AS(load_annotated_set((dir / "images").string(),
                                                (dir / "annotations").string(), scheme),
                             doctest::Contains("s2_b"), std::runtime_error);
    }
    fs::remove_all(dir);
}

TEST_CASE("subject id extraction") {
    CHECK(subject_of("subj012_im3") == "subj012");
    CHECK(subject_of("plain") == "plain");
}

TEST_CASE("checked-in scheme config matches the built-in constant") {
    const LandmarkScheme fromfile =
        load_scheme_json(std::string(SCRALIGN_SOURCE_DIR) + "/config/scheme49.json");
    const LandmarkScheme& builtin = canonical_scheme_49();
    CHECK(fromfile.P == builtin.P);
    REQUIRE(fromfile.groups.size() == builtin.groups.size());
    for (std::size_t i = 0; i < builtin.groups.size(); ++i) {
        CHECK(fromfile.groups[i].name == builtin.groups[i].name);
        CHECK(fromfile.groups[i].begin == builtin.groups[i].begin);
        CHECK(fromfile.groups[i].size == builtin.groups[i].size);
    }
    CHECK(fromfile.iod_a == builtin.iod_a);
    CHECK(fromfile.iod_b == builtin.iod_b);
}

TEST_CASE("similarity fit recovers a known transform") {
    Rng rng(23);
    Shape src;
    for (int i = 0; i < 12; ++i) src.points.push_back({rng.gaussian(0, 10), rng.gaussian(0, 10)});
    Similarity t;
    t.a = 1.3 * std::cos(0.4);
    t.b = 1.3 * std::sin(0.4);
    t.tx = 5.0;
    t.ty = -2.5;
    const Shape dst = t.apply(src);
    const Similarity fitted = fit_similarity(src, dst);
    CHECK(fitted.a == doctest::Approx(t.a).epsilon(1e-10));
    CHECK(fitted.b == doctest::Approx(t.b).epsilon(1e-10));
    CHECK(fitted.tx == doctest::Approx(t.tx).epsilon(1e-9));
    CHECK(fitted.ty == doctest::Approx(t.ty).epsilon(1e-9));
}

TEST_CASE("mean shape of similarity copies is the normalized shape") {
    const LandmarkScheme& scheme = canonical_scheme_49();
    Rng rng(31);
    Shape base;
    for (int i = 0; i < 49; ++i) base.points.push_back({rng.gaussian(0, 5), rng.gaussian(0, 5)});
    std::vector<Shape> shapes;
    for (int k = 0; k < 6; ++k) {
        Similarity t;
        const double ang = rng.uniform(-0.5, 0.5), s = rng.uniform(0.7, 1.5);
        t.a = s * std::cos(ang);
        t.b = s * std::sin(ang);
        t.tx = rng.uniform(-20, 20);
        t.ty = rng.uniform(-20, 20);
        shapes.push_back(t.apply(base));
    }
    const Shape mean = compute_mean_shape(shapes, scheme);
    CHECK(interocular_distance(mean, scheme) == doctest::Approx(1.0).epsilon(1e-9));
    // mean is similarity-equivalent to the base shape
    const Similarity t = fit_similarity(base, mean);
    const Shape aligned = t.apply(base);
    for (int i = 0; i < 49; ++i) {
        CHECK(aligned.points[i].x == doctest::Approx(mean.points[i].x).epsilon(1e-6));
        CHECK(aligned.points[i].y == doctest::Approx(mean.points[i].y).epsilon(1e-6));
    }
}
