#include "scralign/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "scralign/codec.hpp"
#include "scralign/pts_io.hpp"

namespace fs = std::filesystem;

namespace scralign {

namespace {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

double smoothstep(double e0, double e1, double v) {
    const double t = std::clamp((v - e0) / (e1 - e0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// signed distance to an axis-aligned ellipse boundary (good enough for
// shading; exact near the boundary where it matters)
double sdf_ellipse(Vec2 p, Vec2 c, double rx, double ry) {
    const double nx = (p.x - c.x) / rx, ny = (p.y - c.y) / ry;
    const double k = std::sqrt(nx * nx + ny * ny);
    return (k - 1.0) * std::min(rx, ry);
}

double sdf_segment(Vec2 p, Vec2 a, Vec2 b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double wx = p.x - a.x, wy = p.y - a.y;
    const double len2 = vx * vx + vy * vy;
    const double t = len2 > 0.0 ? std::clamp((wx * vx + wy * vy) / len2, 0.0, 1.0) : 0.0;
    return std::hypot(wx - t * vx, wy - t * vy);
}

// Per-subject geometry in a canonical y-down frame, unit ~ face half-width.
struct FaceGeometry {
    double eye_dx, eye_y, eye_w, eye_h;
    double brow_y, brow_w, brow_arch, brow_thick;
    double nose_top, nose_bot, nose_w;
    double mouth_y, mouth_w, lip_up, lip_dn;
    double skin, feature_dark;
};

FaceGeometry subject_geometry(Rng& rng) {
    FaceGeometry g;
    g.eye_dx = 0.32 * (1.0 + 0.10 * rng.gaussian());
    g.eye_y = -0.25 + 0.02 * rng.gaussian();
    g.eye_w = 0.145 * (1.0 + 0.10 * rng.gaussian());
    g.eye_h = 0.065 * (1.0 + 0.12 * rng.gaussian());
    g.brow_y = g.eye_y - 0.16 * (1.0 + 0.12 * rng.gaussian());
    g.brow_w = 0.21 * (1.0 + 0.10 * rng.gaussian());
    g.brow_arch = 0.045 * (1.0 + 0.35 * rng.gaussian());
    g.brow_thick = 0.020 + 0.006 * rng.uniform();
    g.nose_top = -0.26 + 0.02 * rng.gaussian();
    g.nose_bot = 0.10 + 0.02 * rng.gaussian();
    g.nose_w = 0.105 * (1.0 + 0.12 * rng.gaussian());
    g.mouth_y = 0.41 * (1.0 + 0.06 * rng.gaussian());
    g.mouth_w = 0.215 * (1.0 + 0.10 * rng.gaussian());
    g.lip_up = 0.050 * (1.0 + 0.15 * rng.gaussian());
    g.lip_dn = 0.062 * (1.0 + 0.15 * rng.gaussian());
    g.skin = 0.62 + 0.08 * rng.uniform();
    g.feature_dark = 0.22 + 0.08 * rng.uniform();
    return g;
}

struct FaceVariant {
    double angle, scale, cx, cy;  // similarity into image coords
    double openness;              // mouth opening in canonical units
    double brow_raise;
    double light_dx, light_dy, light_amp;
    double brightness, noise_sigma;
};

FaceVariant variant_params(Rng& rng, int image_size) {
    FaceVariant v;
    v.angle = 0.14 * rng.gaussian();
    v.scale = image_size * (0.26 + 0.03 * rng.uniform());
    v.cx = image_size * (0.5 + 0.05 * rng.gaussian());
    v.cy = image_size * (0.5 + 0.05 * rng.gaussian());
    v.openness = std::max(0.0, 0.02 + 0.02 * rng.gaussian());
    v.brow_raise = 0.02 * rng.gaussian();
    v.light_dx = rng.gaussian();
    v.light_dy = rng.gaussian();
    v.light_amp = 0.05 + 0.05 * rng.uniform();
    v.brightness = 0.95 + 0.1 * rng.uniform();
    v.noise_sigma = 0.008 + 0.008 * rng.uniform();
    return v;
}

// 49 landmarks in scheme order (eyebrows, nose, left eye, right eye, mouth)
std::vector<Vec2> canonical_landmarks(const FaceGeometry& g, const FaceVariant& v) {
    std::vector<Vec2> pts;
    pts.reserve(49);
    const double brow_y = g.brow_y - v.brow_raise;

    auto brow = [&](double sign) {
        for (int t = 0; t < 5; ++t) {
            const double u = t / 4.0;
            const double x = sign * g.eye_dx - g.brow_w / 2 + u * g.brow_w;
            const double arch = g.brow_arch * (1.0 - (2 * u - 1) * (2 * u - 1));
            pts.push_back({x, brow_y - arch});
        }
    };
    brow(-1.0);
    brow(+1.0);

    // nose bridge (4) then base arc (5)
    for (int t = 0; t < 4; ++t) {
        const double u = t / 3.0;
        pts.push_back({0.0, g.nose_top + u * (g.nose_bot - 0.06 - g.nose_top)});
    }
    for (int t = 0; t < 5; ++t) {
        const double u = t / 4.0;
        const double x = -g.nose_w + u * 2.0 * g.nose_w;
        pts.push_back({x, g.nose_bot + 0.025 * (1.0 - std::pow(2 * u - 1, 2))});
    }

    auto eye = [&](double sign) {
        // outer corner first for the left eye, inner corner first for the
        // right eye, matching the standard annotation order
        const double cx = sign * g.eye_dx;
        const double start = 180.0;
        for (int k = 0; k < 6; ++k) {
            const double deg = start - 60.0 * k;
            const double rad = deg * M_PI / 180.0;
            pts.push_back({cx + g.eye_w * std::cos(rad), g.eye_y - g.eye_h * std::sin(rad)});
        }
    };
    eye(-1.0);
    eye(+1.0);

    // mouth: 12 outer then 6 inner
    const double uh = g.lip_up + v.openness, lh = g.lip_dn + v.openness;
    auto mouth_pt = [&](double deg, double w, double hu, double hl) {
        const double rad = deg * M_PI / 180.0;
        const double s = std::sin(rad);
        const double h = s >= 0.0 ? hu : hl;
        return Vec2{w * std::cos(rad), g.mouth_y - h * s};
    };
    const double outer_deg[12] = {180, 150, 115, 90, 65, 30, 0, -30, -65, -90, -115, -150};
    for (double d : outer_deg) pts.push_back(mouth_pt(d, g.mouth_w, uh, lh));
    const double inner_w = g.mouth_w * 0.72;
    const double inner_h = std::max(0.008, v.openness * 0.8);
    const double inner_deg[6] = {115, 90, 65, -65, -90, -115};
    for (double d : inner_deg) pts.push_back(mouth_pt(d, inner_w, inner_h, inner_h));
    return pts;
}

ImageGray render_face_image(const FaceGeometry& g, const FaceVariant& v, int size,
                            Rng& noise_rng) {
    ImageGray img(size, size);
    const double ca = std::cos(v.angle), sa = std::sin(v.angle);
    const double skin = g.skin, dark = g.feature_dark;
    const double brow_y = g.brow_y - v.brow_raise;
    const double uh = g.lip_up + v.openness, lh = g.lip_dn + v.openness;
    const double light_norm = std::hypot(v.light_dx, v.light_dy) + 1e-9;
    const double lx = v.light_dx / light_norm, ly = v.light_dy / light_norm;

    // soft edge width ~1.5px in canonical units
    const double ew = 1.5 / v.scale;

    for (int py = 0; py < size; ++py) {
        for (int px = 0; px < size; ++px) {
            // inverse similarity into the canonical frame
            const double ix = (px + 0.5 - v.cx) / v.scale, iy = (py + 0.5 - v.cy) / v.scale;
            const Vec2 p{ca * ix + sa * iy, -sa * ix + ca * iy};

            double val = 0.32 + 0.10 * (ix + iy); // background gradient

            // head
            const double head = sdf_ellipse(p, {0.0, 0.05}, 0.72, 0.95);
            double cov = smoothstep(ew, -ew, head);
            double face_val = skin * (1.0 - 0.18 * std::max(0.0, -head) * 0.5);
            face_val += v.light_amp * (lx * p.x + ly * p.y);

            // eyebrows
            for (double sign : {-1.0, 1.0}) {
                double d = 1e9;
                Vec2 prev{sign * g.eye_dx - g.brow_w / 2, brow_y};
                for (int t = 1; t < 5; ++t) {
                    const double u = t / 4.0;
                    const double arch = g.brow_arch * (1.0 - (2 * u - 1) * (2 * u - 1));
                    const Vec2 cur{sign * g.eye_dx - g.brow_w / 2 + u * g.brow_w, brow_y - arch};
                    d = std::min(d, sdf_segment(p, prev, cur));
                    prev = cur;
                }
                const double c = smoothstep(g.brow_thick + ew, g.brow_thick - ew, d);
                face_val = face_val * (1.0 - c) + dark * c;
            }

            // eyes: sclera, iris, lid outline
            for (double sign : {-1.0, 1.0}) {
                const Vec2 ec{sign * g.eye_dx, g.eye_y};
                const double de = sdf_ellipse(p, ec, g.eye_w, g.eye_h);
                const double sclera = smoothstep(ew, -ew, de);
                face_val = face_val * (1.0 - sclera) + 0.88 * sclera;
                const double di = std::hypot(p.x - ec.x, p.y - ec.y) - g.eye_h * 0.62;
                const double iris = smoothstep(ew, -ew, di) * sclera;
                face_val = face_val * (1.0 - iris) + 0.12 * iris;
                const double ring = smoothstep(0.012 + ew, 0.012 - ew, std::fabs(de));
                face_val = face_val * (1.0 - ring) + dark * ring;
            }

            // nose: bridge shading + base line + nostrils
            {
                const double db = sdf_segment(p, {0.0, g.nose_top}, {0.0, g.nose_bot - 0.05});
                const double cb = smoothstep(0.035 + ew, 0.035 - ew, db);
                face_val -= 0.07 * cb;
                double dn = 1e9;
                Vec2 prev{-g.nose_w, g.nose_bot};
                for (int t = 1; t < 5; ++t) {
                    const double u = t / 4.0;
                    const Vec2 cur{-g.nose_w + u * 2 * g.nose_w,
                                   g.nose_bot + 0.025 * (1.0 - std::pow(2 * u - 1, 2))};
                    dn = std::min(dn, sdf_segment(p, prev, cur));
                    prev = cur;
                }
                const double cn = smoothstep(0.010 + ew, 0.010 - ew, dn);
                face_val = face_val * (1.0 - cn) + (skin - 0.25) * cn;
                for (double sign : {-1.0, 1.0}) {
                    const double dd =
                        std::hypot(p.x - sign * g.nose_w * 0.72, p.y - (g.nose_bot - 0.005)) - 0.022;
                    const double cd = smoothstep(ew, -ew, dd);
                    face_val = face_val * (1.0 - cd) + dark * cd;
                }
            }

            // mouth: lips, inner line / opening
            {
                const bool upper = p.y <= g.mouth_y;
                const double dl = sdf_ellipse(p, {0.0, g.mouth_y}, g.mouth_w, upper ? uh : lh);
                const double cl = smoothstep(ew, -ew, dl);
                const double lip = upper ? skin - 0.22 : skin - 0.28;
                face_val = face_val * (1.0 - cl) + lip * cl;
                const double inner_h = std::max(0.008, v.openness * 0.8);
                const double di = sdf_ellipse(p, {0.0, g.mouth_y}, g.mouth_w * 0.72, inner_h);
                const double ci = smoothstep(ew, -ew, di);
                face_val = face_val * (1.0 - ci) + 0.08 * ci;
            }

            val = val * (1.0 - cov) + face_val * cov;
            val = val * v.brightness + v.noise_sigma * noise_rng.gaussian();
            img.at(px, py) = static_cast<float>(std::clamp(val, 0.0, 1.0));
        }
    }
    return img;
}

} // namespace

FaceSample render_face_sample(const SynthFaceConfig& cfg, int subject, int variant) {
    const int sid = cfg.subject_offset + subject;
    Rng subj_rng(Rng::mix(cfg.seed, 0x5u, static_cast<std::uint64_t>(sid)));
    const FaceGeometry geom = subject_geometry(subj_rng);
    Rng var_rng(Rng::mix(cfg.seed, 0x6u, Rng::mix(sid, variant)));
    const FaceVariant var = variant_params(var_rng, cfg.image_size);

    FaceSample sample;
    Rng noise_rng(Rng::mix(cfg.seed, 0x7u, Rng::mix(sid, variant)));
    sample.image = render_face_image(geom, var, cfg.image_size, noise_rng);

    const double ca = std::cos(var.angle), sa = std::sin(var.angle);
    for (const Vec2& c : canonical_landmarks(geom, var)) {
        // forward similarity into image coords
        const double x = var.cx + var.scale * (ca * c.x - sa * c.y);
        const double y = var.cy + var.scale * (sa * c.x + ca * c.y);
        sample.landmarks.points.push_back({x, y});
    }

    char buf[64];
    std::snprintf(buf, sizeof(buf), "subj%03d_im%d", sid, variant);
    sample.id = buf;
    return sample;
}

void synth_face_dataset(const std::string& out_dir, const SynthFaceConfig& cfg) {
    fs::create_directories(fs::path(out_dir) / "images");
    fs::create_directories(fs::path(out_dir) / "annotations");
    for (int s = 0; s < cfg.subjects; ++s) {
        for (int v = 0; v < cfg.per_subject; ++v) {
            const FaceSample sample = render_face_sample(cfg, s, v);
            save_image_png((fs::path(out_dir) / "images" / (sample.id + ".png")).string(),
                           sample.image);
            write_pts((fs::path(out_dir) / "annotations" / (sample.id + ".pts")).string(),
                      sample.landmarks);
        }
    }
}

ImageGray render_texture(int size, Rng& rng) {
    ImageGray img(size, size);

    // multi-octave value noise
    for (int cell : {32, 16, 8, 4}) {
        const int gw = size / cell + 2;
        std::vector<double> grid(static_cast<std::size_t>(gw) * gw);
        for (double& v : grid) v = rng.uniform();
        const double amp = cell / 64.0;
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                const double gx = static_cast<double>(x) / cell, gy = static_cast<double>(y) / cell;
                const int x0 = static_cast<int>(gx), y0 = static_cast<int>(gy);
                const double fx = gx - x0, fy = gy - y0;
                const double v00 = grid[y0 * gw + x0], v10 = grid[y0 * gw + x0 + 1];
                const double v01 = grid[(y0 + 1) * gw + x0], v11 = grid[(y0 + 1) * gw + x0 + 1];
                const double v = (v00 * (1 - fx) + v10 * fx) * (1 - fy) +
                                 (v01 * (1 - fx) + v11 * fx) * fy;
                img.at(x, y) += static_cast<float>(amp * v);
            }
        }
    }

    // a few soft shapes for corner/edge statistics
    const int n_shapes = 4 + rng.uniform_int(5);
    for (int s = 0; s < n_shapes; ++s) {
        const bool bar = rng.uniform() < 0.5;
        const Vec2 c{rng.uniform(0.0, size), rng.uniform(0.0, size)};
        const double strength = rng.uniform(-0.35, 0.35);
        if (bar) {
            const double ang = rng.uniform(0.0, M_PI);
            const double len = rng.uniform(0.1, 0.5) * size;
            const double thick = rng.uniform(0.01, 0.05) * size;
            const Vec2 a{c.x - len * std::cos(ang), c.y - len * std::sin(ang)};
            const Vec2 b{c.x + len * std::cos(ang), c.y + len * std::sin(ang)};
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x) {
                    const double d = sdf_segment({x + 0.5, y + 0.5}, a, b);
                    img.at(x, y) += static_cast<float>(strength * smoothstep(thick + 1.5, thick - 1.5, d));
                }
        } else {
            const double rx = rng.uniform(0.03, 0.25) * size;
            const double ry = rng.uniform(0.03, 0.25) * size;
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x) {
                    const double d = sdf_ellipse({x + 0.5, y + 0.5}, c, rx, ry);
                    img.at(x, y) += static_cast<float>(strength * smoothstep(1.5, -1.5, d));
                }
        }
    }

    float lo = img.data[0], hi = img.data[0];
    for (float v : img.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const float span = std::max(1e-6f, hi - lo);
    for (float& v : img.data) v = (v - lo) / span;
    return img;
}

void synth_texture_corpus(const std::string& out_dir, int n_images, int size, std::uint64_t seed) {
    fs::create_directories(out_dir);
    for (int i = 0; i < n_images; ++i) {
        Rng rng(Rng::mix(seed, 0x9u, static_cast<std::uint64_t>(i)));
        const ImageGray img = render_texture(size, rng);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "texture%04d.png", i);
        save_image_png((fs::path(out_dir) / buf).string(), img);
    }
}

} // namespace scralign
