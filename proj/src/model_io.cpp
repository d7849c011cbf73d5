#include "scralign/model_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "model container assumes a little-endian host");

namespace scralign {

namespace {

constexpr char kCascadeMagic[8] = {'S', 'C', 'R', 'A', 'L', 'M', 'D', '1'};
constexpr char kBasiftMagic[8] = {'B', 'A', 'S', 'I', 'F', 'T', 'M', '1'};
constexpr std::uint32_t kFormatVersion = 1;

enum SectionTag : std::uint32_t {
    kSectionScheme = 1,
    kSectionMeanShape = 2,
    kSectionExtractor = 3,
    kSectionStages = 4,
};

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot write " + path);
    }
    template <typename T>
    void put(const T& v) {
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    void put_bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    void put_string(const std::string& s) {
        put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        put_bytes(s.data(), s.size());
    }
    std::uint64_t tell() { return static_cast<std::uint64_t>(out_.tellp()); }
    void seek(std::uint64_t pos) { out_.seekp(static_cast<std::streamoff>(pos)); }

private:
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw std::runtime_error("cannot read " + path);
    }
    template <typename T>
    T get() {
        T v;
        in_.read(reinterpret_cast<char*>(&v), sizeof(T));
        check();
        return v;
    }
    void get_bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        check();
    }
    std::string get_string() {
        const auto n = get<std::uint32_t>();
        std::string s(n, '\0');
        get_bytes(s.data(), n);
        return s;
    }
    void seek(std::uint64_t pos) { in_.seekg(static_cast<std::streamoff>(pos)); }

private:
    void check() {
        if (!in_) throw std::runtime_error("truncated or corrupt model file: " + path_);
    }
    std::ifstream in_;
    std::string path_;
};

void write_component(Writer& w, const BlockSparseComponent<float>& s) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.kind));
    w.put<std::int32_t>(s.out_dim);
    w.put<std::int32_t>(s.in_dim);
    w.put<std::int32_t>(static_cast<std::int32_t>(s.blocks.size()));
    for (const BlockSpec& b : s.blocks) {
        w.put<std::int32_t>(b.row_offset);
        w.put<std::int32_t>(b.col_offset);
        w.put<std::int32_t>(b.rows);
        w.put<std::int32_t>(b.cols);
    }
    for (const auto& payload : s.payloads)
        w.put_bytes(payload.data(), payload.size() * sizeof(float));
}

BlockSparseComponent<float> read_component(Reader& r) {
    BlockSparseComponent<float> s;
    s.kind = static_cast<ComponentKind>(r.get<std::uint32_t>());
    s.out_dim = r.get<std::int32_t>();
    s.in_dim = r.get<std::int32_t>();
    const int nb = r.get<std::int32_t>();
    s.blocks.resize(nb);
    for (BlockSpec& b : s.blocks) {
        b.row_offset = r.get<std::int32_t>();
        b.col_offset = r.get<std::int32_t>();
        b.rows = r.get<std::int32_t>();
        b.cols = r.get<std::int32_t>();
    }
    for (const BlockSpec& b : s.blocks) {
        std::vector<float> payload(static_cast<std::size_t>(b.rows) * b.cols);
        r.get_bytes(payload.data(), payload.size() * sizeof(float));
        s.payloads.push_back(std::move(payload));
    }
    s.validate();
    return s;
}

void write_basift_body(Writer& w, const BasiftModel& m) {
    w.put<std::int32_t>(m.d_sift);
    w.put<std::int32_t>(m.patch_side);
    w.put<std::int32_t>(m.dim);
    w.put_bytes(m.lut.data(), m.lut.size());
    w.put_bytes(m.sign_map.data(), m.sign_map.size());
}

BasiftModel read_basift_body(Reader& r) {
    BasiftModel m;
    m.d_sift = r.get<std::int32_t>();
    m.patch_side = r.get<std::int32_t>();
    m.dim = r.get<std::int32_t>();
    r.get_bytes(m.lut.data(), m.lut.size());
    m.sign_map.resize(static_cast<std::size_t>(m.d_sift) * m.dim);
    r.get_bytes(m.sign_map.data(), m.sign_map.size());
    m.validate();
    return m;
}

} // namespace

void save_cascade(const std::string& path, const CascadeModel& model) {
    model.validate();
    Writer w(path);
    w.put_bytes(kCascadeMagic, sizeof(kCascadeMagic));
    w.put<std::uint32_t>(kFormatVersion);
    const std::uint32_t n_sections = 4;
    w.put<std::uint32_t>(n_sections);
    const std::uint64_t table_pos = w.tell();
    for (std::uint32_t i = 0; i < n_sections; ++i) {
        w.put<std::uint32_t>(0);
        w.put<std::uint32_t>(0);
        w.put<std::uint64_t>(0);
        w.put<std::uint64_t>(0);
    }

    struct Entry {
        std::uint32_t tag;
        std::uint64_t offset, size;
    };
    std::vector<Entry> table;
    auto begin_section = [&](std::uint32_t tag) { table.push_back({tag, w.tell(), 0}); };
    auto end_section = [&] { table.back().size = w.tell() - table.back().offset; };

    begin_section(kSectionScheme);
    w.put<std::int32_t>(model.scheme.P);
    w.put<std::int32_t>(static_cast<std::int32_t>(model.scheme.groups.size()));
    for (const auto& g : model.scheme.groups) {
        w.put_string(g.name);
        w.put<std::int32_t>(g.begin);
        w.put<std::int32_t>(g.size);
    }
    w.put<std::int32_t>(model.scheme.iod_a);
    w.put<std::int32_t>(model.scheme.iod_b);
    end_section();

    begin_section(kSectionMeanShape);
    w.put<std::int32_t>(model.mean_shape.size());
    for (const Point& p : model.mean_shape.points) {
        w.put<double>(p.x);
        w.put<double>(p.y);
    }
    end_section();

    begin_section(kSectionExtractor);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(model.extractor.kind));
    w.put<std::int32_t>(model.extractor.patch_side);
    if (model.extractor.kind == ExtractorConfig::Kind::Basift)
        write_basift_body(w, model.extractor.basift);
    end_section();

    begin_section(kSectionStages);
    w.put<std::int32_t>(static_cast<std::int32_t>(model.stages.size()));
    for (const CascadeStage& s : model.stages) {
        w.put<std::uint32_t>(static_cast<std::uint32_t>(s.kind));
        if (s.kind == RegressorKind::Dense) {
            w.put<std::int32_t>(s.dense.rows);
            w.put<std::int32_t>(s.dense.cols);
            w.put_bytes(s.dense.data.data(), s.dense.data.size() * sizeof(float));
        } else {
            w.put<std::int32_t>(static_cast<std::int32_t>(s.composition.components.size()));
            for (const auto& comp : s.composition.components) write_component(w, comp);
        }
    }
    end_section();

    w.seek(table_pos);
    for (const Entry& e : table) {
        w.put<std::uint32_t>(e.tag);
        w.put<std::uint32_t>(0);
        w.put<std::uint64_t>(e.offset);
        w.put<std::uint64_t>(e.size);
    }
}

CascadeModel load_cascade(const std::string& path) {
    Reader r(path);
    char magic[8];
    r.get_bytes(magic, sizeof(magic));
    if (std::memcmp(magic, kCascadeMagic, sizeof(magic)) != 0)
        throw std::runtime_error("not a cascade model file: " + path);
    const auto version = r.get<std::uint32_t>();
    if (version != kFormatVersion)
        throw std::runtime_error("unsupported model format version in " + path);
    const auto n_sections = r.get<std::uint32_t>();
    struct Entry {
        std::uint32_t tag;
        std::uint64_t offset, size;
    };
    std::vector<Entry> table(n_sections);
    for (auto& e : table) {
        e.tag = r.get<std::uint32_t>();
        r.get<std::uint32_t>();
        e.offset = r.get<std::uint64_t>();
        e.size = r.get<std::uint64_t>();
    }
    auto find = [&](std::uint32_t tag) -> const Entry& {
        for (const Entry& e : table)
            if (e.tag == tag) return e;
        throw std::runtime_error("missing section in model file: " + path);
    };

    CascadeModel model;
    r.seek(find(kSectionScheme).offset);
    model.scheme.P = r.get<std::int32_t>();
    const int n_groups = r.get<std::int32_t>();
    for (int i = 0; i < n_groups; ++i) {
        LandmarkScheme::Group g;
        g.name = r.get_string();
        g.begin = r.get<std::int32_t>();
        g.size = r.get<std::int32_t>();
        model.scheme.groups.push_back(std::move(g));
    }
    model.scheme.iod_a = r.get<std::int32_t>();
    model.scheme.iod_b = r.get<std::int32_t>();

    r.seek(find(kSectionMeanShape).offset);
    const int P = r.get<std::int32_t>();
    model.mean_shape.points.resize(P);
    for (Point& p : model.mean_shape.points) {
        p.x = r.get<double>();
        p.y = r.get<double>();
    }

    r.seek(find(kSectionExtractor).offset);
    model.extractor.kind = static_cast<ExtractorConfig::Kind>(r.get<std::uint32_t>());
    model.extractor.patch_side = r.get<std::int32_t>();
    if (model.extractor.kind == ExtractorConfig::Kind::Basift)
        model.extractor.basift = read_basift_body(r);

    r.seek(find(kSectionStages).offset);
    const int n_stages = r.get<std::int32_t>();
    for (int k = 0; k < n_stages; ++k) {
        CascadeStage s;
        s.kind = static_cast<RegressorKind>(r.get<std::uint32_t>());
        if (s.kind == RegressorKind::Dense) {
            const int rows = r.get<std::int32_t>();
            const int cols = r.get<std::int32_t>();
            s.dense = DenseMatrix<float>(rows, cols);
            r.get_bytes(s.dense.data.data(), s.dense.data.size() * sizeof(float));
        } else {
            const int n_comp = r.get<std::int32_t>();
            for (int l = 0; l < n_comp; ++l) s.composition.components.push_back(read_component(r));
            s.composition.validate();
        }
        model.stages.push_back(std::move(s));
    }

    model.validate();
    return model;
}

void save_basift(const std::string& path, const BasiftModel& model) {
    model.validate();
    Writer w(path);
    w.put_bytes(kBasiftMagic, sizeof(kBasiftMagic));
    w.put<std::uint32_t>(kFormatVersion);
    write_basift_body(w, model);
}

BasiftModel load_basift(const std::string& path) {
    Reader r(path);
    char magic[8];
    r.get_bytes(magic, sizeof(magic));
    if (std::memcmp(magic, kBasiftMagic, sizeof(magic)) != 0)
        throw std::runtime_error("not a descriptor map file: " + path);
    if (r.get<std::uint32_t>() != kFormatVersion)
        throw std::runtime_error("unsupported format version in " + path);
    return read_basift_body(r);
}

std::vector<std::string> verify_cascade(const CascadeModel& model, std::uint64_t seed) {
    std::vector<std::string> failures;
    try {
        model.validate();
    } catch (const std::exception& ex) {
        failures.emplace_back(ex.what());
        return failures; // structure is broken; nothing below is meaningful
    }

    Rng rng(seed);

    for (std::size_t k = 0; k < model.stages.size(); ++k) {
        const CascadeStage& s = model.stages[k];
        if (s.kind == RegressorKind::Dense) {
            for (float v : s.dense.data)
                if (!std::isfinite(v)) {
                    failures.push_back("stage " + std::to_string(k + 1) +
                                       ": non-finite dense entry");
                    break;
                }
            continue;
        }
        // composed stage: nested apply must match the densified product
        const DenseMatrix<float> dense = densify(s.composition);
        for (int probe = 0; probe < 10; ++probe) {
            std::vector<float> x(s.composition.in_dim());
            for (float& v : x) v = static_cast<float>(rng.gaussian());
            const std::vector<float> yc = apply_composition(s.composition, x);
            const std::vector<float> yd = apply_dense_serial(dense, x);
            double max_rel = 0.0, norm = 0.0;
            for (std::size_t i = 0; i < yd.size(); ++i) norm = std::max(norm, std::fabs((double)yd[i]));
            for (std::size_t i = 0; i < yd.size(); ++i)
                max_rel = std::max(max_rel, std::fabs((double)yc[i] - yd[i]) /
                                                std::max(norm, 1e-20));
            if (max_rel > 1e-4) {
                failures.push_back("stage " + std::to_string(k + 1) +
                                   ": composed apply deviates from densified product (rel " +
                                   std::to_string(max_rel) + ")");
                break;
            }
        }
    }

    if (model.extractor.kind == ExtractorConfig::Kind::Basift) {
        const BasiftModel& bm = model.extractor.basift;
        for (int probe = 0; probe < 5; ++probe) {
            ImageGray patch(bm.patch_side, bm.patch_side);
            for (float& v : patch.data) v = static_cast<float>(rng.uniform());
            const auto fast = basift_accumulate(patch, bm);
            // dense integer product over the full one-hot vector
            const SparseBinaryFeature eta =
                encode_onehot(orientation_codes(gradients(patch)), bm.lut);
            std::vector<std::uint8_t> dense_eta(bm.dim, 0);
            for (std::int32_t j : eta.active) dense_eta[j] = 1;
            for (int d = 0; d < bm.d_sift; ++d) {
                std::int64_t acc = 0;
                for (int j = 0; j < bm.dim; ++j)
                    if (dense_eta[j])
                        acc += bm.sign_map[static_cast<std::size_t>(j) * bm.d_sift + d];
                if (acc != fast[d]) {
                    failures.push_back("descriptor map: addition path disagrees with dense product");
                    probe = 5;
                    break;
                }
            }
        }
    }
    return failures;
}

} // namespace scralign
