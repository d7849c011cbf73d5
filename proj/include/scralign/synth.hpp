#pragma once

#include <cstdint>
#include <string>

#include "scralign/image.hpp"
#include "scralign/rng.hpp"
#include "scralign/shape.hpp"

namespace scralign {

// Procedurally rendered face images with exact 49-point annotations, used as
// the desk-scale training/evaluation corpus. Subjects share per-subject face
// geometry; images vary pose, lighting and expression, so subject-disjoint
// splits are meaningful.

struct SynthFaceConfig {
    int subjects = 50;
    int per_subject = 4;
    int image_size = 256;
    int subject_offset = 0; // ids start at subj<offset>
    std::uint64_t seed = 7;
};

struct FaceSample {
    ImageGray image;
    Shape landmarks; // canonical 49-point scheme order
    std::string id;  // "subj012_im3"
};

FaceSample render_face_sample(const SynthFaceConfig& cfg, int subject, int variant);

// Writes <out_dir>/images/*.png and <out_dir>/annotations/*.pts.
void synth_face_dataset(const std::string& out_dir, const SynthFaceConfig& cfg);

// Multi-scale value noise plus random soft shapes; generic (non-face) image
// material for descriptor-map training.
ImageGray render_texture(int size, Rng& rng);

void synth_texture_corpus(const std::string& out_dir, int n_images, int size, std::uint64_t seed);

} // namespace scralign
