#pragma once

#include <string>
#include <vector>

#include "scralign/image.hpp"
#include "scralign/shape.hpp"

namespace scralign {

struct AnnotatedSample {
    ImageGray image;
    Shape ground_truth;
    std::string id; // file stem, e.g. "subj012_im3"
};

// One sample per image/annotation pair matched by file stem. Missing partners
// are reported to stderr and skipped; malformed annotations or out-of-bounds
// ground truth raise naming the offending file. Loading parallelizes per
// file; results are sorted by id.
std::vector<AnnotatedSample> load_annotated_set(const std::string& image_dir,
                                                const std::string& annotation_dir,
                                                const LandmarkScheme& scheme);

// Subject id used for subject-disjoint splits: the id up to its last '_'
// (the whole id when there is none).
std::string subject_of(const std::string& sample_id);

// Scheme config file, e.g.:
//   { "P": 49,
//     "groups": [{"name": "eyebrows", "begin": 0, "size": 10}, ...],
//     "interocular": [19, 28] }
LandmarkScheme load_scheme_json(const std::string& path);

} // namespace scralign
