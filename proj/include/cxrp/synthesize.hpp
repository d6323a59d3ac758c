#pragma once

#include <cstdint>
#include <string>

namespace cxrp::app {

// Desk-scale synthetic cohort: lung-shaped masks over textured images plus a
// clinical table with missing cells. `image_signal` scales a class-dependent
// speckle-patch contrast inside the lungs; `clinical_signal` scales mean
// shifts and rate shifts of a few clinical columns. Zero signal makes the
// two classes identically distributed. Outputs are byte-identical for a
// given spec.
struct SynthesisSpec {
    int n_patients = 120;
    int n_centres = 6;
    double image_signal = 0.5;
    double clinical_signal = 0.5;
    double missing_rate = 0.08;
    int image_size = 224;
    std::uint64_t seed = 0;
};

struct SynthesisResult {
    std::string manifest_path;
    std::string clinical_path;
    std::string schema_path;
};

SynthesisResult cmd_synthesize(const SynthesisSpec& spec, const std::string& out_dir);

} // namespace cxrp::app
