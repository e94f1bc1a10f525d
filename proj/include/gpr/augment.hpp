#ifndef GPR_AUGMENT_HPP
#define GPR_AUGMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gpr/bscan.hpp"
#include "gpr/rng.hpp"
#include "gpr/wavelet.hpp"

namespace gpr {

// Augmentation settings for building the fine-tuning corpus. The time axis
// carries physical meaning, so nothing here ever flips or stretches the
// vertical axis; simulated content may be scaled horizontally and flipped
// left-right.
struct AugmentConfig {
    double noise_sigma_frac = 0.05; // noise std as a fraction of image std
    double mix_lambda_lo = 0.3;
    double mix_lambda_hi = 0.7;
    double scale_lo = 0.6; // horizontal scale factors for simulated content
    double scale_hi = 1.4;
    int target_count = 800; // images per class
    std::uint64_t seed = 0;
};

void validate(const AugmentConfig& cfg);

// Adds zero-mean Gaussian noise with the given std; deterministic per seed.
BScan noise_inject(const BScan& img, double sigma, std::uint64_t seed);

// lambda*a + (1-lambda)*b over equal shapes, lambda in [0,1].
BScan image_mix(const BScan& a, const BScan& b, double lambda);

// One placement of simulated content into a normal frame: the simulated
// segment is horizontally rescaled (and optionally mirrored), embedded at
// `offset_cols` on a zero canvas of the normal's shape, then wavelet-fused
// with the normal segment.
BScan place_and_fuse(const BScan& normal, const BScan& simulated, double scale,
                     int offset_cols, bool hflip, DetailMerge mode = DetailMerge::AbsMax);

struct FusionVariant {
    BScan image;
    double scale = 1.0;
    int offset_cols = 0;
    bool hflip = false;
};

// Samples `count` placements. Placements whose content would land fully
// outside the frame are skipped and counted in *skipped.
std::vector<FusionVariant> scaled_fusion_variants(const BScan& normal, const BScan& simulated,
                                                  const AugmentConfig& cfg, int count, Rng& rng,
                                                  int* skipped = nullptr,
                                                  DetailMerge mode = DetailMerge::AbsMax);

// Assembled fine-tuning corpus: class 0 = normal, class 1 = synthetic
// anomaly. One manifest line per image records its provenance.
struct TrainingCorpus {
    std::vector<BScan> images;
    std::vector<int> labels;
    std::vector<std::string> manifest; // JSON lines
};

// Builds target_count images per class from the given bases: normals are
// noise-injected and mixed within class; anomalies are scaled fusion
// variants of (normal base, simulated base) pairs. Reproducible from
// (inputs, cfg).
TrainingCorpus build_training_corpus(const std::vector<BScan>& normal_bases,
                                     const std::vector<BScan>& simulated_bases,
                                     const AugmentConfig& cfg,
                                     DetailMerge mode = DetailMerge::AbsMax);

void write_manifest(const TrainingCorpus& corpus, const std::string& path);

}  // namespace gpr

#endif
