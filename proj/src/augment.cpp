#include "gpr/augment.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace gpr {

void validate(const AugmentConfig& cfg) {
    if (cfg.noise_sigma_frac < 0.0) throw std::invalid_argument("augment: noise_sigma_frac must be >= 0");
    if (!(cfg.mix_lambda_lo > 0.0) || !(cfg.mix_lambda_hi <= 1.0) ||
        cfg.mix_lambda_lo > cfg.mix_lambda_hi)
        throw std::invalid_argument("augment: mix_lambda range must lie in (0,1]");
    if (!(cfg.scale_lo > 0.0) || cfg.scale_lo > cfg.scale_hi)
        throw std::invalid_argument("augment: scale range must be positive");
    if (cfg.target_count < 1) throw std::invalid_argument("augment: target_count must be >= 1");
}

BScan noise_inject(const BScan& img, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw std::invalid_argument("noise_inject: sigma must be >= 0");
    if (sigma == 0.0) return img;
    BScan out = img;
    Rng rng(seed);
    for (double& v : out.data) v += rng.normal(0.0, sigma);
    return out;
}

BScan image_mix(const BScan& a, const BScan& b, double lambda) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw std::invalid_argument("image_mix: shape mismatch");
    if (lambda < 0.0 || lambda > 1.0)
        throw std::invalid_argument("image_mix: lambda must be in [0,1]");
    BScan out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = lambda * a.data[i] + (1.0 - lambda) * b.data[i];
    return out;
}

namespace {

double image_std(const BScan& img) {
    double mean = 0.0;
    for (double v : img.data) mean += v;
    mean /= static_cast<double>(img.data.size());
    double var = 0.0;
    for (double v : img.data) var += (v - mean) * (v - mean);
    return std::sqrt(var / static_cast<double>(img.data.size()));
}

}  // namespace

BScan place_and_fuse(const BScan& normal, const BScan& simulated, double scale, int offset_cols,
                     bool hflip, DetailMerge mode) {
    if (!(scale > 0.0)) throw std::invalid_argument("place_and_fuse: scale must be > 0");
    // horizontal-only rescale; the time axis is left untouched
    const int scaled_cols = std::max(4, static_cast<int>(std::lround(simulated.cols * scale)));
    BScan content = (scaled_cols == simulated.cols)
                        ? simulated
                        : resize_bilinear(simulated, simulated.rows, scaled_cols);
    if (content.rows != normal.rows) content = resize_bilinear(content, normal.rows, content.cols);
    if (hflip) {
        for (int r = 0; r < content.rows; ++r) {
            double* row = content.row(r);
            for (int c = 0, d = content.cols - 1; c < d; ++c, --d) std::swap(row[c], row[d]);
        }
    }
    if (offset_cols + content.cols <= 0 || offset_cols >= normal.cols)
        throw std::out_of_range("place_and_fuse: content fully outside the frame");
    BScan canvas = make_scan(normal.rows, normal.cols, normal.dt_ns, normal.dx_m, normal.origin_x_m);
    const int c_lo = std::max(0, offset_cols);
    const int c_hi = std::min(normal.cols, offset_cols + content.cols);
    for (int r = 0; r < canvas.rows; ++r)
        for (int c = c_lo; c < c_hi; ++c) canvas.at(r, c) = content.at(r, c - offset_cols);
    return fuse(normal, canvas, mode);
}

std::vector<FusionVariant> scaled_fusion_variants(const BScan& normal, const BScan& simulated,
                                                  const AugmentConfig& cfg, int count, Rng& rng,
                                                  int* skipped, DetailMerge mode) {
    validate(cfg);
    std::vector<FusionVariant> out;
    int skip_count = 0;
    int attempts = 0;
    const int max_attempts = count * 8 + 32;
    while (static_cast<int>(out.size()) < count && attempts < max_attempts) {
        ++attempts;
        const double scale = rng.uniform(cfg.scale_lo, cfg.scale_hi);
        const int scaled_cols = std::max(4, static_cast<int>(std::lround(simulated.cols * scale)));
        // keep at least a quarter of the content visible
        const int min_off = -(3 * scaled_cols) / 4;
        const int max_off = normal.cols - scaled_cols / 4;
        const int offset = rng.uniform_int(min_off, max_off);
        const bool hflip = rng.uniform() < 0.5;
        if (offset + scaled_cols <= 0 || offset >= normal.cols) {
            ++skip_count;
            continue;
        }
        FusionVariant v;
        v.scale = scale;
        v.offset_cols = offset;
        v.hflip = hflip;
        v.image = place_and_fuse(normal, simulated, scale, offset, hflip, mode);
        out.push_back(std::move(v));
    }
    if (skipped) *skipped = skip_count;
    return out;
}

TrainingCorpus build_training_corpus(const std::vector<BScan>& normal_bases,
                                     const std::vector<BScan>& simulated_bases,
                                     const AugmentConfig& cfg, DetailMerge mode) {
    validate(cfg);
    if (normal_bases.empty() || simulated_bases.empty())
        throw std::invalid_argument("build_training_corpus: need normal and simulated bases");
    TrainingCorpus corpus;
    corpus.images.reserve(2 * cfg.target_count);
    nlohmann::json j;

    // class 0: noise-injected normals, mixed within class
    Rng rng_n(Rng::mix(cfg.seed, 0xA0));
    for (int i = 0; i < cfg.target_count; ++i) {
        const int a = rng_n.uniform_int(0, static_cast<int>(normal_bases.size()) - 1);
        BScan img = normal_bases[a];
        std::string prov = "normal base=" + std::to_string(a);
        if (rng_n.uniform() < 0.5 && normal_bases.size() > 1) {
            const int b = rng_n.uniform_int(0, static_cast<int>(normal_bases.size()) - 1);
            const double lambda = rng_n.uniform(cfg.mix_lambda_lo, cfg.mix_lambda_hi);
            if (normal_bases[b].rows == img.rows && normal_bases[b].cols == img.cols) {
                img = image_mix(img, normal_bases[b], lambda);
                prov += " mix=" + std::to_string(b);
            }
        }
        const double sigma = cfg.noise_sigma_frac * image_std(img);
        const std::uint64_t noise_seed = Rng::mix(cfg.seed, 0xB000 + static_cast<std::uint64_t>(i));
        img = noise_inject(img, sigma, noise_seed);
        j = {{"index", static_cast<int>(corpus.images.size())},
             {"class", "normal"},
             {"provenance", prov}};
        corpus.images.push_back(std::move(img));
        corpus.labels.push_back(0);
        corpus.manifest.push_back(j.dump());
    }

    // class 1: scaled fusion variants of (normal, simulated) pairs
    Rng rng_a(Rng::mix(cfg.seed, 0xA1));
    int produced = 0;
    int guard = 0;
    while (produced < cfg.target_count && guard < cfg.target_count * 16 + 64) {
        ++guard;
        const int a = rng_a.uniform_int(0, static_cast<int>(normal_bases.size()) - 1);
        const int s = rng_a.uniform_int(0, static_cast<int>(simulated_bases.size()) - 1);
        int skipped = 0;
        auto variants = scaled_fusion_variants(normal_bases[a], simulated_bases[s], cfg, 1, rng_a,
                                               &skipped, mode);
        if (variants.empty()) continue;
        auto& v = variants.front();
        j = {{"index", static_cast<int>(corpus.images.size())},
             {"class", "synthetic_anomaly"},
             {"provenance", "normal base=" + std::to_string(a) + " sim=" + std::to_string(s)},
             {"scale", v.scale},
             {"offset_cols", v.offset_cols},
             {"hflip", v.hflip}};
        corpus.images.push_back(std::move(v.image));
        corpus.labels.push_back(1);
        corpus.manifest.push_back(j.dump());
        ++produced;
    }
    if (produced < cfg.target_count)
        throw std::runtime_error("build_training_corpus: could not reach target_count");
    return corpus;
}

void write_manifest(const TrainingCorpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest '" + path + "'");
    for (const auto& line : corpus.manifest) out << line << "\n";
}

}  // namespace gpr
