#ifndef GPR_ONECLASS_HPP
#define GPR_ONECLASS_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpr/featnet.hpp"

namespace gpr {

// Support vector data description: the smallest Gaussian-kernel hypersphere
// around the training features, with slack controlled by C. Solved in the
// dual  max sum_i a_i K_ii - sum_ij a_i a_j K_ij,  sum a = 1, 0 <= a <= C
// by pairwise coordinate ascent (SMO) to a KKT tolerance of 1e-6.
struct SvddModel {
    std::vector<std::vector<double>> support; // features with alpha > 0
    std::vector<double> alpha;                // matching multipliers
    double c = 0.1;
    double gamma = 1.0;     // K(x,y) = exp(-gamma ||x-y||^2)
    double r_squared = 0.0;
    double self_term = 0.0; // sum_ij a_i a_j K(x_i, x_j)
};

struct SvddOptions {
    double kkt_tol = 1e-6;
    std::int64_t max_iters = 2'000'000;
};

// gamma <= 0 selects the median heuristic: gamma = 1/(2 * median^2) of the
// pairwise training distances. Requires n >= 1 and C >= 1/n.
SvddModel svdd_train(const std::vector<std::vector<double>>& features, double c, double gamma,
                     const SvddOptions& opts = {});

// ||phi(x) - a||^2 = K(x,x) - 2 sum_i a_i K(x_i,x) + self_term, >= 0.
double svdd_distance2(const SvddModel& model, const std::vector<double>& x);

// Membership test: inside (or on) the sphere within the solver tolerance.
bool svdd_accepts(const SvddModel& model, const std::vector<double>& x);

double median_pairwise_distance(const std::vector<std::vector<double>>& features);

// Tuning for the incremental bank.
struct OneClassParams {
    double c = 0.1;               // slack trade-off for the normal class
    double gamma = 0.0;           // 0 = median heuristic
    int spawn_threshold = 8;      // minimum cohesive rejects before a new class
    double cohesion_radius = 0.0; // 0 = auto: radius_scale x bootstrap median distance
    double radius_scale = 3.0;
    double spawned_c = 1.0;       // spawned classes enclose their cluster
    // A sphere fit to spawn_threshold samples hugs their hull. Spawned
    // classes therefore use a widened kernel and accept any point whose
    // kernel similarity reaches spawn_boundary_frac of the training
    // boundary's similarity; the threshold stays strictly below the
    // far-point saturation distance, so distant clusters remain rejected.
    double spawn_gamma_scale = 0.25;
    double spawn_boundary_frac = 0.5;
};

struct SpawnEvent {
    int class_id;
    std::vector<std::int64_t> member_tags; // tags of every absorbed buffer entry
};

// Ordered collection of one-class models; index 0 is always the normal
// class. Rejected features accumulate in a buffer; once a cohesive group of
// spawn_threshold of them exists, it becomes a new class. classify() is
// const and thread-safe; absorb() mutates and must be externally serialized.
class ClassBank {
public:
    ClassBank() = default;

    // trains class 0 from the bootstrap features
    static ClassBank bootstrap(const std::vector<std::vector<double>>& normal_features,
                               const OneClassParams& params);

    // first classifier accepting x, or -1
    int classify(const std::vector<double>& x) const;

    // x must have been rejected by every classifier. The tag travels with
    // the feature so callers can re-label absorbed decisions after a spawn.
    std::optional<SpawnEvent> absorb(const std::vector<double>& x, std::int64_t tag);

    int num_classes() const { return static_cast<int>(classifiers_.size()); }
    const SvddModel& classifier(int id) const { return classifiers_.at(id); }
    std::size_t buffer_size() const { return buffer_.size(); }
    double cohesion_radius() const;
    const OneClassParams& params() const { return params_; }

    // JSON manifest + f64 coefficient blobs in one file pair
    void save(const std::string& manifest_path, const std::string& blob_path) const;
    static ClassBank load(const std::string& manifest_path, const std::string& blob_path);

private:
    struct BufferEntry {
        std::vector<double> x;
        std::int64_t tag;
    };
    std::vector<SvddModel> classifiers_;
    std::vector<BufferEntry> buffer_;
    OneClassParams params_;
    double base_radius_ = 0.0; // median pairwise distance of the bootstrap features
};

// Projection of features onto the top three principal axes.
struct Pca3Result {
    std::vector<std::array<double, 3>> points;
    std::array<double, 3> eigenvalues = {0, 0, 0};    // descending
    std::vector<std::array<double, 3>> axes;          // D rows; columns are the 3 axes
    double discarded_variance = 0.0;                  // sum of the remaining eigenvalues
    bool rank_deficient = false;                      // fewer than 3 positive modes
};

Pca3Result pca3(const std::vector<FeatureVector>& features);

void write_pca_csv(const Pca3Result& pca, const std::vector<int>& class_ids,
                   const std::string& path);

}  // namespace gpr

#endif
