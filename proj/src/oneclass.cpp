#include "gpr/oneclass.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <json.hpp>

#include "gpr/parallel.hpp"

namespace gpr {

namespace {

// accepts up to the KKT tolerance the solver was run at
constexpr double kAcceptEps = 1e-6;
constexpr double kAlphaEps = 1e-10;

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

double median_pairwise_distance(const std::vector<std::vector<double>>& features) {
    const std::size_t n = features.size();
    if (n < 2) return 0.0;
    std::vector<double> d2;
    d2.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) d2.push_back(sq_dist(features[i], features[j]));
    auto mid = d2.begin() + d2.size() / 2;
    std::nth_element(d2.begin(), mid, d2.end());
    return std::sqrt(*mid);
}

SvddModel svdd_train(const std::vector<std::vector<double>>& features, double c, double gamma,
                     const SvddOptions& opts) {
    const std::size_t n = features.size();
    if (n == 0) throw std::invalid_argument("svdd_train: no features");
    for (const auto& f : features)
        if (f.size() != features[0].size())
            throw std::invalid_argument("svdd_train: inconsistent feature dimensions");
    if (c < 1.0 / static_cast<double>(n) - 1e-12)
        throw std::invalid_argument("svdd_train: infeasible C < 1/n (sum alpha = 1 cannot hold)");
    if (gamma <= 0.0) {
        const double med = median_pairwise_distance(features);
        gamma = med > 1e-150 ? 1.0 / (2.0 * med * med) : 1.0;
    }

    // dense Gram; bootstrap sets are a few hundred points
    std::vector<double> gram(n * n);
#pragma omp parallel for schedule(static) num_threads(par::threads())
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        for (std::size_t j = 0; j < n; ++j)
            gram[i * n + j] = std::exp(-gamma * sq_dist(features[i], features[j]));

    // minimize a^T K a over the box-constrained simplex
    std::vector<double> alpha(n, 1.0 / static_cast<double>(n));
    std::vector<double> g(n, 0.0); // 2 K alpha
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += gram[i * n + j] * alpha[j];
        g[i] = 2.0 * s;
    }

    double violation = 0.0;
    if (n > 1) {
        std::int64_t iter = 0;
        while (true) {
            int up = -1, dn = -1;
            double gmax = -std::numeric_limits<double>::infinity();
            double gmin = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                if (alpha[i] > kAlphaEps && g[i] > gmax) {
                    gmax = g[i];
                    up = static_cast<int>(i);
                }
                if (alpha[i] < c - kAlphaEps && g[i] < gmin) {
                    gmin = g[i];
                    dn = static_cast<int>(i);
                }
            }
            violation = (up >= 0 && dn >= 0) ? gmax - gmin : 0.0;
            if (violation <= opts.kkt_tol || up < 0 || dn < 0 || up == dn) break;
            if (++iter > opts.max_iters)
                throw std::runtime_error("svdd_train: no convergence after iteration cap, KKT violation " +
                                         std::to_string(violation));
            const double eta = gram[up * n + up] + gram[dn * n + dn] - 2.0 * gram[up * n + dn];
            double t = (eta > 1e-300) ? (g[up] - g[dn]) / (2.0 * eta)
                                      : std::numeric_limits<double>::infinity();
            t = std::min(t, alpha[up]);
            t = std::min(t, c - alpha[dn]);
            alpha[up] -= t;
            alpha[dn] += t;
            for (std::size_t j = 0; j < n; ++j)
                g[j] += 2.0 * t * (gram[dn * n + j] - gram[up * n + j]);
        }
    }

    SvddModel m;
    m.c = c;
    m.gamma = gamma;
    double self = 0.0;
    for (std::size_t i = 0; i < n; ++i) self += alpha[i] * g[i];
    self *= 0.5;
    m.self_term = self;

    // distances of the training points via the cached gradient:
    // dist2_i = K_ii - 2 (K a)_i + self = K_ii - g_i + self
    std::vector<double> dist2(n);
    for (std::size_t i = 0; i < n; ++i) dist2[i] = gram[i * n + i] - g[i] + self;

    // radius from the on-sphere support vectors (0 < alpha < C); if every
    // support vector sits at the bound, fall back to the farthest of them
    double r2 = -1.0;
    int boundary = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (alpha[i] > kAlphaEps && alpha[i] < c - kAlphaEps) {
            r2 = (r2 < 0 ? 0.0 : r2) + dist2[i];
            ++boundary;
        }
    if (boundary > 0) {
        r2 /= boundary;
    } else {
        r2 = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (alpha[i] > kAlphaEps) r2 = std::max(r2, dist2[i]);
    }
    m.r_squared = std::max(r2, 0.0);

    for (std::size_t i = 0; i < n; ++i)
        if (alpha[i] > kAlphaEps) {
            m.support.push_back(features[i]);
            m.alpha.push_back(alpha[i]);
        }
    return m;
}

double svdd_distance2(const SvddModel& model, const std::vector<double>& x) {
    if (model.support.empty()) throw std::invalid_argument("svdd_distance2: untrained model");
    double cross = 0.0;
    for (std::size_t i = 0; i < model.support.size(); ++i)
        cross += model.alpha[i] * std::exp(-model.gamma * sq_dist(model.support[i], x));
    const double d2 = 1.0 - 2.0 * cross + model.self_term;
    return d2 > 0.0 ? d2 : 0.0;
}

bool svdd_accepts(const SvddModel& model, const std::vector<double>& x) {
    return svdd_distance2(model, x) <= model.r_squared + kAcceptEps;
}

// ---- ClassBank -------------------------------------------------------------

ClassBank ClassBank::bootstrap(const std::vector<std::vector<double>>& normal_features,
                               const OneClassParams& params) {
    ClassBank bank;
    bank.params_ = params;
    bank.base_radius_ = median_pairwise_distance(normal_features);
    bank.classifiers_.push_back(svdd_train(normal_features, params.c, params.gamma));
    return bank;
}

int ClassBank::classify(const std::vector<double>& x) const {
    for (std::size_t i = 0; i < classifiers_.size(); ++i)
        if (svdd_accepts(classifiers_[i], x)) return static_cast<int>(i);
    return -1;
}

double ClassBank::cohesion_radius() const {
    if (params_.cohesion_radius > 0.0) return params_.cohesion_radius;
    return params_.radius_scale * base_radius_;
}

namespace {

// connected components under "distance <= radius" single linkage
std::vector<int> link_components(const std::vector<std::vector<double>>& xs, double radius) {
    const int n = static_cast<int>(xs.size());
    std::vector<int> comp(n, -1);
    int next = 0;
    std::vector<int> stack;
    const double r2 = radius * radius;
    for (int s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        comp[s] = next;
        stack.push_back(s);
        while (!stack.empty()) {
            const int i = stack.back();
            stack.pop_back();
            for (int j = 0; j < n; ++j)
                if (comp[j] < 0 && sq_dist(xs[i], xs[j]) <= r2) {
                    comp[j] = next;
                    stack.push_back(j);
                }
        }
        ++next;
    }
    return comp;
}

double pairwise_quantile(const std::vector<std::vector<double>>& xs, double q) {
    std::vector<double> d2;
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = i + 1; j < xs.size(); ++j) d2.push_back(sq_dist(xs[i], xs[j]));
    if (d2.empty()) return 0.0;
    const std::size_t idx = static_cast<std::size_t>(q * static_cast<double>(d2.size() - 1) + 0.5);
    auto mid = d2.begin() + std::min(idx, d2.size() - 1);
    std::nth_element(d2.begin(), mid, d2.end());
    return std::sqrt(*mid);
}

}  // namespace

std::optional<SpawnEvent> ClassBank::absorb(const std::vector<double>& x, std::int64_t tag) {
    buffer_.push_back({x, tag});
    if (static_cast<int>(buffer_.size()) < params_.spawn_threshold) return std::nullopt;

    const double radius = cohesion_radius();
    std::vector<std::vector<double>> xs;
    xs.reserve(buffer_.size());
    for (const auto& e : buffer_) xs.push_back(e.x);

    // candidate group: the largest single-linkage component (earliest one on
    // ties, which keeps the policy deterministic)
    const std::vector<int> comp = link_components(xs, radius);
    const int ncomp = 1 + *std::max_element(comp.begin(), comp.end());
    std::vector<int> count(ncomp, 0);
    for (int c : comp) ++count[c];
    const int best = static_cast<int>(std::max_element(count.begin(), count.end()) - count.begin());
    if (count[best] < params_.spawn_threshold) return std::nullopt;

    std::vector<std::vector<double>> members;
    std::vector<std::size_t> member_idx;
    for (std::size_t i = 0; i < buffer_.size(); ++i)
        if (comp[i] == best) {
            members.push_back(buffer_[i].x);
            member_idx.push_back(i);
        }
    // cohesion gate: 90th percentile of pairwise distances within the group
    if (pairwise_quantile(members, 0.90) > radius) return std::nullopt;

    const double med = median_pairwise_distance(members);
    const double gamma_spawn =
        med > 1e-150 ? params_.spawn_gamma_scale / (2.0 * med * med) : 1.0;
    SvddModel model = svdd_train(members, params_.spawned_c, gamma_spawn);
    const double saturation = 1.0 + model.self_term; // dist2 of an infinitely far point
    model.r_squared = saturation - params_.spawn_boundary_frac * (saturation - model.r_squared);
    classifiers_.push_back(std::move(model));
    const int new_id = static_cast<int>(classifiers_.size()) - 1;

    SpawnEvent ev;
    ev.class_id = new_id;
    std::vector<char> absorbed(buffer_.size(), 0);
    for (std::size_t i : member_idx) absorbed[i] = 1;
    // remaining rejects that the new sphere already covers join it too
    for (std::size_t i = 0; i < buffer_.size(); ++i)
        if (!absorbed[i] && svdd_accepts(classifiers_[new_id], buffer_[i].x)) absorbed[i] = 1;
    std::vector<BufferEntry> rest;
    for (std::size_t i = 0; i < buffer_.size(); ++i) {
        if (absorbed[i])
            ev.member_tags.push_back(buffer_[i].tag);
        else
            rest.push_back(std::move(buffer_[i]));
    }
    buffer_ = std::move(rest);
    return ev;
}

void ClassBank::save(const std::string& manifest_path, const std::string& blob_path) const {
    nlohmann::json j;
    j["version"] = 1;
    j["params"] = {{"C", params_.c},
                   {"gamma", params_.gamma},
                   {"spawn_threshold", params_.spawn_threshold},
                   {"cohesion_radius", params_.cohesion_radius},
                   {"radius_scale", params_.radius_scale},
                   {"spawned_C", params_.spawned_c},
                   {"spawn_gamma_scale", params_.spawn_gamma_scale},
                   {"spawn_boundary_frac", params_.spawn_boundary_frac}};
    j["base_radius"] = base_radius_;
    nlohmann::json classes = nlohmann::json::array();
    std::ofstream blob(blob_path, std::ios::binary | std::ios::trunc);
    if (!blob) throw std::runtime_error("cannot write bank blob '" + blob_path + "'");
    std::size_t offset = 0;
    for (const auto& m : classifiers_) {
        const std::size_t dim = m.support.empty() ? 0 : m.support[0].size();
        nlohmann::json jc;
        jc["c"] = m.c;
        jc["gamma"] = m.gamma;
        jc["r_squared"] = m.r_squared;
        jc["self_term"] = m.self_term;
        jc["n_support"] = m.support.size();
        jc["dim"] = dim;
        jc["blob_offset"] = offset;
        classes.push_back(jc);
        for (std::size_t i = 0; i < m.support.size(); ++i) {
            blob.write(reinterpret_cast<const char*>(&m.alpha[i]), sizeof(double));
            blob.write(reinterpret_cast<const char*>(m.support[i].data()),
                       static_cast<std::streamsize>(dim * sizeof(double)));
            offset += sizeof(double) * (dim + 1);
        }
    }
    j["classes"] = classes;
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write bank manifest '" + manifest_path + "'");
    out << j.dump(2) << "\n";
}

ClassBank ClassBank::load(const std::string& manifest_path, const std::string& blob_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open bank manifest '" + manifest_path + "'");
    nlohmann::json j = nlohmann::json::parse(in);
    ClassBank bank;
    const auto& p = j.at("params");
    bank.params_.c = p.at("C").get<double>();
    bank.params_.gamma = p.at("gamma").get<double>();
    bank.params_.spawn_threshold = p.at("spawn_threshold").get<int>();
    bank.params_.cohesion_radius = p.at("cohesion_radius").get<double>();
    bank.params_.radius_scale = p.at("radius_scale").get<double>();
    bank.params_.spawned_c = p.at("spawned_C").get<double>();
    bank.params_.spawn_gamma_scale = p.at("spawn_gamma_scale").get<double>();
    bank.params_.spawn_boundary_frac = p.at("spawn_boundary_frac").get<double>();
    bank.base_radius_ = j.at("base_radius").get<double>();
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw std::runtime_error("cannot open bank blob '" + blob_path + "'");
    for (const auto& jc : j.at("classes")) {
        SvddModel m;
        m.c = jc.at("c").get<double>();
        m.gamma = jc.at("gamma").get<double>();
        m.r_squared = jc.at("r_squared").get<double>();
        m.self_term = jc.at("self_term").get<double>();
        const std::size_t nsup = jc.at("n_support").get<std::size_t>();
        const std::size_t dim = jc.at("dim").get<std::size_t>();
        for (std::size_t i = 0; i < nsup; ++i) {
            double a = 0.0;
            std::vector<double> v(dim);
            blob.read(reinterpret_cast<char*>(&a), sizeof(double));
            blob.read(reinterpret_cast<char*>(v.data()),
                      static_cast<std::streamsize>(dim * sizeof(double)));
            if (!blob) throw std::runtime_error("truncated bank blob '" + blob_path + "'");
            m.alpha.push_back(a);
            m.support.push_back(std::move(v));
        }
        bank.classifiers_.push_back(std::move(m));
    }
    return bank;
}

// ---- PCA --------------------------------------------------------------------

Pca3Result pca3(const std::vector<FeatureVector>& features) {
    if (features.size() < 3) throw std::invalid_argument("pca3: needs at least 3 features");
    const int n = static_cast<int>(features.size());
    const int d = static_cast<int>(features[0].values.size());
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(features[i].values.size()) != d)
            throw std::invalid_argument("pca3: inconsistent feature dimensions");
        for (int j = 0; j < d; ++j) x(i, j) = features[i].values[j];
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw std::runtime_error("pca3: eigendecomposition failed");

    Pca3Result out;
    const auto& evals = es.eigenvalues();   // ascending
    const auto& evecs = es.eigenvectors();
    const int k = std::min(3, d);
    Eigen::MatrixXd axes = Eigen::MatrixXd::Zero(d, 3);
    for (int a = 0; a < k; ++a) {
        Eigen::VectorXd v = evecs.col(d - 1 - a);
        // deterministic sign: the largest-magnitude entry is positive
        int arg = 0;
        for (int j = 1; j < d; ++j)
            if (std::fabs(v(j)) > std::fabs(v(arg))) arg = j;
        if (v(arg) < 0.0) v = -v;
        axes.col(a) = v;
        out.eigenvalues[a] = std::max(evals(d - 1 - a), 0.0);
    }
    int positive = 0;
    for (int a = 0; a < k; ++a)
        if (out.eigenvalues[a] > 1e-12) ++positive;
    out.rank_deficient = positive < 3;
    for (int a = 3; a <= d - 1; ++a) out.discarded_variance += std::max(evals(d - 1 - a), 0.0);

    const Eigen::MatrixXd proj = x * axes;
    out.points.resize(n);
    for (int i = 0; i < n; ++i) out.points[i] = {proj(i, 0), proj(i, 1), proj(i, 2)};
    out.axes.resize(d);
    for (int j = 0; j < d; ++j) out.axes[j] = {axes(j, 0), axes(j, 1), axes(j, 2)};
    return out;
}

void write_pca_csv(const Pca3Result& pca, const std::vector<int>& class_ids,
                   const std::string& path) {
    if (class_ids.size() != pca.points.size())
        throw std::invalid_argument("write_pca_csv: class ids do not match points");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "x,y,z,class\n";
    out.precision(17);
    for (std::size_t i = 0; i < pca.points.size(); ++i)
        out << pca.points[i][0] << "," << pca.points[i][1] << "," << pca.points[i][2] << ","
            << class_ids[i] << "\n";
}

}  // namespace gpr
