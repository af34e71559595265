#include "densify/scale_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "densify/errors.hpp"

namespace densify {

namespace {

constexpr double kSigmaFactor = 1.4826;

/// Upper median: element at index floor(n/2) of the sorted sequence.
double upper_median_inplace(std::vector<double>& v) {
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<ptrdiff_t>(mid), v.end());
    return v[mid];
}

}  // namespace

void EstimatorConfig::validate() const {
    if (!(t > 0.0)) throw ValidationError("EstimatorConfig.t must be positive");
    if (min_pairs < 3) {
        throw ValidationError("EstimatorConfig.min_pairs must be at least 3");
    }
    if (irls_max_iter < 1) {
        throw ValidationError("EstimatorConfig.irls_max_iter must be at least 1");
    }
    if (!(irls_tol >= 0.0)) {
        throw ValidationError("EstimatorConfig.irls_tol must be non-negative");
    }
}

std::vector<PointPair> build_point_pairs(const Submap& m, int64_t kf_id,
                                         const DepthMap& d) {
    const Keyframe* kf = m.find_keyframe(kf_id);
    if (kf == nullptr) {
        throw ValidationError("build_point_pairs: unknown keyframe id " +
                              std::to_string(kf_id));
    }
    std::vector<PointPair> pairs;
    for (const auto& p : observed_points(m, kf_id)) {
        const Vec3 x_cam = kf->pose_world_to_cam.apply(p.position_world);
        const auto px = project(kf->camera, x_cam);
        if (!px) continue;
        const auto depth = depth_lookup(d, *px);
        if (!depth) continue;
        pairs.push_back({p.id, x_cam, unproject(kf->camera, *px, *depth)});
    }
    return pairs;  // observed_points already yields ascending point ids
}

double scale_proposal(const PointPair& p) {
    const double dn = p.x_cam_depth.norm();
    if (!(dn > 0.0) || !std::isfinite(dn)) {
        throw ValidationError("scale_proposal: degenerate zero-norm depth point");
    }
    return p.x_cam.norm() / dn;
}

std::pair<double, double> lmeds_scale(const std::vector<PointPair>& pairs,
                                      const EstimatorConfig& cfg) {
    const size_t n = pairs.size();
    if (n < cfg.min_pairs || n < 2) {
        throw ValidationError("lmeds_scale: " + std::to_string(n) +
                              " pairs, need at least " +
                              std::to_string(std::max<size_t>(cfg.min_pairs, 2)));
    }

    std::vector<size_t> proposal_idx(n);
    std::iota(proposal_idx.begin(), proposal_idx.end(), size_t{0});
    if (cfg.max_proposals > 0 && cfg.max_proposals < n) {
        std::mt19937_64 rng(cfg.rng_seed);
        std::shuffle(proposal_idx.begin(), proposal_idx.end(), rng);
        proposal_idx.resize(cfg.max_proposals);
    }

    double best_median = std::numeric_limits<double>::infinity();
    double best_scale = 0.0;
    int64_t best_point_id = std::numeric_limits<int64_t>::max();
    std::vector<double> residuals;
    residuals.reserve(n - 1);

    for (size_t j : proposal_idx) {
        const double s = scale_proposal(pairs[j]);
        residuals.clear();
        for (size_t k = 0; k < n; ++k) {
            if (k == j) continue;
            residuals.push_back((pairs[k].x_cam - s * pairs[k].x_cam_depth)
                                    .squaredNorm());
        }
        const double med = upper_median_inplace(residuals);
        if (med < best_median ||
            (med == best_median && pairs[j].point_id < best_point_id)) {
            best_median = med;
            best_scale = s;
            best_point_id = pairs[j].point_id;
        }
    }
    return {best_scale, best_median};
}

std::pair<double, std::vector<uint8_t>> classify_inliers(
    const std::vector<PointPair>& pairs, double s_lmeds, double min_median,
    const EstimatorConfig& cfg) {
    if (min_median < 0.0) {
        throw ValidationError("classify_inliers: negative median");
    }
    const double sigma = kSigmaFactor * std::sqrt(min_median);
    const double threshold = cfg.t * sigma;
    std::vector<uint8_t> mask(pairs.size(), 0);
    for (size_t k = 0; k < pairs.size(); ++k) {
        const double r = (pairs[k].x_cam - s_lmeds * pairs[k].x_cam_depth).norm();
        mask[k] = r <= threshold ? 1 : 0;
    }
    return {sigma, std::move(mask)};
}

double huber_objective(const std::vector<PointPair>& pairs,
                       const std::vector<uint8_t>& inlier_mask, double s,
                       double delta) {
    double obj = 0.0;
    for (size_t k = 0; k < pairs.size(); ++k) {
        if (!inlier_mask[k]) continue;
        const double r = (pairs[k].x_cam - s * pairs[k].x_cam_depth).norm();
        if (delta <= 0.0 || r <= delta) {
            obj += 0.5 * r * r;
        } else {
            obj += delta * (r - 0.5 * delta);
        }
    }
    return obj;
}

std::pair<double, int> refine_scale(const std::vector<PointPair>& pairs,
                                    const std::vector<uint8_t>& inlier_mask,
                                    double s_init, double sigma,
                                    const EstimatorConfig& cfg) {
    if (pairs.size() != inlier_mask.size()) {
        throw ValidationError("refine_scale: mask size mismatch");
    }
    size_t n_inliers = 0;
    for (uint8_t b : inlier_mask) n_inliers += b;
    if (n_inliers == 0) {
        throw ValidationError("refine_scale: no inliers");
    }

    const double delta = cfg.t * sigma;  // sigma == 0 -> plain least squares
    double s = s_init;
    int updates = 0;
    for (int iter = 0; iter < cfg.irls_max_iter; ++iter) {
        double num = 0.0, den = 0.0;
        for (size_t k = 0; k < pairs.size(); ++k) {
            if (!inlier_mask[k]) continue;
            double w = 1.0;
            if (delta > 0.0) {
                const double r =
                    (pairs[k].x_cam - s * pairs[k].x_cam_depth).norm();
                if (r > delta) w = delta / r;
            }
            num += w * pairs[k].x_cam.dot(pairs[k].x_cam_depth);
            den += w * pairs[k].x_cam_depth.squaredNorm();
        }
        if (!(den > 0.0) || !std::isfinite(num)) {
            throw ValidationError("refine_scale: non-finite normal equations");
        }
        const double s_new = num / den;
        if (!std::isfinite(s_new) || !(s_new > 0.0)) {
            throw ValidationError("refine_scale: scale left (0, inf)");
        }
        const double rel = std::abs(s_new - s) /
                           std::max(std::abs(s), std::numeric_limits<double>::min());
        s = s_new;
        if (rel < cfg.irls_tol) break;
        ++updates;
    }
    return {s, updates};
}

std::optional<ScaleEstimate> estimate_keyframe_scale(const Submap& m,
                                                     int64_t kf_id,
                                                     const DepthMap& d,
                                                     const EstimatorConfig& cfg) {
    cfg.validate();
    const auto pairs = build_point_pairs(m, kf_id, d);
    if (pairs.size() < cfg.min_pairs || pairs.size() < 2) {
        return std::nullopt;
    }
    ScaleEstimate est;
    est.kf_id = kf_id;
    est.n_pairs = pairs.size();
    std::tie(est.s_lmeds, est.min_median) = lmeds_scale(pairs, cfg);
    std::tie(est.sigma, est.inlier_mask) =
        classify_inliers(pairs, est.s_lmeds, est.min_median, cfg);
    est.n_inliers = 0;
    for (uint8_t b : est.inlier_mask) est.n_inliers += b;
    if (est.n_inliers == 0) {
        // Can only happen on corrupt data; treat like a skipped keyframe.
        return std::nullopt;
    }
    std::tie(est.s_refined, est.iterations) =
        refine_scale(pairs, est.inlier_mask, est.s_lmeds, est.sigma, cfg);
    return est;
}

}  // namespace densify
