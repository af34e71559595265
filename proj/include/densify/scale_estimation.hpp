#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "densify/geometry.hpp"
#include "densify/map_model.hpp"

namespace densify {

/// One sparse point and its depth-map counterpart, both in the keyframe
/// camera frame. Norms taken from the camera center make the ratio a true
/// depth scale, independent of the world origin.
struct PointPair {
    int64_t point_id = 0;
    Vec3 x_cam = Vec3::Zero();        // map point
    Vec3 x_cam_depth = Vec3::Zero();  // unprojection of the depth read
};

struct EstimatorConfig {
    double t = 2.5;              // inlier threshold multiplier on sigma
    size_t max_proposals = 0;    // 0 = evaluate every proposal
    size_t min_pairs = 10;       // below this the keyframe is skipped
    int irls_max_iter = 20;
    double irls_tol = 1e-9;      // relative scale change
    uint64_t rng_seed = 0;       // proposal subsampling only

    void validate() const;  // t > 0, min_pairs >= 3, irls_max_iter >= 1
};

struct ScaleEstimate {
    int64_t kf_id = 0;
    double s_lmeds = 0.0;
    double min_median = 0.0;          // minimal median squared residual
    double sigma = 0.0;               // 1.4826 * sqrt(min_median)
    std::vector<uint8_t> inlier_mask; // parallel to the pair list
    double s_refined = 0.0;
    size_t n_pairs = 0;
    size_t n_inliers = 0;
    int iterations = 0;               // productive IRLS updates
};

/// Builds camera-frame pairs for every relevant map point of the keyframe.
/// Points projecting out of view or reading invalid depth are dropped.
/// Result is in ascending point-id order.
std::vector<PointPair> build_point_pairs(const Submap& m, int64_t kf_id,
                                         const DepthMap& d);

/// Norm ratio ||x_cam|| / ||x_cam_depth||. Throws on a zero-norm depth point.
double scale_proposal(const PointPair& p);

/// Least-median-of-squares over per-pair scale proposals. For each proposal
/// s_j the squared residuals ||x_k - s_j * x^d_k||^2 are ranked over all
/// pairs k != j; the proposal with the smallest upper median wins, ties
/// broken toward the smaller proposing point id. When cfg.max_proposals is
/// positive and fewer than the pair count, a seeded uniform subset of
/// proposals is evaluated (residuals still over all pairs).
/// Returns (s_lmeds, min_median). Throws ValidationError below min_pairs.
std::pair<double, double> lmeds_scale(const std::vector<PointPair>& pairs,
                                      const EstimatorConfig& cfg);

/// sigma = 1.4826 * sqrt(min_median); pair k is an inlier iff
/// ||x_k - s_lmeds * x^d_k|| <= t * sigma.
std::pair<double, std::vector<uint8_t>> classify_inliers(
    const std::vector<PointPair>& pairs, double s_lmeds, double min_median,
    const EstimatorConfig& cfg);

/// Iteratively reweighted least squares on the 1-D scale with Huber weights
/// (w = 1 for residual <= delta, delta/residual above, delta = t * sigma;
/// sigma == 0 degrades to plain least squares). The inlier set stays fixed.
/// Returns the refined scale and the number of updates that moved it by at
/// least irls_tol (a trailing fixed-point confirmation is not counted).
std::pair<double, int> refine_scale(const std::vector<PointPair>& pairs,
                                    const std::vector<uint8_t>& inlier_mask,
                                    double s_init, double sigma,
                                    const EstimatorConfig& cfg);

/// Huber objective used by refine_scale; exposed for property checks.
double huber_objective(const std::vector<PointPair>& pairs,
                       const std::vector<uint8_t>& inlier_mask, double s,
                       double delta);

/// Full per-keyframe pipeline: pairs -> LMedS -> gating -> refinement.
/// Returns nullopt when fewer than cfg.min_pairs pairs survive (the caller
/// skips the keyframe). Deterministic given cfg.rng_seed.
std::optional<ScaleEstimate> estimate_keyframe_scale(const Submap& m,
                                                     int64_t kf_id,
                                                     const DepthMap& d,
                                                     const EstimatorConfig& cfg);

}  // namespace densify
