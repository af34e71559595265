#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "densify/geometry.hpp"

namespace densify {

/// Sparse triangulated 3D point in the submap world frame.
struct MapPoint {
    int64_t id = 0;
    Vec3 position_world = Vec3::Zero();
};

struct Keyframe {
    int64_t id = 0;
    SE3Pose pose_world_to_cam;
    PinholeCamera camera;
    std::string depth_path;              // relative to the manifest directory
    double depth_scale = 1.0;            // png16: depth = raw / depth_scale
    std::string image_path;              // optional, empty when absent
    std::vector<int64_t> observed_point_ids;
};

/// One independently scaled sparse map: keyframes with poses plus map points.
/// Immutable after load; safe to share across parallel per-keyframe workers.
struct Submap {
    int64_t id = 0;
    std::vector<MapPoint> points;     // sorted by id
    std::vector<Keyframe> keyframes;  // manifest order

    const MapPoint* find_point(int64_t point_id) const;
    const Keyframe* find_keyframe(int64_t kf_id) const;

    /// Index for O(1) point lookup; built by load_submap / finalize().
    std::unordered_map<int64_t, size_t> point_index;

    /// Sorts points, builds the index, and checks all invariants.
    /// Throws ValidationError with context on any violation.
    void finalize(const std::string& context);
};

/// Parses and validates a submap manifest (JSON). Referenced depth files must
/// exist; their contents are loaded lazily via load_keyframe_depth.
Submap load_submap(const std::string& manifest_path);

/// Writes the manifest back out (field-for-field round trip with load_submap).
void save_submap(const Submap& m, const std::string& manifest_path);

/// Loads the depth map of one keyframe and checks its dimensions against the
/// keyframe camera.
DepthMap load_keyframe_depth(const Submap& m, const Keyframe& kf,
                             const std::string& manifest_dir);

/// The map points relevant for keyframe kf_id: its observation list, or, when
/// that list is empty, every submap point projecting in-frustum with positive
/// depth. Returned in ascending point-id order.
std::vector<MapPoint> observed_points(const Submap& m, int64_t kf_id);

}  // namespace densify
