#include "densify/map_model.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "densify/depth_io.hpp"
#include "densify/errors.hpp"

namespace densify {

namespace fs = std::filesystem;
using nlohmann::json;

const MapPoint* Submap::find_point(int64_t point_id) const {
    auto it = point_index.find(point_id);
    return it == point_index.end() ? nullptr : &points[it->second];
}

const Keyframe* Submap::find_keyframe(int64_t kf_id) const {
    for (const auto& kf : keyframes) {
        if (kf.id == kf_id) return &kf;
    }
    return nullptr;
}

void Submap::finalize(const std::string& context) {
    std::sort(points.begin(), points.end(),
              [](const MapPoint& a, const MapPoint& b) { return a.id < b.id; });
    point_index.clear();
    for (size_t i = 0; i < points.size(); ++i) {
        if (!points[i].position_world.allFinite()) {
            throw ValidationError(context + ": point " +
                                  std::to_string(points[i].id) +
                                  " has non-finite coordinates");
        }
        if (!point_index.emplace(points[i].id, i).second) {
            throw ValidationError(context + ": duplicate point id " +
                                  std::to_string(points[i].id));
        }
    }
    if (keyframes.empty()) {
        throw ValidationError(context + ": submap has no keyframes");
    }
    std::unordered_set<int64_t> kf_ids;
    for (const auto& kf : keyframes) {
        if (!kf_ids.insert(kf.id).second) {
            throw ValidationError(context + ": duplicate keyframe id " +
                                  std::to_string(kf.id));
        }
        for (int64_t pid : kf.observed_point_ids) {
            if (point_index.find(pid) == point_index.end()) {
                throw ValidationError(
                    context + ": keyframe " + std::to_string(kf.id) +
                    " observes undeclared point id " + std::to_string(pid));
            }
        }
    }
}

namespace {

json pose_to_json(const SE3Pose& p) {
    const auto& t = p.translation();
    const auto& q = p.rotation();
    return json::array({t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()});
}

SE3Pose pose_from_json(const json& j, const std::string& context) {
    if (!j.is_array() || j.size() != 7) {
        throw ValidationError(context +
                              ": pose must be [tx ty tz qx qy qz qw]");
    }
    const Vec3 t(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
    const Eigen::Quaterniond q(j[6].get<double>(), j[3].get<double>(),
                               j[4].get<double>(), j[5].get<double>());
    return SE3Pose(q, t);
}

json camera_to_json(const PinholeCamera& c) {
    return json{{"fx", c.fx},       {"fy", c.fy},    {"cx", c.cx},
                {"cy", c.cy},       {"width", c.width},
                {"height", c.height}};
}

PinholeCamera camera_from_json(const json& j, const std::string& context) {
    for (const char* key : {"fx", "fy", "cx", "cy", "width", "height"}) {
        if (!j.contains(key)) {
            throw ValidationError(context + ": camera missing field '" +
                                  std::string(key) + "'");
        }
    }
    try {
        return PinholeCamera(j["fx"].get<double>(), j["fy"].get<double>(),
                             j["cx"].get<double>(), j["cy"].get<double>(),
                             j["width"].get<int>(), j["height"].get<int>());
    } catch (const ValidationError& e) {
        throw ValidationError(context + ": " + e.what());
    }
}

}  // namespace

Submap load_submap(const std::string& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is) throw IoError("submap manifest: cannot open " + manifest_path);
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw IoError("submap manifest " + manifest_path + ": " + e.what());
    }
    const std::string ctx = "submap manifest " + manifest_path;
    const fs::path dir = fs::path(manifest_path).parent_path();

    Submap m;
    m.id = j.value("id", int64_t{0});

    std::optional<PinholeCamera> default_cam;
    if (j.contains("camera")) {
        default_cam = camera_from_json(j["camera"], ctx);
    }

    if (!j.contains("points") || !j["points"].is_array()) {
        throw ValidationError(ctx + ": missing 'points' array");
    }
    for (const auto& pj : j["points"]) {
        MapPoint p;
        p.id = pj.at("id").get<int64_t>();
        const auto& pos = pj.at("position");
        if (!pos.is_array() || pos.size() != 3) {
            throw ValidationError(ctx + ": point " + std::to_string(p.id) +
                                  " position must be [x y z]");
        }
        p.position_world =
            Vec3(pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>());
        m.points.push_back(p);
    }

    if (!j.contains("keyframes") || !j["keyframes"].is_array()) {
        throw ValidationError(ctx + ": missing 'keyframes' array");
    }
    for (const auto& kj : j["keyframes"]) {
        Keyframe kf;
        kf.id = kj.at("id").get<int64_t>();
        const std::string kctx = ctx + ", keyframe " + std::to_string(kf.id);
        kf.pose_world_to_cam = pose_from_json(kj.at("pose"), kctx);
        if (kj.contains("camera")) {
            kf.camera = camera_from_json(kj["camera"], kctx);
        } else if (default_cam) {
            kf.camera = *default_cam;
        } else {
            throw ValidationError(kctx + ": no camera (neither per-keyframe nor"
                                         " submap-level)");
        }
        kf.depth_path = kj.at("depth").get<std::string>();
        kf.depth_scale = kj.value("depth_scale", 1.0);
        if (!(kf.depth_scale > 0.0)) {
            throw ValidationError(kctx + ": depth_scale must be positive");
        }
        if (kj.contains("image") && !kj["image"].is_null()) {
            kf.image_path = kj["image"].get<std::string>();
        }
        if (kj.contains("observations")) {
            for (const auto& o : kj["observations"]) {
                kf.observed_point_ids.push_back(o.get<int64_t>());
            }
        }
        const fs::path depth_file = dir / kf.depth_path;
        if (!fs::exists(depth_file)) {
            throw ValidationError(kctx + ": depth file missing: " +
                                  depth_file.string());
        }
        if (!kf.image_path.empty() && !fs::exists(dir / kf.image_path)) {
            throw ValidationError(kctx + ": image file missing: " +
                                  (dir / kf.image_path).string());
        }
        m.keyframes.push_back(std::move(kf));
    }

    m.finalize(ctx);
    return m;
}

void save_submap(const Submap& m, const std::string& manifest_path) {
    json j;
    j["id"] = m.id;
    j["points"] = json::array();
    for (const auto& p : m.points) {
        j["points"].push_back({{"id", p.id},
                               {"position", {p.position_world.x(),
                                             p.position_world.y(),
                                             p.position_world.z()}}});
    }
    j["keyframes"] = json::array();
    for (const auto& kf : m.keyframes) {
        json kj;
        kj["id"] = kf.id;
        kj["pose"] = pose_to_json(kf.pose_world_to_cam);
        kj["camera"] = camera_to_json(kf.camera);
        kj["depth"] = kf.depth_path;
        kj["depth_scale"] = kf.depth_scale;
        if (!kf.image_path.empty()) kj["image"] = kf.image_path;
        kj["observations"] = kf.observed_point_ids;
        j["keyframes"].push_back(std::move(kj));
    }

    const std::string tmp = manifest_path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc);
        if (!os) throw IoError("submap manifest: cannot write " + tmp);
        os << j.dump(2) << "\n";
        if (!os) throw IoError("submap manifest: write failed " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, manifest_path, ec);
    if (ec) throw IoError("submap manifest: rename failed " + manifest_path);
}

DepthMap load_keyframe_depth(const Submap& m, const Keyframe& kf,
                             const std::string& manifest_dir) {
    const fs::path path = fs::path(manifest_dir) / kf.depth_path;
    DepthMap d = load_depth_auto(path.string(), kf.depth_scale);
    if (d.width() != kf.camera.width || d.height() != kf.camera.height) {
        throw ValidationError(
            "submap " + std::to_string(m.id) + ", keyframe " +
            std::to_string(kf.id) + ": depth map " + path.string() + " is " +
            std::to_string(d.width()) + "x" + std::to_string(d.height()) +
            " but the camera expects " + std::to_string(kf.camera.width) + "x" +
            std::to_string(kf.camera.height));
    }
    return d;
}

std::vector<MapPoint> observed_points(const Submap& m, int64_t kf_id) {
    const Keyframe* kf = m.find_keyframe(kf_id);
    if (kf == nullptr) {
        throw ValidationError("observed_points: unknown keyframe id " +
                              std::to_string(kf_id));
    }
    std::vector<MapPoint> out;
    if (!kf->observed_point_ids.empty()) {
        out.reserve(kf->observed_point_ids.size());
        for (int64_t pid : kf->observed_point_ids) {
            const MapPoint* p = m.find_point(pid);
            if (p == nullptr) {
                throw ValidationError("observed_points: dangling point id " +
                                      std::to_string(pid));
            }
            out.push_back(*p);
        }
        std::sort(out.begin(), out.end(),
                  [](const MapPoint& a, const MapPoint& b) { return a.id < b.id; });
        return out;
    }
    // Fallback: every point that projects into the keyframe with positive depth.
    for (const auto& p : m.points) {
        const Vec3 p_cam = kf->pose_world_to_cam.apply(p.position_world);
        if (project(kf->camera, p_cam).has_value()) out.push_back(p);
    }
    return out;  // m.points is already sorted by id
}

}  // namespace densify
