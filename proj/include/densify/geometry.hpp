#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "densify/errors.hpp"

namespace densify {

using Vec3 = Eigen::Vector3d;

/// Sub-pixel image coordinates.
struct Pixel {
    double u = 0.0;
    double v = 0.0;
};

/// Rigid transform, kept as a unit quaternion plus translation.
///
/// Convention throughout the code base: a keyframe pose maps world
/// coordinates into the camera frame (p_cam = R * p_world + t).
class SE3Pose {
public:
    SE3Pose() : q_(Eigen::Quaterniond::Identity()), t_(Vec3::Zero()) {}

    SE3Pose(const Eigen::Quaterniond& q, const Vec3& t) : q_(q), t_(t) {
        const double n = q_.norm();
        if (!(n > 1e-12) || !std::isfinite(n)) {
            throw ValidationError("SE3Pose: quaternion norm is degenerate");
        }
        q_.normalize();
    }

    Vec3 apply(const Vec3& p) const { return q_ * p + t_; }

    SE3Pose inverse() const {
        const Eigen::Quaterniond qi = q_.conjugate();
        return SE3Pose(qi, qi * (-t_));
    }

    /// Composition: (a * b).apply(p) == a.apply(b.apply(p)).
    SE3Pose operator*(const SE3Pose& rhs) const {
        return SE3Pose(q_ * rhs.q_, q_ * rhs.t_ + t_);
    }

    Eigen::Matrix4d matrix() const {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = q_.toRotationMatrix();
        m.topRightCorner<3, 1>() = t_;
        return m;
    }

    const Eigen::Quaterniond& rotation() const { return q_; }
    const Vec3& translation() const { return t_; }

private:
    Eigen::Quaterniond q_;
    Vec3 t_;
};

/// Similarity transform: p -> scale * (R * p) + t.
class Sim3Transform {
public:
    Sim3Transform()
        : scale_(1.0), q_(Eigen::Quaterniond::Identity()), t_(Vec3::Zero()) {}

    Sim3Transform(double scale, const Eigen::Quaterniond& q, const Vec3& t)
        : scale_(scale), q_(q), t_(t) {
        if (!(scale_ > 0.0) || !std::isfinite(scale_)) {
            throw ValidationError("Sim3Transform: scale must be positive");
        }
        q_.normalize();
    }

    Vec3 apply(const Vec3& p) const { return scale_ * (q_ * p) + t_; }

    Sim3Transform inverse() const {
        const Eigen::Quaterniond qi = q_.conjugate();
        return Sim3Transform(1.0 / scale_, qi, qi * (-t_ / scale_));
    }

    double scale() const { return scale_; }
    const Eigen::Quaterniond& rotation() const { return q_; }
    const Vec3& translation() const { return t_; }

private:
    double scale_;
    Eigen::Quaterniond q_;
    Vec3 t_;
};

/// Pinhole intrinsics in pixels. Inputs are assumed pre-undistorted.
struct PinholeCamera {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;

    PinholeCamera() = default;
    PinholeCamera(double fx_, double fy_, double cx_, double cy_, int w, int h)
        : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(w), height(h) {
        if (!(fx > 0.0) || !(fy > 0.0)) {
            throw ValidationError("PinholeCamera: focal lengths must be positive");
        }
        if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
            throw ValidationError("PinholeCamera: principal point outside image");
        }
    }
};

/// Guards the projective division; well below any realistic depth.
inline constexpr double kProjectZMin = 1e-6;

/// Projects a camera-frame point. Returns nullopt when the point is behind
/// the camera (z <= z_min) or falls outside [0,w-1]x[0,h-1].
inline std::optional<Pixel> project(const PinholeCamera& cam, const Vec3& p_cam,
                                    double z_min = kProjectZMin) {
    if (!(p_cam.z() > z_min)) return std::nullopt;
    const double u = cam.fx * p_cam.x() / p_cam.z() + cam.cx;
    const double v = cam.fy * p_cam.y() / p_cam.z() + cam.cy;
    if (u < 0.0 || u > cam.width - 1 || v < 0.0 || v > cam.height - 1) {
        return std::nullopt;
    }
    return Pixel{u, v};
}

/// Back-projects a pixel at the given z-depth into the camera frame.
/// The z component of the result equals `depth` exactly.
inline Vec3 unproject(const PinholeCamera& cam, const Pixel& px, double depth) {
    if (!(depth > 0.0) || !std::isfinite(depth)) {
        throw ValidationError("unproject: depth must be positive and finite");
    }
    return {depth * (px.u - cam.cx) / cam.fx, depth * (px.v - cam.cy) / cam.fy,
            depth};
}

/// Dense per-keyframe depth. Valid entries are finite and strictly positive;
/// everything else is masked out and never read as depth.
class DepthMap {
public:
    DepthMap() = default;
    DepthMap(int width, int height)
        : width_(width), height_(height),
          values_(static_cast<size_t>(width) * height, 0.0f),
          valid_(static_cast<size_t>(width) * height, 0) {
        if (width <= 0 || height <= 0) {
            throw ValidationError("DepthMap: non-positive dimensions");
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    size_t size() const { return values_.size(); }

    /// Stores a sample; non-finite or non-positive values mark the pixel invalid.
    void set(int x, int y, float depth) {
        const size_t i = index(x, y);
        if (std::isfinite(depth) && depth > 0.0f) {
            values_[i] = depth;
            valid_[i] = 1;
        } else {
            values_[i] = 0.0f;
            valid_[i] = 0;
        }
    }

    void set_invalid(int x, int y) {
        const size_t i = index(x, y);
        values_[i] = 0.0f;
        valid_[i] = 0;
    }

    bool is_valid(int x, int y) const { return valid_[index(x, y)] != 0; }
    float at(int x, int y) const { return values_[index(x, y)]; }

    const std::vector<float>& values() const { return values_; }
    const std::vector<uint8_t>& valid_mask() const { return valid_; }

    size_t valid_count() const {
        size_t n = 0;
        for (uint8_t v : valid_) n += v;
        return n;
    }

private:
    size_t index(int x, int y) const { return static_cast<size_t>(y) * width_ + x; }

    int width_ = 0, height_ = 0;
    std::vector<float> values_;
    std::vector<uint8_t> valid_;
};

/// Bilinear depth read at a sub-pixel position. Invalid when the position is
/// outside [0,w-1]x[0,h-1] or any of the four surrounding pixels is masked.
std::optional<double> depth_lookup(const DepthMap& d, const Pixel& px);

}  // namespace densify
