#include "densify/geometry.hpp"

namespace densify {

std::optional<double> depth_lookup(const DepthMap& d, const Pixel& px) {
    const int w = d.width();
    const int h = d.height();
    if (!std::isfinite(px.u) || !std::isfinite(px.v)) return std::nullopt;
    if (px.u < 0.0 || px.u > w - 1 || px.v < 0.0 || px.v > h - 1) {
        return std::nullopt;
    }
    if (w < 2 || h < 2) {
        // Degenerate map: a single row/column has no 2x2 neighborhood.
        return std::nullopt;
    }

    int x0 = static_cast<int>(std::floor(px.u));
    int y0 = static_cast<int>(std::floor(px.v));
    if (x0 > w - 2) x0 = w - 2;  // px.u == w-1 lands on the last cell
    if (y0 > h - 2) y0 = h - 2;
    const double fu = px.u - x0;
    const double fv = px.v - y0;

    if (!d.is_valid(x0, y0) || !d.is_valid(x0 + 1, y0) ||
        !d.is_valid(x0, y0 + 1) || !d.is_valid(x0 + 1, y0 + 1)) {
        return std::nullopt;
    }

    const double v00 = d.at(x0, y0);
    const double v10 = d.at(x0 + 1, y0);
    const double v01 = d.at(x0, y0 + 1);
    const double v11 = d.at(x0 + 1, y0 + 1);
    return (1.0 - fv) * ((1.0 - fu) * v00 + fu * v10) +
           fv * ((1.0 - fu) * v01 + fu * v11);
}

}  // namespace densify
