#include "airquant/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "airquant/error.hpp"

namespace airquant {

void Geometry::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims[static_cast<std::size_t>(a)] < 1) {
            throw GeometryError("geometry: dims must be >= 1, got " +
                                std::to_string(dims[static_cast<std::size_t>(a)]) + " on axis " +
                                std::to_string(a));
        }
        if (!(spacing[static_cast<std::size_t>(a)] > 0.0)) {
            throw GeometryError("geometry: spacing must be > 0 on axis " + std::to_string(a));
        }
    }
    // spacing must equal the affine's column norms (1e-4 relative)
    for (int c = 0; c < 3; ++c) {
        double n = 0.0;
        for (int r = 0; r < 3; ++r) n += affine_at(r, c) * affine_at(r, c);
        n = std::sqrt(n);
        const double s = spacing[static_cast<std::size_t>(c)];
        if (std::abs(n - s) > 1e-4 * std::max(std::abs(n), std::abs(s))) {
            throw GeometryError("geometry: affine column norm " + std::to_string(n) +
                                " disagrees with spacing " + std::to_string(s) + " on axis " +
                                std::to_string(c));
        }
    }
}

bool check_same_geometry(const Geometry& a, const Geometry& b) {
    if (a.dims != b.dims) return false;
    for (std::size_t c = 0; c < 3; ++c) {
        const double sa = a.spacing[c];
        const double sb = b.spacing[c];
        if (std::abs(sa - sb) > 1e-4 * std::max(std::abs(sa), std::abs(sb))) return false;
    }
    return true;
}

void Volume::validate() const {
    geom.validate();
    if (values.size() != geom.voxel_count()) {
        throw GeometryError("volume: voxel count " + std::to_string(values.size()) +
                            " does not match dims product " + std::to_string(geom.voxel_count()));
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw GeometryError("volume: non-finite voxel value");
    }
}

std::size_t Mask::foreground_count() const {
    return static_cast<std::size_t>(std::count_if(values.begin(), values.end(),
                                                  [](std::uint8_t v) { return v != 0; }));
}

void Mask::validate() const {
    geom.validate();
    if (values.size() != geom.voxel_count()) {
        throw GeometryError("mask: voxel count does not match dims product");
    }
    for (std::uint8_t v : values) {
        if (v > 1) throw GeometryError("mask: values must be 0 or 1");
    }
}

}  // namespace airquant
