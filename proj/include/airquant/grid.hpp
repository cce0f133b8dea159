#ifndef AIRQUANT_GRID_HPP
#define AIRQUANT_GRID_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace airquant {

/// Voxel grid geometry: dimensions, spacing in mm, and the 4x4 voxel-index to
/// world-mm affine (row major). Spacing always agrees with the column norms of
/// the affine's upper-left 3x3 block.
struct Geometry {
    std::array<int, 3> dims{0, 0, 0};            // nx, ny, nz
    std::array<double, 3> spacing{1.0, 1.0, 1.0};  // mm per voxel
    std::array<double, 16> affine{};             // row-major 4x4

    Geometry() { set_identity_affine(); }
    Geometry(std::array<int, 3> d, std::array<double, 3> s) : dims(d), spacing(s) {
        set_identity_affine();
    }

    double affine_at(int r, int c) const { return affine[static_cast<std::size_t>(4 * r + c)]; }
    double& affine_at(int r, int c) { return affine[static_cast<std::size_t>(4 * r + c)]; }

    /// Diagonal affine from the current spacing, zero origin.
    void set_identity_affine() {
        affine.fill(0.0);
        affine_at(0, 0) = spacing[0];
        affine_at(1, 1) = spacing[1];
        affine_at(2, 2) = spacing[2];
        affine_at(3, 3) = 1.0;
    }

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
               static_cast<std::size_t>(dims[2]);
    }

    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k));
    }

    bool in_bounds(int i, int j, int k) const {
        return i >= 0 && i < dims[0] && j >= 0 && j < dims[1] && k >= 0 && k < dims[2];
    }

    /// World position of a voxel center through the affine.
    std::array<double, 3> world(int i, int j, int k) const {
        std::array<double, 3> p{};
        for (int r = 0; r < 3; ++r) {
            p[static_cast<std::size_t>(r)] = affine_at(r, 0) * i + affine_at(r, 1) * j +
                                             affine_at(r, 2) * k + affine_at(r, 3);
        }
        return p;
    }

    /// Throws GeometryError when dims or spacing are invalid or spacing and
    /// affine disagree (1e-4 relative).
    void validate() const;
};

/// dims equal and spacing componentwise equal within 1e-4 relative tolerance.
bool check_same_geometry(const Geometry& a, const Geometry& b);

/// Scalar 3D image in Hounsfield units; voxels stored x-fastest.
struct Volume {
    Geometry geom;
    std::vector<double> values;

    Volume() = default;
    Volume(Geometry g, double fill = 0.0) : geom(g), values(g.voxel_count(), fill) {}

    double at(int i, int j, int k) const { return values[geom.index(i, j, k)]; }
    double& at(int i, int j, int k) { return values[geom.index(i, j, k)]; }

    /// Throws when the voxel count mismatches dims or any value is non-finite.
    void validate() const;
};

/// Binary 3D mask sharing a Volume's geometry; values are 0 or 1.
struct Mask {
    Geometry geom;
    std::vector<std::uint8_t> values;

    Mask() = default;
    explicit Mask(Geometry g, std::uint8_t fill = 0) : geom(g), values(g.voxel_count(), fill) {}

    std::uint8_t at(int i, int j, int k) const { return values[geom.index(i, j, k)]; }
    std::uint8_t& at(int i, int j, int k) { return values[geom.index(i, j, k)]; }

    bool foreground(int i, int j, int k) const { return at(i, j, k) != 0; }

    std::size_t foreground_count() const;
    bool empty_foreground() const { return foreground_count() == 0; }

    void validate() const;
};

}  // namespace airquant

#endif
