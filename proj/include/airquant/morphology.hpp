#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "airquant/grid.hpp"

namespace airquant {

/// Symmetric voxel neighborhood for dilation and erosion.
/// Must contain the origin and be closed under negation; close() relies on
/// both to be a true morphological closing.
struct StructuringElement {
    std::vector<std::array<int, 3>> offsets;

    /// Full box of half-extent (rx, ry, rz) around the origin.
    static StructuringElement box(int rx, int ry, int rz);
    /// 3x3x3 box, the default closing element.
    static StructuringElement box_3x3x3() { return box(1, 1, 1); }
    /// Origin plus the six face neighbors.
    static StructuringElement cross_6();

    /// Per-axis maximum absolute offset.
    std::array<int, 3> radius() const;
    /// Throws GeometryError if the origin is missing or negation closure fails.
    void validate() const;
};

/// Labeling of a mask's foreground into connected components.
/// labels[n] is 0 for background, 1..count for foreground; sizes and
/// centroids_mm are indexed by label-1. Centroids are spacing-weighted voxel
/// index means (millimeters, grid-origin frame).
struct ComponentSet {
    std::vector<int> labels;
    int count = 0;
    std::vector<std::size_t> sizes;
    std::vector<std::array<double, 3>> centroids_mm;
};

struct PostprocessParams {
    StructuringElement closing_element = StructuringElement::box_3x3x3();
    double centroid_threshold_mm = 100.0;
    int connectivity = 26;
};

/// Per-case record of what postprocess_airway dropped.
struct PostprocessLog {
    int removed_components = 0;
    std::vector<std::size_t> removed_sizes;
};

/// Minkowski dilation clipped to the grid. Out-of-grid voxels are background.
Mask dilate(const Mask& m, const StructuringElement& se);

/// Erosion under the same border convention: a voxel survives only when every
/// element offset lands on in-grid foreground, so border voxels lacking
/// in-grid neighbors are removed.
Mask erode(const Mask& m, const StructuringElement& se);

/// Morphological closing, erode(dilate(m)) computed on an internally padded
/// grid so that the border clipping of the exported dilate/erode does not
/// break extensivity or idempotence. The result is cropped back to the grid.
Mask close(const Mask& m, const StructuringElement& se);

/// Connected components under 6, 18, or 26 connectivity. Labels are assigned
/// in scan order of each component's first voxel.
ComponentSet connected_components(const Mask& m, int connectivity);

/// Closing followed by removal of components whose centroid lies farther than
/// centroid_threshold_mm from the largest component's centroid. The largest
/// component is always retained.
Mask postprocess_airway(const Mask& m, const PostprocessParams& p,
                        PostprocessLog* log = nullptr);

/// Largest 26-connected component of the mask restricted to the superior
/// slice band k >= ceil((1 - upper_fraction) * nz), re-embedded at its
/// original indices. Assumes increasing k points superior (volume_io
/// normalizes this at load).
Mask extract_trachea(const Mask& m, double upper_fraction = 1.0 / 3.0);

/// Set difference m \ t. Throws ContainmentError when t is not a subset of m.
Mask extract_non_trachea(const Mask& m, const Mask& t);

/// Filled axis-aligned bounding box of the foreground.
Mask bounding_box_mask(const Mask& m);

}  // namespace airquant
