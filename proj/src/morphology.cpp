#include "airquant/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "airquant/error.hpp"

namespace airquant {

StructuringElement StructuringElement::box(int rx, int ry, int rz) {
    if (rx < 0 || ry < 0 || rz < 0) throw GeometryError("negative element radius");
    StructuringElement se;
    se.offsets.reserve(static_cast<std::size_t>(2 * rx + 1) * (2 * ry + 1) * (2 * rz + 1));
    for (int dz = -rz; dz <= rz; ++dz)
        for (int dy = -ry; dy <= ry; ++dy)
            for (int dx = -rx; dx <= rx; ++dx) se.offsets.push_back({dx, dy, dz});
    return se;
}

StructuringElement StructuringElement::cross_6() {
    StructuringElement se;
    se.offsets = {{0, 0, 0}, {-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
    return se;
}

std::array<int, 3> StructuringElement::radius() const {
    std::array<int, 3> r{0, 0, 0};
    for (const auto& o : offsets)
        for (int a = 0; a < 3; ++a)
            r[static_cast<std::size_t>(a)] =
                std::max(r[static_cast<std::size_t>(a)], std::abs(o[static_cast<std::size_t>(a)]));
    return r;
}

void StructuringElement::validate() const {
    std::set<std::array<int, 3>> all(offsets.begin(), offsets.end());
    if (all.size() != offsets.size()) throw GeometryError("duplicate element offsets");
    if (!all.count({0, 0, 0})) throw GeometryError("structuring element must contain the origin");
    for (const auto& o : offsets) {
        if (!all.count({-o[0], -o[1], -o[2]})) {
            throw GeometryError("structuring element is not symmetric about the origin");
        }
    }
}

Mask dilate(const Mask& m, const StructuringElement& se) {
    m.validate();
    se.validate();
    const int nx = m.geom.dims[0], ny = m.geom.dims[1], nz = m.geom.dims[2];
    Mask out;
    out.geom = m.geom;
    out.values.assign(m.values.size(), 0);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                if (!m.at(i, j, k)) continue;
                for (const auto& o : se.offsets) {
                    const int x = i + o[0], y = j + o[1], z = k + o[2];
                    if (m.geom.in_bounds(x, y, z)) out.at(x, y, z) = 1;
                }
            }
    return out;
}

Mask erode(const Mask& m, const StructuringElement& se) {
    m.validate();
    se.validate();
    const int nx = m.geom.dims[0], ny = m.geom.dims[1], nz = m.geom.dims[2];
    Mask out;
    out.geom = m.geom;
    out.values.assign(m.values.size(), 0);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                if (!m.at(i, j, k)) continue;
                bool keep = true;
                for (const auto& o : se.offsets) {
                    const int x = i + o[0], y = j + o[1], z = k + o[2];
                    if (!m.geom.in_bounds(x, y, z) || !m.at(x, y, z)) {
                        keep = false;
                        break;
                    }
                }
                if (keep) out.at(i, j, k) = 1;
            }
    return out;
}

Mask close(const Mask& m, const StructuringElement& se) {
    m.validate();
    se.validate();
    const auto r = se.radius();
    // pad by the element radius: erosion of the padded dilation then agrees
    // with the unbounded-domain closing on every original voxel
    Mask padded;
    padded.geom.dims = {m.geom.dims[0] + 2 * r[0], m.geom.dims[1] + 2 * r[1],
                        m.geom.dims[2] + 2 * r[2]};
    padded.geom.spacing = m.geom.spacing;
    padded.geom.set_identity_affine();
    padded.values.assign(padded.geom.voxel_count(), 0);
    for (int k = 0; k < m.geom.dims[2]; ++k)
        for (int j = 0; j < m.geom.dims[1]; ++j)
            for (int i = 0; i < m.geom.dims[0]; ++i)
                padded.at(i + r[0], j + r[1], k + r[2]) = m.at(i, j, k);

    const Mask closed = erode(dilate(padded, se), se);

    Mask out;
    out.geom = m.geom;
    out.values.assign(m.values.size(), 0);
    for (int k = 0; k < m.geom.dims[2]; ++k)
        for (int j = 0; j < m.geom.dims[1]; ++j)
            for (int i = 0; i < m.geom.dims[0]; ++i)
                out.at(i, j, k) = closed.at(i + r[0], j + r[1], k + r[2]);
    return out;
}

namespace {

std::vector<std::array<int, 3>> neighbor_offsets(int connectivity) {
    std::vector<std::array<int, 3>> n;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int order = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (order == 0) continue;
                if (connectivity == 6 && order > 1) continue;
                if (connectivity == 18 && order > 2) continue;
                n.push_back({dx, dy, dz});
            }
    return n;
}

}  // namespace

ComponentSet connected_components(const Mask& m, int connectivity) {
    m.validate();
    if (connectivity != 6 && connectivity != 18 && connectivity != 26) {
        throw ConfigError("connectivity must be 6, 18, or 26, got " +
                          std::to_string(connectivity));
    }
    const auto neigh = neighbor_offsets(connectivity);
    const int nx = m.geom.dims[0], ny = m.geom.dims[1], nz = m.geom.dims[2];

    ComponentSet cs;
    cs.labels.assign(m.values.size(), 0);
    std::vector<std::size_t> stack;
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const std::size_t seed = m.geom.index(i, j, k);
                if (!m.values[seed] || cs.labels[seed]) continue;
                const int label = ++cs.count;
                std::size_t size = 0;
                std::array<double, 3> sum{0.0, 0.0, 0.0};
                cs.labels[seed] = label;
                stack.assign(1, seed);
                while (!stack.empty()) {
                    const std::size_t n = stack.back();
                    stack.pop_back();
                    ++size;
                    const int z = static_cast<int>(n / (std::size_t(nx) * ny));
                    const int rem = static_cast<int>(n % (std::size_t(nx) * ny));
                    const int y = rem / nx;
                    const int x = rem % nx;
                    sum[0] += x;
                    sum[1] += y;
                    sum[2] += z;
                    for (const auto& o : neigh) {
                        const int xx = x + o[0], yy = y + o[1], zz = z + o[2];
                        if (!m.geom.in_bounds(xx, yy, zz)) continue;
                        const std::size_t nn = m.geom.index(xx, yy, zz);
                        if (m.values[nn] && !cs.labels[nn]) {
                            cs.labels[nn] = label;
                            stack.push_back(nn);
                        }
                    }
                }
                cs.sizes.push_back(size);
                cs.centroids_mm.push_back({sum[0] / double(size) * m.geom.spacing[0],
                                           sum[1] / double(size) * m.geom.spacing[1],
                                           sum[2] / double(size) * m.geom.spacing[2]});
            }
    return cs;
}

Mask postprocess_airway(const Mask& m, const PostprocessParams& p, PostprocessLog* log) {
    m.validate();
    if (m.empty_foreground()) throw EmptyInputError("postprocess_airway: empty mask");
    if (!(p.centroid_threshold_mm > 0.0)) {
        throw ConfigError("centroid_threshold_mm must be positive");
    }
    const Mask closed = close(m, p.closing_element);
    const ComponentSet cs = connected_components(closed, p.connectivity);

    // largest voxel count wins; scan-order label breaks ties
    int main_label = 1;
    for (int c = 2; c <= cs.count; ++c)
        if (cs.sizes[std::size_t(c - 1)] > cs.sizes[std::size_t(main_label - 1)]) main_label = c;
    const auto& mc = cs.centroids_mm[std::size_t(main_label - 1)];

    std::vector<char> keep(std::size_t(cs.count) + 1, 0);
    if (log) *log = {};
    for (int c = 1; c <= cs.count; ++c) {
        const auto& cc = cs.centroids_mm[std::size_t(c - 1)];
        const double d = std::sqrt((cc[0] - mc[0]) * (cc[0] - mc[0]) +
                                   (cc[1] - mc[1]) * (cc[1] - mc[1]) +
                                   (cc[2] - mc[2]) * (cc[2] - mc[2]));
        if (c == main_label || d <= p.centroid_threshold_mm) {
            keep[std::size_t(c)] = 1;
        } else if (log) {
            ++log->removed_components;
            log->removed_sizes.push_back(cs.sizes[std::size_t(c - 1)]);
        }
    }

    Mask out;
    out.geom = m.geom;
    out.values.assign(m.values.size(), 0);
    for (std::size_t n = 0; n < out.values.size(); ++n)
        out.values[n] = keep[std::size_t(cs.labels[n])];
    return out;
}

Mask extract_trachea(const Mask& m, double upper_fraction) {
    m.validate();
    if (m.empty_foreground()) throw EmptyInputError("extract_trachea: empty mask");
    if (!(upper_fraction > 0.0) || upper_fraction > 1.0) {
        throw ConfigError("upper_fraction must be in (0, 1]");
    }
    const int nz = m.geom.dims[2];
    int cut = static_cast<int>(std::ceil((1.0 - upper_fraction) * nz - 1e-9));
    cut = std::max(0, std::min(cut, nz));

    Mask upper;
    upper.geom = m.geom;
    upper.values.assign(m.values.size(), 0);
    bool any = false;
    for (int k = cut; k < nz; ++k)
        for (int j = 0; j < m.geom.dims[1]; ++j)
            for (int i = 0; i < m.geom.dims[0]; ++i) {
                if (m.at(i, j, k)) {
                    upper.at(i, j, k) = 1;
                    any = true;
                }
            }
    if (!any) {
        throw TracheaNotFoundError("no foreground in the upper " +
                                   std::to_string(upper_fraction) + " slice band");
    }

    const ComponentSet cs = connected_components(upper, 26);
    int best = 1;
    for (int c = 2; c <= cs.count; ++c)
        if (cs.sizes[std::size_t(c - 1)] > cs.sizes[std::size_t(best - 1)]) best = c;

    Mask out;
    out.geom = m.geom;
    out.values.assign(m.values.size(), 0);
    for (std::size_t n = 0; n < out.values.size(); ++n)
        out.values[n] = cs.labels[n] == best ? 1 : 0;
    return out;
}

Mask extract_non_trachea(const Mask& m, const Mask& t) {
    m.validate();
    t.validate();
    if (!check_same_geometry(m.geom, t.geom)) {
        throw GeometryError("extract_non_trachea: geometry mismatch");
    }
    Mask out;
    out.geom = m.geom;
    out.values.assign(m.values.size(), 0);
    for (std::size_t n = 0; n < m.values.size(); ++n) {
        if (t.values[n] && !m.values[n]) {
            throw ContainmentError("trachea mask is not contained in the airway mask");
        }
        out.values[n] = m.values[n] && !t.values[n] ? 1 : 0;
    }
    return out;
}

Mask bounding_box_mask(const Mask& m) {
    m.validate();
    if (m.empty_foreground()) throw EmptyInputError("bounding_box_mask: empty mask");
    int lo[3] = {m.geom.dims[0], m.geom.dims[1], m.geom.dims[2]};
    int hi[3] = {-1, -1, -1};
    for (int k = 0; k < m.geom.dims[2]; ++k)
        for (int j = 0; j < m.geom.dims[1]; ++j)
            for (int i = 0; i < m.geom.dims[0]; ++i) {
                if (!m.at(i, j, k)) continue;
                lo[0] = std::min(lo[0], i);
                lo[1] = std::min(lo[1], j);
                lo[2] = std::min(lo[2], k);
                hi[0] = std::max(hi[0], i);
                hi[1] = std::max(hi[1], j);
                hi[2] = std::max(hi[2], k);
            }
    Mask out;
    out.geom = m.geom;
    out.values.assign(m.values.size(), 0);
    for (int k = lo[2]; k <= hi[2]; ++k)
        for (int j = lo[1]; j <= hi[1]; ++j)
            for (int i = lo[0]; i <= hi[0]; ++i) out.at(i, j, k) = 1;
    return out;
}

}  // namespace airquant
