#include "airquant/segmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <queue>

#include "airquant/error.hpp"

namespace airquant {

namespace {

bool fg(const Mask& m, int i, int j, int k) {
    return m.geom.in_bounds(i, j, k) && m.values[m.geom.index(i, j, k)] != 0;
}

int foreground_neighbors26(const Mask& m, int i, int j, int k) {
    int n = 0;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0 && dz == 0) continue;
                if (fg(m, i + dx, j + dy, k + dz)) ++n;
            }
    return n;
}

// Simple-point test on the 3x3x3 neighborhood: exactly one foreground
// 26-component in the punctured neighborhood and exactly one background
// 6-component of the 18-neighborhood that touches the center through a face.
bool is_simple(const Mask& m, int ci, int cj, int ck) {
    bool occ[3][3][3];
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                occ[dx + 1][dy + 1][dz + 1] = fg(m, ci + dx, cj + dy, ck + dz);

    auto cell = [](int dx, int dy, int dz) {
        return (dx + 1) + 3 * (dy + 1) + 9 * (dz + 1);
    };

    // Foreground components under 26-connectivity, center excluded.
    int comp_fg = 0;
    bool seen[27] = {};
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0 && dz == 0) continue;
                if (!occ[dx + 1][dy + 1][dz + 1] || seen[cell(dx, dy, dz)])
                    continue;
                ++comp_fg;
                if (comp_fg > 1) return false;
                std::queue<std::array<int, 3>> q;
                q.push({dx, dy, dz});
                seen[cell(dx, dy, dz)] = true;
                while (!q.empty()) {
                    const auto a = q.front();
                    q.pop();
                    for (int ez = -1; ez <= 1; ++ez)
                        for (int ey = -1; ey <= 1; ++ey)
                            for (int ex = -1; ex <= 1; ++ex) {
                                const int nx = a[0] + ex, ny = a[1] + ey,
                                          nz = a[2] + ez;
                                if (nx < -1 || nx > 1 || ny < -1 || ny > 1 ||
                                    nz < -1 || nz > 1)
                                    continue;
                                if (nx == 0 && ny == 0 && nz == 0) continue;
                                if (!occ[nx + 1][ny + 1][nz + 1] ||
                                    seen[cell(nx, ny, nz)])
                                    continue;
                                seen[cell(nx, ny, nz)] = true;
                                q.push({nx, ny, nz});
                            }
                }
            }
    if (comp_fg != 1) return false;

    // Background 6-components within the 18-neighborhood; only the ones
    // meeting the center through one of its six faces count.
    auto in_n18 = [](int dx, int dy, int dz) {
        const int l1 = std::abs(dx) + std::abs(dy) + std::abs(dz);
        return l1 >= 1 && l1 <= 2;
    };
    int comp_bg = 0;
    bool seen_bg[27] = {};
    static const int steps[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                    {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
    for (const auto& s : steps) {
        const int dx = s[0], dy = s[1], dz = s[2];
        if (occ[dx + 1][dy + 1][dz + 1] || seen_bg[cell(dx, dy, dz)]) continue;
        ++comp_bg;
        if (comp_bg > 1) return false;
        std::queue<std::array<int, 3>> q;
        q.push({dx, dy, dz});
        seen_bg[cell(dx, dy, dz)] = true;
        while (!q.empty()) {
            const auto a = q.front();
            q.pop();
            for (const auto& t : steps) {
                const int nx = a[0] + t[0], ny = a[1] + t[1],
                          nz = a[2] + t[2];
                if (nx < -1 || nx > 1 || ny < -1 || ny > 1 || nz < -1 ||
                    nz > 1)
                    continue;
                if (!in_n18(nx, ny, nz)) continue;
                if (occ[nx + 1][ny + 1][nz + 1] || seen_bg[cell(nx, ny, nz)])
                    continue;
                seen_bg[cell(nx, ny, nz)] = true;
                q.push({nx, ny, nz});
            }
        }
    }
    return comp_bg == 1;
}

struct Counts {
    std::size_t inter = 0;
    std::size_t uni = 0;
    std::size_t pred_only = 0;
    std::size_t pred_count = 0;
    std::size_t gt_count = 0;
};

Counts overlap_counts(const Mask& pred, const Mask& gt) {
    if (!check_same_geometry(pred.geom, gt.geom))
        throw GeometryError("segmentation scoring: masks on different grids");
    Counts c;
    for (std::size_t i = 0; i < pred.values.size(); ++i) {
        const bool p = pred.values[i] != 0;
        const bool g = gt.values[i] != 0;
        c.inter += p && g;
        c.uni += p || g;
        c.pred_only += p && !g;
        c.pred_count += p;
        c.gt_count += g;
    }
    return c;
}

}  // namespace

double iou(const Mask& pred, const Mask& gt) {
    const Counts c = overlap_counts(pred, gt);
    if (c.uni == 0) throw EmptyInputError("iou: both masks are empty");
    return static_cast<double>(c.inter) / static_cast<double>(c.uni);
}

double seg_precision(const Mask& pred, const Mask& gt) {
    const Counts c = overlap_counts(pred, gt);
    if (c.pred_count == 0) return 0.0;
    return static_cast<double>(c.inter) / static_cast<double>(c.pred_count);
}

double leakage(const Mask& pred, const Mask& gt) {
    const Counts c = overlap_counts(pred, gt);
    if (c.gt_count == 0)
        throw EmptyInputError("leakage: ground truth is empty");
    return static_cast<double>(c.pred_only) / static_cast<double>(c.gt_count);
}

Mask skeletonize(const Mask& m) {
    m.validate();
    Mask out = m;
    const int nx = out.geom.dims[0], ny = out.geom.dims[1],
              nz = out.geom.dims[2];
    static const int dirs[6][3] = {{0, 0, 1},  {0, 0, -1}, {0, 1, 0},
                                   {0, -1, 0}, {1, 0, 0},  {-1, 0, 0}};
    std::vector<std::array<int, 3>> candidates;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& d : dirs) {
            candidates.clear();
            for (int k = 0; k < nz; ++k)
                for (int j = 0; j < ny; ++j)
                    for (int i = 0; i < nx; ++i) {
                        if (!out.values[out.geom.index(i, j, k)]) continue;
                        if (fg(out, i + d[0], j + d[1], k + d[2])) continue;
                        if (foreground_neighbors26(out, i, j, k) <= 1)
                            continue;
                        if (!is_simple(out, i, j, k)) continue;
                        candidates.push_back({i, j, k});
                    }
            // Deleting one candidate can change its neighbors' status, so
            // every candidate is re-tested at its own turn.
            for (const auto& c : candidates) {
                if (foreground_neighbors26(out, c[0], c[1], c[2]) <= 1)
                    continue;
                if (!is_simple(out, c[0], c[1], c[2])) continue;
                out.values[out.geom.index(c[0], c[1], c[2])] = 0;
                changed = true;
            }
        }
    }
    return out;
}

BranchDecomposition branch_decompose(const Mask& skeleton) {
    skeleton.validate();
    BranchDecomposition dec;
    const int nx = skeleton.geom.dims[0], ny = skeleton.geom.dims[1],
              nz = skeleton.geom.dims[2];
    std::vector<char> junction(skeleton.values.size(), 0);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const std::size_t idx = skeleton.geom.index(i, j, k);
                if (!skeleton.values[idx]) continue;
                if (foreground_neighbors26(skeleton, i, j, k) >= 3) {
                    junction[idx] = 1;
                    dec.junctions.push_back({i, j, k});
                }
            }

    std::vector<char> visited(skeleton.values.size(), 0);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const std::size_t start = skeleton.geom.index(i, j, k);
                if (!skeleton.values[start] || junction[start] ||
                    visited[start])
                    continue;
                std::vector<std::array<int, 3>> branch;
                std::queue<std::array<int, 3>> q;
                q.push({i, j, k});
                visited[start] = 1;
                while (!q.empty()) {
                    const auto v = q.front();
                    q.pop();
                    branch.push_back(v);
                    for (int dz = -1; dz <= 1; ++dz)
                        for (int dy = -1; dy <= 1; ++dy)
                            for (int dx = -1; dx <= 1; ++dx) {
                                if (dx == 0 && dy == 0 && dz == 0) continue;
                                const int a = v[0] + dx, b = v[1] + dy,
                                          c = v[2] + dz;
                                if (!fg(skeleton, a, b, c)) continue;
                                const std::size_t idx =
                                    skeleton.geom.index(a, b, c);
                                if (junction[idx] || visited[idx]) continue;
                                visited[idx] = 1;
                                q.push({a, b, c});
                            }
                }
                std::sort(branch.begin(), branch.end(),
                          [&](const auto& a, const auto& b) {
                              return skeleton.geom.index(a[0], a[1], a[2]) <
                                     skeleton.geom.index(b[0], b[1], b[2]);
                          });
                dec.branches.push_back(std::move(branch));
            }
    return dec;
}

double detected_length_ratio(const Mask& pred, const Mask& gt_skeleton) {
    if (!check_same_geometry(pred.geom, gt_skeleton.geom))
        throw GeometryError(
            "detected_length_ratio: masks on different grids");
    if (gt_skeleton.empty_foreground())
        throw EmptyInputError("detected_length_ratio: empty skeleton");
    const auto& g = gt_skeleton.geom;
    double total = 0.0, detected = 0.0;
    std::size_t voxels = 0, voxels_in_pred = 0;
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) {
                if (!gt_skeleton.values[g.index(i, j, k)]) continue;
                ++voxels;
                if (pred.values[g.index(i, j, k)]) ++voxels_in_pred;
                // Half of the 26 offsets, so each edge is counted once.
                for (int dz = 0; dz <= 1; ++dz)
                    for (int dy = dz == 0 ? 0 : -1; dy <= 1; ++dy)
                        for (int dx = (dz == 0 && dy == 0) ? 1 : -1; dx <= 1;
                             ++dx) {
                            if (!fg(gt_skeleton, i + dx, j + dy, k + dz))
                                continue;
                            const double len = std::sqrt(
                                dx * g.spacing[0] * dx * g.spacing[0] +
                                dy * g.spacing[1] * dy * g.spacing[1] +
                                dz * g.spacing[2] * dz * g.spacing[2]);
                            total += len;
                            if (pred.values[g.index(i, j, k)] &&
                                pred.values[g.index(i + dx, j + dy, k + dz)])
                                detected += len;
                        }
            }
    if (total == 0.0) {
        // Edge-free skeleton (isolated voxels): score by containment.
        return static_cast<double>(voxels_in_pred) /
               static_cast<double>(voxels);
    }
    return detected / total;
}

double detected_branch_ratio(const Mask& pred,
                             const BranchDecomposition& gt_branches,
                             double detect_fraction) {
    if (detect_fraction <= 0.0 || detect_fraction > 1.0)
        throw ConfigError(
            "detected_branch_ratio: detect_fraction must be in (0, 1]");
    if (gt_branches.branches.empty())
        throw EmptyInputError("detected_branch_ratio: no branches");
    std::size_t hit = 0;
    for (const auto& branch : gt_branches.branches) {
        std::size_t in_pred = 0;
        for (const auto& v : branch)
            if (fg(pred, v[0], v[1], v[2])) ++in_pred;
        const double frac = static_cast<double>(in_pred) /
                            static_cast<double>(branch.size());
        if (frac >= detect_fraction) ++hit;
    }
    return static_cast<double>(hit) /
           static_cast<double>(gt_branches.branches.size());
}

SegScores evaluate_case(const Mask& pred, const Mask& gt,
                        double detect_fraction) {
    if (!check_same_geometry(pred.geom, gt.geom))
        throw GeometryError("evaluate_case: masks on different grids");
    if (gt.empty_foreground())
        throw EmptyInputError("evaluate_case: ground truth is empty");
    const Counts c = overlap_counts(pred, gt);

    SegScores s;
    s.detect_fraction = detect_fraction;
    s.empty_prediction = c.pred_count == 0;
    s.iou = static_cast<double>(c.inter) / static_cast<double>(c.uni);
    s.precision = c.pred_count == 0 ? 0.0
                                    : static_cast<double>(c.inter) /
                                          static_cast<double>(c.pred_count);
    s.leakage =
        static_cast<double>(c.pred_only) / static_cast<double>(c.gt_count);

    const Mask skel = skeletonize(gt);
    s.dlr = detected_length_ratio(pred, skel);
    const BranchDecomposition dec = branch_decompose(skel);
    s.dbr = detected_branch_ratio(pred, dec, detect_fraction);
    s.overall = overall_score(s.iou, s.precision, s.dbr, s.dlr, s.leakage);
    return s;
}

}  // namespace airquant
