#include "airquant/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "airquant/error.hpp"

namespace airquant {

namespace {

// Deterministic uniform in [0,1): fixed mapping from raw engine output so
// volumes reproduce bit-for-bit on any platform.
double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Geometry make_geometry(const PhantomSpec& spec) {
    Geometry g;
    g.dims = spec.dims;
    g.spacing = spec.spacing;
    g.set_identity_affine();
    for (int a = 0; a < 3; ++a) g.affine_at(a, a) = spec.spacing[a];
    return g;
}

void check_spec_basics(const PhantomSpec& spec) {
    for (int a = 0; a < 3; ++a) {
        if (spec.dims[a] < 3)
            throw ConfigError("phantom: dims must be at least 3 per axis");
        if (!(spec.spacing[a] > 0.0))
            throw ConfigError("phantom: spacing must be positive");
    }
    if (spec.trunk_length < 1)
        throw ConfigError("phantom: trunk_length must be positive");
    if (spec.trunk_radius < 0)
        throw ConfigError("phantom: trunk_radius must not be negative");
    if (spec.noise_level < 0.0)
        throw ConfigError("phantom: noise_level must not be negative");
}

struct Build {
    Mask mask;
    std::vector<PhantomBranch> branches;
    std::vector<std::vector<std::array<int, 3>>> artifacts;
};

void set_voxel(Mask& m, int i, int j, int k) {
    if (!m.geom.in_bounds(i, j, k))
        throw ConfigError("phantom: structure does not fit inside the grid");
    m.values[m.geom.index(i, j, k)] = 1;
}

void sort_scan_order(std::vector<std::array<int, 3>>& v, const Geometry& g) {
    std::sort(v.begin(), v.end(), [&](const auto& a, const auto& b) {
        return g.index(a[0], a[1], a[2]) < g.index(b[0], b[1], b[2]);
    });
}

Build carve_tube(const PhantomSpec& spec) {
    Build b;
    b.mask.geom = make_geometry(spec);
    b.mask.values.assign(b.mask.geom.voxel_count(), 0);
    const int nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];
    const int cx = nx / 2, cy = ny / 2, r = spec.trunk_radius;
    const int len = std::min(spec.trunk_length, nz);
    PhantomBranch trunk;
    for (int k = nz - len; k < nz; ++k)
        for (int j = cy - r; j <= cy + r; ++j)
            for (int i = cx - r; i <= cx + r; ++i) {
                set_voxel(b.mask, i, j, k);
                trunk.voxels.push_back({i, j, k});
            }
    b.branches.push_back(std::move(trunk));
    return b;
}

Build carve_y_split(const PhantomSpec& spec) {
    Build b;
    b.mask.geom = make_geometry(spec);
    b.mask.values.assign(b.mask.geom.voxel_count(), 0);
    const int nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];
    const int cx = nx / 2, cy = ny / 2;
    const int top = nz - 2;
    const int j1 = nz / 2;
    const int arm_len = std::min({j1 - 1, cx - 1, nx - 2 - cx});
    if (arm_len < 2 || j1 >= top)
        throw ConfigError("phantom: grid too small for a y-split");

    PhantomBranch trunk;
    trunk.level = 0;
    for (int k = j1; k <= top; ++k) {
        set_voxel(b.mask, cx, cy, k);
        trunk.voxels.push_back({cx, cy, k});
    }
    b.branches.push_back(std::move(trunk));
    for (int sign : {1, -1}) {
        PhantomBranch arm;
        arm.level = 1;
        for (int t = 1; t <= arm_len; ++t) {
            set_voxel(b.mask, cx + sign * t, cy, j1 - t);
            arm.voxels.push_back({cx + sign * t, cy, j1 - t});
        }
        sort_scan_order(arm.voxels, b.mask.geom);
        b.branches.push_back(std::move(arm));
    }
    return b;
}

void grow_tree(Build& b, std::array<int, 3> junction, int level, int depth,
               int trunk_len) {
    if (level > depth) return;
    const int len = trunk_len >> level;
    if (len < 2)
        throw ConfigError(
            "phantom: trunk_length too short for the requested branch depth");
    for (int sign : {1, -1}) {
        PhantomBranch branch;
        branch.level = level;
        std::array<int, 3> pos = junction;
        for (int t = 1; t <= len; ++t) {
            // Odd levels fan out in the x-z plane, even levels in y-z; the
            // halving of len keeps cousin subtrees at least two voxels apart.
            pos = {junction[0] + (level % 2 == 1 ? sign * t : 0),
                   junction[1] + (level % 2 == 0 ? sign * t : 0),
                   junction[2] - t};
            set_voxel(b.mask, pos[0], pos[1], pos[2]);
            branch.voxels.push_back(pos);
        }
        sort_scan_order(branch.voxels, b.mask.geom);
        b.branches.push_back(std::move(branch));
        grow_tree(b, pos, level + 1, depth, trunk_len);
    }
}

Build carve_binary_tree(const PhantomSpec& spec) {
    if (spec.branch_depth < 1)
        throw ConfigError("phantom: branch_depth must be at least 1");
    Build b;
    b.mask.geom = make_geometry(spec);
    b.mask.values.assign(b.mask.geom.voxel_count(), 0);
    const int nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];
    const int cx = nx / 2, cy = ny / 2;
    const int top = nz - 2;
    const int j1 = top - spec.trunk_length + 1;
    if (j1 < 2) throw ConfigError("phantom: trunk does not fit the grid");

    PhantomBranch trunk;
    trunk.level = 0;
    for (int k = j1; k <= top; ++k) {
        set_voxel(b.mask, cx, cy, k);
        trunk.voxels.push_back({cx, cy, k});
    }
    b.branches.push_back(std::move(trunk));
    grow_tree(b, {cx, cy, j1}, 1, spec.branch_depth, spec.trunk_length);
    return b;
}

void add_satellites(Build& b, const PhantomSpec& spec) {
    if (spec.satellites_mm.empty()) return;
    // Structure centroid in mm, spacing-weighted voxel-index mean.
    double si = 0.0, sj = 0.0, sk = 0.0, n = 0.0;
    const auto& g = b.mask.geom;
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i)
                if (b.mask.values[g.index(i, j, k)]) {
                    si += i;
                    sj += j;
                    sk += k;
                    n += 1.0;
                }
    const double cx_mm = si / n * g.spacing[0];
    const double cy_mm = sj / n * g.spacing[1];
    const double cz_mm = sk / n * g.spacing[2];
    for (double d : spec.satellites_mm) {
        const int ci =
            static_cast<int>(std::llround((cx_mm + d) / g.spacing[0]));
        const int cj = static_cast<int>(std::llround(cy_mm / g.spacing[1]));
        const int ck = static_cast<int>(std::llround(cz_mm / g.spacing[2]));
        std::vector<std::array<int, 3>> cube;
        for (int dk = -1; dk <= 1; ++dk)
            for (int dj = -1; dj <= 1; ++dj)
                for (int di = -1; di <= 1; ++di) {
                    set_voxel(b.mask, ci + di, cj + dj, ck + dk);
                    cube.push_back({ci + di, cj + dj, ck + dk});
                }
        sort_scan_order(cube, g);
        b.artifacts.push_back(std::move(cube));
    }
}

Volume fill_volume(const Mask& mask, double shift, double noise_level,
                   std::uint64_t seed) {
    Volume v;
    v.geom = mask.geom;
    v.values.assign(v.geom.voxel_count(), 0.0);
    std::mt19937_64 rng(seed);
    const auto& g = v.geom;
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) {
                const std::size_t idx = g.index(i, j, k);
                double value = mask.values[idx]
                                   ? -950.0 + 2.0 * k + shift
                                   : -1000.0;
                if (noise_level > 0.0)
                    value += noise_level * (2.0 * unit_draw(rng) - 1.0);
                v.values[idx] = value;
            }
    return v;
}

PhantomCase build_case(const PhantomSpec& spec, double shift) {
    check_spec_basics(spec);
    Build b;
    switch (spec.kind) {
        case PhantomKind::Tube:
            b = carve_tube(spec);
            break;
        case PhantomKind::YSplit:
            b = carve_y_split(spec);
            break;
        case PhantomKind::BinaryTree:
            b = carve_binary_tree(spec);
            break;
        case PhantomKind::Cohort:
            throw ConfigError(
                "generate_phantom: cohort kind needs generate_cohort");
    }
    add_satellites(b, spec);
    PhantomCase c;
    c.volume = fill_volume(b.mask, shift, spec.noise_level, spec.seed);
    c.mask = std::move(b.mask);
    c.branches = std::move(b.branches);
    c.artifacts = std::move(b.artifacts);
    c.trunk_voxels = c.branches.front().voxels;
    return c;
}

}  // namespace

PhantomCase generate_phantom(const PhantomSpec& spec) {
    return build_case(spec, 0.0);
}

PhantomCohort generate_cohort(const PhantomSpec& spec) {
    if (spec.kind != PhantomKind::Cohort)
        throw ConfigError("generate_cohort: spec.kind must be cohort");
    if (spec.cohort_size < 2)
        throw ConfigError("generate_cohort: cohort_size must be at least 2");
    PhantomCohort cohort;
    for (int i = 0; i < spec.cohort_size; ++i) {
        PhantomSpec member = spec;
        member.kind = PhantomKind::YSplit;
        member.seed = spec.seed + 0x9E3779B97F4A7C15ULL * (i + 1);
        const int label = i % 2;
        PhantomCase c = build_case(member, label * spec.signal_strength);
        c.label = label;
        cohort.labels.push_back(label);
        cohort.cases.push_back(std::move(c));
    }
    cohort.signal_description =
        "label-1 cases carry an in-mask intensity offset of " +
        std::to_string(spec.signal_strength) +
        "; first-order intensity statistics of the mask separate the classes";
    return cohort;
}

}  // namespace airquant
