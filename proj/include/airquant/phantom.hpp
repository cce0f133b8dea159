#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "airquant/grid.hpp"

namespace airquant {

enum class PhantomKind { Tube, YSplit, BinaryTree, Cohort };

// All phantoms are deterministic in (spec, seed); regenerating yields
// byte-identical volumes and masks.
struct PhantomSpec {
    PhantomKind kind = PhantomKind::Tube;
    std::array<int, 3> dims = {64, 64, 64};
    std::array<double, 3> spacing = {1.0, 1.0, 1.0};
    // Tube: slab thickness of the vertical tube, anchored at the top of the
    // grid. Trees: trunk voxel count; level-L branches have length
    // trunk_length >> L.
    int trunk_length = 32;
    // Half-width of the square tube cross-section; tube kind only.
    int trunk_radius = 0;
    int branch_depth = 2;  // binary-tree only
    double noise_level = 0.0;
    // Cohort: label-1 cases get this intensity added inside the mask.
    double signal_strength = 0.0;
    int cohort_size = 0;
    // Distances (mm, along +x from the structure centroid) of planted cube
    // artifacts, one 3x3x3 cube each.
    std::vector<double> satellites_mm;
    std::uint64_t seed = 0;
};

struct PhantomBranch {
    // Voxels in scan order. The junction at a branch's far end (where its
    // children attach) belongs to this branch; the junction it grew from
    // belongs to its parent.
    std::vector<std::array<int, 3>> voxels;
    int level = 0;  // 0 = trunk
};

struct PhantomCase {
    Volume volume;
    Mask mask;
    std::vector<std::array<int, 3>> trunk_voxels;  // branches[0] repeated
    std::vector<PhantomBranch> branches;
    std::vector<std::vector<std::array<int, 3>>> artifacts;
    int label = -1;  // set for cohort members
};

struct PhantomCohort {
    std::vector<PhantomCase> cases;
    std::vector<int> labels;
    std::string signal_description;
};

// Tube, y-split and binary-tree kinds. Cohort -> generate_cohort.
PhantomCase generate_phantom(const PhantomSpec& spec);

PhantomCohort generate_cohort(const PhantomSpec& spec);

}  // namespace airquant
