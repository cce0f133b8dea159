#pragma once

#include <array>
#include <vector>

#include "airquant/grid.hpp"

namespace airquant {

// Voxel-overlap scores. Both masks must share dims and spacing.
double iou(const Mask& pred, const Mask& gt);

// TP / (TP + FP); an empty prediction scores 0 (see SegScores for the flag).
double seg_precision(const Mask& pred, const Mask& gt);

// |pred \ gt| / |gt|, may exceed 1. Empty ground truth -> EmptyInputError.
double leakage(const Mask& pred, const Mask& gt);

// Topology-preserving thinning: six directional subiterations (up, down,
// north, south, east, west) delete border voxels sequentially, each voxel
// re-checked at its turn. A voxel is deletable while it is simple (one
// foreground 26-component in the punctured 26-neighborhood, one background
// 6-component in the 18-neighborhood touching the center face-wise) and not
// a curve endpoint (more than one foreground 26-neighbor). The result keeps
// the 26-component count of the input; an already unit-thick curve is a
// fixed point.
Mask skeletonize(const Mask& m);

struct BranchDecomposition {
    // Non-junction skeleton voxels grouped into 26-connected segments, each
    // in scan order; junction voxels (3 or more skeleton neighbors) are
    // listed separately and belong to no branch.
    std::vector<std::vector<std::array<int, 3>>> branches;
    std::vector<std::array<int, 3>> junctions;
};

BranchDecomposition branch_decompose(const Mask& skeleton);

// Fraction of skeleton edge length covered by the prediction. Edges join
// 26-adjacent skeleton voxels and are weighted by their spacing-scaled
// length; an edge counts when both endpoints lie in pred. A single-voxel
// skeleton has no edges and scores by containment of that voxel.
double detected_length_ratio(const Mask& pred, const Mask& gt_skeleton);

// Fraction of branches with at least detect_fraction of their voxels in
// pred.
double detected_branch_ratio(const Mask& pred,
                             const BranchDecomposition& gt_branches,
                             double detect_fraction);

// Composite of the four detection terms and the leakage penalty. Written in
// this exact shape so that a perfect case evaluates to 1.0 and an empty
// prediction to 0.3 without rounding residue.
inline double overall_score(double iou_v, double precision_v, double dbr,
                            double dlr, double leakage_v) {
    return (iou_v + precision_v + dbr + dlr) * 0.25 * 0.7 +
           (1.0 - leakage_v > 0.0 ? 1.0 - leakage_v : 0.0) * 0.3;
}

struct SegScores {
    double iou = 0.0;
    double precision = 0.0;
    double dlr = 0.0;
    double dbr = 0.0;
    double leakage = 0.0;
    double overall = 0.0;
    double detect_fraction = 0.8;
    // Set when pred has no foreground; the ratios involving pred are 0 by
    // convention rather than an error.
    bool empty_prediction = false;
};

SegScores evaluate_case(const Mask& pred, const Mask& gt,
                        double detect_fraction = 0.8);

}  // namespace airquant
