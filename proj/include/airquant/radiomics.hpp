#pragma once

#include <string>
#include <utility>
#include <vector>

#include "airquant/grid.hpp"

namespace airquant {

/// Parameters shared by the texture families.
/// bin_width is in intensity units (HU for CT). The 13 scan angles are the
/// unique non-opposite offsets of the 26-neighborhood and are fixed.
struct ExtractionSettings {
    double bin_width = 25.0;
    int glcm_distance = 1;
    int gldm_alpha = 0;
};

/// ROI intensities quantized to integer gray levels.
/// levels holds one entry per grid voxel, 0 outside the ROI and 1..ng inside;
/// level 1 is the bin containing the ROI minimum.
struct DiscretizedRoi {
    std::vector<int> levels;
    int ng = 0;
    std::size_t roi_count = 0;
    Geometry geom;
};

/// Ordered feature-name -> value map. Order is the definition order of the
/// family rosters and is identical on every run.
struct FeatureVector {
    std::vector<std::pair<std::string, double>> entries;

    void push(const std::string& name, double value);
    double at(const std::string& name) const;
    bool has(const std::string& name) const;
    std::size_t size() const { return entries.size(); }
};

/// The 13 unique non-opposite direction offsets of the 26-neighborhood,
/// in a fixed lexicographic order.
const std::vector<std::array<int, 3>>& scan_angles();

/// level(x) = floor((v(x) - min_roi) / bin_width) + 1.
DiscretizedRoi discretize(const Volume& v, const Mask& roi, const ExtractionSettings& s);

/// 19 intensity statistics. Entropy and uniformity are computed on the
/// discretized histogram, which is why the settings are needed here.
FeatureVector first_order_features(const Volume& v, const Mask& roi, const ExtractionSettings& s);

/// Symmetric gray level co-occurrence features, averaged over the 13 angles
/// at the configured distance. Angles with no in-ROI pair are excluded from
/// the average. 23 features (MCC is deliberately not computed).
FeatureVector glcm_features(const DiscretizedRoi& d, const ExtractionSettings& s);

/// Gray level run length features over the 13 angles, 16 features.
FeatureVector glrlm_features(const DiscretizedRoi& d, const ExtractionSettings& s);

/// Gray level size zone features; zones are 26-connected equal-level
/// components. 16 features.
FeatureVector glszm_features(const DiscretizedRoi& d);

/// Gray level dependence features: dependence of a voxel counts 26-neighbors
/// within gldm_alpha of its level. 14 features.
FeatureVector gldm_features(const DiscretizedRoi& d, const ExtractionSettings& s);

/// Neighbouring gray tone difference features, 5 features.
FeatureVector ngtdm_features(const DiscretizedRoi& d);

/// 11 geometry features of the ROI itself. Surface area uses the exposed
/// voxel-face convention, and the mesh volume equals the voxel volume under
/// that convention; sphericity therefore differs from marching-cubes tools.
FeatureVector shape3d_features(const Mask& roi);

/// All seven families concatenated with family prefixes, in the order
/// firstorder, glcm, glszm, glrlm, gldm, ngtdm, shape. 104 features.
FeatureVector extract_all(const Volume& v, const Mask& roi, const ExtractionSettings& s);

// Per-angle matrix builders, exposed so tests can check the matrices
// themselves against enumeration oracles.

/// Symmetric co-occurrence counts for one angle; [i-1][j-1] for levels i, j.
std::vector<std::vector<double>> glcm_matrix(const DiscretizedRoi& d,
                                             const std::array<int, 3>& angle, int distance);

/// Run-length counts for one angle; [i-1][r-1] for level i, run length r.
std::vector<std::vector<double>> glrlm_matrix(const DiscretizedRoi& d,
                                              const std::array<int, 3>& angle);

/// Zone-size counts; [i-1][z-1] for level i, zone size z.
std::vector<std::vector<double>> glszm_matrix(const DiscretizedRoi& d);

/// Dependence counts; [i-1][j-1] for level i, dependence size j (count + 1).
std::vector<std::vector<double>> gldm_matrix(const DiscretizedRoi& d, int alpha);

/// NGTDM per level i (1..ng): occurrence count n_i and summed absolute
/// difference s_i from the mean of in-ROI 26-neighbors.
struct NgtdmRow {
    double n = 0.0;
    double s = 0.0;
};
std::vector<NgtdmRow> ngtdm_table(const DiscretizedRoi& d);

}  // namespace airquant
