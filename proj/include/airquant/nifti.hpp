#ifndef AIRQUANT_NIFTI_HPP
#define AIRQUANT_NIFTI_HPP

#include <string>

#include "airquant/grid.hpp"

namespace airquant {

/// NIfTI-1 single-file I/O (.nii, or .nii.gz detected by the 0x1F8B prefix).
///
/// Supported on-disk datatypes: uint8, int16, uint16, int32, float32,
/// float64. Values are scaled by the header's scl_slope/scl_inter (slope 0 is
/// treated as slope 1). The affine comes from the sform when present, else
/// the qform, else a diagonal built from pixdim; spacing is taken from the
/// affine's column norms. When the affine's slice column points inferior
/// (negative world z), slices are reindexed at load so that increasing k is
/// always superior, and the affine is adjusted to keep world positions.
Volume read_volume(const std::string& path);

/// As read_volume, then binarize: stored value > 0.5 maps to 1, else 0.
/// Emits a warning on stderr when the file holds values other than {0, 1}.
Mask read_mask(const std::string& path);

/// Writes a float64 single-file NIfTI-1 image (sform only, gzip when the path
/// ends in ".gz"). Roundtrips dims and data exactly; spacing through the
/// header's float32 fields.
void write_volume(const Volume& v, const std::string& path);

/// Writes a uint8 mask the same way.
void write_mask(const Mask& m, const std::string& path);

}  // namespace airquant

#endif
