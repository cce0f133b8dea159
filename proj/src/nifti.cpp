#include "airquant/nifti.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <vector>

#include "airquant/error.hpp"

namespace airquant {
namespace {

#pragma pack(push, 1)
struct NiftiHeader {
    std::int32_t sizeof_hdr;
    char data_type[10];
    char db_name[18];
    std::int32_t extents;
    std::int16_t session_error;
    char regular;
    char dim_info;
    std::int16_t dim[8];
    float intent_p1, intent_p2, intent_p3;
    std::int16_t intent_code;
    std::int16_t datatype;
    std::int16_t bitpix;
    std::int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    std::int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max, cal_min;
    float slice_duration;
    float toffset;
    std::int32_t glmax, glmin;
    char descrip[80];
    char aux_file[24];
    std::int16_t qform_code;
    std::int16_t sform_code;
    float quatern_b, quatern_c, quatern_d;
    float qoffset_x, qoffset_y, qoffset_z;
    float srow_x[4];
    float srow_y[4];
    float srow_z[4];
    char intent_name[16];
    char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(NiftiHeader) == 348, "NIfTI-1 header must be 348 bytes");

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtInt32 = 8;
constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int16_t kDtFloat64 = 64;
constexpr std::int16_t kDtUint16 = 512;

template <typename T>
T byteswap_scalar(T v) {
    auto bytes = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
}

void swap_header(NiftiHeader& h) {
    h.sizeof_hdr = byteswap_scalar(h.sizeof_hdr);
    for (auto& d : h.dim) d = byteswap_scalar(d);
    h.datatype = byteswap_scalar(h.datatype);
    h.bitpix = byteswap_scalar(h.bitpix);
    for (auto& p : h.pixdim) p = byteswap_scalar(p);
    h.vox_offset = byteswap_scalar(h.vox_offset);
    h.scl_slope = byteswap_scalar(h.scl_slope);
    h.scl_inter = byteswap_scalar(h.scl_inter);
    h.qform_code = byteswap_scalar(h.qform_code);
    h.sform_code = byteswap_scalar(h.sform_code);
    h.quatern_b = byteswap_scalar(h.quatern_b);
    h.quatern_c = byteswap_scalar(h.quatern_c);
    h.quatern_d = byteswap_scalar(h.quatern_d);
    h.qoffset_x = byteswap_scalar(h.qoffset_x);
    h.qoffset_y = byteswap_scalar(h.qoffset_y);
    h.qoffset_z = byteswap_scalar(h.qoffset_z);
    for (auto& v : h.srow_x) v = byteswap_scalar(v);
    for (auto& v : h.srow_y) v = byteswap_scalar(v);
    for (auto& v : h.srow_z) v = byteswap_scalar(v);
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> head(2);
    in.read(reinterpret_cast<char*>(head.data()), 2);
    const bool gz = in.gcount() == 2 && head[0] == 0x1F && head[1] == 0x8B;
    in.close();

    if (gz) {
        gzFile f = gzopen(path.c_str(), "rb");
        if (!f) throw IoError("cannot open " + path);
        std::vector<std::uint8_t> out;
        std::vector<std::uint8_t> buf(1 << 20);
        int n = 0;
        while ((n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()))) > 0) {
            out.insert(out.end(), buf.begin(), buf.begin() + n);
        }
        const bool bad = n < 0;
        gzclose(f);
        if (bad) throw FormatError("corrupt gzip stream in " + path);
        return out;
    }

    std::ifstream raw(path, std::ios::binary | std::ios::ate);
    if (!raw) throw IoError("cannot open " + path);
    const auto size = static_cast<std::size_t>(raw.tellg());
    raw.seekg(0);
    std::vector<std::uint8_t> out(size);
    raw.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(size));
    if (static_cast<std::size_t>(raw.gcount()) != size) throw IoError("short read on " + path);
    return out;
}

struct Parsed {
    Geometry geom;
    std::vector<double> values;  // scaled, x-fastest, k superior-up
};

std::array<double, 16> affine_from_quaternion(const NiftiHeader& h) {
    const double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
    double a2 = 1.0 - (b * b + c * c + d * d);
    const double a = a2 > 0.0 ? std::sqrt(a2) : 0.0;
    const double qfac = (h.pixdim[0] < 0.0f) ? -1.0 : 1.0;
    const double R[3][3] = {
        {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
        {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
        {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c}};
    std::array<double, 16> m{};
    const double off[3] = {h.qoffset_x, h.qoffset_y, h.qoffset_z};
    for (int r = 0; r < 3; ++r) {
        m[static_cast<std::size_t>(4 * r + 0)] = R[r][0] * h.pixdim[1];
        m[static_cast<std::size_t>(4 * r + 1)] = R[r][1] * h.pixdim[2];
        m[static_cast<std::size_t>(4 * r + 2)] = R[r][2] * h.pixdim[3] * qfac;
        m[static_cast<std::size_t>(4 * r + 3)] = off[r];
    }
    m[15] = 1.0;
    return m;
}

Parsed parse_nifti(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() < sizeof(NiftiHeader)) {
        throw FormatError(path + ": truncated header (" + std::to_string(bytes.size()) +
                          " bytes, need 348)");
    }
    NiftiHeader h{};
    std::memcpy(&h, bytes.data(), sizeof(h));

    bool swapped = false;
    if (h.sizeof_hdr != 348) {
        if (byteswap_scalar(h.sizeof_hdr) == 348) {
            swap_header(h);
            swapped = true;
        } else {
            throw FormatError(path + ": not a NIfTI-1 file (sizeof_hdr " +
                              std::to_string(h.sizeof_hdr) + ")");
        }
    }
    if (std::memcmp(h.magic, "n+1", 3) != 0 || h.magic[3] != '\0') {
        throw FormatError(path + ": bad magic bytes (expected single-file \"n+1\")");
    }
    if (h.dim[0] < 1 || h.dim[0] > 7) {
        throw FormatError(path + ": invalid dim[0] " + std::to_string(h.dim[0]));
    }
    for (int a = 4; a <= h.dim[0]; ++a) {
        if (h.dim[a] > 1) {
            throw FormatError(path + ": only 3D images are supported (dim[" + std::to_string(a) +
                              "] = " + std::to_string(h.dim[a]) + ")");
        }
    }

    Geometry g;
    g.dims = {h.dim[1], h.dim[0] >= 2 ? h.dim[2] : 1, h.dim[0] >= 3 ? h.dim[3] : 1};
    for (int a = 0; a < 3; ++a) {
        if (g.dims[static_cast<std::size_t>(a)] < 1) {
            throw GeometryError(path + ": non-positive dim on axis " + std::to_string(a));
        }
    }

    if (h.sform_code > 0) {
        const float* rows[3] = {h.srow_x, h.srow_y, h.srow_z};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c)
                g.affine[static_cast<std::size_t>(4 * r + c)] = rows[r][c];
        g.affine[15] = 1.0;
    } else if (h.qform_code > 0) {
        g.affine = affine_from_quaternion(h);
    } else {
        for (int a = 0; a < 3; ++a) {
            if (!(h.pixdim[a + 1] > 0.0f)) {
                throw GeometryError(path + ": non-positive pixdim on axis " + std::to_string(a));
            }
        }
        g.spacing = {h.pixdim[1], h.pixdim[2], h.pixdim[3]};
        g.set_identity_affine();
    }
    // spacing from the affine's column norms keeps the pair consistent
    for (int c = 0; c < 3; ++c) {
        double n = 0.0;
        for (int r = 0; r < 3; ++r) n += g.affine_at(r, c) * g.affine_at(r, c);
        n = std::sqrt(n);
        if (!(n > 0.0)) throw GeometryError(path + ": zero spacing on axis " + std::to_string(c));
        g.spacing[static_cast<std::size_t>(c)] = n;
    }

    const std::size_t count = g.voxel_count();
    std::size_t elem = 0;
    switch (h.datatype) {
        case kDtUint8: elem = 1; break;
        case kDtInt16: elem = 2; break;
        case kDtUint16: elem = 2; break;
        case kDtInt32: elem = 4; break;
        case kDtFloat32: elem = 4; break;
        case kDtFloat64: elem = 8; break;
        default:
            throw UnsupportedDatatypeError(path + ": unsupported datatype code " +
                                           std::to_string(h.datatype));
    }
    std::size_t offset = static_cast<std::size_t>(h.vox_offset);
    if (offset < sizeof(NiftiHeader)) offset = sizeof(NiftiHeader);
    if (bytes.size() < offset + count * elem) {
        throw FormatError(path + ": file too short for " + std::to_string(count) + " voxels");
    }

    double slope = h.scl_slope;
    if (slope == 0.0) slope = 1.0;  // common writer quirk
    const double inter = h.scl_inter;

    std::vector<double> values(count);
    const std::uint8_t* p = bytes.data() + offset;
    auto load = [&](auto tag) {
        using T = decltype(tag);
        for (std::size_t n = 0; n < count; ++n) {
            T v;
            std::memcpy(&v, p + n * sizeof(T), sizeof(T));
            if (swapped) v = byteswap_scalar(v);
            values[n] = slope * static_cast<double>(v) + inter;
        }
    };
    switch (h.datatype) {
        case kDtUint8: load(std::uint8_t{}); break;
        case kDtInt16: load(std::int16_t{}); break;
        case kDtUint16: load(std::uint16_t{}); break;
        case kDtInt32: load(std::int32_t{}); break;
        case kDtFloat32: load(float{}); break;
        case kDtFloat64: load(double{}); break;
        default: break;
    }

    // normalize the slice axis so increasing k points superior (world +z)
    if (g.affine_at(2, 2) < 0.0) {
        const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
        std::vector<double> flipped(count);
        for (int k = 0; k < nz; ++k) {
            const std::size_t src = static_cast<std::size_t>(k) * static_cast<std::size_t>(nx) * ny;
            const std::size_t dst =
                static_cast<std::size_t>(nz - 1 - k) * static_cast<std::size_t>(nx) * ny;
            std::memcpy(flipped.data() + dst, values.data() + src,
                        static_cast<std::size_t>(nx) * ny * sizeof(double));
        }
        values.swap(flipped);
        for (int r = 0; r < 3; ++r) {
            const double col = g.affine_at(r, 2);
            g.affine_at(r, 3) += (nz - 1) * col;
            g.affine_at(r, 2) = -col;
        }
    }

    Parsed out;
    out.geom = g;
    out.values = std::move(values);
    return out;
}

void write_nifti(const Geometry& geom, const void* data, std::int16_t datatype, std::size_t elem,
                 const std::string& path) {
    NiftiHeader h{};
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = 3;
    h.dim[1] = static_cast<std::int16_t>(geom.dims[0]);
    h.dim[2] = static_cast<std::int16_t>(geom.dims[1]);
    h.dim[3] = static_cast<std::int16_t>(geom.dims[2]);
    for (int a = 4; a < 8; ++a) h.dim[a] = 1;
    h.datatype = datatype;
    h.bitpix = static_cast<std::int16_t>(8 * elem);
    h.pixdim[0] = 1.0f;
    for (int a = 0; a < 3; ++a)
        h.pixdim[a + 1] = static_cast<float>(geom.spacing[static_cast<std::size_t>(a)]);
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.scl_inter = 0.0f;
    h.sform_code = 1;
    h.qform_code = 0;
    const auto row = [&](int r, float* dst) {
        for (int c = 0; c < 4; ++c) dst[c] = static_cast<float>(geom.affine_at(r, c));
    };
    row(0, h.srow_x);
    row(1, h.srow_y);
    row(2, h.srow_z);
    std::memcpy(h.magic, "n+1", 4);

    const char pad[4] = {0, 0, 0, 0};
    const std::size_t nbytes = geom.voxel_count() * elem;
    const bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
    if (gz) {
        gzFile f = gzopen(path.c_str(), "wb");
        if (!f) throw IoError("cannot open " + path + " for writing");
        bool ok = gzwrite(f, &h, sizeof(h)) == static_cast<int>(sizeof(h)) &&
                  gzwrite(f, pad, 4) == 4;
        // gzwrite takes unsigned chunk sizes; write in 256 MiB pieces
        const std::uint8_t* src = static_cast<const std::uint8_t*>(data);
        std::size_t left = nbytes;
        while (ok && left > 0) {
            const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(left, 1u << 28));
            ok = gzwrite(f, src, chunk) == static_cast<int>(chunk);
            src += chunk;
            left -= chunk;
        }
        gzclose(f);
        if (!ok) throw IoError("write failed on " + path);
    } else {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open " + path + " for writing");
        out.write(reinterpret_cast<const char*>(&h), sizeof(h));
        out.write(pad, 4);
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(nbytes));
        if (!out) throw IoError("write failed on " + path);
    }
}

}  // namespace

Volume read_volume(const std::string& path) {
    Parsed p = parse_nifti(path);
    Volume v;
    v.geom = p.geom;
    v.values = std::move(p.values);
    v.validate();
    return v;
}

Mask read_mask(const std::string& path) {
    Parsed p = parse_nifti(path);
    Mask m;
    m.geom = p.geom;
    m.values.resize(p.values.size());
    bool nonbinary = false;
    for (std::size_t i = 0; i < p.values.size(); ++i) {
        const double v = p.values[i];
        if (v != 0.0 && v != 1.0) nonbinary = true;
        m.values[i] = v > 0.5 ? 1 : 0;
    }
    if (nonbinary) {
        std::cerr << "warning: " << path << " holds non-binary values; thresholded at 0.5\n";
    }
    m.validate();
    return m;
}

void write_volume(const Volume& v, const std::string& path) {
    v.validate();
    write_nifti(v.geom, v.values.data(), kDtFloat64, sizeof(double), path);
}

void write_mask(const Mask& m, const std::string& path) {
    m.validate();
    write_nifti(m.geom, m.values.data(), kDtUint8, 1, path);
}

}  // namespace airquant
