#include "airquant/radiomics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "airquant/error.hpp"

namespace airquant {

void FeatureVector::push(const std::string& name, double value) {
    entries.emplace_back(name, value);
}

double FeatureVector::at(const std::string& name) const {
    for (const auto& [n, v] : entries)
        if (n == name) return v;
    throw SchemaError("no feature named " + name);
}

bool FeatureVector::has(const std::string& name) const {
    for (const auto& [n, v] : entries)
        if (n == name) return true;
    return false;
}

const std::vector<std::array<int, 3>>& scan_angles() {
    // lexicographically positive half of the 26-neighborhood
    static const std::vector<std::array<int, 3>> angles = [] {
        std::vector<std::array<int, 3>> a;
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dz > 0 || (dz == 0 && dy > 0) || (dz == 0 && dy == 0 && dx > 0)) {
                        a.push_back({dx, dy, dz});
                    }
                }
        return a;
    }();
    return angles;
}

DiscretizedRoi discretize(const Volume& v, const Mask& roi, const ExtractionSettings& s) {
    v.validate();
    roi.validate();
    if (!check_same_geometry(v.geom, roi.geom)) {
        throw GeometryError("discretize: volume and ROI geometry differ");
    }
    if (!(s.bin_width > 0.0)) throw ConfigError("bin_width must be positive");
    if (roi.empty_foreground()) throw EmptyInputError("discretize: empty ROI");

    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < v.values.size(); ++n)
        if (roi.values[n]) lo = std::min(lo, v.values[n]);

    DiscretizedRoi d;
    d.geom = v.geom;
    d.levels.assign(v.values.size(), 0);
    for (std::size_t n = 0; n < v.values.size(); ++n) {
        if (!roi.values[n]) continue;
        const int level = static_cast<int>(std::floor((v.values[n] - lo) / s.bin_width)) + 1;
        d.levels[n] = level;
        d.ng = std::max(d.ng, level);
        ++d.roi_count;
    }
    return d;
}

namespace {

double log2_safe(double p) { return std::log2(p); }

// numpy-style linear interpolation on sorted values
double percentile(const std::vector<double>& sorted, double q) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double rank = q / 100.0 * double(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const double frac = rank - double(lo);
    if (lo + 1 >= n) return sorted[n - 1];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::vector<std::array<int, 3>> neighborhood26() {
    std::vector<std::array<int, 3>> n;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                if (dx || dy || dz) n.push_back({dx, dy, dz});
    return n;
}

}  // namespace

FeatureVector first_order_features(const Volume& v, const Mask& roi,
                                   const ExtractionSettings& s) {
    const DiscretizedRoi d = discretize(v, roi, s);  // validates the pair
    std::vector<double> x;
    x.reserve(d.roi_count);
    for (std::size_t n = 0; n < v.values.size(); ++n)
        if (roi.values[n]) x.push_back(v.values[n]);
    const double N = double(x.size());

    double sum = 0.0, sum2 = 0.0;
    for (double t : x) {
        sum += t;
        sum2 += t * t;
    }
    const double mean = sum / N;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0, mad = 0.0;
    for (double t : x) {
        const double c = t - mean;
        m2 += c * c;
        m3 += c * c * c;
        m4 += c * c * c * c;
        mad += std::abs(c);
    }
    m2 /= N;
    m3 /= N;
    m4 /= N;
    mad /= N;

    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    const double p10 = percentile(sorted, 10.0);
    const double p25 = percentile(sorted, 25.0);
    const double p50 = percentile(sorted, 50.0);
    const double p75 = percentile(sorted, 75.0);
    const double p90 = percentile(sorted, 90.0);

    // mean absolute deviation restricted to the 10th..90th percentile band
    double rsum = 0.0;
    std::size_t rn = 0;
    for (double t : sorted)
        if (t >= p10 && t <= p90) {
            rsum += t;
            ++rn;
        }
    double rmad = 0.0;
    if (rn > 0) {
        const double rmean = rsum / double(rn);
        for (double t : sorted)
            if (t >= p10 && t <= p90) rmad += std::abs(t - rmean);
        rmad /= double(rn);
    }

    // histogram entropy and uniformity on the discretized levels
    std::vector<double> hist(std::size_t(d.ng), 0.0);
    for (int lvl : d.levels)
        if (lvl > 0) hist[std::size_t(lvl - 1)] += 1.0;
    double entropy = 0.0, uniformity = 0.0;
    for (double h : hist) {
        if (h <= 0.0) continue;
        const double p = h / N;
        entropy -= p * log2_safe(p);
        uniformity += p * p;
    }

    const double voxel_volume =
        v.geom.spacing[0] * v.geom.spacing[1] * v.geom.spacing[2];
    const double variance = m2;
    const double skewness = variance > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    const double kurtosis = variance > 0.0 ? m4 / (m2 * m2) : 0.0;

    FeatureVector f;
    f.push("Energy", sum2);
    f.push("TotalEnergy", voxel_volume * sum2);
    f.push("Entropy", entropy);
    f.push("Minimum", sorted.front());
    f.push("Maximum", sorted.back());
    f.push("Range", sorted.back() - sorted.front());
    f.push("Mean", mean);
    f.push("Median", p50);
    f.push("Percentile10", p10);
    f.push("Percentile90", p90);
    f.push("InterquartileRange", p75 - p25);
    f.push("Variance", variance);
    f.push("StandardDeviation", std::sqrt(variance));
    f.push("Skewness", skewness);
    f.push("Kurtosis", kurtosis);
    f.push("MeanAbsoluteDeviation", mad);
    f.push("RobustMeanAbsoluteDeviation", rmad);
    f.push("RootMeanSquared", std::sqrt(sum2 / N));
    f.push("Uniformity", uniformity);
    return f;
}

std::vector<std::vector<double>> glcm_matrix(const DiscretizedRoi& d,
                                             const std::array<int, 3>& angle, int distance) {
    const std::size_t ng = std::size_t(d.ng);
    std::vector<std::vector<double>> m(ng, std::vector<double>(ng, 0.0));
    const int dx = angle[0] * distance, dy = angle[1] * distance, dz = angle[2] * distance;
    for (int k = 0; k < d.geom.dims[2]; ++k)
        for (int j = 0; j < d.geom.dims[1]; ++j)
            for (int i = 0; i < d.geom.dims[0]; ++i) {
                const int a = d.levels[d.geom.index(i, j, k)];
                if (!a) continue;
                const int x = i + dx, y = j + dy, z = k + dz;
                if (!d.geom.in_bounds(x, y, z)) continue;
                const int b = d.levels[d.geom.index(x, y, z)];
                if (!b) continue;
                m[std::size_t(a - 1)][std::size_t(b - 1)] += 1.0;
                m[std::size_t(b - 1)][std::size_t(a - 1)] += 1.0;
            }
    return m;
}

namespace {

struct GlcmAccum {
    // feature values in roster order, summed over contributing angles
    std::array<double, 23> f{};
    int angles = 0;
};

// all 23 features from one probability-normalized symmetric matrix
std::array<double, 23> glcm_features_of(const std::vector<std::vector<double>>& p, int ng) {
    std::vector<double> px(std::size_t(ng), 0.0);
    for (int i = 0; i < ng; ++i)
        for (int j = 0; j < ng; ++j) px[std::size_t(i)] += p[std::size_t(i)][std::size_t(j)];

    double mu = 0.0;
    for (int i = 0; i < ng; ++i) mu += (i + 1) * px[std::size_t(i)];
    double sigma2 = 0.0;
    for (int i = 0; i < ng; ++i) sigma2 += px[std::size_t(i)] * (i + 1 - mu) * (i + 1 - mu);

    std::vector<double> psum(std::size_t(2 * ng + 1), 0.0);   // index i+j, 2..2ng
    std::vector<double> pdiff(std::size_t(ng), 0.0);          // index |i-j|, 0..ng-1
    double autocorr = 0.0, contrast = 0.0, energy = 0.0, entropy = 0.0, maxp = 0.0;
    double cl_prom = 0.0, cl_shade = 0.0, cl_tend = 0.0, corr_num = 0.0;
    double idm = 0.0, idmn = 0.0, id = 0.0, idn = 0.0;
    double hxy1 = 0.0;
    for (int i = 0; i < ng; ++i)
        for (int j = 0; j < ng; ++j) {
            const double v = p[std::size_t(i)][std::size_t(j)];
            const double gi = i + 1, gj = j + 1;
            if (v > 0.0) {
                entropy -= v * log2_safe(v);
                const double m = px[std::size_t(i)] * px[std::size_t(j)];
                hxy1 -= v * log2_safe(m);
            }
            psum[std::size_t(i + j)] += v;  // offset: level sum (i+1)+(j+1) = i+j+2
            pdiff[std::size_t(std::abs(i - j))] += v;
            autocorr += gi * gj * v;
            contrast += (gi - gj) * (gi - gj) * v;
            energy += v * v;
            maxp = std::max(maxp, v);
            const double cshift = gi + gj - 2.0 * mu;
            cl_tend += cshift * cshift * v;
            cl_shade += cshift * cshift * cshift * v;
            cl_prom += cshift * cshift * cshift * cshift * v;
            corr_num += (gi - mu) * (gj - mu) * v;
            idm += v / (1.0 + (gi - gj) * (gi - gj));
            idmn += v / (1.0 + ((gi - gj) / ng) * ((gi - gj) / ng));
            id += v / (1.0 + std::abs(gi - gj));
            idn += v / (1.0 + std::abs(gi - gj) / ng);
        }

    double diff_avg = 0.0, diff_ent = 0.0, inv_var = 0.0;
    for (int k = 0; k < ng; ++k) {
        const double v = pdiff[std::size_t(k)];
        diff_avg += k * v;
        if (v > 0.0) diff_ent -= v * log2_safe(v);
        if (k > 0) inv_var += v / double(k * k);
    }
    double diff_var = 0.0;
    for (int k = 0; k < ng; ++k)
        diff_var += (k - diff_avg) * (k - diff_avg) * pdiff[std::size_t(k)];

    double sum_avg = 0.0, sum_ent = 0.0;
    for (int t = 0; t <= 2 * ng; ++t) {
        const double v = psum[std::size_t(t)];
        sum_avg += (t + 2) * v;
        if (v > 0.0) sum_ent -= v * log2_safe(v);
    }

    double hx = 0.0;
    for (int i = 0; i < ng; ++i)
        if (px[std::size_t(i)] > 0.0) hx -= px[std::size_t(i)] * log2_safe(px[std::size_t(i)]);
    double hxy2 = 0.0;
    for (int i = 0; i < ng; ++i)
        for (int j = 0; j < ng; ++j) {
            const double m = px[std::size_t(i)] * px[std::size_t(j)];
            if (m > 0.0) hxy2 -= m * log2_safe(m);
        }

    const double correlation = sigma2 > 0.0 ? corr_num / sigma2 : 0.0;
    const double imc1 = hx > 0.0 ? (entropy - hxy1) / hx : 0.0;
    const double imc2 = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * (hxy2 - entropy))));

    // roster order: Autocorrelation, ClusterProminence, ClusterShade,
    // ClusterTendency, Contrast, Correlation, DifferenceAverage,
    // DifferenceEntropy, DifferenceVariance, Id, Idm, Idmn, Idn, Imc1, Imc2,
    // InverseVariance, JointAverage, JointEnergy, JointEntropy,
    // MaximumProbability, SumAverage, SumEntropy, SumSquares
    return {autocorr, cl_prom,  cl_shade, cl_tend, contrast, correlation,
            diff_avg, diff_ent, diff_var, id,      idm,      idmn,
            idn,      imc1,     imc2,     inv_var, mu,       energy,
            entropy,  maxp,     sum_avg,  sum_ent, sigma2};
}

const std::array<const char*, 23> kGlcmNames = {
    "Autocorrelation", "ClusterProminence", "ClusterShade",       "ClusterTendency",
    "Contrast",        "Correlation",       "DifferenceAverage",  "DifferenceEntropy",
    "DifferenceVariance", "Id",             "Idm",                "Idmn",
    "Idn",             "Imc1",              "Imc2",               "InverseVariance",
    "JointAverage",    "JointEnergy",       "JointEntropy",       "MaximumProbability",
    "SumAverage",      "SumEntropy",        "SumSquares"};

}  // namespace

FeatureVector glcm_features(const DiscretizedRoi& d, const ExtractionSettings& s) {
    if (s.glcm_distance < 1) throw ConfigError("glcm_distance must be >= 1");
    GlcmAccum acc;
    for (const auto& angle : scan_angles()) {
        auto m = glcm_matrix(d, angle, s.glcm_distance);
        double total = 0.0;
        for (const auto& row : m)
            for (double v : row) total += v;
        if (total <= 0.0) continue;  // no in-ROI pair along this angle
        for (auto& row : m)
            for (double& v : row) v /= total;
        const auto f = glcm_features_of(m, d.ng);
        for (std::size_t t = 0; t < f.size(); ++t) acc.f[t] += f[t];
        ++acc.angles;
    }
    std::array<double, 23> mean{};
    if (acc.angles > 0) {
        for (std::size_t t = 0; t < mean.size(); ++t) mean[t] = acc.f[t] / acc.angles;
    } else {
        // isolated-voxel ROI: treat as the single-entry matrix at level (1,1)
        std::vector<std::vector<double>> unit{{1.0}};
        mean = glcm_features_of(unit, 1);
    }
    FeatureVector f;
    for (std::size_t t = 0; t < mean.size(); ++t) f.push(kGlcmNames[t], mean[t]);
    return f;
}

std::vector<std::vector<double>> glrlm_matrix(const DiscretizedRoi& d,
                                              const std::array<int, 3>& angle) {
    const int nx = d.geom.dims[0], ny = d.geom.dims[1], nz = d.geom.dims[2];
    std::vector<std::vector<double>> m;
    std::size_t max_len = 0;
    auto ensure = [&](std::size_t len) {
        if (len > max_len) {
            max_len = len;
            for (auto& row : m) row.resize(max_len, 0.0);
        }
    };
    m.assign(std::size_t(d.ng), {});
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const int lvl = d.levels[d.geom.index(i, j, k)];
                if (!lvl) continue;
                // run starts where the backward neighbor breaks the level
                const int pi = i - angle[0], pj = j - angle[1], pk = k - angle[2];
                if (d.geom.in_bounds(pi, pj, pk) &&
                    d.levels[d.geom.index(pi, pj, pk)] == lvl) {
                    continue;
                }
                std::size_t len = 0;
                int x = i, y = j, z = k;
                while (d.geom.in_bounds(x, y, z) && d.levels[d.geom.index(x, y, z)] == lvl) {
                    ++len;
                    x += angle[0];
                    y += angle[1];
                    z += angle[2];
                }
                ensure(len);
                m[std::size_t(lvl - 1)][len - 1] += 1.0;
            }
    for (auto& row : m) row.resize(std::max<std::size_t>(max_len, 1), 0.0);
    return m;
}

namespace {

// the 16 run/zone/dependence-style features share this shape: matrix rows are
// gray levels, columns are a size-like quantity starting at 1
struct SizeMatrixFeatures {
    double small_emph, large_emph, gln, glnn, szn, sznn, percentage;
    double gl_var, size_var, entropy;
    double low_gl, high_gl, small_low, small_high, large_low, large_high;
};

SizeMatrixFeatures size_matrix_features(const std::vector<std::vector<double>>& m,
                                        double np) {
    const std::size_t ng = m.size();
    const std::size_t ns = ng ? m[0].size() : 0;
    double total = 0.0;
    for (const auto& row : m)
        for (double v : row) total += v;

    SizeMatrixFeatures f{};
    if (total <= 0.0) return f;

    std::vector<double> row_sum(ng, 0.0), col_sum(ns, 0.0);
    double mu_g = 0.0, mu_s = 0.0;
    for (std::size_t i = 0; i < ng; ++i)
        for (std::size_t j = 0; j < ns; ++j) {
            const double v = m[i][j];
            row_sum[i] += v;
            col_sum[j] += v;
            const double gi = double(i + 1), sj = double(j + 1);
            f.small_emph += v / (sj * sj);
            f.large_emph += v * sj * sj;
            f.low_gl += v / (gi * gi);
            f.high_gl += v * gi * gi;
            f.small_low += v / (gi * gi * sj * sj);
            f.small_high += v * gi * gi / (sj * sj);
            f.large_low += v * sj * sj / (gi * gi);
            f.large_high += v * gi * gi * sj * sj;
            mu_g += v / total * gi;
            mu_s += v / total * sj;
        }
    for (std::size_t i = 0; i < ng; ++i) f.gln += row_sum[i] * row_sum[i];
    for (std::size_t j = 0; j < ns; ++j) f.szn += col_sum[j] * col_sum[j];

    for (std::size_t i = 0; i < ng; ++i)
        for (std::size_t j = 0; j < ns; ++j) {
            const double p = m[i][j] / total;
            if (p > 0.0) f.entropy -= p * log2_safe(p);
            f.gl_var += p * (double(i + 1) - mu_g) * (double(i + 1) - mu_g);
            f.size_var += p * (double(j + 1) - mu_s) * (double(j + 1) - mu_s);
        }

    f.small_emph /= total;
    f.large_emph /= total;
    f.low_gl /= total;
    f.high_gl /= total;
    f.small_low /= total;
    f.small_high /= total;
    f.large_low /= total;
    f.large_high /= total;
    f.glnn = f.gln / (total * total);
    f.sznn = f.szn / (total * total);
    f.gln /= total;
    f.szn /= total;
    f.percentage = total / np;
    return f;
}

}  // namespace

FeatureVector glrlm_features(const DiscretizedRoi& d, const ExtractionSettings&) {
    // every angle has at least one run when the ROI is nonempty, so the mean
    // needs no empty-angle exclusion
    std::array<double, 16> acc{};
    const auto& angles = scan_angles();
    for (const auto& angle : angles) {
        const auto m = glrlm_matrix(d, angle);
        const auto f = size_matrix_features(m, double(d.roi_count));
        const std::array<double, 16> v = {f.small_emph, f.large_emph, f.gln,      f.glnn,
                                          f.szn,        f.sznn,       f.percentage, f.gl_var,
                                          f.size_var,   f.entropy,    f.low_gl,   f.high_gl,
                                          f.small_low,  f.small_high, f.large_low, f.large_high};
        for (std::size_t t = 0; t < 16; ++t) acc[t] += v[t];
    }
    for (auto& v : acc) v /= double(angles.size());

    static const std::array<const char*, 16> names = {
        "ShortRunEmphasis",         "LongRunEmphasis",
        "GrayLevelNonUniformity",   "GrayLevelNonUniformityNormalized",
        "RunLengthNonUniformity",   "RunLengthNonUniformityNormalized",
        "RunPercentage",            "GrayLevelVariance",
        "RunVariance",              "RunEntropy",
        "LowGrayLevelRunEmphasis",  "HighGrayLevelRunEmphasis",
        "ShortRunLowGrayLevelEmphasis",  "ShortRunHighGrayLevelEmphasis",
        "LongRunLowGrayLevelEmphasis",   "LongRunHighGrayLevelEmphasis"};
    FeatureVector f;
    for (std::size_t t = 0; t < 16; ++t) f.push(names[t], acc[t]);
    return f;
}

std::vector<std::vector<double>> glszm_matrix(const DiscretizedRoi& d) {
    const auto neigh = neighborhood26();
    const int nx = d.geom.dims[0], ny = d.geom.dims[1], nz = d.geom.dims[2];
    std::vector<char> seen(d.levels.size(), 0);
    std::vector<std::pair<int, std::size_t>> zones;  // (level, size)
    std::size_t max_size = 0;
    std::vector<std::size_t> stack;
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const std::size_t seed = d.geom.index(i, j, k);
                const int lvl = d.levels[seed];
                if (!lvl || seen[seed]) continue;
                std::size_t size = 0;
                seen[seed] = 1;
                stack.assign(1, seed);
                while (!stack.empty()) {
                    const std::size_t n = stack.back();
                    stack.pop_back();
                    ++size;
                    const int z = int(n / (std::size_t(nx) * ny));
                    const int rem = int(n % (std::size_t(nx) * ny));
                    const int y = rem / nx, x = rem % nx;
                    for (const auto& o : neigh) {
                        const int xx = x + o[0], yy = y + o[1], zz = z + o[2];
                        if (!d.geom.in_bounds(xx, yy, zz)) continue;
                        const std::size_t nn = d.geom.index(xx, yy, zz);
                        if (!seen[nn] && d.levels[nn] == lvl) {
                            seen[nn] = 1;
                            stack.push_back(nn);
                        }
                    }
                }
                zones.emplace_back(lvl, size);
                max_size = std::max(max_size, size);
            }
    std::vector<std::vector<double>> m(std::size_t(d.ng),
                                       std::vector<double>(std::max<std::size_t>(max_size, 1), 0.0));
    for (const auto& [lvl, size] : zones) m[std::size_t(lvl - 1)][size - 1] += 1.0;
    return m;
}

FeatureVector glszm_features(const DiscretizedRoi& d) {
    const auto m = glszm_matrix(d);
    const auto f = size_matrix_features(m, double(d.roi_count));
    static const std::array<const char*, 16> names = {
        "SmallAreaEmphasis",        "LargeAreaEmphasis",
        "GrayLevelNonUniformity",   "GrayLevelNonUniformityNormalized",
        "SizeZoneNonUniformity",    "SizeZoneNonUniformityNormalized",
        "ZonePercentage",           "GrayLevelVariance",
        "ZoneVariance",             "ZoneEntropy",
        "LowGrayLevelZoneEmphasis", "HighGrayLevelZoneEmphasis",
        "SmallAreaLowGrayLevelEmphasis",  "SmallAreaHighGrayLevelEmphasis",
        "LargeAreaLowGrayLevelEmphasis",  "LargeAreaHighGrayLevelEmphasis"};
    const std::array<double, 16> v = {f.small_emph, f.large_emph, f.gln,        f.glnn,
                                      f.szn,        f.sznn,       f.percentage, f.gl_var,
                                      f.size_var,   f.entropy,    f.low_gl,     f.high_gl,
                                      f.small_low,  f.small_high, f.large_low,  f.large_high};
    FeatureVector out;
    for (std::size_t t = 0; t < 16; ++t) out.push(names[t], v[t]);
    return out;
}

std::vector<std::vector<double>> gldm_matrix(const DiscretizedRoi& d, int alpha) {
    const auto neigh = neighborhood26();
    const int nx = d.geom.dims[0], ny = d.geom.dims[1], nz = d.geom.dims[2];
    std::vector<std::vector<double>> m(std::size_t(d.ng), std::vector<double>(27, 0.0));
    std::size_t max_dep = 1;  // dependence size = count + 1, at least 1
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const int lvl = d.levels[d.geom.index(i, j, k)];
                if (!lvl) continue;
                std::size_t count = 0;
                for (const auto& o : neigh) {
                    const int x = i + o[0], y = j + o[1], z = k + o[2];
                    if (!d.geom.in_bounds(x, y, z)) continue;
                    const int nl = d.levels[d.geom.index(x, y, z)];
                    if (nl && std::abs(nl - lvl) <= alpha) ++count;
                }
                m[std::size_t(lvl - 1)][count] += 1.0;  // column index = dependence - 1 = count
                max_dep = std::max(max_dep, count + 1);
            }
    for (auto& row : m) row.resize(max_dep, 0.0);
    return m;
}

FeatureVector gldm_features(const DiscretizedRoi& d, const ExtractionSettings& s) {
    if (s.gldm_alpha < 0) throw ConfigError("gldm_alpha must be >= 0");
    const auto m = gldm_matrix(d, s.gldm_alpha);
    const auto f = size_matrix_features(m, double(d.roi_count));
    static const std::array<const char*, 14> names = {
        "SmallDependenceEmphasis",   "LargeDependenceEmphasis",
        "GrayLevelNonUniformity",    "DependenceNonUniformity",
        "DependenceNonUniformityNormalized", "GrayLevelVariance",
        "DependenceVariance",        "DependenceEntropy",
        "LowGrayLevelEmphasis",      "HighGrayLevelEmphasis",
        "SmallDependenceLowGrayLevelEmphasis",  "SmallDependenceHighGrayLevelEmphasis",
        "LargeDependenceLowGrayLevelEmphasis",  "LargeDependenceHighGrayLevelEmphasis"};
    const std::array<double, 14> v = {f.small_emph, f.large_emph, f.gln,       f.szn,
                                      f.sznn,       f.gl_var,     f.size_var,  f.entropy,
                                      f.low_gl,     f.high_gl,    f.small_low, f.small_high,
                                      f.large_low,  f.large_high};
    FeatureVector out;
    for (std::size_t t = 0; t < 14; ++t) out.push(names[t], v[t]);
    return out;
}

std::vector<NgtdmRow> ngtdm_table(const DiscretizedRoi& d) {
    const auto neigh = neighborhood26();
    const int nx = d.geom.dims[0], ny = d.geom.dims[1], nz = d.geom.dims[2];
    std::vector<NgtdmRow> rows(std::size_t(d.ng));
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const int lvl = d.levels[d.geom.index(i, j, k)];
                if (!lvl) continue;
                double sum = 0.0;
                int count = 0;
                for (const auto& o : neigh) {
                    const int x = i + o[0], y = j + o[1], z = k + o[2];
                    if (!d.geom.in_bounds(x, y, z)) continue;
                    const int nl = d.levels[d.geom.index(x, y, z)];
                    if (nl) {
                        sum += nl;
                        ++count;
                    }
                }
                auto& row = rows[std::size_t(lvl - 1)];
                row.n += 1.0;
                // a voxel with no in-ROI neighbor contributes nothing to s
                if (count > 0) row.s += std::abs(lvl - sum / count);
            }
    return rows;
}

FeatureVector ngtdm_features(const DiscretizedRoi& d) {
    const auto rows = ngtdm_table(d);
    const double np = double(d.roi_count);
    const int ng = d.ng;

    int ngp = 0;
    double sum_ps = 0.0, sum_s = 0.0;
    for (const auto& r : rows) {
        if (r.n > 0.0) ++ngp;
        sum_ps += r.n / np * r.s;
        sum_s += r.s;
    }

    const double coarseness = sum_ps > 0.0 ? 1.0 / sum_ps : 1e6;

    double contrast = 0.0;
    if (ngp > 1) {
        double pair_term = 0.0;
        for (int i = 1; i <= ng; ++i)
            for (int j = 1; j <= ng; ++j) {
                const double pi = rows[std::size_t(i - 1)].n / np;
                const double pj = rows[std::size_t(j - 1)].n / np;
                if (pi > 0.0 && pj > 0.0) pair_term += pi * pj * (i - j) * (i - j);
            }
        contrast = pair_term / (double(ngp) * (ngp - 1)) * (sum_s / np);
    }

    double busy_den = 0.0, complexity = 0.0, strength_num = 0.0;
    for (int i = 1; i <= ng; ++i) {
        const double pi = rows[std::size_t(i - 1)].n / np;
        if (pi <= 0.0) continue;
        const double si = rows[std::size_t(i - 1)].s;
        for (int j = 1; j <= ng; ++j) {
            const double pj = rows[std::size_t(j - 1)].n / np;
            if (pj <= 0.0) continue;
            const double sj = rows[std::size_t(j - 1)].s;
            busy_den += std::abs(i * pi - j * pj);
            complexity += std::abs(i - j) * (pi * si + pj * sj) / (pi + pj);
            strength_num += (pi + pj) * (i - j) * (i - j);
        }
    }
    const double busyness = busy_den > 0.0 ? sum_ps / busy_den : 0.0;
    complexity /= np;
    const double strength = sum_s > 0.0 ? strength_num / sum_s : 0.0;

    FeatureVector f;
    f.push("Coarseness", coarseness);
    f.push("Contrast", contrast);
    f.push("Busyness", busyness);
    f.push("Complexity", complexity);
    f.push("Strength", strength);
    return f;
}

namespace {

// eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi rotations,
// descending order
std::array<double, 3> symmetric_eigenvalues(std::array<std::array<double, 3>, 3> a) {
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
        if (off < 1e-15 * (1.0 + std::abs(a[0][0]) + std::abs(a[1][1]) + std::abs(a[2][2]))) break;
        for (int p = 0; p < 3; ++p)
            for (int q = p + 1; q < 3; ++q) {
                if (a[std::size_t(p)][std::size_t(q)] == 0.0) continue;
                const double app = a[std::size_t(p)][std::size_t(p)];
                const double aqq = a[std::size_t(q)][std::size_t(q)];
                const double apq = a[std::size_t(p)][std::size_t(q)];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int r = 0; r < 3; ++r) {
                    const double arp = a[std::size_t(r)][std::size_t(p)];
                    const double arq = a[std::size_t(r)][std::size_t(q)];
                    a[std::size_t(r)][std::size_t(p)] = c * arp - s * arq;
                    a[std::size_t(r)][std::size_t(q)] = s * arp + c * arq;
                }
                for (int r = 0; r < 3; ++r) {
                    const double apr = a[std::size_t(p)][std::size_t(r)];
                    const double aqr = a[std::size_t(q)][std::size_t(r)];
                    a[std::size_t(p)][std::size_t(r)] = c * apr - s * aqr;
                    a[std::size_t(q)][std::size_t(r)] = s * apr + c * aqr;
                }
            }
    }
    std::array<double, 3> ev = {a[0][0], a[1][1], a[2][2]};
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

}  // namespace

FeatureVector shape3d_features(const Mask& roi) {
    roi.validate();
    if (roi.empty_foreground()) throw EmptyInputError("shape3d_features: empty ROI");
    const auto& g = roi.geom;
    const double sx = g.spacing[0], sy = g.spacing[1], sz = g.spacing[2];
    const std::size_t n_fg = roi.foreground_count();
    const double voxel_volume = double(n_fg) * sx * sy * sz;

    // exposed voxel faces; the enclosed volume of that surface equals the
    // voxel volume, which is what MeshVolume reports here
    const double face_area[3] = {sy * sz, sx * sz, sx * sy};
    const std::array<std::array<int, 3>, 6> face_dirs = {
        {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}}};
    double area = 0.0;
    std::vector<std::array<int, 3>> boundary;
    double mean[3] = {0.0, 0.0, 0.0};
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) {
                if (!roi.at(i, j, k)) continue;
                mean[0] += i * sx;
                mean[1] += j * sy;
                mean[2] += k * sz;
                bool exposed = false;
                for (int face = 0; face < 6; ++face) {
                    const auto& o = face_dirs[std::size_t(face)];
                    const int x = i + o[0], y = j + o[1], z = k + o[2];
                    if (!g.in_bounds(x, y, z) || !roi.at(x, y, z)) {
                        area += face_area[face / 2];
                        exposed = true;
                    }
                }
                if (exposed) boundary.push_back({i, j, k});
            }
    for (double& m : mean) m /= double(n_fg);

    // candidates for the farthest pair: boundary voxels that are not the
    // midpoint of two mask voxels along any lattice direction (only hull
    // extreme points can realize the maximum)
    std::vector<std::array<int, 3>> cand;
    for (const auto& [i, j, k] : boundary) {
        bool midpoint = false;
        for (const auto& dir : scan_angles()) {
            const int xa = i + dir[0], ya = j + dir[1], za = k + dir[2];
            const int xb = i - dir[0], yb = j - dir[1], zb = k - dir[2];
            if (g.in_bounds(xa, ya, za) && g.in_bounds(xb, yb, zb) && roi.at(xa, ya, za) &&
                roi.at(xb, yb, zb)) {
                midpoint = true;
                break;
            }
        }
        if (!midpoint) cand.push_back({i, j, k});
    }
    double max_d2 = 0.0;
    for (std::size_t a = 0; a < cand.size(); ++a)
        for (std::size_t b = a + 1; b < cand.size(); ++b) {
            const double dx = (cand[a][0] - cand[b][0]) * sx;
            const double dy = (cand[a][1] - cand[b][1]) * sy;
            const double dz = (cand[a][2] - cand[b][2]) * sz;
            max_d2 = std::max(max_d2, dx * dx + dy * dy + dz * dz);
        }

    // population covariance of world voxel centers
    std::array<std::array<double, 3>, 3> cov{};
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) {
                if (!roi.at(i, j, k)) continue;
                const double c[3] = {i * sx - mean[0], j * sy - mean[1], k * sz - mean[2]};
                for (int r = 0; r < 3; ++r)
                    for (int q = 0; q < 3; ++q) cov[std::size_t(r)][std::size_t(q)] += c[r] * c[q];
            }
    for (auto& row : cov)
        for (double& v : row) v /= double(n_fg);
    auto ev = symmetric_eigenvalues(cov);
    for (double& v : ev) v = std::max(v, 0.0);  // clamp numerical negatives

    const double mesh_volume = voxel_volume;
    const double sphericity =
        std::cbrt(36.0 * std::acos(-1.0) * mesh_volume * mesh_volume) / area;
    const double elongation = ev[0] > 0.0 ? std::sqrt(ev[1] / ev[0]) : 1.0;
    const double flatness = ev[0] > 0.0 ? std::sqrt(ev[2] / ev[0]) : 1.0;

    FeatureVector f;
    f.push("MeshVolume", mesh_volume);
    f.push("VoxelVolume", voxel_volume);
    f.push("SurfaceArea", area);
    f.push("SurfaceVolumeRatio", area / mesh_volume);
    f.push("Sphericity", sphericity);
    f.push("Maximum3DDiameter", std::sqrt(max_d2));
    f.push("MajorAxisLength", 4.0 * std::sqrt(ev[0]));
    f.push("MinorAxisLength", 4.0 * std::sqrt(ev[1]));
    f.push("LeastAxisLength", 4.0 * std::sqrt(ev[2]));
    f.push("Elongation", elongation);
    f.push("Flatness", flatness);
    return f;
}

FeatureVector extract_all(const Volume& v, const Mask& roi, const ExtractionSettings& s) {
    const DiscretizedRoi d = discretize(v, roi, s);
    FeatureVector out;
    auto append = [&out](const char* prefix, const FeatureVector& f) {
        for (const auto& [name, value] : f.entries) out.push(std::string(prefix) + name, value);
    };
    append("firstorder_", first_order_features(v, roi, s));
    append("glcm_", glcm_features(d, s));
    append("glszm_", glszm_features(d));
    append("glrlm_", glrlm_features(d, s));
    append("gldm_", gldm_features(d, s));
    append("ngtdm_", ngtdm_features(d));
    append("shape_", shape3d_features(roi));
    return out;
}

}  // namespace airquant
