#pragma once

// Brute-force radiomics reference, kept deliberately different from the
// library: co-occurrence by all-pairs enumeration, runs by whole-line
// segmentation, zones by map-based BFS, surface area by adjacent-pair
// counting, eigenvalues in closed form. Matching results are then evidence,
// not tautology.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "airquant/grid.hpp"
#include "airquant/radiomics.hpp"

namespace roracle {

using airquant::DiscretizedRoi;
using airquant::Geometry;
using airquant::Mask;
using airquant::Volume;

struct NamedValues {
    std::vector<std::pair<std::string, double>> v;
    void push(const std::string& n, double x) { v.emplace_back(n, x); }
};

inline std::vector<int> oracle_discretize(const Volume& vol, const Mask& roi, double bin_width,
                                          int* ng_out) {
    double lo = 1e300;
    for (std::size_t n = 0; n < vol.values.size(); ++n)
        if (roi.values[n] && vol.values[n] < lo) lo = vol.values[n];
    std::vector<int> levels(vol.values.size(), 0);
    int ng = 0;
    for (std::size_t n = 0; n < vol.values.size(); ++n) {
        if (!roi.values[n]) continue;
        levels[n] = int(std::floor((vol.values[n] - lo) / bin_width)) + 1;
        ng = std::max(ng, levels[n]);
    }
    if (ng_out) *ng_out = ng;
    return levels;
}

// ---------------------------------------------------------------- first order

inline double oracle_percentile(std::vector<double> x, double q) {
    std::sort(x.begin(), x.end());
    const double pos = q * double(x.size() - 1) / 100.0;
    const std::size_t lo = std::size_t(pos);
    if (lo + 1 == x.size()) return x.back();
    return x[lo] * (1.0 - (pos - double(lo))) + x[lo + 1] * (pos - double(lo));
}

inline NamedValues oracle_first_order(const Volume& vol, const Mask& roi, double bin_width) {
    std::vector<double> x;
    for (std::size_t n = 0; n < vol.values.size(); ++n)
        if (roi.values[n]) x.push_back(vol.values[n]);
    const double N = double(x.size());

    double mean = 0.0;
    for (double t : x) mean += t / N;
    double var = 0.0, m3 = 0.0, m4 = 0.0, mad = 0.0, energy = 0.0;
    for (double t : x) {
        var += (t - mean) * (t - mean) / N;
        m3 += (t - mean) * (t - mean) * (t - mean) / N;
        m4 += (t - mean) * (t - mean) * (t - mean) * (t - mean) / N;
        mad += std::abs(t - mean) / N;
        energy += t * t;
    }
    const double mn = *std::min_element(x.begin(), x.end());
    const double mx = *std::max_element(x.begin(), x.end());
    const double p10 = oracle_percentile(x, 10), p90 = oracle_percentile(x, 90);

    std::vector<double> band;
    for (double t : x)
        if (t >= p10 && t <= p90) band.push_back(t);
    double bmean = 0.0;
    for (double t : band) bmean += t / double(band.size());
    double rmad = 0.0;
    for (double t : band) rmad += std::abs(t - bmean) / double(band.size());

    int ng = 0;
    const auto levels = oracle_discretize(vol, roi, bin_width, &ng);
    std::map<int, double> hist;
    for (int l : levels)
        if (l) hist[l] += 1.0;
    double entropy = 0.0, uniformity = 0.0;
    for (const auto& [l, c] : hist) {
        entropy -= c / N * std::log2(c / N);
        uniformity += (c / N) * (c / N);
    }

    const double vv = vol.geom.spacing[0] * vol.geom.spacing[1] * vol.geom.spacing[2];
    NamedValues f;
    f.push("Energy", energy);
    f.push("TotalEnergy", vv * energy);
    f.push("Entropy", entropy);
    f.push("Minimum", mn);
    f.push("Maximum", mx);
    f.push("Range", mx - mn);
    f.push("Mean", mean);
    f.push("Median", oracle_percentile(x, 50));
    f.push("Percentile10", p10);
    f.push("Percentile90", p90);
    f.push("InterquartileRange", oracle_percentile(x, 75) - oracle_percentile(x, 25));
    f.push("Variance", var);
    f.push("StandardDeviation", std::sqrt(var));
    f.push("Skewness", var > 0 ? m3 / std::pow(var, 1.5) : 0.0);
    f.push("Kurtosis", var > 0 ? m4 / (var * var) : 0.0);
    f.push("MeanAbsoluteDeviation", mad);
    f.push("RobustMeanAbsoluteDeviation", rmad);
    f.push("RootMeanSquared", std::sqrt(energy / N));
    f.push("Uniformity", uniformity);
    return f;
}

// --------------------------------------------------------------------- glcm

// features from one normalized matrix, marginals computed without using the
// symmetry of the accumulation
inline std::map<std::string, double> oracle_glcm_of(const std::vector<std::vector<double>>& p,
                                                    int ng) {
    std::vector<double> px(std::size_t(ng), 0.0), py(std::size_t(ng), 0.0);
    for (int i = 0; i < ng; ++i)
        for (int j = 0; j < ng; ++j) {
            px[std::size_t(i)] += p[std::size_t(i)][std::size_t(j)];
            py[std::size_t(j)] += p[std::size_t(i)][std::size_t(j)];
        }
    double mux = 0.0, muy = 0.0;
    for (int i = 0; i < ng; ++i) {
        mux += (i + 1) * px[std::size_t(i)];
        muy += (i + 1) * py[std::size_t(i)];
    }
    double sx2 = 0.0, sy2 = 0.0;
    for (int i = 0; i < ng; ++i) {
        sx2 += px[std::size_t(i)] * ((i + 1) - mux) * ((i + 1) - mux);
        sy2 += py[std::size_t(i)] * ((i + 1) - muy) * ((i + 1) - muy);
    }

    std::map<std::string, double> f;
    auto& F = f;
    F["Autocorrelation"] = 0;
    F["ClusterProminence"] = 0;
    F["ClusterShade"] = 0;
    F["ClusterTendency"] = 0;
    F["Contrast"] = 0;
    F["JointAverage"] = mux;
    F["JointEnergy"] = 0;
    F["JointEntropy"] = 0;
    F["MaximumProbability"] = 0;
    F["Id"] = 0;
    F["Idm"] = 0;
    F["Idmn"] = 0;
    F["Idn"] = 0;
    F["InverseVariance"] = 0;
    F["SumSquares"] = sx2;
    double corr = 0.0, hxy1 = 0.0, hxy2 = 0.0, hx = 0.0, hy = 0.0;
    for (int i = 1; i <= ng; ++i)
        for (int j = 1; j <= ng; ++j) {
            const double v = p[std::size_t(i - 1)][std::size_t(j - 1)];
            F["Autocorrelation"] += double(i) * j * v;
            const double cs = i + j - mux - muy;
            F["ClusterTendency"] += cs * cs * v;
            F["ClusterShade"] += cs * cs * cs * v;
            F["ClusterProminence"] += cs * cs * cs * cs * v;
            F["Contrast"] += double(i - j) * (i - j) * v;
            F["JointEnergy"] += v * v;
            if (v > 0) F["JointEntropy"] -= v * std::log2(v);
            F["MaximumProbability"] = std::max(F["MaximumProbability"], v);
            F["Id"] += v / (1.0 + std::abs(i - j));
            F["Idm"] += v / (1.0 + double(i - j) * (i - j));
            F["Idmn"] += v / (1.0 + double(i - j) * (i - j) / ng / ng);
            F["Idn"] += v / (1.0 + std::abs(i - j) / double(ng));
            if (i != j) F["InverseVariance"] += v / (double(i - j) * (i - j));
            corr += (i - mux) * (j - muy) * v;
            const double m = px[std::size_t(i - 1)] * py[std::size_t(j - 1)];
            if (v > 0) hxy1 -= v * std::log2(m);
            if (m > 0) hxy2 -= m * std::log2(m);
        }
    for (int i = 0; i < ng; ++i) {
        if (px[std::size_t(i)] > 0) hx -= px[std::size_t(i)] * std::log2(px[std::size_t(i)]);
        if (py[std::size_t(i)] > 0) hy -= py[std::size_t(i)] * std::log2(py[std::size_t(i)]);
    }
    F["Correlation"] = (sx2 > 0 && sy2 > 0) ? corr / std::sqrt(sx2 * sy2) : 0.0;
    const double hmax = std::max(hx, hy);
    F["Imc1"] = hmax > 0 ? (F["JointEntropy"] - hxy1) / hmax : 0.0;
    F["Imc2"] = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * (hxy2 - F["JointEntropy"]))));

    std::map<int, double> psum, pdiff;
    for (int i = 1; i <= ng; ++i)
        for (int j = 1; j <= ng; ++j) {
            psum[i + j] += p[std::size_t(i - 1)][std::size_t(j - 1)];
            pdiff[std::abs(i - j)] += p[std::size_t(i - 1)][std::size_t(j - 1)];
        }
    double da = 0.0;
    for (const auto& [k, v] : pdiff) da += k * v;
    F["DifferenceAverage"] = da;
    F["DifferenceEntropy"] = 0;
    F["DifferenceVariance"] = 0;
    for (const auto& [k, v] : pdiff) {
        if (v > 0) F["DifferenceEntropy"] -= v * std::log2(v);
        F["DifferenceVariance"] += (k - da) * (k - da) * v;
    }
    F["SumAverage"] = 0;
    F["SumEntropy"] = 0;
    for (const auto& [k, v] : psum) {
        F["SumAverage"] += k * v;
        if (v > 0) F["SumEntropy"] -= v * std::log2(v);
    }
    return f;
}

inline std::map<std::string, double> oracle_glcm(const std::vector<int>& levels,
                                                 const Geometry& g, int ng, int distance) {
    // all ordered voxel pairs, matched against +/- each angle
    std::vector<std::array<int, 3>> coords;
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i)
                if (levels[g.index(i, j, k)]) coords.push_back({i, j, k});

    std::map<std::string, double> acc;
    int used = 0;
    for (const auto& a : airquant::scan_angles()) {
        std::vector<std::vector<double>> m(std::size_t(ng), std::vector<double>(std::size_t(ng), 0.0));
        double total = 0.0;
        for (const auto& u : coords)
            for (const auto& w : coords) {
                const int dx = w[0] - u[0], dy = w[1] - u[1], dz = w[2] - u[2];
                const bool fwd = dx == a[0] * distance && dy == a[1] * distance && dz == a[2] * distance;
                const bool bwd =
                    dx == -a[0] * distance && dy == -a[1] * distance && dz == -a[2] * distance;
                if (!fwd && !bwd) continue;
                const int li = levels[g.index(u[0], u[1], u[2])];
                const int lj = levels[g.index(w[0], w[1], w[2])];
                m[std::size_t(li - 1)][std::size_t(lj - 1)] += 1.0;
                total += 1.0;
            }
        if (total == 0.0) continue;
        for (auto& row : m)
            for (double& v : row) v /= total;
        for (const auto& [n, v] : oracle_glcm_of(m, ng)) acc[n] += v;
        ++used;
    }
    if (used == 0) {
        return oracle_glcm_of({{1.0}}, 1);
    }
    for (auto& [n, v] : acc) v /= used;
    return acc;
}

// ------------------------------------------------------- run/zone/dependence

inline std::map<std::string, double> oracle_size_features(
    const std::vector<std::vector<double>>& m, double np, const char* small_name,
    const char* large_name, bool gldm_roster) {
    double total = 0.0;
    const std::size_t ng = m.size();
    const std::size_t ns = ng ? m[0].size() : 0;
    for (const auto& r : m)
        for (double v : r) total += v;
    std::map<std::string, double> f;
    double mu_g = 0.0, mu_s = 0.0;
    for (std::size_t i = 0; i < ng; ++i)
        for (std::size_t j = 0; j < ns; ++j) {
            mu_g += m[i][j] / total * double(i + 1);
            mu_s += m[i][j] / total * double(j + 1);
        }
    double se = 0, le = 0, lg = 0, hg = 0, sl = 0, sh = 0, ll = 0, lh = 0;
    double glv = 0, sv = 0, ent = 0;
    for (std::size_t i = 0; i < ng; ++i)
        for (std::size_t j = 0; j < ns; ++j) {
            const double v = m[i][j];
            const double gi = double(i + 1), sj = double(j + 1);
            se += v / (sj * sj) / total;
            le += v * sj * sj / total;
            lg += v / (gi * gi) / total;
            hg += v * gi * gi / total;
            sl += v / (gi * gi * sj * sj) / total;
            sh += v * gi * gi / (sj * sj) / total;
            ll += v * sj * sj / (gi * gi) / total;
            lh += v * gi * gi * sj * sj / total;
            glv += v / total * (gi - mu_g) * (gi - mu_g);
            sv += v / total * (sj - mu_s) * (sj - mu_s);
            if (v > 0) ent -= v / total * std::log2(v / total);
        }
    double gln = 0, szn = 0;
    for (std::size_t i = 0; i < ng; ++i) {
        double rs = 0;
        for (std::size_t j = 0; j < ns; ++j) rs += m[i][j];
        gln += rs * rs;
    }
    for (std::size_t j = 0; j < ns; ++j) {
        double cs = 0;
        for (std::size_t i = 0; i < ng; ++i) cs += m[i][j];
        szn += cs * cs;
    }
    const std::string S = small_name, L = large_name;
    if (gldm_roster) {
        f["SmallDependenceEmphasis"] = se;
        f["LargeDependenceEmphasis"] = le;
        f["GrayLevelNonUniformity"] = gln / total;
        f["DependenceNonUniformity"] = szn / total;
        f["DependenceNonUniformityNormalized"] = szn / (total * total);
        f["GrayLevelVariance"] = glv;
        f["DependenceVariance"] = sv;
        f["DependenceEntropy"] = ent;
        f["LowGrayLevelEmphasis"] = lg;
        f["HighGrayLevelEmphasis"] = hg;
        f["SmallDependenceLowGrayLevelEmphasis"] = sl;
        f["SmallDependenceHighGrayLevelEmphasis"] = sh;
        f["LargeDependenceLowGrayLevelEmphasis"] = ll;
        f["LargeDependenceHighGrayLevelEmphasis"] = lh;
    } else {
        f[S + "Emphasis"] = se;
        f[L + "Emphasis"] = le;
        f["GrayLevelNonUniformity"] = gln / total;
        f["GrayLevelNonUniformityNormalized"] = gln / (total * total);
        f[S == "ShortRun" ? "RunLengthNonUniformity" : "SizeZoneNonUniformity"] = szn / total;
        f[S == "ShortRun" ? "RunLengthNonUniformityNormalized"
                          : "SizeZoneNonUniformityNormalized"] = szn / (total * total);
        f[S == "ShortRun" ? "RunPercentage" : "ZonePercentage"] = total / np;
        f["GrayLevelVariance"] = glv;
        f[S == "ShortRun" ? "RunVariance" : "ZoneVariance"] = sv;
        f[S == "ShortRun" ? "RunEntropy" : "ZoneEntropy"] = ent;
        f["LowGrayLevel" + std::string(S == "ShortRun" ? "Run" : "Zone") + "Emphasis"] = lg;
        f["HighGrayLevel" + std::string(S == "ShortRun" ? "Run" : "Zone") + "Emphasis"] = hg;
        f[S + "LowGrayLevelEmphasis"] = sl;
        f[S + "HighGrayLevelEmphasis"] = sh;
        f[L + "LowGrayLevelEmphasis"] = ll;
        f[L + "HighGrayLevelEmphasis"] = lh;
    }
    return f;
}

// runs by segmenting whole grid lines for each direction
inline std::vector<std::vector<double>> oracle_glrlm_matrix(const std::vector<int>& levels,
                                                            const Geometry& g,
                                                            const std::array<int, 3>& a) {
    std::map<std::pair<int, std::size_t>, double> counts;
    std::size_t maxlen = 1;
    int maxlvl = 1;
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) {
                // line starts where stepping backward exits the grid
                if (g.in_bounds(i - a[0], j - a[1], k - a[2])) continue;
                int x = i, y = j, z = k;
                int cur = 0;
                std::size_t len = 0;
                while (g.in_bounds(x, y, z)) {
                    const int lvl = levels[g.index(x, y, z)];
                    if (lvl == cur && lvl != 0) {
                        ++len;
                    } else {
                        if (cur != 0) {
                            counts[{cur, len}] += 1.0;
                            maxlen = std::max(maxlen, len);
                            maxlvl = std::max(maxlvl, cur);
                        }
                        cur = lvl;
                        len = lvl ? 1 : 0;
                    }
                    x += a[0];
                    y += a[1];
                    z += a[2];
                }
                if (cur != 0) {
                    counts[{cur, len}] += 1.0;
                    maxlen = std::max(maxlen, len);
                    maxlvl = std::max(maxlvl, cur);
                }
            }
    for (const auto& [key, v] : counts) maxlvl = std::max(maxlvl, key.first);
    std::vector<std::vector<double>> m(std::size_t(maxlvl), std::vector<double>(maxlen, 0.0));
    for (const auto& [key, v] : counts) m[std::size_t(key.first - 1)][key.second - 1] += v;
    return m;
}

inline std::map<std::string, double> oracle_glrlm(const std::vector<int>& levels,
                                                  const Geometry& g, int ng, double np) {
    std::map<std::string, double> acc;
    const auto& angles = airquant::scan_angles();
    for (const auto& a : angles) {
        auto m = oracle_glrlm_matrix(levels, g, a);
        m.resize(std::size_t(ng), std::vector<double>(m.empty() ? 1 : m[0].size(), 0.0));
        for (const auto& [n, v] : oracle_size_features(m, np, "ShortRun", "LongRun", false))
            acc[n] += v;
    }
    for (auto& [n, v] : acc) v /= double(angles.size());
    return acc;
}

inline std::map<std::string, double> oracle_glszm(const std::vector<int>& levels,
                                                  const Geometry& g, int ng, double np) {
    std::set<std::size_t> done;
    std::map<std::pair<int, std::size_t>, double> zones;
    std::size_t maxsize = 1;
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) {
                const std::size_t seed = g.index(i, j, k);
                if (!levels[seed] || done.count(seed)) continue;
                const int lvl = levels[seed];
                std::set<std::size_t> zone;
                std::vector<std::array<int, 3>> frontier{{i, j, k}};
                zone.insert(seed);
                while (!frontier.empty()) {
                    const auto [x, y, z] = frontier.back();
                    frontier.pop_back();
                    for (int dz = -1; dz <= 1; ++dz)
                        for (int dy = -1; dy <= 1; ++dy)
                            for (int dx = -1; dx <= 1; ++dx) {
                                if (!dx && !dy && !dz) continue;
                                const int xx = x + dx, yy = y + dy, zz = z + dz;
                                if (!g.in_bounds(xx, yy, zz)) continue;
                                const std::size_t n = g.index(xx, yy, zz);
                                if (levels[n] == lvl && !zone.count(n)) {
                                    zone.insert(n);
                                    frontier.push_back({xx, yy, zz});
                                }
                            }
                }
                done.insert(zone.begin(), zone.end());
                zones[{lvl, zone.size()}] += 1.0;
                maxsize = std::max(maxsize, zone.size());
            }
    std::vector<std::vector<double>> m(std::size_t(ng), std::vector<double>(maxsize, 0.0));
    for (const auto& [key, v] : zones) m[std::size_t(key.first - 1)][key.second - 1] += v;
    return oracle_size_features(m, np, "SmallArea", "LargeArea", false);
}

inline std::map<std::string, double> oracle_gldm(const std::vector<int>& levels,
                                                 const Geometry& g, int ng, double np,
                                                 int alpha) {
    std::map<std::pair<int, std::size_t>, double> deps;
    std::size_t maxdep = 1;
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) {
                const int lvl = levels[g.index(i, j, k)];
                if (!lvl) continue;
                std::size_t dep = 1;
                for (int dz = -1; dz <= 1; ++dz)
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            if (!dx && !dy && !dz) continue;
                            const int x = i + dx, y = j + dy, z = k + dz;
                            if (!g.in_bounds(x, y, z)) continue;
                            const int nl = levels[g.index(x, y, z)];
                            if (nl && std::abs(nl - lvl) <= alpha) ++dep;
                        }
                deps[{lvl, dep}] += 1.0;
                maxdep = std::max(maxdep, dep);
            }
    std::vector<std::vector<double>> m(std::size_t(ng), std::vector<double>(maxdep, 0.0));
    for (const auto& [key, v] : deps) m[std::size_t(key.first - 1)][key.second - 1] += v;
    return oracle_size_features(m, np, "", "", true);
}

inline std::map<std::string, double> oracle_ngtdm(const std::vector<int>& levels,
                                                  const Geometry& g, int ng, double np) {
    std::vector<double> nvec(std::size_t(ng), 0.0), svec(std::size_t(ng), 0.0);
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) {
                const int lvl = levels[g.index(i, j, k)];
                if (!lvl) continue;
                double s = 0.0;
                int c = 0;
                for (int dz = -1; dz <= 1; ++dz)
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            if (!dx && !dy && !dz) continue;
                            const int x = i + dx, y = j + dy, z = k + dz;
                            if (!g.in_bounds(x, y, z)) continue;
                            if (levels[g.index(x, y, z)]) {
                                s += levels[g.index(x, y, z)];
                                ++c;
                            }
                        }
                nvec[std::size_t(lvl - 1)] += 1.0;
                if (c > 0) svec[std::size_t(lvl - 1)] += std::abs(lvl - s / c);
            }

    int ngp = 0;
    double sum_ps = 0.0, sum_s = 0.0;
    for (int i = 0; i < ng; ++i) {
        if (nvec[std::size_t(i)] > 0) ++ngp;
        sum_ps += nvec[std::size_t(i)] / np * svec[std::size_t(i)];
        sum_s += svec[std::size_t(i)];
    }
    std::map<std::string, double> f;
    f["Coarseness"] = sum_ps > 0 ? 1.0 / sum_ps : 1e6;
    double pair_q = 0, busy_den = 0, cx = 0, str_num = 0;
    for (int i = 1; i <= ng; ++i)
        for (int j = 1; j <= ng; ++j) {
            const double pi = nvec[std::size_t(i - 1)] / np, pj = nvec[std::size_t(j - 1)] / np;
            if (pi <= 0 || pj <= 0) continue;
            pair_q += pi * pj * (i - j) * (i - j);
            busy_den += std::abs(i * pi - j * pj);
            cx += std::abs(i - j) * (pi * svec[std::size_t(i - 1)] + pj * svec[std::size_t(j - 1)]) /
                  (pi + pj);
            str_num += (pi + pj) * (i - j) * (i - j);
        }
    f["Contrast"] = ngp > 1 ? pair_q / (double(ngp) * (ngp - 1)) * (sum_s / np) : 0.0;
    f["Busyness"] = busy_den > 0 ? sum_ps / busy_den : 0.0;
    f["Complexity"] = cx / np;
    f["Strength"] = sum_s > 0 ? str_num / sum_s : 0.0;
    return f;
}

// --------------------------------------------------------------------- shape

// roots of the characteristic polynomial of a symmetric 3x3 matrix, by the
// trigonometric method, descending
inline std::array<double, 3> closed_form_eigen(const std::array<std::array<double, 3>, 3>& A) {
    const double p1 = A[0][1] * A[0][1] + A[0][2] * A[0][2] + A[1][2] * A[1][2];
    std::array<double, 3> ev;
    if (p1 == 0.0) {
        ev = {A[0][0], A[1][1], A[2][2]};
    } else {
        const double q = (A[0][0] + A[1][1] + A[2][2]) / 3.0;
        const double p2 = (A[0][0] - q) * (A[0][0] - q) + (A[1][1] - q) * (A[1][1] - q) +
                          (A[2][2] - q) * (A[2][2] - q) + 2.0 * p1;
        const double p = std::sqrt(p2 / 6.0);
        std::array<std::array<double, 3>, 3> B{};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                B[std::size_t(r)][std::size_t(c)] =
                    (A[std::size_t(r)][std::size_t(c)] - (r == c ? q : 0.0)) / p;
        const double detB = B[0][0] * (B[1][1] * B[2][2] - B[1][2] * B[2][1]) -
                            B[0][1] * (B[1][0] * B[2][2] - B[1][2] * B[2][0]) +
                            B[0][2] * (B[1][0] * B[2][1] - B[1][1] * B[2][0]);
        const double r = std::clamp(detB / 2.0, -1.0, 1.0);
        const double phi = std::acos(r) / 3.0;
        const double pi = std::acos(-1.0);
        ev[0] = q + 2.0 * p * std::cos(phi);
        ev[2] = q + 2.0 * p * std::cos(phi + 2.0 * pi / 3.0);
        ev[1] = 3.0 * q - ev[0] - ev[2];
    }
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

inline std::map<std::string, double> oracle_shape(const Mask& roi) {
    const auto& g = roi.geom;
    const double sx = g.spacing[0], sy = g.spacing[1], sz = g.spacing[2];
    std::vector<std::array<int, 3>> fg;
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i)
                if (roi.at(i, j, k)) fg.push_back({i, j, k});
    const double N = double(fg.size());

    // exposed faces per axis = 2N - 2 * (adjacent pairs along that axis)
    double pairs[3] = {0, 0, 0};
    for (const auto& [i, j, k] : fg) {
        if (g.in_bounds(i + 1, j, k) && roi.at(i + 1, j, k)) pairs[0] += 1;
        if (g.in_bounds(i, j + 1, k) && roi.at(i, j + 1, k)) pairs[1] += 1;
        if (g.in_bounds(i, j, k + 1) && roi.at(i, j, k + 1)) pairs[2] += 1;
    }
    const double area = (2 * N - 2 * pairs[0]) * sy * sz + (2 * N - 2 * pairs[1]) * sx * sz +
                        (2 * N - 2 * pairs[2]) * sx * sy;

    double maxd = 0.0;  // full pairwise, no pruning
    for (std::size_t a = 0; a < fg.size(); ++a)
        for (std::size_t b = a + 1; b < fg.size(); ++b) {
            const double dx = (fg[a][0] - fg[b][0]) * sx;
            const double dy = (fg[a][1] - fg[b][1]) * sy;
            const double dz = (fg[a][2] - fg[b][2]) * sz;
            maxd = std::max(maxd, std::sqrt(dx * dx + dy * dy + dz * dz));
        }

    double mean[3] = {0, 0, 0};
    for (const auto& [i, j, k] : fg) {
        mean[0] += i * sx / N;
        mean[1] += j * sy / N;
        mean[2] += k * sz / N;
    }
    std::array<std::array<double, 3>, 3> cov{};
    for (const auto& [i, j, k] : fg) {
        const double c[3] = {i * sx - mean[0], j * sy - mean[1], k * sz - mean[2]};
        for (int r = 0; r < 3; ++r)
            for (int q = 0; q < 3; ++q) cov[std::size_t(r)][std::size_t(q)] += c[r] * c[q] / N;
    }
    auto ev = closed_form_eigen(cov);
    for (double& e : ev) e = std::max(0.0, e);

    const double vol = N * sx * sy * sz;
    std::map<std::string, double> f;
    f["MeshVolume"] = vol;
    f["VoxelVolume"] = vol;
    f["SurfaceArea"] = area;
    f["SurfaceVolumeRatio"] = area / vol;
    f["Sphericity"] = std::cbrt(36.0 * std::acos(-1.0) * vol * vol) / area;
    f["Maximum3DDiameter"] = maxd;
    f["MajorAxisLength"] = 4.0 * std::sqrt(ev[0]);
    f["MinorAxisLength"] = 4.0 * std::sqrt(ev[1]);
    f["LeastAxisLength"] = 4.0 * std::sqrt(ev[2]);
    f["Elongation"] = ev[0] > 0 ? std::sqrt(ev[1] / ev[0]) : 1.0;
    f["Flatness"] = ev[0] > 0 ? std::sqrt(ev[2] / ev[0]) : 1.0;
    return f;
}

// relative agreement used throughout the oracle comparisons
inline bool close_rel(double a, double b, double tol) {
    const double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return std::abs(a - b) <= tol * scale;
}

}  // namespace roracle
