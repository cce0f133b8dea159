#include "airquant/svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "airquant/error.hpp"

namespace airquant {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_rows(const std::vector<std::vector<double>>& rows,
                const std::vector<int>& labels) {
    if (rows.empty()) throw EmptyInputError("svm_train: no training rows");
    if (rows.size() != labels.size())
        throw SchemaError("svm_train: row/label count mismatch");
    const std::size_t width = rows.front().size();
    if (width == 0) throw SchemaError("svm_train: zero-width rows");
    for (const auto& r : rows)
        if (r.size() != width)
            throw SchemaError("svm_train: ragged training matrix");
    for (int l : labels)
        if (l != 0 && l != 1)
            throw SchemaError("svm_train: labels must be 0 or 1");
}

}  // namespace

double rbf_kernel(const std::vector<double>& a, const std::vector<double>& b,
                  double gamma) {
    if (a.size() != b.size())
        throw SchemaError("rbf_kernel: dimension mismatch");
    double d2 = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

SvmModel svm_train(const std::vector<std::vector<double>>& rows,
                   const std::vector<int>& labels, const SvmParams& params) {
    check_rows(rows, labels);
    if (params.C <= 0.0 || params.gamma <= 0.0 || params.tol <= 0.0)
        throw ConfigError("svm_train: C, gamma and tol must be positive");

    const std::size_t n = rows.size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] == 1 ? 1.0 : -1.0;
    const bool has_pos = std::count(labels.begin(), labels.end(), 1) > 0;
    const bool has_neg = std::count(labels.begin(), labels.end(), 0) > 0;
    if (!has_pos || !has_neg)
        throw DegenerateTrainingError(
            "svm_train: both classes are required in the training set");

    // Dense kernel cache; training sets here are small enough that the
    // quadratic memory is the cheap option.
    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = rbf_kernel(rows[i], rows[j], params.gamma);
            K[i * n + j] = v;
            K[j * n + i] = v;
        }

    const double C = params.C;
    std::vector<double> alpha(n, 0.0);
    // G_i = (Q alpha)_i - 1 with Q_ij = y_i y_j K_ij; alpha = 0 gives -1.
    std::vector<double> G(n, -1.0);

    double m_up = 0.0, m_low = 0.0;
    for (std::int64_t iter = 0;; ++iter) {
        // Maximal violating pair over the feasible ascent/descent sets.
        int i = -1, j = -1;
        m_up = -kInf;
        m_low = kInf;
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -y[t] * G[t];
            const bool in_up = (y[t] > 0.0) ? alpha[t] < C : alpha[t] > 0.0;
            const bool in_low = (y[t] > 0.0) ? alpha[t] > 0.0 : alpha[t] < C;
            if (in_up && v > m_up) {
                m_up = v;
                i = static_cast<int>(t);
            }
            if (in_low && v < m_low) {
                m_low = v;
                j = static_cast<int>(t);
            }
        }
        if (i < 0 || j < 0 || m_up - m_low <= params.tol) break;
        if (iter >= params.max_iter)
            throw DegenerateTrainingError("svm_train: iteration limit reached");

        // Feasible direction d_i = y_i, d_j = -y_j keeps sum(y.alpha) fixed;
        // step length minimizing the dual along it, then box clipping.
        double quad = K[i * n + i] + K[j * n + j] - 2.0 * K[i * n + j];
        if (quad <= 0.0) quad = 1e-12;
        double t = -(y[i] * G[i] - y[j] * G[j]) / quad;

        double lo = -kInf, hi = kInf;
        if (y[i] > 0.0) {
            lo = std::max(lo, -alpha[i]);
            hi = std::min(hi, C - alpha[i]);
        } else {
            lo = std::max(lo, alpha[i] - C);
            hi = std::min(hi, alpha[i]);
        }
        if (y[j] > 0.0) {
            lo = std::max(lo, alpha[j] - C);
            hi = std::min(hi, alpha[j]);
        } else {
            lo = std::max(lo, -alpha[j]);
            hi = std::min(hi, C - alpha[j]);
        }
        t = std::clamp(t, lo, hi);

        const double di = y[i] * t;
        const double dj = -y[j] * t;
        alpha[i] += di;
        alpha[j] += dj;
        for (std::size_t k = 0; k < n; ++k)
            G[k] += y[k] * y[i] * K[k * n + i] * di +
                    y[k] * y[j] * K[k * n + j] * dj;
    }

    // Snap coefficients that converged onto the box bounds.
    const double snap = 1e-12 * std::max(1.0, C);
    for (auto& a : alpha) {
        if (a < snap) a = 0.0;
        if (a > C - snap) a = C;
    }

    // Bias from the KKT conditions: free vectors give y_i - u_i = -y_i G_i
    // exactly at the optimum; without free vectors any value in the
    // [m_low, m_up] interval is consistent, take the midpoint.
    double bias = 0.0;
    std::size_t free_count = 0;
    for (std::size_t t = 0; t < n; ++t)
        if (alpha[t] > 0.0 && alpha[t] < C) {
            bias += -y[t] * G[t];
            ++free_count;
        }
    if (free_count > 0)
        bias /= static_cast<double>(free_count);
    else
        bias = 0.5 * (m_up + m_low);

    SvmModel model;
    model.gamma = params.gamma;
    model.C = C;
    model.bias = bias;
    for (std::size_t t = 0; t < n; ++t)
        if (alpha[t] > 0.0) {
            model.support_vectors.push_back(rows[t]);
            model.dual_coefs.push_back(alpha[t] * y[t]);
            model.support_indices.push_back(t);
        }
    return model;
}

double svm_decision(const SvmModel& model, const std::vector<double>& row) {
    if (!model.support_vectors.empty() &&
        model.support_vectors.front().size() != row.size())
        throw SchemaError("svm_decision: feature width mismatch");
    double f = model.bias;
    for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
        f += model.dual_coefs[i] *
             rbf_kernel(model.support_vectors[i], row, model.gamma);
    return f;
}

int svm_predict(const SvmModel& model, const std::vector<double>& row) {
    return svm_decision(model, row) >= 0.0 ? 1 : 0;
}

std::string svm_model_to_json(const SvmModel& model) {
    nlohmann::json j;
    j["format"] = "svm-rbf/1";
    j["gamma"] = model.gamma;
    j["C"] = model.C;
    j["bias"] = model.bias;
    j["support_vectors"] = model.support_vectors;
    j["dual_coefs"] = model.dual_coefs;
    j["support_indices"] = model.support_indices;
    return j.dump(2);
}

SvmModel svm_model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("model file is not valid JSON: ") +
                          e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "svm-rbf/1")
            throw SchemaError("model file has an unsupported format tag");
        SvmModel model;
        model.gamma = j.at("gamma").get<double>();
        model.C = j.at("C").get<double>();
        model.bias = j.at("bias").get<double>();
        model.support_vectors =
            j.at("support_vectors").get<std::vector<std::vector<double>>>();
        model.dual_coefs = j.at("dual_coefs").get<std::vector<double>>();
        model.support_indices =
            j.at("support_indices").get<std::vector<std::size_t>>();
        if (model.support_vectors.size() != model.dual_coefs.size() ||
            model.support_vectors.size() != model.support_indices.size())
            throw SchemaError("model file has inconsistent support-vector arrays");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("model file is missing fields: ") +
                          e.what());
    }
}

}  // namespace airquant
