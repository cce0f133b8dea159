#pragma once

// Reference solver for the SVM dual, used to cross-check the SMO trainer.
// Deliberately a different algorithm: projected gradient descent with an
// exact projection onto the box-and-hyperplane feasible set.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "airquant/svm.hpp"

namespace svm_oracle {

struct QpSolution {
    std::vector<double> alpha;
    double bias = 0.0;
};

inline std::vector<double> signed_labels(const std::vector<int>& labels) {
    std::vector<double> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        y[i] = labels[i] == 1 ? 1.0 : -1.0;
    return y;
}

inline std::vector<double> gram_q(const std::vector<std::vector<double>>& rows,
                                  const std::vector<double>& y, double gamma) {
    const std::size_t n = rows.size();
    std::vector<double> Q(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            Q[i * n + j] =
                y[i] * y[j] * airquant::rbf_kernel(rows[i], rows[j], gamma);
    return Q;
}

// Projection of v onto {0 <= b <= C, sum(y b) = 0}: b_i(t) = clip(v_i - t y_i)
// with sum(y b(t)) nonincreasing in t, so t is found by bisection.
inline std::vector<double> project(const std::vector<double>& v,
                                   const std::vector<double>& y, double C) {
    double vmax = 0.0;
    for (double x : v) vmax = std::max(vmax, std::abs(x));
    double lo = -(C + vmax + 1.0), hi = C + vmax + 1.0;
    auto balance = [&](double t) {
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += y[i] * std::clamp(v[i] - t * y[i], 0.0, C);
        return s;
    };
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (balance(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    const double t = 0.5 * (lo + hi);
    std::vector<double> b(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        b[i] = std::clamp(v[i] - t * y[i], 0.0, C);
    return b;
}

inline double dual_objective(const std::vector<double>& Q,
                             const std::vector<double>& alpha) {
    const std::size_t n = alpha.size();
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double qa = 0.0;
        for (std::size_t j = 0; j < n; ++j) qa += Q[i * n + j] * alpha[j];
        obj += 0.5 * alpha[i] * qa - alpha[i];
    }
    return obj;
}

inline QpSolution solve_qp(const std::vector<std::vector<double>>& rows,
                           const std::vector<int>& labels, double gamma,
                           double C) {
    const std::size_t n = rows.size();
    const std::vector<double> y = signed_labels(labels);
    const std::vector<double> Q = gram_q(rows, y, gamma);

    // Step size 1/L with L an infinity-norm bound on the spectrum of Q.
    double L = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) row_sum += std::abs(Q[i * n + j]);
        L = std::max(L, row_sum);
    }
    const double step = 1.0 / std::max(L, 1e-12);

    std::vector<double> alpha(n, 0.0), g(n), trial(n);
    for (int it = 0; it < 2'000'000; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double qa = 0.0;
            for (std::size_t j = 0; j < n; ++j) qa += Q[i * n + j] * alpha[j];
            g[i] = qa - 1.0;
        }
        for (std::size_t i = 0; i < n; ++i) trial[i] = alpha[i] - step * g[i];
        trial = project(trial, y, C);
        double move = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            move = std::max(move, std::abs(trial[i] - alpha[i]));
        alpha = trial;
        if (move <= 1e-12) break;
    }

    // Bias by the same KKT rule the trained model uses, computed from this
    // solver's own multipliers.
    for (std::size_t i = 0; i < n; ++i) {
        double qa = 0.0;
        for (std::size_t j = 0; j < n; ++j) qa += Q[i * n + j] * alpha[j];
        g[i] = qa - 1.0;
    }
    const double margin = 1e-8 * std::max(1.0, C);
    double bias_sum = 0.0;
    std::size_t free_count = 0;
    double m_up = -1e300, m_low = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = -y[i] * g[i];
        const bool in_up = (y[i] > 0.0) ? alpha[i] < C : alpha[i] > 0.0;
        const bool in_low = (y[i] > 0.0) ? alpha[i] > 0.0 : alpha[i] < C;
        if (in_up) m_up = std::max(m_up, v);
        if (in_low) m_low = std::min(m_low, v);
        if (alpha[i] > margin && alpha[i] < C - margin) {
            bias_sum += v;
            ++free_count;
        }
    }
    QpSolution sol;
    sol.alpha = alpha;
    sol.bias = free_count > 0 ? bias_sum / static_cast<double>(free_count)
                              : 0.5 * (m_up + m_low);
    return sol;
}

inline double decision(const std::vector<std::vector<double>>& rows,
                       const std::vector<int>& labels, const QpSolution& sol,
                       double gamma, const std::vector<double>& x) {
    const std::vector<double> y = signed_labels(labels);
    double f = sol.bias;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (sol.alpha[i] != 0.0)
            f += sol.alpha[i] * y[i] * airquant::rbf_kernel(rows[i], x, gamma);
    return f;
}

// Largest KKT violation m_up - m_low for a multiplier vector; <= tol at an
// (approximate) optimum.
inline double kkt_residual(const std::vector<std::vector<double>>& rows,
                           const std::vector<int>& labels, double gamma,
                           double C, const std::vector<double>& alpha) {
    const std::size_t n = rows.size();
    const std::vector<double> y = signed_labels(labels);
    const std::vector<double> Q = gram_q(rows, y, gamma);
    double m_up = -1e300, m_low = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
        double qa = 0.0;
        for (std::size_t j = 0; j < n; ++j) qa += Q[i * n + j] * alpha[j];
        const double v = -y[i] * (qa - 1.0);
        const bool in_up = (y[i] > 0.0) ? alpha[i] < C : alpha[i] > 0.0;
        const bool in_low = (y[i] > 0.0) ? alpha[i] > 0.0 : alpha[i] < C;
        if (in_up) m_up = std::max(m_up, v);
        if (in_low) m_low = std::min(m_low, v);
    }
    return m_up - m_low;
}

}  // namespace svm_oracle
