#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace airquant {

// Binary RBF-kernel support vector machine. Labels are 0/1 on the public
// surface and mapped to -1/+1 internally.
struct SvmParams {
    double C = 8000.0;
    double gamma = 0.01;
    double tol = 1e-3;          // stopping threshold on the maximal KKT violation
    std::int64_t max_iter = 10'000'000;
};

struct SvmModel {
    double gamma = 0.0;
    double C = 0.0;
    double bias = 0.0;
    // One row per support vector, same width as the training matrix.
    std::vector<std::vector<double>> support_vectors;
    // dual_coefs[i] = alpha_i * y_i with y in {-1,+1}; always nonzero.
    std::vector<double> dual_coefs;
    // Row indices of the support vectors in the original training matrix.
    std::vector<std::size_t> support_indices;
};

double rbf_kernel(const std::vector<double>& a, const std::vector<double>& b,
                  double gamma);

// Trains by sequential minimal optimization with maximal-violating-pair
// working-set selection. Requires both classes present
// (DegenerateTrainingError otherwise) and rectangular rows (SchemaError).
SvmModel svm_train(const std::vector<std::vector<double>>& rows,
                   const std::vector<int>& labels, const SvmParams& params);

// Decision value sum_i dual_coefs[i] * K(sv_i, x) + bias.
double svm_decision(const SvmModel& model, const std::vector<double>& row);

// Label 1 iff the decision value is >= 0. Width mismatch -> SchemaError.
int svm_predict(const SvmModel& model, const std::vector<double>& row);

// Structured-text serialization, format tag "svm-rbf/1".
std::string svm_model_to_json(const SvmModel& model);
SvmModel svm_model_from_json(const std::string& text);

}  // namespace airquant
