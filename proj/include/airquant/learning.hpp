#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "airquant/svm.hpp"

namespace airquant {

// Rectangular case-by-feature matrix with optional binary labels.
struct FeatureTable {
    std::vector<std::string> case_ids;
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> values;  // values[case][feature]
    std::optional<std::vector<int>> labels;   // 0/1 when present

    std::size_t n_cases() const { return case_ids.size(); }
    std::size_t n_features() const { return feature_names.size(); }
    // Rejects ragged rows, duplicate ids or names, non-binary labels.
    void validate() const;
};

// Sample correlation; nullopt when either input has zero variance.
// Needs at least two samples.
std::optional<double> pearson_r(const std::vector<double>& x,
                                const std::vector<double>& y);

// Names of the features whose |r| against the labels reaches the threshold,
// in table column order. Columns with undefined correlation are skipped.
std::vector<std::string> select_features(const FeatureTable& table,
                                         double threshold);

// Subset of columns by name, order as given. Unknown name -> SchemaError.
FeatureTable select_columns(const FeatureTable& table,
                            const std::vector<std::string>& names);

// Horizontal concatenation of two tables over identical case-id sequences.
// Feature names get the respective prefix; labels must agree when both
// tables carry them.
FeatureTable combine_tables(const FeatureTable& a, const FeatureTable& b,
                            const std::string& prefix_a,
                            const std::string& prefix_b);

struct MinMaxScaler {
    std::vector<std::string> feature_names;
    std::vector<double> mins;
    std::vector<double> maxs;
};

MinMaxScaler fit_minmax(const FeatureTable& table);

// Maps each column x to (x - min) / (max - min); constant columns map to 0.
// Values outside the fitted range are not clamped. The output contains the
// scaler's features in the scaler's order; a feature the table lacks is a
// SchemaError.
FeatureTable apply_minmax(const MinMaxScaler& scaler,
                          const FeatureTable& table);

struct ClassificationReport {
    double accuracy = 0.0;
    double f1 = 0.0;
    double sensitivity = 0.0;  // recall of the positive class
    double specificity = 0.0;
    double auc = 0.0;
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
};

// Confusion counts are taken against positive_label; the ratio conventions
// are 0 when a denominator is empty, and AUC falls back to 0.5 when only one
// class is present. AUC uses rank averaging for tied decision values.
ClassificationReport classification_report(const std::vector<int>& y_true,
                                           const std::vector<int>& y_pred,
                                           const std::vector<double>& decisions,
                                           int positive_label = 1);

struct CrossValConfig {
    int folds = 5;
    double C = 8000.0;
    double gamma = 0.01;
    double tol = 1e-3;
    std::uint64_t seed = 0;
    // When set, correlation selection runs inside each training fold.
    std::optional<double> selection_threshold;
    // Default is the leak-free protocol (scaler fitted per training fold);
    // true reproduces the historical protocol of scaling on the full table
    // before splitting.
    bool scale_on_full_table = false;
    int positive_label = 1;
};

struct CrossValResult {
    std::vector<ClassificationReport> fold_reports;
    // Metric-wise mean over folds; the confusion counts are summed.
    ClassificationReport mean_report;
    // fold_assignment[i] is the fold that held out case i.
    std::vector<int> fold_assignment;
};

// Seeded stratified fold assignment: per-class index lists are shuffled with
// an own Fisher-Yates pass (bit-reproducible across platforms) and dealt
// round-robin. Any class smaller than the fold count -> StratificationError.
std::vector<int> stratified_folds(const std::vector<int>& labels, int folds,
                                  std::uint64_t seed);

CrossValResult cross_validate(const FeatureTable& table,
                              const CrossValConfig& cfg);

struct GridSearchResult {
    double best_c = 0.0;
    double best_gamma = 0.0;
    ClassificationReport best_report;
    struct Entry {
        double c = 0.0;
        double gamma = 0.0;
        ClassificationReport report;
    };
    std::vector<Entry> entries;  // one per grid point, in evaluation order
};

// Exhaustive search maximizing mean cross-validated accuracy; ties resolve
// to the smaller C, then the smaller gamma.
GridSearchResult grid_search(const FeatureTable& table,
                             const std::vector<double>& c_grid,
                             const std::vector<double>& gamma_grid,
                             const CrossValConfig& cfg);

const std::vector<double>& default_c_grid();
const std::vector<double>& default_gamma_grid();

// Frozen artifact of a training run: the kernel machine plus everything
// needed to map a raw feature table into its input space.
struct TrainedClassifier {
    SvmModel model;
    MinMaxScaler scaler;
    std::vector<std::string> selected_features;
};

struct TrainConfig {
    double C = 8000.0;
    double gamma = 0.01;
    double tol = 1e-3;
    std::optional<double> selection_threshold;
};

TrainedClassifier train_classifier(const FeatureTable& table,
                                   const TrainConfig& cfg);

struct Predictions {
    std::vector<int> labels;
    std::vector<double> decisions;
};

Predictions classifier_predict(const TrainedClassifier& clf,
                               const FeatureTable& table);

// Single self-describing JSON document, format tag "svm-rbf/1".
std::string classifier_to_json(const TrainedClassifier& clf);
TrainedClassifier classifier_from_json(const std::string& text);

}  // namespace airquant
