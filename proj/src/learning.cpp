#include "airquant/learning.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "airquant/error.hpp"

namespace airquant {

void FeatureTable::validate() const {
    if (values.size() != case_ids.size())
        throw SchemaError("feature table: row count does not match case ids");
    for (const auto& row : values)
        if (row.size() != feature_names.size())
            throw SchemaError("feature table: ragged rows");
    std::set<std::string> ids(case_ids.begin(), case_ids.end());
    if (ids.size() != case_ids.size())
        throw SchemaError("feature table: duplicate case ids");
    std::set<std::string> names(feature_names.begin(), feature_names.end());
    if (names.size() != feature_names.size())
        throw SchemaError("feature table: duplicate feature names");
    if (labels) {
        if (labels->size() != case_ids.size())
            throw SchemaError("feature table: label count does not match rows");
        for (int l : *labels)
            if (l != 0 && l != 1)
                throw SchemaError("feature table: labels must be 0 or 1");
    }
}

std::optional<double> pearson_r(const std::vector<double>& x,
                                const std::vector<double>& y) {
    if (x.size() != y.size())
        throw SchemaError("pearson_r: length mismatch");
    if (x.size() < 2)
        throw EmptyInputError("pearson_r: needs at least two samples");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

std::vector<std::string> select_features(const FeatureTable& table,
                                         double threshold) {
    table.validate();
    if (!table.labels)
        throw MissingLabelsError("select_features: table has no labels");
    std::vector<double> y(table.n_cases());
    for (std::size_t i = 0; i < y.size(); ++i)
        y[i] = static_cast<double>((*table.labels)[i]);
    std::vector<std::string> kept;
    std::vector<double> column(table.n_cases());
    for (std::size_t f = 0; f < table.n_features(); ++f) {
        for (std::size_t i = 0; i < table.n_cases(); ++i)
            column[i] = table.values[i][f];
        const auto r = pearson_r(column, y);
        if (r && std::abs(*r) >= threshold)
            kept.push_back(table.feature_names[f]);
    }
    return kept;
}

namespace {

std::size_t column_index(const FeatureTable& table, const std::string& name) {
    const auto it = std::find(table.feature_names.begin(),
                              table.feature_names.end(), name);
    if (it == table.feature_names.end())
        throw SchemaError("feature '" + name + "' is not present in the table");
    return static_cast<std::size_t>(it - table.feature_names.begin());
}

FeatureTable take_rows(const FeatureTable& table,
                       const std::vector<std::size_t>& rows) {
    FeatureTable out;
    out.feature_names = table.feature_names;
    for (std::size_t r : rows) {
        out.case_ids.push_back(table.case_ids[r]);
        out.values.push_back(table.values[r]);
    }
    if (table.labels) {
        out.labels.emplace();
        for (std::size_t r : rows) out.labels->push_back((*table.labels)[r]);
    }
    return out;
}

// Unbiased draw in [0, bound) by rejection; std::shuffle is avoided because
// its engine consumption is implementation-defined and fold assignments must
// reproduce bit-for-bit everywhere.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return r % bound;
}

void fisher_yates(std::vector<std::size_t>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[bounded_draw(rng, i)]);
}

}  // namespace

FeatureTable select_columns(const FeatureTable& table,
                            const std::vector<std::string>& names) {
    table.validate();
    std::vector<std::size_t> cols;
    for (const auto& n : names) cols.push_back(column_index(table, n));
    FeatureTable out;
    out.case_ids = table.case_ids;
    out.feature_names = names;
    out.labels = table.labels;
    out.values.reserve(table.n_cases());
    for (const auto& row : table.values) {
        std::vector<double> r;
        r.reserve(cols.size());
        for (std::size_t c : cols) r.push_back(row[c]);
        out.values.push_back(std::move(r));
    }
    return out;
}

FeatureTable combine_tables(const FeatureTable& a, const FeatureTable& b,
                            const std::string& prefix_a,
                            const std::string& prefix_b) {
    a.validate();
    b.validate();
    if (a.case_ids != b.case_ids)
        throw AlignmentError(
            "combine_tables: the two tables cover different case sequences");
    if (a.labels && b.labels && *a.labels != *b.labels)
        throw AlignmentError("combine_tables: conflicting labels");
    FeatureTable out;
    out.case_ids = a.case_ids;
    for (const auto& n : a.feature_names) out.feature_names.push_back(prefix_a + n);
    for (const auto& n : b.feature_names) out.feature_names.push_back(prefix_b + n);
    out.values.reserve(a.n_cases());
    for (std::size_t i = 0; i < a.n_cases(); ++i) {
        std::vector<double> row = a.values[i];
        row.insert(row.end(), b.values[i].begin(), b.values[i].end());
        out.values.push_back(std::move(row));
    }
    out.labels = a.labels ? a.labels : b.labels;
    out.validate();
    return out;
}

MinMaxScaler fit_minmax(const FeatureTable& table) {
    table.validate();
    if (table.n_cases() == 0)
        throw EmptyInputError("fit_minmax: table has no rows");
    MinMaxScaler s;
    s.feature_names = table.feature_names;
    s.mins.assign(table.n_features(), std::numeric_limits<double>::infinity());
    s.maxs.assign(table.n_features(), -std::numeric_limits<double>::infinity());
    for (const auto& row : table.values)
        for (std::size_t f = 0; f < row.size(); ++f) {
            s.mins[f] = std::min(s.mins[f], row[f]);
            s.maxs[f] = std::max(s.maxs[f], row[f]);
        }
    return s;
}

FeatureTable apply_minmax(const MinMaxScaler& scaler,
                          const FeatureTable& table) {
    FeatureTable out = select_columns(table, scaler.feature_names);
    for (auto& row : out.values)
        for (std::size_t f = 0; f < row.size(); ++f) {
            const double span = scaler.maxs[f] - scaler.mins[f];
            row[f] = span > 0.0 ? (row[f] - scaler.mins[f]) / span : 0.0;
        }
    return out;
}

ClassificationReport classification_report(const std::vector<int>& y_true,
                                           const std::vector<int>& y_pred,
                                           const std::vector<double>& decisions,
                                           int positive_label) {
    if (y_true.empty())
        throw EmptyInputError("classification_report: no samples");
    if (y_true.size() != y_pred.size() || y_true.size() != decisions.size())
        throw SchemaError("classification_report: length mismatch");
    if (positive_label != 0 && positive_label != 1)
        throw ConfigError("classification_report: positive label must be 0 or 1");
    for (std::size_t i = 0; i < y_true.size(); ++i)
        if ((y_true[i] != 0 && y_true[i] != 1) ||
            (y_pred[i] != 0 && y_pred[i] != 1))
            throw SchemaError("classification_report: labels must be 0 or 1");

    ClassificationReport rep;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const bool t = y_true[i] == positive_label;
        const bool p = y_pred[i] == positive_label;
        if (t && p) ++rep.tp;
        if (t && !p) ++rep.fn;
        if (!t && p) ++rep.fp;
        if (!t && !p) ++rep.tn;
    }
    const double n = static_cast<double>(y_true.size());
    rep.accuracy = static_cast<double>(rep.tp + rep.tn) / n;
    rep.sensitivity = rep.tp + rep.fn > 0
                          ? static_cast<double>(rep.tp) / (rep.tp + rep.fn)
                          : 0.0;
    rep.specificity = rep.tn + rep.fp > 0
                          ? static_cast<double>(rep.tn) / (rep.tn + rep.fp)
                          : 0.0;
    const std::size_t f1_den = 2 * rep.tp + rep.fp + rep.fn;
    rep.f1 = f1_den > 0 ? 2.0 * rep.tp / static_cast<double>(f1_den) : 0.0;

    // Mann-Whitney AUC with average ranks for ties. The decision values are
    // oriented toward label 1, so they flip when class 0 is the positive one.
    const std::size_t n_pos = rep.tp + rep.fn;
    const std::size_t n_neg = rep.tn + rep.fp;
    if (n_pos == 0 || n_neg == 0) {
        rep.auc = 0.5;
        return rep;
    }
    std::vector<std::size_t> order(y_true.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> score(decisions);
    if (positive_label == 0)
        for (double& s : score) s = -s;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         return score[a] < score[b];
                     });
    std::vector<double> rank(y_true.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() &&
               score[order[j + 1]] == score[order[i]])
            ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }
    double rank_sum = 0.0;
    for (std::size_t k = 0; k < y_true.size(); ++k)
        if (y_true[k] == positive_label) rank_sum += rank[k];
    rep.auc = (rank_sum - 0.5 * n_pos * (n_pos + 1.0)) /
              (static_cast<double>(n_pos) * static_cast<double>(n_neg));
    return rep;
}

std::vector<int> stratified_folds(const std::vector<int>& labels, int folds,
                                  std::uint64_t seed) {
    if (folds < 2) throw ConfigError("stratified_folds: need at least 2 folds");
    std::vector<std::size_t> idx0, idx1;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1)
            idx1.push_back(i);
        else if (labels[i] == 0)
            idx0.push_back(i);
        else
            throw SchemaError("stratified_folds: labels must be 0 or 1");
    }
    if (idx0.size() < static_cast<std::size_t>(folds) ||
        idx1.size() < static_cast<std::size_t>(folds))
        throw StratificationError(
            "stratified_folds: a class has fewer cases than folds, some fold "
            "would miss it");
    std::mt19937_64 rng(seed);
    fisher_yates(idx0, rng);
    fisher_yates(idx1, rng);
    std::vector<int> assignment(labels.size(), -1);
    for (std::size_t p = 0; p < idx0.size(); ++p)
        assignment[idx0[p]] = static_cast<int>(p % folds);
    for (std::size_t p = 0; p < idx1.size(); ++p)
        assignment[idx1[p]] = static_cast<int>(p % folds);
    return assignment;
}

CrossValResult cross_validate(const FeatureTable& table,
                              const CrossValConfig& cfg) {
    table.validate();
    if (!table.labels)
        throw MissingLabelsError("cross_validate: table has no labels");
    const std::vector<int>& labels = *table.labels;
    CrossValResult result;
    result.fold_assignment = stratified_folds(labels, cfg.folds, cfg.seed);

    // The leaked protocol fits one scaler on everything before splitting.
    std::optional<MinMaxScaler> global_scaler;
    if (cfg.scale_on_full_table) global_scaler = fit_minmax(table);

    for (int fold = 0; fold < cfg.folds; ++fold) {
        std::vector<std::size_t> train_rows, test_rows;
        for (std::size_t i = 0; i < labels.size(); ++i)
            (result.fold_assignment[i] == fold ? test_rows : train_rows)
                .push_back(i);
        FeatureTable train = take_rows(table, train_rows);
        FeatureTable test = take_rows(table, test_rows);

        std::vector<std::string> names = table.feature_names;
        if (cfg.selection_threshold) {
            names = select_features(train, *cfg.selection_threshold);
            if (names.empty())
                throw DegenerateTrainingError(
                    "cross_validate: correlation selection removed every "
                    "feature in a training fold");
            train = select_columns(train, names);
            test = select_columns(test, names);
        }

        MinMaxScaler scaler;
        if (global_scaler) {
            scaler.feature_names = names;
            for (const auto& n : names) {
                const std::size_t c = column_index(table, n);
                scaler.mins.push_back(global_scaler->mins[c]);
                scaler.maxs.push_back(global_scaler->maxs[c]);
            }
        } else {
            scaler = fit_minmax(train);
        }
        const FeatureTable train_s = apply_minmax(scaler, train);
        const FeatureTable test_s = apply_minmax(scaler, test);

        SvmParams params;
        params.C = cfg.C;
        params.gamma = cfg.gamma;
        params.tol = cfg.tol;
        const SvmModel model =
            svm_train(train_s.values, *train_s.labels, params);

        std::vector<int> preds;
        std::vector<double> decisions;
        for (const auto& row : test_s.values) {
            const double f = svm_decision(model, row);
            decisions.push_back(f);
            preds.push_back(f >= 0.0 ? 1 : 0);
        }
        result.fold_reports.push_back(classification_report(
            *test_s.labels, preds, decisions, cfg.positive_label));
    }

    ClassificationReport& mean = result.mean_report;
    for (const auto& r : result.fold_reports) {
        mean.accuracy += r.accuracy;
        mean.f1 += r.f1;
        mean.sensitivity += r.sensitivity;
        mean.specificity += r.specificity;
        mean.auc += r.auc;
        mean.tp += r.tp;
        mean.tn += r.tn;
        mean.fp += r.fp;
        mean.fn += r.fn;
    }
    const double k = static_cast<double>(cfg.folds);
    mean.accuracy /= k;
    mean.f1 /= k;
    mean.sensitivity /= k;
    mean.specificity /= k;
    mean.auc /= k;
    return result;
}

GridSearchResult grid_search(const FeatureTable& table,
                             const std::vector<double>& c_grid,
                             const std::vector<double>& gamma_grid,
                             const CrossValConfig& cfg) {
    if (c_grid.empty() || gamma_grid.empty())
        throw ConfigError("grid_search: empty parameter grid");
    GridSearchResult result;
    bool have_best = false;
    for (double c : c_grid)
        for (double gamma : gamma_grid) {
            CrossValConfig point = cfg;
            point.C = c;
            point.gamma = gamma;
            const CrossValResult cv = cross_validate(table, point);
            result.entries.push_back({c, gamma, cv.mean_report});
            const double acc = cv.mean_report.accuracy;
            const bool better =
                !have_best || acc > result.best_report.accuracy ||
                (acc == result.best_report.accuracy &&
                 (c < result.best_c ||
                  (c == result.best_c && gamma < result.best_gamma)));
            if (better) {
                have_best = true;
                result.best_c = c;
                result.best_gamma = gamma;
                result.best_report = cv.mean_report;
            }
        }
    return result;
}

const std::vector<double>& default_c_grid() {
    static const std::vector<double> grid = {1.0,    10.0,   100.0,
                                             1000.0, 8000.0, 10000.0};
    return grid;
}

const std::vector<double>& default_gamma_grid() {
    static const std::vector<double> grid = {0.001, 0.01, 0.1, 1.0};
    return grid;
}

TrainedClassifier train_classifier(const FeatureTable& table,
                                   const TrainConfig& cfg) {
    table.validate();
    if (!table.labels)
        throw MissingLabelsError("train_classifier: table has no labels");
    FeatureTable work = table;
    TrainedClassifier clf;
    if (cfg.selection_threshold) {
        clf.selected_features =
            select_features(table, *cfg.selection_threshold);
        if (clf.selected_features.empty())
            throw DegenerateTrainingError(
                "train_classifier: correlation selection removed every "
                "feature");
        work = select_columns(table, clf.selected_features);
    } else {
        clf.selected_features = table.feature_names;
    }
    clf.scaler = fit_minmax(work);
    const FeatureTable scaled = apply_minmax(clf.scaler, work);
    SvmParams params;
    params.C = cfg.C;
    params.gamma = cfg.gamma;
    params.tol = cfg.tol;
    clf.model = svm_train(scaled.values, *scaled.labels, params);
    return clf;
}

Predictions classifier_predict(const TrainedClassifier& clf,
                               const FeatureTable& table) {
    const FeatureTable scaled = apply_minmax(clf.scaler, table);
    Predictions out;
    for (const auto& row : scaled.values) {
        const double f = svm_decision(clf.model, row);
        out.decisions.push_back(f);
        out.labels.push_back(f >= 0.0 ? 1 : 0);
    }
    return out;
}

std::string classifier_to_json(const TrainedClassifier& clf) {
    nlohmann::json j;
    j["format"] = "svm-rbf/1";
    j["svm"] = nlohmann::json::parse(svm_model_to_json(clf.model));
    j["scaler"]["features"] = clf.scaler.feature_names;
    j["scaler"]["min"] = clf.scaler.mins;
    j["scaler"]["max"] = clf.scaler.maxs;
    j["selected_features"] = clf.selected_features;
    return j.dump(2);
}

TrainedClassifier classifier_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("classifier file is not valid JSON: ") +
                          e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "svm-rbf/1")
            throw SchemaError("classifier file has an unsupported format tag");
        TrainedClassifier clf;
        clf.model = svm_model_from_json(j.at("svm").dump());
        clf.scaler.feature_names =
            j.at("scaler").at("features").get<std::vector<std::string>>();
        clf.scaler.mins = j.at("scaler").at("min").get<std::vector<double>>();
        clf.scaler.maxs = j.at("scaler").at("max").get<std::vector<double>>();
        clf.selected_features =
            j.at("selected_features").get<std::vector<std::string>>();
        if (clf.scaler.feature_names.size() != clf.scaler.mins.size() ||
            clf.scaler.feature_names.size() != clf.scaler.maxs.size())
            throw SchemaError("classifier file has inconsistent scaler arrays");
        return clf;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("classifier file is missing fields: ") +
                          e.what());
    }
}

}  // namespace airquant
