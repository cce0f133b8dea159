#pragma once

#include <string>
#include <utility>
#include <vector>

#include "airquant/learning.hpp"

namespace airquant {

// Feature CSV layout: header `case_id,<feature...>[,label]`, one row per
// case, floats printed with 17 significant digits so values roundtrip
// exactly. The label column is appended only when the table carries labels.
void write_feature_csv(const std::string& path, const FeatureTable& table);
FeatureTable read_feature_csv(const std::string& path);

// Labels CSV: header `case_id,label`, labels 0/1, file order preserved.
void write_labels_csv(const std::string& path,
                      const std::vector<std::string>& case_ids,
                      const std::vector<int>& labels);
std::vector<std::pair<std::string, int>> read_labels_csv(
    const std::string& path);

// Attaches labels to a table by case id; every case must be covered.
void join_labels(FeatureTable& table,
                 const std::vector<std::pair<std::string, int>>& labels);

}  // namespace airquant
