#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "airquant/learning.hpp"
#include "airquant/morphology.hpp"
#include "airquant/phantom.hpp"
#include "airquant/radiomics.hpp"

namespace airquant {

enum class ScalingMode {
    // Scaler fitted inside each training fold (default).
    LeakFree,
    // Scaler fitted once on the full table before splitting. Reproduces the
    // historical protocol; kept selectable because published numbers used it.
    PaperFaithful,
};

struct PipelineConfig {
    std::string images_dir;
    std::string masks_dir;
    std::string output_dir;
    // Optional labels csv (case_id,label). Empty means unlabeled run.
    std::string labels_file;

    PostprocessParams postprocess;
    ExtractionSettings trachea_extraction;
    ExtractionSettings airway_extraction;
    double trachea_selection = 0.20;
    double airway_selection = 0.41;

    double svm_c = 8000.0;
    double svm_gamma = 0.01;
    double svm_tol = 1e-3;
    int cv_folds = 5;
    std::uint64_t cv_seed = 0;
    bool run_grid_search = false;
    ScalingMode scaling = ScalingMode::LeakFree;
    double detect_fraction = 0.8;
    int jobs = 1;

    // ConfigError on out-of-range knobs. Path existence is checked by the
    // command that uses the path.
    void validate() const;
};

// Versioned schema "airquant-config/1". Unknown keys are rejected so that a
// typo cannot silently fall back to a default.
PipelineConfig config_from_json(const std::string& text);
std::string config_to_json(const PipelineConfig& cfg);
PipelineConfig load_config(const std::string& path);

struct CaseOutcome {
    std::string case_id;
    bool ok = true;
    std::string error;
};

// Per-case results in case-id order. A failed case never aborts the batch;
// it lands in the failures manifest and flips the exit code to 1.
struct BatchReport {
    std::vector<CaseOutcome> cases;

    std::size_t failed() const;
    int exit_code() const { return failed() == 0 ? 0 : 1; }
};

// Case ids are .nii / .nii.gz basenames in dir, sorted. IoError when the
// directory cannot be listed.
std::vector<std::string> list_cases(const std::string& dir);

// close() + distant-component removal for every mask in masks_dir. Writes
// cleaned masks, postprocess_log.csv and failures.csv into output_dir.
BatchReport cmd_postprocess(const PipelineConfig& cfg);

// Trachea and bounding-box ROI features for every case present in both
// images_dir and masks_dir. Writes features_trachea.csv, features_airway.csv
// and failures.csv; joins labels when cfg.labels_file is set.
BatchReport cmd_extract(const PipelineConfig& cfg);

// Correlation selection per ROI table, combine, cross-validated report (grid
// search when configured), final model on the full table. Writes model.json,
// cv_report.csv and, for grid runs, grid_report.csv.
void cmd_train(const PipelineConfig& cfg, const std::string& trachea_csv,
               const std::string& airway_csv);

// The reporting half of cmd_train without fitting a final model.
void cmd_crossval(const PipelineConfig& cfg, const std::string& trachea_csv,
                  const std::string& airway_csv);

// Applies a serialized classifier to feature tables; the model's selected
// feature list is the schema, a missing column is a SchemaError naming it.
// Writes predictions.csv (case_id,label,decision).
void cmd_predict(const PipelineConfig& cfg, const std::string& model_path,
                 const std::string& trachea_csv,
                 const std::string& airway_csv);

// Segmentation scores per case for matching basenames of gt_dir in pred_dir,
// plus a "mean" row averaging the scored cases. Writes seg_report.csv and
// failures.csv.
BatchReport cmd_evaluate_seg(const PipelineConfig& cfg,
                             const std::string& pred_dir,
                             const std::string& gt_dir);

// Scores predictions.csv against a labels csv. The labels file is required;
// scoring an unlabeled cohort is not a supported operation.
void cmd_evaluate_cls(const PipelineConfig& cfg,
                      const std::string& predictions_csv,
                      const std::string& labels_csv);

// Writes <name>_image.nii.gz, <name>_mask.nii.gz and <name>_meta.json (per
// cohort member for the cohort kind, plus labels.csv and cohort.json).
void cmd_phantom(const PipelineConfig& cfg, const PhantomSpec& spec,
                 const std::string& name);

}  // namespace airquant
