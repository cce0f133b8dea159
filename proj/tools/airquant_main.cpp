#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "airquant/error.hpp"
#include "airquant/pipeline.hpp"

using namespace airquant;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    int jobs = 0;           // 0 = keep config value
    long long seed = -1;    // -1 = keep config value
};

void add_common(CLI::App* sub, CommonFlags* flags) {
    sub->add_option("--config", flags->config_path,
                    "Pipeline config json (schema airquant-config/1)");
    sub->add_option("--out", flags->out_dir, "Output directory");
    sub->add_option("--jobs", flags->jobs, "Parallel case workers")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", flags->seed, "Seed override")
        ->check(CLI::NonNegativeNumber);
}

PipelineConfig resolve_config(const CommonFlags& flags) {
    PipelineConfig cfg;
    if (!flags.config_path.empty()) cfg = load_config(flags.config_path);
    if (!flags.out_dir.empty()) cfg.output_dir = flags.out_dir;
    if (flags.jobs > 0) cfg.jobs = flags.jobs;
    if (flags.seed >= 0)
        cfg.cv_seed = static_cast<std::uint64_t>(flags.seed);
    return cfg;
}

int report_batch(const char* what, const BatchReport& report) {
    std::printf("%s: %zu cases, %zu failed\n", what, report.cases.size(),
                report.failed());
    for (const auto& oc : report.cases)
        if (!oc.ok)
            std::fprintf(stderr, "  %s: %s\n", oc.case_id.c_str(),
                         oc.error.c_str());
    return report.exit_code();
}

PhantomKind parse_kind(const std::string& s) {
    if (s == "tube") return PhantomKind::Tube;
    if (s == "y-split") return PhantomKind::YSplit;
    if (s == "binary-tree") return PhantomKind::BinaryTree;
    if (s == "cohort") return PhantomKind::Cohort;
    throw ConfigError("unknown phantom kind '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Airway mask cleanup, radiomics and survival classification"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string images_dir, masks_dir, labels_file;
    std::string trachea_csv, airway_csv, model_path;
    std::string pred_dir, gt_dir, predictions_csv;
    bool grid = false;

    CLI::App* postprocess =
        app.add_subcommand("postprocess", "Close masks, drop distant islands");
    add_common(postprocess, &flags);
    postprocess->add_option("--masks", masks_dir, "Predicted masks directory");

    CLI::App* extract =
        app.add_subcommand("extract", "Trachea and bounding-box features");
    add_common(extract, &flags);
    extract->add_option("--images", images_dir, "Volumes directory");
    extract->add_option("--masks", masks_dir, "Cleaned masks directory");
    extract->add_option("--labels", labels_file, "Labels csv to join");

    CLI::App* train =
        app.add_subcommand("train", "Select, scale and fit the classifier");
    add_common(train, &flags);
    train->add_option("--trachea-features", trachea_csv, "Trachea csv")
        ->required();
    train->add_option("--airway-features", airway_csv, "Airway csv")
        ->required();
    train->add_option("--labels", labels_file, "Labels csv");
    train->add_flag("--grid", grid, "Grid-search C and gamma");

    CLI::App* crossval =
        app.add_subcommand("crossval", "Cross-validated report only");
    add_common(crossval, &flags);
    crossval->add_option("--trachea-features", trachea_csv, "Trachea csv")
        ->required();
    crossval->add_option("--airway-features", airway_csv, "Airway csv")
        ->required();
    crossval->add_option("--labels", labels_file, "Labels csv");
    crossval->add_flag("--grid", grid, "Grid-search C and gamma");

    CLI::App* predict =
        app.add_subcommand("predict", "Apply a serialized classifier");
    add_common(predict, &flags);
    predict->add_option("--model", model_path, "model.json path")->required();
    predict->add_option("--trachea-features", trachea_csv, "Trachea csv")
        ->required();
    predict->add_option("--airway-features", airway_csv, "Airway csv")
        ->required();

    CLI::App* eval_seg =
        app.add_subcommand("evaluate-seg", "Segmentation scores per case");
    add_common(eval_seg, &flags);
    eval_seg->add_option("--pred", pred_dir, "Predicted masks directory")
        ->required();
    eval_seg->add_option("--gt", gt_dir, "Ground-truth masks directory")
        ->required();

    CLI::App* eval_cls =
        app.add_subcommand("evaluate-cls", "Score a predictions csv");
    add_common(eval_cls, &flags);
    eval_cls->add_option("--predictions", predictions_csv, "predictions.csv")
        ->required();
    eval_cls->add_option("--labels", labels_file, "Labels csv")->required();

    CLI::App* phantom =
        app.add_subcommand("phantom", "Synthetic volume + mask generator");
    add_common(phantom, &flags);
    std::string kind = "tube", name = "phantom";
    std::vector<int> dims;
    std::vector<double> spacing, satellites;
    PhantomSpec spec;
    phantom->add_option("--kind", kind, "tube | y-split | binary-tree | cohort");
    phantom->add_option("--name", name, "Case name (cohort member prefix)");
    phantom->add_option("--dims", dims, "Grid size, three ints")
        ->expected(3);
    phantom->add_option("--spacing", spacing, "Voxel spacing mm, three values")
        ->expected(3);
    phantom->add_option("--trunk-length", spec.trunk_length, "Trunk voxels");
    phantom->add_option("--trunk-radius", spec.trunk_radius,
                        "Tube half-width");
    phantom->add_option("--branch-depth", spec.branch_depth,
                        "Binary tree depth");
    phantom->add_option("--noise", spec.noise_level, "Uniform noise half-range");
    phantom->add_option("--signal", spec.signal_strength,
                        "Cohort label-1 intensity shift");
    phantom->add_option("--cohort-size", spec.cohort_size, "Cohort cases");
    phantom->add_option("--satellite", satellites,
                        "Artifact cube offset in mm (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        PipelineConfig cfg = resolve_config(flags);
        if (!images_dir.empty()) cfg.images_dir = images_dir;
        if (!masks_dir.empty()) cfg.masks_dir = masks_dir;
        if (!labels_file.empty()) cfg.labels_file = labels_file;
        if (grid) cfg.run_grid_search = true;

        if (postprocess->parsed())
            return report_batch("postprocess", cmd_postprocess(cfg));
        if (extract->parsed())
            return report_batch("extract", cmd_extract(cfg));
        if (train->parsed()) {
            cmd_train(cfg, trachea_csv, airway_csv);
            std::printf("train: wrote model.json and cv_report.csv\n");
            return 0;
        }
        if (crossval->parsed()) {
            cmd_crossval(cfg, trachea_csv, airway_csv);
            std::printf("crossval: wrote cv_report.csv\n");
            return 0;
        }
        if (predict->parsed()) {
            cmd_predict(cfg, model_path, trachea_csv, airway_csv);
            std::printf("predict: wrote predictions.csv\n");
            return 0;
        }
        if (eval_seg->parsed())
            return report_batch("evaluate-seg",
                                cmd_evaluate_seg(cfg, pred_dir, gt_dir));
        if (eval_cls->parsed()) {
            cmd_evaluate_cls(cfg, predictions_csv, labels_file);
            std::printf("evaluate-cls: wrote cls_report.csv\n");
            return 0;
        }
        if (phantom->parsed()) {
            spec.kind = parse_kind(kind);
            if (dims.size() == 3) spec.dims = {dims[0], dims[1], dims[2]};
            if (spacing.size() == 3)
                spec.spacing = {spacing[0], spacing[1], spacing[2]};
            spec.satellites_mm = satellites;
            if (flags.seed >= 0)
                spec.seed = static_cast<std::uint64_t>(flags.seed);
            cmd_phantom(cfg, spec, name);
            std::printf("phantom: wrote %s under %s\n", name.c_str(),
                        cfg.output_dir.c_str());
            return 0;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const MissingLabelsError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
