#include "airquant/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include "airquant/error.hpp"
#include "airquant/nifti.hpp"
#include "airquant/segmetrics.hpp"
#include "airquant/table_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace airquant {

namespace {

constexpr const char* kConfigSchema = "airquant-config/1";

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void require_dir(const std::string& dir, const char* what) {
    if (dir.empty() || !fs::is_directory(dir))
        throw ConfigError(std::string(what) + " directory '" + dir +
                          "' does not exist");
}

void ensure_dir(const std::string& dir) {
    if (dir.empty()) throw ConfigError("output directory is not set");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create directory '" + dir + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("failed writing '" + path + "'");
}

// Case ids must survive a csv cell; error strings get sanitized instead.
std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

void run_parallel(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& work) {
    const int workers =
        std::max(1, std::min(jobs, static_cast<int>(std::min<std::size_t>(
                                       n, 64))));
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n;
                 i = next.fetch_add(1))
                work(i);
        });
    for (auto& t : pool) t.join();
}

// Workers record their own failure; anything escaping here is a bug.
template <typename F>
void guarded(CaseOutcome& oc, F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        oc.ok = false;
        oc.error = e.what();
    }
}

std::string find_case_file(const std::string& dir, const std::string& id) {
    const std::string gz = join_path(dir, id + ".nii.gz");
    if (fs::is_regular_file(gz)) return gz;
    const std::string plain = join_path(dir, id + ".nii");
    if (fs::is_regular_file(plain)) return plain;
    throw IoError("no '" + id + ".nii[.gz]' in '" + dir + "'");
}

void write_failures_manifest(const std::string& out_dir,
                             const BatchReport& report) {
    std::ostringstream ss;
    ss << "case_id,error\n";
    for (const auto& oc : report.cases)
        if (!oc.ok) ss << oc.case_id << ',' << csv_safe(oc.error) << '\n';
    write_text_file(join_path(out_dir, "failures.csv"), ss.str());
}

double voxel_volume_mm3(const Geometry& g) {
    return g.spacing[0] * g.spacing[1] * g.spacing[2];
}

// --- config json ---

void reject_unknown_keys(const json& obj, const char* where,
                         std::initializer_list<const char*> known) {
    for (const auto& item : obj.items()) {
        bool found = false;
        for (const char* k : known)
            if (item.key() == k) {
                found = true;
                break;
            }
        if (!found)
            throw ConfigError(std::string("config: unknown key '") +
                              item.key() + "' in " + where);
    }
}

double get_number(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number())
        throw ConfigError(std::string("config: '") + key +
                          "' must be a number");
    return obj[key].get<double>();
}

int get_int(const json& obj, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer())
        throw ConfigError(std::string("config: '") + key +
                          "' must be an integer");
    return obj[key].get<int>();
}

std::string get_string(const json& obj, const char* key,
                       const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string())
        throw ConfigError(std::string("config: '") + key +
                          "' must be a string");
    return obj[key].get<std::string>();
}

ExtractionSettings extraction_from_json(const json& obj, const char* where) {
    reject_unknown_keys(obj, where,
                        {"bin_width", "glcm_distance", "gldm_alpha"});
    ExtractionSettings s;
    s.bin_width = get_number(obj, "bin_width", s.bin_width);
    s.glcm_distance = get_int(obj, "glcm_distance", s.glcm_distance);
    s.gldm_alpha = get_int(obj, "gldm_alpha", s.gldm_alpha);
    return s;
}

json extraction_to_json(const ExtractionSettings& s) {
    return json{{"bin_width", s.bin_width},
                {"glcm_distance", s.glcm_distance},
                {"gldm_alpha", s.gldm_alpha}};
}

int closing_radius_of(const PostprocessParams& p) {
    const auto r = p.closing_element.radius();
    return std::max({r[0], r[1], r[2]});
}

// --- csv report helpers ---

void append_report_row(std::ostringstream& ss, const std::string& row_id,
                       const ClassificationReport& r) {
    ss << row_id << ',' << fmt(r.accuracy) << ',' << fmt(r.f1) << ','
       << fmt(r.sensitivity) << ',' << fmt(r.specificity) << ','
       << fmt(r.auc) << ',' << r.tp << ',' << r.tn << ',' << r.fp << ','
       << r.fn << '\n';
}

void write_cv_report(const std::string& path, const CrossValResult& cv) {
    std::ostringstream ss;
    ss << "fold,accuracy,f1,sensitivity,specificity,auc,tp,tn,fp,fn\n";
    for (std::size_t f = 0; f < cv.fold_reports.size(); ++f)
        append_report_row(ss, std::to_string(f), cv.fold_reports[f]);
    append_report_row(ss, "mean", cv.mean_report);
    write_text_file(path, ss.str());
}

void write_grid_report(const std::string& path, const GridSearchResult& g) {
    std::ostringstream ss;
    ss << "c,gamma,accuracy,f1,sensitivity,specificity,auc,tp,tn,fp,fn\n";
    for (const auto& e : g.entries)
        append_report_row(ss, fmt(e.c) + "," + fmt(e.gamma), e.report);
    write_text_file(path, ss.str());
}

// Both tables must carry labels before selection; attach from the configured
// labels file when the csvs do not embed them.
FeatureTable load_combined_training_table(const PipelineConfig& cfg,
                                          const std::string& trachea_csv,
                                          const std::string& airway_csv) {
    FeatureTable trachea = read_feature_csv(trachea_csv);
    FeatureTable airway = read_feature_csv(airway_csv);
    if (!trachea.labels.has_value() || !airway.labels.has_value()) {
        if (cfg.labels_file.empty())
            throw MissingLabelsError(
                "training needs labels: none embedded in the feature csvs "
                "and no labels file configured");
        const auto pairs = read_labels_csv(cfg.labels_file);
        if (!trachea.labels.has_value()) join_labels(trachea, pairs);
        if (!airway.labels.has_value()) join_labels(airway, pairs);
    }
    const auto picked_t = select_features(trachea, cfg.trachea_selection);
    const auto picked_a = select_features(airway, cfg.airway_selection);
    if (picked_t.empty() && picked_a.empty())
        throw DegenerateTrainingError(
            "no feature reaches either selection threshold");
    const FeatureTable sel_t = select_columns(trachea, picked_t);
    const FeatureTable sel_a = select_columns(airway, picked_a);
    return combine_tables(sel_t, sel_a, "trachea_", "airway_");
}

CrossValConfig cv_config_of(const PipelineConfig& cfg) {
    CrossValConfig cv;
    cv.folds = cfg.cv_folds;
    cv.C = cfg.svm_c;
    cv.gamma = cfg.svm_gamma;
    cv.tol = cfg.svm_tol;
    cv.seed = cfg.cv_seed;
    cv.selection_threshold = std::nullopt;  // selection ran per ROI table
    cv.scale_on_full_table = cfg.scaling == ScalingMode::PaperFaithful;
    return cv;
}

// Shared by cmd_train and cmd_crossval: grid search when configured, then a
// cross-validated report at the chosen operating point.
CrossValResult report_cv(const PipelineConfig& cfg,
                         const FeatureTable& combined, double* chosen_c,
                         double* chosen_gamma) {
    CrossValConfig cv = cv_config_of(cfg);
    if (cfg.run_grid_search) {
        const GridSearchResult grid = grid_search(
            combined, default_c_grid(), default_gamma_grid(), cv);
        write_grid_report(join_path(cfg.output_dir, "grid_report.csv"), grid);
        cv.C = grid.best_c;
        cv.gamma = grid.best_gamma;
    }
    *chosen_c = cv.C;
    *chosen_gamma = cv.gamma;
    const CrossValResult result = cross_validate(combined, cv);
    write_cv_report(join_path(cfg.output_dir, "cv_report.csv"), result);
    return result;
}

std::vector<std::pair<std::string, int>> labels_by_id(
    const std::string& path) {
    auto pairs = read_labels_csv(path);
    std::map<std::string, int> seen;
    for (const auto& [id, label] : pairs)
        if (!seen.emplace(id, label).second)
            throw SchemaError("labels: duplicate case id '" + id + "'");
    return pairs;
}

const char* kind_name(PhantomKind k) {
    switch (k) {
        case PhantomKind::Tube: return "tube";
        case PhantomKind::YSplit: return "y-split";
        case PhantomKind::BinaryTree: return "binary-tree";
        case PhantomKind::Cohort: return "cohort";
    }
    return "?";
}

json voxels_to_json(const std::vector<std::array<int, 3>>& voxels) {
    json arr = json::array();
    for (const auto& v : voxels) arr.push_back({v[0], v[1], v[2]});
    return arr;
}

void write_phantom_case(const PipelineConfig& cfg, const PhantomSpec& spec,
                        const std::string& case_id, const PhantomCase& c) {
    write_volume(c.volume,
                 join_path(join_path(cfg.output_dir, "images"),
                           case_id + ".nii.gz"));
    write_mask(c.mask, join_path(join_path(cfg.output_dir, "masks"),
                                 case_id + ".nii.gz"));
    json meta;
    meta["schema"] = "airquant-phantom/1";
    meta["kind"] = kind_name(spec.kind);
    meta["dims"] = {c.mask.geom.dims[0], c.mask.geom.dims[1],
                    c.mask.geom.dims[2]};
    meta["spacing"] = {c.mask.geom.spacing[0], c.mask.geom.spacing[1],
                       c.mask.geom.spacing[2]};
    meta["label"] = c.label;
    meta["mask_voxels"] = c.mask.foreground_count();
    meta["trunk_voxels"] = voxels_to_json(c.trunk_voxels);
    json branches = json::array();
    for (const auto& b : c.branches)
        branches.push_back(
            {{"level", b.level}, {"voxels", voxels_to_json(b.voxels)}});
    meta["branches"] = std::move(branches);
    json artifacts = json::array();
    for (const auto& cube : c.artifacts)
        artifacts.push_back(voxels_to_json(cube));
    meta["artifacts"] = std::move(artifacts);
    write_text_file(
        join_path(join_path(cfg.output_dir, "meta"), case_id + ".json"),
        meta.dump(2) + "\n");
}

}  // namespace

void PipelineConfig::validate() const {
    const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(trachea_selection) || !in_unit(airway_selection))
        throw ConfigError("selection thresholds must lie in [0, 1]");
    if (!(detect_fraction > 0.0 && detect_fraction <= 1.0))
        throw ConfigError("detect_fraction must lie in (0, 1]");
    if (!(svm_c > 0.0) || !(svm_gamma > 0.0) || !(svm_tol > 0.0))
        throw ConfigError("svm parameters must be positive");
    if (cv_folds < 2) throw ConfigError("cv folds must be at least 2");
    if (jobs < 1) throw ConfigError("jobs must be at least 1");
    if (!(trachea_extraction.bin_width > 0.0) ||
        !(airway_extraction.bin_width > 0.0))
        throw ConfigError("bin_width must be positive");
    if (trachea_extraction.glcm_distance < 1 ||
        airway_extraction.glcm_distance < 1)
        throw ConfigError("glcm_distance must be at least 1");
    if (trachea_extraction.gldm_alpha < 0 || airway_extraction.gldm_alpha < 0)
        throw ConfigError("gldm_alpha must be non-negative");
    if (postprocess.connectivity != 6 && postprocess.connectivity != 18 &&
        postprocess.connectivity != 26)
        throw ConfigError("connectivity must be 6, 18 or 26");
    if (!(postprocess.centroid_threshold_mm > 0.0))
        throw ConfigError("centroid_threshold_mm must be positive");
}

PipelineConfig config_from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: not valid json: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: not a json object");
    reject_unknown_keys(root, "the top level",
                        {"schema", "paths", "postprocess", "extraction",
                         "selection", "svm", "cv", "grid_search", "scaling",
                         "detect_fraction", "jobs"});
    if (get_string(root, "schema", "") != kConfigSchema)
        throw ConfigError(std::string("config: schema must be '") +
                          kConfigSchema + "'");

    PipelineConfig cfg;
    if (root.contains("paths")) {
        const json& p = root["paths"];
        reject_unknown_keys(p, "paths", {"images", "masks", "output",
                                         "labels"});
        cfg.images_dir = get_string(p, "images", "");
        cfg.masks_dir = get_string(p, "masks", "");
        cfg.output_dir = get_string(p, "output", "");
        cfg.labels_file = get_string(p, "labels", "");
    }
    if (root.contains("postprocess")) {
        const json& p = root["postprocess"];
        reject_unknown_keys(p, "postprocess",
                            {"closing_radius", "centroid_threshold_mm",
                             "connectivity"});
        const int radius = get_int(p, "closing_radius", 1);
        if (radius < 0)
            throw ConfigError("config: closing_radius must be >= 0");
        cfg.postprocess.closing_element =
            StructuringElement::box(radius, radius, radius);
        cfg.postprocess.centroid_threshold_mm = get_number(
            p, "centroid_threshold_mm", cfg.postprocess.centroid_threshold_mm);
        cfg.postprocess.connectivity =
            get_int(p, "connectivity", cfg.postprocess.connectivity);
    }
    if (root.contains("extraction")) {
        const json& e = root["extraction"];
        reject_unknown_keys(e, "extraction", {"trachea", "airway"});
        if (e.contains("trachea"))
            cfg.trachea_extraction =
                extraction_from_json(e["trachea"], "extraction.trachea");
        if (e.contains("airway"))
            cfg.airway_extraction =
                extraction_from_json(e["airway"], "extraction.airway");
    }
    if (root.contains("selection")) {
        const json& s = root["selection"];
        reject_unknown_keys(s, "selection", {"trachea", "airway"});
        cfg.trachea_selection =
            get_number(s, "trachea", cfg.trachea_selection);
        cfg.airway_selection = get_number(s, "airway", cfg.airway_selection);
    }
    if (root.contains("svm")) {
        const json& s = root["svm"];
        reject_unknown_keys(s, "svm", {"c", "gamma", "tol"});
        cfg.svm_c = get_number(s, "c", cfg.svm_c);
        cfg.svm_gamma = get_number(s, "gamma", cfg.svm_gamma);
        cfg.svm_tol = get_number(s, "tol", cfg.svm_tol);
    }
    if (root.contains("cv")) {
        const json& s = root["cv"];
        reject_unknown_keys(s, "cv", {"folds", "seed"});
        cfg.cv_folds = get_int(s, "folds", cfg.cv_folds);
        const int seed = get_int(s, "seed", static_cast<int>(cfg.cv_seed));
        if (seed < 0) throw ConfigError("config: cv seed must be >= 0");
        cfg.cv_seed = static_cast<std::uint64_t>(seed);
    }
    if (root.contains("grid_search")) {
        if (!root["grid_search"].is_boolean())
            throw ConfigError("config: 'grid_search' must be a boolean");
        cfg.run_grid_search = root["grid_search"].get<bool>();
    }
    const std::string mode = get_string(root, "scaling", "leak-free");
    if (mode == "leak-free")
        cfg.scaling = ScalingMode::LeakFree;
    else if (mode == "paper-faithful")
        cfg.scaling = ScalingMode::PaperFaithful;
    else
        throw ConfigError(
            "config: scaling must be 'leak-free' or 'paper-faithful'");
    cfg.detect_fraction =
        get_number(root, "detect_fraction", cfg.detect_fraction);
    cfg.jobs = get_int(root, "jobs", cfg.jobs);
    cfg.validate();
    return cfg;
}

std::string config_to_json(const PipelineConfig& cfg) {
    json root;
    root["schema"] = kConfigSchema;
    root["paths"] = {{"images", cfg.images_dir},
                     {"masks", cfg.masks_dir},
                     {"output", cfg.output_dir},
                     {"labels", cfg.labels_file}};
    root["postprocess"] = {
        {"closing_radius", closing_radius_of(cfg.postprocess)},
        {"centroid_threshold_mm", cfg.postprocess.centroid_threshold_mm},
        {"connectivity", cfg.postprocess.connectivity}};
    root["extraction"] = {
        {"trachea", extraction_to_json(cfg.trachea_extraction)},
        {"airway", extraction_to_json(cfg.airway_extraction)}};
    root["selection"] = {{"trachea", cfg.trachea_selection},
                         {"airway", cfg.airway_selection}};
    root["svm"] = {{"c", cfg.svm_c}, {"gamma", cfg.svm_gamma},
                   {"tol", cfg.svm_tol}};
    root["cv"] = {{"folds", cfg.cv_folds},
                  {"seed", static_cast<std::int64_t>(cfg.cv_seed)}};
    root["grid_search"] = cfg.run_grid_search;
    root["scaling"] = cfg.scaling == ScalingMode::LeakFree
                          ? "leak-free"
                          : "paper-faithful";
    root["detect_fraction"] = cfg.detect_fraction;
    root["jobs"] = cfg.jobs;
    return root.dump(2) + "\n";
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

std::size_t BatchReport::failed() const {
    std::size_t n = 0;
    for (const auto& oc : cases)
        if (!oc.ok) ++n;
    return n;
}

std::vector<std::string> list_cases(const std::string& dir) {
    if (!fs::is_directory(dir))
        throw IoError("'" + dir + "' is not a directory");
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name.size() > 7 && name.ends_with(".nii.gz"))
            ids.push_back(name.substr(0, name.size() - 7));
        else if (name.size() > 4 && name.ends_with(".nii"))
            ids.push_back(name.substr(0, name.size() - 4));
    }
    std::sort(ids.begin(), ids.end());
    const auto dup = std::adjacent_find(ids.begin(), ids.end());
    if (dup != ids.end())
        throw IoError("case '" + *dup + "' appears in '" + dir +
                      "' more than once");
    return ids;
}

BatchReport cmd_postprocess(const PipelineConfig& cfg) {
    cfg.validate();
    require_dir(cfg.masks_dir, "masks");
    ensure_dir(cfg.output_dir);
    const std::vector<std::string> ids = list_cases(cfg.masks_dir);
    if (ids.empty())
        throw EmptyInputError("postprocess: no cases in '" + cfg.masks_dir +
                              "'");

    BatchReport report;
    report.cases.resize(ids.size());
    struct LogRow {
        int removed = 0;
        std::size_t voxels = 0;
        double mm3 = 0.0;
    };
    std::vector<LogRow> rows(ids.size());
    run_parallel(ids.size(), cfg.jobs, [&](std::size_t i) {
        CaseOutcome& oc = report.cases[i];
        oc.case_id = ids[i];
        guarded(oc, [&] {
            const Mask m = read_mask(find_case_file(cfg.masks_dir, ids[i]));
            PostprocessLog log;
            const Mask cleaned = postprocess_airway(m, cfg.postprocess, &log);
            write_mask(cleaned,
                       join_path(cfg.output_dir, ids[i] + ".nii.gz"));
            rows[i].removed = log.removed_components;
            for (const std::size_t s : log.removed_sizes)
                rows[i].voxels += s;
            rows[i].mm3 = static_cast<double>(rows[i].voxels) *
                          voxel_volume_mm3(m.geom);
        });
    });

    std::ostringstream ss;
    ss << "case_id,removed_components,removed_voxels,removed_mm3\n";
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (report.cases[i].ok)
            ss << ids[i] << ',' << rows[i].removed << ',' << rows[i].voxels
               << ',' << fmt(rows[i].mm3) << '\n';
    write_text_file(join_path(cfg.output_dir, "postprocess_log.csv"),
                    ss.str());
    write_failures_manifest(cfg.output_dir, report);
    return report;
}

BatchReport cmd_extract(const PipelineConfig& cfg) {
    cfg.validate();
    require_dir(cfg.images_dir, "images");
    require_dir(cfg.masks_dir, "masks");
    ensure_dir(cfg.output_dir);
    const std::vector<std::string> ids = list_cases(cfg.masks_dir);
    if (ids.empty())
        throw EmptyInputError("extract: no cases in '" + cfg.masks_dir + "'");

    BatchReport report;
    report.cases.resize(ids.size());
    std::vector<FeatureVector> trachea_rows(ids.size());
    std::vector<FeatureVector> airway_rows(ids.size());
    run_parallel(ids.size(), cfg.jobs, [&](std::size_t i) {
        CaseOutcome& oc = report.cases[i];
        oc.case_id = ids[i];
        guarded(oc, [&] {
            const Volume vol =
                read_volume(find_case_file(cfg.images_dir, ids[i]));
            const Mask mask =
                read_mask(find_case_file(cfg.masks_dir, ids[i]));
            if (!check_same_geometry(vol.geom, mask.geom))
                throw AlignmentError("image and mask grids differ");
            const Mask trachea = extract_trachea(mask);
            const Mask box = bounding_box_mask(mask);
            trachea_rows[i] =
                extract_all(vol, trachea, cfg.trachea_extraction);
            airway_rows[i] = extract_all(vol, box, cfg.airway_extraction);
        });
    });

    const auto to_table = [&](const std::vector<FeatureVector>& fvs) {
        FeatureTable table;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (!report.cases[i].ok) continue;
            if (table.feature_names.empty())
                for (const auto& [name, value] : fvs[i].entries)
                    table.feature_names.push_back(name);
            std::vector<double> row;
            row.reserve(table.feature_names.size());
            for (const auto& [name, value] : fvs[i].entries)
                row.push_back(value);
            table.case_ids.push_back(ids[i]);
            table.values.push_back(std::move(row));
        }
        return table;
    };
    FeatureTable trachea_table = to_table(trachea_rows);
    FeatureTable airway_table = to_table(airway_rows);
    if (!cfg.labels_file.empty()) {
        const auto pairs = labels_by_id(cfg.labels_file);
        join_labels(trachea_table, pairs);
        join_labels(airway_table, pairs);
    }
    write_feature_csv(join_path(cfg.output_dir, "features_trachea.csv"),
                      trachea_table);
    write_feature_csv(join_path(cfg.output_dir, "features_airway.csv"),
                      airway_table);
    write_failures_manifest(cfg.output_dir, report);
    return report;
}

void cmd_train(const PipelineConfig& cfg, const std::string& trachea_csv,
               const std::string& airway_csv) {
    cfg.validate();
    ensure_dir(cfg.output_dir);
    const FeatureTable combined =
        load_combined_training_table(cfg, trachea_csv, airway_csv);
    double c = 0.0, gamma = 0.0;
    report_cv(cfg, combined, &c, &gamma);
    TrainConfig tc;
    tc.C = c;
    tc.gamma = gamma;
    tc.tol = cfg.svm_tol;
    tc.selection_threshold = std::nullopt;
    const TrainedClassifier clf = train_classifier(combined, tc);
    write_text_file(join_path(cfg.output_dir, "model.json"),
                    classifier_to_json(clf));
}

void cmd_crossval(const PipelineConfig& cfg, const std::string& trachea_csv,
                  const std::string& airway_csv) {
    cfg.validate();
    ensure_dir(cfg.output_dir);
    const FeatureTable combined =
        load_combined_training_table(cfg, trachea_csv, airway_csv);
    double c = 0.0, gamma = 0.0;
    report_cv(cfg, combined, &c, &gamma);
}

void cmd_predict(const PipelineConfig& cfg, const std::string& model_path,
                 const std::string& trachea_csv,
                 const std::string& airway_csv) {
    cfg.validate();
    ensure_dir(cfg.output_dir);
    const TrainedClassifier clf =
        classifier_from_json(read_text_file(model_path));
    const FeatureTable trachea = read_feature_csv(trachea_csv);
    const FeatureTable airway = read_feature_csv(airway_csv);
    const FeatureTable combined =
        combine_tables(trachea, airway, "trachea_", "airway_");
    const Predictions pred = classifier_predict(clf, combined);

    std::ostringstream ss;
    ss << "case_id,label,decision\n";
    for (std::size_t i = 0; i < combined.n_cases(); ++i)
        ss << combined.case_ids[i] << ',' << pred.labels[i] << ','
           << fmt(pred.decisions[i]) << '\n';
    write_text_file(join_path(cfg.output_dir, "predictions.csv"), ss.str());
}

BatchReport cmd_evaluate_seg(const PipelineConfig& cfg,
                             const std::string& pred_dir,
                             const std::string& gt_dir) {
    cfg.validate();
    require_dir(pred_dir, "predictions");
    require_dir(gt_dir, "ground truth");
    ensure_dir(cfg.output_dir);
    const std::vector<std::string> ids = list_cases(gt_dir);
    if (ids.empty())
        throw EmptyInputError("evaluate-seg: no cases in '" + gt_dir + "'");

    BatchReport report;
    report.cases.resize(ids.size());
    std::vector<SegScores> scores(ids.size());
    run_parallel(ids.size(), cfg.jobs, [&](std::size_t i) {
        CaseOutcome& oc = report.cases[i];
        oc.case_id = ids[i];
        guarded(oc, [&] {
            const Mask gt = read_mask(find_case_file(gt_dir, ids[i]));
            const Mask pred = read_mask(find_case_file(pred_dir, ids[i]));
            scores[i] = evaluate_case(pred, gt, cfg.detect_fraction);
        });
    });

    std::ostringstream ss;
    ss << "case_id,iou,precision,dlr,dbr,leakage,overall,empty_prediction\n";
    SegScores mean;
    std::size_t scored = 0;
    double empty_fraction = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!report.cases[i].ok) continue;
        const SegScores& s = scores[i];
        ss << ids[i] << ',' << fmt(s.iou) << ',' << fmt(s.precision) << ','
           << fmt(s.dlr) << ',' << fmt(s.dbr) << ',' << fmt(s.leakage) << ','
           << fmt(s.overall) << ',' << (s.empty_prediction ? 1 : 0) << '\n';
        mean.iou += s.iou;
        mean.precision += s.precision;
        mean.dlr += s.dlr;
        mean.dbr += s.dbr;
        mean.leakage += s.leakage;
        mean.overall += s.overall;
        empty_fraction += s.empty_prediction ? 1.0 : 0.0;
        ++scored;
    }
    if (scored > 0) {
        const double n = static_cast<double>(scored);
        ss << "mean," << fmt(mean.iou / n) << ',' << fmt(mean.precision / n)
           << ',' << fmt(mean.dlr / n) << ',' << fmt(mean.dbr / n) << ','
           << fmt(mean.leakage / n) << ',' << fmt(mean.overall / n) << ','
           << fmt(empty_fraction / n) << '\n';
    }
    write_text_file(join_path(cfg.output_dir, "seg_report.csv"), ss.str());
    write_failures_manifest(cfg.output_dir, report);
    return report;
}

void cmd_evaluate_cls(const PipelineConfig& cfg,
                      const std::string& predictions_csv,
                      const std::string& labels_csv) {
    cfg.validate();
    ensure_dir(cfg.output_dir);
    if (labels_csv.empty())
        throw MissingLabelsError(
            "evaluate-cls needs a labels file; scoring unlabeled cohorts is "
            "not supported");

    std::ifstream in(predictions_csv, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + predictions_csv + "' for reading");
    std::string line;
    if (!std::getline(in, line) ||
        (line != "case_id,label,decision" &&
         line != "case_id,label,decision\r"))
        throw SchemaError("'" + predictions_csv +
                          "' must have the header 'case_id,label,decision'");
    std::vector<std::string> ids;
    std::vector<int> y_pred;
    std::vector<double> decisions;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto first = line.find(',');
        const auto second =
            first == std::string::npos ? first : line.find(',', first + 1);
        if (second == std::string::npos)
            throw SchemaError("'" + predictions_csv + "': malformed row '" +
                              line + "'");
        const std::string id = line.substr(0, first);
        const std::string label = line.substr(first + 1, second - first - 1);
        const std::string decision = line.substr(second + 1);
        if (label != "0" && label != "1")
            throw SchemaError("'" + predictions_csv +
                              "': non-binary label for case '" + id + "'");
        double value = 0.0;
        const char* end = decision.data() + decision.size();
        const auto res = std::from_chars(decision.data(), end, value);
        if (res.ec != std::errc{} || res.ptr != end)
            throw SchemaError("'" + predictions_csv +
                              "': malformed decision for case '" + id + "'");
        ids.push_back(id);
        y_pred.push_back(label == "1" ? 1 : 0);
        decisions.push_back(value);
    }

    std::map<std::string, int> truth;
    for (const auto& [id, label] : labels_by_id(labels_csv))
        truth.emplace(id, label);
    std::vector<int> y_true;
    y_true.reserve(ids.size());
    for (const auto& id : ids) {
        const auto it = truth.find(id);
        if (it == truth.end())
            throw AlignmentError("labels: no label for case '" + id + "'");
        y_true.push_back(it->second);
    }

    const ClassificationReport r =
        classification_report(y_true, y_pred, decisions);
    std::ostringstream ss;
    ss << "accuracy,f1,sensitivity,specificity,auc,tp,tn,fp,fn\n";
    ss << fmt(r.accuracy) << ',' << fmt(r.f1) << ',' << fmt(r.sensitivity)
       << ',' << fmt(r.specificity) << ',' << fmt(r.auc) << ',' << r.tp
       << ',' << r.tn << ',' << r.fp << ',' << r.fn << '\n';
    write_text_file(join_path(cfg.output_dir, "cls_report.csv"), ss.str());
}

void cmd_phantom(const PipelineConfig& cfg, const PhantomSpec& spec,
                 const std::string& name) {
    cfg.validate();
    if (name.empty()) throw ConfigError("phantom: case name must not be empty");
    ensure_dir(cfg.output_dir);
    ensure_dir(join_path(cfg.output_dir, "images"));
    ensure_dir(join_path(cfg.output_dir, "masks"));
    ensure_dir(join_path(cfg.output_dir, "meta"));

    if (spec.kind == PhantomKind::Cohort) {
        const PhantomCohort cohort = generate_cohort(spec);
        std::vector<std::string> ids;
        ids.reserve(cohort.cases.size());
        for (std::size_t i = 0; i < cohort.cases.size(); ++i) {
            char suffix[8];
            std::snprintf(suffix, sizeof suffix, "_%03zu", i);
            ids.push_back(name + suffix);
            write_phantom_case(cfg, spec, ids.back(), cohort.cases[i]);
        }
        write_labels_csv(join_path(cfg.output_dir, "labels.csv"), ids,
                         cohort.labels);
        json summary;
        summary["schema"] = "airquant-cohort/1";
        summary["size"] = cohort.cases.size();
        summary["seed"] = static_cast<std::int64_t>(spec.seed);
        summary["signal"] = cohort.signal_description;
        write_text_file(join_path(cfg.output_dir, "cohort.json"),
                        summary.dump(2) + "\n");
        return;
    }
    write_phantom_case(cfg, spec, name, generate_phantom(spec));
}

}  // namespace airquant
