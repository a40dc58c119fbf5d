#pragma once

// Experiment orchestration: resolve a dataset, split it k-fold, fit every
// roster model per fold, run adaptive sessions for each test student, and
// aggregate per-step success ratios into one curve per model. Failures are
// isolated per model label. All randomness derives from the root seed.

#include "catsim/bn.hpp"
#include "catsim/bn_em.hpp"
#include "catsim/bn_infer.hpp"
#include "catsim/core.hpp"
#include "catsim/dataio.hpp"
#include "catsim/irt.hpp"
#include "catsim/nn.hpp"
#include "catsim/rng.hpp"

#include <charconv>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace catsim::harness {

// ─── Configuration ───────────────────────────────────────────────

struct ModelSpec {
    enum class Type { irt, bn, nn };

    std::string label;
    Type type = Type::irt;

    // roster entries sharing a fit_group derive identical per-fold fit
    // seeds, so e.g. two selection policies run on the same fitted model;
    // empty means the label stands alone
    std::string fit_group;

    // irt
    irt::CalibrationSettings irt_settings;

    // bn: either a catalog name (+ skill map for expert models) or an
    // explicit structure; parameters are EM-learned per fold
    std::optional<bn::CatalogName> catalog;
    std::optional<bn::BnStructure> structure;
    bn::SkillMap skill_map;
    bn::EmSettings em;  // seed is overridden by the per-fold derivation
    bn::SelectionPolicy selection = bn::SelectionPolicy::entropy;

    // nn
    nn::NnHyperparams nn;  // seed is overridden by the per-fold derivation
};

struct DatasetSource {
    std::optional<std::string> file;
    std::optional<dataio::SyntheticSpec> synthetic;
    std::optional<ResponseDataset> inline_data;  // library/test use
};

struct ExperimentConfig {
    DatasetSource dataset;
    int folds = 10;
    std::uint64_t seed = 0;
    std::optional<std::size_t> budget;  // default: the full pool
    std::vector<ModelSpec> roster;
};

struct SimulationCurve {
    std::string label;
    std::vector<double> values;                 // SR_0 .. SR_budget
    std::vector<std::vector<double>> per_fold;  // fold -> curve over its test students
    std::size_t n_students = 0;
};

struct ExperimentResult {
    ResponseDataset dataset;
    std::size_t budget = 0;
    std::map<std::string, SimulationCurve> curves;
    std::map<std::string, std::string> errors;  // label -> failure message
};

// ─── Fitting ─────────────────────────────────────────────────────

inline ResponseDataset resolve_dataset(const DatasetSource& source, std::uint64_t root_seed) {
    if (source.inline_data.has_value()) {
        auto data = *source.inline_data;
        data.validate();
        return data;
    }
    if (source.file.has_value()) return dataio::load_responses_file(*source.file);
    require(source.synthetic.has_value(), ErrorKind::config, "no dataset source configured");
    auto spec = *source.synthetic;
    spec.seed = derive_seed(root_seed, "dataset");
    return dataio::generate_synthetic(spec);
}

/// Fit one roster entry on a training fold. `fit_seed` drives whatever
/// randomness the family has (EM init, NN init/order).
inline std::unique_ptr<LearnedModel> fit_model(const ModelSpec& spec,
                                               const ResponseDataset& train,
                                               std::uint64_t fit_seed) {
    switch (spec.type) {
        case ModelSpec::Type::irt: {
            auto fitted = irt::calibrate_2pl(train, spec.irt_settings);
            return std::make_unique<irt::IrtModelHandle>(std::move(fitted.model));
        }
        case ModelSpec::Type::bn: {
            bn::BnStructure structure;
            if (spec.catalog.has_value()) {
                structure = bn::build_catalog(*spec.catalog, train.question_names, spec.skill_map);
            } else {
                require(spec.structure.has_value(), ErrorKind::config,
                        "bn model '" + spec.label + "' needs a catalog name or a structure");
                structure = *spec.structure;
            }
            bn::EmSettings em = spec.em;
            em.seed = fit_seed;
            auto learned = bn::em_learn(structure, train, em);
            return std::make_unique<bn::BnModel>(std::move(learned.network),
                                                 train.question_names, spec.selection);
        }
        case ModelSpec::Type::nn: {
            nn::NnHyperparams hp = spec.nn;
            hp.seed = fit_seed;
            return std::make_unique<nn::NnModel>(nn::fit_nn_model(train, hp));
        }
    }
    fail(ErrorKind::config, "unknown model type");
}

// ─── The experiment loop ─────────────────────────────────────────

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
    require(!config.roster.empty(), ErrorKind::config, "empty model roster");
    for (std::size_t i = 0; i < config.roster.size(); ++i) {
        for (std::size_t j = i + 1; j < config.roster.size(); ++j) {
            require(config.roster[i].label != config.roster[j].label, ErrorKind::duplicate,
                    "duplicate model label '" + config.roster[i].label + "'");
        }
    }

    ExperimentResult result;
    result.dataset = resolve_dataset(config.dataset, config.seed);
    const std::size_t p = result.dataset.pool_size();
    result.budget = config.budget.value_or(p);
    require(result.budget <= p, ErrorKind::budget,
            "budget " + std::to_string(result.budget) + " exceeds pool size " + std::to_string(p));

    const auto plan = dataio::kfold_split(result.dataset, config.folds, config.seed);

    struct Accumulator {
        std::vector<double> sum;
        std::vector<std::vector<double>> fold_sum;
        std::vector<std::size_t> fold_n;
        std::size_t n = 0;
        bool failed = false;
    };
    std::map<std::string, Accumulator> acc;
    for (const auto& spec : config.roster) {
        auto& a = acc[spec.label];
        a.sum.assign(result.budget + 1, 0.0);
        a.fold_sum.assign(config.folds, std::vector<double>(result.budget + 1, 0.0));
        a.fold_n.assign(config.folds, 0);
    }

    for (int fold = 0; fold < config.folds; ++fold) {
        const auto train = dataio::subset(result.dataset, plan.train_indices(fold));
        const auto test_rows = plan.test_indices(fold);
        for (const auto& spec : config.roster) {
            auto& a = acc.at(spec.label);
            if (a.failed) continue;
            try {
                const std::string tag = spec.label + "/fold" + std::to_string(fold);
                const std::string fit_tag =
                    (spec.fit_group.empty() ? spec.label : spec.fit_group) + "/fold" +
                    std::to_string(fold);
                const auto model =
                    fit_model(spec, train, derive_seed(config.seed, "fit/" + fit_tag));
                for (std::size_t row : test_rows) {
                    const auto& student = result.dataset.records[row];
                    const auto trace =
                        run_cat_session(*model, student, result.budget,
                                        derive_seed(config.seed, "session/" + tag + "/" +
                                                                     student.student_id));
                    for (std::size_t s = 0; s < trace.size(); ++s) {
                        a.sum[s] += trace[s].sr;
                        a.fold_sum[fold][s] += trace[s].sr;
                    }
                    ++a.fold_n[fold];
                    ++a.n;
                }
            } catch (const std::exception& e) {
                a.failed = true;
                result.errors[spec.label] = e.what();
            }
        }
    }

    for (const auto& spec : config.roster) {
        const auto& a = acc.at(spec.label);
        if (a.failed || a.n == 0) continue;
        SimulationCurve curve;
        curve.label = spec.label;
        curve.n_students = a.n;
        curve.values.resize(result.budget + 1);
        for (std::size_t s = 0; s <= result.budget; ++s) {
            curve.values[s] = a.sum[s] / static_cast<double>(a.n);
        }
        curve.per_fold.resize(config.folds);
        for (int f = 0; f < config.folds; ++f) {
            curve.per_fold[f].resize(result.budget + 1);
            for (std::size_t s = 0; s <= result.budget; ++s) {
                curve.per_fold[f][s] =
                    a.fold_n[f] > 0 ? a.fold_sum[f][s] / static_cast<double>(a.fold_n[f]) : 0.0;
            }
        }
        result.curves[spec.label] = std::move(curve);
    }
    return result;
}

// ─── Result emission ─────────────────────────────────────────────

/// Shortest round-trip decimal form, byte-stable across runs.
inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

enum class EmitFormat { csv, json };

inline void emit_results_csv(const std::map<std::string, SimulationCurve>& curves,
                             std::ostream& out) {
    require(!curves.empty(), ErrorKind::empty_input, "no curves to emit");
    out << "model,step,sr,n_students\n";
    for (const auto& [label, curve] : curves) {
        for (std::size_t s = 0; s < curve.values.size(); ++s) {
            out << label << ',' << s << ',' << format_double(curve.values[s]) << ','
                << curve.n_students << '\n';
        }
    }
    require(out.good(), ErrorKind::io, "result emission failed");
}

/// Same rows as the CSV, one JSON object per row.
inline void emit_results_json(const std::map<std::string, SimulationCurve>& curves,
                              std::ostream& out) {
    require(!curves.empty(), ErrorKind::empty_input, "no curves to emit");
    const auto escaped = [](const std::string& s) {
        std::string out_s;
        for (char c : s) {
            if (c == '"' || c == '\\') out_s.push_back('\\');
            out_s.push_back(c);
        }
        return out_s;
    };
    out << "[\n";
    bool first = true;
    for (const auto& [label, curve] : curves) {
        for (std::size_t s = 0; s < curve.values.size(); ++s) {
            if (!first) out << ",\n";
            first = false;
            out << "  {\"model\": \"" << escaped(label) << "\", \"step\": " << s
                << ", \"sr\": " << format_double(curve.values[s])
                << ", \"n_students\": " << curve.n_students << "}";
        }
    }
    out << "\n]\n";
    require(out.good(), ErrorKind::io, "result emission failed");
}

inline void emit_results(const std::map<std::string, SimulationCurve>& curves, EmitFormat format,
                         std::ostream& out) {
    if (format == EmitFormat::csv) {
        emit_results_csv(curves, out);
    } else {
        emit_results_json(curves, out);
    }
}

// ─── Baseline comparison ─────────────────────────────────────────

/// Majority answer per question over the dataset; ties predict correct
/// (the shared prediction tie rule).
inline PredictionVector majority_predictions(const ResponseDataset& data) {
    data.validate();
    PredictionVector out(data.pool_size());
    for (std::size_t i = 0; i < data.pool_size(); ++i) {
        std::size_t correct = 0;
        for (const auto& rec : data.records) correct += is_correct(rec.answers[i]) ? 1 : 0;
        out[i] = 2 * correct >= data.records.size() ? AnswerValue::correct
                                                    : AnswerValue::incorrect;
    }
    return out;
}

/// Success ratio of the constant majority-class predictor.
inline double majority_baseline_sr(const ResponseDataset& data) {
    const auto majority = majority_predictions(data);
    std::vector<double> per_student;
    per_student.reserve(data.records.size());
    for (const auto& rec : data.records) {
        per_student.push_back(success_ratio_step(majority, rec));
    }
    return success_ratio_total(per_student);
}

struct BaselineReport {
    std::vector<std::size_t> steps;  // {0, 1, 2, mid, final} clamped to budget
    struct Row {
        std::string label;
        std::vector<double> sr;  // aligned with steps
    };
    std::vector<Row> rows;       // one per model, then the majority baseline
    double majority_sr = 0.0;
};

inline BaselineReport compare_baselines(const ResponseDataset& data,
                                        const std::map<std::string, SimulationCurve>& curves) {
    require(!curves.empty(), ErrorKind::shape, "no curves to compare");
    const std::size_t len = curves.begin()->second.values.size();
    for (const auto& [label, curve] : curves) {
        require(curve.values.size() == len, ErrorKind::shape,
                "curve '" + label + "' has a different budget");
    }
    const std::size_t budget = len - 1;

    BaselineReport report;
    report.steps = {0, std::min<std::size_t>(1, budget), std::min<std::size_t>(2, budget),
                    budget / 2, budget};
    for (const auto& [label, curve] : curves) {
        BaselineReport::Row row;
        row.label = label;
        for (std::size_t s : report.steps) row.sr.push_back(curve.values[s]);
        report.rows.push_back(std::move(row));
    }
    report.majority_sr = majority_baseline_sr(data);
    BaselineReport::Row baseline;
    baseline.label = "majority";
    baseline.sr.assign(report.steps.size(), report.majority_sr);
    report.rows.push_back(std::move(baseline));
    return report;
}

inline std::string render_report(const BaselineReport& report) {
    std::ostringstream out;
    out << "model";
    const char* names[] = {"sr@0", "sr@1", "sr@2", "sr@mid", "sr@final"};
    for (std::size_t i = 0; i < report.steps.size(); ++i) {
        out << '\t' << names[i] << "(s=" << report.steps[i] << ')';
    }
    out << '\n';
    for (const auto& row : report.rows) {
        out << row.label;
        char buf[32];
        for (double v : row.sr) {
            std::snprintf(buf, sizeof(buf), "%.4f", v);
            out << '\t' << buf;
        }
        out << '\n';
    }
    return out.str();
}

/// Area under an SR curve by step-unit trapezoids; the dominance
/// comparison between selection policies uses this.
inline double curve_area(std::span<const double> values) {
    require(values.size() >= 1, ErrorKind::empty_input, "empty curve");
    double area = 0.0;
    for (std::size_t s = 1; s < values.size(); ++s) {
        area += 0.5 * (values[s - 1] + values[s]);
    }
    return area;
}

} // namespace catsim::harness
