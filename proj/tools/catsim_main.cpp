// catsim CLI: synthetic data generation, single-model calibration,
// full cross-validated CAT simulation, and the comparison report.

#include "catsim/catsim.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

namespace {

using namespace catsim;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot open '" + path + "' for writing");
    return out;
}

int cmd_generate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& out_path) {
    auto spec = config::synthetic_from_json(config::load_json_file(config_path));
    if (seed) spec.seed = *seed;
    const auto data = dataio::generate_synthetic(spec);
    dataio::save_responses_file(data, out_path);
    std::cout << "wrote " << data.records.size() << " records x " << data.pool_size()
              << " questions to " << out_path << "\n";
    return 0;
}

int cmd_calibrate(const std::string& config_path, std::optional<std::uint64_t> seed,
                  const std::string& out_path) {
    const auto doc = config::load_json_file(config_path);
    harness::DatasetSource source;
    const auto& dataset_doc = doc.contains("dataset") ? doc.at("dataset") : doc;
    if (dataset_doc.contains("file")) {
        source.file = dataset_doc.at("file").get<std::string>();
    } else if (dataset_doc.contains("synthetic")) {
        source.synthetic = config::synthetic_from_json(dataset_doc.at("synthetic"));
    } else {
        fail(ErrorKind::config, "calibrate config needs dataset.file or dataset.synthetic");
    }
    require(doc.contains("model"), ErrorKind::config, "calibrate config needs a 'model' entry");
    const auto spec = config::model_spec_from_json(doc.at("model"));

    const std::uint64_t root = seed.value_or(0);
    const auto data = harness::resolve_dataset(source, root);
    const auto model = harness::fit_model(spec, data, derive_seed(root, "fit/" + spec.label));

    auto out = open_out(out_path);
    if (const auto* irt_model = dynamic_cast<const irt::IrtModelHandle*>(model.get())) {
        irt::export_items(irt_model->model(), out);
    } else if (const auto* bn_model = dynamic_cast<const bn::BnModel*>(model.get())) {
        out << config::network_to_json(bn_model->network()).dump(2) << "\n";
    } else if (const auto* nn_model = dynamic_cast<const nn::NnModel*>(model.get())) {
        nn::export_params(nn_model->params(), out);
    }
    std::cout << "calibrated '" << spec.label << "' (" << model->family() << ") on "
              << data.records.size() << " records -> " << out_path << "\n";
    return 0;
}

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& out_path, const std::string& format) {
    auto config = config::experiment_from_json(config::load_json_file(config_path));
    if (seed) config.seed = *seed;
    const auto result = harness::run_experiment(config);
    for (const auto& [label, message] : result.errors) {
        std::cerr << "model '" << label << "' failed: " << message << "\n";
    }
    require(!result.curves.empty(), ErrorKind::empty_input, "every model failed");

    const auto emit_format =
        format == "json" ? harness::EmitFormat::json : harness::EmitFormat::csv;
    if (out_path.empty()) {
        harness::emit_results(result.curves, emit_format, std::cout);
    } else {
        auto out = open_out(out_path);
        harness::emit_results(result.curves, emit_format, out);
        std::cout << "wrote curves for " << result.curves.size() << " model(s) to " << out_path
                  << "\n";
    }
    return result.errors.empty() ? 0 : 1;
}

int cmd_report(const std::string& config_path, std::optional<std::uint64_t> seed,
               const std::string& out_path) {
    auto config = config::experiment_from_json(config::load_json_file(config_path));
    if (seed) config.seed = *seed;
    const auto result = harness::run_experiment(config);
    for (const auto& [label, message] : result.errors) {
        std::cerr << "model '" << label << "' failed: " << message << "\n";
    }
    require(!result.curves.empty(), ErrorKind::empty_input, "every model failed");
    const auto report = harness::compare_baselines(result.dataset, result.curves);
    const std::string text = harness::render_report(report);
    if (out_path.empty()) {
        std::cout << text;
    } else {
        open_out(out_path) << text;
    }
    return result.errors.empty() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"catsim - adaptive-testing simulation over IRT, BN and NN student models"};
    app.require_subcommand(1);

    std::string config_path, out_path, format = "csv";
    std::optional<std::uint64_t> seed;

    auto add_common = [&](CLI::App* cmd, bool out_required) {
        cmd->add_option("--config", config_path, "config document (JSON)")->required();
        auto* out = cmd->add_option("--out", out_path, "output path");
        if (out_required) out->required();
        cmd->add_option("--seed", seed, "root seed override");
    };

    auto* generate = app.add_subcommand("generate", "write a synthetic response CSV");
    add_common(generate, true);
    auto* calibrate = app.add_subcommand("calibrate", "fit one model and export its parameters");
    add_common(calibrate, true);
    auto* simulate = app.add_subcommand("simulate", "run the cross-validated CAT experiment");
    add_common(simulate, false);
    simulate->add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
    auto* report = app.add_subcommand("report", "run the experiment and print the comparison table");
    add_common(report, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) return cmd_generate(config_path, seed, out_path);
        if (calibrate->parsed()) return cmd_calibrate(config_path, seed, out_path);
        if (simulate->parsed()) return cmd_simulate(config_path, seed, out_path, format);
        if (report->parsed()) return cmd_report(config_path, seed, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
