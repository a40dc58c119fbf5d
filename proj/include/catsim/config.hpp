#pragma once

// JSON bindings for the declarative config documents: network documents,
// synthetic dataset specs, and the experiment config consumed by the CLI.
// Schemas are documented in the README.

#include "catsim/bn.hpp"
#include "catsim/dataio.hpp"
#include "catsim/harness.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <string>

namespace catsim::config {

using nlohmann::json;

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorKind::config, std::string("bad value for '") + key + "': " + e.what());
    }
}

inline const json& need(const json& j, const char* key) {
    require(j.contains(key), ErrorKind::config, std::string("missing key '") + key + "'");
    return j.at(key);
}

} // namespace detail

// ─── Network documents ───────────────────────────────────────────

inline bn::BnStructure structure_from_json(const json& doc) {
    // catalog shortcut: {"model": "expert_new", "skill_map": {...}} or
    // {"model": "simple_3s", "questions": [...]}
    if (doc.contains("model")) {
        const auto name = bn::catalog_from_string(doc.at("model").get<std::string>());
        bn::SkillMap skill_map;
        if (doc.contains("skill_map")) {
            for (const auto& [skill, questions] : doc.at("skill_map").items()) {
                skill_map[skill] = questions.get<std::vector<std::string>>();
            }
        }
        std::vector<std::string> pool;
        if (doc.contains("questions")) {
            pool = doc.at("questions").get<std::vector<std::string>>();
        } else {
            // the mapped questions, sorted, deduplicated
            std::set<std::string> named;
            for (const auto& [skill, questions] : skill_map) {
                named.insert(questions.begin(), questions.end());
            }
            pool.assign(named.begin(), named.end());
        }
        return bn::build_catalog(name, pool, skill_map);
    }

    bn::BnStructure s;
    for (const auto& node : detail::need(doc, "nodes")) {
        bn::BnNode n;
        n.name = detail::need(node, "name").get<std::string>();
        const auto kind = detail::get_or<std::string>(node, "kind", "skill");
        if (kind == "skill") {
            n.kind = bn::NodeKind::skill;
        } else if (kind == "question") {
            n.kind = bn::NodeKind::question;
        } else {
            fail(ErrorKind::config, "node '" + n.name + "' has unknown kind '" + kind + "'");
        }
        n.state_count = detail::get_or<int>(node, "states", 2);
        s.nodes.push_back(std::move(n));
    }
    for (const auto& edge : detail::get_or<json>(doc, "edges", json::array())) {
        require(edge.is_array() && edge.size() == 2, ErrorKind::config,
                "edges must be [parent, child] pairs");
        const int p = s.node_index(edge.at(0).get<std::string>());
        const int c = s.node_index(edge.at(1).get<std::string>());
        require(p >= 0 && c >= 0, ErrorKind::config, "edge names an unknown node");
        s.edges.emplace_back(p, c);
    }
    s.validate();
    return s;
}

inline bn::BnNetwork network_from_json(const json& doc) {
    bn::BnNetwork net;
    net.structure = structure_from_json(doc);
    const json& cpds = detail::need(doc, "cpds");
    for (const auto& node : net.structure.nodes) {
        require(cpds.contains(node.name), ErrorKind::config,
                "missing conditional distribution for node '" + node.name + "'");
        const json& cpd = cpds.at(node.name);
        const auto type = detail::get_or<std::string>(cpd, "type", "table");
        if (type == "table") {
            bn::CptTable table;
            for (const auto& row : detail::need(cpd, "rows")) {
                table.rows.push_back(row.get<std::vector<double>>());
            }
            net.cpds.emplace_back(std::move(table));
        } else if (type == "noisy-or") {
            bn::NoisyOr no;
            no.q = detail::need(cpd, "q").get<std::vector<double>>();
            no.leak = detail::get_or<double>(cpd, "leak", 0.0);
            net.cpds.emplace_back(std::move(no));
        } else {
            fail(ErrorKind::config, "node '" + node.name + "' has unknown cpd type '" + type + "'");
        }
    }
    net.validate();
    return net;
}

inline json network_to_json(const bn::BnNetwork& net) {
    json doc;
    doc["nodes"] = json::array();
    for (const auto& node : net.structure.nodes) {
        doc["nodes"].push_back(
            {{"name", node.name},
             {"kind", node.kind == bn::NodeKind::skill ? "skill" : "question"},
             {"states", node.state_count}});
    }
    doc["edges"] = json::array();
    for (const auto& [p, c] : net.structure.edges) {
        doc["edges"].push_back({net.structure.nodes[p].name, net.structure.nodes[c].name});
    }
    doc["cpds"] = json::object();
    for (std::size_t i = 0; i < net.cpds.size(); ++i) {
        const auto& name = net.structure.nodes[i].name;
        if (const auto* table = std::get_if<bn::CptTable>(&net.cpds[i])) {
            doc["cpds"][name] = {{"type", "table"}, {"rows", table->rows}};
        } else {
            const auto& no = std::get<bn::NoisyOr>(net.cpds[i]);
            doc["cpds"][name] = {{"type", "noisy-or"}, {"q", no.q}, {"leak", no.leak}};
        }
    }
    return doc;
}

// ─── Synthetic dataset specs ─────────────────────────────────────

inline dataio::SyntheticSpec synthetic_from_json(const json& doc) {
    dataio::SyntheticSpec spec;
    const auto kind = detail::get_or<std::string>(doc, "kind", "irt-2pl");
    if (kind == "irt-2pl") {
        spec.kind = dataio::SyntheticSpec::Kind::irt_2pl;
    } else if (kind == "bayes-net") {
        spec.kind = dataio::SyntheticSpec::Kind::bayes_net;
    } else {
        fail(ErrorKind::config, "unknown generator kind '" + kind + "'");
    }
    spec.students = detail::get_or<std::size_t>(doc, "students", 280);
    spec.seed = detail::get_or<std::uint64_t>(doc, "seed", 0);
    spec.questions = detail::get_or<std::size_t>(doc, "questions", 20);
    if (doc.contains("items")) {
        for (const auto& item : doc.at("items")) {
            spec.items.push_back(irt::IrtItem{detail::need(item, "a").get<double>(),
                                              detail::need(item, "b").get<double>()});
        }
    }
    if (doc.contains("a_range")) {
        spec.a_range = {doc.at("a_range").at(0).get<double>(), doc.at("a_range").at(1).get<double>()};
    }
    if (doc.contains("b_range")) {
        spec.b_range = {doc.at("b_range").at(0).get<double>(), doc.at("b_range").at(1).get<double>()};
    }
    if (doc.contains("theta")) {
        spec.theta.mean = detail::get_or<double>(doc.at("theta"), "mean", 0.0);
        spec.theta.sd = detail::get_or<double>(doc.at("theta"), "sd", 1.0);
    }
    if (doc.contains("network")) spec.network = network_from_json(doc.at("network"));
    return spec;
}

// ─── Model specs and the experiment config ───────────────────────

inline harness::ModelSpec model_spec_from_json(const json& doc) {
    harness::ModelSpec spec;
    const auto type = detail::need(doc, "type").get<std::string>();
    spec.label = detail::get_or<std::string>(doc, "label", type);
    spec.fit_group = detail::get_or<std::string>(doc, "fit_group", "");
    if (type == "irt") {
        spec.type = harness::ModelSpec::Type::irt;
        spec.irt_settings.max_iter = detail::get_or<int>(doc, "max_iter", spec.irt_settings.max_iter);
        spec.irt_settings.tol = detail::get_or<double>(doc, "tol", spec.irt_settings.tol);
    } else if (type == "bn") {
        spec.type = harness::ModelSpec::Type::bn;
        if (doc.contains("catalog")) {
            spec.catalog = bn::catalog_from_string(doc.at("catalog").get<std::string>());
        } else {
            spec.structure = structure_from_json(detail::need(doc, "network"));
        }
        if (doc.contains("skill_map")) {
            for (const auto& [skill, questions] : doc.at("skill_map").items()) {
                spec.skill_map[skill] = questions.get<std::vector<std::string>>();
            }
        }
        if (doc.contains("em")) {
            const json& em = doc.at("em");
            spec.em.max_iter = detail::get_or<int>(em, "max_iter", spec.em.max_iter);
            spec.em.tol = detail::get_or<double>(em, "tol", spec.em.tol);
            spec.em.init_jitter = detail::get_or<double>(em, "jitter", spec.em.init_jitter);
        }
        const auto selection = detail::get_or<std::string>(doc, "selection", "entropy");
        if (selection == "entropy") {
            spec.selection = bn::SelectionPolicy::entropy;
        } else if (selection == "random") {
            spec.selection = bn::SelectionPolicy::random;
        } else {
            fail(ErrorKind::config, "unknown selection policy '" + selection + "'");
        }
    } else if (type == "nn") {
        spec.type = harness::ModelSpec::Type::nn;
        spec.nn.hidden = detail::get_or<int>(doc, "hidden", spec.nn.hidden);
        spec.nn.rate = detail::get_or<double>(doc, "rate", spec.nn.rate);
        spec.nn.epochs = detail::get_or<int>(doc, "epochs", spec.nn.epochs);
        spec.nn.batch = detail::get_or<int>(doc, "batch", spec.nn.batch);
    } else {
        fail(ErrorKind::config, "unknown model type '" + type + "'");
    }
    return spec;
}

inline harness::ExperimentConfig experiment_from_json(const json& doc) {
    harness::ExperimentConfig config;
    const json& dataset = detail::need(doc, "dataset");
    if (dataset.contains("file")) {
        config.dataset.file = dataset.at("file").get<std::string>();
    } else if (dataset.contains("synthetic")) {
        config.dataset.synthetic = synthetic_from_json(dataset.at("synthetic"));
    } else {
        fail(ErrorKind::config, "dataset needs a 'file' or 'synthetic' entry");
    }
    config.folds = detail::get_or<int>(doc, "folds", 10);
    config.seed = detail::get_or<std::uint64_t>(doc, "seed", 0);
    if (doc.contains("budget") && !doc.at("budget").is_null()) {
        config.budget = doc.at("budget").get<std::size_t>();
    }
    for (const auto& model : detail::need(doc, "models")) {
        config.roster.push_back(model_spec_from_json(model));
    }
    return config;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, "invalid JSON in '" + path + "': " + e.what());
    }
}

} // namespace catsim::config
