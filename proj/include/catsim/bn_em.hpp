#pragma once

// EM parameter learning for BN student models: exact E-step over the
// skill joint (skills are fully latent, question answers fully observed),
// M-step by expected-count normalization. Produces table CPDs for every
// node. Observed-data log-likelihood is non-decreasing per iteration.

#include "catsim/bn.hpp"
#include "catsim/bn_infer.hpp"
#include "catsim/core.hpp"
#include "catsim/rng.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace catsim::bn {

struct EmSettings {
    std::uint64_t seed = 0;
    double tol = 1e-6;          // stop when the loglik gain drops below
    int max_iter = 200;
    double init_jitter = 0.1;   // relative perturbation of uniform rows
};

struct EmResult {
    BnNetwork network;
    std::vector<double> loglik;  // observed-data loglik per iteration
    bool converged = false;
    int iterations = 0;
};

namespace detail {

/// Uniform rows perturbed by +-jitter, renormalized; jitter 0 gives the
/// exactly uniform (symmetric fixed point) initialization.
inline BnNetwork init_tables(const BnStructure& structure, std::uint64_t seed, double jitter) {
    BnNetwork net;
    net.structure = structure;
    Rng rng(derive_seed(seed, "bn-em-init"));
    for (std::size_t node = 0; node < structure.nodes.size(); ++node) {
        const auto parents = structure.parents(static_cast<int>(node));
        std::vector<int> cards;
        for (int p : parents) cards.push_back(structure.nodes[p].state_count);
        const std::size_t rows = config_count(cards);
        const int states = structure.nodes[node].state_count;
        CptTable table;
        table.rows.assign(rows, std::vector<double>(states));
        for (auto& row : table.rows) {
            double sum = 0.0;
            for (double& v : row) {
                v = 1.0 + (jitter > 0.0 ? rng.uniform(-jitter, jitter) : 0.0);
                sum += v;
            }
            for (double& v : row) v /= sum;
        }
        net.cpds.emplace_back(std::move(table));
    }
    return net;
}

} // namespace detail

/// Learn table CPDs for `structure` from complete response records.
/// Question nodes are matched to dataset columns by name; skills are
/// latent. Deterministic given the seed.
inline EmResult em_learn(const BnStructure& structure, const ResponseDataset& train,
                         const EmSettings& settings = {}) {
    structure.validate();
    train.validate();
    const auto question_nodes = structure.question_nodes();
    require(question_nodes.size() == train.pool_size(), ErrorKind::shape,
            "structure has " + std::to_string(question_nodes.size()) +
                " question nodes, dataset has " + std::to_string(train.pool_size()));
    // engine slot -> dataset column, matched by name
    std::vector<std::size_t> column_of_slot(question_nodes.size());
    for (std::size_t slot = 0; slot < question_nodes.size(); ++slot) {
        const auto& name = structure.nodes[question_nodes[slot]].name;
        const auto it =
            std::find(train.question_names.begin(), train.question_names.end(), name);
        require(it != train.question_names.end(), ErrorKind::shape,
                "structure question '" + name + "' missing from the dataset");
        column_of_slot[slot] = static_cast<std::size_t>(it - train.question_names.begin());
    }

    EmResult result;
    result.network = detail::init_tables(structure, settings.seed, settings.init_jitter);
    SkillJointEngine engine(result.network);

    const std::size_t n_configs = engine.n_configs();
    const std::size_t n_skills = engine.skills().size();
    const std::size_t n_questions = question_nodes.size();
    const std::size_t n_students = train.records.size();

    // expected counts, same row layout as the flattened engine tables
    std::vector<std::vector<double>> skill_counts(n_skills), question_counts(n_questions);
    std::vector<double> w(n_configs);

    double prev_loglik = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < settings.max_iter; ++iter) {
        engine.refresh(result.network);
        for (std::size_t j = 0; j < n_skills; ++j) {
            const auto& tab = std::get<CptTable>(result.network.cpds[engine.skills()[j]]);
            skill_counts[j].assign(tab.rows.size() * tab.rows[0].size(), 0.0);
        }
        for (std::size_t qi = 0; qi < n_questions; ++qi) {
            question_counts[qi].assign(engine.question_row_count(qi) * 2, 0.0);
        }

        double loglik = 0.0;
        for (std::size_t t = 0; t < n_students; ++t) {
            const auto& answers = train.records[t].answers;
            w = engine.prior();
            for (std::size_t qi = 0; qi < n_questions; ++qi) {
                engine.weight_evidence(w, qi, is_correct(answers[column_of_slot[qi]]) ? 1 : 0);
            }
            double total = 0.0;
            for (double v : w) total += v;
            require(total > 0.0, ErrorKind::impossible_evidence,
                    "record '" + train.records[t].student_id +
                        "' has probability zero under the current parameters");
            loglik += std::log(total);
            const double inv = 1.0 / total;
            for (double& v : w) v *= inv;

            for (std::size_t j = 0; j < n_skills; ++j) {
                auto& counts = skill_counts[j];
                const int card = engine.skill_cards()[j];
                for (std::size_t c = 0; c < n_configs; ++c) {
                    counts[engine.skill_row(j, c) * card + engine.digit(c, j)] += w[c];
                }
            }
            for (std::size_t qi = 0; qi < n_questions; ++qi) {
                auto& counts = question_counts[qi];
                const int x = is_correct(answers[column_of_slot[qi]]) ? 1 : 0;
                for (std::size_t c = 0; c < n_configs; ++c) {
                    counts[engine.question_row(qi, c) * 2 + x] += w[c];
                }
            }
        }
        result.loglik.push_back(loglik);
        result.iterations = iter + 1;
        if (iter > 0 && loglik - prev_loglik < settings.tol) {
            result.converged = true;
            break;
        }
        prev_loglik = loglik;

        // M-step: normalize expected counts; zero-mass rows keep the
        // previous parameters.
        for (std::size_t j = 0; j < n_skills; ++j) {
            auto& tab = std::get<CptTable>(result.network.cpds[engine.skills()[j]]);
            const std::size_t card = tab.rows[0].size();
            for (std::size_t r = 0; r < tab.rows.size(); ++r) {
                double total = 0.0;
                for (std::size_t st = 0; st < card; ++st) total += skill_counts[j][r * card + st];
                if (total <= 0.0) continue;
                for (std::size_t st = 0; st < card; ++st) {
                    tab.rows[r][st] = skill_counts[j][r * card + st] / total;
                }
            }
        }
        for (std::size_t qi = 0; qi < n_questions; ++qi) {
            auto& tab = std::get<CptTable>(result.network.cpds[question_nodes[qi]]);
            for (std::size_t r = 0; r < tab.rows.size(); ++r) {
                const double total = question_counts[qi][r * 2] + question_counts[qi][r * 2 + 1];
                if (total <= 0.0) continue;
                tab.rows[r][0] = question_counts[qi][r * 2] / total;
                tab.rows[r][1] = question_counts[qi][r * 2 + 1] / total;
            }
        }
    }
    return result;
}

} // namespace catsim::bn
