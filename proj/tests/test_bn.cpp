#include "catsim/bn.hpp"
#include "catsim/bn_em.hpp"
#include "catsim/bn_infer.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <numeric>

using namespace catsim;

namespace {

auto kind_is(ErrorKind k) {
    return Catch::Matchers::Predicate<Error>([k](const Error& e) { return e.kind() == k; });
}

// the three-parent example: Boolean parents X1..X3 feeding child Y
bn::BnNetwork three_parent_net() {
    bn::BnNetwork net;
    net.structure.nodes = {bn::BnNode{"X1", bn::NodeKind::skill, 2},
                           bn::BnNode{"X2", bn::NodeKind::skill, 2},
                           bn::BnNode{"X3", bn::NodeKind::skill, 2},
                           bn::BnNode{"Y", bn::NodeKind::skill, 2}};
    net.structure.edges = {{0, 3}, {1, 3}, {2, 3}};
    net.cpds = {bn::CptTable{{{0.5, 0.5}}}, bn::CptTable{{{0.5, 0.5}}},
                bn::CptTable{{{0.5, 0.5}}},
                // rows in (X1,X2,X3) mixed radix, last parent fastest
                bn::CptTable{{{0.08, 0.92},    // 0,0,0
                              {0.90, 0.10},    // 0,0,1
                              {0.50, 0.50},    // 0,1,0
                              {0.85, 0.15},    // 0,1,1
                              {0.67, 0.33},    // 1,0,0
                              {0.12, 0.88},    // 1,0,1
                              {0.41, 0.59},    // 1,1,0
                              {0.05, 0.95}}}}; // 1,1,1
    net.validate();
    return net;
}

bn::BnNetwork one_skill_two_questions(double q1_low, double q1_high, double q2_low,
                                      double q2_high) {
    bn::BnNetwork net;
    net.structure.nodes = {bn::BnNode{"skill", bn::NodeKind::skill, 2},
                           bn::BnNode{"Q1", bn::NodeKind::question, 2},
                           bn::BnNode{"Q2", bn::NodeKind::question, 2}};
    net.structure.edges = {{0, 1}, {0, 2}};
    net.cpds = {bn::CptTable{{{0.5, 0.5}}},
                bn::CptTable{{{1.0 - q1_low, q1_low}, {1.0 - q1_high, q1_high}}},
                bn::CptTable{{{1.0 - q2_low, q2_low}, {1.0 - q2_high, q2_high}}}};
    net.validate();
    return net;
}

} // namespace

// ─── exact inference ─────────────────────────────────────────────

TEST_CASE("root prior passes through unchanged", "[bn]") {
    bn::BnNetwork net;
    net.structure.nodes = {bn::BnNode{"skill", bn::NodeKind::skill, 2}};
    net.cpds = {bn::CptTable{{{0.2, 0.8}}}};
    net.validate();
    const auto marginals = bn::exact_marginals(net, {}, {0});
    CHECK_THAT(marginals.at(0)[0], Catch::Matchers::WithinAbs(0.2, 1e-12));
    CHECK_THAT(marginals.at(0)[1], Catch::Matchers::WithinAbs(0.8, 1e-12));
}

TEST_CASE("three-parent table row is reproduced under full evidence", "[bn]") {
    const auto net = three_parent_net();
    const auto marginals = bn::exact_marginals(net, {{0, 1}, {1, 1}, {2, 1}}, {3});
    CHECK_THAT(marginals.at(3)[1], Catch::Matchers::WithinAbs(0.95, 1e-12));
    const auto odd = bn::exact_marginals(net, {{0, 1}, {1, 0}, {2, 1}}, {3});
    CHECK_THAT(odd.at(3)[1], Catch::Matchers::WithinAbs(0.88, 1e-12));
}

TEST_CASE("variable elimination matches joint enumeration", "[bn]") {
    Rng rng(2024);
    for (int trial = 0; trial < 25; ++trial) {
        const auto net = oracle::random_network(rng);
        const auto [evidence, targets] = oracle::random_query(rng, net);
        const auto expected = oracle::brute_force_marginals(net, evidence, targets);
        const auto actual = bn::exact_marginals(net, evidence, targets);
        for (int t : targets) {
            REQUIRE(actual.at(t).size() == expected.at(t).size());
            double sum = 0.0;
            for (std::size_t s = 0; s < expected.at(t).size(); ++s) {
                CHECK_THAT(actual.at(t)[s],
                           Catch::Matchers::WithinAbs(expected.at(t)[s], 1e-9));
                sum += actual.at(t)[s];
            }
            CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-9));
        }
    }
}

TEST_CASE("impossible evidence is flagged", "[bn]") {
    bn::BnNetwork net;
    net.structure.nodes = {bn::BnNode{"skill", bn::NodeKind::skill, 2},
                           bn::BnNode{"Q1", bn::NodeKind::question, 2}};
    net.structure.edges = {{0, 1}};
    net.cpds = {bn::CptTable{{{1.0, 0.0}}},  // skill is always off
                bn::CptTable{{{1.0, 0.0}, {0.0, 1.0}}}};
    net.validate();
    CHECK_THROWS_MATCHES(bn::exact_marginals(net, {{1, 1}}, {0}), Error,
                         kind_is(ErrorKind::impossible_evidence));
    const bn::BnModel model(net, {"Q1"});
    EvidenceVector ev(1);
    ev[0] = AnswerValue::correct;
    CHECK_THROWS_MATCHES(model.predict_answers(ev), Error,
                         kind_is(ErrorKind::impossible_evidence));
}

// ─── noisy-OR ────────────────────────────────────────────────────

TEST_CASE("noisy-OR collapses to pure OR and to never", "[bn]") {
    const bn::NoisyOr pure{{1.0, 1.0, 1.0}, 0.0};
    const std::vector<int> one_active{0, 1, 0};
    CHECK(bn::noisy_or_probability(pure, one_active) == 1.0);
    const std::vector<int> none{0, 0, 0};
    CHECK(bn::noisy_or_probability(pure, none) == 0.0);

    const bn::NoisyOr partial{{0.9, 0.8}, 0.0};
    const std::vector<int> both{1, 1};
    CHECK_THAT(bn::noisy_or_probability(partial, both),
               Catch::Matchers::WithinAbs(0.98, 1e-12));
    const std::vector<int> wrong_len{1, 1, 0};
    CHECK_THROWS_MATCHES(bn::noisy_or_probability(partial, wrong_len), Error,
                         kind_is(ErrorKind::shape));
}

TEST_CASE("noisy-OR agrees with the explicit noise-variable network", "[bn]") {
    Rng rng(7);
    for (std::size_t n = 1; n <= 4; ++n) {
        bn::NoisyOr params;
        for (std::size_t i = 0; i < n; ++i) params.q.push_back(rng.uniform(0.1, 0.95));
        params.leak = rng.uniform(0.0, 0.3);
        const auto z_net = oracle::z_augmented_noisy_or(params);
        const int y_node = static_cast<int>(z_net.structure.nodes.size()) - 1;

        const std::vector<int> cards(n, 2);
        std::vector<int> states(n);
        for (std::size_t r = 0; r < (std::size_t{1} << n); ++r) {
            bn::decode_config(r, cards, states);
            std::map<int, int> evidence;
            for (std::size_t i = 0; i < n; ++i) evidence[static_cast<int>(i)] = states[i];
            const auto marginal = oracle::brute_force_marginals(z_net, evidence, {y_node});
            CHECK_THAT(bn::noisy_or_probability(params, states),
                       Catch::Matchers::WithinAbs(marginal.at(y_node)[1], 1e-12));
        }
    }
}

TEST_CASE("expanded noisy-OR table matches the formula row-wise", "[bn]") {
    const bn::NoisyOr params{{0.7, 0.5, 0.3}, 0.05};
    const auto table = bn::expand_noisy_or(params, 3);
    REQUIRE(table.rows.size() == 8);
    const std::vector<int> cards(3, 2);
    std::vector<int> states(3);
    for (std::size_t r = 0; r < 8; ++r) {
        bn::decode_config(r, cards, states);
        CHECK_THAT(table.rows[r][1],
                   Catch::Matchers::WithinAbs(bn::noisy_or_probability(params, states), 1e-15));
    }

    const auto report = bn::noisy_or_param_report(3);
    CHECK(report.noisy_or_params == 6);
    CHECK(report.noisy_or_params_leak == 8);
    CHECK(report.table_rows == 8);

    const bn::NoisyOr zeros{{0.0, 0.0}, 0.0};
    for (const auto& row : bn::expand_noisy_or(zeros, 2).rows) {
        CHECK(row[1] == 0.0);
    }

    CHECK_THROWS_MATCHES(bn::expand_noisy_or(bn::NoisyOr{std::vector<double>(21, 0.5), 0.0}, 21),
                         Error, kind_is(ErrorKind::size));
}

TEST_CASE("native noisy-OR inference equals its expanded-table network", "[bn]") {
    Rng rng(99);
    // child Y with 4 Boolean parents; compare posteriors under both encodings
    bn::NoisyOr params;
    for (int i = 0; i < 4; ++i) params.q.push_back(rng.uniform(0.2, 0.9));
    params.leak = 0.1;

    auto build = [&](bool expanded) {
        bn::BnNetwork net;
        for (int i = 0; i < 4; ++i) {
            net.structure.nodes.push_back(
                bn::BnNode{"X" + std::to_string(i + 1), bn::NodeKind::skill, 2});
            net.cpds.emplace_back(bn::CptTable{{{0.6, 0.4}}});
        }
        net.structure.nodes.push_back(bn::BnNode{"Y", bn::NodeKind::skill, 2});
        for (int i = 0; i < 4; ++i) net.structure.edges.emplace_back(i, 4);
        if (expanded) {
            net.cpds.emplace_back(bn::expand_noisy_or(params, 4));
        } else {
            net.cpds.emplace_back(params);
        }
        net.validate();
        return net;
    };
    const auto native = build(false);
    const auto tabled = build(true);
    const std::map<int, int> evidence{{4, 1}, {1, 0}};
    const std::vector<int> targets{0, 2, 3};
    const auto a = bn::exact_marginals(native, evidence, targets);
    const auto b = bn::exact_marginals(tabled, evidence, targets);
    for (int t : targets) {
        for (std::size_t s = 0; s < 2; ++s) {
            CHECK_THAT(a.at(t)[s], Catch::Matchers::WithinAbs(b.at(t)[s], 1e-12));
        }
    }
}

TEST_CASE("local structure saves free parameters on shared questions", "[bn]") {
    // a question under 3 Boolean skills: 8-row table vs 3 noise weights
    bn::BnNetwork table_net;
    table_net.structure.nodes = {bn::BnNode{"s1", bn::NodeKind::skill, 2},
                                 bn::BnNode{"s2", bn::NodeKind::skill, 2},
                                 bn::BnNode{"s3", bn::NodeKind::skill, 2},
                                 bn::BnNode{"Q1", bn::NodeKind::question, 2}};
    table_net.structure.edges = {{0, 3}, {1, 3}, {2, 3}};
    table_net.cpds = {bn::CptTable{{{0.5, 0.5}}}, bn::CptTable{{{0.5, 0.5}}},
                      bn::CptTable{{{0.5, 0.5}}},
                      bn::expand_noisy_or(bn::NoisyOr{{0.5, 0.5, 0.5}, 0.0}, 3)};
    bn::BnNetwork or_net = table_net;
    or_net.cpds[3] = bn::NoisyOr{{0.5, 0.5, 0.5}, 0.0};
    CHECK(bn::free_parameter_count(or_net) < bn::free_parameter_count(table_net));
}

TEST_CASE("expert_old is wired without Boolean-parent restrictions broken", "[bn]") {
    // overlapping skill map: Q1 sits under two skills, so its table has
    // 4 rows while the noisy-OR variant needs only 2 weights
    std::vector<std::string> pool{"Q1", "Q2", "Q3", "Q4", "Q5", "Q6", "Q7"};
    bn::SkillMap map;
    for (int s = 0; s < 7; ++s) {
        map["sk" + std::to_string(s + 1)] = {pool[static_cast<std::size_t>(s)]};
    }
    map["sk2"].push_back("Q1");  // overlap: Q1 under sk1 and sk2
    const auto structure = bn::build_catalog(bn::CatalogName::expert_old, pool, map);
    const int q1 = structure.node_index("Q1");
    REQUIRE(structure.parents(q1).size() == 2);

    auto with_questions = [&](bool noisy) {
        bn::BnNetwork net;
        net.structure = structure;
        for (std::size_t i = 0; i < structure.nodes.size(); ++i) {
            const auto parents = structure.parents(static_cast<int>(i));
            if (structure.nodes[i].kind == bn::NodeKind::skill) {
                net.cpds.emplace_back(bn::CptTable{{{0.5, 0.5}}});
            } else if (noisy) {
                net.cpds.emplace_back(
                    bn::NoisyOr{std::vector<double>(parents.size(), 0.8), 0.05});
            } else {
                bn::CptTable t;
                const std::size_t rows = std::size_t{1} << parents.size();
                t.rows.assign(rows, {0.3, 0.7});
                net.cpds.emplace_back(std::move(t));
            }
        }
        net.validate();
        return net;
    };
    CHECK(bn::free_parameter_count(with_questions(true)) <
          bn::free_parameter_count(with_questions(false)));

    // multi-parent questions infer correctly through the joint engine
    const bn::BnModel model(with_questions(true), pool);
    EvidenceVector ev(pool.size());
    ev[0] = AnswerValue::correct;
    const auto est = model.skill_estimate(ev);
    CHECK(est.marginals.size() == 7);
    const auto preds = model.predict_answers(ev);
    CHECK(preds.size() == pool.size());
}

// ─── EM learning ─────────────────────────────────────────────────

TEST_CASE("fully observed EM is one normalization pass", "[bn]") {
    // question-only structure: no latent nodes, no edges
    bn::BnStructure structure;
    structure.nodes = {bn::BnNode{"Q1", bn::NodeKind::question, 2},
                       bn::BnNode{"Q2", bn::NodeKind::question, 2}};

    ResponseDataset data;
    data.question_names = {"Q1", "Q2"};
    auto rec = [](const char* id, int a, int b) {
        return StudentRecord{id, {a ? AnswerValue::correct : AnswerValue::incorrect,
                                  b ? AnswerValue::correct : AnswerValue::incorrect}};
    };
    data.records = {rec("s1", 1, 0), rec("s2", 1, 1), rec("s3", 0, 1), rec("s4", 1, 1)};

    bn::EmSettings settings;
    settings.max_iter = 1;
    const auto result = bn::em_learn(structure, data, settings);
    const auto& q1 = std::get<bn::CptTable>(result.network.cpds[0]);
    const auto& q2 = std::get<bn::CptTable>(result.network.cpds[1]);
    // oracle: direct relative frequencies, asserted exactly
    CHECK(q1.rows[0][1] == 3.0 / 4.0);
    CHECK(q1.rows[0][0] == 1.0 / 4.0);
    CHECK(q2.rows[0][1] == 3.0 / 4.0);
    CHECK(q2.rows[0][0] == 1.0 / 4.0);
}

TEST_CASE("EM recovers a planted one-skill model up to state relabeling", "[bn]") {
    const std::vector<std::string> pool{"Q1", "Q2", "Q3", "Q4", "Q5", "Q6", "Q7", "Q8"};
    const auto structure = bn::build_catalog(bn::CatalogName::simple_3s, pool);

    bn::BnNetwork truth;
    truth.structure = structure;
    truth.cpds.emplace_back(bn::CptTable{{{0.5, 0.3, 0.2}}});
    std::vector<std::array<double, 3>> planted;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const double lo = 0.10 + 0.02 * static_cast<double>(i % 4);
        const double mid = 0.45 + 0.02 * static_cast<double>(i % 3);
        const double hi = 0.92 - 0.02 * static_cast<double>(i % 4);
        planted.push_back({lo, mid, hi});
        truth.cpds.emplace_back(bn::CptTable{{{1 - lo, lo}, {1 - mid, mid}, {1 - hi, hi}}});
    }
    truth.validate();
    const auto data = bn::sample_dataset(truth, 5000, 77);

    bn::EmSettings settings;
    settings.seed = 5;
    settings.max_iter = 500;
    settings.tol = 1e-9;
    const auto result = bn::em_learn(structure, data, settings);

    // align latent states by sorting on prior weight
    const auto& learned_prior = std::get<bn::CptTable>(result.network.cpds[0]).rows[0];
    std::array<int, 3> learned_order{0, 1, 2};
    std::sort(learned_order.begin(), learned_order.end(),
              [&](int x, int y) { return learned_prior[x] < learned_prior[y]; });
    const std::array<int, 3> planted_order{2, 1, 0};  // planted priors sorted ascending
    const std::array<double, 3> planted_prior{0.5, 0.3, 0.2};
    for (int k = 0; k < 3; ++k) {
        CHECK_THAT(learned_prior[learned_order[k]],
                   Catch::Matchers::WithinAbs(planted_prior[planted_order[k]], 0.05));
    }
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto& rows = std::get<bn::CptTable>(result.network.cpds[i + 1]).rows;
        for (int k = 0; k < 3; ++k) {
            CHECK_THAT(rows[learned_order[k]][1],
                       Catch::Matchers::WithinAbs(planted[i][planted_order[k]], 0.05));
        }
    }
}

TEST_CASE("EM log-likelihood never decreases", "[bn]") {
    const std::vector<std::string> pool{"Q1", "Q2", "Q3", "Q4", "Q5"};
    const auto structure = bn::build_catalog(bn::CatalogName::simple_4s, pool);
    bn::BnNetwork truth;
    truth.structure = bn::build_catalog(bn::CatalogName::simple_3s, pool);
    truth.cpds.emplace_back(bn::CptTable{{{0.4, 0.35, 0.25}}});
    for (std::size_t i = 0; i < pool.size(); ++i) {
        truth.cpds.emplace_back(bn::CptTable{{{0.8, 0.2}, {0.5, 0.5}, {0.15, 0.85}}});
    }
    const auto data = bn::sample_dataset(truth, 400, 13);

    bn::EmSettings settings;
    settings.seed = 21;
    settings.max_iter = 150;
    const auto result = bn::em_learn(structure, data, settings);
    REQUIRE(result.loglik.size() >= 2);
    for (std::size_t i = 1; i < result.loglik.size(); ++i) {
        CHECK(result.loglik[i] >= result.loglik[i - 1] - 1e-9);
    }

    // determinism: same seed, same parameters
    const auto again = bn::em_learn(structure, data, settings);
    const auto& a = std::get<bn::CptTable>(result.network.cpds[1]).rows;
    const auto& b = std::get<bn::CptTable>(again.network.cpds[1]).rows;
    CHECK(a == b);
}

TEST_CASE("exactly uniform tables are a fixed point on balanced data", "[bn]") {
    const std::vector<std::string> pool{"Q1", "Q2"};
    const auto structure = bn::build_catalog(bn::CatalogName::simple_3s, pool);
    ResponseDataset data;
    data.question_names = pool;
    data.records = {StudentRecord{"s1", {AnswerValue::correct, AnswerValue::correct}},
                    StudentRecord{"s2", {AnswerValue::incorrect, AnswerValue::incorrect}},
                    StudentRecord{"s3", {AnswerValue::correct, AnswerValue::incorrect}},
                    StudentRecord{"s4", {AnswerValue::incorrect, AnswerValue::correct}}};

    bn::EmSettings settings;
    settings.init_jitter = 0.0;  // exactly uniform start
    settings.max_iter = 5;
    settings.tol = 0.0;
    const auto result = bn::em_learn(structure, data, settings);
    const auto& prior = std::get<bn::CptTable>(result.network.cpds[0]).rows[0];
    for (double v : prior) CHECK_THAT(v, Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
    for (std::size_t q = 1; q <= 2; ++q) {
        for (const auto& row : std::get<bn::CptTable>(result.network.cpds[q]).rows) {
            CHECK_THAT(row[0], Catch::Matchers::WithinAbs(0.5, 1e-12));
            CHECK_THAT(row[1], Catch::Matchers::WithinAbs(0.5, 1e-12));
        }
    }
}

TEST_CASE("EM rejects a structure/pool mismatch", "[bn]") {
    const auto structure = bn::build_catalog(bn::CatalogName::simple_3s, {"Q1", "Q2"});
    ResponseDataset data;
    data.question_names = {"Q1", "QX"};
    data.records = {StudentRecord{"s1", {AnswerValue::correct, AnswerValue::incorrect}}};
    CHECK_THROWS_MATCHES(bn::em_learn(structure, data), Error, kind_is(ErrorKind::shape));
}

// ─── catalog ─────────────────────────────────────────────────────

TEST_CASE("catalog shapes match their table rows", "[bn]") {
    std::vector<std::string> pool;
    for (int i = 1; i <= 20; ++i) pool.push_back("Q" + std::to_string(i));

    const auto simple = bn::build_catalog(bn::CatalogName::simple_3s, pool);
    CHECK(simple.nodes.size() == 21);
    CHECK(simple.edges.size() == 20);
    CHECK(simple.nodes[0].state_count == 3);
    CHECK(bn::build_catalog(bn::CatalogName::simple_4s, pool).nodes[0].state_count == 4);
    CHECK(bn::build_catalog(bn::CatalogName::simple_9s, pool).nodes[0].state_count == 9);

    bn::SkillMap map;
    for (int s = 0; s < 7; ++s) {
        std::vector<std::string> qs;
        for (int i = s; i < 20; i += 7) qs.push_back(pool[static_cast<std::size_t>(i)]);
        map["skill" + std::to_string(s + 1)] = qs;
    }
    const auto expert_old = bn::build_catalog(bn::CatalogName::expert_old, pool, map);
    CHECK(expert_old.skill_nodes().size() == 7);
    for (int sk : expert_old.skill_nodes()) CHECK(expert_old.nodes[sk].state_count == 2);
    std::size_t skill_to_skill_old = 0;
    for (const auto& [p, c] : expert_old.edges) {
        if (expert_old.nodes[c].kind == bn::NodeKind::skill) ++skill_to_skill_old;
    }
    CHECK(skill_to_skill_old == 0);

    const auto expert_new = bn::build_catalog(bn::CatalogName::expert_new, pool, map);
    CHECK(expert_new.skill_nodes().size() == 8);
    std::size_t three_state = 0, skill_to_skill = 0;
    for (int sk : expert_new.skill_nodes()) {
        if (expert_new.nodes[sk].state_count == 3) ++three_state;
    }
    for (const auto& [p, c] : expert_new.edges) {
        if (expert_new.nodes[c].kind == bn::NodeKind::skill) ++skill_to_skill;
    }
    CHECK(three_state >= 7);
    CHECK(skill_to_skill == 7);

    bn::SkillMap bad = map;
    for (auto& [name, qs] : bad) {
        qs.erase(std::remove(qs.begin(), qs.end(), "Q1"), qs.end());
    }
    CHECK_THROWS_MATCHES(bn::build_catalog(bn::CatalogName::expert_old, pool, bad), Error,
                         kind_is(ErrorKind::coverage));
    CHECK_THROWS_MATCHES(bn::build_catalog(bn::CatalogName::expert_old, pool, {}), Error,
                         kind_is(ErrorKind::coverage));
}

// ─── selection and prediction ────────────────────────────────────

TEST_CASE("entropy selection prefers the informative question", "[bn]") {
    // Q1 carries no information (identical rows), Q2 is diagnostic
    const auto net = one_skill_two_questions(0.7, 0.7, 0.1, 0.9);
    const bn::BnModel model(net, {"Q1", "Q2"});

    // hand enumeration of both expected entropies
    auto expected_entropy = [&](int qnode) {
        const auto ans = oracle::brute_force_marginals(net, {}, {qnode});
        double expected = 0.0;
        for (int x = 0; x < 2; ++x) {
            const auto post = oracle::brute_force_marginals(net, {{qnode, x}}, {0});
            double h = 0.0;
            for (double p : post.at(0)) {
                if (p > 0) h -= p * std::log(p);
            }
            expected += ans.at(qnode)[static_cast<std::size_t>(x)] * h;
        }
        return expected;
    };
    CHECK(expected_entropy(2) < expected_entropy(1));

    const std::vector<QuestionId> avail{QuestionId{0}, QuestionId{1}};
    CHECK(model.select_question_entropy(EvidenceVector(2), avail) == QuestionId{1});
}

TEST_CASE("a deterministic copy question zeroes the expected entropy", "[bn]") {
    const auto net = one_skill_two_questions(0.3, 0.8, 0.0, 1.0);  // Q2 copies the skill
    const bn::BnModel model(net, {"Q1", "Q2"});
    const std::vector<QuestionId> avail{QuestionId{0}, QuestionId{1}};
    CHECK(model.select_question_entropy(EvidenceVector(2), avail) == QuestionId{1});

    const std::vector<QuestionId> only{QuestionId{0}};
    CHECK(model.select_question_entropy(EvidenceVector(2), only) == QuestionId{0});
    CHECK_THROWS_MATCHES(model.select_question_entropy(EvidenceVector(2), {}), Error,
                         kind_is(ErrorKind::selection));
}

TEST_CASE("entropy selection is stable under candidate relabeling", "[bn]") {
    // same conditional twice: tie resolves to the lowest id
    const auto net = one_skill_two_questions(0.2, 0.9, 0.2, 0.9);
    const bn::BnModel model(net, {"Q1", "Q2"});
    const std::vector<QuestionId> avail{QuestionId{0}, QuestionId{1}};
    const std::vector<QuestionId> reversed{QuestionId{1}, QuestionId{0}};
    CHECK(model.select_question_entropy(EvidenceVector(2), avail) == QuestionId{0});
    CHECK(model.select_question_entropy(EvidenceVector(2), reversed) == QuestionId{0});
}

TEST_CASE("predictions take the posterior-predictive argmax", "[bn]") {
    const auto net = one_skill_two_questions(0.2, 0.9, 0.4, 0.6);
    const bn::BnModel model(net, {"Q1", "Q2"});

    EvidenceVector ev(2);
    ev[1] = AnswerValue::correct;  // pushes the skill high
    const auto preds = model.predict_answers(ev);
    const auto post = oracle::brute_force_marginals(net, {{2, 1}}, {1});
    CHECK((post.at(1)[1] >= 0.5) == (preds[0] == AnswerValue::correct));
    CHECK(preds[1] == AnswerValue::correct);  // answered question keeps its observation

    // exact tie predicts correct
    const auto tie_net = one_skill_two_questions(0.5, 0.5, 0.3, 0.7);
    const bn::BnModel tie_model(tie_net, {"Q1", "Q2"});
    CHECK(tie_model.predict_answers(EvidenceVector(2))[0] == AnswerValue::correct);
}

TEST_CASE("engine and VE fallback agree", "[bn]") {
    Rng rng(512);
    for (int trial = 0; trial < 5; ++trial) {
        // one-skill network with several questions, random parameters
        const std::size_t p = 3 + rng.below(3);
        std::vector<std::string> pool;
        for (std::size_t i = 0; i < p; ++i) pool.push_back("Q" + std::to_string(i + 1));
        bn::BnNetwork net;
        net.structure = bn::build_catalog(bn::CatalogName::simple_3s, pool);
        bn::CptTable prior{{{rng.uniform(0.2, 0.4), rng.uniform(0.2, 0.4), 0.0}}};
        prior.rows[0][2] = 1.0 - prior.rows[0][0] - prior.rows[0][1];
        net.cpds.emplace_back(prior);
        for (std::size_t i = 0; i < p; ++i) {
            bn::CptTable t;
            for (int s = 0; s < 3; ++s) {
                const double v = rng.uniform(0.1, 0.9);
                t.rows.push_back({1.0 - v, v});
            }
            net.cpds.emplace_back(std::move(t));
        }
        net.validate();

        const bn::BnModel fast(net, pool);
        const bn::BnModel slow(net, pool, bn::SelectionPolicy::entropy, 0);  // force VE

        EvidenceVector ev(p);
        ev[0] = AnswerValue::correct;
        if (p > 3) ev[2] = AnswerValue::incorrect;
        std::vector<QuestionId> avail;
        for (std::size_t i = 0; i < p; ++i) {
            if (!ev[i].has_value()) avail.push_back(QuestionId{i});
        }
        CHECK(fast.predict_answers(ev) == slow.predict_answers(ev));
        CHECK(fast.select_question_entropy(ev, avail) == slow.select_question_entropy(ev, avail));
        const auto m1 = fast.skill_estimate(ev);
        const auto m2 = slow.skill_estimate(ev);
        REQUIRE(m1.marginals.size() == m2.marginals.size());
        for (std::size_t j = 0; j < m1.marginals.size(); ++j) {
            for (std::size_t s = 0; s < m1.marginals[j].probs.size(); ++s) {
                CHECK_THAT(m1.marginals[j].probs[s],
                           Catch::Matchers::WithinAbs(m2.marginals[j].probs[s], 1e-12));
            }
        }
    }
}

TEST_CASE("skill marginals normalize within tolerance", "[bn]") {
    const auto net = one_skill_two_questions(0.25, 0.85, 0.4, 0.65);
    const bn::BnModel model(net, {"Q1", "Q2"});
    EvidenceVector ev(2);
    ev[0] = AnswerValue::incorrect;
    const auto est = model.skill_estimate(ev);
    REQUIRE(est.marginals.size() == 1);
    double sum = 0.0;
    for (double v : est.marginals[0].probs) sum += v;
    CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-9));
}
