#include "catsim/bn.hpp"
#include "catsim/bn_infer.hpp"
#include "catsim/core.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace catsim;

namespace {

PredictionVector preds(std::initializer_list<int> bits) {
    PredictionVector v;
    for (int b : bits) v.push_back(b ? AnswerValue::correct : AnswerValue::incorrect);
    return v;
}

StudentRecord record(std::string id, std::initializer_list<int> bits) {
    StudentRecord r;
    r.student_id = std::move(id);
    for (int b : bits) r.answers.push_back(b ? AnswerValue::correct : AnswerValue::incorrect);
    return r;
}

// one Boolean skill, two informative questions
bn::BnNetwork two_question_net() {
    bn::BnNetwork net;
    net.structure.nodes = {bn::BnNode{"skill", bn::NodeKind::skill, 2},
                           bn::BnNode{"Q1", bn::NodeKind::question, 2},
                           bn::BnNode{"Q2", bn::NodeKind::question, 2}};
    net.structure.edges = {{0, 1}, {0, 2}};
    net.cpds = {bn::CptTable{{{0.6, 0.4}}},
                bn::CptTable{{{0.8, 0.2}, {0.1, 0.9}}},
                bn::CptTable{{{0.7, 0.3}, {0.3, 0.7}}}};
    net.validate();
    return net;
}

// single question that deterministically copies a fair Boolean skill
bn::BnNetwork copy_net() {
    bn::BnNetwork net;
    net.structure.nodes = {bn::BnNode{"skill", bn::NodeKind::skill, 2},
                           bn::BnNode{"Q1", bn::NodeKind::question, 2}};
    net.structure.edges = {{0, 1}};
    net.cpds = {bn::CptTable{{{0.5, 0.5}}}, bn::CptTable{{{1.0, 0.0}, {0.0, 1.0}}}};
    net.validate();
    return net;
}

} // namespace

TEST_CASE("success_ratio_step counts matches over the full pool", "[core]") {
    const auto truth = record("s1", {1, 0, 1, 1});
    CHECK(success_ratio_step(preds({1, 0, 1, 1}), truth) == 1.0);
    CHECK(success_ratio_step(preds({0, 1, 0, 0}), truth) == 0.0);
    CHECK(success_ratio_step(preds({1, 0, 1, 0}), truth) == 0.75);
}

TEST_CASE("success_ratio_step rejects mismatched pools", "[core]") {
    const auto truth = record("s1", {1, 0});
    CHECK_THROWS_MATCHES(success_ratio_step(preds({1, 0, 1}), truth), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::pool_mismatch;
                         }));
}

TEST_CASE("success_ratio_total is the arithmetic mean", "[core]") {
    const std::vector<double> a{1.0, 1.0}, b{0.0, 1.0}, c{0.25, 0.5, 0.75};
    CHECK(success_ratio_total(a) == 1.0);
    CHECK(success_ratio_total(b) == 0.5);
    CHECK(success_ratio_total(c) == 0.5);
    const std::vector<double> empty;
    CHECK_THROWS_MATCHES(success_ratio_total(empty), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::empty_input;
                         }));
}

TEST_CASE("budget 0 yields only the prior step", "[core]") {
    const bn::BnModel model(two_question_net(), {"Q1", "Q2"});
    const auto trace = run_cat_session(model, record("s1", {1, 0}), 0);
    REQUIRE(trace.size() == 1);
    CHECK(trace[0].step_index == 0);
    CHECK_FALSE(trace[0].asked.has_value());
    CHECK_FALSE(trace[0].answer_given.has_value());
    CHECK(trace[0].predictions.size() == 2);
}

TEST_CASE("budget p exhausts the pool exactly once", "[core]") {
    const bn::BnModel model(two_question_net(), {"Q1", "Q2"});
    const auto trace = run_cat_session(model, record("s1", {1, 0}), 2);
    REQUIRE(trace.size() == 3);
    std::set<std::size_t> asked;
    for (std::size_t s = 1; s < trace.size(); ++s) {
        REQUIRE(trace[s].asked.has_value());
        asked.insert(trace[s].asked->index);
    }
    CHECK(asked == std::set<std::size_t>{0, 1});
}

TEST_CASE("budget beyond the pool is rejected", "[core]") {
    const bn::BnModel model(two_question_net(), {"Q1", "Q2"});
    CHECK_THROWS_MATCHES(run_cat_session(model, record("s1", {1, 0}), 3), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.kind() == ErrorKind::budget; }));
}

TEST_CASE("deterministic copy question pins the skill after one answer", "[core]") {
    const auto net = copy_net();
    // oracle: enumerate the 2-node joint
    const auto posterior = oracle::brute_force_marginals(net, {{1, 1}}, {0});
    REQUIRE_THAT(posterior.at(0)[1], Catch::Matchers::WithinAbs(1.0, 1e-15));

    const bn::BnModel model(net, {"Q1"});
    const auto trace = run_cat_session(model, record("s1", {1}), 1);
    REQUIRE(trace.size() == 2);
    CHECK(trace[1].sr == 1.0);
    REQUIRE(trace[1].estimate.marginals.size() == 1);
    CHECK_THAT(trace[1].estimate.marginals[0].probs[1], Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK(trace[1].predictions[0] == AnswerValue::correct);
}

TEST_CASE("evidence grows by exactly one question per step", "[core]") {
    const bn::BnModel model(two_question_net(), {"Q1", "Q2"});
    auto session = model.make_session(0);
    CHECK(evidence_count(session->evidence()) == 0);
    const auto q1 = session->select_next();
    session->absorb(q1, AnswerValue::correct);
    CHECK(evidence_count(session->evidence()) == 1);
    const auto q2 = session->select_next();
    CHECK(q2 != q1);
    session->absorb(q2, AnswerValue::incorrect);
    CHECK(evidence_count(session->evidence()) == 2);
}

TEST_CASE("absorbing a question twice is a contract violation", "[core]") {
    const bn::BnModel model(two_question_net(), {"Q1", "Q2"});
    auto session = model.make_session(0);
    session->absorb(QuestionId{0}, AnswerValue::correct);
    CHECK_THROWS_MATCHES(session->absorb(QuestionId{0}, AnswerValue::correct), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::contract_violation;
                         }));
}

TEST_CASE("replaying absorbed answers reproduces every prediction", "[core]") {
    const bn::BnModel model(two_question_net(), {"Q1", "Q2"});
    const auto student = record("s1", {0, 1});
    const auto trace = run_cat_session(model, student, 2);

    auto replay = model.make_session(0);
    REQUIRE(replay->predict_all() == trace[0].predictions);
    for (std::size_t s = 1; s < trace.size(); ++s) {
        replay->absorb(*trace[s].asked, *trace[s].answer_given);
        CHECK(replay->predict_all() == trace[s].predictions);
    }
}

namespace {

// misbehaving session: keeps proposing an already-absorbed question
class StuckSession final : public AdaptiveSession {
public:
    explicit StuckSession(std::size_t pool) : AdaptiveSession(pool) {}
    QuestionId select_next() const override { return QuestionId{0}; }
    PredictionVector predict_all() const override {
        return PredictionVector(pool_size(), AnswerValue::correct);
    }
    SkillEstimate skills() const override { return {}; }

protected:
    void on_absorb(QuestionId, AnswerValue) override {}
};

class StuckModel final : public LearnedModel {
public:
    std::string family() const override { return "stuck"; }
    std::size_t pool_size() const override { return 2; }
    std::unique_ptr<AdaptiveSession> make_session(std::uint64_t) const override {
        return std::make_unique<StuckSession>(2);
    }
};

} // namespace

TEST_CASE("a selection that repeats an absorbed question is rejected", "[core]") {
    const StuckModel model;
    const auto student = record("s1", {1, 1});
    CHECK_NOTHROW(run_cat_session(model, student, 1));  // first pick is fine
    CHECK_THROWS_MATCHES(run_cat_session(model, student, 2), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::contract_violation;
                         }));
}

TEST_CASE("sr stays within [0,1] with the full-pool denominator", "[core]") {
    const bn::BnModel model(two_question_net(), {"Q1", "Q2"});
    for (auto bits : {std::pair{0, 0}, std::pair{0, 1}, std::pair{1, 0}, std::pair{1, 1}}) {
        const auto student = record("s", {bits.first, bits.second});
        for (const auto& step : run_cat_session(model, student, 2)) {
            CHECK(step.sr >= 0.0);
            CHECK(step.sr <= 1.0);
            CHECK(step.predictions.size() == 2);  // denominator |X| at every step
        }
    }
}
