#pragma once

// Domain types shared by every student-model family, the adaptive-session
// contract, and the success-ratio arithmetic that scores a simulated test.

#include "catsim/errors.hpp"

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace catsim {

// ─── Question pool ───────────────────────────────────────────────

/// Position of a question inside a dataset's pool; stable for the
/// lifetime of the dataset.
struct QuestionId {
    std::size_t index = 0;
    auto operator<=>(const QuestionId&) const = default;
};

enum class AnswerValue : std::uint8_t { incorrect = 0, correct = 1 };

inline bool is_correct(AnswerValue a) { return a == AnswerValue::correct; }

/// One student's complete set of answers, aligned with the pool order.
struct StudentRecord {
    std::string student_id;
    std::vector<AnswerValue> answers;  // answers[q.index], total over the pool
};

/// Students x questions response table. Question names double as the
/// CSV header; QuestionId i refers to question_names[i].
struct ResponseDataset {
    std::vector<std::string> question_names;
    std::vector<StudentRecord> records;

    std::size_t pool_size() const { return question_names.size(); }

    std::vector<QuestionId> pool() const {
        std::vector<QuestionId> ids(question_names.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = QuestionId{i};
        return ids;
    }

    void validate() const {
        require(!question_names.empty(), ErrorKind::empty_input, "dataset has no questions");
        require(!records.empty(), ErrorKind::empty_input, "dataset has no records");
        for (const auto& r : records) {
            require(r.answers.size() == question_names.size(), ErrorKind::shape,
                    "record '" + r.student_id + "' covers " + std::to_string(r.answers.size()) +
                        " questions, pool has " + std::to_string(question_names.size()));
        }
    }
};

// ─── Estimates and predictions ───────────────────────────────────

/// Most-probable predicted answer for every pool question.
using PredictionVector = std::vector<AnswerValue>;

/// Evidence absorbed so far, aligned with the pool; nullopt = unanswered.
using EvidenceVector = std::vector<std::optional<AnswerValue>>;

inline std::size_t evidence_count(const EvidenceVector& ev) {
    std::size_t n = 0;
    for (const auto& e : ev) n += e.has_value() ? 1 : 0;
    return n;
}

struct SkillMarginal {
    std::string name;
    std::vector<double> probs;  // sums to 1
};

/// Per-family skill summary: BN models fill `marginals`, IRT fills
/// `point` (theta) + `dispersion`, the NN fills `point` (score).
struct SkillEstimate {
    std::vector<SkillMarginal> marginals;
    std::optional<double> point;
    std::optional<double> dispersion;
};

struct TraceStep {
    std::size_t step_index = 0;
    std::optional<QuestionId> asked;         // absent at step 0
    std::optional<AnswerValue> answer_given;
    PredictionVector predictions;
    double sr = 0.0;
    SkillEstimate estimate;
};

// ─── Success ratio ───────────────────────────────────────────────

/// Fraction of pool questions whose predicted answer matches the true
/// one. The denominator is always the full pool size, at every step.
inline double success_ratio_step(const PredictionVector& predictions,
                                 const StudentRecord& truth) {
    require(!predictions.empty(), ErrorKind::empty_input, "empty prediction vector");
    require(predictions.size() == truth.answers.size(), ErrorKind::pool_mismatch,
            "predictions cover " + std::to_string(predictions.size()) +
                " questions, record covers " + std::to_string(truth.answers.size()));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == truth.answers[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

/// Mean per-student success ratio at one step.
inline double success_ratio_total(std::span<const double> per_student) {
    require(!per_student.empty(), ErrorKind::empty_input, "no per-student ratios");
    double sum = 0.0;
    for (double v : per_student) sum += v;
    return sum / static_cast<double>(per_student.size());
}

// ─── Session contract ────────────────────────────────────────────

/// Mutable per-student state driving one adaptive test. Evidence only
/// grows, one question at a time; implementations provide selection,
/// skill re-estimation and full-pool prediction on top of it.
class AdaptiveSession {
public:
    explicit AdaptiveSession(std::size_t pool_size)
        : evidence_(pool_size) {}
    virtual ~AdaptiveSession() = default;

    std::size_t pool_size() const { return evidence_.size(); }
    const EvidenceVector& evidence() const { return evidence_; }
    std::size_t answered_count() const { return answered_; }

    std::vector<QuestionId> unanswered() const {
        std::vector<QuestionId> out;
        for (std::size_t i = 0; i < evidence_.size(); ++i) {
            if (!evidence_[i].has_value()) out.push_back(QuestionId{i});
        }
        return out;
    }

    void absorb(QuestionId q, AnswerValue a) {
        require(q.index < evidence_.size(), ErrorKind::pool_mismatch,
                "question index " + std::to_string(q.index) + " outside pool");
        require(!evidence_[q.index].has_value(), ErrorKind::contract_violation,
                "question " + std::to_string(q.index) + " absorbed twice");
        evidence_[q.index] = a;
        ++answered_;
        on_absorb(q, a);
    }

    /// Next question to ask; never one already absorbed.
    virtual QuestionId select_next() const = 0;
    /// Most-probable answer for every pool question under current evidence.
    virtual PredictionVector predict_all() const = 0;
    virtual SkillEstimate skills() const = 0;

protected:
    virtual void on_absorb(QuestionId q, AnswerValue a) = 0;

private:
    EvidenceVector evidence_;
    std::size_t answered_ = 0;
};

/// Immutable fitted parameters for one model family. Safe to share
/// across concurrently running sessions.
class LearnedModel {
public:
    virtual ~LearnedModel() = default;
    virtual std::string family() const = 0;
    virtual std::size_t pool_size() const = 0;
    /// `session_seed` only matters for stochastic selection policies;
    /// deterministic families ignore it.
    virtual std::unique_ptr<AdaptiveSession> make_session(std::uint64_t session_seed) const = 0;
};

// ─── Session loop ────────────────────────────────────────────────

/// Simulate one adaptive test: budget+1 trace steps, where step 0 is
/// the prior prediction and each later step selects a question, reads
/// the true answer off the record, absorbs it and re-predicts.
inline std::vector<TraceStep> run_cat_session(const LearnedModel& model,
                                              const StudentRecord& student,
                                              std::size_t budget,
                                              std::uint64_t session_seed = 0) {
    const std::size_t p = model.pool_size();
    require(student.answers.size() == p, ErrorKind::pool_mismatch,
            "student record does not match the model's question pool");
    require(budget <= p, ErrorKind::budget,
            "budget " + std::to_string(budget) + " exceeds pool size " + std::to_string(p));

    auto session = model.make_session(session_seed);
    std::vector<TraceStep> trace;
    trace.reserve(budget + 1);

    TraceStep prior;
    prior.step_index = 0;
    prior.predictions = session->predict_all();
    prior.sr = success_ratio_step(prior.predictions, student);
    prior.estimate = session->skills();
    trace.push_back(std::move(prior));

    for (std::size_t s = 1; s <= budget; ++s) {
        const QuestionId q = session->select_next();
        require(q.index < p && !session->evidence()[q.index].has_value(),
                ErrorKind::contract_violation,
                "selection returned an absorbed or out-of-pool question");
        const AnswerValue a = student.answers[q.index];
        session->absorb(q, a);

        TraceStep step;
        step.step_index = s;
        step.asked = q;
        step.answer_given = a;
        step.predictions = session->predict_all();
        step.sr = success_ratio_step(step.predictions, student);
        step.estimate = session->skills();
        trace.push_back(std::move(step));
    }
    return trace;
}

} // namespace catsim
