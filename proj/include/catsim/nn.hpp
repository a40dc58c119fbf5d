#pragma once

// One-hidden-layer score-predicting network: logistic activations on both
// layers, trained against the normalized test score by seeded (mini-)batch
// gradient descent. Question selection maximizes the variance of the
// predicted score over a candidate's two hypothetical answers; answer
// prediction maps the score back through per-question thresholds fitted
// on the training fold.

#include "catsim/core.hpp"
#include "catsim/irt.hpp"  // sigmoid
#include "catsim/rng.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace catsim::nn {

using irt::sigmoid;

struct MlpParams {
    std::size_t inputs = 0;
    std::size_t hidden = 0;
    std::vector<double> w1;  // hidden x inputs, row-major
    std::vector<double> b1;  // hidden
    std::vector<double> w2;  // hidden
    double b2 = 0.0;
};

// ─── Encoding ────────────────────────────────────────────────────

// +1 correct, -1 incorrect, 0 unanswered; "unknown" sits at the
// activation midpoint.
inline std::vector<double> encode_evidence(const EvidenceVector& evidence) {
    std::vector<double> x(evidence.size(), 0.0);
    for (std::size_t i = 0; i < evidence.size(); ++i) {
        if (evidence[i].has_value()) x[i] = is_correct(*evidence[i]) ? 1.0 : -1.0;
    }
    return x;
}

inline std::vector<double> encode_record(const StudentRecord& record) {
    std::vector<double> x(record.answers.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = is_correct(record.answers[i]) ? 1.0 : -1.0;
    }
    return x;
}

/// Normalized test result: fraction of the pool answered correctly.
inline double record_score(const StudentRecord& record) {
    require(!record.answers.empty(), ErrorKind::empty_input, "record has no answers");
    double correct = 0.0;
    for (AnswerValue a : record.answers) correct += is_correct(a) ? 1.0 : 0.0;
    return correct / static_cast<double>(record.answers.size());
}

// ─── Forward pass ────────────────────────────────────────────────

inline double forward(const MlpParams& params, std::span<const double> input) {
    require(input.size() == params.inputs, ErrorKind::shape,
            "input length " + std::to_string(input.size()) + ", network expects " +
                std::to_string(params.inputs));
    double z2 = params.b2;
    for (std::size_t j = 0; j < params.hidden; ++j) {
        double z1 = params.b1[j];
        const double* row = &params.w1[j * params.inputs];
        for (std::size_t i = 0; i < params.inputs; ++i) z1 += row[i] * input[i];
        z2 += params.w2[j] * sigmoid(z1);
    }
    return sigmoid(z2);
}

// ─── Loss and gradient ───────────────────────────────────────────

struct MlpGradient {
    std::vector<double> w1, b1, w2;
    double b2 = 0.0;
};

inline double mse_loss(const MlpParams& params, std::span<const std::vector<double>> inputs,
                       std::span<const double> targets) {
    require(inputs.size() == targets.size() && !inputs.empty(), ErrorKind::shape,
            "inputs and targets must align");
    double loss = 0.0;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        const double d = forward(params, inputs[t]) - targets[t];
        loss += d * d;
    }
    return loss / static_cast<double>(inputs.size());
}

/// Mean-squared-error gradient by backpropagation, averaged over the batch.
inline MlpGradient mse_gradient(const MlpParams& params,
                                std::span<const std::vector<double>> inputs,
                                std::span<const double> targets) {
    require(inputs.size() == targets.size() && !inputs.empty(), ErrorKind::shape,
            "inputs and targets must align");
    MlpGradient g;
    g.w1.assign(params.w1.size(), 0.0);
    g.b1.assign(params.b1.size(), 0.0);
    g.w2.assign(params.w2.size(), 0.0);
    const double scale = 1.0 / static_cast<double>(inputs.size());
    std::vector<double> hidden(params.hidden);
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        const auto& x = inputs[t];
        require(x.size() == params.inputs, ErrorKind::shape, "input length mismatch");
        double z2 = params.b2;
        for (std::size_t j = 0; j < params.hidden; ++j) {
            double z1 = params.b1[j];
            const double* row = &params.w1[j * params.inputs];
            for (std::size_t i = 0; i < params.inputs; ++i) z1 += row[i] * x[i];
            hidden[j] = sigmoid(z1);
            z2 += params.w2[j] * hidden[j];
        }
        const double out = sigmoid(z2);
        const double delta2 = 2.0 * (out - targets[t]) * out * (1.0 - out) * scale;
        g.b2 += delta2;
        for (std::size_t j = 0; j < params.hidden; ++j) {
            g.w2[j] += delta2 * hidden[j];
            const double delta1 = delta2 * params.w2[j] * hidden[j] * (1.0 - hidden[j]);
            g.b1[j] += delta1;
            double* grow = &g.w1[j * params.inputs];
            for (std::size_t i = 0; i < params.inputs; ++i) grow[i] += delta1 * x[i];
        }
    }
    return g;
}

// ─── Training ────────────────────────────────────────────────────

struct NnHyperparams {
    int hidden = 5;
    double rate = 0.5;
    int epochs = 2000;
    int batch = 0;  // 0 = full batch
    std::uint64_t seed = 0;
};

struct NnTrainResult {
    MlpParams params;
    std::vector<double> loss;  // full-dataset MSE after each epoch
};

inline NnTrainResult train_mlp(const ResponseDataset& train, const NnHyperparams& hp) {
    train.validate();
    require(hp.hidden >= 1, ErrorKind::config, "hidden size must be at least 1");
    require(hp.rate > 0.0, ErrorKind::config, "learning rate must be positive");
    require(hp.epochs >= 0, ErrorKind::config, "epoch count must be non-negative");
    require(hp.batch >= 0, ErrorKind::config, "batch size must be non-negative");

    const std::size_t p = train.pool_size();
    const std::size_t n = train.records.size();
    const std::size_t h = static_cast<std::size_t>(hp.hidden);

    std::vector<std::vector<double>> inputs;
    std::vector<double> targets;
    inputs.reserve(n);
    for (const auto& rec : train.records) {
        inputs.push_back(encode_record(rec));
        targets.push_back(record_score(rec));
    }

    NnTrainResult result;
    auto& params = result.params;
    params.inputs = p;
    params.hidden = h;
    params.w1.resize(h * p);
    params.b1.assign(h, 0.0);
    params.w2.resize(h);
    Rng init_rng(derive_seed(hp.seed, "nn-init"));
    const double s1 = 1.0 / std::sqrt(static_cast<double>(p));
    for (double& w : params.w1) w = init_rng.uniform(-s1, s1);
    const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
    for (double& w : params.w2) w = init_rng.uniform(-s2, s2);

    const std::size_t batch =
        (hp.batch == 0 || static_cast<std::size_t>(hp.batch) >= n) ? n
                                                                   : static_cast<std::size_t>(hp.batch);
    Rng order_rng(derive_seed(hp.seed, "nn-order"));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    std::vector<std::vector<double>> batch_inputs;
    std::vector<double> batch_targets;
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        if (batch < n) order_rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(start + batch, n);
            batch_inputs.clear();
            batch_targets.clear();
            for (std::size_t k = start; k < stop; ++k) {
                batch_inputs.push_back(inputs[order[k]]);
                batch_targets.push_back(targets[order[k]]);
            }
            const MlpGradient g = mse_gradient(params, batch_inputs, batch_targets);
            for (std::size_t i = 0; i < params.w1.size(); ++i) params.w1[i] -= hp.rate * g.w1[i];
            for (std::size_t j = 0; j < h; ++j) {
                params.b1[j] -= hp.rate * g.b1[j];
                params.w2[j] -= hp.rate * g.w2[j];
            }
            params.b2 -= hp.rate * g.b2;
        }
        result.loss.push_back(mse_loss(params, inputs, targets));
    }
    return result;
}

// ─── Training-fold statistics ────────────────────────────────────

/// Empirical P(correct) per pool question.
inline std::vector<double> answer_frequencies(const ResponseDataset& train) {
    train.validate();
    std::vector<double> freq(train.pool_size(), 0.0);
    for (const auto& rec : train.records) {
        for (std::size_t i = 0; i < freq.size(); ++i) {
            freq[i] += is_correct(rec.answers[i]) ? 1.0 : 0.0;
        }
    }
    for (double& f : freq) f /= static_cast<double>(train.records.size());
    return freq;
}

/// Per-question score threshold: the smallest candidate t minimizing the
/// training 0/1 error of "predict correct iff score >= t". Candidates are
/// 0, every training score, and a value just above 1 (never-correct).
inline std::vector<double> fit_score_thresholds(const ResponseDataset& train) {
    train.validate();
    const std::size_t p = train.pool_size();
    std::vector<double> scores;
    scores.reserve(train.records.size());
    for (const auto& rec : train.records) scores.push_back(record_score(rec));

    std::vector<double> candidates{0.0};
    candidates.insert(candidates.end(), scores.begin(), scores.end());
    candidates.push_back(std::nextafter(1.0, 2.0));
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::vector<double> thresholds(p);
    for (std::size_t i = 0; i < p; ++i) {
        double best_t = candidates.front();
        std::size_t best_err = train.records.size() + 1;
        for (double t : candidates) {
            std::size_t err = 0;
            for (std::size_t r = 0; r < train.records.size(); ++r) {
                const bool predicted = scores[r] >= t;
                if (predicted != is_correct(train.records[r].answers[i])) ++err;
            }
            if (err < best_err) {
                best_err = err;
                best_t = t;
            }
        }
        thresholds[i] = best_t;
    }
    return thresholds;
}

// ─── Selection and prediction ────────────────────────────────────

/// Variance of the predicted score over one candidate's two hypothetical
/// answers, weighted by the training-fold answer frequency.
inline double score_variance(const MlpParams& params, const EvidenceVector& evidence,
                             std::span<const double> freqs, QuestionId q) {
    require(evidence.size() == params.inputs && freqs.size() == params.inputs,
            ErrorKind::pool_mismatch, "evidence/frequency vectors must match the pool");
    require(q.index < params.inputs && !evidence[q.index].has_value(), ErrorKind::selection,
            "candidate already answered");
    std::vector<double> x = encode_evidence(evidence);
    x[q.index] = 1.0;
    const double sc_correct = forward(params, x);
    x[q.index] = -1.0;
    const double sc_incorrect = forward(params, x);
    const double p1 = freqs[q.index];
    const double mean = p1 * sc_correct + (1.0 - p1) * sc_incorrect;
    return p1 * (sc_correct - mean) * (sc_correct - mean) +
           (1.0 - p1) * (sc_incorrect - mean) * (sc_incorrect - mean);
}

/// Candidate maximizing the score variance; ties resolve to the lowest
/// question id.
inline QuestionId select_question_variance(const MlpParams& params,
                                           const EvidenceVector& evidence,
                                           std::span<const double> freqs,
                                           std::span<const QuestionId> available) {
    require(!available.empty(), ErrorKind::selection, "no available questions");
    QuestionId best = available.front();
    double best_var = -1.0;
    for (QuestionId q : available) {
        const double var = score_variance(params, evidence, freqs, q);
        if (var > best_var || (var == best_var && q < best)) {
            best_var = var;
            best = q;
        }
    }
    return best;
}

/// Predict correct iff the predicted score clears the question's
/// calibrated threshold.
inline PredictionVector predict_answers_nn(const MlpParams& params,
                                           const EvidenceVector& evidence,
                                           std::span<const double> thresholds) {
    require(thresholds.size() == params.inputs, ErrorKind::state,
            "score thresholds missing or sized for a different pool");
    require(evidence.size() == params.inputs, ErrorKind::pool_mismatch,
            "evidence vector does not match the pool");
    const double score = forward(params, encode_evidence(evidence));
    PredictionVector out(params.inputs);
    for (std::size_t i = 0; i < params.inputs; ++i) {
        out[i] = score >= thresholds[i] ? AnswerValue::correct : AnswerValue::incorrect;
    }
    return out;
}

// ─── Session adapter ─────────────────────────────────────────────

class NnModel;

class NnSession final : public AdaptiveSession {
public:
    NnSession(const MlpParams& params, std::span<const double> thresholds,
              std::span<const double> freqs)
        : AdaptiveSession(params.inputs),
          params_(&params),
          thresholds_(thresholds),
          freqs_(freqs) {}

    QuestionId select_next() const override {
        const auto avail = unanswered();
        return select_question_variance(*params_, evidence(), freqs_, avail);
    }

    PredictionVector predict_all() const override {
        return predict_answers_nn(*params_, evidence(), thresholds_);
    }

    SkillEstimate skills() const override {
        SkillEstimate est;
        est.point = forward(*params_, encode_evidence(evidence()));
        return est;
    }

protected:
    void on_absorb(QuestionId, AnswerValue) override {}

private:
    const MlpParams* params_;
    std::span<const double> thresholds_;
    std::span<const double> freqs_;
};

class NnModel final : public LearnedModel {
public:
    NnModel(MlpParams params, std::vector<double> thresholds, std::vector<double> freqs,
            std::vector<double> loss_trace = {})
        : params_(std::move(params)),
          thresholds_(std::move(thresholds)),
          freqs_(std::move(freqs)),
          loss_(std::move(loss_trace)) {
        require(thresholds_.size() == params_.inputs && freqs_.size() == params_.inputs,
                ErrorKind::state, "calibration does not match the parameter pool");
    }

    std::string family() const override { return "nn"; }
    std::size_t pool_size() const override { return params_.inputs; }
    std::unique_ptr<AdaptiveSession> make_session(std::uint64_t) const override {
        return std::make_unique<NnSession>(params_, thresholds_, freqs_);
    }

    const MlpParams& params() const { return params_; }
    const std::vector<double>& thresholds() const { return thresholds_; }
    const std::vector<double>& frequencies() const { return freqs_; }
    const std::vector<double>& loss_trace() const { return loss_; }

private:
    MlpParams params_;
    std::vector<double> thresholds_, freqs_, loss_;
};

/// Train and calibrate in one go: network weights from gradient descent,
/// thresholds and answer frequencies from the same training fold.
inline NnModel fit_nn_model(const ResponseDataset& train, const NnHyperparams& hp) {
    NnTrainResult r = train_mlp(train, hp);
    return NnModel(std::move(r.params), fit_score_thresholds(train), answer_frequencies(train),
                   std::move(r.loss));
}

// ─── Parameter I/O ───────────────────────────────────────────────

namespace detail {

inline void write_block(std::ostream& out, const char* name, std::span<const double> values,
                        std::size_t rows, std::size_t cols) {
    out << name << ' ' << rows << ' ' << cols << '\n';
    char buf[40];
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", values[r * cols + c]);
            out << buf << (c + 1 < cols ? " " : "");
        }
        out << '\n';
    }
}

} // namespace detail

inline void export_params(const MlpParams& params, std::ostream& out) {
    detail::write_block(out, "w1", params.w1, params.hidden, params.inputs);
    detail::write_block(out, "b1", params.b1, 1, params.hidden);
    detail::write_block(out, "w2", params.w2, 1, params.hidden);
    const double b2[1] = {params.b2};
    detail::write_block(out, "b2", b2, 1, 1);
}

inline MlpParams import_params(std::istream& in) {
    MlpParams params;
    std::string name;
    std::size_t rows = 0, cols = 0;
    auto read_block = [&](const char* expect, std::vector<double>& dst) {
        require(static_cast<bool>(in >> name >> rows >> cols) && name == expect,
                ErrorKind::parse, std::string("expected block '") + expect + "'");
        dst.resize(rows * cols);
        for (double& v : dst) {
            require(static_cast<bool>(in >> v), ErrorKind::parse,
                    std::string("truncated block '") + expect + "'");
        }
    };
    read_block("w1", params.w1);
    params.hidden = rows;
    params.inputs = cols;
    read_block("b1", params.b1);
    require(params.b1.size() == params.hidden, ErrorKind::parse, "b1 shape mismatch");
    read_block("w2", params.w2);
    require(params.w2.size() == params.hidden, ErrorKind::parse, "w2 shape mismatch");
    std::vector<double> b2;
    read_block("b2", b2);
    require(b2.size() == 1, ErrorKind::parse, "b2 shape mismatch");
    params.b2 = b2[0];
    return params;
}

} // namespace catsim::nn
