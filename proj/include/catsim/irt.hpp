#pragma once

// Two-parameter logistic student model: item response function, item
// information, marginal-maximum-likelihood calibration (EM over a fixed
// ability grid), ability estimation, and maximum-information selection.

#include "catsim/core.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace catsim::irt {

struct IrtItem {
    double a = 1.0;  // discrimination, > 0
    double b = 0.0;  // difficulty
};

/// Ability grid with normalized prior weights (sum 1).
struct ThetaGrid {
    std::vector<double> nodes;
    std::vector<double> weights;

    static ThetaGrid standard_normal(int n = 41, double lo = -5.0, double hi = 5.0) {
        ThetaGrid g;
        g.nodes.resize(n);
        g.weights.resize(n);
        double total = 0.0;
        for (int q = 0; q < n; ++q) {
            const double t = lo + (hi - lo) * static_cast<double>(q) / (n - 1);
            g.nodes[q] = t;
            g.weights[q] = std::exp(-0.5 * t * t);
            total += g.weights[q];
        }
        for (double& w : g.weights) w /= total;
        return g;
    }
};

struct IrtModel {
    std::vector<IrtItem> items;  // one per pool question
    ThetaGrid grid;

    std::size_t pool_size() const { return items.size(); }
};

// ─── Item-level formulas ─────────────────────────────────────────

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// P(correct | theta) for a 2PL item.
inline double irf(const IrtItem& item, double theta) {
    return sigmoid(item.a * (theta - item.b));
}

/// Fisher information; for the 2PL the derivative-based definition
/// (p')^2 / (p q) collapses to a^2 p q.
inline double item_information(const IrtItem& item, double theta) {
    const double p = irf(item, theta);
    return item.a * item.a * p * (1.0 - p);
}

inline double standard_error(double information) {
    require(information > 0.0, ErrorKind::domain, "information must be positive");
    return 1.0 / std::sqrt(information);
}

// ─── Calibration (MML via EM on the grid) ────────────────────────

struct CalibrationSettings {
    int max_iter = 500;
    double tol = 1e-7;       // stop when the marginal loglik gain drops below
    int grid_size = 41;
    double grid_lo = -5.0;
    double grid_hi = 5.0;
    double a_min = 0.05, a_max = 10.0;
    double b_min = -6.0, b_max = 6.0;
};

struct CalibrationResult {
    IrtModel model;
    bool converged = false;
    int iterations = 0;
    std::vector<double> loglik;  // marginal log-likelihood per iteration
};

namespace detail {

inline double log1pexp(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Expected Bernoulli log-likelihood of one item over the grid, with
// logit p = a*theta + c.
inline double item_q_value(double a, double c, const std::vector<double>& nodes,
                           const std::vector<double>& nbar, const std::vector<double>& rbar) {
    double q = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double z = a * nodes[k] + c;
        q += rbar[k] * z - nbar[k] * log1pexp(z);
    }
    return q;
}

// One M-step: damped Newton on (a, c), projected into the (a, b) box.
// Never returns a point with lower Q than the input.
inline IrtItem maximize_item(const IrtItem& start, const std::vector<double>& nodes,
                             const std::vector<double>& nbar, const std::vector<double>& rbar,
                             const CalibrationSettings& cfg) {
    double a = start.a;
    double c = -start.a * start.b;
    double best_q = item_q_value(a, c, nodes, nbar, rbar);
    double best_a = a, best_c = c;

    for (int it = 0; it < 30; ++it) {
        double ga = 0.0, gc = 0.0, haa = 0.0, hac = 0.0, hcc = 0.0;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const double t = nodes[k];
            const double p = sigmoid(a * t + c);
            const double resid = rbar[k] - nbar[k] * p;
            const double w = nbar[k] * p * (1.0 - p);
            ga += resid * t;
            gc += resid;
            haa += w * t * t;
            hac += w * t;
            hcc += w;
        }
        const double det = haa * hcc - hac * hac;
        if (det <= 1e-300) break;
        double da = (hcc * ga - hac * gc) / det;
        double dc = (haa * gc - hac * ga) / det;

        double step = 1.0;
        bool improved = false;
        for (int half = 0; half < 25; ++half) {
            double na = a + step * da;
            double nc = c + step * dc;
            // project through (a, b) bounds
            na = std::clamp(na, cfg.a_min, cfg.a_max);
            double nb = std::clamp(-nc / na, cfg.b_min, cfg.b_max);
            nc = -na * nb;
            const double nq = item_q_value(na, nc, nodes, nbar, rbar);
            if (nq >= best_q) {
                a = na;
                c = nc;
                if (nq > best_q) improved = true;
                best_q = nq;
                best_a = na;
                best_c = nc;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
        if (std::abs(step * da) < 1e-12 && std::abs(step * dc) < 1e-12) break;
    }
    return IrtItem{best_a, -best_c / best_a};
}

} // namespace detail

/// Fit 2PL items by marginal maximum likelihood: EM alternating exact
/// grid posteriors per student with per-item weighted logistic Newton
/// updates. The marginal log-likelihood is non-decreasing per iteration.
inline CalibrationResult calibrate_2pl(const ResponseDataset& train,
                                       const CalibrationSettings& cfg = {}) {
    train.validate();
    const std::size_t p = train.pool_size();
    const std::size_t n = train.records.size();

    // degenerate columns make a_i or b_i diverge
    for (std::size_t i = 0; i < p; ++i) {
        std::size_t correct = 0;
        for (const auto& r : train.records) correct += is_correct(r.answers[i]) ? 1 : 0;
        require(correct > 0 && correct < n, ErrorKind::calibration,
                "item '" + train.question_names[i] + "' has an all-" +
                    (correct == 0 ? std::string("incorrect") : std::string("correct")) +
                    " answer column");
    }

    CalibrationResult result;
    result.model.grid = ThetaGrid::standard_normal(cfg.grid_size, cfg.grid_lo, cfg.grid_hi);
    const auto& nodes = result.model.grid.nodes;
    const auto& weights = result.model.grid.weights;
    const std::size_t g = nodes.size();

    // moment start: a = 1, b from the item p-value
    result.model.items.resize(p);
    for (std::size_t i = 0; i < p; ++i) {
        double pbar = 0.0;
        for (const auto& r : train.records) pbar += is_correct(r.answers[i]) ? 1.0 : 0.0;
        pbar /= static_cast<double>(n);
        result.model.items[i] = IrtItem{1.0, std::clamp(-std::log(pbar / (1.0 - pbar)), -4.0, 4.0)};
    }

    std::vector<double> log_p(p * g), log_q(p * g);
    std::vector<double> post(g), nbar(g);
    std::vector<std::vector<double>> rbar(p, std::vector<double>(g));
    std::vector<double> ll_student(g);

    double prev_loglik = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        for (std::size_t i = 0; i < p; ++i) {
            const auto& item = result.model.items[i];
            for (std::size_t k = 0; k < g; ++k) {
                const double z = item.a * (nodes[k] - item.b);
                log_p[i * g + k] = -detail::log1pexp(-z);
                log_q[i * g + k] = -detail::log1pexp(z);
            }
        }

        // E-step
        std::fill(nbar.begin(), nbar.end(), 0.0);
        for (auto& r : rbar) std::fill(r.begin(), r.end(), 0.0);
        double loglik = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const auto& answers = train.records[t].answers;
            std::fill(ll_student.begin(), ll_student.end(), 0.0);
            for (std::size_t i = 0; i < p; ++i) {
                const double* src = is_correct(answers[i]) ? &log_p[i * g] : &log_q[i * g];
                for (std::size_t k = 0; k < g; ++k) ll_student[k] += src[k];
            }
            double peak = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < g; ++k) peak = std::max(peak, ll_student[k]);
            double total = 0.0;
            for (std::size_t k = 0; k < g; ++k) {
                post[k] = weights[k] * std::exp(ll_student[k] - peak);
                total += post[k];
            }
            loglik += peak + std::log(total);
            for (std::size_t k = 0; k < g; ++k) post[k] /= total;
            for (std::size_t k = 0; k < g; ++k) nbar[k] += post[k];
            for (std::size_t i = 0; i < p; ++i) {
                if (is_correct(answers[i])) {
                    for (std::size_t k = 0; k < g; ++k) rbar[i][k] += post[k];
                }
            }
        }
        result.loglik.push_back(loglik);
        result.iterations = iter + 1;
        if (loglik - prev_loglik < cfg.tol && iter > 0) {
            result.converged = true;
            break;
        }
        prev_loglik = loglik;

        // M-step
        for (std::size_t i = 0; i < p; ++i) {
            result.model.items[i] =
                detail::maximize_item(result.model.items[i], nodes, nbar, rbar[i], cfg);
        }
    }
    return result;
}

// ─── Ability estimation ──────────────────────────────────────────

enum class ThetaMethod { mle, eap };

struct ThetaEstimate {
    double theta_hat = 0.0;
    ThetaMethod method = ThetaMethod::eap;
    double sd = 0.0;
};

/// MLE by Newton iteration when the evidence contains both answer
/// classes; EAP under the grid prior otherwise (empty, all-correct or
/// all-incorrect evidence has no finite MLE).
inline ThetaEstimate estimate_theta(const IrtModel& model, const EvidenceVector& evidence) {
    require(evidence.size() == model.items.size(), ErrorKind::pool_mismatch,
            "evidence vector does not match the item pool");
    std::size_t n_correct = 0, n_incorrect = 0;
    for (const auto& e : evidence) {
        if (!e.has_value()) continue;
        (is_correct(*e) ? n_correct : n_incorrect) += 1;
    }

    if (n_correct > 0 && n_incorrect > 0) {
        // strictly concave log-likelihood: Newton converges from anywhere
        double theta = 0.0;
        for (int it = 0; it < 100; ++it) {
            double grad = 0.0, hess = 0.0;
            for (std::size_t i = 0; i < evidence.size(); ++i) {
                if (!evidence[i].has_value()) continue;
                const auto& item = model.items[i];
                const double pr = irf(item, theta);
                grad += item.a * ((is_correct(*evidence[i]) ? 1.0 : 0.0) - pr);
                hess -= item.a * item.a * pr * (1.0 - pr);
            }
            const double step = grad / hess;
            theta = std::clamp(theta - step, -10.0, 10.0);
            if (std::abs(step) < 1e-12) break;
        }
        double info = 0.0;
        for (std::size_t i = 0; i < evidence.size(); ++i) {
            if (evidence[i].has_value()) info += item_information(model.items[i], theta);
        }
        return ThetaEstimate{theta, ThetaMethod::mle, info > 0.0 ? 1.0 / std::sqrt(info) : 0.0};
    }

    const auto& nodes = model.grid.nodes;
    const auto& weights = model.grid.weights;
    std::vector<double> post(nodes.size());
    double total = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        double like = 1.0;
        for (std::size_t i = 0; i < evidence.size(); ++i) {
            if (!evidence[i].has_value()) continue;
            const double pr = irf(model.items[i], nodes[k]);
            like *= is_correct(*evidence[i]) ? pr : 1.0 - pr;
        }
        post[k] = weights[k] * like;
        total += post[k];
    }
    double mean = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) mean += post[k] / total * nodes[k];
    double var = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double d = nodes[k] - mean;
        var += post[k] / total * d * d;
    }
    return ThetaEstimate{mean, ThetaMethod::eap, std::sqrt(std::max(var, 0.0))};
}

// ─── Selection and prediction ────────────────────────────────────

/// Available question with the highest item information at theta;
/// ties resolve to the lowest id.
inline QuestionId select_item_irt(const IrtModel& model, double theta,
                                  std::span<const QuestionId> available) {
    require(!available.empty(), ErrorKind::selection, "no available questions");
    QuestionId best = available.front();
    double best_info = -1.0;
    for (QuestionId q : available) {
        require(q.index < model.items.size(), ErrorKind::pool_mismatch,
                "candidate question outside the item pool");
        const double info = item_information(model.items[q.index], theta);
        if (info > best_info || (info == best_info && q < best)) {
            best_info = info;
            best = q;
        }
    }
    return best;
}

/// Predict correct iff irf >= 0.5, i.e. iff theta >= b.
inline PredictionVector predict_answers_irt(const IrtModel& model, double theta) {
    PredictionVector out(model.items.size());
    for (std::size_t i = 0; i < model.items.size(); ++i) {
        out[i] = irf(model.items[i], theta) >= 0.5 ? AnswerValue::correct
                                                   : AnswerValue::incorrect;
    }
    return out;
}

// ─── Session adapter ─────────────────────────────────────────────

class IrtModelHandle;

class IrtSession final : public AdaptiveSession {
public:
    explicit IrtSession(const IrtModel& model)
        : AdaptiveSession(model.pool_size()), model_(&model) {
        estimate_ = estimate_theta(*model_, evidence());
    }

    QuestionId select_next() const override {
        const auto avail = unanswered();
        return select_item_irt(*model_, estimate_.theta_hat, avail);
    }

    PredictionVector predict_all() const override {
        return predict_answers_irt(*model_, estimate_.theta_hat);
    }

    SkillEstimate skills() const override {
        SkillEstimate s;
        s.point = estimate_.theta_hat;
        s.dispersion = estimate_.sd;
        return s;
    }

    const ThetaEstimate& theta() const { return estimate_; }

protected:
    void on_absorb(QuestionId, AnswerValue) override {
        estimate_ = estimate_theta(*model_, evidence());
    }

private:
    const IrtModel* model_;
    ThetaEstimate estimate_;
};

class IrtModelHandle final : public LearnedModel {
public:
    explicit IrtModelHandle(IrtModel model) : model_(std::move(model)) {}

    std::string family() const override { return "irt"; }
    std::size_t pool_size() const override { return model_.pool_size(); }
    std::unique_ptr<AdaptiveSession> make_session(std::uint64_t) const override {
        return std::make_unique<IrtSession>(model_);
    }

    const IrtModel& model() const { return model_; }

private:
    IrtModel model_;
};

// ─── Item table I/O (qid,a,b) ────────────────────────────────────

inline void export_items(const IrtModel& model, std::ostream& out) {
    out << "qid,a,b\n";
    char buf_a[40], buf_b[40];
    for (std::size_t i = 0; i < model.items.size(); ++i) {
        std::snprintf(buf_a, sizeof(buf_a), "%.17g", model.items[i].a);
        std::snprintf(buf_b, sizeof(buf_b), "%.17g", model.items[i].b);
        out << i << ',' << buf_a << ',' << buf_b << '\n';
    }
}

inline IrtModel import_items(std::istream& in) {
    IrtModel model;
    model.grid = ThetaGrid::standard_normal();
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::parse, "missing header");
    std::size_t row = 0;
    const auto parse_double = [&](const std::string& s) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        require(res.ec == std::errc{} && res.ptr == s.data() + s.size(), ErrorKind::parse,
                "bad number '" + s + "' in item row " + std::to_string(row));
        return v;
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream cells(line);
        std::string qid, a_str, b_str;
        require(std::getline(cells, qid, ',') && std::getline(cells, a_str, ',') &&
                    std::getline(cells, b_str),
                ErrorKind::parse, "bad item row " + std::to_string(row));
        IrtItem item;
        item.a = parse_double(a_str);
        item.b = parse_double(b_str);
        require(item.a > 0.0 && std::isfinite(item.a) && std::isfinite(item.b),
                ErrorKind::parse, "invalid parameters in item row " + std::to_string(row));
        model.items.push_back(item);
        ++row;
    }
    require(!model.items.empty(), ErrorKind::empty_input, "no items in table");
    return model;
}

} // namespace catsim::irt
