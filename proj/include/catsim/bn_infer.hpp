#pragma once

// Exact inference for the BN student models. Two routes:
//   - generic variable elimination over table factors (exact_marginals),
//   - a skill-joint engine that enumerates the joint over skill nodes,
//     exact whenever evidence sits on question nodes (questions are
//     structurally leaves), and fast enough for the session loop.
// BnModel binds a network to a dataset's question pool and implements the
// session contract with entropy-minimizing or uniform-random selection.

#include "catsim/bn.hpp"
#include "catsim/core.hpp"
#include "catsim/rng.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace catsim::bn {

// ─── Factors ─────────────────────────────────────────────────────

/// Table over a sorted set of variables; values in mixed radix with the
/// last variable fastest.
struct Factor {
    std::vector<int> vars;
    std::vector<int> cards;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

namespace detail {

inline std::vector<std::size_t> strides_in(const Factor& f, std::span<const int> union_vars) {
    // stride of each union variable inside f's value array (0 if absent)
    std::vector<std::size_t> strides(union_vars.size(), 0);
    std::vector<std::size_t> own(f.vars.size());
    std::size_t s = 1;
    for (std::size_t j = f.vars.size(); j-- > 0;) {
        own[j] = s;
        s *= static_cast<std::size_t>(f.cards[j]);
    }
    for (std::size_t u = 0; u < union_vars.size(); ++u) {
        for (std::size_t j = 0; j < f.vars.size(); ++j) {
            if (f.vars[j] == union_vars[u]) strides[u] = own[j];
        }
    }
    return strides;
}

} // namespace detail

inline Factor multiply(const Factor& a, const Factor& b) {
    Factor out;
    std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(),
                   std::back_inserter(out.vars));
    out.cards.resize(out.vars.size());
    for (std::size_t u = 0; u < out.vars.size(); ++u) {
        for (std::size_t j = 0; j < a.vars.size(); ++j) {
            if (a.vars[j] == out.vars[u]) out.cards[u] = a.cards[j];
        }
        for (std::size_t j = 0; j < b.vars.size(); ++j) {
            if (b.vars[j] == out.vars[u]) out.cards[u] = b.cards[j];
        }
    }
    const auto stride_a = detail::strides_in(a, out.vars);
    const auto stride_b = detail::strides_in(b, out.vars);
    out.values.assign(config_count(out.cards), 0.0);

    std::vector<int> digits(out.vars.size(), 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t idx = 0; idx < out.values.size(); ++idx) {
        out.values[idx] = a.values[ia] * b.values[ib];
        for (std::size_t j = digits.size(); j-- > 0;) {
            ++digits[j];
            ia += stride_a[j];
            ib += stride_b[j];
            if (digits[j] < out.cards[j]) break;
            ia -= stride_a[j] * static_cast<std::size_t>(out.cards[j]);
            ib -= stride_b[j] * static_cast<std::size_t>(out.cards[j]);
            digits[j] = 0;
        }
    }
    return out;
}

inline Factor marginalize_out(const Factor& f, int var) {
    Factor out;
    std::size_t drop = f.vars.size();
    for (std::size_t j = 0; j < f.vars.size(); ++j) {
        if (f.vars[j] == var) {
            drop = j;
        } else {
            out.vars.push_back(f.vars[j]);
            out.cards.push_back(f.cards[j]);
        }
    }
    require(drop < f.vars.size(), ErrorKind::shape, "variable not in factor scope");
    out.values.assign(config_count(out.cards), 0.0);
    std::vector<int> digits(f.vars.size());
    std::vector<int> kept(out.vars.size());
    for (std::size_t idx = 0; idx < f.values.size(); ++idx) {
        decode_config(idx, f.cards, digits);
        std::size_t k = 0;
        for (std::size_t j = 0; j < f.vars.size(); ++j) {
            if (j != drop) kept[k++] = digits[j];
        }
        out.values[encode_config(kept, out.cards)] += f.values[idx];
    }
    return out;
}

inline Factor reduce(const Factor& f, int var, int state) {
    Factor out;
    std::size_t drop = f.vars.size();
    for (std::size_t j = 0; j < f.vars.size(); ++j) {
        if (f.vars[j] == var) {
            drop = j;
        } else {
            out.vars.push_back(f.vars[j]);
            out.cards.push_back(f.cards[j]);
        }
    }
    require(drop < f.vars.size(), ErrorKind::shape, "variable not in factor scope");
    out.values.assign(config_count(out.cards), 0.0);
    std::vector<int> digits(f.vars.size());
    std::vector<int> kept(out.vars.size());
    for (std::size_t idx = 0; idx < f.values.size(); ++idx) {
        decode_config(idx, f.cards, digits);
        if (digits[drop] != state) continue;
        std::size_t k = 0;
        for (std::size_t j = 0; j < f.vars.size(); ++j) {
            if (j != drop) kept[k++] = digits[j];
        }
        out.values[encode_config(kept, out.cards)] = f.values[idx];
    }
    return out;
}

/// CPD of one node as a factor over {parents, node}.
inline Factor factor_from_cpd(const BnNetwork& net, int node) {
    const auto parents = net.structure.parents(node);
    Factor f;
    f.vars = parents;
    f.vars.push_back(node);
    std::sort(f.vars.begin(), f.vars.end());
    for (int v : f.vars) f.cards.push_back(net.structure.nodes[v].state_count);
    f.values.assign(config_count(f.cards), 0.0);

    std::vector<int> digits(f.vars.size());
    std::vector<int> parent_states(parents.size());
    for (std::size_t idx = 0; idx < f.values.size(); ++idx) {
        decode_config(idx, f.cards, digits);
        int child_state = 0;
        for (std::size_t j = 0; j < f.vars.size(); ++j) {
            if (f.vars[j] == node) child_state = digits[j];
        }
        for (std::size_t pi = 0; pi < parents.size(); ++pi) {
            for (std::size_t j = 0; j < f.vars.size(); ++j) {
                if (f.vars[j] == parents[pi]) parent_states[pi] = digits[j];
            }
        }
        f.values[idx] = cpd_probability(net, node, parent_states, child_state);
    }
    return f;
}

// ─── Variable elimination ────────────────────────────────────────

/// Normalized posterior joint over `targets` given evidence, by variable
/// elimination with a min-degree ordering (ties to the lowest node id).
inline Factor ve_query(const BnNetwork& net, const std::map<int, int>& evidence,
                       std::vector<int> targets) {
    const int n = static_cast<int>(net.structure.nodes.size());
    require(!targets.empty(), ErrorKind::shape, "no target variables");
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    for (int t : targets) {
        require(t >= 0 && t < n, ErrorKind::shape, "target outside the network");
        require(!evidence.count(t), ErrorKind::shape, "target overlaps evidence");
    }
    for (const auto& [v, s] : evidence) {
        require(v >= 0 && v < n && s >= 0 && s < net.structure.nodes[v].state_count,
                ErrorKind::shape, "invalid evidence assignment");
    }

    std::vector<Factor> factors;
    for (int node = 0; node < n; ++node) {
        Factor f = factor_from_cpd(net, node);
        for (const auto& [v, s] : evidence) {
            if (std::find(f.vars.begin(), f.vars.end(), v) != f.vars.end()) {
                f = reduce(f, v, s);
            }
        }
        factors.push_back(std::move(f));
    }

    std::set<int> to_eliminate;
    for (int v = 0; v < n; ++v) {
        if (!evidence.count(v) &&
            std::find(targets.begin(), targets.end(), v) == targets.end()) {
            to_eliminate.insert(v);
        }
    }

    while (!to_eliminate.empty()) {
        // min-degree: fewest distinct co-occurring variables
        int best = -1;
        std::size_t best_degree = std::numeric_limits<std::size_t>::max();
        for (int v : to_eliminate) {
            std::set<int> neighbors;
            for (const auto& f : factors) {
                if (std::find(f.vars.begin(), f.vars.end(), v) == f.vars.end()) continue;
                neighbors.insert(f.vars.begin(), f.vars.end());
            }
            neighbors.erase(v);
            if (neighbors.size() < best_degree) {
                best_degree = neighbors.size();
                best = v;
            }
        }
        Factor joined;
        joined.values = {1.0};
        std::vector<Factor> rest;
        for (auto& f : factors) {
            if (std::find(f.vars.begin(), f.vars.end(), best) != f.vars.end()) {
                joined = multiply(joined, f);
            } else {
                rest.push_back(std::move(f));
            }
        }
        rest.push_back(marginalize_out(joined, best));
        factors = std::move(rest);
        to_eliminate.erase(best);
    }

    Factor result;
    result.values = {1.0};
    for (const auto& f : factors) result = multiply(result, f);
    double total = 0.0;
    for (double v : result.values) total += v;
    require(total > 0.0, ErrorKind::impossible_evidence,
            "evidence has probability zero under the model");
    for (double& v : result.values) v /= total;
    return result;
}

/// Exact posterior marginal of every target node given evidence.
inline std::map<int, std::vector<double>> exact_marginals(const BnNetwork& net,
                                                          const std::map<int, int>& evidence,
                                                          const std::vector<int>& targets) {
    std::map<int, std::vector<double>> out;
    for (int t : targets) {
        out[t] = ve_query(net, evidence, {t}).values;
    }
    return out;
}

inline double entropy_nats(std::span<const double> dist) {
    double h = 0.0;
    for (double p : dist) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

// ─── Skill-joint engine ──────────────────────────────────────────

/// Enumerates the joint over skill nodes and precomputes, per question,
/// the CPT row hit by each joint configuration. Question evidence then
/// reduces to per-config likelihood products, which is all the session
/// loop and EM need. Refusing oversized joints keeps this exact-only.
class SkillJointEngine {
public:
    explicit SkillJointEngine(const BnNetwork& net, std::size_t max_configs = (1u << 20)) {
        const auto& s = net.structure;
        skills_ = s.skill_nodes();
        questions_ = s.question_nodes();
        std::size_t count = 1;
        for (int sk : skills_) {
            skill_cards_.push_back(s.nodes[sk].state_count);
            count *= static_cast<std::size_t>(s.nodes[sk].state_count);
            require(count <= max_configs, ErrorKind::size,
                    "skill joint exceeds " + std::to_string(max_configs) + " configurations");
        }
        n_configs_ = count;

        std::vector<int> slot_of_node(s.nodes.size(), -1);
        for (std::size_t j = 0; j < skills_.size(); ++j) slot_of_node[skills_[j]] = static_cast<int>(j);

        digits_.resize(n_configs_ * skills_.size());
        std::vector<int> digits(skills_.size());
        for (std::size_t c = 0; c < n_configs_; ++c) {
            decode_config(c, skill_cards_, digits);
            for (std::size_t j = 0; j < skills_.size(); ++j) {
                digits_[c * skills_.size() + j] = static_cast<std::uint8_t>(digits[j]);
            }
        }

        // per-skill parent rows (skill parents are skills)
        skill_rows_.resize(skills_.size());
        for (std::size_t j = 0; j < skills_.size(); ++j) {
            const auto parents = s.parents(skills_[j]);
            std::vector<int> pslots, pcards;
            for (int p : parents) {
                pslots.push_back(slot_of_node[p]);
                pcards.push_back(s.nodes[p].state_count);
            }
            auto& rows = skill_rows_[j];
            rows.resize(n_configs_);
            std::vector<int> pdigits(pslots.size());
            for (std::size_t c = 0; c < n_configs_; ++c) {
                for (std::size_t k = 0; k < pslots.size(); ++k) {
                    pdigits[k] = digit(c, static_cast<std::size_t>(pslots[k]));
                }
                rows[c] = static_cast<std::uint32_t>(encode_config(pdigits, pcards));
            }
        }

        // per-question parent rows
        question_rows_.resize(questions_.size());
        question_row_counts_.resize(questions_.size());
        for (std::size_t qi = 0; qi < questions_.size(); ++qi) {
            const auto parents = s.parents(questions_[qi]);
            std::vector<int> pslots, pcards;
            for (int p : parents) {
                require(slot_of_node[p] >= 0, ErrorKind::shape,
                        "question '" + s.nodes[questions_[qi]].name + "' has a non-skill parent");
                pslots.push_back(slot_of_node[p]);
                pcards.push_back(s.nodes[p].state_count);
            }
            question_row_counts_[qi] = config_count(pcards);
            auto& rows = question_rows_[qi];
            rows.resize(n_configs_);
            std::vector<int> pdigits(pslots.size());
            for (std::size_t c = 0; c < n_configs_; ++c) {
                for (std::size_t k = 0; k < pslots.size(); ++k) {
                    pdigits[k] = digit(c, static_cast<std::size_t>(pslots[k]));
                }
                rows[c] = static_cast<std::uint32_t>(encode_config(pdigits, pcards));
            }
        }
        refresh(net);
    }

    /// Re-read probabilities from a network with identical structure
    /// (used by EM between iterations).
    void refresh(const BnNetwork& net) {
        const auto& s = net.structure;
        // skill probability tables, flattened as row*card + state
        skill_probs_.assign(skills_.size(), {});
        for (std::size_t j = 0; j < skills_.size(); ++j) {
            const int node = skills_[j];
            const auto parents = s.parents(node);
            std::vector<int> pcards;
            for (int p : parents) pcards.push_back(s.nodes[p].state_count);
            const std::size_t rows = config_count(pcards);
            const int card = s.nodes[node].state_count;
            auto& tab = skill_probs_[j];
            tab.resize(rows * static_cast<std::size_t>(card));
            std::vector<int> pdigits(parents.size());
            for (std::size_t r = 0; r < rows; ++r) {
                decode_config(r, pcards, pdigits);
                for (int st = 0; st < card; ++st) {
                    tab[r * card + st] = cpd_probability(net, node, pdigits, st);
                }
            }
        }
        prior_.assign(n_configs_, 1.0);
        for (std::size_t j = 0; j < skills_.size(); ++j) {
            const int card = skill_cards_[j];
            const auto& tab = skill_probs_[j];
            const auto& rows = skill_rows_[j];
            for (std::size_t c = 0; c < n_configs_; ++c) {
                prior_[c] *= tab[rows[c] * card + digit(c, j)];
            }
        }
        // question probability tables, row*2 + state
        question_probs_.assign(questions_.size(), {});
        for (std::size_t qi = 0; qi < questions_.size(); ++qi) {
            const int node = questions_[qi];
            const auto parents = s.parents(node);
            std::vector<int> pcards;
            for (int p : parents) pcards.push_back(s.nodes[p].state_count);
            const std::size_t rows = question_row_counts_[qi];
            auto& tab = question_probs_[qi];
            tab.resize(rows * 2);
            std::vector<int> pdigits(parents.size());
            for (std::size_t r = 0; r < rows; ++r) {
                decode_config(r, pcards, pdigits);
                tab[r * 2] = cpd_probability(net, node, pdigits, 0);
                tab[r * 2 + 1] = cpd_probability(net, node, pdigits, 1);
            }
        }
    }

    std::size_t n_configs() const { return n_configs_; }
    const std::vector<int>& skills() const { return skills_; }
    const std::vector<int>& questions() const { return questions_; }
    const std::vector<int>& skill_cards() const { return skill_cards_; }
    const std::vector<double>& prior() const { return prior_; }

    std::uint8_t digit(std::size_t config, std::size_t skill_slot) const {
        return digits_[config * skills_.size() + skill_slot];
    }
    std::uint32_t skill_row(std::size_t skill_slot, std::size_t config) const {
        return skill_rows_[skill_slot][config];
    }
    std::uint32_t question_row(std::size_t q_slot, std::size_t config) const {
        return question_rows_[q_slot][config];
    }
    std::size_t question_row_count(std::size_t q_slot) const {
        return question_row_counts_[q_slot];
    }
    double question_prob(std::size_t q_slot, std::size_t config, int state) const {
        return question_probs_[q_slot][question_rows_[q_slot][config] * 2 +
                                       static_cast<std::size_t>(state)];
    }

    /// w[c] *= P(question = state | skill config c)
    void weight_evidence(std::vector<double>& w, std::size_t q_slot, int state) const {
        const auto& rows = question_rows_[q_slot];
        const auto& tab = question_probs_[q_slot];
        for (std::size_t c = 0; c < w.size(); ++c) {
            w[c] *= tab[rows[c] * 2 + static_cast<std::size_t>(state)];
        }
    }

    /// Marginal of each skill under joint weights w (unnormalized in, out
    /// scaled by 1/total). total must be positive.
    std::vector<std::vector<double>> skill_marginals(std::span<const double> w,
                                                     double total) const {
        std::vector<std::vector<double>> out(skills_.size());
        for (std::size_t j = 0; j < skills_.size(); ++j) {
            out[j].assign(skill_cards_[j], 0.0);
        }
        const std::size_t ns = skills_.size();
        for (std::size_t c = 0; c < w.size(); ++c) {
            const double v = w[c];
            if (v == 0.0) continue;
            const std::uint8_t* d = &digits_[c * ns];
            for (std::size_t j = 0; j < ns; ++j) out[j][d[j]] += v;
        }
        for (auto& m : out) {
            for (double& v : m) v /= total;
        }
        return out;
    }

private:
    std::vector<int> skills_, questions_, skill_cards_;
    std::size_t n_configs_ = 1;
    std::vector<std::uint8_t> digits_;
    std::vector<std::vector<std::uint32_t>> skill_rows_, question_rows_;
    std::vector<std::size_t> question_row_counts_;
    std::vector<std::vector<double>> skill_probs_, question_probs_;
    std::vector<double> prior_;
};

// ─── Pool-bound model and session ────────────────────────────────

enum class SelectionPolicy { entropy, random };

/// A fitted network bound to a dataset's question pool. Pool position i
/// maps by name onto one question node. Inference goes through the
/// skill-joint engine when it fits, generic VE otherwise.
class BnModel final : public LearnedModel {
public:
    BnModel(BnNetwork net, std::vector<std::string> pool_names,
            SelectionPolicy policy = SelectionPolicy::entropy,
            std::size_t engine_limit = (1u << 20))
        : net_(std::move(net)), pool_(std::move(pool_names)), policy_(policy) {
        net_.validate();
        const auto qnodes = net_.structure.question_nodes();
        require(qnodes.size() == pool_.size(), ErrorKind::pool_mismatch,
                "network has " + std::to_string(qnodes.size()) + " question nodes, pool has " +
                    std::to_string(pool_.size()));
        pool_node_.resize(pool_.size());
        pool_slot_.resize(pool_.size());
        for (std::size_t i = 0; i < pool_.size(); ++i) {
            const int node = net_.structure.node_index(pool_[i]);
            require(node >= 0 && net_.structure.nodes[node].kind == NodeKind::question,
                    ErrorKind::pool_mismatch,
                    "pool question '" + pool_[i] + "' is not a question node");
            pool_node_[i] = node;
            const auto it = std::find(qnodes.begin(), qnodes.end(), node);
            pool_slot_[i] = static_cast<std::size_t>(it - qnodes.begin());
        }
        if (engine_limit > 0) {
            try {
                engine_.emplace(net_, engine_limit);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::size) throw;  // too large: fall back to VE
            }
        }
    }

    std::string family() const override { return "bn"; }
    std::size_t pool_size() const override { return pool_.size(); }
    std::unique_ptr<AdaptiveSession> make_session(std::uint64_t session_seed) const override;

    const BnNetwork& network() const { return net_; }
    SelectionPolicy policy() const { return policy_; }

    /// Posterior predictive argmax for every pool question; answered
    /// questions collapse to their observed value. Ties go to correct.
    PredictionVector predict_answers(const EvidenceVector& evidence) const {
        check_evidence(evidence);
        PredictionVector out(pool_.size());
        if (engine_) {
            double total = 0.0;
            const auto w = posterior_weights(evidence, total);
            for (std::size_t i = 0; i < pool_.size(); ++i) {
                if (evidence[i].has_value()) {
                    out[i] = *evidence[i];
                    continue;
                }
                double p1 = 0.0;
                const auto slot = pool_slot_[i];
                for (std::size_t c = 0; c < w.size(); ++c) {
                    p1 += w[c] * engine_->question_prob(slot, c, 1);
                }
                p1 /= total;
                out[i] = p1 >= 0.5 ? AnswerValue::correct : AnswerValue::incorrect;
            }
            return out;
        }
        const auto node_evidence = to_node_evidence(evidence);
        for (std::size_t i = 0; i < pool_.size(); ++i) {
            if (evidence[i].has_value()) {
                out[i] = *evidence[i];
                continue;
            }
            const auto dist = ve_query(net_, node_evidence, {pool_node_[i]}).values;
            out[i] = dist[1] >= dist[0] ? AnswerValue::correct : AnswerValue::incorrect;
        }
        return out;
    }

    /// argmin over candidates of sum_x P(X=x|e) * sum_skills H(S|e, X=x),
    /// entropies in nats; ties to the lowest question id.
    QuestionId select_question_entropy(const EvidenceVector& evidence,
                                       std::span<const QuestionId> available) const {
        check_evidence(evidence);
        require(!available.empty(), ErrorKind::selection, "no available questions");
        for (QuestionId q : available) {
            require(q.index < pool_.size() && !evidence[q.index].has_value(),
                    ErrorKind::selection, "candidate already answered");
        }
        QuestionId best = available.front();
        double best_value = std::numeric_limits<double>::infinity();

        if (engine_) {
            double total = 0.0;
            const auto w = posterior_weights(evidence, total);
            const std::size_t ns = engine_->skills().size();
            std::vector<std::vector<double>> marg(ns);
            for (QuestionId q : available) {
                const auto slot = pool_slot_[q.index];
                double expected = 0.0;
                for (int x = 0; x < 2; ++x) {
                    for (std::size_t j = 0; j < ns; ++j) {
                        marg[j].assign(engine_->skill_cards()[j], 0.0);
                    }
                    double mass = 0.0;
                    for (std::size_t c = 0; c < w.size(); ++c) {
                        const double v = w[c] * engine_->question_prob(slot, c, x);
                        if (v == 0.0) continue;
                        mass += v;
                        for (std::size_t j = 0; j < ns; ++j) {
                            marg[j][engine_->digit(c, j)] += v;
                        }
                    }
                    if (mass <= 0.0) continue;
                    double h = 0.0;
                    for (std::size_t j = 0; j < ns; ++j) {
                        for (double& v : marg[j]) v /= mass;
                        h += entropy_nats(marg[j]);
                    }
                    expected += mass / total * h;
                }
                if (expected < best_value || (expected == best_value && q < best)) {
                    best_value = expected;
                    best = q;
                }
            }
            return best;
        }

        const auto node_evidence = to_node_evidence(evidence);
        const auto skill_nodes = net_.structure.skill_nodes();
        for (QuestionId q : available) {
            const int qnode = pool_node_[q.index];
            const auto answer_dist = ve_query(net_, node_evidence, {qnode}).values;
            double expected = 0.0;
            for (int x = 0; x < 2; ++x) {
                if (answer_dist[x] <= 0.0) continue;
                auto hypo = node_evidence;
                hypo[qnode] = x;
                double h = 0.0;
                for (int sk : skill_nodes) {
                    h += entropy_nats(ve_query(net_, hypo, {sk}).values);
                }
                expected += answer_dist[x] * h;
            }
            if (expected < best_value || (expected == best_value && q < best)) {
                best_value = expected;
                best = q;
            }
        }
        return best;
    }

    SkillEstimate skill_estimate(const EvidenceVector& evidence) const {
        check_evidence(evidence);
        SkillEstimate est;
        if (engine_) {
            double total = 0.0;
            const auto w = posterior_weights(evidence, total);
            const auto margins = engine_->skill_marginals(w, total);
            for (std::size_t j = 0; j < margins.size(); ++j) {
                est.marginals.push_back(
                    SkillMarginal{net_.structure.nodes[engine_->skills()[j]].name, margins[j]});
            }
            return est;
        }
        const auto node_evidence = to_node_evidence(evidence);
        for (int sk : net_.structure.skill_nodes()) {
            est.marginals.push_back(SkillMarginal{net_.structure.nodes[sk].name,
                                                  ve_query(net_, node_evidence, {sk}).values});
        }
        return est;
    }

private:
    void check_evidence(const EvidenceVector& evidence) const {
        require(evidence.size() == pool_.size(), ErrorKind::pool_mismatch,
                "evidence vector does not match the question pool");
    }

    std::map<int, int> to_node_evidence(const EvidenceVector& evidence) const {
        std::map<int, int> out;
        for (std::size_t i = 0; i < evidence.size(); ++i) {
            if (evidence[i].has_value()) {
                out[pool_node_[i]] = is_correct(*evidence[i]) ? 1 : 0;
            }
        }
        return out;
    }

    std::vector<double> posterior_weights(const EvidenceVector& evidence, double& total) const {
        std::vector<double> w = engine_->prior();
        for (std::size_t i = 0; i < evidence.size(); ++i) {
            if (evidence[i].has_value()) {
                engine_->weight_evidence(w, pool_slot_[i], is_correct(*evidence[i]) ? 1 : 0);
            }
        }
        total = 0.0;
        for (double v : w) total += v;
        require(total > 0.0, ErrorKind::impossible_evidence,
                "evidence has probability zero under the model");
        return w;
    }

    BnNetwork net_;
    std::vector<std::string> pool_;
    std::vector<int> pool_node_;
    std::vector<std::size_t> pool_slot_;
    SelectionPolicy policy_;
    std::optional<SkillJointEngine> engine_;
};

class BnSession final : public AdaptiveSession {
public:
    BnSession(const BnModel& model, std::uint64_t seed)
        : AdaptiveSession(model.pool_size()), model_(&model), rng_(seed) {}

    QuestionId select_next() const override {
        const auto avail = unanswered();
        require(!avail.empty(), ErrorKind::selection, "no available questions");
        if (model_->policy() == SelectionPolicy::random) {
            return avail[static_cast<std::size_t>(rng_.below(avail.size()))];
        }
        return model_->select_question_entropy(evidence(), avail);
    }

    PredictionVector predict_all() const override { return model_->predict_answers(evidence()); }
    SkillEstimate skills() const override { return model_->skill_estimate(evidence()); }

protected:
    void on_absorb(QuestionId, AnswerValue) override {}

private:
    const BnModel* model_;
    mutable Rng rng_;
};

inline std::unique_ptr<AdaptiveSession> BnModel::make_session(std::uint64_t session_seed) const {
    return std::make_unique<BnSession>(*this, session_seed);
}

} // namespace catsim::bn
