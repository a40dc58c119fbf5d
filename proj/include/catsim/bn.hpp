#pragma once

// Discrete Bayesian-network student models: network structure, table and
// noisy-OR conditional distributions, the five-model catalog, and ancestral
// sampling. Inference lives in bn_infer.hpp, learning in bn_em.hpp.

#include "catsim/core.hpp"
#include "catsim/rng.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace catsim::bn {

enum class NodeKind { skill, question };

struct BnNode {
    std::string name;
    NodeKind kind = NodeKind::skill;
    int state_count = 2;  // questions are always Boolean
};

// Parent configurations index CPT rows in mixed radix over the node's
// parents sorted by node index, last parent varying fastest.

struct BnStructure {
    std::vector<BnNode> nodes;
    std::vector<std::pair<int, int>> edges;  // parent -> child

    int node_index(std::string_view name) const {
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i].name == name) return static_cast<int>(i);
        }
        return -1;
    }

    std::vector<int> parents(int node) const {
        std::vector<int> out;
        for (const auto& [p, c] : edges) {
            if (c == node) out.push_back(p);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    std::vector<int> children(int node) const {
        std::vector<int> out;
        for (const auto& [p, c] : edges) {
            if (p == node) out.push_back(c);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Kahn's algorithm; throws on a cycle.
    std::vector<int> topological_order() const {
        const int n = static_cast<int>(nodes.size());
        std::vector<int> indegree(n, 0);
        for (const auto& [p, c] : edges) {
            (void)p;
            ++indegree[c];
        }
        std::vector<int> order;
        std::vector<int> frontier;
        for (int i = 0; i < n; ++i) {
            if (indegree[i] == 0) frontier.push_back(i);
        }
        while (!frontier.empty()) {
            // smallest-index first keeps the order deterministic
            auto it = std::min_element(frontier.begin(), frontier.end());
            const int v = *it;
            frontier.erase(it);
            order.push_back(v);
            for (const auto& [p, c] : edges) {
                if (p == v && --indegree[c] == 0) frontier.push_back(c);
            }
        }
        require(order.size() == nodes.size(), ErrorKind::shape, "network graph has a cycle");
        return order;
    }

    void validate() const {
        require(!nodes.empty(), ErrorKind::shape, "network has no nodes");
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto& node = nodes[i];
            require(node.state_count >= 2, ErrorKind::shape,
                    "node '" + node.name + "' needs at least 2 states");
            require(node.kind != NodeKind::question || node.state_count == 2,
                    ErrorKind::shape, "question node '" + node.name + "' must be Boolean");
            for (std::size_t j = i + 1; j < nodes.size(); ++j) {
                require(nodes[j].name != node.name, ErrorKind::duplicate,
                        "duplicate node name '" + node.name + "'");
            }
        }
        const int n = static_cast<int>(nodes.size());
        for (const auto& [p, c] : edges) {
            require(p >= 0 && p < n && c >= 0 && c < n && p != c, ErrorKind::shape,
                    "edge references an invalid node");
            require(nodes[p].kind == NodeKind::skill, ErrorKind::shape,
                    "question node '" + nodes[p].name + "' cannot have children");
        }
        (void)topological_order();
    }

    std::vector<int> question_nodes() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i].kind == NodeKind::question) out.push_back(static_cast<int>(i));
        }
        return out;
    }

    std::vector<int> skill_nodes() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i].kind == NodeKind::skill) out.push_back(static_cast<int>(i));
        }
        return out;
    }
};

// ─── Mixed-radix helpers ─────────────────────────────────────────

inline std::size_t config_count(std::span<const int> cards) {
    std::size_t n = 1;
    for (int c : cards) n *= static_cast<std::size_t>(c);
    return n;
}

inline void decode_config(std::size_t index, std::span<const int> cards, std::span<int> digits) {
    for (std::size_t j = cards.size(); j-- > 0;) {
        digits[j] = static_cast<int>(index % static_cast<std::size_t>(cards[j]));
        index /= static_cast<std::size_t>(cards[j]);
    }
}

inline std::size_t encode_config(std::span<const int> digits, std::span<const int> cards) {
    std::size_t index = 0;
    for (std::size_t j = 0; j < cards.size(); ++j) {
        index = index * static_cast<std::size_t>(cards[j]) + static_cast<std::size_t>(digits[j]);
    }
    return index;
}

// ─── Conditional distributions ───────────────────────────────────

/// Full conditional probability table: rows[parent_config][child_state].
struct CptTable {
    std::vector<std::vector<double>> rows;
};

/// Canonical noisy-OR for a Boolean child of Boolean parents.
/// q[i] is the chance parent i activates the child when on.
struct NoisyOr {
    std::vector<double> q;
    double leak = 0.0;
};

using ConditionalDistribution = std::variant<CptTable, NoisyOr>;

/// P(child = 1 | parent states) under the noisy-OR law:
/// 1 - (1 - leak) * prod over active parents of (1 - q_i).
inline double noisy_or_probability(const NoisyOr& params, std::span<const int> parent_states) {
    require(parent_states.size() == params.q.size(), ErrorKind::shape,
            "parent state vector length does not match the parameter count");
    double off = 1.0 - params.leak;
    for (std::size_t i = 0; i < params.q.size(); ++i) {
        if (parent_states[i] != 0) off *= 1.0 - params.q[i];
    }
    return 1.0 - off;
}

inline constexpr std::size_t kNoisyOrExpandLimit = 20;

/// Expand to the full 2^n-row table (row-wise equal to the formula).
inline CptTable expand_noisy_or(const NoisyOr& params, std::size_t n_parents) {
    require(params.q.size() == n_parents, ErrorKind::shape,
            "parameter count does not match the parent count");
    require(n_parents <= kNoisyOrExpandLimit, ErrorKind::size,
            "refusing to expand a noisy-OR over " + std::to_string(n_parents) + " parents");
    const std::vector<int> cards(n_parents, 2);
    const std::size_t n_rows = config_count(cards);
    CptTable table;
    table.rows.resize(n_rows);
    std::vector<int> digits(n_parents);
    for (std::size_t r = 0; r < n_rows; ++r) {
        decode_config(r, cards, digits);
        const double p1 = noisy_or_probability(params, digits);
        table.rows[r] = {1.0 - p1, p1};
    }
    return table;
}

/// The specification-size arithmetic behind local structure: a noisy-OR
/// needs 2n numbers (2(n+1) with a leak pair) against 2^n table rows.
struct NoisyOrParamReport {
    std::size_t parents = 0;
    std::size_t noisy_or_params = 0;       // 2n
    std::size_t noisy_or_params_leak = 0;  // 2(n+1)
    std::size_t table_rows = 0;            // 2^n
};

inline NoisyOrParamReport noisy_or_param_report(std::size_t n_parents) {
    NoisyOrParamReport r;
    r.parents = n_parents;
    r.noisy_or_params = 2 * n_parents;
    r.noisy_or_params_leak = 2 * (n_parents + 1);
    r.table_rows = std::size_t{1} << n_parents;
    return r;
}

// ─── Network ─────────────────────────────────────────────────────

struct BnNetwork {
    BnStructure structure;
    std::vector<ConditionalDistribution> cpds;  // aligned with structure.nodes

    void validate() const {
        structure.validate();
        require(cpds.size() == structure.nodes.size(), ErrorKind::shape,
                "one conditional distribution required per node");
        for (std::size_t i = 0; i < cpds.size(); ++i) {
            const auto& node = structure.nodes[i];
            const auto parents = structure.parents(static_cast<int>(i));
            std::vector<int> cards;
            for (int p : parents) cards.push_back(structure.nodes[p].state_count);
            if (const auto* table = std::get_if<CptTable>(&cpds[i])) {
                require(table->rows.size() == config_count(cards), ErrorKind::shape,
                        "node '" + node.name + "' table has the wrong row count");
                for (const auto& row : table->rows) {
                    require(row.size() == static_cast<std::size_t>(node.state_count),
                            ErrorKind::shape, "node '" + node.name + "' row width mismatch");
                    double sum = 0.0;
                    for (double v : row) {
                        require(v >= 0.0 && v <= 1.0 + 1e-12, ErrorKind::shape,
                                "node '" + node.name + "' has an out-of-range probability");
                        sum += v;
                    }
                    require(std::abs(sum - 1.0) <= 1e-9, ErrorKind::shape,
                            "node '" + node.name + "' has a row not summing to 1");
                }
            } else {
                const auto& no = std::get<NoisyOr>(cpds[i]);
                require(node.state_count == 2, ErrorKind::shape,
                        "noisy-OR child '" + node.name + "' must be Boolean");
                require(no.q.size() == parents.size(), ErrorKind::shape,
                        "noisy-OR '" + node.name + "' parameter count mismatch");
                for (int p : parents) {
                    require(structure.nodes[p].state_count == 2, ErrorKind::shape,
                            "noisy-OR '" + node.name + "' requires Boolean parents");
                }
                for (double v : no.q) {
                    require(v >= 0.0 && v <= 1.0, ErrorKind::shape,
                            "noisy-OR '" + node.name + "' parameter outside [0,1]");
                }
                require(no.leak >= 0.0 && no.leak <= 1.0, ErrorKind::shape,
                        "noisy-OR '" + node.name + "' leak outside [0,1]");
            }
        }
    }
};

/// P(node = state | parent states), parents in sorted-index order.
inline double cpd_probability(const BnNetwork& net, int node, std::span<const int> parent_states,
                              int state) {
    const auto parents = net.structure.parents(node);
    std::vector<int> cards;
    cards.reserve(parents.size());
    for (int p : parents) cards.push_back(net.structure.nodes[p].state_count);
    if (const auto* table = std::get_if<CptTable>(&net.cpds[node])) {
        return table->rows[encode_config(parent_states, cards)][state];
    }
    const double p1 = noisy_or_probability(std::get<NoisyOr>(net.cpds[node]), parent_states);
    return state == 1 ? p1 : 1.0 - p1;
}

/// Statistical free-parameter count: tables contribute
/// prod(parent cards) * (states - 1), a noisy-OR contributes n (+1 with leak).
inline std::size_t free_parameter_count(const BnNetwork& net) {
    std::size_t total = 0;
    for (std::size_t i = 0; i < net.cpds.size(); ++i) {
        const auto parents = net.structure.parents(static_cast<int>(i));
        if (std::holds_alternative<CptTable>(net.cpds[i])) {
            std::size_t rows = 1;
            for (int p : parents) rows *= static_cast<std::size_t>(net.structure.nodes[p].state_count);
            total += rows * static_cast<std::size_t>(net.structure.nodes[i].state_count - 1);
        } else {
            const auto& no = std::get<NoisyOr>(net.cpds[i]);
            total += no.q.size() + (no.leak > 0.0 ? 1 : 0);
        }
    }
    return total;
}

// ─── Model catalog ───────────────────────────────────────────────

enum class CatalogName { simple_3s, simple_4s, simple_9s, expert_old, expert_new };

inline CatalogName catalog_from_string(std::string_view s) {
    if (s == "simple_3s") return CatalogName::simple_3s;
    if (s == "simple_4s") return CatalogName::simple_4s;
    if (s == "simple_9s") return CatalogName::simple_9s;
    if (s == "expert_old") return CatalogName::expert_old;
    if (s == "expert_new") return CatalogName::expert_new;
    fail(ErrorKind::config, "unknown catalog model '" + std::string(s) + "'");
}

inline std::string catalog_to_string(CatalogName name) {
    switch (name) {
        case CatalogName::simple_3s: return "simple_3s";
        case CatalogName::simple_4s: return "simple_4s";
        case CatalogName::simple_9s: return "simple_9s";
        case CatalogName::expert_old: return "expert_old";
        case CatalogName::expert_new: return "expert_new";
    }
    return "?";
}

/// skill name -> question names it parents (expert models only)
using SkillMap = std::map<std::string, std::vector<std::string>>;

namespace detail {

inline void add_questions(BnStructure& s, const std::vector<std::string>& pool) {
    for (const auto& name : pool) {
        s.nodes.push_back(BnNode{name, NodeKind::question, 2});
    }
}

inline BnStructure expert_structure(const std::vector<std::string>& pool, const SkillMap& map,
                                    int skill_states, bool overall_node) {
    require(map.size() == 7, ErrorKind::coverage,
            "expert models require exactly 7 skills, got " + std::to_string(map.size()));
    BnStructure s;
    if (overall_node) s.nodes.push_back(BnNode{"overall", NodeKind::skill, skill_states});
    for (const auto& [skill, _] : map) {
        s.nodes.push_back(BnNode{skill, NodeKind::skill, skill_states});
        if (overall_node) {
            s.edges.emplace_back(0, static_cast<int>(s.nodes.size()) - 1);
        }
    }
    const int first_question = static_cast<int>(s.nodes.size());
    add_questions(s, pool);

    std::vector<bool> covered(pool.size(), false);
    for (const auto& [skill, questions] : map) {
        const int skill_idx = s.node_index(skill);
        for (const auto& qname : questions) {
            const int q_idx = s.node_index(qname);
            require(q_idx >= first_question, ErrorKind::coverage,
                    "skill map names unknown question '" + qname + "'");
            covered[static_cast<std::size_t>(q_idx - first_question)] = true;
            s.edges.emplace_back(skill_idx, q_idx);
        }
    }
    for (std::size_t i = 0; i < pool.size(); ++i) {
        require(covered[i], ErrorKind::coverage,
                "skill map leaves question '" + pool[i] + "' unparented");
    }
    return s;
}

} // namespace detail

/// Structures of the model catalog: simple_Ns is one N-state skill
/// parenting every question; expert_old is 7 Boolean skills over their
/// mapped questions; expert_new upgrades the skills to 3 states and adds
/// an overall skill parenting the other seven.
inline BnStructure build_catalog(CatalogName name, const std::vector<std::string>& pool,
                                 const SkillMap& skill_map = {}) {
    require(!pool.empty(), ErrorKind::empty_input, "empty question pool");
    switch (name) {
        case CatalogName::simple_3s:
        case CatalogName::simple_4s:
        case CatalogName::simple_9s: {
            const int states = name == CatalogName::simple_3s   ? 3
                               : name == CatalogName::simple_4s ? 4
                                                                : 9;
            BnStructure s;
            s.nodes.push_back(BnNode{"skill", NodeKind::skill, states});
            detail::add_questions(s, pool);
            for (std::size_t i = 0; i < pool.size(); ++i) {
                s.edges.emplace_back(0, static_cast<int>(i) + 1);
            }
            return s;
        }
        case CatalogName::expert_old:
            return detail::expert_structure(pool, skill_map, 2, false);
        case CatalogName::expert_new:
            return detail::expert_structure(pool, skill_map, 3, true);
    }
    fail(ErrorKind::config, "unreachable catalog name");
}

// ─── Ancestral sampling ──────────────────────────────────────────

/// Draw complete response records from the network; question nodes become
/// the dataset pool in node order. Deterministic given the seed.
inline ResponseDataset sample_dataset(const BnNetwork& net, std::size_t n_students,
                                      std::uint64_t seed) {
    net.validate();
    require(n_students >= 1, ErrorKind::spec, "student count must be at least 1");
    const auto questions = net.structure.question_nodes();
    require(!questions.empty(), ErrorKind::spec, "network has no question nodes");

    const auto order = net.structure.topological_order();
    Rng rng(seed);

    ResponseDataset out;
    for (int q : questions) out.question_names.push_back(net.structure.nodes[q].name);

    std::vector<int> state(net.structure.nodes.size());
    std::vector<int> parent_states;
    for (std::size_t t = 0; t < n_students; ++t) {
        for (int node : order) {
            const auto parents = net.structure.parents(node);
            parent_states.clear();
            for (int p : parents) parent_states.push_back(state[p]);
            const double u = rng.uniform01();
            double cdf = 0.0;
            int drawn = net.structure.nodes[node].state_count - 1;
            for (int s = 0; s < net.structure.nodes[node].state_count; ++s) {
                cdf += cpd_probability(net, node, parent_states, s);
                if (u < cdf) {
                    drawn = s;
                    break;
                }
            }
            state[node] = drawn;
        }
        StudentRecord rec;
        rec.student_id = "s" + std::to_string(t + 1);
        for (int q : questions) {
            rec.answers.push_back(state[q] == 1 ? AnswerValue::correct : AnswerValue::incorrect);
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

} // namespace catsim::bn
