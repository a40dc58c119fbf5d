#pragma once

// Test-only oracles, kept independent of the library's inference and
// calibration paths: full-joint enumeration for BN posteriors, central
// finite differences for derivatives, dense-grid quadrature for EAP, and
// the explicit noise-variable construction behind noisy-OR.

#include "catsim/bn.hpp"
#include "catsim/irt.hpp"
#include "catsim/rng.hpp"

#include <cmath>
#include <map>
#include <vector>

namespace oracle {

using namespace catsim;

// P(node = state | parents) evaluated from the raw distribution objects;
// the noisy-OR law is restated here rather than calling the library.
inline double cpd_prob(const bn::BnNetwork& net, int node, const std::vector<int>& parent_states,
                       int state) {
    const auto parents = net.structure.parents(node);
    if (const auto* table = std::get_if<bn::CptTable>(&net.cpds[node])) {
        std::size_t row = 0;
        for (std::size_t j = 0; j < parents.size(); ++j) {
            row = row * static_cast<std::size_t>(net.structure.nodes[parents[j]].state_count) +
                  static_cast<std::size_t>(parent_states[j]);
        }
        return table->rows[row][static_cast<std::size_t>(state)];
    }
    const auto& no = std::get<bn::NoisyOr>(net.cpds[node]);
    double off = 1.0 - no.leak;
    for (std::size_t j = 0; j < parents.size(); ++j) {
        if (parent_states[j] != 0) off *= 1.0 - no.q[j];
    }
    const double p1 = 1.0 - off;
    return state == 1 ? p1 : 1.0 - p1;
}

/// Posterior marginals by enumerating every joint assignment.
inline std::map<int, std::vector<double>> brute_force_marginals(
    const bn::BnNetwork& net, const std::map<int, int>& evidence,
    const std::vector<int>& targets) {
    const std::size_t n = net.structure.nodes.size();
    std::vector<int> cards(n);
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) {
        cards[i] = net.structure.nodes[i].state_count;
        total *= static_cast<std::size_t>(cards[i]);
    }
    std::map<int, std::vector<double>> sums;
    for (int t : targets) sums[t].assign(cards[static_cast<std::size_t>(t)], 0.0);
    double mass = 0.0;

    std::vector<int> digits(n);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rest = idx;
        for (std::size_t j = n; j-- > 0;) {
            digits[j] = static_cast<int>(rest % static_cast<std::size_t>(cards[j]));
            rest /= static_cast<std::size_t>(cards[j]);
        }
        bool consistent = true;
        for (const auto& [v, s] : evidence) {
            if (digits[static_cast<std::size_t>(v)] != s) {
                consistent = false;
                break;
            }
        }
        if (!consistent) continue;
        double w = 1.0;
        for (std::size_t node = 0; node < n; ++node) {
            const auto parents = net.structure.parents(static_cast<int>(node));
            std::vector<int> ps;
            for (int p : parents) ps.push_back(digits[static_cast<std::size_t>(p)]);
            w *= cpd_prob(net, static_cast<int>(node), ps, digits[node]);
        }
        mass += w;
        for (int t : targets) sums[t][static_cast<std::size_t>(digits[static_cast<std::size_t>(t)])] += w;
    }
    for (auto& [t, dist] : sums) {
        for (double& v : dist) v /= mass;
    }
    return sums;
}

/// Item information from the derivative-based definition, with p'
/// taken by central finite differences of the IRF.
inline double finite_difference_information(const irt::IrtItem& item, double theta,
                                            double h = 1e-6) {
    const double p_plus = irt::irf(item, theta + h);
    const double p_minus = irt::irf(item, theta - h);
    const double deriv = (p_plus - p_minus) / (2.0 * h);
    const double p = irt::irf(item, theta);
    return deriv * deriv / (p * (1.0 - p));
}

/// EAP by dense trapezoid quadrature of the standard-normal posterior.
inline double dense_grid_eap(const std::vector<irt::IrtItem>& items,
                             const std::vector<int>& answers /* 1 correct, 0 incorrect */,
                             int grid = 200001, double lo = -8.0, double hi = 8.0) {
    double num = 0.0, den = 0.0;
    for (int k = 0; k < grid; ++k) {
        const double theta = lo + (hi - lo) * static_cast<double>(k) / (grid - 1);
        double w = std::exp(-0.5 * theta * theta);
        for (std::size_t i = 0; i < items.size(); ++i) {
            const double p = irt::irf(items[i], theta);
            w *= answers[i] == 1 ? p : 1.0 - p;
        }
        const double trap = (k == 0 || k == grid - 1) ? 0.5 : 1.0;
        num += trap * w * theta;
        den += trap * w;
    }
    return num / den;
}

/// Noisy-OR as an explicit network: each parent X_i feeds a noise node
/// Z_i (active with chance q_i when X_i is on), plus a root leak node,
/// and the child is a deterministic OR of the Z's.
inline bn::BnNetwork z_augmented_noisy_or(const bn::NoisyOr& params) {
    const std::size_t n = params.q.size();
    bn::BnNetwork net;
    // nodes: X_1..X_n, Z_1..Z_n, leak, Y
    for (std::size_t i = 0; i < n; ++i) {
        net.structure.nodes.push_back(bn::BnNode{"X" + std::to_string(i + 1), bn::NodeKind::skill, 2});
    }
    for (std::size_t i = 0; i < n; ++i) {
        net.structure.nodes.push_back(bn::BnNode{"Z" + std::to_string(i + 1), bn::NodeKind::skill, 2});
        net.structure.edges.emplace_back(static_cast<int>(i), static_cast<int>(n + i));
    }
    const int leak_node = static_cast<int>(2 * n);
    net.structure.nodes.push_back(bn::BnNode{"leak", bn::NodeKind::skill, 2});
    const int y_node = leak_node + 1;
    net.structure.nodes.push_back(bn::BnNode{"Y", bn::NodeKind::skill, 2});
    for (std::size_t i = 0; i < n; ++i) {
        net.structure.edges.emplace_back(static_cast<int>(n + i), y_node);
    }
    net.structure.edges.emplace_back(leak_node, y_node);

    for (std::size_t i = 0; i < n; ++i) {
        net.cpds.emplace_back(bn::CptTable{{{0.5, 0.5}}});  // X_i prior, arbitrary
    }
    for (std::size_t i = 0; i < n; ++i) {
        // rows over X_i = 0, 1
        net.cpds.emplace_back(bn::CptTable{{{1.0, 0.0}, {1.0 - params.q[i], params.q[i]}}});
    }
    net.cpds.emplace_back(bn::CptTable{{{1.0 - params.leak, params.leak}}});
    // Y = OR(Z_1..Z_n, leak), parents sorted by node index = Z's then leak
    bn::CptTable or_table;
    const std::size_t rows = std::size_t{1} << (n + 1);
    for (std::size_t r = 0; r < rows; ++r) {
        const bool any = r != 0;
        or_table.rows.push_back({any ? 0.0 : 1.0, any ? 1.0 : 0.0});
    }
    net.cpds.emplace_back(std::move(or_table));
    net.validate();
    return net;
}

/// Random network with joint size capped at `max_joint` (4096 = twelve
/// Boolean-equivalent nodes). Mixed cardinalities, random DAG edges,
/// strictly positive table entries, occasional noisy-OR where legal.
inline bn::BnNetwork random_network(Rng& rng, std::size_t max_joint = 4096) {
    bn::BnNetwork net;
    const std::size_t n = 3 + rng.below(6);  // 3..8 nodes
    std::size_t joint = 1;
    for (std::size_t i = 0; i < n; ++i) {
        int card = 2 + static_cast<int>(rng.below(3));  // 2..4 states
        while (joint * static_cast<std::size_t>(card) > max_joint && card > 2) --card;
        if (joint * static_cast<std::size_t>(card) > max_joint) card = 2;
        joint *= static_cast<std::size_t>(card);
        net.structure.nodes.push_back(
            bn::BnNode{"N" + std::to_string(i), bn::NodeKind::skill, card});
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (rng.uniform01() < 0.35) {
                net.structure.edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
            }
        }
    }
    for (std::size_t node = 0; node < n; ++node) {
        const auto parents = net.structure.parents(static_cast<int>(node));
        bool all_boolean = net.structure.nodes[node].state_count == 2;
        std::size_t rows = 1;
        for (int p : parents) {
            rows *= static_cast<std::size_t>(net.structure.nodes[p].state_count);
            all_boolean = all_boolean && net.structure.nodes[p].state_count == 2;
        }
        if (all_boolean && !parents.empty() && rng.uniform01() < 0.3) {
            bn::NoisyOr no;
            for (std::size_t j = 0; j < parents.size(); ++j) no.q.push_back(rng.uniform(0.1, 0.9));
            no.leak = rng.uniform(0.0, 0.2);
            net.cpds.emplace_back(std::move(no));
            continue;
        }
        bn::CptTable table;
        for (std::size_t r = 0; r < rows; ++r) {
            std::vector<double> row(net.structure.nodes[node].state_count);
            double sum = 0.0;
            for (double& v : row) {
                v = rng.uniform(0.05, 1.0);  // bounded away from zero
                sum += v;
            }
            for (double& v : row) v /= sum;
            table.rows.push_back(std::move(row));
        }
        net.cpds.emplace_back(std::move(table));
    }
    net.validate();
    return net;
}

/// Random evidence/target split: each node observed with chance 0.25,
/// at least one target kept.
inline std::pair<std::map<int, int>, std::vector<int>> random_query(Rng& rng,
                                                                    const bn::BnNetwork& net) {
    std::map<int, int> evidence;
    std::vector<int> targets;
    for (std::size_t i = 0; i < net.structure.nodes.size(); ++i) {
        if (rng.uniform01() < 0.25) {
            evidence[static_cast<int>(i)] = static_cast<int>(
                rng.below(static_cast<std::uint64_t>(net.structure.nodes[i].state_count)));
        } else {
            targets.push_back(static_cast<int>(i));
        }
    }
    if (targets.empty()) {
        targets.push_back(evidence.begin()->first);
        evidence.erase(evidence.begin());
    }
    return {evidence, targets};
}

} // namespace oracle
