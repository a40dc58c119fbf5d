#pragma once

// Response-data ingestion (CSV with an id column and 0/1 cells),
// deterministic k-fold splitting, and synthetic dataset generation from
// either a 2PL item bank or a Bayesian network.

#include "catsim/bn.hpp"
#include "catsim/core.hpp"
#include "catsim/irt.hpp"
#include "catsim/rng.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace catsim::dataio {

// ─── Response CSV ────────────────────────────────────────────────

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

} // namespace detail

/// Parse `id,<qid>,...` + 0/1 body rows into a dataset.
inline ResponseDataset load_responses(std::istream& in) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::parse, "missing header row");
    const auto header = detail::split_csv_line(detail::strip_cr(line));
    require(header.size() >= 2, ErrorKind::parse, "header must name at least one question");

    ResponseDataset data;
    data.question_names.assign(header.begin() + 1, header.end());
    std::set<std::string> seen_questions(data.question_names.begin(), data.question_names.end());
    require(seen_questions.size() == data.question_names.size(), ErrorKind::duplicate,
            "duplicate question column in header");

    std::set<std::string> seen_ids;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        require(cells.size() == header.size(), ErrorKind::shape,
                "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                    " cells, expected " + std::to_string(header.size()));
        StudentRecord rec;
        rec.student_id = cells[0];
        require(seen_ids.insert(rec.student_id).second, ErrorKind::duplicate,
                "duplicate student id '" + rec.student_id + "' at row " + std::to_string(row));
        for (std::size_t c = 1; c < cells.size(); ++c) {
            if (cells[c] == "1") {
                rec.answers.push_back(AnswerValue::correct);
            } else if (cells[c] == "0") {
                rec.answers.push_back(AnswerValue::incorrect);
            } else {
                fail(ErrorKind::parse, "non-binary cell '" + cells[c] + "' at row " +
                                           std::to_string(row) + ", column '" +
                                           data.question_names[c - 1] + "'");
            }
        }
        data.records.push_back(std::move(rec));
    }
    require(!data.records.empty(), ErrorKind::empty_input, "CSV has no data rows");
    return data;
}

inline ResponseDataset load_responses_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open '" + path + "'");
    return load_responses(in);
}

inline void save_responses(const ResponseDataset& data, std::ostream& out) {
    data.validate();
    out << "id";
    for (const auto& q : data.question_names) out << ',' << q;
    out << '\n';
    for (const auto& rec : data.records) {
        out << rec.student_id;
        for (AnswerValue a : rec.answers) out << ',' << (is_correct(a) ? '1' : '0');
        out << '\n';
    }
}

inline void save_responses_file(const ResponseDataset& data, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot open '" + path + "' for writing");
    save_responses(data, out);
    require(out.good(), ErrorKind::io, "write to '" + path + "' failed");
}

// ─── Cross-validation folds ──────────────────────────────────────

struct FoldPlan {
    int k = 10;
    std::vector<int> assignments;  // record index -> fold

    std::vector<std::size_t> test_indices(int fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignments.size(); ++i) {
            if (assignments[i] == fold) out.push_back(i);
        }
        return out;
    }

    std::vector<std::size_t> train_indices(int fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignments.size(); ++i) {
            if (assignments[i] != fold) out.push_back(i);
        }
        return out;
    }
};

/// Seeded shuffle of record indices, then round-robin assignment; fold
/// sizes differ by at most one.
inline FoldPlan kfold_split(const ResponseDataset& data, int k, std::uint64_t seed) {
    data.validate();
    require(k >= 2, ErrorKind::infeasible_split, "k must be at least 2");
    require(static_cast<std::size_t>(k) <= data.records.size(), ErrorKind::infeasible_split,
            "k = " + std::to_string(k) + " exceeds the record count " +
                std::to_string(data.records.size()));
    std::vector<std::size_t> order(data.records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, "kfold"));
    rng.shuffle(order);

    FoldPlan plan;
    plan.k = k;
    plan.assignments.resize(data.records.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        plan.assignments[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
    }
    return plan;
}

inline ResponseDataset subset(const ResponseDataset& data, std::span<const std::size_t> rows) {
    ResponseDataset out;
    out.question_names = data.question_names;
    for (std::size_t r : rows) out.records.push_back(data.records[r]);
    return out;
}

// ─── Synthetic data ──────────────────────────────────────────────

struct ThetaDistribution {
    double mean = 0.0;
    double sd = 1.0;  // 0 means a point mass at `mean`
};

struct SyntheticSpec {
    enum class Kind { irt_2pl, bayes_net };
    Kind kind = Kind::irt_2pl;
    std::size_t students = 280;
    std::uint64_t seed = 0;

    // irt-2pl: explicit items, or `questions` items drawn from the ranges
    std::size_t questions = 20;
    std::vector<irt::IrtItem> items;
    std::pair<double, double> a_range{0.8, 2.0};
    std::pair<double, double> b_range{-2.0, 2.0};
    ThetaDistribution theta;

    // bayes-net: sampled ancestrally; the pool comes from question nodes
    std::optional<bn::BnNetwork> network;
};

/// Deterministic synthetic response data. For irt-2pl, each student
/// draws an ability and answers item i correctly with probability
/// irf(item_i, theta). For bayes-net, ancestral sampling of the network.
inline ResponseDataset generate_synthetic(const SyntheticSpec& spec) {
    require(spec.students >= 1, ErrorKind::spec, "student count must be at least 1");
    if (spec.kind == SyntheticSpec::Kind::bayes_net) {
        require(spec.network.has_value(), ErrorKind::spec, "bayes-net spec needs a network");
        return bn::sample_dataset(*spec.network, spec.students, derive_seed(spec.seed, "synth-bn"));
    }

    std::vector<irt::IrtItem> items = spec.items;
    if (items.empty()) {
        require(spec.questions >= 1, ErrorKind::spec, "question count must be at least 1");
        require(spec.a_range.first > 0.0 && spec.a_range.second >= spec.a_range.first,
                ErrorKind::spec, "invalid discrimination range");
        require(spec.b_range.second >= spec.b_range.first, ErrorKind::spec,
                "invalid difficulty range");
        Rng item_rng(derive_seed(spec.seed, "synth-items"));
        for (std::size_t i = 0; i < spec.questions; ++i) {
            items.push_back(irt::IrtItem{item_rng.uniform(spec.a_range.first, spec.a_range.second),
                                         item_rng.uniform(spec.b_range.first, spec.b_range.second)});
        }
    }
    for (const auto& item : items) {
        require(item.a > 0.0 && std::isfinite(item.a) && std::isfinite(item.b), ErrorKind::spec,
                "item discrimination must be positive and finite");
    }
    require(spec.theta.sd >= 0.0, ErrorKind::spec, "theta sd must be non-negative");

    ResponseDataset out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        out.question_names.push_back("Q" + std::to_string(i + 1));
    }
    Rng rng(derive_seed(spec.seed, "synth-irt"));
    for (std::size_t t = 0; t < spec.students; ++t) {
        const double theta = spec.theta.sd > 0.0
                                 ? rng.normal(spec.theta.mean, spec.theta.sd)
                                 : spec.theta.mean;
        StudentRecord rec;
        rec.student_id = "s" + std::to_string(t + 1);
        for (const auto& item : items) {
            rec.answers.push_back(rng.bernoulli(irt::irf(item, theta)) ? AnswerValue::correct
                                                                       : AnswerValue::incorrect);
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

} // namespace catsim::dataio
