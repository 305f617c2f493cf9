#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rstar/forest.hpp"
#include "rstar/gbm.hpp"

namespace rstar {

enum class ClassifierKind { gbm, rf };

inline std::string to_string(ClassifierKind kind) { return kind == ClassifierKind::gbm ? "gbm" : "rf"; }

inline ClassifierKind classifier_kind_from_string(const std::string& s) {
    if (s == "gbm") return ClassifierKind::gbm;
    if (s == "rf") return ClassifierKind::rf;
    throw Error("unknown classifier \"" + s + "\" (expected gbm or rf)");
}

using ClassifierModel = std::variant<GbmModel, ForestModel>;

inline std::vector<double> predict_proba(const ClassifierModel& model, std::span<const double> x) {
    return std::visit([&](const auto& m) { return m.predict_proba(x); }, model);
}

/// Argmax of the predicted simplex, ties to the lowest class index. 0-based.
inline int predict_class(std::span<const double> proba) {
    int best = 0;
    for (int c = 1; c < static_cast<int>(proba.size()); ++c)
        if (proba[c] > proba[best]) best = c;
    return best;
}

inline int predict_class(const ClassifierModel& model, std::span<const double> x) {
    return predict_class(predict_proba(model, x));
}

// --- versioned JSON serialization (nodes as arrays) ---

namespace detail {

inline nlohmann::json tree_to_json(const DecisionTree& t) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& nd : t.nodes())
        nodes.push_back({nd.feature, nd.threshold, nd.left, nd.improvement, nd.value, nd.hist_begin, nd.hist_end});
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& h : t.leaf_hist()) hist.push_back({h.cls, h.count});
    return {{"nodes", std::move(nodes)}, {"hist", std::move(hist)}};
}

inline DecisionTree tree_from_json(const nlohmann::json& j) {
    DecisionTree t;
    for (const auto& row : j.at("nodes")) {
        TreeNode nd;
        nd.feature = row.at(0).get<std::int32_t>();
        nd.threshold = row.at(1).get<double>();
        nd.left = row.at(2).get<std::int32_t>();
        nd.improvement = row.at(3).get<double>();
        nd.value = row.at(4).get<double>();
        nd.hist_begin = row.at(5).get<std::uint32_t>();
        nd.hist_end = row.at(6).get<std::uint32_t>();
        t.mutable_nodes().push_back(nd);
    }
    for (const auto& row : j.at("hist"))
        t.mutable_leaf_hist().push_back({row.at(0).get<std::int32_t>(), row.at(1).get<std::uint32_t>()});
    return t;
}

}  // namespace detail

inline nlohmann::json model_to_json(const ClassifierModel& model) {
    nlohmann::json j;
    j["format_version"] = 1;
    if (const auto* gbm = std::get_if<GbmModel>(&model)) {
        j["kind"] = "gbm";
        j["n_classes"] = gbm->n_classes;
        j["n_features"] = gbm->n_features;
        j["shrinkage"] = gbm->shrinkage;
        j["n_rounds"] = gbm->n_rounds;
        j["bag_fraction"] = gbm->bag_fraction;
        j["seed"] = gbm->seed;
        j["init_scores"] = gbm->init_scores;
        auto rounds = nlohmann::json::array();
        for (const auto& round : gbm->rounds) {
            auto per_class = nlohmann::json::array();
            for (const auto& t : round) per_class.push_back(detail::tree_to_json(t));
            rounds.push_back(std::move(per_class));
        }
        j["rounds"] = std::move(rounds);
    } else {
        const auto& rf = std::get<ForestModel>(model);
        j["kind"] = "rf";
        j["n_classes"] = rf.n_classes;
        j["n_features"] = rf.n_features;
        j["n_tree"] = rf.n_tree;
        j["mtry"] = rf.mtry;
        j["seed"] = rf.seed;
        auto trees = nlohmann::json::array();
        for (const auto& t : rf.trees) trees.push_back(detail::tree_to_json(t));
        j["trees"] = std::move(trees);
    }
    return j;
}

inline ClassifierModel model_from_json(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != 1) throw Error("model_from_json: unsupported format version");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "gbm") {
        GbmModel m;
        m.n_classes = j.at("n_classes").get<int>();
        m.n_features = j.at("n_features").get<int>();
        m.shrinkage = j.at("shrinkage").get<double>();
        m.n_rounds = j.at("n_rounds").get<int>();
        m.bag_fraction = j.at("bag_fraction").get<double>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.init_scores = j.at("init_scores").get<std::vector<double>>();
        for (const auto& round : j.at("rounds")) {
            std::vector<DecisionTree> trees;
            for (const auto& t : round) trees.push_back(detail::tree_from_json(t));
            m.rounds.push_back(std::move(trees));
        }
        return m;
    }
    if (kind == "rf") {
        ForestModel m;
        m.n_classes = j.at("n_classes").get<int>();
        m.n_features = j.at("n_features").get<int>();
        m.n_tree = j.at("n_tree").get<int>();
        m.mtry = j.at("mtry").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& t : j.at("trees")) m.trees.push_back(detail::tree_from_json(t));
        return m;
    }
    throw Error("model_from_json: unknown kind \"" + kind + "\"");
}

}  // namespace rstar
