#include "costdiag/policy.hpp"

#include <nlohmann/json.hpp>

namespace costdiag {

using nlohmann::json;

PolicyPtr make_leaf(const State& s, int diagnosis) {
    auto node = std::make_unique<PolicyNode>();
    node->state = s;
    node->action = Action::diagnose(diagnosis);
    node->fallback_diag = diagnosis;
    return node;
}

PolicyPtr make_measure(const State& s, int attr) {
    auto node = std::make_unique<PolicyNode>();
    node->state = s;
    node->action = Action::measure(attr);
    return node;
}

PolicyPtr clone_policy(const PolicyNode& root) {
    auto node = std::make_unique<PolicyNode>();
    node->state = root.state;
    node->action = root.action;
    node->branch_prob = root.branch_prob;
    node->value = root.value;
    node->support = root.support;
    node->fallback_diag = root.fallback_diag;
    for (const auto& [v, child] : root.children) node->children[v] = clone_policy(*child);
    return node;
}

long node_count(const PolicyNode& root) {
    long n = 1;
    for (const auto& [v, child] : root.children) n += node_count(*child);
    return n;
}

long internal_node_count(const PolicyNode& root) {
    if (root.is_leaf()) return 0;
    long n = 1;
    for (const auto& [v, child] : root.children) n += internal_node_count(*child);
    return n;
}

bool is_contraction_of(const PolicyNode& sub, const PolicyNode& full) {
    if (!(sub.state == full.state)) return false;
    if (sub.is_leaf()) return true;  // a leaf can replace any subtree
    if (full.is_leaf()) return false;
    if (!(sub.action == full.action)) return false;
    for (const auto& [v, child] : sub.children) {
        auto it = full.children.find(v);
        if (it == full.children.end()) return false;
        if (!is_contraction_of(*child, *it->second)) return false;
    }
    return sub.children.size() == full.children.size();
}

namespace {

double sweep(PolicyNode& node, const ProbEstimator& est, const CostModel& cost,
             const std::vector<int>& rows) {
    ClassCounts counts = est.class_counts(rows);
    node.support = counts.total;
    if (counts.total > 0 || est.mode() == Smoothing::Laplace)
        node.fallback_diag = best_diagnosis_from(counts, cost, est.mode()).first;
    if (node.is_leaf()) {
        node.value = diag_cost_from(counts, cost, node.action.index, est.mode());
        return node.value;
    }
    int attr = node.action.index;
    auto parts = est.partition(rows, attr);
    int arity = est.arity(attr);
    node.branch_prob.clear();
    double v = cost.measure_cost[attr];
    for (auto& [val, child] : node.children) {
        if (val < 0 || val >= arity) throw Error("policy child value out of arity range");
        double p = p_value_from(static_cast<long>(parts[val].size()), counts.total, arity,
                                est.mode());
        node.branch_prob[val] = p;
        v += p * sweep(*child, est, cost, parts[val]);
    }
    node.value = v;
    return v;
}

}  // namespace

double policy_value(PolicyNode& root, const ProbEstimator& est, const CostModel& cost) {
    std::vector<int> all(est.data().size());
    for (int i = 0; i < est.data().size(); ++i) all[i] = i;
    return sweep(root, est, cost, all);
}

Trace execute(const PolicyNode& root, const Example& ex, const CostModel& cost) {
    Trace tr;
    const PolicyNode* node = &root;
    while (!node->is_leaf()) {
        int attr = node->action.index;
        double c = cost.measure_cost[attr];
        int v = ex.values[attr];
        tr.steps.push_back({node->action, v, c});
        tr.total += c;
        auto it = node->children.find(v);
        if (it == node->children.end()) {
            // unseen outcome under an ML-grown tree: stop and diagnose with
            // the belief at this node
            int k = node->fallback_diag;
            double mc = cost.mc.at(k, ex.label);
            tr.steps.push_back({Action::diagnose(k), k, mc});
            tr.total += mc;
            tr.fallback = true;
            return tr;
        }
        node = it->second.get();
    }
    int k = node->action.index;
    double mc = cost.mc.at(k, ex.label);
    tr.steps.push_back({Action::diagnose(k), k, mc});
    tr.total += mc;
    return tr;
}

EvalResult evaluate(const PolicyNode& root, std::span<const Example> testset,
                    const CostModel& cost) {
    if (testset.empty()) throw Error("cannot evaluate on an empty test set");
    EvalResult res;
    res.per_example.resize(testset.size());
    for (size_t i = 0; i < testset.size(); ++i)
        res.per_example[i] = execute(root, testset[i], cost).total;
    double sum = 0;
    for (double c : res.per_example) sum += c;
    res.v_test = sum / static_cast<double>(testset.size());
    return res;
}

Action step(const PolicyNode& root, std::span<const std::pair<int, int>> answers) {
    const PolicyNode* node = &root;
    for (const auto& [attr, value] : answers) {
        if (node->is_leaf())
            throw Error("answer given for attribute " + std::to_string(attr) +
                        " but the policy has already diagnosed");
        if (node->action.index != attr)
            throw Error("the policy asks for attribute " + std::to_string(node->action.index) +
                        ", not " + std::to_string(attr));
        auto it = node->children.find(value);
        if (it == node->children.end()) return Action::diagnose(node->fallback_diag);
        node = it->second.get();
    }
    return node->action;
}

namespace {

json node_to_json(const PolicyNode& node) {
    json j;
    j["state"] = node.state.key();
    j["action"] = action_str(node.action);
    j["value"] = node.value;
    j["support"] = node.support;
    if (!node.is_leaf()) {
        j["fallback"] = node.fallback_diag;
        json children = json::object();
        for (const auto& [v, child] : node.children) {
            json c = node_to_json(*child);
            c["prob"] = node.branch_prob.count(v) ? node.branch_prob.at(v) : 0.0;
            children[std::to_string(v)] = std::move(c);
        }
        j["children"] = std::move(children);
    }
    return j;
}

State parse_state(const std::string& key) {
    State s;
    if (key.empty()) return s;
    size_t start = 0;
    while (start <= key.size()) {
        size_t end = key.find(',', start);
        if (end == std::string::npos) end = key.size();
        auto part = key.substr(start, end - start);
        size_t eq = part.find('=');
        if (eq == std::string::npos) throw ParseError("bad state key: '" + key + "'");
        s.observed.emplace_back(std::stoi(part.substr(0, eq)), std::stoi(part.substr(eq + 1)));
        start = end + 1;
        if (end == key.size()) break;
    }
    return s;
}

Action parse_action(const std::string& text) {
    if (text.rfind("diagnose:", 0) == 0) return Action::diagnose(std::stoi(text.substr(9)));
    if (text.rfind("measure:", 0) == 0) return Action::measure(std::stoi(text.substr(8)));
    throw ParseError("bad action: '" + text + "'");
}

PolicyPtr node_from_json(const json& j) {
    auto node = std::make_unique<PolicyNode>();
    try {
        node->state = parse_state(j.at("state").get<std::string>());
        node->action = parse_action(j.at("action").get<std::string>());
        node->value = j.at("value").get<double>();
        node->support = j.at("support").get<long>();
        if (node->is_leaf()) {
            node->fallback_diag = node->action.index;
        } else {
            node->fallback_diag = j.at("fallback").get<int>();
            for (const auto& [key, cj] : j.at("children").items()) {
                int v = std::stoi(key);
                node->branch_prob[v] = cj.at("prob").get<double>();
                node->children[v] = node_from_json(cj);
            }
            if (node->children.empty())
                throw ParseError("internal policy node without children");
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("policy document: ") + e.what());
    }
    return node;
}

}  // namespace

std::string serialize(const PolicyNode& root, const CostModel& cost, const Dataset& schema) {
    json j;
    j["format"] = "costdiag-policy-v1";
    j["cost_fingerprint"] = cost.fingerprint();
    json attrs = json::array();
    for (const auto& a : schema.attrs)
        attrs.push_back(json{{"name", a.name}, {"arity", a.arity}});
    j["attrs"] = std::move(attrs);
    j["classes"] = schema.class_names;
    j["root"] = node_to_json(root);
    return j.dump(1) + "\n";
}

PolicyFile deserialize(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("policy document: ") + e.what());
    }
    PolicyFile pf;
    try {
        if (j.at("format").get<std::string>() != "costdiag-policy-v1")
            throw ParseError("unknown policy format");
        pf.fingerprint = j.at("cost_fingerprint").get<std::string>();
        for (const auto& a : j.at("attrs")) {
            pf.attr_names.push_back(a.at("name").get<std::string>());
            pf.attr_arity.push_back(a.at("arity").get<int>());
        }
        pf.class_names = j.at("classes").get<std::vector<std::string>>();
        pf.root = node_from_json(j.at("root"));
    } catch (const json::exception& e) {
        throw ParseError(std::string("policy document: ") + e.what());
    }
    return pf;
}

}  // namespace costdiag
