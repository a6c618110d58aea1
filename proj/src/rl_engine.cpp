#include "restq/rl_engine.hpp"

#include <algorithm>
#include <cmath>

#include "restq/error.hpp"

namespace restq {

QState init_qstate(const ApiModel& model) {
    QState q;
    for (const auto& op : model.operations) {
        q.op_q[op.id] = 0.0;
        q.visits[op.id] = 0;
        q.failure_streak[op.id] = 0;
        auto& params = q.param_q[op.id];
        for (const auto& p : op.parameters)
            params[p.name] = 0.0;
    }
    return q;
}

std::string select_operation(const QState& q, const RlConfig& config, Rng& rng) {
    if (q.op_q.empty())
        throw EmptyModel("no operations to select from");
    if (rng.uniform() < config.epsilon) {
        std::size_t target = rng.index(q.op_q.size());
        auto it = q.op_q.begin();
        std::advance(it, static_cast<long>(target));
        return it->first;
    }
    auto best = q.op_q.begin();
    for (auto it = std::next(q.op_q.begin()); it != q.op_q.end(); ++it)
        if (it->second > best->second) // map order makes ties lexicographic
            best = it;
    return best->first;
}

std::map<std::string, double> inclusion_probabilities(const QState& q, const Operation& op,
                                                      const RlConfig& config) {
    std::map<std::string, double> probs;
    std::vector<const Parameter*> optionals;
    for (const auto& p : op.parameters) {
        if (p.required)
            probs[p.name] = 1.0;
        else
            optionals.push_back(&p);
    }
    if (optionals.empty())
        return probs;

    const double ceiling = std::max(0.95, config.p_min);
    auto qs_it = q.param_q.find(op.id);
    std::vector<double> weights;
    weights.reserve(optionals.size());
    double max_q = 0.0;
    bool first = true;
    for (const auto* p : optionals) {
        double value = 0.0;
        if (qs_it != q.param_q.end()) {
            auto it = qs_it->second.find(p->name);
            if (it != qs_it->second.end())
                value = it->second;
        }
        weights.push_back(value);
        if (first || value > max_q) {
            max_q = value;
            first = false;
        }
    }
    for (double& w : weights)
        w = std::exp(w - max_q); // softmax numerator; normalization cancels below
    double lo = weights[0], hi = weights[0];
    for (double w : weights) {
        lo = std::min(lo, w);
        hi = std::max(hi, w);
    }
    for (std::size_t i = 0; i < optionals.size(); ++i) {
        double p;
        if (hi - lo < 1e-12)
            p = config.p_min; // no signal yet: everyone sits at the floor
        else
            p = config.p_min + (weights[i] - lo) / (hi - lo) * (ceiling - config.p_min);
        probs[optionals[i]->name] = p;
    }
    return probs;
}

std::set<std::string> select_parameters(const QState& q, const Operation& op,
                                        const RlConfig& config, Rng& rng) {
    std::set<std::string> chosen;
    auto probs = inclusion_probabilities(q, op, config);
    for (const auto& p : op.parameters) {
        if (p.required) {
            chosen.insert(p.name);
            continue;
        }
        if (rng.coin(probs[p.name]))
            chosen.insert(p.name);
    }
    return chosen;
}

void update_q(QState& q, const std::string& op_id, const std::set<std::string>& chosen_params,
              StatusClass outcome, const RlConfig& config) {
    auto op_it = q.op_q.find(op_id);
    if (op_it == q.op_q.end())
        throw UnknownOperation("unknown operation: " + op_id);

    double reward = outcome == StatusClass::Success2xx ? config.reward_success
                                                       : config.reward_failure;
    double max_q = op_it->second;
    for (const auto& [id, value] : q.op_q)
        max_q = std::max(max_q, value);

    auto step = [&](double& value) {
        value += config.alpha * (reward + config.gamma * max_q - value);
    };
    step(op_it->second);
    auto& params = q.param_q[op_id];
    for (const auto& name : chosen_params) {
        auto it = params.find(name);
        if (it != params.end())
            step(it->second);
    }

    q.visits[op_id] += 1;
    if (outcome == StatusClass::Success2xx)
        q.failure_streak[op_id] = 0;
    else
        q.failure_streak[op_id] += 1;
}

} // namespace restq
