#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "restq/rng.hpp"
#include "restq/spec_model.hpp"
#include "restq/status.hpp"

namespace restq {

struct RlConfig {
    double alpha = 0.1;
    double gamma = 0.9;
    double epsilon = 0.1;
    double reward_success = -1.0; // 2xx lowers priority: the operation is solved
    double reward_failure = 1.0;  // 4xx/5xx raises it: more to learn here
    int failure_streak_threshold = 3;
    double p_min = 0.3; // floor on optional-parameter inclusion probability
};

struct QState {
    std::map<std::string, double> op_q;
    std::map<std::string, std::map<std::string, double>> param_q; // op -> param -> Q
    std::map<std::string, int> visits;
    std::map<std::string, int> failure_streak;
};

QState init_qstate(const ApiModel& model);

// ε-greedy over op_q; exploitation breaks ties toward the smaller id.
// Throws EmptyModel.
std::string select_operation(const QState& q, const RlConfig& config, Rng& rng);

// Required parameters always; optionals independently, each with probability
// derived from a softmax over the operation's param_q mapped into
// [p_min, max(0.95, p_min)] (all-equal Q collapses to the floor).
std::set<std::string> select_parameters(const QState& q, const Operation& op,
                                        const RlConfig& config, Rng& rng);

// Per-parameter inclusion probabilities, exposed for tests and diagnostics.
std::map<std::string, double> inclusion_probabilities(const QState& q, const Operation& op,
                                                      const RlConfig& config);

// Q(s,a) += α·(r + γ·maxQ − Q(s,a)) with maxQ read from op_q before the
// update, applied to the operation entry and every chosen parameter entry.
// Throws UnknownOperation.
void update_q(QState& q, const std::string& op_id, const std::set<std::string>& chosen_params,
              StatusClass outcome, const RlConfig& config);

} // namespace restq
