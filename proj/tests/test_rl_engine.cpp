#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <string>

#include "restq/error.hpp"
#include "restq/rl_engine.hpp"
#include "restq/rng.hpp"
#include "restq/spec_model.hpp"

using namespace restq;

namespace {

// Straight-line transcription of the update formula, kept separate from the
// library so the two can disagree.
double oracle_update(double q, double alpha, double reward, double gamma, double max_q) {
    return q + alpha * (reward + gamma * max_q - q);
}

ApiModel toy_model() {
    ApiModel model;
    model.title = "toy";
    for (const std::string& id : {"opA", "opB", "opC"}) {
        Operation op;
        op.id = id;
        op.method = "GET";
        op.path = "/" + id;
        Parameter p1;
        p1.name = "p1";
        Parameter p2;
        p2.name = "p2";
        p2.required = true;
        Parameter p3;
        p3.name = "p3";
        op.parameters = {p1, p2, p3};
        model.operations.push_back(op);
    }
    return model;
}

} // namespace

TEST_CASE("fresh q-state starts flat") {
    QState q = init_qstate(toy_model());
    CHECK(q.op_q.size() == 3);
    for (const auto& [id, value] : q.op_q)
        CHECK(value == 0.0);
    CHECK(q.param_q.at("opA").size() == 3);
    CHECK(q.failure_streak.at("opB") == 0);
}

TEST_CASE("update matches the formula oracle on 10000 random tuples") {
    Rng rng(99);
    RlConfig config;
    for (int i = 0; i < 10000; ++i) {
        config.alpha = rng.uniform();
        config.gamma = rng.uniform();
        config.reward_success = -rng.uniform() * 5.0;
        config.reward_failure = rng.uniform() * 5.0;

        QState q;
        double qa = rng.uniform() * 20.0 - 10.0;
        double qb = rng.uniform() * 20.0 - 10.0;
        double qp = rng.uniform() * 20.0 - 10.0;
        q.op_q = {{"a", qa}, {"b", qb}};
        q.param_q["a"] = {{"x", qp}};

        bool success = rng.coin(0.5);
        double reward = success ? config.reward_success : config.reward_failure;
        double max_q = std::max(qa, qb);
        update_q(q, "a", {"x"}, success ? StatusClass::Success2xx : StatusClass::ClientError4xx,
                 config);

        CHECK(std::abs(q.op_q["a"] - oracle_update(qa, config.alpha, reward, config.gamma, max_q)) <
              1e-9);
        CHECK(std::abs(q.param_q["a"]["x"] -
                       oracle_update(qp, config.alpha, reward, config.gamma, max_q)) < 1e-9);
        CHECK(q.op_q["b"] == qb);
    }
}

TEST_CASE("max q is read before the operation entry moves") {
    RlConfig config;
    config.alpha = 1.0;
    config.gamma = 1.0;
    config.reward_failure = 2.0;
    QState q;
    q.op_q = {{"a", 5.0}, {"b", 1.0}};
    // maxQ = 5 (a itself): new Q(a) = 5 + 1*(2 + 5 - 5) = 7, not 2 + maxQ-after.
    update_q(q, "a", {}, StatusClass::ClientError4xx, config);
    CHECK(q.op_q["a"] == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("success lowers priority and resets the failure streak") {
    RlConfig config;
    QState q = init_qstate(toy_model());
    update_q(q, "opA", {"p1"}, StatusClass::ClientError4xx, config);
    update_q(q, "opA", {"p1"}, StatusClass::ServerError5xx, config);
    CHECK(q.failure_streak["opA"] == 2);
    CHECK(q.op_q["opA"] > 0.0);
    double before = q.op_q["opA"];
    update_q(q, "opA", {"p1"}, StatusClass::Success2xx, config);
    CHECK(q.failure_streak["opA"] == 0);
    CHECK(q.op_q["opA"] < before);
    CHECK(q.visits["opA"] == 3);
}

TEST_CASE("update on an unknown operation throws") {
    QState q = init_qstate(toy_model());
    CHECK_THROWS_AS(update_q(q, "nope", {}, StatusClass::Success2xx, RlConfig{}), UnknownOperation);
}

TEST_CASE("exploitation picks the argmax with lexicographic ties") {
    RlConfig config;
    config.epsilon = 0.0;
    QState q;
    q.op_q = {{"mid", 3.0}, {"apex", 7.0}, {"low", -2.0}};
    Rng rng(1);
    CHECK(select_operation(q, config, rng) == "apex");
    q.op_q["mid"] = 7.0;
    for (int i = 0; i < 20; ++i)
        CHECK(select_operation(q, config, rng) == "apex"); // tie: smaller id wins
}

TEST_CASE("empty model cannot be selected from") {
    QState q;
    Rng rng(1);
    CHECK_THROWS_AS(select_operation(q, RlConfig{}, rng), EmptyModel);
}

TEST_CASE("epsilon one explores roughly uniformly") {
    RlConfig config;
    config.epsilon = 1.0;
    QState q;
    q.op_q = {{"a", 100.0}, {"b", 0.0}, {"c", -100.0}};
    Rng rng(5);
    std::map<std::string, int> counts;
    for (int i = 0; i < 3000; ++i)
        ++counts[select_operation(q, config, rng)];
    for (const auto& [id, n] : counts)
        CHECK(n > 800); // each should sit near 1000
}

TEST_CASE("required parameters are always chosen") {
    ApiModel model = toy_model();
    QState q = init_qstate(model);
    RlConfig config;
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        auto chosen = select_parameters(q, model.operations[0], config, rng);
        CHECK(chosen.count("p2") == 1);
    }
}

TEST_CASE("flat q-values collapse every optional to the floor probability") {
    ApiModel model = toy_model();
    QState q = init_qstate(model);
    RlConfig config;
    config.p_min = 0.4;
    auto probs = inclusion_probabilities(q, model.operations[0], config);
    CHECK(probs.at("p1") == doctest::Approx(0.4));
    CHECK(probs.at("p3") == doctest::Approx(0.4));
    CHECK(probs.at("p2") == doctest::Approx(1.0)); // required
}

TEST_CASE("higher q maps to higher inclusion probability") {
    ApiModel model = toy_model();
    QState q = init_qstate(model);
    q.param_q["opA"]["p1"] = 2.0;
    q.param_q["opA"]["p3"] = -1.0;
    RlConfig config;
    auto probs = inclusion_probabilities(q, model.operations[0], config);
    CHECK(probs.at("p1") == doctest::Approx(0.95));
    CHECK(probs.at("p3") == doctest::Approx(config.p_min));
    CHECK(probs.at("p1") > probs.at("p3"));
}

TEST_CASE("p_min of one includes every parameter") {
    ApiModel model = toy_model();
    QState q = init_qstate(model);
    q.param_q["opA"]["p1"] = 5.0; // spread q so the rescale path runs
    RlConfig config;
    config.p_min = 1.0;
    auto probs = inclusion_probabilities(q, model.operations[0], config);
    for (const auto& [name, p] : probs)
        CHECK(p == doctest::Approx(1.0));
    Rng rng(11);
    auto chosen = select_parameters(q, model.operations[0], config, rng);
    CHECK(chosen.size() == 3);
}

TEST_CASE("empirical inclusion rate tracks the reported probability") {
    ApiModel model = toy_model();
    QState q = init_qstate(model);
    q.param_q["opA"]["p1"] = 1.0;
    RlConfig config;
    auto probs = inclusion_probabilities(q, model.operations[0], config);
    Rng rng(17);
    int hits_p1 = 0, hits_p3 = 0;
    const int rounds = 20000;
    for (int i = 0; i < rounds; ++i) {
        auto chosen = select_parameters(q, model.operations[0], config, rng);
        hits_p1 += chosen.count("p1");
        hits_p3 += chosen.count("p3");
    }
    CHECK(std::abs(hits_p1 / double(rounds) - probs.at("p1")) < 0.02);
    CHECK(std::abs(hits_p3 / double(rounds) - probs.at("p3")) < 0.02);
}
