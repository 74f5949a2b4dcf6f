#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <sstream>

#include "helpers.hpp"
#include "traceforge/datastore.hpp"
#include "traceforge/env.hpp"
#include "traceforge/synthesizer.hpp"

using namespace traceforge;
using tf_test::SequenceProvider;

namespace {

MockProvider fenced_mock() {
    ScriptedMockTable table;
    table.rules = {
        {"Please write a reasonable task instruction", "```a new task```"},
        {"Please summarize the trajectory", "```a step summary```"},
    };
    table.default_response = "REASON:\nr\nACTION:\nstop: fallback";
    return MockProvider(table);
}

std::string act(const std::string& action) {
    return "REASON:\nr\nACTION:\n" + action;
}

SimWorldSpec shop() { return load_world(std::string(TF_ASSETS_DIR) + "/worlds/shop.json"); }

RawTrajectory parent_of(int actions) {
    return RawTrajectory{"doc/t0", "doc", "original instruction", Termination::StopPredicted,
                         tf_test::make_trajectory(actions)};
}

}  // namespace

TEST_CASE("propose_instructions parses, dedups and caps") {
    Document doc{"d1", "u", "Some tutorial text.", "t"};

    SUBCASE("three starred tasks") {
        SequenceProvider provider({"* A\n* B\n* C"});
        auto instructions = propose_instructions(doc, 3, provider);
        CHECK(instructions == std::vector<std::string>{"A", "B", "C"});
    }
    SUBCASE("case-folded duplicates are removed") {
        SequenceProvider provider({"* Check orders\n* check ORDERS\n* Other"});
        auto instructions = propose_instructions(doc, 3, provider);
        CHECK(instructions == std::vector<std::string>{"Check orders", "Other"});
    }
    SUBCASE("a parse failure is retried once, then the doc is skipped with a log record") {
        SequenceProvider provider({"no stars", "still no stars", "* too late"});
        std::ostringstream log;
        auto instructions = propose_instructions(doc, 3, provider, &log);
        CHECK(instructions.empty());
        CHECK(provider.calls() == 2);
        CHECK(log.str().find("doc_skipped") != std::string::npos);
        CHECK(log.str().find("d1") != std::string::npos);
    }
    SUBCASE("the retry can rescue a recoverable completion") {
        SequenceProvider provider({"no stars", "* rescued"});
        auto instructions = propose_instructions(doc, 3, provider);
        CHECK(instructions == std::vector<std::string>{"rescued"});
    }
}

TEST_CASE("rollout termination and trajectory shape") {
    SimEnv env(shop());

    SUBCASE("two commands then stop") {
        SequenceProvider provider(
            {act("click [nav_orders]"), act("click [order_1001]"), act("stop: found it")});
        EpisodeResult result = rollout(env, "find the order", provider, 20);
        CHECK(result.termination == Termination::StopPredicted);
        CHECK(result.steps == 2);
        CHECK(action_count(result.trajectory) == 2);
        CHECK(result.trajectory.observations.front().text.find("[home]") == 0);
        CHECK(result.trajectory.observations.back().text.find("[order_detail]") == 0);
    }
    SUBCASE("never stopping hits the cap") {
        SequenceProvider provider({act("click [back_home]")});
        EpisodeResult result = rollout(env, "wander", provider, 5);
        CHECK(result.termination == Termination::MaxSteps);
        CHECK(result.steps == 5);
    }
    SUBCASE("terminal page finishes the environment at step 3") {
        SequenceProvider provider(
            {act("click [nav_orders]"), act("click [order_1001]"), act("click [btn_cancel]")});
        EpisodeResult result = rollout(env, "cancel the order", provider, 20);
        CHECK(result.termination == Termination::EnvFinished);
        CHECK(result.steps == 3);
        CHECK(result.trajectory.observations.back().text.find("[confirm_cancel]") == 0);
    }
    SUBCASE("an unparseable completion aborts after one reminder retry") {
        SequenceProvider provider({act("click [nav_orders]"), "gibberish"});
        std::ostringstream log;
        EpisodeResult result = rollout(env, "x", provider, 20, &log);
        CHECK(result.termination == Termination::Aborted);
        CHECK(result.steps == 1);  // truncated at the last valid observation
        CHECK(result.trajectory.well_formed());
        CHECK(log.str().find("rollout_aborted") != std::string::npos);
        CHECK(provider.calls() == 3);  // one good turn + original + reminder retry
    }
    SUBCASE("alternation holds for every outcome") {
        SequenceProvider provider({act("click [nav_orders]"), act("stop: ok")});
        EpisodeResult result = rollout(env, "x", provider, 20);
        CHECK(result.trajectory.well_formed());
    }
}

TEST_CASE("backward construction emits one example per span and kind") {
    auto provider = fenced_mock();

    SUBCASE("n=2 with both kinds gives 6 examples") {
        auto examples = backward_construct(parent_of(2),
                                           {InstructionKind::Summary, InstructionKind::Abstraction},
                                           provider);
        CHECK(examples.size() == 6);
    }
    SUBCASE("n=1 with abstraction only gives 1 example") {
        auto examples = backward_construct(parent_of(1), {InstructionKind::Abstraction}, provider);
        REQUIRE(examples.size() == 1);
        CHECK(examples[0].instruction == "a new task");
        CHECK(examples[0].provenance.kind == InstructionKind::Abstraction);
    }
    SUBCASE("summary spans take the summary wording") {
        auto examples = backward_construct(parent_of(1), {InstructionKind::Summary}, provider);
        REQUIRE(examples.size() == 1);
        CHECK(examples[0].instruction == "a step summary");
    }
    SUBCASE("provenance spans re-slice the parent exactly") {
        RawTrajectory parent = parent_of(4);
        auto examples = backward_construct(
            parent, {InstructionKind::Summary, InstructionKind::Abstraction}, provider);
        CHECK(examples.size() == 20);
        for (const auto& example : examples) {
            CHECK(example.provenance.parent_trajectory_id == parent.id);
            CHECK(sub_trajectory(parent.trajectory, example.provenance.span_start,
                                 example.provenance.span_end) == example.trajectory);
            CHECK(example.token_count ==
                  example_token_count(example.instruction, example.trajectory));
        }
    }
    SUBCASE("keep_original adds one full-span example") {
        RawTrajectory parent = parent_of(2);
        auto examples =
            backward_construct(parent, {InstructionKind::Abstraction}, provider, nullptr, true);
        REQUIRE(examples.size() == 4);
        const Example& original = examples.back();
        CHECK(original.provenance.kind == InstructionKind::Original);
        CHECK(original.instruction == parent.instruction);
        CHECK(original.provenance.span_start == 0);
        CHECK(original.provenance.span_end == 2);
    }
    SUBCASE("a span whose generation fails is skipped and logged") {
        // Summaries parse; abstractions never produce a fence.
        ScriptedMockTable table;
        table.rules = {{"Please summarize the trajectory", "```s```"}};
        table.default_response = "no fence at all";
        MockProvider failing(table);
        std::ostringstream log;
        auto examples = backward_construct(
            parent_of(2), {InstructionKind::Summary, InstructionKind::Abstraction}, failing, &log);
        CHECK(examples.size() == 3);  // summaries only
        CHECK(log.str().find("span_skipped") != std::string::npos);
    }
}

TEST_CASE("example ids are unique and deterministic") {
    auto provider = fenced_mock();
    auto a = backward_construct(parent_of(3),
                                {InstructionKind::Summary, InstructionKind::Abstraction}, provider);
    auto b = backward_construct(parent_of(3),
                                {InstructionKind::Summary, InstructionKind::Abstraction}, provider);
    REQUIRE(a.size() == b.size());
    std::set<std::string> ids;
    for (size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].id == b[k].id);
        CHECK(ids.insert(a[k].id).second);
    }
}

TEST_CASE("synthesize_corpus runs the full pipeline deterministically") {
    auto docs = load_documents(std::string(TF_ASSETS_DIR) + "/docs/shop_docs.jsonl");
    REQUIRE(docs.size() == 2);
    MockProvider provider(ScriptedMockTable::load(std::string(TF_ASSETS_DIR) + "/demo/mock.json"));
    SynthesisConfig config;
    config.seed = 7;
    auto factory = []() -> std::unique_ptr<Env> {
        return std::make_unique<SimEnv>(
            load_world(std::string(TF_ASSETS_DIR) + "/worlds/shop.json"));
    };

    SUBCASE("demo corpus yields the closed-form count") {
        SynthesisOutput output = synthesize_corpus(docs, config, factory, provider);
        // 2 docs x 3 instructions x (3-action rollout -> 6 spans) x 2 kinds
        CHECK(output.examples.size() == 72);
        CHECK(output.raw.trajectories.size() == 6);
        CHECK(output.raw.counters.docs_seen == 2);
        CHECK(output.raw.counters.instructions_proposed == 6);
        CHECK(output.raw.counters.rollouts_completed == 6);
        for (const auto& raw : output.raw.trajectories) {
            CHECK(action_count(raw.trajectory) == 3);
            CHECK(raw.termination == Termination::StopPredicted);
        }
    }
    SUBCASE("empty document list is an error") {
        CHECK_THROWS_AS(synthesize_corpus({}, config, factory, provider), PreconditionError);
    }
    SUBCASE("reruns are identical, including with jobs > 1") {
        auto first = synthesize_corpus(docs, config, factory, provider, nullptr, 1);
        auto second = synthesize_corpus(docs, config, factory, provider, nullptr, 4);
        REQUIRE(first.examples.size() == second.examples.size());
        for (size_t k = 0; k < first.examples.size(); ++k) {
            CHECK(first.examples[k] == second.examples[k]);
        }
        CHECK(first.raw.trajectories == second.raw.trajectories);
    }
    SUBCASE("a poison document only loses its own contribution") {
        Document poison{"poison", "u", "UNPARSEABLE-DOC-MARKER text", "t"};
        ScriptedMockTable table = ScriptedMockTable::load(std::string(TF_ASSETS_DIR) + "/demo/mock.json");
        table.rules.insert(table.rules.begin(), MockRule{"UNPARSEABLE-DOC-MARKER", "no stars"});
        MockProvider poisoned(table);

        auto with_poison_docs = docs;
        with_poison_docs.insert(with_poison_docs.begin() + 1, poison);
        std::ostringstream log;
        SynthesisOutput output = synthesize_corpus(with_poison_docs, config, factory, poisoned, &log);
        CHECK(output.examples.size() == 72);
        CHECK(output.raw.counters.docs_seen == 3);
        CHECK(log.str().find("doc_skipped") != std::string::npos);

        SynthesisOutput baseline = synthesize_corpus(docs, config, factory, provider);
        REQUIRE(baseline.examples.size() == output.examples.size());
        for (size_t k = 0; k < baseline.examples.size(); ++k) {
            CHECK(baseline.examples[k] == output.examples[k]);
        }
    }
}

TEST_CASE("example count law holds for random rollout lengths") {
    auto provider = fenced_mock();
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 1 + static_cast<int>(rng() % 12);
        std::set<InstructionKind> kinds;
        switch (rng() % 3) {
            case 0: kinds = {InstructionKind::Summary}; break;
            case 1: kinds = {InstructionKind::Abstraction}; break;
            default: kinds = {InstructionKind::Summary, InstructionKind::Abstraction}; break;
        }
        auto examples = backward_construct(parent_of(n), kinds, provider);
        CHECK(examples.size() == static_cast<size_t>(n) * (n + 1) / 2 * kinds.size());
    }
}
