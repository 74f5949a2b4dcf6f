#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "helpers.hpp"
#include "traceforge/curator.hpp"

using namespace traceforge;
using tf_test::make_example;
using tf_test::make_trajectory;

namespace {

Trajectory with_repeats(const std::vector<std::pair<std::string, std::string>>& pairs) {
    TrajectoryBuilder builder;
    builder.start("o0");
    for (const auto& [action, obs] : pairs) builder.step(action, obs);
    return builder.build();
}

MockProvider yes_mock() {
    ScriptedMockTable table;
    table.default_response = "yes";
    return MockProvider(table);
}

}  // namespace

TEST_CASE("dedup_states removes adjacent duplicate pairs") {
    SUBCASE("single duplicate pair") {
        Trajectory traj = with_repeats({{"click [a]", "o1"}, {"click [a]", "o1"}});
        Trajectory cleaned = dedup_states(traj);
        CHECK(action_count(cleaned) == 1);
        CHECK(cleaned.observations.back().text == "o1");
        CHECK(cleaned.well_formed());
    }
    SUBCASE("no adjacent duplicates leaves the input unchanged") {
        Trajectory traj = with_repeats({{"click [a]", "o1"}, {"click [b]", "o2"}});
        CHECK(dedup_states(traj) == traj);
    }
    SUBCASE("triple repetition collapses to one pair in a single pass") {
        Trajectory traj =
            with_repeats({{"click [a]", "o1"}, {"click [a]", "o1"}, {"click [a]", "o1"}});
        Trajectory cleaned = dedup_states(traj);
        CHECK(action_count(cleaned) == 1);
        CHECK(dedup_states(cleaned) == cleaned);  // second pass is a no-op
    }
    SUBCASE("same observation with different action survives") {
        Trajectory traj = with_repeats({{"click [a]", "o1"}, {"click [b]", "o1"}});
        CHECK(action_count(dedup_states(traj)) == 2);
    }
    SUBCASE("idempotence and non-growth over random trajectories") {
        std::mt19937_64 rng(31);
        for (int it = 0; it < 200; ++it) {
            // build with a small alphabet so duplicates occur often
            TrajectoryBuilder builder;
            builder.start("o0");
            int n = static_cast<int>(rng() % 10);
            for (int k = 0; k < n; ++k) {
                builder.step("click [w" + std::to_string(rng() % 2) + "]",
                             "o" + std::to_string(rng() % 2));
            }
            Trajectory traj = builder.build();
            Trajectory once = dedup_states(traj);
            CHECK(once.well_formed());
            CHECK(action_count(once) <= action_count(traj));
            CHECK(dedup_states(once) == once);
        }
    }
}

TEST_CASE("committee_check is a unanimous yes vote") {
    Example example = make_example("e1", "do the thing", 2);

    SUBCASE("all members yes") {
        auto provider = yes_mock();
        CHECK(committee_check(example, {{"a", "b", "c"}}, provider));
    }
    SUBCASE("one no vetoes") {
        tf_test::RoutingProvider provider({{"a", "yes"}, {"b", "no"}, {"c", "yes"}});
        CHECK_FALSE(committee_check(example, {{"a", "b", "c"}}, provider));
    }
    SUBCASE("empty committee is a configuration error") {
        auto provider = yes_mock();
        CHECK_THROWS_AS(committee_check(example, {{}}, provider), ConfigError);
    }
    SUBCASE("a member that stays unparseable counts as no") {
        tf_test::RoutingProvider provider({{"a", "yes"}, {"b", "blurble"}});
        CHECK_FALSE(committee_check(example, {{"a", "b"}}, provider));
    }
    SUBCASE("truth table for committees of size 1 to 3") {
        for (int size = 1; size <= 3; ++size) {
            for (int mask = 0; mask < (1 << size); ++mask) {
                std::map<std::string, std::string> votes;
                CommitteeConfig committee;
                bool expected = true;
                for (int member = 0; member < size; ++member) {
                    std::string id = "m" + std::to_string(member);
                    bool yes = (mask >> member) & 1;
                    votes[id] = yes ? "yes" : "no";
                    expected = expected && yes;
                    committee.members.push_back(id);
                }
                tf_test::RoutingProvider provider(votes);
                CHECK(committee_check(example, committee, provider) == expected);
            }
        }
    }
}

TEST_CASE("filter_corpus dedups, votes, and keeps input order") {
    std::vector<Example> corpus;
    for (int k = 0; k < 10; ++k) {
        corpus.push_back(make_example("e" + std::to_string(k), "task " + std::to_string(k), 2));
    }

    SUBCASE("scripted committee rejects specific ids") {
        // the filter prompt embeds the instruction, so rules can key on it
        ScriptedMockTable table;
        table.rules = {{"task 3\n", "no"}, {"task 7\n", "no"}};
        table.default_response = "yes";
        MockProvider provider(table);

        FilterReport report;
        auto kept = filter_corpus(corpus, {{"judge"}}, provider, &report);
        CHECK(kept.size() == 8);
        for (const auto& example : kept) {
            CHECK(example.instruction != "task 3");
            CHECK(example.instruction != "task 7");
        }
        CHECK(report.input_examples == 10);
        CHECK(report.passed == 8);
        CHECK(report.rejected_committee == 2);

        // order stability: surviving ids appear in input order
        std::vector<std::string> ids;
        for (const auto& e : kept) ids.push_back(e.id);
        CHECK(ids == std::vector<std::string>{"e0", "e1", "e2", "e4", "e5", "e6", "e8", "e9"});
    }
    SUBCASE("empty input gives empty output") {
        auto provider = yes_mock();
        FilterReport report;
        CHECK(filter_corpus({}, {{"judge"}}, provider, &report).empty());
        CHECK(report.input_examples == 0);
    }
    SUBCASE("dedup recomputes token counts") {
        Example dup = make_example("dup", "task", 1);
        dup.trajectory = with_repeats({{"click [a]", "o1"}, {"click [a]", "o1"}});
        dup.token_count = example_token_count(dup.instruction, dup.trajectory);
        auto provider = yes_mock();
        FilterReport report;
        auto kept = filter_corpus({dup}, {{"judge"}}, provider, &report);
        REQUIRE(kept.size() == 1);
        CHECK(action_count(kept[0].trajectory) == 1);
        CHECK(kept[0].token_count == example_token_count(kept[0].instruction, kept[0].trajectory));
        CHECK(report.duplicate_pairs_removed == 1);
    }
    SUBCASE("jobs > 1 matches the sequential result") {
        auto provider = yes_mock();
        auto sequential = filter_corpus(corpus, {{"judge"}}, provider, nullptr, nullptr, 1);
        auto parallel = filter_corpus(corpus, {{"judge"}}, provider, nullptr, nullptr, 4);
        CHECK(sequential == parallel);
    }
}

TEST_CASE("granularity buckets partition by action count") {
    CHECK(bucket_of(0) == Granularity::Short);
    CHECK(bucket_of(4) == Granularity::Short);
    CHECK(bucket_of(5) == Granularity::Medium);
    CHECK(bucket_of(9) == Granularity::Medium);
    CHECK(bucket_of(10) == Granularity::Long);
    CHECK(bucket_of(25) == Granularity::Long);

    std::vector<Example> corpus;
    for (int n = 1; n <= 14; ++n) {
        corpus.push_back(make_example("e" + std::to_string(n), "task " + std::to_string(n), n));
    }
    auto buckets = bucket(corpus);
    size_t total = 0;
    for (const auto& [label, members] : buckets) {
        total += members.size();
        for (const auto& example : members) {
            CHECK(bucket_of(action_count(example.trajectory)) == label);
        }
    }
    CHECK(total == corpus.size());
    CHECK(buckets[Granularity::Short].size() == 4);    // n = 1..4
    CHECK(buckets[Granularity::Medium].size() == 5);   // n = 5..9
    CHECK(buckets[Granularity::Long].size() == 5);     // n = 10..14
}

TEST_CASE("token multiset jaccard") {
    CHECK(token_multiset_jaccard("open the orders page", "open the orders page") == 1.0);
    CHECK(token_multiset_jaccard("alpha beta", "gamma delta") == 0.0);
    CHECK(token_multiset_jaccard("a a b", "a b b") == doctest::Approx(2.0 / 4.0));
    CHECK(token_multiset_jaccard("", "") == 0.0);
}

TEST_CASE("subsample_to_budget") {
    auto fixed_tokens = [](const std::string& id, int tokens) {
        Example e = make_example(id, "instruction " + id, 1);
        e.token_count = tokens;
        return e;
    };

    SUBCASE("budget zero selects nothing") {
        std::vector<Example> corpus = {fixed_tokens("a", 10), fixed_tokens("b", 10)};
        CHECK(subsample_to_budget(corpus, 0, 1).empty());
    }
    SUBCASE("budget covering the total is the identity") {
        std::vector<Example> corpus = {fixed_tokens("a", 10), fixed_tokens("b", 10),
                                       fixed_tokens("c", 10)};
        CHECK(subsample_to_budget(corpus, 30, 1) == corpus);
        CHECK(subsample_to_budget(corpus, 1000, 9) == corpus);
    }
    SUBCASE("five tens under budget 25 select exactly two") {
        std::vector<Example> corpus;
        for (int k = 0; k < 5; ++k) {
            corpus.push_back(fixed_tokens("e" + std::to_string(k), 10));
        }
        auto picked = subsample_to_budget(corpus, 25, 7);
        CHECK(picked.size() == 2);  // 20 <= 25 < 30
    }
    SUBCASE("near-duplicate instructions are skipped") {
        std::vector<Example> corpus = {fixed_tokens("a", 10), fixed_tokens("b", 10),
                                       fixed_tokens("c", 10)};
        corpus[1].instruction = corpus[0].instruction;  // jaccard 1.0 > 0.9
        corpus[2].instruction = "completely different wording here";
        auto picked = subsample_to_budget(corpus, 25, 3);
        REQUIRE(picked.size() == 2);
        CHECK(picked[0].instruction != picked[1].instruction);
    }
    SUBCASE("budget safety and determinism over random inputs") {
        std::mt19937_64 rng(55);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<Example> corpus;
            int count = 1 + static_cast<int>(rng() % 12);
            long total = 0;
            for (int k = 0; k < count; ++k) {
                int tokens = 1 + static_cast<int>(rng() % 40);
                total += tokens;
                corpus.push_back(
                    fixed_tokens("e" + std::to_string(k) + "-" + std::to_string(rng() % 1000),
                                 tokens));
            }
            long budget = static_cast<long>(rng() % (total + 10));
            uint64_t seed = rng();
            auto picked = subsample_to_budget(corpus, budget, seed);
            long used = 0;
            for (const auto& e : picked) used += e.token_count;
            CHECK(used <= budget);
            CHECK(subsample_to_budget(corpus, budget, seed) == picked);
        }
    }
}
