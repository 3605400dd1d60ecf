#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fuzz.hpp"
#include "reits/reward.hpp"
#include "synthetic.hpp"

using namespace reits;
using namespace reits::reward;
using threshold::DirectionLabel;

namespace {

const Labels up3{DirectionLabel::up, DirectionLabel::up, DirectionLabel::up};

prediction::PredictionSet set_of(std::array<DirectionLabel, 3> dirs) {
    prediction::PredictionSet p;
    for (std::size_t k = 0; k < 3; ++k) {
        switch (dirs[k]) {
            case DirectionLabel::up: p.horizons[k] = {0.6, 0.15, 0.25, 0.5}; break;
            case DirectionLabel::down: p.horizons[k] = {0.15, 0.6, 0.25, 0.5}; break;
            case DirectionLabel::side: p.horizons[k] = {0.25, 0.15, 0.6, 0.5}; break;
        }
    }
    return p;
}

std::string stub_text(double chg5, double eps5) {
    return llm::stub_predict(
        nlohmann::json{{"price_context", {{"chg_5d", chg5}, {"thresholds", {{"eps5", eps5}}}}}}.dump());
}

threshold::LabeledSample sample(const std::string& fund, Date d) {
    threshold::LabeledSample s;
    s.fund_code = fund;
    s.date = d;
    s.theta = 0.004;
    s.labels = {DirectionLabel::up, DirectionLabel::side, DirectionLabel::down};
    return s;
}

}  // namespace

TEST_SUITE("reward") {

TEST_CASE("weights validation") {
    CHECK_NOTHROW(RewardWeights{}.validate());
    CHECK_THROWS_AS((RewardWeights{0.7, 0.2}.validate()), ConfigError);
    CHECK_THROWS_AS((RewardWeights{0.8, 0.2, {0.5, 0.5, 0.1}}.validate()), ConfigError);
    CHECK_THROWS_AS((RewardWeights{1.2, -0.2}.validate()), ConfigError);
    CHECK_THROWS_AS(reward::reward(1, 1, RewardWeights{0.5, 0.4}), ConfigError);
}

TEST_CASE("correctness examples") {
    CHECK(correctness(set_of({DirectionLabel::up, DirectionLabel::up, DirectionLabel::up}), up3, {}).value == 1.0);
    const Labels l{DirectionLabel::up, DirectionLabel::down, DirectionLabel::side};
    const auto two = correctness(set_of({DirectionLabel::up, DirectionLabel::down, DirectionLabel::up}), l, {});
    CHECK(two.value == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(two.indicators == std::array<int, 3>{1, 1, 0});
    const RewardWeights w{0.8, 0.2, {0.2, 0.3, 0.5}};
    CHECK(correctness(set_of({DirectionLabel::down, DirectionLabel::up, DirectionLabel::side}), l, w).value == 0.5);
}

TEST_CASE("reward arithmetic") {
    CHECK(reward::reward(1, 1, {}) == 1.0);
    CHECK(reward::reward(1, 1, RewardWeights{0.6, 0.4, {0.1, 0.2, 0.7}}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(reward::reward(1.0, 0.5, RewardWeights{0.8, 0.2}) - 0.9) <= 1e-12);
    CHECK(reward::reward(0, 0, {}) == 0.0);
}

TEST_CASE("format score") {
    CHECK(format_score(stub_text(0.01, 0.004)).total == 1.0);
    const auto prose_tags = format_score("<think>hmm</think> I think it goes up.");
    CHECK(prose_tags.basic == 0.5);
    CHECK(prose_tags.fields == 0.0);
    CHECK(prose_tags.numeric == 0.0);
    const auto prose = format_score("It goes up.");
    CHECK(prose.total == 0.0);

    // t5 sums to 0.9, everything else compliant: 8 of 9 numeric checks
    const std::string text = R"(<think>x</think>{"t1":{"up":0.6,"down":0.25,"side":0.15,"confidence":0.5},)"
                             R"("t5":{"up":0.5,"down":0.3,"side":0.1,"confidence":0.5},)"
                             R"("t20":{"up":0.6,"down":0.25,"side":0.15,"confidence":0.5}})";
    const auto f = format_score(text);
    CHECK(f.basic == 1.0);
    CHECK(f.fields == 1.0);
    CHECK(std::abs(f.numeric - 8.0 / 9.0) <= 1e-12);
    CHECK(std::abs(f.total - (0.3 + 0.3 + 0.4 * 8.0 / 9.0)) <= 1e-12);
    CHECK(std::abs(f.total - 0.9556) < 1e-4);
}

TEST_CASE("stub output always scores one") {
    for (int i = -50; i <= 50; ++i) CHECK(format_score(stub_text(i * 0.001, 0.009)).total == 1.0);
}

TEST_CASE("fuzzed texts stay within bounds and never throw") {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 2000; ++i) {
        const auto text = testing::random_model_text(rng);
        const auto b = score(text, testing::random_labels(rng), {});
        CHECK(b.reward >= 0.0);
        CHECK(b.reward <= 1.0);
        CHECK(b.format.total >= 0.0);
        CHECK(b.format.total <= 1.0);
        CHECK(b.correctness.value >= 0.0);
        CHECK(b.correctness.value <= 1.0);
    }
}

TEST_CASE("only the argmax directions matter") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const auto labels = testing::random_labels(rng);
        auto p = set_of({static_cast<DirectionLabel>(rng() % 3), static_cast<DirectionLabel>(rng() % 3),
                         static_cast<DirectionLabel>(rng() % 3)});
        const double before = correctness(p, labels, {}).value;
        for (auto& h : p.horizons) {
            // perturb while keeping the argmax
            const auto d = prediction::dominant_direction(h);
            h.p_up += 0.05 * u(rng);
            h.p_down += 0.05 * u(rng);
            h.p_side += 0.05 * u(rng);
            double& top = d == DirectionLabel::up ? h.p_up : d == DirectionLabel::down ? h.p_down : h.p_side;
            top += 0.2;
            h.confidence = u(rng);
        }
        CHECK(correctness(p, labels, {}).value == before);
    }
    // through text as well
    const std::string a = R"(<think>a</think>{"t1":{"up":0.5,"down":0.2,"side":0.3,"confidence":0.1},)"
                          R"("t5":{"up":0.2,"down":0.5,"side":0.3,"confidence":0.1},)"
                          R"("t20":{"up":0.3,"down":0.2,"side":0.5,"confidence":0.1}})";
    const std::string b = R"(<think>a</think>{"t1":{"up":0.8,"down":0.1,"side":0.1,"confidence":0.9},)"
                          R"("t5":{"up":0.1,"down":0.8,"side":0.1,"confidence":0.9},)"
                          R"("t20":{"up":0.1,"down":0.1,"side":0.8,"confidence":0.9}})";
    const Labels l{DirectionLabel::up, DirectionLabel::up, DirectionLabel::side};
    CHECK(score(a, l, {}).correctness.value == score(b, l, {}).correctness.value);
}

TEST_CASE("reward is monotone in each indicator and format component") {
    const RewardWeights w{0.7, 0.3, {0.2, 0.3, 0.5}};
    for (double f = 0; f <= 1.0; f += 0.125) {
        for (int mask = 0; mask < 8; ++mask) {
            double c = 0;
            for (int k = 0; k < 3; ++k) c += (mask >> k & 1) * w.w[static_cast<std::size_t>(k)];
            for (int k = 0; k < 3; ++k) {
                if (mask >> k & 1) continue;
                CHECK(reward::reward(c + w.w[static_cast<std::size_t>(k)], f, w) >= reward::reward(c, f, w));
            }
            CHECK(reward::reward(c, std::min(1.0, f + 0.125), w) >= reward::reward(c, f, w));
        }
    }
}

TEST_CASE("unreadable horizons count as misses") {
    const std::string text = R"(<think>a</think>{"t1":{"up":0.6,"down":0.25,"side":0.15,"confidence":0.5}})";
    const auto b = score(text, up3, {});
    CHECK(b.correctness.indicators == std::array<int, 3>{1, 0, 0});
}

TEST_CASE("gspo records share a group and carry rewards") {
    const auto s = sample("508001.SH", Date(2024, 6, 3));
    const nlohmann::json payload{{"fund_code", "508001.SH"}, {"as_of", "2024-06-03"}};
    const std::vector<RecordSource> src{{s, payload, {stub_text(0.01, 0.004), "junk", stub_text(0.01, 0.004), "{}"}}};
    const auto recs = emit_records(RecordKind::gspo_candidate, src);
    REQUIRE(recs.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(recs[i].group_id == recs[0].group_id);
        CHECK(recs[i].candidate_index == i);
        CHECK(recs[i].reward.has_value());
    }
    CHECK(recs[0].reward->reward == recs[2].reward->reward);
    CHECK(recs[1].reward->reward < recs[0].reward->reward);
    const auto j = to_json(recs[0]);
    CHECK(j["record_kind"] == "gspo_candidate");
    CHECK(j.contains("candidate"));
    CHECK(j["labels"]["t5"] == "side");
}

TEST_CASE("sft records carry no reward") {
    const auto s = sample("508001.SH", Date(2024, 6, 3));
    const nlohmann::json payload{{"fund_code", "508001.SH"}, {"as_of", "2024-06-03"}};
    const std::vector<RecordSource> src{{s, payload, {"teacher text"}}};
    const auto recs = emit_records(RecordKind::sft, src);
    REQUIRE(recs.size() == 1);
    CHECK_FALSE(recs[0].reward.has_value());
    const auto j = to_json(recs[0]);
    CHECK(j["target"] == "teacher text");
    CHECK_FALSE(j.contains("reward"));
}

TEST_CASE("record ordering and mismatch errors") {
    const nlohmann::json pb{{"fund_code", "B"}, {"as_of", "2024-06-03"}};
    const nlohmann::json pa1{{"fund_code", "A"}, {"as_of", "2024-06-04"}};
    const nlohmann::json pa0{{"fund_code", "A"}, {"as_of", "2024-06-03"}};
    const std::vector<RecordSource> src{{sample("B", Date(2024, 6, 3)), pb, {"x"}},
                                        {sample("A", Date(2024, 6, 4)), pa1, {"y"}},
                                        {sample("A", Date(2024, 6, 3)), pa0, {"z"}}};
    const auto recs = emit_records(RecordKind::gspo_candidate, src);
    CHECK(recs[0].text == "z");
    CHECK(recs[1].text == "y");
    CHECK(recs[2].text == "x");
    std::ostringstream out;
    write_jsonl(out, recs);
    const auto text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);

    const std::vector<RecordSource> wrong{{sample("A", Date(2024, 6, 3)), pa1, {"y"}}};
    CHECK_THROWS_AS(emit_records(RecordKind::gspo_candidate, wrong), DataError);
    auto unlabeled = sample("A", Date(2024, 6, 3));
    unlabeled.labels[2].reset();
    const std::vector<RecordSource> partial{{unlabeled, pa0, {"y"}}};
    CHECK_THROWS_AS(emit_records(RecordKind::gspo_candidate, partial), DataError);
    const std::vector<RecordSource> none{{sample("A", Date(2024, 6, 3)), pa0, {}}};
    CHECK_THROWS_AS(emit_records(RecordKind::gspo_candidate, none), DataError);
}

}
