#include <doctest.h>

#include <cmath>
#include <set>

#include "libs/decode.hpp"
#include "libs/scoring.hpp"
#include "libs/table_model.hpp"
#include "test_helpers.hpp"

using namespace libs;
using libs::testing::HashedRandomModel;
using libs::testing::SurrogateFixture;

namespace {

// Stepwise-argmax oracle for the b=1 case.
std::vector<TokenId> greedy_tokens(const AutoregressiveModel& model, const std::string& source,
                                   const std::string& target_lang, int max_len) {
    Hypothesis hyp = Hypothesis::initial(model.vocab());
    for (int step = 0; step < max_len && !hyp.finished; ++step) {
        auto lp = model.next_token_logprobs(source, target_lang, hyp);
        int best = -1;
        for (int id = 0; id < static_cast<int>(lp.size()); ++id) {
            if (id == model.vocab().bos_id()) {
                continue;
            }
            if (best < 0 || lp[id] > lp[best]) {
                best = id;
            }
        }
        hyp = hyp.extended(best, lp[best], model.vocab());
    }
    return hyp.tokens;
}

// Saturating-beam runs legitimately carry flagged unfinished leftovers
// whose normalized score can exceed a finished one; oracle comparisons
// target the best complete sequence.
const DecodeResult::Candidate& top_finished(const DecodeResult& result) {
    for (const auto& c : result.candidates) {
        if (c.finished) {
            return c;
        }
    }
    throw libs::invalid_state("no finished candidate");
}

DecodeConfig surrogate_config(int beam_size, double alpha) {
    DecodeConfig cfg;
    cfg.beam_size = beam_size;
    cfg.window = 2;
    cfg.alpha = alpha;
    cfg.length_penalty = 1.0;
    cfg.max_len = 0;  // filled per sentence below
    cfg.target_lang = "cc";
    cfg.source_lang = "bb";
    return cfg;
}

struct CurseSentence {
    std::string source;
    std::string on_target_text;
    std::string english_text;
};

CurseSentence curse_sentence(int words, std::uint64_t seed) {
    const auto& fx = SurrogateFixture::instance();
    auto base = gen_base_sentences(fx.family, 1, {words, words}, seed)[0];
    CurseSentence s;
    s.source = fx.family.render_sentence("bb", base);
    s.on_target_text = fx.family.render_sentence("cc", base);
    s.english_text = fx.family.render_sentence("aa", base);
    return s;
}

}  // namespace

TEST_CASE("beam size 1 equals stepwise argmax") {
    auto vocab = testing::make_word_vocab(6);
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        HashedRandomModel model(vocab, seed);
        DecodeConfig cfg;
        cfg.beam_size = 1;
        cfg.max_len = 12;
        cfg.length_penalty = 0.0;
        cfg.target_lang = "T";
        auto result = beam_search(model, "src", cfg);
        auto greedy = greedy_tokens(model, "src", "T", 12);
        REQUIRE(!result.candidates.empty());
        CHECK(result.top().tokens == greedy);
    }
}

TEST_CASE("exhaustive enumeration matches the closed-form count and tie order") {
    auto vocab = testing::make_word_vocab(2);  // content tokens w0, w1
    // No listed states: uniform distribution everywhere.
    auto model = std::make_shared<TableModel>(vocab, std::vector<TableModel::State>{});
    auto ranked = exhaustive_decode(*model, "s", "T", 2, 1.0);
    // 1 + 2 + 4 EOS-terminated sequences.
    REQUIRE(ranked.size() == 7);

    // Uniform scores tie; shorter sequences carry higher cumulative
    // logprob, then token-id lexicographic order breaks the rest.
    const TokenId B = vocab->bos_id(), E = vocab->eos_id();
    const TokenId a = 2, b = 3;
    std::vector<std::vector<TokenId>> expected{
        {B, E}, {B, a, E}, {B, b, E}, {B, a, a, E}, {B, a, b, E}, {B, b, a, E}, {B, b, b, E}};
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(ranked[i].tokens == expected[i]);
    }
    for (std::size_t i = 1; i < ranked.size(); ++i) {
        CHECK(ranked[0].final_score == doctest::Approx(ranked[i].final_score));
    }

    CHECK_THROWS_AS((void)exhaustive_decode(*model, "s", "T", 30, 1.0), invalid_input);
}

TEST_CASE("oracle agreement on random instances") {
    for (int instance = 0; instance < 30; ++instance) {
        int content = 2 + instance % 5;              // 2..6 -> |V| 4..8
        int max_content = 2 + (instance / 5) % 4;    // 2..5
        auto vocab = testing::make_word_vocab(content);
        HashedRandomModel model(vocab, 1000 + instance);
        LidModel lid = testing::make_random_lid(500 + instance);

        auto oracle_plain = exhaustive_decode(model, "s", "xx", max_content, 1.0);
        auto oracle_lid = exhaustive_decode(model, "s", "xx", max_content, 1.0, 1.0, &lid);

        DecodeConfig cfg;
        cfg.beam_size = static_cast<int>(std::pow(vocab->size(), max_content));
        cfg.window = 2;
        cfg.alpha = 0.0;
        cfg.length_penalty = 1.0;
        cfg.max_len = max_content + 1;  // content cap plus the EOS step
        cfg.target_lang = "xx";

        auto beam = beam_search(model, "s", cfg);
        REQUIRE(!beam.candidates.empty());
        CHECK(top_finished(beam).tokens == oracle_plain.front().tokens);

        DecodeConfig libs_cfg = cfg;
        libs_cfg.alpha = 1.0;
        libs_cfg.window = vocab->size();
        auto libs = libs_decode(model, &lid, "s", libs_cfg);
        REQUIRE(!libs.candidates.empty());
        CHECK(top_finished(libs).tokens == oracle_lid.front().tokens);
        CHECK(top_finished(libs).final_score ==
              doctest::Approx(oracle_lid.front().final_score));
    }
}

TEST_CASE("alpha zero reduces to plain beam search") {
    const auto& fx = SurrogateFixture::instance();
    auto testset = gen_parallel_corpus(fx.family, "bb", "cc", 25, {6, 14}, 1234);
    for (const auto& item : testset.items) {
        DecodeConfig cfg = surrogate_config(5, 0.0);
        cfg.max_len = default_max_len(item.source);
        auto baseline = beam_search(*fx.model, item.source, cfg);
        auto reduced = libs_decode(*fx.model, &fx.lid, item.source, cfg);
        CHECK(baseline.top().text == reduced.top().text);
        CHECK(reduced.stats.lid_calls == 0);
    }
}

TEST_CASE("larger beams surface the off-target candidate") {
    const auto& fx = SurrogateFixture::instance();
    auto s = curse_sentence(10, 9001);

    DecodeConfig small = surrogate_config(5, 0.0);
    small.max_len = default_max_len(s.source);
    auto top_small = beam_search(*fx.model, s.source, small);
    CHECK(top_small.top().text == s.on_target_text);

    DecodeConfig large = surrogate_config(20, 0.0);
    large.max_len = default_max_len(s.source);
    auto top_large = beam_search(*fx.model, s.source, large);
    CHECK(top_large.top().text == s.english_text);

    // The winning large-beam candidate carries a higher model score, the
    // mechanism behind the curse.
    CHECK(top_large.top().nmt_score > top_small.top().nmt_score);
}

TEST_CASE("language-informed scoring restores the on-target candidate") {
    const auto& fx = SurrogateFixture::instance();
    auto s = curse_sentence(11, 42);
    for (int b : {5, 10, 20}) {
        DecodeConfig cfg = surrogate_config(b, 1.0);
        cfg.max_len = default_max_len(s.source);
        auto result = libs_decode(*fx.model, &fx.lid, s.source, cfg);
        CHECK(result.top().text == s.on_target_text);
    }
}

TEST_CASE("lid call budget stays within beam times window per step") {
    const auto& fx = SurrogateFixture::instance();
    auto s = curse_sentence(10, 77);
    DecodeConfig cfg = surrogate_config(5, 1.0);
    cfg.max_len = default_max_len(s.source);
    auto result = libs_decode(*fx.model, &fx.lid, s.source, cfg);
    CHECK(result.stats.max_step_lid_calls <= cfg.beam_size * cfg.window);
    CHECK(result.stats.lid_calls > 0);
    CHECK(result.stats.steps > 0);
    CHECK(result.stats.lid_calls <=
          static_cast<long>(result.stats.steps + 1) * cfg.beam_size * cfg.window);
}

TEST_CASE("empty candidate text gets a neutral lid term") {
    // EOS carries most of the first-step mass, so the empty candidate is
    // explored and must not break LiD scoring.
    auto vocab = testing::make_word_vocab(1);
    TableModel::State root;
    root.source = "s";
    root.lang = "xx";
    root.prefix = {vocab->bos_id()};
    root.dist = {{vocab->eos_id(), 0.6}, {2, 0.4}};
    auto model = std::make_shared<TableModel>(vocab, std::vector<TableModel::State>{root});
    LidModel lid = testing::make_random_lid(3);

    DecodeConfig cfg;
    cfg.beam_size = 2;
    cfg.window = 2;
    cfg.alpha = 1.0;
    cfg.max_len = 4;
    cfg.target_lang = "xx";
    auto result = libs_decode(*model, &lid, "s", cfg);
    REQUIRE(!result.candidates.empty());
    bool saw_empty = false;
    for (const auto& c : result.candidates) {
        if (c.text.empty()) {
            saw_empty = true;
            CHECK(c.lid_logprob == 0.0);
        }
    }
    CHECK(saw_empty);
}

TEST_CASE("stored scores rescore exactly and carry no lid term") {
    const auto& fx = SurrogateFixture::instance();
    auto testset = gen_parallel_corpus(fx.family, "bb", "cc", 8, {6, 12}, 4242);
    for (const auto& item : testset.items) {
        for (double alpha : {0.0, 1.0}) {
            DecodeConfig cfg = surrogate_config(8, alpha);
            cfg.max_len = default_max_len(item.source);
            auto result = libs_decode(*fx.model, alpha > 0 ? &fx.lid : nullptr, item.source,
                                      cfg);
            for (const auto& c : result.candidates) {
                double rescored = rescore_tokens(*fx.model, item.source, "cc", c.tokens);
                CHECK(std::abs(rescored - c.nmt_score) <= 1e-9);
            }
        }
    }

    auto vocab = testing::make_word_vocab(5);
    HashedRandomModel model(vocab, 2024);
    LidModel lid = testing::make_random_lid(9);
    DecodeConfig cfg;
    cfg.beam_size = 6;
    cfg.window = 3;
    cfg.alpha = 0.7;
    cfg.max_len = 9;
    cfg.target_lang = "xx";
    auto result = libs_decode(model, &lid, "s", cfg);
    for (const auto& c : result.candidates) {
        CHECK(std::abs(rescore_tokens(model, "s", "xx", c.tokens) - c.nmt_score) <= 1e-9);
    }
}

TEST_CASE("decoding is deterministic") {
    const auto& fx = SurrogateFixture::instance();
    auto s = curse_sentence(9, 314);
    DecodeConfig cfg = surrogate_config(7, 1.0);
    cfg.max_len = default_max_len(s.source);
    auto a = libs_decode(*fx.model, &fx.lid, s.source, cfg);
    auto b = libs_decode(*fx.model, &fx.lid, s.source, cfg);
    REQUIRE(a.candidates.size() == b.candidates.size());
    for (std::size_t i = 0; i < a.candidates.size(); ++i) {
        CHECK(a.candidates[i].tokens == b.candidates[i].tokens);
        CHECK(a.candidates[i].final_score == b.candidates[i].final_score);
        CHECK(a.candidates[i].nmt_score == b.candidates[i].nmt_score);
    }
}

TEST_CASE("top-1 raw model score grows with beam size") {
    const auto& fx = SurrogateFixture::instance();
    auto s = curse_sentence(10, 555);
    double prev = -1e18;
    for (int b : {1, 2, 3, 5, 8, 12, 20}) {
        DecodeConfig cfg = surrogate_config(b, 0.0);
        cfg.length_penalty = 0.0;
        cfg.max_len = default_max_len(s.source);
        auto result = beam_search(*fx.model, s.source, cfg);
        CHECK(result.top().nmt_score >= prev - 1e-9);
        prev = result.top().nmt_score;
    }
}

TEST_CASE("beam trace records the candidate table") {
    const auto& fx = SurrogateFixture::instance();
    auto s = curse_sentence(10, 808);
    DecodeConfig cfg = surrogate_config(20, 0.0);
    cfg.max_len = default_max_len(s.source);
    auto traced = trace_decode(DecodeEngine::baseline, *fx.model, fx.lid, s.source, cfg);

    REQUIRE(!traced.trace.steps.empty());
    // Step 1: single-word texts, the off-target opener penalized well
    // below the on-target top-1.
    const auto& first = traced.trace.steps[0];
    REQUIRE(!first.empty());
    CHECK(first[0].lid_label == "cc");
    bool found_english_opener = false;
    for (const auto& e : first) {
        CHECK(e.logprob <= first[0].logprob);
        if (e.lid_label == "aa") {
            found_english_opener = true;
            CHECK(e.logprob < first[0].logprob - 2.0);
        }
    }
    CHECK(found_english_opener);

    // Entries at step t have t generated tokens: t words while
    // unfinished on this vocabulary.
    for (std::size_t t = 0; t < std::min<std::size_t>(5, traced.trace.steps.size()); ++t) {
        CHECK(traced.trace.steps[t].size() <= 20);
        for (const auto& e : traced.trace.steps[t]) {
            std::size_t words = e.text.empty() ? 0 : 1;
            for (char c : e.text) {
                words += c == ' ' ? 1 : 0;
            }
            CHECK(words <= t + 1);
        }
    }

    // Past the crossover the pivot-language candidate ranks first.
    const auto& final_step = traced.trace.steps.back();
    CHECK(final_step[0].lid_label == "aa");
    CHECK(traced.result.top().text == s.english_text);

    // TSV round-trip.
    std::string tsv = traced.trace.to_tsv();
    BeamTrace parsed = BeamTrace::from_tsv(tsv);
    REQUIRE(parsed.steps.size() == traced.trace.steps.size());
    for (std::size_t t = 0; t < parsed.steps.size(); ++t) {
        REQUIRE(parsed.steps[t].size() == traced.trace.steps[t].size());
        for (std::size_t r = 0; r < parsed.steps[t].size(); ++r) {
            CHECK(parsed.steps[t][r].text == traced.trace.steps[t][r].text);
            CHECK(parsed.steps[t][r].lid_label == traced.trace.steps[t][r].lid_label);
            CHECK(parsed.steps[t][r].logprob ==
                  doctest::Approx(traced.trace.steps[t][r].logprob).epsilon(1e-9));
        }
    }
}

TEST_CASE("finished candidates outside the sorted top-b are discarded") {
    // With b=1, the first-step EOS ranks second and must not reach the
    // finished set; only the continuation that later finishes does.
    auto vocab = testing::make_word_vocab(1);
    std::vector<TableModel::State> states;
    states.push_back({"s", "T", {vocab->bos_id()}, {{2, 0.6}, {vocab->eos_id(), 0.4}}});
    states.push_back({"s", "T", {vocab->bos_id(), 2}, {{vocab->eos_id(), 1.0}}});
    auto model = std::make_shared<TableModel>(vocab, std::move(states));

    DecodeConfig cfg;
    cfg.beam_size = 1;
    cfg.max_len = 4;
    cfg.target_lang = "T";
    auto result = beam_search(*model, "s", cfg);
    REQUIRE(result.candidates.size() == 1);
    CHECK(result.top().text == "w0");
    CHECK(result.top().finished);
}

TEST_CASE("hitting max_len flags unfinished candidates") {
    const auto& fx = SurrogateFixture::instance();
    auto s = curse_sentence(10, 99);
    DecodeConfig cfg = surrogate_config(4, 0.0);
    cfg.max_len = 3;  // scripts need 11 tokens, nothing can finish
    auto result = beam_search(*fx.model, s.source, cfg);
    REQUIRE(result.candidates.size() == 4);
    for (const auto& c : result.candidates) {
        CHECK_FALSE(c.finished);
    }
    CHECK(result.stats.steps == 3);
}

TEST_CASE("decode result JSON round-trip") {
    const auto& fx = SurrogateFixture::instance();
    auto s = curse_sentence(8, 2718);
    DecodeConfig cfg = surrogate_config(5, 1.0);
    cfg.max_len = default_max_len(s.source);
    auto result = libs_decode(*fx.model, &fx.lid, s.source, cfg);

    std::string line = decode_result_to_json(result);
    DecodeResult parsed = decode_result_from_json(line);
    CHECK(parsed.source == result.source);
    CHECK(parsed.target_lang == result.target_lang);
    REQUIRE(parsed.candidates.size() == result.candidates.size());
    for (std::size_t i = 0; i < parsed.candidates.size(); ++i) {
        CHECK(parsed.candidates[i].text == result.candidates[i].text);
        CHECK(parsed.candidates[i].tokens == result.candidates[i].tokens);
        CHECK(parsed.candidates[i].nmt_score ==
              doctest::Approx(result.candidates[i].nmt_score).epsilon(1e-12));
        CHECK(parsed.candidates[i].finished == result.candidates[i].finished);
    }
    CHECK(parsed.stats.steps == result.stats.steps);
    CHECK(parsed.stats.lid_calls == result.stats.lid_calls);
}

TEST_CASE("config validation") {
    DecodeConfig cfg;
    cfg.target_lang = "T";
    cfg.beam_size = 0;
    CHECK_THROWS_AS(cfg.validate(), invalid_input);
    cfg.beam_size = 1;
    cfg.window = 0;
    CHECK_THROWS_AS(cfg.validate(), invalid_input);
    cfg.window = 1;
    cfg.alpha = -0.1;
    CHECK_THROWS_AS(cfg.validate(), invalid_input);
    cfg.alpha = 0.0;
    cfg.max_len = 0;
    CHECK_THROWS_AS(cfg.validate(), invalid_input);
    cfg.max_len = 5;
    CHECK_NOTHROW(cfg.validate());

    auto vocab = testing::make_word_vocab(3);
    HashedRandomModel model(vocab, 5);
    DecodeConfig libs_cfg;
    libs_cfg.target_lang = "xx";
    libs_cfg.alpha = 1.0;
    CHECK_THROWS_AS((void)libs_decode(model, nullptr, "s", libs_cfg), invalid_input);
}
