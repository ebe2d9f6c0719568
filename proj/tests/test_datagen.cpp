#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "libs/datagen.hpp"
#include "test_helpers.hpp"

using namespace libs;

namespace {

std::set<std::string> charset_of(const std::string& text) {
    // Collect UTF-8 codepoints, skipping spaces.
    std::set<std::string> chars;
    std::size_t i = 0;
    while (i < text.size()) {
        auto byte = static_cast<unsigned char>(text[i]);
        std::size_t len = 1;
        if ((byte & 0xE0) == 0xC0) len = 2;
        else if ((byte & 0xF0) == 0xE0) len = 3;
        else if ((byte & 0xF8) == 0xF0) len = 4;
        std::string cp = text.substr(i, len);
        if (cp != " ") {
            chars.insert(cp);
        }
        i += len;
    }
    return chars;
}

std::string family_fingerprint(const ToyLanguageFamily& family) {
    std::string out;
    for (const auto& w : family.base_lexicon) {
        out += w + "|";
    }
    for (const auto& lang : family.languages) {
        out += lang.code + ":";
        for (const auto& [base, letter] : lang.cipher) {
            out += base;
            out += letter;
        }
        out += ";";
    }
    return out + family.pivot;
}

}  // namespace

TEST_CASE("family generation is deterministic and validated") {
    auto a = gen_family(7, 4, 20);
    auto b = gen_family(7, 4, 20);
    CHECK(family_fingerprint(a) == family_fingerprint(b));
    CHECK(a.languages.size() == 4);
    CHECK(a.base_lexicon.size() == 20);
    CHECK(a.pivot == a.languages.front().code);

    auto c = gen_family(8, 4, 20);
    CHECK(family_fingerprint(a) != family_fingerprint(c));

    CHECK_THROWS_AS((void)gen_family(7, 2, 20), invalid_input);
    CHECK_THROWS_AS((void)gen_family(7, 99, 20), invalid_input);
}

TEST_CASE("language character sets are pairwise disjoint") {
    auto family = gen_family(11, 5, 18);
    std::vector<std::set<std::string>> charsets;
    for (const auto& lang : family.languages) {
        std::set<std::string> chars;
        for (int i = 0; i < static_cast<int>(family.base_lexicon.size()); ++i) {
            auto word_chars = charset_of(family.render_word(lang.code, i));
            chars.insert(word_chars.begin(), word_chars.end());
        }
        charsets.push_back(std::move(chars));
    }
    for (std::size_t i = 0; i < charsets.size(); ++i) {
        for (std::size_t j = i + 1; j < charsets.size(); ++j) {
            for (const auto& cp : charsets[i]) {
                CHECK(charsets[j].count(cp) == 0);
            }
        }
    }
}

TEST_CASE("parallel corpus generation") {
    auto family = gen_family(13, 3, 24);
    auto set = gen_parallel_corpus(family, "bb", "cc", 100, {8, 14}, 21);
    CHECK(set.size() == 100);

    std::set<std::string> source_chars;
    for (int i = 0; i < 24; ++i) {
        auto wc = charset_of(family.render_word("bb", i));
        source_chars.insert(wc.begin(), wc.end());
    }
    for (const auto& item : set.items) {
        CHECK(item.source_lang == "bb");
        CHECK(item.target_lang == "cc");
        int words = 1;
        for (char ch : item.source) {
            words += ch == ' ' ? 1 : 0;
        }
        CHECK(words >= 8);
        CHECK(words <= 14);
        for (const auto& cp : charset_of(item.source)) {
            CHECK(source_chars.count(cp) == 1);
        }
    }

    auto again = gen_parallel_corpus(family, "bb", "cc", 100, {8, 14}, 21);
    for (std::size_t i = 0; i < set.size(); ++i) {
        CHECK(set.items[i].source == again.items[i].source);
        CHECK(set.items[i].reference == again.items[i].reference);
    }

    CHECK_THROWS_AS((void)gen_parallel_corpus(family, "bb", "zz", 10, {4, 6}, 1),
                    invalid_input);
}

TEST_CASE("the same base sentence renders word-aligned in every language") {
    auto family = gen_family(17, 4, 16);
    auto base = gen_base_sentences(family, 1, {9, 9}, 3)[0];
    std::vector<std::vector<std::string>> rendered;
    for (const auto& lang : family.languages) {
        std::string sentence = family.render_sentence(lang.code, base);
        std::vector<std::string> words;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= sentence.size(); ++i) {
            if (i == sentence.size() || sentence[i] == ' ') {
                words.push_back(sentence.substr(start, i - start));
                start = i + 1;
            }
        }
        rendered.push_back(std::move(words));
    }
    for (const auto& words : rendered) {
        REQUIRE(words.size() == base.size());
    }
    for (std::size_t pos = 0; pos < base.size(); ++pos) {
        for (std::size_t l = 0; l < family.languages.size(); ++l) {
            CHECK(rendered[l][pos] ==
                  family.render_word(family.languages[l].code, base[pos]));
        }
    }
}

TEST_CASE("generated references classify as on-target") {
    const auto& fx = libs::testing::SurrogateFixture::instance();
    auto set = gen_parallel_corpus(fx.family, "bb", "cc", 100, {6, 12}, 31);
    int on_target = 0;
    for (const auto& item : set.items) {
        if (lid_predict(fx.lid, item.reference).first == "cc") {
            ++on_target;
        }
    }
    CHECK(on_target >= 99);
}

TEST_CASE("copy-mode scripts reproduce the source verbatim") {
    const auto& fx = libs::testing::SurrogateFixture::instance();
    auto base = gen_base_sentences(fx.family, 1, {3, 3}, 8)[0];
    std::string source = fx.family.render_sentence("bb", base);
    auto script = fx.model->scripted_sequence(source, SurrogateMode::copy);
    CHECK(fx.model->vocab().detokenize(script) == source);

    // English-mode scripts translate into the pivot lexicon.
    auto english = fx.model->scripted_sequence(source, SurrogateMode::english);
    CHECK(fx.model->vocab().detokenize(english) == fx.family.render_sentence("aa", base));
}

TEST_CASE("family file round-trip is byte-stable") {
    auto family = gen_family(23, 4, 12);
    family.save("family_test_a.json");
    auto loaded = ToyLanguageFamily::load("family_test_a.json");
    CHECK(family_fingerprint(loaded) == family_fingerprint(family));
    loaded.save("family_test_b.json");

    std::ifstream fa("family_test_a.json"), fb("family_test_b.json");
    std::string bytes_a((std::istreambuf_iterator<char>(fa)), {});
    std::string bytes_b((std::istreambuf_iterator<char>(fb)), {});
    CHECK(bytes_a == bytes_b);
    std::remove("family_test_a.json");
    std::remove("family_test_b.json");
}
