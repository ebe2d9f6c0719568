#include "libs/datagen.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "libs/errors.hpp"

namespace libs {

namespace {

// splitmix64; portable generator so outputs are stable across platforms.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, n).
    std::uint64_t below(std::uint64_t n) { return next() % n; }
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    Rng r(seed ^ (stream * 0xD6E8FEB86659FD93ull + 0x2545F4914F6CDD1Dull));
    return r.next();
}

std::string encode_utf8(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

constexpr double kFunctionWordRate = 0.3;

}  // namespace

const std::vector<LetterRange>& builtin_letter_ranges() {
    static const std::vector<LetterRange> ranges = {
        {U'a', U'z', "latin"},        // a-z, 26
        {U'а', U'я', "cyrillic"},     // 32
        {U'ա', U'ֆ', "armenian"},     // 38
        {U'ა', U'ჰ', "georgian"},     // 33
        {U'ก', U'ฮ', "thai"},         // 46
        {U'क', U'ह', "devanagari"},   // 37
        {U'ሀ', U'ሟ', "ethiopic"},     // 32
        {U'Ꭰ', U'Ꮔ', "cherokee"},     // 37
    };
    return ranges;
}

const ToyLanguage& ToyLanguageFamily::language(const std::string& code) const {
    for (const auto& lang : languages) {
        if (lang.code == code) {
            return lang;
        }
    }
    throw invalid_input("language not in family: " + code);
}

std::string ToyLanguageFamily::render_word(const std::string& code, int base_index) const {
    if (base_index < 0 || base_index >= static_cast<int>(base_lexicon.size())) {
        throw invalid_input("base lexicon index out of range: " + std::to_string(base_index));
    }
    const ToyLanguage& lang = language(code);
    std::string out;
    for (char c : base_lexicon[base_index]) {
        out += lang.cipher.at(c);
    }
    return out;
}

std::string ToyLanguageFamily::render_sentence(const std::string& code,
                                               const std::vector<int>& base_indices) const {
    std::string out;
    for (std::size_t i = 0; i < base_indices.size(); ++i) {
        if (i > 0) {
            out.push_back(' ');
        }
        out += render_word(code, base_indices[i]);
    }
    return out;
}

ToyLanguageFamily gen_family(std::uint64_t seed, int num_langs, int lexicon_size,
                             const std::vector<LetterRange>& ranges) {
    if (num_langs < 3) {
        throw invalid_input("a family needs at least 3 languages (source, target, pivot), got " +
                            std::to_string(num_langs));
    }
    if (lexicon_size < 2) {
        throw invalid_input("lexicon_size must be >= 2");
    }
    if (num_langs > static_cast<int>(ranges.size())) {
        throw invalid_input("insufficient disjoint letter ranges: need " +
                            std::to_string(num_langs) + ", have " +
                            std::to_string(ranges.size()));
    }
    for (const auto& r : ranges) {
        if (r.last < r.first + 25) {
            throw invalid_input(std::string("letter range too small for a cipher: ") +
                                r.block_name);
        }
    }

    Rng rng(mix_seed(seed, 0x11));

    ToyLanguageFamily family;
    std::set<std::string> seen;
    while (static_cast<int>(family.base_lexicon.size()) < lexicon_size) {
        int len = 3 + static_cast<int>(rng.below(5));
        std::string word;
        for (int i = 0; i < len; ++i) {
            word.push_back(static_cast<char>('a' + rng.below(26)));
        }
        if (seen.insert(word).second) {
            family.base_lexicon.push_back(std::move(word));
        }
    }
    family.function_word_count = std::min(5, lexicon_size / 2);

    for (int l = 0; l < num_langs; ++l) {
        ToyLanguage lang;
        lang.code = std::string(2, static_cast<char>('a' + l));

        // Fisher-Yates over the block's letters, then map a..z onto the
        // first 26 of the shuffle.
        std::vector<char32_t> letters;
        for (char32_t cp = ranges[l].first; cp <= ranges[l].last; ++cp) {
            letters.push_back(cp);
        }
        Rng lang_rng(mix_seed(seed, 0x100 + l));
        for (std::size_t i = letters.size() - 1; i > 0; --i) {
            std::swap(letters[i], letters[lang_rng.below(i + 1)]);
        }
        for (int c = 0; c < 26; ++c) {
            lang.cipher[static_cast<char>('a' + c)] = encode_utf8(letters[c]);
        }
        family.languages.push_back(std::move(lang));
    }
    family.pivot = family.languages.front().code;

    for (auto& lang : family.languages) {
        for (int f = 0; f < family.function_word_count; ++f) {
            std::string word;
            for (char c : family.base_lexicon[f]) {
                word += lang.cipher.at(c);
            }
            lang.function_words.push_back(std::move(word));
        }
    }
    return family;
}

std::vector<std::vector<int>> gen_base_sentences(const ToyLanguageFamily& family, int n,
                                                 std::pair<int, int> len_range,
                                                 std::uint64_t seed) {
    if (n < 1) {
        throw invalid_input("sentence count must be >= 1");
    }
    if (len_range.first < 1 || len_range.second < len_range.first) {
        throw invalid_input("bad sentence length range");
    }
    const int lex = static_cast<int>(family.base_lexicon.size());
    const int fwords = family.function_word_count;
    std::vector<std::vector<int>> sentences;
    sentences.reserve(n);
    for (int i = 0; i < n; ++i) {
        Rng rng(mix_seed(seed, 0x5EED + i));
        int len = len_range.first +
                  static_cast<int>(rng.below(len_range.second - len_range.first + 1));
        std::vector<int> indices;
        indices.reserve(len);
        for (int k = 0; k < len; ++k) {
            bool function_word =
                fwords > 0 && rng.below(1000) < static_cast<std::uint64_t>(1000 * kFunctionWordRate);
            indices.push_back(function_word ? static_cast<int>(rng.below(fwords))
                                            : static_cast<int>(rng.below(lex)));
        }
        sentences.push_back(std::move(indices));
    }
    return sentences;
}

TestSet gen_parallel_corpus(const ToyLanguageFamily& family, const std::string& source_lang,
                            const std::string& target_lang, int n_sentences,
                            std::pair<int, int> len_range, std::uint64_t seed) {
    family.language(source_lang);  // validates
    family.language(target_lang);
    auto sentences = gen_base_sentences(family, n_sentences, len_range, seed);
    TestSet set;
    set.items.reserve(sentences.size());
    for (const auto& base : sentences) {
        TestItem item;
        item.source = family.render_sentence(source_lang, base);
        item.reference = family.render_sentence(target_lang, base);
        item.source_lang = source_lang;
        item.target_lang = target_lang;
        set.items.push_back(std::move(item));
    }
    return set;
}

std::vector<LidExample> gen_lid_corpus(const ToyLanguageFamily& family, int per_language,
                                       std::pair<int, int> len_range, std::uint64_t seed) {
    if (per_language < 1) {
        throw invalid_input("per-language sentence count must be >= 1");
    }
    std::vector<LidExample> corpus;
    corpus.reserve(per_language * family.languages.size());
    for (std::size_t l = 0; l < family.languages.size(); ++l) {
        auto sentences =
            gen_base_sentences(family, per_language, len_range, mix_seed(seed, 0xC0 + l));
        for (const auto& base : sentences) {
            corpus.push_back({family.languages[l].code,
                              family.render_sentence(family.languages[l].code, base)});
        }
    }
    return corpus;
}

std::shared_ptr<SurrogateModel> build_surrogate(const ToyLanguageFamily& family,
                                                const std::string& source_lang,
                                                const std::string& target_lang,
                                                const SurrogateParams& params) {
    SurrogateSpec spec;
    spec.source_lang = source_lang;
    spec.target_lang = target_lang;
    spec.pivot_lang = family.pivot;
    spec.params = params;

    const int lex = static_cast<int>(family.base_lexicon.size());
    for (const auto& lang : family.languages) {
        std::vector<std::string> words;
        words.reserve(lex);
        for (int i = 0; i < lex; ++i) {
            words.push_back(family.render_word(lang.code, i));
        }
        spec.lexicons[lang.code] = std::move(words);
    }

    auto fill_dict = [&](const std::string& dst) {
        auto& dict = spec.dictionaries[source_lang + ">" + dst];
        for (int i = 0; i < lex; ++i) {
            dict[family.render_word(source_lang, i)] = family.render_word(dst, i);
        }
    };
    fill_dict(target_lang);
    fill_dict(family.pivot);

    return std::make_shared<SurrogateModel>(std::move(spec));
}

void ToyLanguageFamily::save(const std::string& path) const {
    nlohmann::json doc;
    doc["lexicon"] = base_lexicon;
    doc["pivot"] = pivot;
    doc["function_word_count"] = function_word_count;
    std::vector<std::string> codes;
    nlohmann::json ciphers;
    for (const auto& lang : languages) {
        codes.push_back(lang.code);
        nlohmann::json cipher;
        for (const auto& [base, letter] : lang.cipher) {
            cipher[std::string(1, base)] = letter;
        }
        ciphers[lang.code] = std::move(cipher);
    }
    doc["languages"] = codes;
    doc["ciphers"] = std::move(ciphers);

    std::ofstream out(path);
    if (!out) {
        throw invalid_input("cannot write family file: " + path);
    }
    out << doc.dump(2) << '\n';
}

ToyLanguageFamily ToyLanguageFamily::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw invalid_input("cannot open family file: " + path);
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(path + ": " + e.what());
    }
    try {
        ToyLanguageFamily family;
        family.base_lexicon = doc.at("lexicon").get<std::vector<std::string>>();
        family.pivot = doc.at("pivot").get<std::string>();
        family.function_word_count = doc.at("function_word_count").get<int>();
        for (const auto& code : doc.at("languages").get<std::vector<std::string>>()) {
            ToyLanguage lang;
            lang.code = code;
            for (const auto& [base, letter] : doc.at("ciphers").at(code).items()) {
                if (base.size() != 1) {
                    throw invalid_input("cipher keys must be single base letters");
                }
                lang.cipher[base[0]] = letter.get<std::string>();
            }
            for (int f = 0; f < family.function_word_count; ++f) {
                std::string word;
                for (char c : family.base_lexicon[f]) {
                    word += lang.cipher.at(c);
                }
                lang.function_words.push_back(std::move(word));
            }
            family.languages.push_back(std::move(lang));
        }
        return family;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path + ": " + e.what());
    }
}

}  // namespace libs
