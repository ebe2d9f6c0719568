#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "libs/lid.hpp"
#include "libs/surrogate.hpp"
#include "libs/testset.hpp"

namespace libs {

/// A contiguous block of letter codepoints used as one language's
/// alphabet. Blocks must hold at least 26 letters so a substitution
/// cipher over a-z fits.
struct LetterRange {
    char32_t first;
    char32_t last;
    const char* block_name;
};

/// The alphabetic blocks shipped with the repo, pairwise disjoint.
const std::vector<LetterRange>& builtin_letter_ranges();

struct ToyLanguage {
    std::string code;
    /// Substitution cipher: base letter a..z -> UTF-8 encoded letter.
    std::map<char, std::string> cipher;
    std::vector<std::string> function_words;
};

/// A family of cipher languages over a shared base lexicon. Each language
/// renders base words through its own alphabet, so character sets are
/// pairwise disjoint and word-level dictionaries between any two
/// languages are bijective. languages[0] acts as the pivot.
struct ToyLanguageFamily {
    std::vector<std::string> base_lexicon;
    std::vector<ToyLanguage> languages;
    std::string pivot;
    int function_word_count = 0;

    const ToyLanguage& language(const std::string& code) const;
    /// Renders one base word in a language's alphabet.
    std::string render_word(const std::string& code, int base_index) const;
    /// Renders a base-index sentence in a language.
    std::string render_sentence(const std::string& code, const std::vector<int>& base_indices) const;

    void save(const std::string& path) const;
    static ToyLanguageFamily load(const std::string& path);
};

/// Deterministic family generation. Requires num_langs >= 3 (source,
/// target, pivot) and enough disjoint letter ranges.
ToyLanguageFamily gen_family(std::uint64_t seed, int num_langs, int lexicon_size,
                             const std::vector<LetterRange>& ranges = builtin_letter_ranges());

/// Random base-index sentences; lengths uniform in [len_range.first,
/// len_range.second], function words upweighted.
std::vector<std::vector<int>> gen_base_sentences(const ToyLanguageFamily& family, int n,
                                                 std::pair<int, int> len_range,
                                                 std::uint64_t seed);

/// Word-aligned parallel test set for one direction.
TestSet gen_parallel_corpus(const ToyLanguageFamily& family, const std::string& source_lang,
                            const std::string& target_lang, int n_sentences,
                            std::pair<int, int> len_range, std::uint64_t seed);

/// Monolingual sentences for every family language, for LiD training.
std::vector<LidExample> gen_lid_corpus(const ToyLanguageFamily& family, int per_language,
                                       std::pair<int, int> len_range, std::uint64_t seed);

/// Builds the mode-mixture model for one direction of a family: the
/// target mode translates word-by-word, the english mode translates into
/// the pivot, the copy mode repeats the source.
std::shared_ptr<SurrogateModel> build_surrogate(const ToyLanguageFamily& family,
                                                const std::string& source_lang,
                                                const std::string& target_lang,
                                                const SurrogateParams& params = {});

}  // namespace libs
