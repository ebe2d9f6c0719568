#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "libs/model.hpp"

namespace libs {

/// The three scripted behaviors of the surrogate: translate into the
/// requested target language, translate into the pivot language, or copy
/// the source verbatim.
enum class SurrogateMode { target, english, copy };

const char* to_string(SurrogateMode mode);

struct SurrogateModeParams {
    /// First-token prior on the mode's scripted opening token.
    double pi = 0.0;
    /// Probability of the mode's scripted next token at every later step.
    double rho = 0.0;
    /// Number of alternate opening tokens drawn from the mode's output
    /// lexicon, sharing alternate_mass at the first step. Alternates open
    /// additional sequences in the same mode, so small beams can fill up
    /// with same-language variants.
    int first_alternates = 0;
    double alternate_mass = 0.0;
};

struct SurrogateParams {
    SurrogateModeParams target{0.6, 0.7, 4, 0.25};
    SurrogateModeParams english{0.05, 0.95, 0, 0.0};
    SurrogateModeParams copy{0.05, 0.9, 0, 0.0};

    const SurrogateModeParams& of(SurrogateMode mode) const;
    SurrogateModeParams& of(SurrogateMode mode);
};

/// Full description of a surrogate: the direction, per-language word
/// lexicons (pairwise disjoint), word-for-word dictionaries between the
/// source and each output language, and the mode parameters.
struct SurrogateSpec {
    std::string source_lang;
    std::string target_lang;
    std::string pivot_lang;
    /// lang code -> ordered word list; token strings are marker+word.
    std::map<std::string, std::vector<std::string>> lexicons;
    /// "src>dst" -> word-for-word map covering the whole source lexicon.
    std::map<std::string, std::map<std::string, std::string>> dictionaries;
    SurrogateParams params;
};

/// Steps-per-token crossover point between the on-target mode and an
/// off-target mode: sequences with more continuation steps than the
/// returned value accumulate a higher log probability under the
/// off-target mode. Throws invalid_input when rho_off <= rho_target
/// (no crossover exists).
double crossover_length(double pi_target, double pi_off, double rho_target, double rho_off);
double crossover_length(const SurrogateParams& params, SurrogateMode off_mode);

/// Mode-mixture autoregressive model over a disjoint-lexicon vocabulary.
///
/// The first generated token selects a mode: the scripted opening token
/// (prior pi) or one of its alternates picks that mode; anything else
/// leaves the sequence mode-less. Within a mode, the scripted token for
/// the current position carries rho and the remaining mass is spread
/// uniformly over the content vocabulary; mode-less prefixes see a
/// uniform content distribution. BOS gets no probability, and EOS only
/// appears where a script ends, so sequences terminate through the
/// scripted endings rather than by chance.
class SurrogateModel final : public AutoregressiveModel {
public:
    explicit SurrogateModel(SurrogateSpec spec);

    static std::shared_ptr<SurrogateModel> load(const std::string& path);
    void save(const std::string& path) const;

    const Vocabulary& vocab() const override { return *vocab_; }
    const SurrogateSpec& spec() const { return spec_; }

    std::vector<double> next_token_logprobs(const std::string& source,
                                            const std::string& target_lang,
                                            const Hypothesis& prefix) const override;

    /// The full scripted generated sequence (EOS included, BOS excluded)
    /// for a mode on the given source sentence.
    std::vector<TokenId> scripted_sequence(const std::string& source, SurrogateMode mode) const;

    /// Alternate opening tokens for a mode on the given source sentence.
    std::vector<TokenId> opening_alternates(const std::string& source, SurrogateMode mode) const;

    /// Language owning a token, or nullopt for BOS/EOS.
    std::optional<std::string> language_of_token(TokenId id) const;

private:
    struct Scripts {
        std::vector<TokenId> by_mode[3];      // full scripts incl. EOS
        std::vector<TokenId> alternates[3];   // opening alternates
    };
    Scripts build_scripts(const std::string& source) const;
    // A decode queries the same source hundreds of times; memoized
    // behind a shared mutex so concurrent readers stay cheap.
    std::shared_ptr<const Scripts> scripts_for(const std::string& source) const;

    mutable std::shared_mutex scripts_mutex_;
    mutable std::map<std::string, std::shared_ptr<const Scripts>> scripts_cache_;

    SurrogateSpec spec_;
    std::shared_ptr<Vocabulary> vocab_;
    std::map<std::string, std::string> token_lang_;        // token string -> lang
    std::vector<std::vector<TokenId>> lexicon_ids_;        // per mode-output language
    std::map<TokenId, TokenId> to_target_;                 // source token -> target token
    std::map<TokenId, TokenId> to_pivot_;                  // source token -> pivot token
    std::map<std::string, int> lexicon_pos_[3];            // word -> index in mode lexicon
};

}  // namespace libs
