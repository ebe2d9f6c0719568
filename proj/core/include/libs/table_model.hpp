#pragma once

#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "libs/model.hpp"

namespace libs {

/// File-backed conditional-table model: an explicit next-token
/// distribution per listed (source, lang, prefix) state, with a uniform
/// distribution over the vocabulary for unlisted states.
///
/// File format (UTF-8 JSON):
///   {"vocab": "<path>",
///    "states": [{"source": str, "lang": str, "prefix": [ids],
///                "dist": {"<token string>": prob, ...}}, ...]}
/// The prefix lists BOS-initial token ids ([0] is the root state). A
/// relative vocab path is resolved against the model file's directory.
/// Each dist must sum to 1 within 1e-6 and is renormalized exactly on load.
class TableModel final : public AutoregressiveModel {
public:
    static std::shared_ptr<TableModel> load(const std::string& path);

    /// In-memory construction (tests, generators). Each entry maps a
    /// (source, lang, prefix) state to token-probability pairs.
    struct State {
        std::string source;
        std::string lang;
        std::vector<TokenId> prefix;
        std::vector<std::pair<TokenId, double>> dist;
    };
    TableModel(std::shared_ptr<const Vocabulary> vocab, std::vector<State> states);

    const Vocabulary& vocab() const override { return *vocab_; }

    std::vector<double> next_token_logprobs(const std::string& source,
                                            const std::string& target_lang,
                                            const Hypothesis& prefix) const override;

private:
    using Key = std::tuple<std::string, std::string, std::vector<TokenId>>;

    std::shared_ptr<const Vocabulary> vocab_;
    std::map<Key, std::vector<double>> table_;  // full logprob vectors
    std::vector<double> uniform_;
};

}  // namespace libs
