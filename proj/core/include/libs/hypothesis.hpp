#pragma once

#include <utility>
#include <vector>

#include "libs/errors.hpp"
#include "libs/vocabulary.hpp"

namespace libs {

/// A growing token sequence with its cumulative model log probability.
/// Token 0 is always BOS; a hypothesis is finished once its last token is
/// EOS and is never extended afterwards.
struct Hypothesis {
    std::vector<TokenId> tokens;
    double logprob = 0.0;
    bool finished = false;

    static Hypothesis initial(const Vocabulary& vocab) {
        return Hypothesis{{vocab.bos_id()}, 0.0, false};
    }

    /// Generated tokens, i.e. everything after BOS (EOS included).
    int generated_length() const { return static_cast<int>(tokens.size()) - 1; }

    TokenId last_token() const { return tokens.back(); }

    /// Value-semantic extension; throws invalid_state on finished input.
    Hypothesis extended(TokenId token, double token_logprob, const Vocabulary& vocab) const {
        if (finished) {
            throw invalid_state("cannot extend a finished hypothesis");
        }
        Hypothesis next;
        next.tokens.reserve(tokens.size() + 1);
        next.tokens = tokens;
        next.tokens.push_back(token);
        next.logprob = logprob + token_logprob;
        next.finished = (token == vocab.eos_id());
        return next;
    }
};

}  // namespace libs
