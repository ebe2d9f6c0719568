#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "libs/hypothesis.hpp"
#include "libs/vocabulary.hpp"

namespace libs {

/// Autoregressive next-token distribution conditioned on a source
/// sentence, a target-language tag, and the generated prefix.
///
/// Implementations must be deterministic for fixed inputs, emit
/// full-vocabulary natural-log probability vectors whose exp sums to 1
/// within 1e-9, and be immutable after construction so concurrent
/// read-only queries are safe.
class AutoregressiveModel {
public:
    virtual ~AutoregressiveModel() = default;

    virtual const Vocabulary& vocab() const = 0;

    /// Full-vocabulary log-probability vector for the next token.
    /// Throws invalid_state when the prefix is finished.
    virtual std::vector<double> next_token_logprobs(const std::string& source,
                                                    const std::string& target_lang,
                                                    const Hypothesis& prefix) const = 0;
};

/// Sums the per-step log probabilities of a token sequence (starting with
/// BOS) under the model. Used to verify stored scores independently.
double rescore_tokens(const AutoregressiveModel& model, const std::string& source,
                      const std::string& target_lang, std::span<const TokenId> tokens);

}  // namespace libs
