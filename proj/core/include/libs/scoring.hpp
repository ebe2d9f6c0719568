#pragma once

#include <span>

namespace libs {

/// Length-normalized score: logprob / length^lambda. Length counts
/// generated tokens excluding BOS (EOS included). lambda = 0 returns the
/// logprob unchanged. length = 0 throws invalid_input.
double normalized_score(double logprob, int length, double length_penalty);

/// Numerically stable log(sum(exp(x))) over a log-probability vector.
double log_sum_exp(std::span<const double> logprobs);

}  // namespace libs
