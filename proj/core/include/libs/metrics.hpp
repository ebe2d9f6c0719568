#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace libs {

/// mteval-13a style tokenization: HTML unescaping, punctuation splitting
/// with digit-adjacent period/comma/dash kept intact, whitespace split.
/// Non-ASCII characters pass through untouched.
std::vector<std::string> tokenize_13a(std::string_view text);

/// Case-sensitive corpus BLEU-4 over 13a tokens with exponential
/// smoothing of zero n-gram counts and brevity penalty. Returns [0,100].
/// Throws invalid_input on empty or length-mismatched inputs.
double corpus_bleu(const std::vector<std::string>& hypotheses,
                   const std::vector<std::string>& references);

/// Sentence BLEU-4 with floor smoothing (0.1 on zero counts), effective
/// n-gram order for short sentences, 13a tokens, brevity penalty.
double sentence_bleu(std::string_view hypothesis, std::string_view reference);

/// Character n-gram F-score, beta=2, orders 1..6 over whitespace-stripped
/// UTF-8 codepoints. Returns [0,100].
double chrf2(std::string_view hypothesis, std::string_view reference);

}  // namespace libs
