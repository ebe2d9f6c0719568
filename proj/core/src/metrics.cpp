#include "libs/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <sstream>

#include "libs/errors.hpp"

namespace libs {

namespace {

constexpr int kBleuOrder = 4;
constexpr int kChrfOrder = 6;
constexpr double kChrfBeta = 2.0;
constexpr double kFloorSmoothValue = 0.1;
// Stand-in for log(0) so zero precisions drive the geometric mean to 0.
constexpr double kLogZero = -9999999999.0;

bool is_split_punct(char c) {
    auto u = static_cast<unsigned char>(c);
    // ASCII punctuation split unconditionally: everything printable that
    // is not alphanumeric, apostrophe, comma, hyphen, or period.
    return (u >= 0x20 && u <= 0x26) || (u >= 0x28 && u <= 0x2B) || u == 0x2F ||
           (u >= 0x3A && u <= 0x40) || (u >= 0x5B && u <= 0x60) || (u >= 0x7B && u <= 0x7E);
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

}  // namespace

std::vector<std::string> tokenize_13a(std::string_view text) {
    std::string line(text);
    replace_all(line, "<skipped>", "");
    replace_all(line, "-\n", "");
    replace_all(line, "\n", " ");
    if (line.find('&') != std::string::npos) {
        replace_all(line, "&quot;", "\"");
        replace_all(line, "&amp;", "&");
        replace_all(line, "&lt;", "<");
        replace_all(line, "&gt;", ">");
    }
    line = " " + line + " ";

    std::string out;
    out.reserve(line.size() * 2);
    auto prev = [&](std::size_t i) { return i == 0 ? '\0' : line[i - 1]; };
    auto next = [&](std::size_t i) { return i + 1 < line.size() ? line[i + 1] : '\0'; };
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (is_split_punct(c)) {
            out.push_back(' ');
            out.push_back(c);
            out.push_back(' ');
        } else if ((c == '.' || c == ',') && (!is_digit(prev(i)) || !is_digit(next(i)))) {
            // Period/comma stay attached only between digits.
            out.push_back(' ');
            out.push_back(c);
            out.push_back(' ');
        } else if (c == '-' && is_digit(prev(i))) {
            out.push_back(' ');
            out.push_back(c);
            out.push_back(' ');
        } else {
            out.push_back(c);
        }
    }

    std::vector<std::string> tokens;
    std::istringstream in(out);
    std::string tok;
    while (in >> tok) {
        tokens.push_back(tok);
    }
    return tokens;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, long>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, int n) {
    NgramCounts counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::vector<std::string> gram(tokens.begin() + i, tokens.begin() + i + n);
        ++counts[std::move(gram)];
    }
    return counts;
}

struct BleuStats {
    std::array<long, kBleuOrder> correct{};
    std::array<long, kBleuOrder> total{};
    long hyp_len = 0;
    long ref_len = 0;

    void add(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
        hyp_len += static_cast<long>(hyp.size());
        ref_len += static_cast<long>(ref.size());
        for (int n = 1; n <= kBleuOrder; ++n) {
            auto hyp_counts = count_ngrams(hyp, n);
            auto ref_counts = count_ngrams(ref, n);
            for (const auto& [gram, c] : hyp_counts) {
                total[n - 1] += c;
                auto it = ref_counts.find(gram);
                if (it != ref_counts.end()) {
                    correct[n - 1] += std::min(c, it->second);
                }
            }
        }
    }
};

enum class Smoothing { exponential, floor };

double compute_bleu(const BleuStats& stats, Smoothing smoothing, bool use_effective_order) {
    std::array<double, kBleuOrder> precisions{};
    double smooth_mteval = 1.0;
    int effective_order = kBleuOrder;
    for (int n = 1; n <= kBleuOrder; ++n) {
        if (stats.total[n - 1] == 0) {
            break;
        }
        if (use_effective_order) {
            effective_order = n;
        }
        if (stats.correct[n - 1] == 0) {
            if (smoothing == Smoothing::exponential) {
                smooth_mteval *= 2.0;
                precisions[n - 1] = 100.0 / (smooth_mteval * stats.total[n - 1]);
            } else {
                precisions[n - 1] = 100.0 * kFloorSmoothValue / stats.total[n - 1];
            }
        } else {
            precisions[n - 1] =
                100.0 * stats.correct[n - 1] / static_cast<double>(stats.total[n - 1]);
        }
    }

    double brevity_penalty = 1.0;
    if (stats.hyp_len < stats.ref_len) {
        brevity_penalty = stats.hyp_len > 0
                              ? std::exp(1.0 - static_cast<double>(stats.ref_len) /
                                                   stats.hyp_len)
                              : 0.0;
    }
    double log_sum = 0.0;
    for (int n = 0; n < effective_order; ++n) {
        log_sum += precisions[n] > 0.0 ? std::log(precisions[n]) : kLogZero;
    }
    return brevity_penalty * std::exp(log_sum / effective_order);
}

}  // namespace

double corpus_bleu(const std::vector<std::string>& hypotheses,
                   const std::vector<std::string>& references) {
    if (hypotheses.empty()) {
        throw invalid_input("corpus_bleu requires at least one sentence pair");
    }
    if (hypotheses.size() != references.size()) {
        throw invalid_input("corpus_bleu length mismatch: " +
                            std::to_string(hypotheses.size()) + " hypotheses vs " +
                            std::to_string(references.size()) + " references");
    }
    BleuStats stats;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
        stats.add(tokenize_13a(hypotheses[i]), tokenize_13a(references[i]));
    }
    return compute_bleu(stats, Smoothing::exponential, /*use_effective_order=*/false);
}

double sentence_bleu(std::string_view hypothesis, std::string_view reference) {
    auto hyp = tokenize_13a(hypothesis);
    auto ref = tokenize_13a(reference);
    if (hyp.empty() || ref.empty()) {
        throw invalid_input("sentence_bleu requires non-empty hypothesis and reference");
    }
    BleuStats stats;
    stats.add(hyp, ref);
    return compute_bleu(stats, Smoothing::floor, /*use_effective_order=*/true);
}

namespace {

// Codepoint-start offsets of the whitespace-stripped text.
std::pair<std::string, std::vector<std::size_t>> strip_and_index(std::string_view text) {
    std::string stripped;
    stripped.reserve(text.size());
    for (char c : text) {
        if (c != ' ' && c != '\t' && c != '\n' && c != '\r') {
            stripped.push_back(c);
        }
    }
    std::vector<std::size_t> starts;
    std::size_t i = 0;
    while (i < stripped.size()) {
        starts.push_back(i);
        auto byte = static_cast<unsigned char>(stripped[i]);
        std::size_t len = 1;
        if ((byte & 0xE0) == 0xC0) {
            len = 2;
        } else if ((byte & 0xF0) == 0xE0) {
            len = 3;
        } else if ((byte & 0xF8) == 0xF0) {
            len = 4;
        }
        i = std::min(i + len, stripped.size());
    }
    starts.push_back(stripped.size());
    return {std::move(stripped), std::move(starts)};
}

std::map<std::string_view, long> char_ngrams(const std::string& s,
                                             const std::vector<std::size_t>& starts, int n) {
    std::map<std::string_view, long> counts;
    int ncp = static_cast<int>(starts.size()) - 1;
    for (int i = 0; i + n <= ncp; ++i) {
        std::string_view gram(s.data() + starts[i], starts[i + n] - starts[i]);
        ++counts[gram];
    }
    return counts;
}

}  // namespace

double chrf2(std::string_view hypothesis, std::string_view reference) {
    auto [hyp, hyp_starts] = strip_and_index(hypothesis);
    auto [ref, ref_starts] = strip_and_index(reference);
    if (hyp.empty() || ref.empty()) {
        throw invalid_input("chrf2 requires non-empty hypothesis and reference");
    }

    double precision_sum = 0.0;
    double recall_sum = 0.0;
    int effective_order = 0;
    for (int n = 1; n <= kChrfOrder; ++n) {
        auto hyp_counts = char_ngrams(hyp, hyp_starts, n);
        auto ref_counts = char_ngrams(ref, ref_starts, n);
        long hyp_total = 0;
        long ref_total = 0;
        long matches = 0;
        for (const auto& [gram, c] : hyp_counts) {
            hyp_total += c;
            auto it = ref_counts.find(gram);
            if (it != ref_counts.end()) {
                matches += std::min(c, it->second);
            }
        }
        for (const auto& [gram, c] : ref_counts) {
            ref_total += c;
        }
        if (hyp_total > 0 && ref_total > 0) {
            precision_sum += static_cast<double>(matches) / hyp_total;
            recall_sum += static_cast<double>(matches) / ref_total;
            ++effective_order;
        }
    }
    if (effective_order == 0) {
        return 0.0;
    }
    double precision = precision_sum / effective_order;
    double recall = recall_sum / effective_order;
    if (precision + recall == 0.0) {
        return 0.0;
    }
    double beta_sq = kChrfBeta * kChrfBeta;
    return 100.0 * (1.0 + beta_sq) * precision * recall / (beta_sq * precision + recall);
}

}  // namespace libs
