#pragma once

#include <array>
#include <string>
#include <vector>

#include "libs/lid.hpp"

namespace libs {

enum class OffTargetLabel { OnTarget, ToEnglish, ToSource, Other };

const char* to_string(OffTargetLabel label);

struct OffTargetClassification {
    OffTargetLabel label = OffTargetLabel::Other;
    /// LiD argmax, empty when the text was empty.
    std::string detected_lang;
    bool empty_text = false;
};

/// Labels a translation by LiD argmax: OnTarget when detected == target;
/// ToEnglish when detected is the pivot language (and the pivot is not
/// the target); ToSource when detected is the source (and source !=
/// target); Other otherwise. Empty text classifies as Other with the
/// empty flag set.
OffTargetClassification classify_off_target(const LidModel& lid, const std::string& text,
                                            const std::string& target_lang,
                                            const std::string& source_lang,
                                            const std::string& pivot_lang);

struct OffTargetRates {
    double total_pct = 0.0;
    double to_english_pct = 0.0;
    double to_source_pct = 0.0;
    double other_pct = 0.0;
    long count = 0;
};

/// Percentages of each non-OnTarget category over all labels; categories
/// sum to the total exactly. Throws invalid_input on an empty list.
OffTargetRates off_target_rates(const std::vector<OffTargetLabel>& labels);

struct CopyHistogram {
    /// Bin i counts sentence BLEU values in [10*i, 10*(i+1)); the last
    /// bin includes 100.
    std::array<long, 10> bins{};
    double mean = 0.0;
    long count = 0;
};

/// Sentence BLEU of each output against its source, binned. Quantifies
/// source-copy behavior. Throws invalid_input on an empty list.
CopyHistogram copy_similarity_histogram(
    const std::vector<std::pair<std::string, std::string>>& source_output_pairs);

}  // namespace libs
