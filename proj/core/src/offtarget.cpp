#include "libs/offtarget.hpp"

#include <algorithm>

#include "libs/metrics.hpp"

namespace libs {

const char* to_string(OffTargetLabel label) {
    switch (label) {
        case OffTargetLabel::OnTarget: return "on_target";
        case OffTargetLabel::ToEnglish: return "to_english";
        case OffTargetLabel::ToSource: return "to_source";
        case OffTargetLabel::Other: return "other";
    }
    return "?";
}

OffTargetClassification classify_off_target(const LidModel& lid, const std::string& text,
                                            const std::string& target_lang,
                                            const std::string& source_lang,
                                            const std::string& pivot_lang) {
    OffTargetClassification out;
    std::string trimmed = text;
    trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
    if (trimmed.empty()) {
        out.label = OffTargetLabel::Other;
        out.empty_text = true;
        return out;
    }
    out.detected_lang = lid_predict(lid, text).first;
    if (out.detected_lang == target_lang) {
        out.label = OffTargetLabel::OnTarget;
    } else if (out.detected_lang == pivot_lang) {
        out.label = OffTargetLabel::ToEnglish;
    } else if (out.detected_lang == source_lang) {
        out.label = OffTargetLabel::ToSource;
    } else {
        out.label = OffTargetLabel::Other;
    }
    return out;
}

OffTargetRates off_target_rates(const std::vector<OffTargetLabel>& labels) {
    if (labels.empty()) {
        throw invalid_input("off_target_rates over an empty label list");
    }
    long to_english = 0;
    long to_source = 0;
    long other = 0;
    for (OffTargetLabel l : labels) {
        switch (l) {
            case OffTargetLabel::ToEnglish: ++to_english; break;
            case OffTargetLabel::ToSource: ++to_source; break;
            case OffTargetLabel::Other: ++other; break;
            case OffTargetLabel::OnTarget: break;
        }
    }
    OffTargetRates rates;
    rates.count = static_cast<long>(labels.size());
    double n = static_cast<double>(rates.count);
    rates.to_english_pct = 100.0 * to_english / n;
    rates.to_source_pct = 100.0 * to_source / n;
    rates.other_pct = 100.0 * other / n;
    // Categories sum to the reported total exactly.
    rates.total_pct = rates.to_english_pct + rates.to_source_pct + rates.other_pct;
    return rates;
}

CopyHistogram copy_similarity_histogram(
    const std::vector<std::pair<std::string, std::string>>& source_output_pairs) {
    if (source_output_pairs.empty()) {
        throw invalid_input("copy_similarity_histogram over an empty pair list");
    }
    CopyHistogram hist;
    double sum = 0.0;
    for (const auto& [source, output] : source_output_pairs) {
        double bleu = sentence_bleu(output, source);
        sum += bleu;
        int bin = std::min(9, static_cast<int>(bleu / 10.0));
        ++hist.bins[bin];
        ++hist.count;
    }
    hist.mean = sum / hist.count;
    return hist;
}

}  // namespace libs
