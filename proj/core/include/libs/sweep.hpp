#pragma once

#include <string>
#include <vector>

#include "libs/decode.hpp"
#include "libs/offtarget.hpp"
#include "libs/testset.hpp"

namespace libs {

/// One table of (axis value, BLEU, off-target percentages) rows, the
/// experiment shape behind beam-size and alpha sweeps.
struct SweepReport {
    struct Row {
        double axis_value = 0.0;
        double bleu = 0.0;
        OffTargetRates rates;
    };

    std::string axis;  // "beam" or "alpha"
    std::vector<Row> rows;

    std::string to_tsv() const;
    static SweepReport from_tsv(const std::string& tsv);
    std::string to_json() const;
};

/// Decodes a test set once, returning top-1 texts in input order. Used
/// by the sweep runners and the CLI decode command. Sentences decode in
/// parallel when a pool is given; max_len 0 in the config means
/// 2 * source_length + 10 per sentence.
std::vector<DecodeResult> decode_testset(DecodeEngine engine, const AutoregressiveModel& model,
                                         const LidModel* lid, const TestSet& testset,
                                         const DecodeConfig& config,
                                         ThreadPool* pool = nullptr);

/// BLEU + off-target rates of top-1 outputs against the test set.
struct EvalSummary {
    double bleu = 0.0;
    OffTargetRates rates;
};
EvalSummary evaluate_decodes(const std::vector<DecodeResult>& decodes, const TestSet& testset,
                             const LidModel& lid, const std::string& pivot_lang);

/// One row per beam size; decode failures are annotated with the size.
SweepReport sweep_beam(DecodeEngine engine, const AutoregressiveModel& model,
                       const LidModel& lid, const TestSet& testset,
                       const std::vector<int>& sizes, const DecodeConfig& base_config,
                       const std::string& pivot_lang, ThreadPool* pool = nullptr);

/// One row per alpha (non-decreasing list required); every row runs the
/// language-informed engine, so alpha = 0 exercises the reduction to
/// plain beam search.
SweepReport sweep_alpha(const AutoregressiveModel& model, const LidModel& lid,
                        const TestSet& testset, const std::vector<double>& alphas,
                        const DecodeConfig& base_config, const std::string& pivot_lang,
                        ThreadPool* pool = nullptr);

}  // namespace libs
