#pragma once

#include <optional>
#include <string>
#include <vector>

#include "libs/lid.hpp"
#include "libs/model.hpp"
#include "libs/thread_pool.hpp"

namespace libs {

struct DecodeConfig {
    int beam_size = 5;
    /// Continuations pre-selected from each beam before LiD scoring.
    int window = 2;
    /// Weight of the LiD log probability in the combined score. 0 turns
    /// LiD scoring off entirely.
    double alpha = 1.0;
    double length_penalty = 1.0;
    /// Maximum generated tokens per hypothesis, EOS included.
    int max_len = 64;
    std::string target_lang;
    std::string source_lang;

    void validate() const;
};

/// Maximum-length rule used when a config does not pin one.
int default_max_len(const std::string& source);

struct DecodeResult {
    struct Candidate {
        double final_score = 0.0;
        std::string text;
        /// Full token sequence including BOS (and EOS when finished).
        std::vector<TokenId> tokens;
        /// Cumulative model log probability; never contains the LiD term.
        double nmt_score = 0.0;
        /// LiD log probability of the full text as used in the final
        /// rerank; 0 when LiD scoring is off or the text is empty.
        double lid_logprob = 0.0;
        bool finished = true;
    };
    struct Stats {
        int steps = 0;
        long lid_calls = 0;
        long max_step_lid_calls = 0;
    };

    std::string source;
    std::string target_lang;
    /// Sorted descending by final_score; ties by nmt_score then token
    /// sequence. At most beam_size entries.
    std::vector<Candidate> candidates;
    Stats stats;

    const Candidate& top() const;
};

std::string decode_result_to_json(const DecodeResult& result);
DecodeResult decode_result_from_json(const std::string& json_line);

/// Per-step beam snapshot in the candidate-table format: for each step,
/// the top-b pool entries with their text, LiD label, and cumulative
/// model log probability.
struct BeamTrace {
    struct Entry {
        std::string text;
        std::string lid_label;
        double logprob = 0.0;
    };
    std::vector<std::vector<Entry>> steps;

    std::string to_tsv() const;
    static BeamTrace from_tsv(const std::string& tsv);
};

enum class DecodeEngine { baseline, libs };

DecodeEngine decode_engine_from_string(const std::string& name);
const char* to_string(DecodeEngine engine);

/// Standard beam search: full-vocabulary expansion, top-b by cumulative
/// model log probability, finished hypotheses collected from the top-b,
/// final ranking by length-normalized score. Stops once beam_size
/// hypotheses are finished or max_len is reached; leftover unfinished
/// candidates are emitted flagged.
DecodeResult beam_search(const AutoregressiveModel& model, const std::string& source,
                         const DecodeConfig& config);

/// Language-informed beam search: per step, the top-w continuations of
/// each beam are re-ranked by nmt_logprob + alpha * lid_logprob of the
/// detokenized candidate, the finished candidates within the top-b move
/// to the finished set (storing the model score only), and the top-b
/// unfinished candidates form the next beam. The first step widens the
/// window to fill all b beams from the shared BOS root. Finished
/// candidates are finally reranked by normalized model score +
/// alpha * lid_logprob.
///
/// `lid` may be null only when alpha is 0. `lid_pool`, when given, runs
/// each step's LiD scoring concurrently.
DecodeResult libs_decode(const AutoregressiveModel& model, const LidModel* lid,
                         const std::string& source, const DecodeConfig& config,
                         ThreadPool* lid_pool = nullptr);

/// All EOS-terminated sequences with up to max_len content tokens,
/// exactly ranked by normalized model score plus an optional
/// alpha-weighted LiD term. Refuses search spaces beyond 1e7 states.
struct RankedSequence {
    double final_score = 0.0;
    double nmt_score = 0.0;
    std::vector<TokenId> tokens;  // BOS-initial, EOS-terminated
    std::string text;
};
std::vector<RankedSequence> exhaustive_decode(const AutoregressiveModel& model,
                                              const std::string& source,
                                              const std::string& target_lang, int max_len,
                                              double length_penalty, double alpha = 0.0,
                                              const LidModel* lid = nullptr);

struct TraceResult {
    DecodeResult result;
    BeamTrace trace;
};

/// Runs either engine while recording the per-step beam table. The LiD
/// model is required here for labeling even when the baseline engine is
/// traced.
TraceResult trace_decode(DecodeEngine engine, const AutoregressiveModel& model,
                         const LidModel& lid, const std::string& source,
                         const DecodeConfig& config);

}  // namespace libs
