#include "libs/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "libs/scoring.hpp"

namespace libs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int count_words(const std::string& text) {
    std::istringstream in(text);
    std::string w;
    int n = 0;
    while (in >> w) {
        ++n;
    }
    return n;
}

struct PoolEntry {
    int beam_index;
    TokenId token;
    double step_logprob;
    double nmt;
    double combined;
    bool finished;
    std::string text;  // detokenized candidate, filled when needed
};

bool pool_less(const PoolEntry& a, const PoolEntry& b) {
    if (a.combined != b.combined) {
        return a.combined > b.combined;
    }
    if (a.nmt != b.nmt) {
        return a.nmt > b.nmt;
    }
    if (a.beam_index != b.beam_index) {
        return a.beam_index < b.beam_index;
    }
    return a.token < b.token;
}

struct CollectedCandidate {
    Hypothesis hyp;
    bool finished;
};

// Engine core shared by beam_search and libs_decode. `window` and
// `alpha` are already resolved; lid may be null iff alpha == 0 and no
// trace is recorded.
DecodeResult run_engine(const AutoregressiveModel& model, const LidModel* lid,
                        const std::string& source, const DecodeConfig& config, int window,
                        double alpha, ThreadPool* lid_pool, const LidModel* trace_lid,
                        BeamTrace* trace_out) {
    const Vocabulary& vocab = model.vocab();
    const TokenId bos = vocab.bos_id();
    const TokenId eos = vocab.eos_id();
    const int b = config.beam_size;
    const bool use_lid = alpha > 0.0;

    DecodeResult result;
    result.source = source;
    result.target_lang = config.target_lang;

    std::vector<Hypothesis> beam{Hypothesis::initial(vocab)};
    std::vector<CollectedCandidate> collected;

    std::vector<PoolEntry> pool;
    std::vector<std::pair<double, TokenId>> expansion;

    for (int step = 1; step <= config.max_len; ++step) {
        if (static_cast<int>(collected.size()) >= b || beam.empty()) {
            break;
        }
        pool.clear();
        // The first step expands the shared BOS root wide enough to fill
        // all b beams; the pre-select window only bites once beams
        // actually differ.
        int effective_window = step == 1 ? std::max(window, b) : window;
        for (int i = 0; i < static_cast<int>(beam.size()); ++i) {
            auto logprobs = model.next_token_logprobs(source, config.target_lang, beam[i]);
            expansion.clear();
            for (TokenId id = 0; id < static_cast<int>(logprobs.size()); ++id) {
                if (id == bos || logprobs[id] == -kInf) {
                    continue;  // BOS is never generated
                }
                expansion.emplace_back(logprobs[id], id);
            }
            int keep = std::min<int>(effective_window, static_cast<int>(expansion.size()));
            std::partial_sort(expansion.begin(), expansion.begin() + keep, expansion.end(),
                              [](const auto& x, const auto& y) {
                                  if (x.first != y.first) {
                                      return x.first > y.first;
                                  }
                                  return x.second < y.second;
                              });
            for (int k = 0; k < keep; ++k) {
                PoolEntry e;
                e.beam_index = i;
                e.token = expansion[k].second;
                e.step_logprob = expansion[k].first;
                e.nmt = beam[i].logprob + e.step_logprob;
                e.combined = e.nmt;
                e.finished = (e.token == eos);
                pool.push_back(std::move(e));
            }
        }
        if (pool.empty()) {
            break;
        }

        bool need_text = use_lid || trace_out != nullptr;
        if (need_text) {
            for (auto& e : pool) {
                std::vector<TokenId> tokens = beam[e.beam_index].tokens;
                tokens.push_back(e.token);
                e.text = vocab.detokenize(tokens);
            }
        }

        if (use_lid) {
            // Identical texts from different beams score once per step.
            std::unordered_map<std::string, double> cache;
            std::vector<std::string> unique_texts;
            for (const auto& e : pool) {
                if (!e.text.empty() && cache.emplace(e.text, 0.0).second) {
                    unique_texts.push_back(e.text);
                }
            }
            auto scores = lid_logprob_batch(*lid, unique_texts, config.target_lang, lid_pool);
            for (std::size_t u = 0; u < unique_texts.size(); ++u) {
                cache[unique_texts[u]] = scores[u];
            }
            result.stats.lid_calls += static_cast<long>(unique_texts.size());
            result.stats.max_step_lid_calls = std::max(
                result.stats.max_step_lid_calls, static_cast<long>(unique_texts.size()));
            for (auto& e : pool) {
                // Empty candidate text contributes a neutral LiD term.
                double lid_term = e.text.empty() ? 0.0 : cache[e.text];
                e.combined = e.nmt + alpha * lid_term;
            }
        }

        std::sort(pool.begin(), pool.end(), pool_less);

        if (trace_out != nullptr) {
            std::vector<BeamTrace::Entry> step_entries;
            int shown = std::min<int>(b, static_cast<int>(pool.size()));
            for (int k = 0; k < shown; ++k) {
                BeamTrace::Entry te;
                te.text = pool[k].text;
                te.lid_label =
                    pool[k].text.empty() ? "-" : lid_predict(*trace_lid, pool[k].text).first;
                te.logprob = pool[k].nmt;
                step_entries.push_back(std::move(te));
            }
            trace_out->steps.push_back(std::move(step_entries));
        }

        // Finished candidates within the top-b move to the finished set,
        // storing the model score only.
        int top = std::min<int>(b, static_cast<int>(pool.size()));
        for (int k = 0; k < top; ++k) {
            if (pool[k].finished) {
                const auto& parent = beam[pool[k].beam_index];
                collected.push_back(
                    {parent.extended(pool[k].token, pool[k].step_logprob, vocab), true});
            }
        }

        // Top-b unfinished candidates form the next beam.
        std::vector<Hypothesis> next_beam;
        for (const auto& e : pool) {
            if (static_cast<int>(next_beam.size()) >= b) {
                break;
            }
            if (!e.finished) {
                const auto& parent = beam[e.beam_index];
                next_beam.push_back(parent.extended(e.token, e.step_logprob, vocab));
            }
        }
        beam = std::move(next_beam);
        ++result.stats.steps;
    }

    // max_len reached with too few finished: best unfinished candidates
    // are finalized as-is and flagged.
    for (const auto& hyp : beam) {
        if (static_cast<int>(collected.size()) >= b) {
            break;
        }
        collected.push_back({hyp, false});
    }

    // Final rerank by normalized model score plus the LiD term of the
    // full candidate text.
    std::unordered_map<std::string, double> final_lid;
    for (const auto& c : collected) {
        DecodeResult::Candidate cand;
        cand.tokens = c.hyp.tokens;
        cand.nmt_score = c.hyp.logprob;
        cand.finished = c.finished;
        cand.text = vocab.detokenize(cand.tokens);
        if (use_lid && !cand.text.empty()) {
            auto it = final_lid.find(cand.text);
            if (it == final_lid.end()) {
                it = final_lid.emplace(cand.text,
                                       lid_logprob(*lid, cand.text, config.target_lang))
                         .first;
                ++result.stats.lid_calls;
            }
            cand.lid_logprob = it->second;
        }
        int length = std::max(1, c.hyp.generated_length());
        cand.final_score = normalized_score(cand.nmt_score, length, config.length_penalty) +
                           alpha * cand.lid_logprob;
        result.candidates.push_back(std::move(cand));
    }
    std::sort(result.candidates.begin(), result.candidates.end(),
              [](const DecodeResult::Candidate& a, const DecodeResult::Candidate& b2) {
                  if (a.final_score != b2.final_score) {
                      return a.final_score > b2.final_score;
                  }
                  if (a.nmt_score != b2.nmt_score) {
                      return a.nmt_score > b2.nmt_score;
                  }
                  return a.tokens < b2.tokens;
              });
    if (static_cast<int>(result.candidates.size()) > b) {
        result.candidates.resize(b);
    }
    return result;
}

}  // namespace

void DecodeConfig::validate() const {
    if (beam_size < 1) {
        throw invalid_input("beam_size must be >= 1");
    }
    if (window < 1) {
        throw invalid_input("window must be >= 1");
    }
    if (max_len < 1) {
        throw invalid_input("max_len must be >= 1");
    }
    if (alpha < 0.0) {
        throw invalid_input("alpha must be >= 0");
    }
    if (length_penalty < 0.0) {
        throw invalid_input("length_penalty must be >= 0");
    }
    if (target_lang.empty()) {
        throw invalid_input("target_lang must be set");
    }
}

int default_max_len(const std::string& source) {
    return 2 * count_words(source) + 10;
}

const DecodeResult::Candidate& DecodeResult::top() const {
    if (candidates.empty()) {
        throw invalid_state("decode produced no candidates");
    }
    return candidates.front();
}

DecodeResult beam_search(const AutoregressiveModel& model, const std::string& source,
                         const DecodeConfig& config) {
    config.validate();
    return run_engine(model, nullptr, source, config, model.vocab().size(), 0.0, nullptr,
                      nullptr, nullptr);
}

DecodeResult libs_decode(const AutoregressiveModel& model, const LidModel* lid,
                         const std::string& source, const DecodeConfig& config,
                         ThreadPool* lid_pool) {
    config.validate();
    if (config.alpha > 0.0 && lid == nullptr) {
        throw invalid_input("libs_decode with alpha > 0 requires a LiD model");
    }
    return run_engine(model, lid, source, config, config.window, config.alpha, lid_pool,
                      nullptr, nullptr);
}

TraceResult trace_decode(DecodeEngine engine, const AutoregressiveModel& model,
                         const LidModel& lid, const std::string& source,
                         const DecodeConfig& config) {
    config.validate();
    TraceResult out;
    if (engine == DecodeEngine::baseline) {
        out.result = run_engine(model, nullptr, source, config, model.vocab().size(), 0.0,
                                nullptr, &lid, &out.trace);
    } else {
        out.result = run_engine(model, &lid, source, config, config.window, config.alpha,
                                nullptr, &lid, &out.trace);
    }
    return out;
}

std::vector<RankedSequence> exhaustive_decode(const AutoregressiveModel& model,
                                              const std::string& source,
                                              const std::string& target_lang, int max_len,
                                              double length_penalty, double alpha,
                                              const LidModel* lid) {
    if (max_len < 1) {
        throw invalid_input("max_len must be >= 1");
    }
    if (alpha > 0.0 && lid == nullptr) {
        throw invalid_input("exhaustive_decode with alpha > 0 requires a LiD model");
    }
    const Vocabulary& vocab = model.vocab();
    double states = std::pow(static_cast<double>(vocab.size()), max_len);
    if (states > 1e7) {
        std::ostringstream msg;
        msg << "exhaustive search space too large: |V|^max_len = " << vocab.size() << "^"
            << max_len << " ~ " << states << " > 1e7";
        throw invalid_input(msg.str());
    }

    std::vector<RankedSequence> results;
    std::unordered_map<std::string, double> lid_cache;

    auto close_with_eos = [&](const Hypothesis& prefix, double eos_logprob) {
        Hypothesis done = prefix.extended(vocab.eos_id(), eos_logprob, vocab);
        RankedSequence seq;
        seq.nmt_score = done.logprob;
        seq.text = vocab.detokenize(done.tokens);
        double lid_term = 0.0;
        if (alpha > 0.0 && !seq.text.empty()) {
            auto it = lid_cache.find(seq.text);
            if (it == lid_cache.end()) {
                it = lid_cache.emplace(seq.text, lid_logprob(*lid, seq.text, target_lang))
                         .first;
            }
            lid_term = it->second;
        }
        int length = std::max(1, done.generated_length());
        seq.final_score =
            normalized_score(seq.nmt_score, length, length_penalty) + alpha * lid_term;
        seq.tokens = std::move(done.tokens);
        results.push_back(std::move(seq));
    };

    // Depth-first over content tokens (everything but BOS/EOS); each
    // prefix that can take EOS yields one complete sequence.
    auto expand = [&](auto&& self, const Hypothesis& prefix, int content_len) -> void {
        auto logprobs = model.next_token_logprobs(source, target_lang, prefix);
        if (logprobs[vocab.eos_id()] != -kInf) {
            close_with_eos(prefix, logprobs[vocab.eos_id()]);
        }
        if (content_len >= max_len) {
            return;
        }
        for (TokenId id = 0; id < static_cast<int>(logprobs.size()); ++id) {
            if (id == vocab.bos_id() || id == vocab.eos_id() || logprobs[id] == -kInf) {
                continue;
            }
            self(self, prefix.extended(id, logprobs[id], vocab), content_len + 1);
        }
    };
    expand(expand, Hypothesis::initial(vocab), 0);

    std::sort(results.begin(), results.end(),
              [](const RankedSequence& a, const RankedSequence& b) {
                  if (a.final_score != b.final_score) {
                      return a.final_score > b.final_score;
                  }
                  if (a.nmt_score != b.nmt_score) {
                      return a.nmt_score > b.nmt_score;
                  }
                  return a.tokens < b.tokens;
              });
    return results;
}

DecodeEngine decode_engine_from_string(const std::string& name) {
    if (name == "baseline") {
        return DecodeEngine::baseline;
    }
    if (name == "libs") {
        return DecodeEngine::libs;
    }
    throw invalid_input("unknown decode engine: " + name + " (expected baseline or libs)");
}

const char* to_string(DecodeEngine engine) {
    return engine == DecodeEngine::baseline ? "baseline" : "libs";
}

std::string decode_result_to_json(const DecodeResult& result) {
    nlohmann::json doc;
    doc["source"] = result.source;
    doc["target_lang"] = result.target_lang;
    doc["candidates"] = nlohmann::json::array();
    for (const auto& c : result.candidates) {
        doc["candidates"].push_back({{"text", c.text},
                                     {"final_score", c.final_score},
                                     {"nmt_score", c.nmt_score},
                                     {"lid_logprob", c.lid_logprob},
                                     {"finished", c.finished},
                                     {"tokens", c.tokens}});
    }
    doc["stats"] = {{"steps", result.stats.steps},
                    {"lid_calls", result.stats.lid_calls},
                    {"max_step_lid_calls", result.stats.max_step_lid_calls}};
    return doc.dump();
}

DecodeResult decode_result_from_json(const std::string& json_line) {
    DecodeResult result;
    try {
        auto doc = nlohmann::json::parse(json_line);
        result.source = doc.at("source").get<std::string>();
        result.target_lang = doc.at("target_lang").get<std::string>();
        for (const auto& jc : doc.at("candidates")) {
            DecodeResult::Candidate c;
            c.text = jc.at("text").get<std::string>();
            c.final_score = jc.at("final_score").get<double>();
            c.nmt_score = jc.at("nmt_score").get<double>();
            c.lid_logprob = jc.at("lid_logprob").get<double>();
            c.finished = jc.at("finished").get<bool>();
            c.tokens = jc.at("tokens").get<std::vector<TokenId>>();
            result.candidates.push_back(std::move(c));
        }
        result.stats.steps = doc.at("stats").at("steps").get<int>();
        result.stats.lid_calls = doc.at("stats").at("lid_calls").get<long>();
        result.stats.max_step_lid_calls =
            doc.at("stats").value("max_step_lid_calls", 0L);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("decode result JSON: ") + e.what());
    }
    return result;
}

std::string BeamTrace::to_tsv() const {
    std::ostringstream out;
    out << "step\trank\ttext\tlid_label\tlogprob\n";
    out.precision(10);
    for (std::size_t s = 0; s < steps.size(); ++s) {
        for (std::size_t r = 0; r < steps[s].size(); ++r) {
            const auto& e = steps[s][r];
            out << (s + 1) << '\t' << (r + 1) << '\t' << e.text << '\t' << e.lid_label
                << '\t' << e.logprob << '\n';
        }
    }
    return out.str();
}

BeamTrace BeamTrace::from_tsv(const std::string& tsv) {
    BeamTrace trace;
    std::istringstream in(tsv);
    std::string line;
    bool first = true;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        if (first) {
            first = false;
            if (line.rfind("step\t", 0) == 0) {
                continue;
            }
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == '\t') {
                fields.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (fields.size() != 5) {
            throw parse_error("beam trace TSV", lineno, "expected 5 tab-separated fields");
        }
        std::size_t step = std::stoul(fields[0]);
        std::size_t rank = std::stoul(fields[1]);
        if (step == 0 || rank == 0) {
            throw parse_error("beam trace TSV", lineno, "step and rank are 1-based");
        }
        if (trace.steps.size() < step) {
            trace.steps.resize(step);
        }
        if (trace.steps[step - 1].size() + 1 != rank) {
            throw parse_error("beam trace TSV", lineno, "ranks must be dense and in order");
        }
        trace.steps[step - 1].push_back({fields[2], fields[3], std::stod(fields[4])});
    }
    return trace;
}

}  // namespace libs
