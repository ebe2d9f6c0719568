#include "libs/sweep.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "libs/metrics.hpp"

namespace libs {

std::vector<DecodeResult> decode_testset(DecodeEngine engine, const AutoregressiveModel& model,
                                         const LidModel* lid, const TestSet& testset,
                                         const DecodeConfig& config, ThreadPool* pool) {
    std::vector<DecodeResult> results(testset.size());
    std::vector<std::string> errors(testset.size());

    auto decode_one = [&](std::size_t i) {
        const TestItem& item = testset.items[i];
        DecodeConfig cfg = config;
        cfg.target_lang = item.target_lang;
        cfg.source_lang = item.source_lang;
        if (cfg.max_len <= 0) {
            cfg.max_len = default_max_len(item.source);
        }
        try {
            if (engine == DecodeEngine::baseline) {
                results[i] = beam_search(model, item.source, cfg);
            } else {
                results[i] = libs_decode(model, lid, item.source, cfg, pool);
            }
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };

    if (pool != nullptr && testset.size() > 1) {
        pool->parallel_for(testset.size(), decode_one);
    } else {
        for (std::size_t i = 0; i < testset.size(); ++i) {
            decode_one(i);
        }
    }
    for (std::size_t i = 0; i < testset.size(); ++i) {
        if (!errors[i].empty()) {
            throw error("decoding sentence " + std::to_string(i) + " failed: " + errors[i]);
        }
    }
    return results;
}

EvalSummary evaluate_decodes(const std::vector<DecodeResult>& decodes, const TestSet& testset,
                             const LidModel& lid, const std::string& pivot_lang) {
    if (decodes.size() != testset.size()) {
        throw invalid_input("decode count does not match test set size");
    }
    std::vector<std::string> hyps;
    std::vector<std::string> refs;
    std::vector<OffTargetLabel> labels;
    hyps.reserve(decodes.size());
    refs.reserve(decodes.size());
    labels.reserve(decodes.size());
    for (std::size_t i = 0; i < decodes.size(); ++i) {
        const TestItem& item = testset.items[i];
        const std::string& text = decodes[i].top().text;
        hyps.push_back(text);
        refs.push_back(item.reference);
        labels.push_back(classify_off_target(lid, text, item.target_lang, item.source_lang,
                                             pivot_lang)
                             .label);
    }
    EvalSummary summary;
    summary.bleu = corpus_bleu(hyps, refs);
    summary.rates = off_target_rates(labels);
    return summary;
}

SweepReport sweep_beam(DecodeEngine engine, const AutoregressiveModel& model,
                       const LidModel& lid, const TestSet& testset,
                       const std::vector<int>& sizes, const DecodeConfig& base_config,
                       const std::string& pivot_lang, ThreadPool* pool) {
    if (sizes.empty()) {
        throw invalid_input("sweep_beam requires at least one beam size");
    }
    SweepReport report;
    report.axis = "beam";
    for (int b : sizes) {
        DecodeConfig cfg = base_config;
        cfg.beam_size = b;
        try {
            auto decodes = decode_testset(engine, model, &lid, testset, cfg, pool);
            auto summary = evaluate_decodes(decodes, testset, lid, pivot_lang);
            report.rows.push_back({static_cast<double>(b), summary.bleu, summary.rates});
        } catch (const std::exception& e) {
            throw error("beam sweep at b=" + std::to_string(b) + ": " + e.what());
        }
    }
    return report;
}

SweepReport sweep_alpha(const AutoregressiveModel& model, const LidModel& lid,
                        const TestSet& testset, const std::vector<double>& alphas,
                        const DecodeConfig& base_config, const std::string& pivot_lang,
                        ThreadPool* pool) {
    if (alphas.empty()) {
        throw invalid_input("sweep_alpha requires at least one alpha");
    }
    if (!std::is_sorted(alphas.begin(), alphas.end())) {
        throw invalid_input("sweep_alpha requires non-decreasing alphas");
    }
    SweepReport report;
    report.axis = "alpha";
    for (double a : alphas) {
        DecodeConfig cfg = base_config;
        cfg.alpha = a;
        try {
            auto decodes =
                decode_testset(DecodeEngine::libs, model, &lid, testset, cfg, pool);
            auto summary = evaluate_decodes(decodes, testset, lid, pivot_lang);
            report.rows.push_back({a, summary.bleu, summary.rates});
        } catch (const std::exception& e) {
            throw error("alpha sweep at alpha=" + std::to_string(a) + ": " + e.what());
        }
    }
    return report;
}

namespace {
constexpr const char* kTsvHeader =
    "axis\tvalue\tbleu\toff_target_pct\tto_english_pct\tto_source_pct\tother_pct\tcount";
}

std::string SweepReport::to_tsv() const {
    std::ostringstream out;
    out << kTsvHeader << '\n';
    out << std::setprecision(10);
    for (const auto& row : rows) {
        out << axis << '\t' << row.axis_value << '\t' << row.bleu << '\t'
            << row.rates.total_pct << '\t' << row.rates.to_english_pct << '\t'
            << row.rates.to_source_pct << '\t' << row.rates.other_pct << '\t'
            << row.rates.count << '\n';
    }
    return out.str();
}

SweepReport SweepReport::from_tsv(const std::string& tsv) {
    SweepReport report;
    std::istringstream in(tsv);
    std::string line;
    long lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        if (first) {
            first = false;
            if (line.rfind("axis\t", 0) == 0) {
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
        if (fields.size() != 8) {
            throw parse_error("sweep report TSV", lineno, "expected 8 fields");
        }
        if (report.axis.empty()) {
            report.axis = fields[0];
        } else if (report.axis != fields[0]) {
            throw parse_error("sweep report TSV", lineno, "mixed axis names");
        }
        Row row;
        row.axis_value = std::stod(fields[1]);
        row.bleu = std::stod(fields[2]);
        row.rates.total_pct = std::stod(fields[3]);
        row.rates.to_english_pct = std::stod(fields[4]);
        row.rates.to_source_pct = std::stod(fields[5]);
        row.rates.other_pct = std::stod(fields[6]);
        row.rates.count = std::stol(fields[7]);
        report.rows.push_back(row);
    }
    return report;
}

std::string SweepReport::to_json() const {
    nlohmann::json doc;
    doc["axis"] = axis;
    doc["rows"] = nlohmann::json::array();
    for (const auto& row : rows) {
        doc["rows"].push_back({{"value", row.axis_value},
                               {"bleu", row.bleu},
                               {"off_target_pct", row.rates.total_pct},
                               {"to_english_pct", row.rates.to_english_pct},
                               {"to_source_pct", row.rates.to_source_pct},
                               {"other_pct", row.rates.other_pct},
                               {"count", row.rates.count}});
    }
    return doc.dump(2);
}

}  // namespace libs
