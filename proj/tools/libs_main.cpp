// libs: beam search decoding with language-informed rescoring, plus data
// generation, LiD training, sweeps, and trace tooling for studying
// off-target translation behavior on synthetic corpora.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "libs/datagen.hpp"
#include "libs/decode.hpp"
#include "libs/lid.hpp"
#include "libs/metrics.hpp"
#include "libs/offtarget.hpp"
#include "libs/surrogate.hpp"
#include "libs/sweep.hpp"
#include "libs/table_model.hpp"
#include "libs/testset.hpp"
#include "libs/thread_pool.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitBadInput = 2;

struct RunConfig {
    std::uint64_t seed = 1;

    struct Data {
        std::string dir = "data";
        int num_langs = 4;
        int lexicon_size = 24;
        std::string source_lang = "bb";
        std::string target_lang = "cc";
        int corpus_size = 200;
        std::pair<int, int> len_range{10, 14};
        int lid_sentences_per_lang = 150;
        std::pair<int, int> lid_len_range{4, 12};
    } data;

    struct Lid {
        std::string model_path;  // default: <output.dir>/lid_model.bin
        libs::LidConfig train;
        double holdout = 0.1;
    } lid;

    struct Model {
        std::string type = "surrogate";  // surrogate | table
        std::string path;                // default: <data.dir>/surrogate.json
        libs::SurrogateParams params;
    } model;

    struct Decode {
        libs::DecodeConfig config = [] {
            libs::DecodeConfig c;
            c.max_len = 0;  // auto: 2 * source length + 10
            return c;
        }();
        std::vector<int> sweep_beam_sizes{5, 10, 20};
        std::vector<double> sweep_alphas{0.0, 0.25, 0.5, 1.0, 2.0, 5.0};
    } decode;

    struct Output {
        std::string dir = "out";
        std::vector<std::string> formats{"tsv", "json"};
    } output;

    int workers = 0;  // 0: LIBS_WORKERS env or hardware concurrency

    std::string family_path() const { return data.dir + "/family.json"; }
    std::string source_path() const { return data.dir + "/source.txt"; }
    std::string reference_path() const { return data.dir + "/reference.txt"; }
    std::string meta_path() const { return data.dir + "/meta.tsv"; }
    std::string lid_corpus_path() const { return data.dir + "/lid_train.tsv"; }
    std::string model_path() const {
        return model.path.empty() ? data.dir + "/surrogate.json" : model.path;
    }
    std::string lid_model_path() const {
        return lid.model_path.empty() ? output.dir + "/lid_model.bin" : lid.model_path;
    }
};

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::string& context) {
    for (const auto& [key, value] : obj.items()) {
        if (allowed.count(key) == 0) {
            throw libs::invalid_input("unknown config key \"" + key + "\" in " + context);
        }
    }
}

std::pair<int, int> read_range(const json& value, const std::string& context) {
    auto v = value.get<std::vector<int>>();
    if (v.size() != 2 || v[0] < 1 || v[1] < v[0]) {
        throw libs::invalid_input("bad length range in " + context);
    }
    return {v[0], v[1]};
}

void parse_mode_params(const json& obj, libs::SurrogateParams& params,
                       double libs::SurrogateModeParams::*field, const std::string& context) {
    require_keys(obj, {"target", "english", "copy"}, context);
    if (obj.contains("target")) params.target.*field = obj["target"].get<double>();
    if (obj.contains("english")) params.english.*field = obj["english"].get<double>();
    if (obj.contains("copy")) params.copy.*field = obj["copy"].get<double>();
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw libs::invalid_input("cannot open config file: " + path);
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw libs::parse_error(path + ": " + e.what());
    }

    RunConfig cfg;
    require_keys(doc, {"seed", "data", "lid", "model", "decode", "output", "workers"}, path);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.workers = doc.value("workers", cfg.workers);

    if (doc.contains("data")) {
        const json& d = doc["data"];
        require_keys(d,
                     {"dir", "num_langs", "lexicon_size", "source_lang", "target_lang",
                      "corpus_size", "len_range", "lid_sentences_per_lang", "lid_len_range"},
                     "data");
        cfg.data.dir = d.value("dir", cfg.data.dir);
        cfg.data.num_langs = d.value("num_langs", cfg.data.num_langs);
        cfg.data.lexicon_size = d.value("lexicon_size", cfg.data.lexicon_size);
        cfg.data.source_lang = d.value("source_lang", cfg.data.source_lang);
        cfg.data.target_lang = d.value("target_lang", cfg.data.target_lang);
        cfg.data.corpus_size = d.value("corpus_size", cfg.data.corpus_size);
        if (d.contains("len_range")) {
            cfg.data.len_range = read_range(d["len_range"], "data.len_range");
        }
        cfg.data.lid_sentences_per_lang =
            d.value("lid_sentences_per_lang", cfg.data.lid_sentences_per_lang);
        if (d.contains("lid_len_range")) {
            cfg.data.lid_len_range = read_range(d["lid_len_range"], "data.lid_len_range");
        }
    }

    if (doc.contains("lid")) {
        const json& l = doc["lid"];
        require_keys(l,
                     {"model", "ngram_range", "feature_dim", "epochs", "learning_rate",
                      "holdout"},
                     "lid");
        cfg.lid.model_path = l.value("model", cfg.lid.model_path);
        if (l.contains("ngram_range")) {
            auto r = read_range(l["ngram_range"], "lid.ngram_range");
            cfg.lid.train.ngram_min = r.first;
            cfg.lid.train.ngram_max = r.second;
        }
        cfg.lid.train.feature_dim = l.value("feature_dim", cfg.lid.train.feature_dim);
        cfg.lid.train.epochs = l.value("epochs", cfg.lid.train.epochs);
        cfg.lid.train.learning_rate = l.value("learning_rate", cfg.lid.train.learning_rate);
        cfg.lid.holdout = l.value("holdout", cfg.lid.holdout);
        if (cfg.lid.holdout <= 0.0 || cfg.lid.holdout >= 1.0) {
            throw libs::invalid_input("lid.holdout must be in (0,1)");
        }
    }
    cfg.lid.train.seed = cfg.seed;

    if (doc.contains("model")) {
        const json& m = doc["model"];
        require_keys(m, {"type", "path", "pi", "rho", "branch"}, "model");
        cfg.model.type = m.value("type", cfg.model.type);
        cfg.model.path = m.value("path", cfg.model.path);
        if (cfg.model.type != "surrogate" && cfg.model.type != "table") {
            throw libs::invalid_input("model.type must be surrogate or table");
        }
        if (m.contains("pi")) {
            parse_mode_params(m["pi"], cfg.model.params, &libs::SurrogateModeParams::pi,
                              "model.pi");
        }
        if (m.contains("rho")) {
            parse_mode_params(m["rho"], cfg.model.params, &libs::SurrogateModeParams::rho,
                              "model.rho");
        }
        if (m.contains("branch")) {
            require_keys(m["branch"], {"target", "english", "copy"}, "model.branch");
            for (libs::SurrogateMode mode :
                 {libs::SurrogateMode::target, libs::SurrogateMode::english,
                  libs::SurrogateMode::copy}) {
                const char* name = libs::to_string(mode);
                if (m["branch"].contains(name)) {
                    require_keys(m["branch"][name], {"count", "mass"},
                                 std::string("model.branch.") + name);
                    cfg.model.params.of(mode).first_alternates =
                        m["branch"][name].value("count", 0);
                    cfg.model.params.of(mode).alternate_mass =
                        m["branch"][name].value("mass", 0.0);
                }
            }
        }
    }

    if (doc.contains("decode")) {
        const json& d = doc["decode"];
        require_keys(d,
                     {"beam_size", "window", "alpha", "length_penalty", "max_len",
                      "sweep_beam_sizes", "sweep_alphas"},
                     "decode");
        cfg.decode.config.beam_size = d.value("beam_size", cfg.decode.config.beam_size);
        cfg.decode.config.window = d.value("window", cfg.decode.config.window);
        cfg.decode.config.alpha = d.value("alpha", cfg.decode.config.alpha);
        cfg.decode.config.length_penalty =
            d.value("length_penalty", cfg.decode.config.length_penalty);
        cfg.decode.config.max_len = d.value("max_len", cfg.decode.config.max_len);
        if (d.contains("sweep_beam_sizes")) {
            cfg.decode.sweep_beam_sizes = d["sweep_beam_sizes"].get<std::vector<int>>();
        }
        if (d.contains("sweep_alphas")) {
            cfg.decode.sweep_alphas = d["sweep_alphas"].get<std::vector<double>>();
        }
    }

    if (doc.contains("output")) {
        const json& o = doc["output"];
        require_keys(o, {"dir", "formats"}, "output");
        cfg.output.dir = o.value("dir", cfg.output.dir);
        if (o.contains("formats")) {
            cfg.output.formats = o["formats"].get<std::vector<std::string>>();
            for (const auto& f : cfg.output.formats) {
                if (f != "tsv" && f != "json") {
                    throw libs::invalid_input("output.formats entries must be tsv or json");
                }
            }
        }
    }
    return cfg;
}

struct CommonFlags {
    std::string config_path;
    int workers = -1;
    std::int64_t seed = -1;
    std::string output_dir;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Run configuration JSON file")
        ->required();
    cmd->add_option("--workers", flags.workers,
                    "Worker threads (overrides config and LIBS_WORKERS)");
    cmd->add_option("--seed", flags.seed, "Seed override");
    cmd->add_option("--output-dir", flags.output_dir, "Output directory override");
}

RunConfig resolve_config(const CommonFlags& flags) {
    RunConfig cfg = load_config(flags.config_path);
    // Flags take precedence over config values.
    if (flags.workers >= 0) {
        cfg.workers = flags.workers;
    }
    if (flags.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(flags.seed);
        cfg.lid.train.seed = cfg.seed;
    }
    if (!flags.output_dir.empty()) {
        cfg.output.dir = flags.output_dir;
    }
    return cfg;
}

std::size_t worker_count(const RunConfig& cfg) {
    if (cfg.workers > 0) {
        return static_cast<std::size_t>(cfg.workers);
    }
    return libs::default_worker_count();
}

void require_file(const std::string& path, const std::string& role) {
    if (!fs::exists(path)) {
        throw libs::invalid_input(role + " file not found: " + path +
                                  " (run gen-data / train-lid first?)");
    }
}

void ensure_parent_dir(const std::string& path) {
    fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) {
        fs::create_directories(parent);
    }
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) {
        throw libs::error("cannot write " + path);
    }
    out << content;
}

bool wants_format(const RunConfig& cfg, const std::string& fmt) {
    for (const auto& f : cfg.output.formats) {
        if (f == fmt) {
            return true;
        }
    }
    return false;
}

std::shared_ptr<libs::AutoregressiveModel> load_model(const RunConfig& cfg) {
    require_file(cfg.model_path(), "model");
    if (cfg.model.type == "table") {
        return libs::TableModel::load(cfg.model_path());
    }
    return libs::SurrogateModel::load(cfg.model_path());
}

// ---------------------------------------------------------------------
// Commands

int cmd_gen_data(const RunConfig& cfg) {
    fs::create_directories(cfg.data.dir);

    auto family = libs::gen_family(cfg.seed, cfg.data.num_langs, cfg.data.lexicon_size);
    family.save(cfg.family_path());

    auto testset =
        libs::gen_parallel_corpus(family, cfg.data.source_lang, cfg.data.target_lang,
                                  cfg.data.corpus_size, cfg.data.len_range, cfg.seed + 1);
    testset.save(cfg.source_path(), cfg.reference_path(), cfg.meta_path());

    auto lid_corpus = libs::gen_lid_corpus(family, cfg.data.lid_sentences_per_lang,
                                           cfg.data.lid_len_range, cfg.seed + 2);
    libs::save_lid_corpus(lid_corpus, cfg.lid_corpus_path());

    if (cfg.model.type == "surrogate") {
        auto surrogate = libs::build_surrogate(family, cfg.data.source_lang,
                                               cfg.data.target_lang, cfg.model.params);
        ensure_parent_dir(cfg.model_path());
        surrogate->save(cfg.model_path());
        std::cout << "surrogate: " << cfg.model_path() << "\n";
    }

    std::cout << "family: " << cfg.family_path() << " (" << family.languages.size()
              << " languages, pivot " << family.pivot << ")\n"
              << "testset: " << testset.size() << " sentences " << cfg.data.source_lang
              << "->" << cfg.data.target_lang << "\n"
              << "lid corpus: " << lid_corpus.size() << " lines\n";
    return 0;
}

int cmd_train_lid(const RunConfig& cfg) {
    require_file(cfg.lid_corpus_path(), "LiD training corpus");
    auto corpus = libs::load_lid_corpus(cfg.lid_corpus_path());

    // Deterministic shuffle, last fraction held out.
    std::uint64_t state = cfg.seed * 6364136223846793005ull + 1442695040888963407ull;
    for (std::size_t i = corpus.size() - 1; i > 0; --i) {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        std::swap(corpus[i], corpus[state % (i + 1)]);
    }
    std::size_t holdout =
        std::max<std::size_t>(1, static_cast<std::size_t>(corpus.size() * cfg.lid.holdout));
    if (holdout >= corpus.size()) {
        throw libs::invalid_input("holdout fraction leaves no training data");
    }
    std::vector<libs::LidExample> heldout(corpus.end() - holdout, corpus.end());
    corpus.resize(corpus.size() - holdout);

    auto model = libs::train_lid(corpus, cfg.lid.train);
    ensure_parent_dir(cfg.lid_model_path());
    model.save(cfg.lid_model_path());

    double accuracy = libs::lid_accuracy(model, heldout);
    fs::create_directories(cfg.output.dir);
    json report{{"model", cfg.lid_model_path()},
                {"languages", model.languages()},
                {"train_size", corpus.size()},
                {"heldout_size", heldout.size()},
                {"heldout_accuracy", accuracy}};
    if (wants_format(cfg, "json")) {
        write_text(cfg.output.dir + "/lid_report.json", report.dump(2) + "\n");
    }
    std::cout << "lid model: " << cfg.lid_model_path() << "\n"
              << "held-out accuracy: " << accuracy * 100.0 << "% (" << heldout.size()
              << " sentences)\n";
    return 0;
}

int cmd_decode(const RunConfig& cfg, const std::string& engine_name) {
    libs::DecodeEngine engine = libs::decode_engine_from_string(engine_name);
    require_file(cfg.source_path(), "test set source");
    require_file(cfg.lid_model_path(), "LiD model");
    require_file(cfg.family_path(), "family");

    auto model = load_model(cfg);
    auto lid = libs::LidModel::load(cfg.lid_model_path());
    auto family = libs::ToyLanguageFamily::load(cfg.family_path());
    auto testset =
        libs::TestSet::load(cfg.source_path(), cfg.reference_path(), cfg.meta_path());

    libs::ThreadPool pool(worker_count(cfg));
    auto decodes =
        libs::decode_testset(engine, *model, &lid, testset, cfg.decode.config, &pool);
    auto summary = libs::evaluate_decodes(decodes, testset, lid, family.pivot);

    fs::create_directories(cfg.output.dir);
    std::string jsonl_path = cfg.output.dir + "/decodes_" + engine_name + ".jsonl";
    {
        std::ofstream out(jsonl_path);
        for (const auto& result : decodes) {
            out << libs::decode_result_to_json(result) << '\n';
        }
    }

    json jsummary{{"engine", engine_name},
                  {"sentences", testset.size()},
                  {"bleu", summary.bleu},
                  {"off_target_pct", summary.rates.total_pct},
                  {"to_english_pct", summary.rates.to_english_pct},
                  {"to_source_pct", summary.rates.to_source_pct},
                  {"other_pct", summary.rates.other_pct}};
    if (wants_format(cfg, "json")) {
        write_text(cfg.output.dir + "/summary_" + engine_name + ".json",
                   jsummary.dump(2) + "\n");
    }
    if (wants_format(cfg, "tsv")) {
        std::ostringstream tsv;
        tsv << "engine\tbleu\toff_target_pct\tto_english_pct\tto_source_pct\tother_pct\n"
            << engine_name << '\t' << summary.bleu << '\t' << summary.rates.total_pct
            << '\t' << summary.rates.to_english_pct << '\t' << summary.rates.to_source_pct
            << '\t' << summary.rates.other_pct << '\n';
        write_text(cfg.output.dir + "/summary_" + engine_name + ".tsv", tsv.str());
    }
    std::cout << "decodes: " << jsonl_path << "\n"
              << "BLEU " << summary.bleu << "  Off-Tgt " << summary.rates.total_pct
              << "%\n";
    return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::string& axis, const std::string& engine_name) {
    require_file(cfg.source_path(), "test set source");
    require_file(cfg.lid_model_path(), "LiD model");
    require_file(cfg.family_path(), "family");

    auto model = load_model(cfg);
    auto lid = libs::LidModel::load(cfg.lid_model_path());
    auto family = libs::ToyLanguageFamily::load(cfg.family_path());
    auto testset =
        libs::TestSet::load(cfg.source_path(), cfg.reference_path(), cfg.meta_path());

    libs::ThreadPool pool(worker_count(cfg));
    libs::SweepReport report;
    std::string stem;
    if (axis == "beam") {
        libs::DecodeEngine engine = libs::decode_engine_from_string(engine_name);
        report = libs::sweep_beam(engine, *model, lid, testset, cfg.decode.sweep_beam_sizes,
                                  cfg.decode.config, family.pivot, &pool);
        stem = cfg.output.dir + "/sweep_beam_" + engine_name;
    } else if (axis == "alpha") {
        report = libs::sweep_alpha(*model, lid, testset, cfg.decode.sweep_alphas,
                                   cfg.decode.config, family.pivot, &pool);
        stem = cfg.output.dir + "/sweep_alpha";
    } else {
        throw libs::invalid_input("sweep axis must be beam or alpha, got " + axis);
    }

    fs::create_directories(cfg.output.dir);
    if (wants_format(cfg, "tsv")) {
        write_text(stem + ".tsv", report.to_tsv());
    }
    if (wants_format(cfg, "json")) {
        write_text(stem + ".json", report.to_json() + "\n");
    }
    std::cout << report.to_tsv();
    return 0;
}

int cmd_analyze(const RunConfig& cfg, const std::string& decodes_path) {
    require_file(decodes_path, "decode output");
    require_file(cfg.lid_model_path(), "LiD model");
    require_file(cfg.family_path(), "family");

    auto lid = libs::LidModel::load(cfg.lid_model_path());
    auto family = libs::ToyLanguageFamily::load(cfg.family_path());
    auto testset =
        libs::TestSet::load(cfg.source_path(), cfg.reference_path(), cfg.meta_path());

    std::vector<libs::DecodeResult> decodes;
    {
        std::ifstream in(decodes_path);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty()) {
                decodes.push_back(libs::decode_result_from_json(line));
            }
        }
    }
    if (decodes.size() != testset.size()) {
        throw libs::invalid_input("decode line count (" + std::to_string(decodes.size()) +
                                  ") does not match test set size (" +
                                  std::to_string(testset.size()) + ")");
    }

    std::vector<libs::OffTargetLabel> labels;
    std::vector<std::pair<std::string, std::string>> source_copy_pairs;
    for (std::size_t i = 0; i < decodes.size(); ++i) {
        const auto& item = testset.items[i];
        auto cls = libs::classify_off_target(lid, decodes[i].top().text, item.target_lang,
                                             item.source_lang, family.pivot);
        labels.push_back(cls.label);
        if (cls.label == libs::OffTargetLabel::ToSource) {
            source_copy_pairs.emplace_back(item.source, decodes[i].top().text);
        }
    }
    auto rates = libs::off_target_rates(labels);

    json doc{{"decodes", decodes_path},
             {"sentences", decodes.size()},
             {"off_target_pct", rates.total_pct},
             {"to_english_pct", rates.to_english_pct},
             {"to_source_pct", rates.to_source_pct},
             {"other_pct", rates.other_pct}};
    if (!source_copy_pairs.empty()) {
        auto hist = libs::copy_similarity_histogram(source_copy_pairs);
        doc["copy_similarity"] = {{"mean", hist.mean},
                                  {"count", hist.count},
                                  {"bins", hist.bins}};
    } else {
        doc["copy_similarity"] = nullptr;
    }

    fs::create_directories(cfg.output.dir);
    if (wants_format(cfg, "json")) {
        write_text(cfg.output.dir + "/analysis.json", doc.dump(2) + "\n");
    }
    if (wants_format(cfg, "tsv")) {
        std::ostringstream tsv;
        tsv << "off_target_pct\tto_english_pct\tto_source_pct\tother_pct\tcount\n"
            << rates.total_pct << '\t' << rates.to_english_pct << '\t'
            << rates.to_source_pct << '\t' << rates.other_pct << '\t' << rates.count
            << '\n';
        write_text(cfg.output.dir + "/analysis.tsv", tsv.str());
    }
    std::cout << "Off-Tgt " << rates.total_pct << "%  ->English "
              << rates.to_english_pct << "%  ->Source " << rates.to_source_pct
              << "%  Others " << rates.other_pct << "%\n";
    return 0;
}

int cmd_trace(const RunConfig& cfg, long index, const std::string& engine_name,
              const std::vector<int>& sizes) {
    require_file(cfg.source_path(), "test set source");
    require_file(cfg.lid_model_path(), "LiD model");

    auto model = load_model(cfg);
    auto lid = libs::LidModel::load(cfg.lid_model_path());
    auto testset =
        libs::TestSet::load(cfg.source_path(), cfg.reference_path(), cfg.meta_path());
    if (index < 0 || index >= static_cast<long>(testset.size())) {
        throw libs::invalid_input("sentence index " + std::to_string(index) +
                                  " out of range (test set holds " +
                                  std::to_string(testset.size()) + ")");
    }
    libs::DecodeEngine engine = libs::decode_engine_from_string(engine_name);
    const libs::TestItem& item = testset.items[static_cast<std::size_t>(index)];

    fs::create_directories(cfg.output.dir);
    std::vector<libs::BeamTrace> traces;
    for (int b : sizes) {
        libs::DecodeConfig dcfg = cfg.decode.config;
        dcfg.beam_size = b;
        dcfg.target_lang = item.target_lang;
        dcfg.source_lang = item.source_lang;
        if (dcfg.max_len <= 0) {
            dcfg.max_len = libs::default_max_len(item.source);
        }
        auto traced = libs::trace_decode(engine, *model, lid, item.source, dcfg);

        // Integrity: every final candidate rescores to its stored model
        // score.
        for (const auto& cand : traced.result.candidates) {
            double rescored =
                libs::rescore_tokens(*model, item.source, item.target_lang, cand.tokens);
            if (std::abs(rescored - cand.nmt_score) > 1e-6) {
                throw libs::error("trace rescoring mismatch at b=" + std::to_string(b));
            }
        }

        std::string path = cfg.output.dir + "/trace_" + engine_name + "_b" +
                           std::to_string(b) + ".tsv";
        write_text(path, traced.trace.to_tsv());
        traces.push_back(std::move(traced.trace));
        std::cout << "trace b=" << b << ": " << path << " (top-1: \""
                  << traced.result.top().text << "\")\n";
    }

    // Paired view: the per-size beam tables next to each other.
    if (sizes.size() > 1) {
        std::ostringstream out;
        out << "step\trank";
        for (int b : sizes) {
            out << "\ttext_b" << b << "\tlid_b" << b << "\tlogprob_b" << b;
        }
        out << "\n";
        out.precision(10);
        std::size_t max_steps = 0;
        for (const auto& t : traces) {
            max_steps = std::max(max_steps, t.steps.size());
        }
        for (std::size_t s_i = 0; s_i < max_steps; ++s_i) {
            std::size_t max_rank = 0;
            for (const auto& t : traces) {
                if (s_i < t.steps.size()) {
                    max_rank = std::max(max_rank, t.steps[s_i].size());
                }
            }
            for (std::size_t r = 0; r < max_rank; ++r) {
                out << (s_i + 1) << '\t' << (r + 1);
                for (const auto& t : traces) {
                    if (s_i < t.steps.size() && r < t.steps[s_i].size()) {
                        const auto& e = t.steps[s_i][r];
                        out << '\t' << e.text << '\t' << e.lid_label << '\t' << e.logprob;
                    } else {
                        out << "\t\t\t";
                    }
                }
                out << "\n";
            }
        }
        std::string path = cfg.output.dir + "/trace_" + engine_name + "_paired.tsv";
        write_text(path, out.str());
        std::cout << "paired trace: " << path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Beam search decoding with language-informed rescoring on synthetic "
                 "multilingual corpora"};
    app.require_subcommand(1);

    CommonFlags flags;

    auto* gen = app.add_subcommand("gen-data",
                                   "Generate a language family, corpora, and surrogate model");
    add_common_flags(gen, flags);

    auto* train = app.add_subcommand("train-lid", "Train the LiD classifier");
    add_common_flags(train, flags);

    auto* decode = app.add_subcommand("decode", "Decode the test set and report metrics");
    add_common_flags(decode, flags);
    std::string decode_engine = "libs";
    decode->add_option("--engine", decode_engine, "baseline | libs")
        ->check(CLI::IsMember({"baseline", "libs"}));
    double alpha_override = -1.0;
    int beam_override = 0;
    int window_override = 0;
    int max_len_override = -1;
    decode->add_option("--alpha", alpha_override, "Alpha override");
    decode->add_option("--beam-size", beam_override, "Beam size override");
    decode->add_option("--window", window_override, "Pre-select window override");
    decode->add_option("--max-len", max_len_override, "Max length override (0 = auto)");

    auto* sweep = app.add_subcommand("sweep", "Sweep beam sizes or alpha values");
    add_common_flags(sweep, flags);
    std::string sweep_axis;
    std::string sweep_engine = "baseline";
    int sweep_beam = 0;
    sweep->add_option("--axis", sweep_axis, "beam | alpha")
        ->required()
        ->check(CLI::IsMember({"beam", "alpha"}));
    sweep->add_option("--engine", sweep_engine, "Engine for beam sweeps")
        ->check(CLI::IsMember({"baseline", "libs"}));
    sweep->add_option("--beam-size", sweep_beam,
                      "Beam size for alpha sweeps (overrides config)");

    auto* analyze = app.add_subcommand("analyze", "Off-target taxonomy of a decode output");
    add_common_flags(analyze, flags);
    std::string decodes_path;
    std::string analyze_engine = "libs";
    analyze->add_option("--decodes", decodes_path, "Decode JSONL to analyze");
    analyze->add_option("--engine", analyze_engine,
                        "Pick the default decode file for this engine")
        ->check(CLI::IsMember({"baseline", "libs"}));

    auto* trace = app.add_subcommand("trace", "Per-step beam tables for one sentence");
    add_common_flags(trace, flags);
    long trace_index = 0;
    std::string trace_engine = "baseline";
    std::vector<int> trace_sizes{5, 20};
    trace->add_option("--index", trace_index, "Sentence index in the test set")->required();
    trace->add_option("--engine", trace_engine, "baseline | libs")
        ->check(CLI::IsMember({"baseline", "libs"}));
    trace->add_option("--beam-sizes", trace_sizes, "Beam sizes to trace")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitBadInput;
    }

    try {
        RunConfig cfg = resolve_config(flags);
        if (gen->parsed()) {
            return cmd_gen_data(cfg);
        }
        if (train->parsed()) {
            return cmd_train_lid(cfg);
        }
        if (decode->parsed()) {
            if (alpha_override >= 0.0) {
                cfg.decode.config.alpha = alpha_override;
            }
            if (beam_override > 0) {
                cfg.decode.config.beam_size = beam_override;
            }
            if (window_override > 0) {
                cfg.decode.config.window = window_override;
            }
            if (max_len_override >= 0) {
                cfg.decode.config.max_len = max_len_override;
            }
            return cmd_decode(cfg, decode_engine);
        }
        if (sweep->parsed()) {
            if (sweep_beam > 0) {
                cfg.decode.config.beam_size = sweep_beam;
            }
            return cmd_sweep(cfg, sweep_axis, sweep_engine);
        }
        if (analyze->parsed()) {
            if (decodes_path.empty()) {
                decodes_path = cfg.output.dir + "/decodes_" + analyze_engine + ".jsonl";
            }
            return cmd_analyze(cfg, decodes_path);
        }
        if (trace->parsed()) {
            return cmd_trace(cfg, trace_index, trace_engine, trace_sizes);
        }
        std::cerr << "no subcommand\n";
        return kExitBadInput;
    } catch (const libs::invalid_input& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}
