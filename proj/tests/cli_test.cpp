#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "libs/decode.hpp"
#include "libs/sweep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(const std::string& args) {
    std::string cmd = std::string(LIBS_CLI_PATH) + " " + args +
                      " >cli_work/stdout.txt 2>cli_work/stderr.txt";
    int status = std::system(cmd.c_str());
    if (status < 0) {
        return -1;
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<libs::DecodeResult> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<libs::DecodeResult> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            out.push_back(libs::decode_result_from_json(line));
        }
    }
    return out;
}

void write_config(const std::string& path, const std::string& data_dir,
                  const std::string& out_dir) {
    json cfg{
        {"seed", 5},
        {"data",
         {{"dir", data_dir},
          {"num_langs", 4},
          {"lexicon_size", 20},
          {"source_lang", "bb"},
          {"target_lang", "cc"},
          {"corpus_size", 30},
          {"len_range", {10, 14}},
          {"lid_sentences_per_lang", 80},
          {"lid_len_range", {4, 10}}}},
        {"lid", {{"feature_dim", 16384}}},
        {"decode",
         {{"beam_size", 5},
          {"window", 2},
          {"alpha", 1.0},
          {"max_len", 0},
          {"sweep_beam_sizes", {5, 20}},
          {"sweep_alphas", {0.0, 1.0}}}},
        {"output", {{"dir", out_dir}}},
        {"workers", 2},
    };
    std::ofstream out(path);
    out << cfg.dump(2) << "\n";
}

// gen-data + train-lid once; every test reuses the artifacts.
struct CliFixture {
    CliFixture() {
        fs::remove_all("cli_work");
        fs::create_directories("cli_work");
        write_config("cli_work/config.json", "cli_work/data", "cli_work/out");
        REQUIRE(run_cli("gen-data --config cli_work/config.json") == 0);
        REQUIRE(run_cli("train-lid --config cli_work/config.json") == 0);
    }

    static const CliFixture& instance() {
        static CliFixture fixture;
        return fixture;
    }
};

}  // namespace

TEST_CASE("gen-data writes every artifact deterministically") {
    CliFixture::instance();
    for (const char* f : {"cli_work/data/family.json", "cli_work/data/source.txt",
                          "cli_work/data/reference.txt", "cli_work/data/meta.tsv",
                          "cli_work/data/lid_train.tsv", "cli_work/data/surrogate.json"}) {
        CHECK(fs::exists(f));
    }

    write_config("cli_work/config2.json", "cli_work/data2", "cli_work/out2");
    REQUIRE(run_cli("gen-data --config cli_work/config2.json") == 0);
    for (const char* name :
         {"family.json", "source.txt", "reference.txt", "meta.tsv", "lid_train.tsv",
          "surrogate.json"}) {
        CHECK(slurp(std::string("cli_work/data/") + name) ==
              slurp(std::string("cli_work/data2/") + name));
    }
}

TEST_CASE("config validation drives exit codes") {
    CliFixture::instance();
    CHECK(run_cli("gen-data --config cli_work/missing.json") == 2);

    {
        std::ofstream bad("cli_work/bad_key.json");
        bad << R"({"seed": 1, "datum": {}})" << "\n";
    }
    CHECK(run_cli("gen-data --config cli_work/bad_key.json") == 2);

    {
        std::ofstream bad("cli_work/bad_nested.json");
        bad << R"({"decode": {"beam_size": 5, "beems": 2}})" << "\n";
    }
    CHECK(run_cli("decode --config cli_work/bad_nested.json") == 2);

    CHECK(run_cli("decode") == 2);  // missing required --config
}

TEST_CASE("train-lid reports held-out accuracy and rejects single-language corpora") {
    CliFixture::instance();
    auto report = json::parse(slurp("cli_work/out/lid_report.json"));
    CHECK(report.at("heldout_accuracy").get<double>() >= 0.99);
    CHECK(fs::exists("cli_work/out/lid_model.bin"));

    // Same seed trains byte-identical models.
    write_config("cli_work/config_retrain.json", "cli_work/data", "cli_work/out_retrain");
    REQUIRE(run_cli("train-lid --config cli_work/config_retrain.json") == 0);
    CHECK(slurp("cli_work/out/lid_model.bin") ==
          slurp("cli_work/out_retrain/lid_model.bin"));

    fs::create_directories("cli_work/mono");
    {
        std::ofstream tsv("cli_work/mono/lid_train.tsv");
        for (int i = 0; i < 20; ++i) {
            tsv << "aa\tsome text " << i << "\n";
        }
    }
    write_config("cli_work/config_mono.json", "cli_work/mono", "cli_work/out_mono");
    CHECK(run_cli("train-lid --config cli_work/config_mono.json") == 2);
}

TEST_CASE("decode writes one JSONL line per sentence; alpha 0 matches baseline") {
    CliFixture::instance();
    REQUIRE(run_cli("decode --config cli_work/config.json --engine baseline") == 0);
    REQUIRE(run_cli("decode --config cli_work/config.json --engine libs --alpha 0") == 0);

    auto baseline = read_jsonl("cli_work/out/decodes_baseline.jsonl");
    auto reduced = read_jsonl("cli_work/out/decodes_libs.jsonl");
    REQUIRE(baseline.size() == 30);
    REQUIRE(reduced.size() == 30);
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        REQUIRE(!baseline[i].candidates.empty());
        REQUIRE(!reduced[i].candidates.empty());
        CHECK(baseline[i].candidates[0].text == reduced[i].candidates[0].text);
    }

    auto summary = json::parse(slurp("cli_work/out/summary_baseline.json"));
    CHECK(summary.contains("bleu"));
    CHECK(summary.contains("off_target_pct"));
}

TEST_CASE("informed decoding stays on target at a large beam") {
    CliFixture::instance();
    REQUIRE(run_cli("decode --config cli_work/config.json --engine libs --beam-size 20") ==
            0);
    auto summary = json::parse(slurp("cli_work/out/summary_libs.json"));
    CHECK(summary.at("off_target_pct").get<double>() <= 5.0);
    CHECK(summary.at("bleu").get<double>() >= 99.0);
}

TEST_CASE("beam sweep report round-trips and shows the curse") {
    CliFixture::instance();
    REQUIRE(run_cli("sweep --config cli_work/config.json --axis beam --engine baseline") ==
            0);
    auto report = libs::SweepReport::from_tsv(slurp("cli_work/out/sweep_beam_baseline.tsv"));
    REQUIRE(report.rows.size() == 2);
    CHECK(report.axis == "beam");
    CHECK(report.rows[1].rates.total_pct > report.rows[0].rates.total_pct);
    CHECK(fs::exists("cli_work/out/sweep_beam_baseline.json"));
}

TEST_CASE("alpha sweep is non-increasing in the off-target column") {
    CliFixture::instance();
    REQUIRE(run_cli("sweep --config cli_work/config.json --axis alpha --beam-size 20") == 0);
    auto report = libs::SweepReport::from_tsv(slurp("cli_work/out/sweep_alpha.tsv"));
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[1].rates.total_pct <= report.rows[0].rates.total_pct + 1e-9);
    // From the cursed regime at alpha 0 down to clean at alpha 1.
    CHECK(report.rows[0].rates.total_pct > 50.0);
    CHECK(report.rows[1].rates.total_pct <= 5.0);

    CHECK(run_cli("sweep --config cli_work/config.json --axis depth") == 2);
}

TEST_CASE("analyze summarizes an existing decode file") {
    CliFixture::instance();
    REQUIRE(run_cli("decode --config cli_work/config.json --engine baseline "
                    "--beam-size 20") == 0);
    REQUIRE(run_cli("analyze --config cli_work/config.json --engine baseline") == 0);
    auto analysis = json::parse(slurp("cli_work/out/analysis.json"));
    CHECK(analysis.at("sentences").get<int>() == 30);
    CHECK(analysis.at("off_target_pct").get<double>() > 50.0);

    CHECK(run_cli("analyze --config cli_work/config.json --decodes cli_work/nope.jsonl") ==
          2);
}

TEST_CASE("analyze reports copy similarity in a source-copy regime") {
    CliFixture::instance();
    // Only the copy mode keeps a cheap continuation, so the large-beam
    // baseline emits source copies and analyze sees ->Source errors.
    json cfg = json::parse(slurp("cli_work/config.json"));
    cfg["data"]["dir"] = "cli_work/data_copy";
    cfg["output"]["dir"] = "cli_work/out_copy";
    cfg["lid"]["model"] = "cli_work/out/lid_model.bin";
    cfg["model"] = {{"type", "surrogate"},
                    {"rho", {{"target", 0.7}, {"english", 0.7}, {"copy", 0.95}}}};
    cfg["decode"]["beam_size"] = 20;
    {
        std::ofstream out("cli_work/config_copy.json");
        out << cfg.dump(2) << "\n";
    }
    REQUIRE(run_cli("gen-data --config cli_work/config_copy.json") == 0);
    REQUIRE(run_cli("decode --config cli_work/config_copy.json --engine baseline") == 0);
    REQUIRE(run_cli("analyze --config cli_work/config_copy.json --engine baseline") == 0);

    auto analysis = json::parse(slurp("cli_work/out_copy/analysis.json"));
    CHECK(analysis.at("to_source_pct").get<double>() > 50.0);
    REQUIRE(!analysis.at("copy_similarity").is_null());
    CHECK(analysis.at("copy_similarity").at("mean").get<double>() >= 90.0);

    // The informed engine cleans the same regime up.
    REQUIRE(run_cli("decode --config cli_work/config_copy.json --engine libs") == 0);
    auto summary = json::parse(slurp("cli_work/out_copy/summary_libs.json"));
    CHECK(summary.at("off_target_pct").get<double>() <= 5.0);
}

TEST_CASE("decode runs against a table model file") {
    CliFixture::instance();
    fs::create_directories("cli_work/table");
    {
        std::ofstream vocab("cli_work/table/table_vocab.txt");
        vocab << "<s>\n</s>\n▁x\n▁y\n";
        std::ofstream src("cli_work/table/source.txt");
        std::ofstream ref("cli_work/table/reference.txt");
        std::ofstream meta("cli_work/table/meta.tsv");
        for (int i = 0; i < 2; ++i) {
            src << "x y\n";
            ref << "x y\n";
            meta << "bb\tcc\n";
        }
        std::ofstream table("cli_work/table/table.json");
        table << R"({"vocab": "table_vocab.txt", "states": [
            {"source": "x y", "lang": "cc", "prefix": [0],
             "dist": {"▁x": 1.0}},
            {"source": "x y", "lang": "cc", "prefix": [0, 2],
             "dist": {"▁y": 1.0}},
            {"source": "x y", "lang": "cc", "prefix": [0, 2, 3],
             "dist": {"</s>": 1.0}}]})";
    }
    json cfg{
        {"seed", 5},
        {"data", {{"dir", "cli_work/table"}}},
        {"lid", {{"model", "cli_work/out/lid_model.bin"}}},
        {"model", {{"type", "table"}, {"path", "cli_work/table/table.json"}}},
        {"decode", {{"beam_size", 2}, {"max_len", 6}}},
        {"output", {{"dir", "cli_work/out_table"}}},
    };
    // The family file is only consulted for the pivot code.
    std::error_code ec;
    fs::copy_file("cli_work/data/family.json", "cli_work/table/family.json",
                  fs::copy_options::overwrite_existing, ec);
    {
        std::ofstream out("cli_work/config_table.json");
        out << cfg.dump(2) << "\n";
    }
    REQUIRE(run_cli("decode --config cli_work/config_table.json --engine baseline") == 0);
    auto decodes = read_jsonl("cli_work/out_table/decodes_baseline.jsonl");
    REQUIRE(decodes.size() == 2);
    CHECK(decodes[0].candidates[0].text == "x y");

    // Missing table file fails input validation.
    cfg["model"]["path"] = "cli_work/table/missing.json";
    {
        std::ofstream out("cli_work/config_table_bad.json");
        out << cfg.dump(2) << "\n";
    }
    CHECK(run_cli("decode --config cli_work/config_table_bad.json --engine baseline") == 2);
}

TEST_CASE("trace emits side-by-side beam tables and validates the index") {
    CliFixture::instance();
    REQUIRE(run_cli("trace --config cli_work/config.json --index 0 --engine baseline "
                    "--beam-sizes 5,20") == 0);
    for (const char* f :
         {"cli_work/out/trace_baseline_b5.tsv", "cli_work/out/trace_baseline_b20.tsv"}) {
        auto trace = libs::BeamTrace::from_tsv(slurp(f));
        CHECK(!trace.steps.empty());
        CHECK(!trace.steps[0].empty());
    }
    std::string paired = slurp("cli_work/out/trace_baseline_paired.tsv");
    CHECK(paired.rfind("step\trank\ttext_b5\tlid_b5\tlogprob_b5\ttext_b20", 0) == 0);
    CHECK(run_cli("trace --config cli_work/config.json --index 999") == 2);
    CHECK(run_cli("trace --config cli_work/config.json --index -1") == 2);
}
