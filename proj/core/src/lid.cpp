#include "libs/lid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "libs/scoring.hpp"

namespace libs {

namespace {

// Byte offsets of UTF-8 codepoint starts, plus an end sentinel. Invalid
// bytes are treated as single-byte codepoints.
std::vector<std::size_t> codepoint_starts(std::string_view s) {
    std::vector<std::size_t> starts;
    starts.reserve(s.size() + 1);
    std::size_t i = 0;
    while (i < s.size()) {
        starts.push_back(i);
        auto byte = static_cast<unsigned char>(s[i]);
        std::size_t len = 1;
        if ((byte & 0xE0) == 0xC0) {
            len = 2;
        } else if ((byte & 0xF0) == 0xE0) {
            len = 3;
        } else if ((byte & 0xF8) == 0xF0) {
            len = 4;
        }
        i = std::min(i + len, s.size());
    }
    starts.push_back(s.size());
    return starts;
}

std::string_view trimmed(std::string_view text) {
    std::size_t b = text.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    std::size_t e = text.find_last_not_of(" \t\r\n");
    return text.substr(b, e - b + 1);
}

// Visits the hashed index of every character n-gram occurrence in
// position order, n ascending within a position. FNV-1a extends per byte,
// so all n-gram lengths at one position come from a single pass. Returns
// the occurrence count.
template <typename Visit>
long for_each_ngram(std::string_view text, const LidConfig& config, Visit&& visit) {
    auto starts = codepoint_starts(text);
    int ncp = static_cast<int>(starts.size()) - 1;
    long total = 0;
    for (int i = 0; i < ncp; ++i) {
        std::uint64_t h = 14695981039346656037ull;
        int max_n = std::min(config.ngram_max, ncp - i);
        for (int n = 1; n <= max_n; ++n) {
            for (std::size_t b = starts[i + n - 1]; b < starts[i + n]; ++b) {
                h ^= static_cast<std::uint8_t>(text[b]);
                h *= 1099511628211ull;
            }
            if (n >= config.ngram_min) {
                visit(static_cast<int>(h % config.feature_dim));
                ++total;
            }
        }
    }
    return total;
}

}  // namespace

LidModel::LidModel(std::vector<std::string> languages, LidConfig config,
                   std::vector<double> weights, std::vector<double> bias)
    : languages_(std::move(languages)),
      config_(config),
      weights_(std::move(weights)),
      bias_(std::move(bias)) {
    if (languages_.empty()) {
        throw invalid_input("LidModel needs at least one language");
    }
    std::set<std::string> unique(languages_.begin(), languages_.end());
    if (unique.size() != languages_.size()) {
        throw invalid_input("LidModel languages must be unique");
    }
    if (config_.feature_dim <= 0 || config_.ngram_min < 1 ||
        config_.ngram_max < config_.ngram_min) {
        throw invalid_input("invalid LiD configuration");
    }
    std::size_t expected = static_cast<std::size_t>(config_.feature_dim) * languages_.size();
    if (weights_.size() != expected || bias_.size() != languages_.size()) {
        throw invalid_input("LidModel weight shapes do not match configuration");
    }
}

LidModel::LidModel(std::vector<std::string> languages, LidConfig config)
    : LidModel(languages, config,
               std::vector<double>(
                   static_cast<std::size_t>(config.feature_dim) * languages.size(), 0.0),
               std::vector<double>(languages.size(), 0.0)) {}

std::vector<double> LidModel::log_scores(std::string_view text) const {
    std::string_view t = trimmed(text);
    if (t.empty()) {
        throw invalid_input("LiD scoring requires non-empty text");
    }
    const std::size_t nl = languages_.size();
    std::vector<double> acc(nl, 0.0);
    long total = for_each_ngram(t, config_, [&](int idx) {
        const double* row = weights_.data() + static_cast<std::size_t>(idx) * nl;
        for (std::size_t l = 0; l < nl; ++l) {
            acc[l] += row[l];
        }
    });
    std::vector<double> z(bias_);
    if (total > 0) {  // a text shorter than ngram_min has no features
        for (std::size_t l = 0; l < nl; ++l) {
            z[l] += acc[l] / total;
        }
    }
    double lse = log_sum_exp(z);
    for (double& v : z) {
        v -= lse;
    }
    return z;
}

LidModel train_lid(const std::vector<LidExample>& corpus, const LidConfig& config) {
    if (corpus.empty()) {
        throw invalid_input("LiD training corpus is empty");
    }
    std::set<std::string> langs;
    for (const auto& ex : corpus) {
        if (trimmed(ex.text).empty()) {
            throw invalid_input("LiD training corpus contains an empty text");
        }
        langs.insert(ex.lang);
    }
    if (langs.size() < 2) {
        throw invalid_input("LiD training needs at least 2 languages, got " +
                            std::to_string(langs.size()));
    }

    std::vector<std::string> languages(langs.begin(), langs.end());
    std::unordered_map<std::string, std::size_t> lang_index;
    for (std::size_t l = 0; l < languages.size(); ++l) {
        lang_index[languages[l]] = l;
    }
    const std::size_t nl = languages.size();

    std::vector<std::vector<int>> features(corpus.size());  // occurrence indices
    std::vector<std::size_t> labels(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        for_each_ngram(trimmed(corpus[i].text), config,
                       [&](int idx) { features[i].push_back(idx); });
        labels[i] = lang_index[corpus[i].lang];
    }

    std::vector<double> weights(static_cast<std::size_t>(config.feature_dim) * nl, 0.0);
    std::vector<double> bias(nl, 0.0);
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed);

    std::vector<double> z(nl);
    const long total_updates = static_cast<long>(config.epochs) * corpus.size();
    long update = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i : order) {
            double lr = config.learning_rate *
                        (1.0 - static_cast<double>(update) / total_updates);
            ++update;

            if (features[i].empty()) {
                continue;
            }
            double value = 1.0 / features[i].size();  // averaged bag of n-grams
            z.assign(bias.begin(), bias.end());
            for (int idx : features[i]) {
                const double* row = weights.data() + static_cast<std::size_t>(idx) * nl;
                for (std::size_t l = 0; l < nl; ++l) {
                    z[l] += value * row[l];
                }
            }
            double lse = log_sum_exp(z);
            for (std::size_t l = 0; l < nl; ++l) {
                z[l] = std::exp(z[l] - lse);  // softmax -> gradient below
            }
            z[labels[i]] -= 1.0;
            for (int idx : features[i]) {
                double* row = weights.data() + static_cast<std::size_t>(idx) * nl;
                for (std::size_t l = 0; l < nl; ++l) {
                    row[l] -= lr * value * z[l];
                }
            }
            for (std::size_t l = 0; l < nl; ++l) {
                bias[l] -= lr * z[l];
            }
        }
    }
    return LidModel(std::move(languages), config, std::move(weights), std::move(bias));
}

double lid_logprob(const LidModel& model, std::string_view text, const std::string& lang) {
    auto it = std::find(model.languages().begin(), model.languages().end(), lang);
    if (it == model.languages().end()) {
        throw invalid_input("language not covered by the LiD model: " + lang);
    }
    auto scores = model.log_scores(text);
    return scores[it - model.languages().begin()];
}

std::pair<std::string, double> lid_predict(const LidModel& model, std::string_view text) {
    auto scores = model.log_scores(text);
    std::size_t best = 0;
    for (std::size_t l = 1; l < scores.size(); ++l) {
        if (scores[l] > scores[best]) {
            best = l;
        }
    }
    return {model.languages()[best], std::exp(scores[best])};
}

std::vector<double> lid_logprob_batch(const LidModel& model,
                                      const std::vector<std::string>& texts,
                                      const std::string& lang, ThreadPool* pool) {
    std::vector<double> out(texts.size());
    std::vector<std::string> errors(texts.size());
    auto score_one = [&](std::size_t i) {
        try {
            out[i] = lid_logprob(model, texts[i], lang);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };
    if (pool != nullptr && texts.size() > 1) {
        pool->parallel_for(texts.size(), score_one);
    } else {
        for (std::size_t i = 0; i < texts.size(); ++i) {
            score_one(i);
        }
    }
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (!errors[i].empty()) {
            throw invalid_input("batch element " + std::to_string(i) + ": " + errors[i]);
        }
    }
    return out;
}

std::vector<std::pair<std::string, double>> lid_predict_batch(
    const LidModel& model, const std::vector<std::string>& texts, ThreadPool* pool) {
    std::vector<std::pair<std::string, double>> out(texts.size());
    std::vector<std::string> errors(texts.size());
    auto predict_one = [&](std::size_t i) {
        try {
            out[i] = lid_predict(model, texts[i]);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };
    if (pool != nullptr && texts.size() > 1) {
        pool->parallel_for(texts.size(), predict_one);
    } else {
        for (std::size_t i = 0; i < texts.size(); ++i) {
            predict_one(i);
        }
    }
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (!errors[i].empty()) {
            throw invalid_input("batch element " + std::to_string(i) + ": " + errors[i]);
        }
    }
    return out;
}

double lid_accuracy(const LidModel& model, const std::vector<LidExample>& examples) {
    if (examples.empty()) {
        throw invalid_input("accuracy over an empty example set");
    }
    long correct = 0;
    for (const auto& ex : examples) {
        if (lid_predict(model, ex.text).first == ex.lang) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / examples.size();
}

namespace {
constexpr char kMagic[4] = {'L', 'I', 'D', 'M'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void LidModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw invalid_input("cannot write LiD model file: " + path);
    }
    nlohmann::json header{{"languages", languages_},
                          {"ngram_range", {config_.ngram_min, config_.ngram_max}},
                          {"feature_dim", config_.feature_dim}};
    std::string header_text = header.dump();
    std::uint64_t header_len = header_text.size();

    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    out.write(reinterpret_cast<const char*>(weights_.data()),
              static_cast<std::streamsize>(weights_.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(bias_.data()),
              static_cast<std::streamsize>(bias_.size() * sizeof(double)));
    if (!out) {
        throw error("failed writing LiD model file: " + path);
    }
}

LidModel LidModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw invalid_input("cannot open LiD model file: " + path);
    }
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t header_len = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw parse_error(path + ": not a LiD model file");
    }
    if (version != kVersion) {
        throw parse_error(path + ": unsupported LiD model version " + std::to_string(version));
    }
    if (header_len > (1u << 20)) {
        throw parse_error(path + ": implausible header length");
    }
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) {
        throw parse_error(path + ": truncated header");
    }

    LidConfig config;
    std::vector<std::string> languages;
    try {
        auto header = nlohmann::json::parse(header_text);
        languages = header.at("languages").get<std::vector<std::string>>();
        config.ngram_min = header.at("ngram_range").at(0).get<int>();
        config.ngram_max = header.at("ngram_range").at(1).get<int>();
        config.feature_dim = header.at("feature_dim").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path + ": bad header: " + e.what());
    }

    std::vector<double> weights(static_cast<std::size_t>(config.feature_dim) *
                                languages.size());
    std::vector<double> bias(languages.size());
    in.read(reinterpret_cast<char*>(weights.data()),
            static_cast<std::streamsize>(weights.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(bias.data()),
            static_cast<std::streamsize>(bias.size() * sizeof(double)));
    if (!in) {
        throw parse_error(path + ": truncated weights");
    }
    return LidModel(std::move(languages), config, std::move(weights), std::move(bias));
}

std::vector<LidExample> load_lid_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw invalid_input("cannot open LiD corpus file: " + path);
    }
    std::vector<LidExample> corpus;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw parse_error(path, lineno, "expected lang<TAB>text");
        }
        corpus.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    return corpus;
}

void save_lid_corpus(const std::vector<LidExample>& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw invalid_input("cannot write LiD corpus file: " + path);
    }
    for (const auto& ex : corpus) {
        out << ex.lang << '\t' << ex.text << '\n';
    }
}

}  // namespace libs
