#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "libs/errors.hpp"
#include "libs/thread_pool.hpp"

namespace libs {

struct LidConfig {
    int ngram_min = 1;
    int ngram_max = 5;
    int feature_dim = 1 << 18;
    // Averaged n-gram features scale gradients by 1/|ngrams|, so the
    // rate runs much hotter than a dense-feature model would use.
    int epochs = 10;
    double learning_rate = 25.0;
    std::uint64_t seed = 1;
};

/// One training or evaluation example: language code + text.
struct LidExample {
    std::string lang;
    std::string text;
};

/// Multinomial logistic regression over hashed, averaged
/// character-n-gram counts. N-grams run over UTF-8 codepoints (spaces
/// included) and are hashed with 64-bit FNV-1a modulo feature_dim, so
/// models are deterministic across platforms.
///
/// Immutable after construction/training; concurrent scoring is safe.
class LidModel {
public:
    LidModel(std::vector<std::string> languages, LidConfig config,
             std::vector<double> weights, std::vector<double> bias);

    /// Zero-weight model (uniform softmax), mostly for tests.
    LidModel(std::vector<std::string> languages, LidConfig config);

    const std::vector<std::string>& languages() const { return languages_; }
    const LidConfig& config() const { return config_; }

    /// Log softmax scores over all languages for a text.
    std::vector<double> log_scores(std::string_view text) const;

    /// Model file layout (little-endian):
    ///   bytes 0-3   magic "LIDM"
    ///   bytes 4-7   format version (uint32, currently 1)
    ///   bytes 8-15  header length H (uint64)
    ///   H bytes     JSON header {languages, ngram_range, feature_dim}
    ///   then        weights, feature_dim x |languages| row-major float64
    ///   then        bias, |languages| float64
    /// Training is deterministic, so equal inputs give equal files.
    void save(const std::string& path) const;
    static LidModel load(const std::string& path);

private:
    friend LidModel train_lid(const std::vector<LidExample>&, const LidConfig&);

    std::vector<std::string> languages_;
    LidConfig config_;
    std::vector<double> weights_;  // feature_dim x |languages|, row-major
    std::vector<double> bias_;
};

/// Trains by single-threaded SGD with per-epoch shuffling from the
/// config seed; identical inputs produce identical models.
/// Throws invalid_input on an empty corpus, a single-language corpus, or
/// empty texts.
LidModel train_lid(const std::vector<LidExample>& corpus, const LidConfig& config);

/// Log probability of language `lang` for `text` (<= 0; exp over all
/// languages sums to 1). Throws invalid_input on unknown language or on
/// text that is empty after trimming.
double lid_logprob(const LidModel& model, std::string_view text, const std::string& lang);

/// Argmax language and its probability; ties break by language order.
std::pair<std::string, double> lid_predict(const LidModel& model, std::string_view text);

/// Elementwise lid_logprob; bit-exact with the scalar calls. A failing
/// element reports its index. When a pool is given, texts are scored
/// concurrently.
std::vector<double> lid_logprob_batch(const LidModel& model,
                                      const std::vector<std::string>& texts,
                                      const std::string& lang, ThreadPool* pool = nullptr);

std::vector<std::pair<std::string, double>> lid_predict_batch(
    const LidModel& model, const std::vector<std::string>& texts, ThreadPool* pool = nullptr);

/// Fraction of examples whose predicted language matches the label.
double lid_accuracy(const LidModel& model, const std::vector<LidExample>& examples);

/// Reads "lang<TAB>text" lines.
std::vector<LidExample> load_lid_corpus(const std::string& path);
void save_lid_corpus(const std::vector<LidExample>& corpus, const std::string& path);

}  // namespace libs
