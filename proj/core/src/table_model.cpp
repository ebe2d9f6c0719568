#include "libs/table_model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace libs {

namespace {

constexpr double kSumTolerance = 1e-6;

// nlohmann reports byte offsets; map one back to a line number.
long line_of_offset(const std::string& text, std::size_t byte) {
    long line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
        }
    }
    return line;
}

std::vector<double> build_logprobs(const Vocabulary& vocab,
                                   const std::vector<std::pair<TokenId, double>>& dist) {
    double sum = 0.0;
    for (const auto& [id, p] : dist) {
        if (id < 0 || id >= vocab.size()) {
            throw invalid_input("table model distribution references unknown token id " +
                                std::to_string(id));
        }
        if (p < 0.0) {
            throw invalid_input("table model probability must be non-negative");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
        throw invalid_input("table model distribution sums to " + std::to_string(sum) +
                            ", expected 1 within 1e-6");
    }
    std::vector<double> logprobs(vocab.size(), -std::numeric_limits<double>::infinity());
    for (const auto& [id, p] : dist) {
        logprobs[id] = p > 0.0 ? std::log(p / sum) : -std::numeric_limits<double>::infinity();
    }
    return logprobs;
}

}  // namespace

TableModel::TableModel(std::shared_ptr<const Vocabulary> vocab, std::vector<State> states)
    : vocab_(std::move(vocab)) {
    uniform_.assign(vocab_->size(), -std::log(static_cast<double>(vocab_->size())));
    for (auto& st : states) {
        Key key{st.source, st.lang, st.prefix};
        table_[std::move(key)] = build_logprobs(*vocab_, st.dist);
    }
}

std::shared_ptr<TableModel> TableModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw invalid_input("cannot open table model file: " + path);
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(path, line_of_offset(text, e.byte), e.what());
    }

    try {
        std::filesystem::path vocab_path = doc.at("vocab").get<std::string>();
        if (vocab_path.is_relative()) {
            vocab_path = std::filesystem::path(path).parent_path() / vocab_path;
        }
        auto vocab = std::make_shared<Vocabulary>(Vocabulary::load(vocab_path.string()));

        std::vector<State> states;
        for (const auto& js : doc.at("states")) {
            State st;
            st.source = js.at("source").get<std::string>();
            st.lang = js.at("lang").get<std::string>();
            st.prefix = js.at("prefix").get<std::vector<TokenId>>();
            for (const auto& [token, prob] : js.at("dist").items()) {
                st.dist.emplace_back(vocab->id_of(token), prob.get<double>());
            }
            states.push_back(std::move(st));
        }
        return std::make_shared<TableModel>(std::move(vocab), std::move(states));
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path + ": " + e.what());
    }
}

std::vector<double> TableModel::next_token_logprobs(const std::string& source,
                                                    const std::string& target_lang,
                                                    const Hypothesis& prefix) const {
    if (prefix.finished) {
        throw invalid_state("next_token_logprobs called on a finished hypothesis");
    }
    Key key{source, target_lang, prefix.tokens};
    auto it = table_.find(key);
    if (it != table_.end()) {
        return it->second;
    }
    return uniform_;
}

double rescore_tokens(const AutoregressiveModel& model, const std::string& source,
                      const std::string& target_lang, std::span<const TokenId> tokens) {
    if (tokens.empty() || tokens.front() != model.vocab().bos_id()) {
        throw invalid_input("rescoring requires a BOS-initial token sequence");
    }
    Hypothesis hyp = Hypothesis::initial(model.vocab());
    double total = 0.0;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        auto logprobs = model.next_token_logprobs(source, target_lang, hyp);
        total += logprobs[tokens[i]];
        hyp = hyp.extended(tokens[i], logprobs[tokens[i]], model.vocab());
    }
    return total;
}

}  // namespace libs
