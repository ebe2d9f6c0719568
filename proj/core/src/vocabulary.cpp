#include "libs/vocabulary.hpp"

#include <fstream>
#include <sstream>

namespace libs {

Vocabulary::Vocabulary(std::vector<std::string> entries, std::string boundary_marker)
    : entries_(std::move(entries)), marker_(std::move(boundary_marker)) {
    if (entries_.size() < 2) {
        throw invalid_input("vocabulary needs at least BOS and EOS entries");
    }
    if (marker_.empty()) {
        throw invalid_input("boundary marker must be non-empty");
    }
    index_.reserve(entries_.size());
    for (int i = 0; i < static_cast<int>(entries_.size()); ++i) {
        auto [it, inserted] = index_.emplace(entries_[i], i);
        if (!inserted) {
            throw invalid_input("duplicate vocabulary entry: " + entries_[i]);
        }
    }
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw invalid_input("cannot open vocabulary file: " + path);
    }
    std::vector<std::string> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        entries.push_back(line);
    }
    if (entries.size() < 2) {
        throw parse_error(path, static_cast<long>(entries.size()),
                          "vocabulary file must list BOS and EOS on the first two lines");
    }
    return Vocabulary(std::move(entries));
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
        throw invalid_input("cannot write vocabulary file: " + path);
    }
    for (const auto& e : entries_) {
        out << e << '\n';
    }
}

const std::string& Vocabulary::token(TokenId id) const {
    if (id < 0 || id >= size()) {
        throw invalid_input("unknown token id: " + std::to_string(id));
    }
    return entries_[id];
}

TokenId Vocabulary::find(std::string_view token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : it->second;
}

TokenId Vocabulary::id_of(std::string_view token) const {
    TokenId id = find(token);
    if (id < 0) {
        throw invalid_input("unknown token: " + std::string(token));
    }
    return id;
}

std::string Vocabulary::detokenize(std::span<const TokenId> tokens) const {
    std::string out;
    for (TokenId id : tokens) {
        if (id == bos_id() || id == eos_id()) {
            continue;
        }
        const std::string& piece = token(id);
        if (piece.size() >= marker_.size() &&
            piece.compare(0, marker_.size(), marker_) == 0) {
            if (!out.empty()) {
                out.push_back(' ');
            }
            out.append(piece, marker_.size(), std::string::npos);
        } else {
            out.append(piece);
        }
    }
    return out;
}

std::vector<TokenId> Vocabulary::tokenize(std::string_view text) const {
    std::vector<TokenId> ids;
    std::istringstream words{std::string(text)};
    std::string word;
    while (words >> word) {
        TokenId id = find(marker_ + word);
        if (id < 0) {
            throw invalid_input("word not in lexicon: " + word);
        }
        ids.push_back(id);
    }
    return ids;
}

}  // namespace libs
