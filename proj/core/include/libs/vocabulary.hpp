#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "libs/errors.hpp"

namespace libs {

using TokenId = int;

/// Token-id <-> token-string map with reserved BOS/EOS entries.
///
/// Ids are dense 0..N-1. The first two entries are always the BOS and EOS
/// strings. Word-initial subword tokens carry a boundary marker prefix
/// (SentencePiece-style "▁" by default); detokenization turns the
/// marker into a word separator.
///
/// Immutable after construction; safe to share across threads.
class Vocabulary {
public:
    static constexpr std::string_view kDefaultMarker = "▁";

    /// Builds a vocabulary from entry strings. entries[0] is BOS,
    /// entries[1] is EOS.
    explicit Vocabulary(std::vector<std::string> entries,
                        std::string boundary_marker = std::string(kDefaultMarker));

    /// Reads one token per line; line number = id; first two lines are the
    /// BOS and EOS strings.
    static Vocabulary load(const std::string& path);
    void save(const std::string& path) const;

    int size() const { return static_cast<int>(entries_.size()); }
    TokenId bos_id() const { return 0; }
    TokenId eos_id() const { return 1; }
    const std::string& boundary_marker() const { return marker_; }

    const std::string& token(TokenId id) const;
    /// Returns the id for a token string, or -1 when absent.
    TokenId find(std::string_view token) const;
    /// Returns the id for a token string; throws invalid_input when absent.
    TokenId id_of(std::string_view token) const;
    bool contains(std::string_view token) const { return find(token) >= 0; }

    const std::vector<std::string>& entries() const { return entries_; }

    /// Renders a token-id sequence as plain text. BOS/EOS ids are skipped;
    /// a boundary-marker prefix becomes a single space (none before the
    /// first word). Unknown ids throw invalid_input.
    std::string detokenize(std::span<const TokenId> tokens) const;

    /// Whitespace-splits text and maps each word to the id of
    /// marker+word. Words without such an entry throw invalid_input.
    std::vector<TokenId> tokenize(std::string_view text) const;

private:
    std::vector<std::string> entries_;
    std::unordered_map<std::string_view, TokenId> index_;
    std::string marker_;
};

}  // namespace libs
