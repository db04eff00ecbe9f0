#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace fsgen {

using TokenId = std::uint32_t;

// Token inventory shared by every model in an experiment. Ids are assigned
// in insertion order; the three control tokens always occupy the first slots.
//
// Tokenization rule (the only one this library uses): split on ASCII
// whitespace, case-sensitive, no further normalization. Unknown words map
// to the <unk> id.
class Vocabulary {
public:
    static constexpr TokenId kBos = 0;
    static constexpr TokenId kEos = 1;
    static constexpr TokenId kUnk = 2;

    // Builds a vocabulary from user token strings (control tokens are
    // prepended automatically). Duplicate strings are inserted once.
    static Vocabulary build(std::span<const std::string> tokens);

    // Builds from raw text: every whitespace-separated word becomes a token.
    static Vocabulary from_text(const std::string& text);

    std::size_t size() const { return tokens_.size(); }
    TokenId bos() const { return kBos; }
    TokenId eos() const { return kEos; }
    TokenId unk() const { return kUnk; }

    const std::string& token(TokenId id) const;
    bool contains(const std::string& token) const { return index_.count(token) != 0; }

    // Id lookup; unknown strings resolve to unk().
    TokenId id(const std::string& token) const;

    // Whitespace-tokenizes `text` against this vocabulary.
    std::vector<TokenId> encode(const std::string& text) const;
    std::string decode(std::span<const TokenId> ids) const;

    const std::vector<std::string>& tokens() const { return tokens_; }

    bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

private:
    Vocabulary() = default;
    void insert(const std::string& token);

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
};

// Splits on ASCII whitespace; empty input yields no words.
std::vector<std::string> split_words(const std::string& text);

} // namespace fsgen
