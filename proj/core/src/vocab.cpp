#include "fsgen/vocab.hpp"

#include "fsgen/error.hpp"

#include <sstream>

namespace fsgen {

std::vector<std::string> split_words(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> words;
    std::string w;
    while (in >> w) words.push_back(w);
    return words;
}

void Vocabulary::insert(const std::string& token) {
    if (index_.count(token)) return;
    index_.emplace(token, static_cast<TokenId>(tokens_.size()));
    tokens_.push_back(token);
}

Vocabulary Vocabulary::build(std::span<const std::string> tokens) {
    Vocabulary v;
    v.insert("<bos>");
    v.insert("<eos>");
    v.insert("<unk>");
    for (const auto& t : tokens) v.insert(t);
    return v;
}

Vocabulary Vocabulary::from_text(const std::string& text) {
    auto words = split_words(text);
    return build(words);
}

const std::string& Vocabulary::token(TokenId id) const {
    if (id >= tokens_.size())
        throw InvalidModel("token id " + std::to_string(id) + " out of range (V=" +
                           std::to_string(tokens_.size()) + ")");
    return tokens_[id];
}

TokenId Vocabulary::id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

std::vector<TokenId> Vocabulary::encode(const std::string& text) const {
    std::vector<TokenId> ids;
    for (const auto& w : split_words(text)) ids.push_back(id(w));
    return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ' ';
        out += token(ids[i]);
    }
    return out;
}

} // namespace fsgen
