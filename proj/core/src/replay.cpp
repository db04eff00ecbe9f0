#include "fsgen/replay.hpp"

#include "fsgen/error.hpp"

namespace fsgen {

ReplaySource::ReplaySource(std::shared_ptr<const Vocabulary> vocab,
                           std::vector<LogitVector> records, std::size_t base_length, bool strict)
    : vocab_(std::move(vocab)), records_(std::move(records)), base_length_(base_length),
      strict_(strict) {
    if (!vocab_) throw InvalidModel("replay source requires a vocabulary");
    for (const auto& r : records_)
        if (r.size() != vocab_->size())
            throw VocabMismatch("recorded logit vector length does not match the vocabulary");
}

LogitVector ReplaySource::next_logits(std::span<const TokenId> prefix) const {
    if (prefix.size() < base_length_)
        throw ReplayExhausted("prefix shorter than the recorded base length");
    const std::size_t step = prefix.size() - base_length_;
    if (step < records_.size()) return records_[step];
    if (strict_)
        throw ReplayExhausted("replay record exhausted at step " + std::to_string(step));
    std::vector<double> scores(vocab_->size(), 0.0);
    scores[vocab_->eos()] = 1.0;
    return LogitVector(std::move(scores));
}

} // namespace fsgen
