#pragma once

#include "fsgen/source.hpp"

#include <memory>
#include <vector>

namespace fsgen {

// Serves pre-recorded logit vectors. The record for step i answers the
// prefix of length base_length + i, which keeps next_logits a pure function
// of the prefix. In strict mode reading past the record raises
// ReplayExhausted; otherwise a one-hot <eos> vector is served so a decode
// loop terminates.
class ReplaySource : public LogitSource {
public:
    ReplaySource(std::shared_ptr<const Vocabulary> vocab, std::vector<LogitVector> records,
                 std::size_t base_length, bool strict = true);

    LogitVector next_logits(std::span<const TokenId> prefix) const override;
    std::uint64_t param_count() const override { return 1; }
    const Vocabulary& vocab() const override { return *vocab_; }

    std::size_t record_count() const { return records_.size(); }
    bool strict() const { return strict_; }

private:
    std::shared_ptr<const Vocabulary> vocab_;
    std::vector<LogitVector> records_;
    std::size_t base_length_;
    bool strict_;
};

} // namespace fsgen
