#pragma once

#include "fsgen/logits.hpp"
#include "fsgen/vocab.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace fsgen {

// Behavioral contract for a next-token scorer. Implementations must be
// deterministic in the prefix and keep param_count constant for life.
class LogitSource {
public:
    virtual ~LogitSource() = default;

    virtual LogitVector next_logits(std::span<const TokenId> prefix) const = 0;
    virtual std::uint64_t param_count() const = 0;
    virtual const Vocabulary& vocab() const = 0;
};

inline constexpr std::size_t kDefaultMaxLength = 256;

// Greedy continuation of `prompt`: repeatedly appends the argmax token until
// the source emits <eos> or max_length tokens were produced. The terminating
// <eos> is not part of the returned continuation. Source failures surface as
// BackendError carrying the step index.
std::vector<TokenId> greedy_decode(const LogitSource& source, std::span<const TokenId> prompt,
                                   std::size_t max_length = kDefaultMaxLength);

// Same loop, but records chosen token and top-k ranking per step.
std::vector<DecodeStep> greedy_decode_steps(const LogitSource& source,
                                            std::span<const TokenId> prompt,
                                            std::size_t max_length, std::size_t k);

} // namespace fsgen
