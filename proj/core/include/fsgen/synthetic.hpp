#pragma once

#include "fsgen/vocab.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fsgen {

// One generated example: the prompt and its well-formed continuation.
struct TaskItem {
    std::vector<std::string> prompt;
    std::vector<std::string> continuation;

    std::vector<std::string> sentence() const;
};

// Copy task with a graded context requirement. Each item hides a key token
// `depth` positions before the separator; the first continuation token is
// the key's mirror symbol and the rest is a fixed filler chain. An order-k
// model resolves the first token only when depth <= k - 2, so deeper keys
// need strictly larger models, and every later position is predictable from
// the previous token alone. Ambiguity is concentrated at position zero by
// construction.
struct PatternCopySpec {
    std::uint64_t seed = 0;
    std::size_t items = 200;
    std::size_t keys = 6;          // distinct key/mirror symbols
    std::size_t filler_len = 9;    // continuation length = filler_len + 1
    std::vector<double> depth_weights = {0.5, 0.3, 0.2}; // depth 1, 2, 3, ...
};

std::vector<TaskItem> generate_pattern_copy(const PatternCopySpec& spec);

// Modular addition chains: "a + s = r1 ; r1 + s = r2 ; ...". Resolving a
// sum exactly takes an order-5 context; separators need order 3; an order-2
// model is uncertain nearly everywhere.
struct ArithChainSpec {
    std::uint64_t seed = 0;
    std::size_t items = 200;
    std::uint32_t modulus = 20; // results live in [0, modulus)
    std::uint32_t max_step = 5; // step drawn from [1, max_step]
    std::size_t sums = 3;       // additions per chain
};

std::vector<TaskItem> generate_arith_chain(const ArithChainSpec& spec);

} // namespace fsgen
