#pragma once

#include "fsgen/vocab.hpp"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace fsgen {

// Raw next-token scores over the whole vocabulary. Entries must be finite;
// backends that work in log-probability space store those directly here.
class LogitVector {
public:
    LogitVector() = default;
    explicit LogitVector(std::vector<double> scores);

    std::size_t size() const { return scores_.size(); }
    double operator[](std::size_t i) const { return scores_[i]; }
    const std::vector<double>& scores() const { return scores_; }

    // Elementwise shift; argmax-preserving by construction.
    LogitVector shifted(double c) const;

private:
    std::vector<double> scores_;
};

// Normalized next-token distribution in log space. exp(logprobs) sums to 1
// within 1e-9; individual entries may be -inf (probability exactly zero).
class TokenDistribution {
public:
    TokenDistribution() = default;

    // Validates the sum invariant.
    static TokenDistribution from_logprobs(std::vector<double> logprobs);
    // Probabilities must be non-negative and sum to 1 within 1e-9.
    static TokenDistribution from_probs(std::span<const double> probs);

    std::size_t size() const { return logprobs_.size(); }
    double operator[](std::size_t i) const { return logprobs_[i]; }
    const std::vector<double>& logprobs() const { return logprobs_; }
    double prob(std::size_t i) const;

private:
    std::vector<double> logprobs_;
};

// One (token, logprob) ranking entry.
using ScoredToken = std::pair<TokenId, double>;

// Per-step view of a decode: chosen token plus its top-k ranking.
struct DecodeStep {
    std::size_t index = 0;
    TokenId token_id = 0;
    std::vector<ScoredToken> logprobs_topk;
};

// Log-softmax. Invariant under adding a constant to every score.
TokenDistribution normalize(const LogitVector& logits);

// Id of the maximal score; ties broken by lowest id.
TokenId greedy_argmax(const LogitVector& logits);

// Shannon entropy in nats; 0 <= H <= ln(V).
double entropy(const TokenDistribution& dist);

// Top k entries ordered by (-logprob, token_id). top_k(d, k) is a prefix
// of top_k(d, k+1).
std::vector<ScoredToken> top_k(const TokenDistribution& dist, std::size_t k);

} // namespace fsgen
