#pragma once

#include "fsgen/source.hpp"

#include <map>
#include <memory>
#include <vector>

namespace fsgen {

// Jelinek-Mercer interpolated n-gram model over a shared vocabulary.
//
// P_0 is uniform over V. For order k >= 1 with context c (the k-1 previous
// ids, BOS-padded): P_k(t|c) = lambda * count(c,t)/count(c) + (1-lambda) *
// P_{k-1}(t|c'); a context with zero total count contributes its backoff
// distribution unchanged. next_logits returns ln P_n floored at -700 so the
// vector stays finite.
//
// param_count() is the number of stored (context, token) entries across all
// orders; zero counts are never stored. This is the size notion behind the
// scale ratio R.
class NGramModel : public LogitSource {
public:
    using Context = std::vector<TokenId>;
    using CountTable = std::map<Context, std::map<TokenId, std::uint64_t>>;

    static constexpr double kDefaultLambda = 0.9;

    NGramModel(std::shared_ptr<const Vocabulary> vocab, std::size_t order, double lambda,
               std::vector<CountTable> tables);

    LogitVector next_logits(std::span<const TokenId> prefix) const override;
    std::uint64_t param_count() const override { return param_count_; }
    const Vocabulary& vocab() const override { return *vocab_; }
    std::shared_ptr<const Vocabulary> vocab_ptr() const { return vocab_; }

    std::size_t order() const { return order_; }
    double lambda() const { return lambda_; }

    // Table for order k (1-based); index 0 holds unigrams with empty context.
    const CountTable& table(std::size_t k) const { return tables_.at(k - 1); }

    // Interpolated probability of a single token (same recursion as
    // next_logits, without the floor).
    double probability(std::span<const TokenId> prefix, TokenId token) const;

    // Average per-token log-likelihood (nats) of a corpus, EOS included.
    double avg_log_likelihood(std::span<const std::vector<TokenId>> corpus) const;

private:
    std::shared_ptr<const Vocabulary> vocab_;
    std::size_t order_;
    double lambda_;
    std::vector<CountTable> tables_; // tables_[k-1] = order-k counts
    std::uint64_t param_count_ = 0;
};

// Counts all orders 1..order over the corpus sentences. Each sentence is
// BOS-padded per order and contributes its tokens plus a terminating EOS.
std::shared_ptr<NGramModel> train_ngram(std::shared_ptr<const Vocabulary> vocab,
                                        std::span<const std::vector<TokenId>> corpus,
                                        std::size_t order,
                                        double lambda = NGramModel::kDefaultLambda);

// Returns a new model whose counts are the sum of `model` and the counts of
// `extra_corpus`; the input model is unchanged.
std::shared_ptr<NGramModel> continue_training(const NGramModel& model,
                                              std::span<const std::vector<TokenId>> extra_corpus);

// R = param_count(large) / param_count(small).
double scale_ratio(const LogitSource& large, const LogitSource& small);

} // namespace fsgen
