#include "fsgen/ngram.hpp"

#include "fsgen/error.hpp"

#include <algorithm>
#include <cmath>

namespace fsgen {

namespace {

constexpr double kLogFloor = -700.0;

// Context of order k for position `pos` within a BOS-padded sentence: the
// k-1 ids preceding pos, padding with BOS when the sentence is shorter.
NGramModel::Context context_at(std::span<const TokenId> prefix, std::size_t k, TokenId bos) {
    NGramModel::Context ctx;
    if (k <= 1) return ctx;
    const std::size_t want = k - 1;
    ctx.reserve(want);
    const std::size_t have = std::min(want, prefix.size());
    for (std::size_t i = 0; i < want - have; ++i) ctx.push_back(bos);
    for (std::size_t i = prefix.size() - have; i < prefix.size(); ++i) ctx.push_back(prefix[i]);
    return ctx;
}

void count_corpus(std::vector<NGramModel::CountTable>& tables, std::size_t order,
                  const Vocabulary& vocab, std::span<const std::vector<TokenId>> corpus) {
    const TokenId bos = vocab.bos();
    const TokenId eos = vocab.eos();
    for (const auto& sentence : corpus) {
        for (TokenId t : sentence)
            if (t >= vocab.size())
                throw InvalidModel("corpus token id " + std::to_string(t) + " out of range");
        for (std::size_t k = 1; k <= order; ++k) {
            auto& table = tables[k - 1];
            for (std::size_t pos = 0; pos <= sentence.size(); ++pos) {
                TokenId target = pos < sentence.size() ? sentence[pos] : eos;
                auto ctx = context_at(std::span<const TokenId>(sentence.data(), pos), k, bos);
                table[std::move(ctx)][target] += 1;
            }
        }
    }
}

std::uint64_t total_entries(const std::vector<NGramModel::CountTable>& tables) {
    std::uint64_t n = 0;
    for (const auto& table : tables)
        for (const auto& [ctx, row] : table) n += row.size();
    return n;
}

} // namespace

NGramModel::NGramModel(std::shared_ptr<const Vocabulary> vocab, std::size_t order, double lambda,
                       std::vector<CountTable> tables)
    : vocab_(std::move(vocab)), order_(order), lambda_(lambda), tables_(std::move(tables)) {
    if (!vocab_) throw InvalidModel("n-gram model requires a vocabulary");
    if (order_ < 1) throw InvalidModel("n-gram order must be >= 1");
    if (!(lambda_ > 0.0 && lambda_ <= 1.0)) throw InvalidModel("lambda must be in (0, 1]");
    if (tables_.size() != order_) throw InvalidModel("expected one count table per order");
    for (const auto& table : tables_)
        for (const auto& [ctx, row] : table)
            for (const auto& [tok, count] : row)
                if (count == 0) throw InvalidModel("zero counts must not be stored");
    param_count_ = total_entries(tables_);
}

LogitVector NGramModel::next_logits(std::span<const TokenId> prefix) const {
    const std::size_t v = vocab_->size();
    std::vector<double> probs(v, 1.0 / static_cast<double>(v));
    for (std::size_t k = 1; k <= order_; ++k) {
        auto ctx = context_at(prefix, k, vocab_->bos());
        auto it = tables_[k - 1].find(ctx);
        if (it == tables_[k - 1].end()) continue;
        std::uint64_t total = 0;
        for (const auto& [tok, count] : it->second) total += count;
        for (double& p : probs) p *= (1.0 - lambda_);
        const double scale = lambda_ / static_cast<double>(total);
        for (const auto& [tok, count] : it->second)
            probs[tok] += scale * static_cast<double>(count);
    }
    std::vector<double> logits(v);
    for (std::size_t i = 0; i < v; ++i)
        logits[i] = probs[i] > 0.0 ? std::max(std::log(probs[i]), kLogFloor) : kLogFloor;
    return LogitVector(std::move(logits));
}

double NGramModel::probability(std::span<const TokenId> prefix, TokenId token) const {
    double p = 1.0 / static_cast<double>(vocab_->size());
    for (std::size_t k = 1; k <= order_; ++k) {
        auto ctx = context_at(prefix, k, vocab_->bos());
        auto it = tables_[k - 1].find(ctx);
        if (it == tables_[k - 1].end()) continue;
        std::uint64_t total = 0;
        for (const auto& [tok, count] : it->second) total += count;
        auto tok_it = it->second.find(token);
        double ml = tok_it == it->second.end()
                        ? 0.0
                        : static_cast<double>(tok_it->second) / static_cast<double>(total);
        p = lambda_ * ml + (1.0 - lambda_) * p;
    }
    return p;
}

double NGramModel::avg_log_likelihood(std::span<const std::vector<TokenId>> corpus) const {
    std::uint64_t tokens = 0;
    double ll = 0.0;
    for (const auto& sentence : corpus) {
        for (std::size_t pos = 0; pos <= sentence.size(); ++pos) {
            TokenId target = pos < sentence.size() ? sentence[pos] : vocab_->eos();
            double p = probability(std::span<const TokenId>(sentence.data(), pos), target);
            ll += std::log(std::max(p, 1e-300));
            ++tokens;
        }
    }
    if (tokens == 0) throw EmptyCorpus("cannot score an empty corpus");
    return ll / static_cast<double>(tokens);
}

std::shared_ptr<NGramModel> train_ngram(std::shared_ptr<const Vocabulary> vocab,
                                        std::span<const std::vector<TokenId>> corpus,
                                        std::size_t order, double lambda) {
    if (!vocab) throw InvalidModel("train_ngram requires a vocabulary");
    if (corpus.empty()) throw EmptyCorpus("training corpus is empty");
    if (order < 1) throw InvalidModel("n-gram order must be >= 1");
    std::vector<NGramModel::CountTable> tables(order);
    count_corpus(tables, order, *vocab, corpus);
    return std::make_shared<NGramModel>(vocab, order, lambda, std::move(tables));
}

std::shared_ptr<NGramModel> continue_training(const NGramModel& model,
                                              std::span<const std::vector<TokenId>> extra_corpus) {
    if (extra_corpus.empty()) throw EmptyCorpus("continuation corpus is empty");
    for (const auto& sentence : extra_corpus)
        for (TokenId t : sentence)
            if (t >= model.vocab().size())
                throw VocabMismatch("continuation corpus token id " + std::to_string(t) +
                                    " outside the model vocabulary");
    std::vector<NGramModel::CountTable> tables;
    tables.reserve(model.order());
    for (std::size_t k = 1; k <= model.order(); ++k) tables.push_back(model.table(k));
    count_corpus(tables, model.order(), model.vocab(), extra_corpus);
    return std::make_shared<NGramModel>(model.vocab_ptr(), model.order(), model.lambda(),
                                        std::move(tables));
}

double scale_ratio(const LogitSource& large, const LogitSource& small) {
    if (large.param_count() == 0 || small.param_count() == 0)
        throw InvalidModel("scale ratio requires positive parameter counts");
    return static_cast<double>(large.param_count()) / static_cast<double>(small.param_count());
}

} // namespace fsgen
