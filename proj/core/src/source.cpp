#include "fsgen/source.hpp"

#include "fsgen/error.hpp"

namespace fsgen {

namespace {

void check_prompt(const LogitSource& source, std::span<const TokenId> prompt) {
    const std::size_t v = source.vocab().size();
    for (TokenId t : prompt)
        if (t >= v) throw InvalidModel("prompt token id " + std::to_string(t) + " out of range");
}

LogitVector step_logits(const LogitSource& source, std::span<const TokenId> prefix,
                        std::size_t step) {
    try {
        return source.next_logits(prefix);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw BackendError(e.what(), step);
    }
}

} // namespace

std::vector<TokenId> greedy_decode(const LogitSource& source, std::span<const TokenId> prompt,
                                   std::size_t max_length) {
    check_prompt(source, prompt);
    const TokenId eos = source.vocab().eos();
    std::vector<TokenId> context(prompt.begin(), prompt.end());
    std::vector<TokenId> out;
    for (std::size_t step = 0; step < max_length; ++step) {
        LogitVector logits = step_logits(source, context, step);
        TokenId next = greedy_argmax(logits);
        if (next == eos) break;
        out.push_back(next);
        context.push_back(next);
    }
    return out;
}

std::vector<DecodeStep> greedy_decode_steps(const LogitSource& source,
                                            std::span<const TokenId> prompt,
                                            std::size_t max_length, std::size_t k) {
    check_prompt(source, prompt);
    const TokenId eos = source.vocab().eos();
    std::vector<TokenId> context(prompt.begin(), prompt.end());
    std::vector<DecodeStep> out;
    for (std::size_t step = 0; step < max_length; ++step) {
        LogitVector logits = step_logits(source, context, step);
        TokenId next = greedy_argmax(logits);
        if (next == eos) break;
        DecodeStep rec;
        rec.index = step;
        rec.token_id = next;
        rec.logprobs_topk = top_k(normalize(logits), k);
        out.push_back(std::move(rec));
        context.push_back(next);
    }
    return out;
}

} // namespace fsgen
