#include "fsgen/fusion.hpp"

#include "fsgen/error.hpp"

#include <cmath>

namespace fsgen {

std::string to_string(FusionKind kind) {
    switch (kind) {
    case FusionKind::Speculative: return "speculative";
    case FusionKind::Contrastive: return "contrastive";
    case FusionKind::ProxyTuning: return "proxy_tuning";
    case FusionKind::EmulatorTuning: return "emulator_tuning";
    }
    throw ConfigError("unreachable fusion kind");
}

FusionKind fusion_kind_from_string(const std::string& name) {
    if (name == "speculative") return FusionKind::Speculative;
    if (name == "contrastive") return FusionKind::Contrastive;
    if (name == "proxy_tuning") return FusionKind::ProxyTuning;
    if (name == "emulator_tuning") return FusionKind::EmulatorTuning;
    throw ConfigError("unknown fusion method: " + name);
}

namespace {

void check_lengths(const LogitVector& a, const LogitVector& b) {
    if (a.size() != b.size())
        throw VocabMismatch("fusion inputs have different lengths (" + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()) + ")");
}

} // namespace

LogitVector fuse_speculative(const LogitVector& p_l) { return p_l; }

LogitVector fuse_contrastive(const LogitVector& p_l, const LogitVector& p_s, double beta) {
    check_lengths(p_l, p_s);
    if (beta < 0.0) throw ConfigError("contrastive beta must be >= 0");
    std::vector<double> out(p_l.size());
    for (std::size_t i = 0; i < p_l.size(); ++i) out[i] = p_l[i] + beta * (p_l[i] - p_s[i]);
    return LogitVector(std::move(out));
}

LogitVector fuse_proxy_tuning(const LogitVector& p_l, const LogitVector& p_s_base,
                              const LogitVector& p_s_chat) {
    check_lengths(p_l, p_s_base);
    check_lengths(p_l, p_s_chat);
    std::vector<double> out(p_l.size());
    for (std::size_t i = 0; i < p_l.size(); ++i) out[i] = p_l[i] + (p_s_chat[i] - p_s_base[i]);
    return LogitVector(std::move(out));
}

LogitVector fuse_emulator_tuning(const LogitVector& p_l, const LogitVector& p_s_base,
                                 const LogitVector& p_s_chat) {
    check_lengths(p_l, p_s_base);
    check_lengths(p_l, p_s_chat);
    for (std::size_t i = 0; i < p_s_base.size(); ++i)
        if (std::exp(p_s_base[i]) == 0.0)
            throw DegenerateBase("emulator base probability underflows to zero at token " +
                                 std::to_string(i));
    LogitVector ratio = fuse_proxy_tuning(p_l, p_s_base, p_s_chat);
    const auto normalized = normalize(ratio);
    return LogitVector(normalized.logprobs());
}

System2::System2(FusionStrategy strategy, std::shared_ptr<const LogitSource> large)
    : strategy_(strategy), large_(std::move(large)) {
    if (strategy_.kind != FusionKind::Speculative)
        throw ConfigError(to_string(strategy_.kind) + " needs small-model sources");
    if (!large_) throw ConfigError("System 2 requires the large model");
    check_shared_vocab();
}

System2::System2(FusionStrategy strategy, std::shared_ptr<const LogitSource> large,
                 std::shared_ptr<const LogitSource> small)
    : strategy_(strategy), large_(std::move(large)), small_(std::move(small)) {
    if (strategy_.kind != FusionKind::Contrastive)
        throw ConfigError(to_string(strategy_.kind) + " does not take a single small model");
    if (!large_ || !small_) throw ConfigError("contrastive System 2 requires large and small");
    if (strategy_.beta < 0.0) throw ConfigError("contrastive beta must be >= 0");
    check_shared_vocab();
}

System2::System2(FusionStrategy strategy, std::shared_ptr<const LogitSource> large,
                 std::shared_ptr<const LogitSource> small_base,
                 std::shared_ptr<const LogitSource> small_chat)
    : strategy_(strategy), large_(std::move(large)), small_base_(std::move(small_base)),
      small_chat_(std::move(small_chat)) {
    if (strategy_.kind != FusionKind::ProxyTuning && strategy_.kind != FusionKind::EmulatorTuning)
        throw ConfigError(to_string(strategy_.kind) + " does not take base/chat sources");
    if (!large_ || !small_base_ || !small_chat_)
        throw ConfigError("proxy/emulator System 2 requires large, base and chat models");
    check_shared_vocab();
}

void System2::check_shared_vocab() const {
    for (const auto* src : {small_.get(), small_base_.get(), small_chat_.get()}) {
        if (src && !(src->vocab() == large_->vocab()))
            throw VocabMismatch("System 2 sources must share one vocabulary");
    }
}

FusedStepLogits System2::next(std::span<const TokenId> prefix) const {
    FusedStepLogits step;
    step.large = LogitVector(normalize(large_->next_logits(prefix)).logprobs());
    switch (strategy_.kind) {
    case FusionKind::Speculative:
        step.fused = fuse_speculative(step.large);
        break;
    case FusionKind::Contrastive:
        step.small = LogitVector(normalize(small_->next_logits(prefix)).logprobs());
        step.fused = fuse_contrastive(step.large, *step.small, strategy_.beta);
        break;
    case FusionKind::ProxyTuning:
        step.small_base = LogitVector(normalize(small_base_->next_logits(prefix)).logprobs());
        step.small_chat = LogitVector(normalize(small_chat_->next_logits(prefix)).logprobs());
        step.fused = fuse_proxy_tuning(step.large, *step.small_base, *step.small_chat);
        break;
    case FusionKind::EmulatorTuning:
        step.small_base = LogitVector(normalize(small_base_->next_logits(prefix)).logprobs());
        step.small_chat = LogitVector(normalize(small_chat_->next_logits(prefix)).logprobs());
        step.fused = fuse_emulator_tuning(step.large, *step.small_base, *step.small_chat);
        break;
    }
    return step;
}

LogitVector System2::next_logits(std::span<const TokenId> prefix) const {
    return next(prefix).fused;
}

std::uint64_t System2::param_count() const {
    std::uint64_t n = large_->param_count();
    if (small_) n += small_->param_count();
    if (small_base_) n += small_base_->param_count();
    if (small_chat_) n += small_chat_->param_count();
    return n;
}

} // namespace fsgen
