#pragma once

#include "fsgen/source.hpp"

#include <memory>
#include <optional>
#include <string>

namespace fsgen {

enum class FusionKind { Speculative, Contrastive, ProxyTuning, EmulatorTuning };

std::string to_string(FusionKind kind);
FusionKind fusion_kind_from_string(const std::string& name);

// Which fusion defines the reference logits, plus its hyperparameters.
// beta is meaningful for Contrastive only.
struct FusionStrategy {
    FusionKind kind = FusionKind::Speculative;
    double beta = 0.5;
};

// Every component computed for one fused step, kept for tracing. All
// vectors are normalized log-probabilities over the shared vocabulary;
// fusion happens in that representation (recorded in trace metadata).
struct FusedStepLogits {
    LogitVector large;                      // p_l
    std::optional<LogitVector> small;       // p_s (contrastive)
    std::optional<LogitVector> small_base;  // p_s (proxy/emulator)
    std::optional<LogitVector> small_chat;  // p_s'
    LogitVector fused;                      // p_f
};

// p_f = p_l.
LogitVector fuse_speculative(const LogitVector& p_l);

// p_f = p_l + beta * (p_l - p_s), elementwise on log-probabilities.
LogitVector fuse_contrastive(const LogitVector& p_l, const LogitVector& p_s, double beta);

// p_f = p_l + (p_s_chat - p_s_base).
LogitVector fuse_proxy_tuning(const LogitVector& p_l, const LogitVector& p_s_base,
                              const LogitVector& p_s_chat);

// Multiplicative form p_f = p_l * (p_s'/p_s), computed in log space and
// renormalized; shares its argmax with fuse_proxy_tuning.
LogitVector fuse_emulator_tuning(const LogitVector& p_l, const LogitVector& p_s_base,
                                 const LogitVector& p_s_chat);

// The slow system: the large model combined with whichever small-model
// sources the strategy needs. Usable directly as a LogitSource whose
// next_logits are the fused reference logits p_f.
class System2 : public LogitSource {
public:
    // Speculative.
    System2(FusionStrategy strategy, std::shared_ptr<const LogitSource> large);
    // Contrastive.
    System2(FusionStrategy strategy, std::shared_ptr<const LogitSource> large,
            std::shared_ptr<const LogitSource> small);
    // Proxy / emulator tuning.
    System2(FusionStrategy strategy, std::shared_ptr<const LogitSource> large,
            std::shared_ptr<const LogitSource> small_base,
            std::shared_ptr<const LogitSource> small_chat);

    // Queries each participating source once and fuses.
    FusedStepLogits next(std::span<const TokenId> prefix) const;

    LogitVector next_logits(std::span<const TokenId> prefix) const override;
    std::uint64_t param_count() const override;
    const Vocabulary& vocab() const override { return large_->vocab(); }

    const FusionStrategy& strategy() const { return strategy_; }
    const LogitSource& large() const { return *large_; }

private:
    void check_shared_vocab() const;

    FusionStrategy strategy_;
    std::shared_ptr<const LogitSource> large_;
    std::shared_ptr<const LogitSource> small_;
    std::shared_ptr<const LogitSource> small_base_;
    std::shared_ptr<const LogitSource> small_chat_;
};

} // namespace fsgen
