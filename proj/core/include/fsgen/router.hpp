#pragma once

#include "fsgen/collab.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fsgen {

enum class RoutingFeature { Top1Prob, Entropy, Margin };

std::string to_string(RoutingFeature feature);
RoutingFeature routing_feature_from_string(const std::string& name);

// Fires System 2 when the windowed feature crosses the threshold. The
// decision value is the mean of the per-step feature over the last
// min(window, steps so far) steps. Direction is fixed by the feature:
// top1_prob and margin fire at value <= tau, entropy fires at value >= tau.
struct RoutingPolicy {
    RoutingFeature feature = RoutingFeature::Top1Prob;
    double threshold = 0.5;
    std::size_t window = 1;

    bool fires(double value) const;
};

// Offline evaluation against oracle traces. Undefined ratios stay empty
// rather than defaulting to 0.
struct PolicyReport {
    double invocation_rate = 0.0;
    double golden_match_rate = 0.0;
    std::optional<double> recall;    // undefined when the traces hold no mismatch
    std::optional<double> precision; // undefined when the policy never fires
};

struct RoutedDecode {
    std::vector<TokenId> tokens;
    std::vector<bool> invoked; // one flag per emitted token
};

// Live routing: per step System 1 is scored; when the policy fires the
// fused System-2 token is emitted instead of System 1's. The emitted token
// feeds back as context either way (accept-and-continue).
RoutedDecode routed_decode(const System2& system2, const LogitSource& system1,
                           const RoutingPolicy& policy, std::span<const TokenId> prompt,
                           std::size_t max_length);

PolicyReport evaluate_policy(const RoutingPolicy& policy, std::span<const CollabTrace> traces);

// One report per threshold; the grid must be non-empty and sorted ascending.
std::vector<std::pair<double, PolicyReport>> sweep(RoutingFeature feature, std::size_t window,
                                                   std::span<const double> taus,
                                                   std::span<const CollabTrace> traces);

} // namespace fsgen
