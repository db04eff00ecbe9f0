#include "fsgen/router.hpp"

#include "fsgen/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fsgen {

std::string to_string(RoutingFeature feature) {
    switch (feature) {
    case RoutingFeature::Top1Prob: return "top1_prob";
    case RoutingFeature::Entropy: return "entropy";
    case RoutingFeature::Margin: return "margin";
    }
    throw ConfigError("unreachable routing feature");
}

RoutingFeature routing_feature_from_string(const std::string& name) {
    if (name == "top1_prob") return RoutingFeature::Top1Prob;
    if (name == "entropy") return RoutingFeature::Entropy;
    if (name == "margin") return RoutingFeature::Margin;
    throw ConfigError("unknown routing feature: " + name);
}

bool RoutingPolicy::fires(double value) const {
    if (feature == RoutingFeature::Entropy) return value >= threshold;
    return value <= threshold;
}

namespace {

double step_feature(RoutingFeature feature, const StepRecord& rec) {
    switch (feature) {
    case RoutingFeature::Top1Prob: return rec.sys1_top1_prob();
    case RoutingFeature::Entropy: return rec.sys1_entropy;
    case RoutingFeature::Margin: return rec.sys1_margin();
    }
    throw ConfigError("unreachable routing feature");
}

// Mean of the last min(window, len) values of `history` (the current step
// included as the final element).
double window_mean(std::span<const double> history, std::size_t window) {
    const std::size_t take = std::min(window, history.size());
    const auto tail = history.subspan(history.size() - take);
    return std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(take);
}

void check_policy(const RoutingPolicy& policy) {
    if (policy.window < 1) throw InvalidWindow("routing window must be >= 1");
}

} // namespace

RoutedDecode routed_decode(const System2& system2, const LogitSource& system1,
                           const RoutingPolicy& policy, std::span<const TokenId> prompt,
                           std::size_t max_length) {
    check_policy(policy);
    if (!(system1.vocab() == system2.vocab()))
        throw VocabMismatch("System 1 and System 2 must share one vocabulary");
    const TokenId eos = system1.vocab().eos();

    RoutedDecode out;
    std::vector<TokenId> context(prompt.begin(), prompt.end());
    std::vector<double> history;
    for (std::size_t step = 0; step < max_length; ++step) {
        LogitVector sys1_logits;
        try {
            sys1_logits = system1.next_logits(context);
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw BackendError(e.what(), step);
        }
        const TokenDistribution dist = normalize(sys1_logits);
        const auto ranked = top_k(dist, std::min<std::size_t>(2, dist.size()));
        double feature = 0.0;
        switch (policy.feature) {
        case RoutingFeature::Top1Prob: feature = std::exp(ranked[0].second); break;
        case RoutingFeature::Entropy: feature = entropy(dist); break;
        case RoutingFeature::Margin:
            feature = ranked.size() < 2
                          ? std::exp(ranked[0].second)
                          : std::exp(ranked[0].second) - std::exp(ranked[1].second);
            break;
        }
        history.push_back(feature);
        const bool fire = policy.fires(window_mean(history, policy.window));
        TokenId tok;
        if (fire) {
            tok = greedy_argmax(system2.next_logits(context));
        } else {
            tok = greedy_argmax(sys1_logits);
        }
        if (tok == eos) break;
        out.tokens.push_back(tok);
        out.invoked.push_back(fire);
        context.push_back(tok);
    }
    return out;
}

PolicyReport evaluate_policy(const RoutingPolicy& policy, std::span<const CollabTrace> traces) {
    check_policy(policy);
    std::uint64_t total = 0, fired = 0, mismatches = 0, fired_mismatch = 0, golden_ok = 0;
    std::vector<double> history;
    for (const auto& trace : traces) {
        history.clear();
        for (const auto& rec : trace.steps) {
            history.push_back(step_feature(policy.feature, rec));
            const bool fire = policy.fires(window_mean(history, policy.window));
            total += 1;
            if (fire) fired += 1;
            if (!rec.match) mismatches += 1;
            if (fire && !rec.match) fired_mismatch += 1;
            // Offline routed choice: golden when fired, System 1's argmax
            // otherwise (which equals golden exactly on match steps).
            if (fire || rec.match) golden_ok += 1;
        }
    }
    if (total == 0) throw EmptyTrace("policy evaluation needs at least one step");

    PolicyReport report;
    report.invocation_rate = static_cast<double>(fired) / static_cast<double>(total);
    report.golden_match_rate = static_cast<double>(golden_ok) / static_cast<double>(total);
    if (mismatches > 0)
        report.recall = static_cast<double>(fired_mismatch) / static_cast<double>(mismatches);
    if (fired > 0)
        report.precision = static_cast<double>(fired_mismatch) / static_cast<double>(fired);
    return report;
}

std::vector<std::pair<double, PolicyReport>> sweep(RoutingFeature feature, std::size_t window,
                                                   std::span<const double> taus,
                                                   std::span<const CollabTrace> traces) {
    if (taus.empty()) throw ConfigError("sweep grid is empty");
    if (!std::is_sorted(taus.begin(), taus.end()))
        throw ConfigError("sweep grid must be sorted ascending");
    std::vector<std::pair<double, PolicyReport>> out;
    out.reserve(taus.size());
    for (double tau : taus) {
        RoutingPolicy policy{feature, tau, window};
        out.emplace_back(tau, evaluate_policy(policy, traces));
    }
    return out;
}

} // namespace fsgen
