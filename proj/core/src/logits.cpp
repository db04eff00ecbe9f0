#include "fsgen/logits.hpp"

#include "fsgen/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fsgen {

namespace {

constexpr double kSumTolerance = 1e-9;

void check_finite(const std::vector<double>& xs) {
    for (double x : xs)
        if (!std::isfinite(x)) throw InvalidLogits("logit vector contains a non-finite entry");
}

} // namespace

LogitVector::LogitVector(std::vector<double> scores) : scores_(std::move(scores)) {
    check_finite(scores_);
}

LogitVector LogitVector::shifted(double c) const {
    std::vector<double> out(scores_);
    for (double& x : out) x += c;
    return LogitVector(std::move(out));
}

TokenDistribution TokenDistribution::from_logprobs(std::vector<double> logprobs) {
    double sum = 0.0;
    for (double lp : logprobs) {
        if (std::isnan(lp) || lp > 1e-12)
            throw InvalidLogits("log-probability out of range");
        sum += std::exp(lp);
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
        throw InvalidLogits("log-probabilities do not sum to 1 (sum=" + std::to_string(sum) + ")");
    TokenDistribution d;
    d.logprobs_ = std::move(logprobs);
    return d;
}

TokenDistribution TokenDistribution::from_probs(std::span<const double> probs) {
    std::vector<double> lps(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        double p = probs[i];
        if (std::isnan(p) || p < 0.0) throw InvalidLogits("negative probability");
        lps[i] = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    }
    return from_logprobs(std::move(lps));
}

double TokenDistribution::prob(std::size_t i) const { return std::exp(logprobs_[i]); }

TokenDistribution normalize(const LogitVector& logits) {
    if (logits.size() == 0) throw InvalidLogits("cannot normalize an empty logit vector");
    const auto& s = logits.scores();
    double mx = *std::max_element(s.begin(), s.end());
    double sum = 0.0;
    for (double x : s) sum += std::exp(x - mx);
    double lse = mx + std::log(sum);
    std::vector<double> lps(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) lps[i] = s[i] - lse;
    TokenDistribution d = TokenDistribution::from_logprobs(std::move(lps));
    return d;
}

TokenId greedy_argmax(const LogitVector& logits) {
    if (logits.size() == 0) throw InvalidLogits("cannot take argmax of an empty logit vector");
    const auto& s = logits.scores();
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (s[i] > s[best]) best = i;
    return static_cast<TokenId>(best);
}

double entropy(const TokenDistribution& dist) {
    double h = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        double p = dist.prob(i);
        if (p > 0.0) h -= p * dist[i];
    }
    // Clamp tiny negative rounding noise from near-one-hot inputs.
    return h < 0.0 ? 0.0 : h;
}

std::vector<ScoredToken> top_k(const TokenDistribution& dist, std::size_t k) {
    if (k < 1 || k > dist.size())
        throw InvalidK("k=" + std::to_string(k) + " out of range for V=" + std::to_string(dist.size()));
    std::vector<TokenId> ids(dist.size());
    std::iota(ids.begin(), ids.end(), 0u);
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                      [&](TokenId a, TokenId b) {
                          if (dist[a] != dist[b]) return dist[a] > dist[b];
                          return a < b;
                      });
    std::vector<ScoredToken> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.emplace_back(ids[i], dist[ids[i]]);
    return out;
}

} // namespace fsgen
