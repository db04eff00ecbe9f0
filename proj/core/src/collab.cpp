#include "fsgen/collab.hpp"

#include "fsgen/error.hpp"
#include "fsgen/ngram.hpp"

#include <algorithm>
#include <cmath>

namespace fsgen {

double StepRecord::sys1_top1_prob() const {
    if (sys1_topk.empty()) throw InvalidK("step record has no top-k entries");
    return std::exp(sys1_topk[0].second);
}

double StepRecord::sys1_margin() const {
    if (sys1_topk.size() < 2) throw InvalidK("margin needs at least two top-k entries");
    return std::exp(sys1_topk[0].second) - std::exp(sys1_topk[1].second);
}

std::size_t CollabTrace::mismatch_count() const {
    std::size_t n = 0;
    for (const auto& s : steps) n += s.match ? 0 : 1;
    return n;
}

std::vector<std::size_t> CollabTrace::mismatch_steps() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < steps.size(); ++i)
        if (!steps[i].match) out.push_back(i);
    return out;
}

CollabTrace oracle_scan(const System2& system2, const LogitSource& system1,
                        std::span<const TokenId> prompt, std::size_t max_length, int top_k_n,
                        std::string prompt_id, std::string pair_name) {
    if (!(system1.vocab() == system2.vocab()))
        throw VocabMismatch("System 1 and System 2 must share one vocabulary");
    if (top_k_n < 1) throw InvalidK("top-k must be >= 1");

    CollabTrace trace;
    trace.method = to_string(system2.strategy().kind);
    trace.pair_name = std::move(pair_name);
    trace.scale_ratio = scale_ratio(system2.large(), system1);
    trace.prompt_id = std::move(prompt_id);
    trace.prompt.assign(prompt.begin(), prompt.end());
    // Records can never rank more than V entries.
    trace.top_k = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(top_k_n), system2.vocab().size()));
    trace.native_cof = system2.strategy().kind == FusionKind::Speculative
                           ? std::nullopt
                           : std::optional<double>(1.0);

    const TokenId eos = system2.vocab().eos();
    const std::size_t k = static_cast<std::size_t>(trace.top_k);
    std::vector<TokenId> context(prompt.begin(), prompt.end());
    for (std::size_t step = 0; step < max_length; ++step) {
        FusedStepLogits fused;
        LogitVector sys1_logits;
        try {
            fused = system2.next(context);
            sys1_logits = system1.next_logits(context);
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw BackendError(e.what(), step);
        }
        const TokenId golden = greedy_argmax(fused.fused);
        if (golden == eos) {
            trace.stopped_by_eos = true;
            break;
        }
        const TokenDistribution sys1_dist = normalize(sys1_logits);
        StepRecord rec;
        rec.golden = golden;
        rec.sys1_argmax = greedy_argmax(sys1_logits);
        rec.match = rec.sys1_argmax == golden;
        rec.sys1_topk = top_k(sys1_dist, std::min(k, sys1_dist.size()));
        rec.sys1_entropy = entropy(sys1_dist);
        const TokenDistribution fused_dist = normalize(fused.fused);
        rec.sys2_topk = top_k(fused_dist, std::min(k, fused_dist.size()));
        trace.steps.push_back(std::move(rec));
        trace.golden.push_back(golden);
        context.push_back(golden);
    }
    return trace;
}

double cof_lower(const CollabTrace& trace) {
    if (trace.steps.empty()) throw EmptyTrace("CoF of an empty trace is undefined");
    return static_cast<double>(trace.mismatch_count()) / static_cast<double>(trace.steps.size());
}

namespace {

// Greedy System-1 rollout with interventions forced at the steps in
// `intervene` (bitmask over golden positions). Returns true when the rollout
// reproduces the golden sequence token for token.
bool rollout_matches(const CollabTrace& trace, const LogitSource& system1,
                     std::uint64_t intervene) {
    std::vector<TokenId> context(trace.prompt);
    for (std::size_t i = 0; i < trace.golden.size(); ++i) {
        TokenId tok;
        if (intervene & (std::uint64_t{1} << i)) {
            tok = trace.golden[i];
        } else {
            tok = greedy_argmax(system1.next_logits(context));
        }
        if (tok != trace.golden[i]) return false;
        context.push_back(tok);
    }
    return true;
}

} // namespace

bool verify_minimality(const CollabTrace& trace, const LogitSource& system1,
                       std::size_t max_brute_force_length) {
    const std::size_t len = trace.golden.size();
    if (len > max_brute_force_length || len >= 64)
        throw TooLargeForBruteForce("golden length " + std::to_string(len) +
                                    " exceeds the brute-force bound");
    const auto mismatches = trace.mismatch_steps();
    std::uint64_t full = 0;
    for (std::size_t i : mismatches) full |= std::uint64_t{1} << i;

    // (a) intervening exactly at the mismatch steps reproduces the golden
    // sequence.
    if (!rollout_matches(trace, system1, full)) return false;

    // (b) no strict subset of the mismatch set does.
    const std::uint64_t subsets = std::uint64_t{1} << mismatches.size();
    for (std::uint64_t pick = 0; pick + 1 < subsets; ++pick) {
        std::uint64_t mask = 0;
        for (std::size_t j = 0; j < mismatches.size(); ++j)
            if (pick & (std::uint64_t{1} << j)) mask |= std::uint64_t{1} << mismatches[j];
        if (rollout_matches(trace, system1, mask)) return false;
    }
    return true;
}

PositionHistogram position_histogram(std::span<const CollabTrace> traces) {
    PositionHistogram hist;
    for (const auto& trace : traces) {
        const std::size_t len = trace.steps.size();
        for (std::size_t i = 0; i < len; ++i) {
            std::size_t bin = 10 * i / len;
            if (bin > 9) bin = 9;
            hist.tokens[bin] += 1;
            if (!trace.steps[i].match) hist.mismatches[bin] += 1;
            hist.total_tokens += 1;
        }
    }
    if (hist.total_tokens == 0) throw EmptyTrace("position histogram needs at least one step");
    for (std::size_t b = 0; b < 10; ++b)
        hist.rate[b] = hist.tokens[b] == 0 ? 0.0
                                           : static_cast<double>(hist.mismatches[b]) /
                                                 static_cast<double>(hist.tokens[b]);
    return hist;
}

UncertaintyFeatures uncertainty_features(const CollabTrace& trace, std::size_t step,
                                         std::size_t window, std::size_t k) {
    if (window < 1) throw InvalidWindow("feature window must be >= 1");
    if (step >= trace.steps.size())
        throw EmptyTrace("feature step " + std::to_string(step) + " outside the trace");
    if (k < 1 || k > static_cast<std::size_t>(trace.top_k))
        throw InvalidK("feature k must be within the recorded top-k width");

    UncertaintyFeatures out;
    out.block_size = k + 2;
    out.values.assign(window * out.block_size, 0.0);
    out.padded.assign(window, true);
    for (std::size_t j = 0; j < window; ++j) {
        // Block j covers step (step - window + 1 + j); negative ones stay padded.
        const std::ptrdiff_t s =
            static_cast<std::ptrdiff_t>(step) - static_cast<std::ptrdiff_t>(window) + 1 +
            static_cast<std::ptrdiff_t>(j);
        if (s < 0) continue;
        const StepRecord& rec = trace.steps[static_cast<std::size_t>(s)];
        if (rec.sys1_topk.size() < k) throw InvalidK("step record stores fewer top-k entries");
        double* block = out.values.data() + j * out.block_size;
        for (std::size_t i = 0; i < k; ++i) block[i] = std::exp(rec.sys1_topk[i].second);
        block[k] = rec.sys1_entropy;
        block[k + 1] = rec.sys1_margin();
        out.padded[j] = false;
    }
    return out;
}

namespace {

void finalize(ClassStats& s, double sum1, double sumsq1, double sumH, double sumsqH) {
    if (s.count == 0) return;
    const double n = static_cast<double>(s.count);
    s.mean_top1 = sum1 / n;
    s.mean_entropy = sumH / n;
    const double var1 = std::max(0.0, sumsq1 / n - s.mean_top1 * s.mean_top1);
    const double varH = std::max(0.0, sumsqH / n - s.mean_entropy * s.mean_entropy);
    s.std_top1 = std::sqrt(var1);
    s.std_entropy = std::sqrt(varH);
}

} // namespace

UncertaintyReport mismatch_uncertainty_report(std::span<const CollabTrace> traces) {
    UncertaintyReport report;
    double m_sum1 = 0, m_sq1 = 0, m_sumH = 0, m_sqH = 0;
    double x_sum1 = 0, x_sq1 = 0, x_sumH = 0, x_sqH = 0;
    for (const auto& trace : traces) {
        for (const auto& rec : trace.steps) {
            const double p1 = rec.sys1_top1_prob();
            const double h = rec.sys1_entropy;
            if (rec.match) {
                report.match.count += 1;
                m_sum1 += p1;
                m_sq1 += p1 * p1;
                m_sumH += h;
                m_sqH += h * h;
            } else {
                report.mismatch.count += 1;
                x_sum1 += p1;
                x_sq1 += p1 * p1;
                x_sumH += h;
                x_sqH += h * h;
            }
        }
    }
    if (report.match.count + report.mismatch.count == 0)
        throw EmptyTrace("uncertainty report needs at least one step");
    finalize(report.match, m_sum1, m_sq1, m_sumH, m_sqH);
    finalize(report.mismatch, x_sum1, x_sq1, x_sumH, x_sqH);

    // Point-biserial r between top-1 probability and the binary match flag.
    const double n1 = static_cast<double>(report.match.count);
    const double n0 = static_cast<double>(report.mismatch.count);
    const double n = n1 + n0;
    if (n1 > 0 && n0 > 0) {
        const double mean = (m_sum1 + x_sum1) / n;
        const double var = (m_sq1 + x_sq1) / n - mean * mean;
        if (var > 0) {
            const double sd = std::sqrt(var);
            report.point_biserial =
                (report.match.mean_top1 - report.mismatch.mean_top1) / sd *
                std::sqrt(n1 * n0 / (n * n));
        }
    }
    return report;
}

} // namespace fsgen
