#pragma once

#include "fsgen/fusion.hpp"
#include "fsgen/source.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace fsgen {

// One oracle-decoding step: the golden token plus System 1's view of the
// same forced golden prefix.
struct StepRecord {
    TokenId golden = 0;
    TokenId sys1_argmax = 0;
    bool match = false;
    std::vector<ScoredToken> sys1_topk; // logprobs, ordered by (-logprob, id)
    double sys1_entropy = 0.0;
    std::vector<ScoredToken> sys2_topk;

    double sys1_top1_prob() const;
    // top-1 minus top-2 probability; requires at least two ranked entries.
    double sys1_margin() const;
};

// Full record of one oracle scan over a prompt.
struct CollabTrace {
    std::string method;           // fusion kind id, e.g. "speculative"
    std::string pair_name;        // model-pair descriptor, e.g. "s2+l5"
    double scale_ratio = 1.0;
    std::string prompt_id;
    std::vector<TokenId> prompt;
    int top_k = 10;
    // Native per-step collaboration rate of the method as deployed
    // (contrastive/proxy/emulator fuse every step); metadata only.
    std::optional<double> native_cof;
    bool stopped_by_eos = false;
    std::vector<TokenId> golden;
    std::vector<StepRecord> steps;

    std::size_t mismatch_count() const;
    std::vector<std::size_t> mismatch_steps() const;
};

// Generates the golden sequence by greedy decoding over the fused logits;
// at every step System 1 is scored against the golden token under the
// forced golden prefix (the K=1 oracle-decoding regime).
CollabTrace oracle_scan(const System2& system2, const LogitSource& system1,
                        std::span<const TokenId> prompt, std::size_t max_length,
                        int top_k = 10, std::string prompt_id = "", std::string pair_name = "");

// CoF = mismatches / golden length.
double cof_lower(const CollabTrace& trace);

// Checks the lower-bound semantics on a small trace: correcting System 1
// exactly at the mismatch steps reproduces the golden sequence, and no
// strict subset of those interventions does (brute force over subsets).
// Golden length above max_brute_force_length raises TooLargeForBruteForce.
bool verify_minimality(const CollabTrace& trace, const LogitSource& system1,
                       std::size_t max_brute_force_length = 12);

// Mismatch rate per relative-position decile.
struct PositionHistogram {
    std::array<double, 10> rate{};
    std::array<std::uint64_t, 10> mismatches{};
    std::array<std::uint64_t, 10> tokens{};
    std::uint64_t total_tokens = 0;
};

// Step i of a length-T trace lands in bin floor(10*i/T), clamped to 9.
PositionHistogram position_histogram(std::span<const CollabTrace> traces);

// Per-step uncertainty features: for each of the last `window` steps, the
// top-k probabilities, the entropy and the top-1/top-2 probability margin.
// Blocks are ordered oldest to newest; steps before the trace start are
// zero blocks with padded=true.
struct UncertaintyFeatures {
    std::vector<double> values;     // window * (k + 2) entries
    std::vector<bool> padded;       // one flag per block
    std::size_t block_size = 0;
};

UncertaintyFeatures uncertainty_features(const CollabTrace& trace, std::size_t step,
                                         std::size_t window, std::size_t k);

// Match/mismatch summary of System-1 confidence, plus the point-biserial
// correlation between top-1 probability and the match flag.
struct ClassStats {
    std::uint64_t count = 0;
    double mean_top1 = 0.0;
    double std_top1 = 0.0;
    double mean_entropy = 0.0;
    double std_entropy = 0.0;
};

struct UncertaintyReport {
    ClassStats match;
    ClassStats mismatch;
    // Undefined when either class is empty or top-1 probability is constant.
    std::optional<double> point_biserial;
};

UncertaintyReport mismatch_uncertainty_report(std::span<const CollabTrace> traces);

} // namespace fsgen
