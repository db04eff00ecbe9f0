#include "fsgen/collab.hpp"
#include "fsgen/error.hpp"
#include "fsgen/ngram.hpp"
#include "fsgen/trace_io.hpp"

#include "testutil.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace fsgen;
using namespace testutil;

namespace {

// Minimal consistent step record for hand-built traces: V=2 view with the
// given top-1 probability.
StepRecord make_step(TokenId golden, TokenId sys1, double top1) {
    StepRecord rec;
    rec.golden = golden;
    rec.sys1_argmax = sys1;
    rec.match = golden == sys1;
    const double rest = 1.0 - top1;
    rec.sys1_topk = {{sys1, std::log(top1)},
                     {sys1 == 0 ? TokenId{1} : TokenId{0},
                      rest > 0 ? std::log(rest) : -std::numeric_limits<double>::infinity()}};
    rec.sys1_entropy = 0.0;
    if (top1 > 0 && rest > 0)
        rec.sys1_entropy = -(top1 * std::log(top1) + rest * std::log(rest));
    rec.sys2_topk = {{golden, std::log(0.9)}, {golden == 0 ? TokenId{1} : TokenId{0}, std::log(0.1)}};
    return rec;
}

CollabTrace make_trace(const std::vector<StepRecord>& steps) {
    CollabTrace t;
    t.method = "speculative";
    t.pair_name = "hand";
    t.top_k = 2;
    for (const auto& s : steps) {
        t.steps.push_back(s);
        t.golden.push_back(s.golden);
    }
    return t;
}

struct TwoStepSetup {
    ToyCorpus corpus;
    std::shared_ptr<NGramModel> large;
    std::shared_ptr<NGramModel> sys1;
};

// System 2 decodes A B <eos>; System 1 agrees at step 0 and prefers C after A.
TwoStepSetup two_step_disagreement() {
    TwoStepSetup s;
    s.corpus = make_corpus({"A B", "A C"});
    std::vector<std::vector<TokenId>> large_corpus{s.corpus.sentences[0]};
    std::vector<std::vector<TokenId>> sys1_corpus{s.corpus.sentences[1]};
    s.large = train_ngram(s.corpus.vocab, large_corpus, 2);
    s.sys1 = train_ngram(s.corpus.vocab, sys1_corpus, 2);
    return s;
}

} // namespace

TEST_CASE("oracle_scan: self-agreement gives CoF 0") {
    auto corpus = make_corpus({"a b a b", "b a b a", "a b a"});
    auto model = train_ngram(corpus.vocab, corpus.sentences, 2);
    System2 sys2(FusionStrategy{FusionKind::Speculative, 0.0}, model);
    std::vector<TokenId> prompt{corpus.vocab->id("a")};
    auto trace = oracle_scan(sys2, *model, prompt, 12);
    REQUIRE(!trace.steps.empty());
    CHECK(trace.mismatch_count() == 0);
    CHECK(cof_lower(trace) == 0.0);
    CHECK(verify_minimality(trace, *model));
}

TEST_CASE("oracle_scan: hand-set two-step disagreement gives CoF 0.5") {
    auto setup = two_step_disagreement();
    System2 sys2(FusionStrategy{FusionKind::Speculative, 0.0}, setup.large);
    auto trace = oracle_scan(sys2, *setup.sys1, {}, 12);

    const TokenId a = setup.corpus.vocab->id("A");
    const TokenId b = setup.corpus.vocab->id("B");
    const TokenId c = setup.corpus.vocab->id("C");
    REQUIRE(trace.golden == std::vector<TokenId>{a, b});
    CHECK(trace.stopped_by_eos);
    CHECK(trace.steps[0].match);
    CHECK(!trace.steps[1].match);
    CHECK(trace.steps[1].sys1_argmax == c);
    CHECK(cof_lower(trace) == 0.5);

    // Minimality: the empty subset fails exactly at step 1.
    CHECK(verify_minimality(trace, *setup.sys1));
}

TEST_CASE("oracle_scan: speculative golden equals the large model's greedy decode") {
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 20; ++trial) {
        auto lines = random_lines(rng, 6 + rng() % 6, 5, {"a", "b", "c"});
        auto corpus = make_corpus(lines);
        auto small = train_ngram(corpus.vocab, corpus.sentences, 1);
        auto large = train_ngram(corpus.vocab, corpus.sentences, 2);
        System2 sys2(FusionStrategy{FusionKind::Speculative, 0.0}, large);
        std::vector<TokenId> prompt{corpus.vocab->id("a")};
        auto trace = oracle_scan(sys2, *small, prompt, 10);
        CHECK(trace.golden == greedy_decode(*large, prompt, 10));
        CHECK(trace.steps.size() == trace.golden.size());
        for (const auto& rec : trace.steps)
            CHECK(rec.match == (rec.sys1_argmax == rec.golden));
    }
}

TEST_CASE("oracle_scan clamps the recorded top-k to the vocabulary size") {
    auto setup = two_step_disagreement(); // V = 6
    System2 sys2(FusionStrategy{FusionKind::Speculative, 0.0}, setup.large);
    auto trace = oracle_scan(sys2, *setup.sys1, {}, 12, 50);
    CHECK(trace.top_k == 6);
    for (const auto& rec : trace.steps) CHECK(rec.sys1_topk.size() == 6);
    // Features at the recorded width stay available.
    auto f = uncertainty_features(trace, 0, 1, 6);
    CHECK(f.values.size() == 8);
}

TEST_CASE("cof_lower: definitional arithmetic") {
    std::vector<StepRecord> all_match(10, make_step(0, 0, 0.9));
    CHECK(cof_lower(make_trace(all_match)) == 0.0);

    std::vector<StepRecord> all_miss(7, make_step(0, 1, 0.6));
    CHECK(cof_lower(make_trace(all_miss)) == 1.0);

    std::vector<StepRecord> mixed;
    for (int i = 0; i < 15; ++i) mixed.push_back(make_step(0, i < 3 ? 1 : 0, 0.8));
    CHECK(cof_lower(make_trace(mixed)) == doctest::Approx(0.2));

    CHECK_THROWS_AS(cof_lower(make_trace({})), EmptyTrace);
}

TEST_CASE("verify_minimality: randomized small instances always minimal") {
    std::mt19937_64 rng(77);
    int nontrivial = 0;
    for (int trial = 0; trial < 30; ++trial) {
        auto lines_a = random_lines(rng, 3 + rng() % 5, 4, {"a", "b", "c"});
        auto lines_b = random_lines(rng, 3 + rng() % 5, 4, {"a", "b", "c"});
        std::vector<std::string> all(lines_a);
        all.insert(all.end(), lines_b.begin(), lines_b.end());
        auto corpus = make_corpus(all);
        auto encode_lines = [&](const std::vector<std::string>& lines) {
            std::vector<std::vector<TokenId>> out;
            for (const auto& l : lines) out.push_back(corpus.vocab->encode(l));
            return out;
        };
        auto large = train_ngram(corpus.vocab, encode_lines(lines_a), 2);
        const std::size_t order1 = 1 + rng() % 2;
        auto sys1 = train_ngram(corpus.vocab, encode_lines(lines_b), order1);
        System2 sys2(FusionStrategy{FusionKind::Speculative, 0.0}, large);
        std::vector<TokenId> prompt{corpus.vocab->id("a")};
        auto trace = oracle_scan(sys2, *sys1, prompt, 8);
        CHECK(verify_minimality(trace, *sys1));
        if (trace.mismatch_count() > 0) ++nontrivial;
    }
    CHECK(nontrivial > 5); // the trials genuinely exercise interventions
}

TEST_CASE("verify_minimality: randomized unigram pairs") {
    std::mt19937_64 rng(78);
    for (int trial = 0; trial < 50; ++trial) {
        auto lines_a = random_lines(rng, 2 + rng() % 4, 3, {"a", "b", "c"});
        auto lines_b = random_lines(rng, 2 + rng() % 4, 3, {"a", "b", "c"});
        std::vector<std::string> all(lines_a);
        all.insert(all.end(), lines_b.begin(), lines_b.end());
        auto corpus = make_corpus(all);
        auto encode_lines = [&](const std::vector<std::string>& lines) {
            std::vector<std::vector<TokenId>> out;
            for (const auto& l : lines) out.push_back(corpus.vocab->encode(l));
            return out;
        };
        auto large = train_ngram(corpus.vocab, encode_lines(lines_a), 1);
        auto sys1 = train_ngram(corpus.vocab, encode_lines(lines_b), 1);
        System2 sys2(FusionStrategy{FusionKind::Speculative, 0.0}, large);
        auto trace = oracle_scan(sys2, *sys1, {}, 8);
        CHECK(verify_minimality(trace, *sys1));
    }
}

TEST_CASE("verify_minimality: refuses oversized traces") {
    std::vector<StepRecord> steps(13, make_step(0, 0, 0.9));
    auto trace = make_trace(steps);
    auto vocab = std::make_shared<Vocabulary>(Vocabulary::from_text("A"));
    FunctionSource dummy(vocab, [&](std::span<const TokenId>) {
        return one_hot(vocab->size(), 0);
    });
    CHECK_THROWS_AS(verify_minimality(trace, dummy), TooLargeForBruteForce);
}

TEST_CASE("position_histogram: direct binning, zeros, permutation invariance") {
    std::vector<StepRecord> steps;
    for (int i = 0; i < 10; ++i) steps.push_back(make_step(0, i == 0 ? 1 : 0, 0.9));
    auto trace = make_trace(steps);
    auto hist = position_histogram(std::vector<CollabTrace>{trace});
    CHECK(hist.rate[0] == 1.0);
    for (int b = 1; b < 10; ++b) CHECK(hist.rate[b] == 0.0);
    CHECK(hist.total_tokens == 10);

    std::vector<StepRecord> clean(25, make_step(0, 0, 0.9));
    auto zeros = position_histogram(std::vector<CollabTrace>{make_trace(clean)});
    for (int b = 0; b < 10; ++b) CHECK(zeros.rate[b] == 0.0);

    // Permutation invariance over a mixed batch.
    std::mt19937_64 rng(9);
    std::vector<CollabTrace> batch;
    for (int t = 0; t < 12; ++t) {
        std::vector<StepRecord> s;
        const std::size_t len = 3 + rng() % 14;
        for (std::size_t i = 0; i < len; ++i)
            s.push_back(make_step(0, rng() % 3 == 0 ? 1 : 0, 0.8));
        batch.push_back(make_trace(s));
    }
    auto h1 = position_histogram(batch);
    std::reverse(batch.begin(), batch.end());
    auto h2 = position_histogram(batch);
    CHECK(h1.tokens == h2.tokens);
    CHECK(h1.mismatches == h2.mismatches);

    CHECK_THROWS_AS(position_histogram(std::vector<CollabTrace>{make_trace({})}), EmptyTrace);
}

TEST_CASE("position_histogram: binomial concentration at p=0.3") {
    std::mt19937_64 rng(123);
    std::vector<CollabTrace> traces;
    for (int t = 0; t < 100; ++t) {
        std::vector<StepRecord> steps;
        for (int i = 0; i < 100; ++i)
            steps.push_back(make_step(0, rng() % 10 < 3 ? 1 : 0, 0.8));
        traces.push_back(make_trace(steps));
    }
    auto hist = position_histogram(traces);
    CHECK(hist.total_tokens == 10000);
    for (int b = 0; b < 10; ++b) {
        CHECK(hist.rate[b] > 0.25);
        CHECK(hist.rate[b] < 0.35);
    }
}

TEST_CASE("uncertainty_features: frozen blocks and padding") {
    // One-hot step: top-2 probs (1, 0), entropy 0, margin 1.
    StepRecord onehot;
    onehot.golden = onehot.sys1_argmax = 3;
    onehot.match = true;
    onehot.sys1_topk = {{3, 0.0}, {0, -std::numeric_limits<double>::infinity()}};
    onehot.sys1_entropy = 0.0;
    onehot.sys2_topk = onehot.sys1_topk;
    auto trace1 = make_trace({onehot});
    auto f1 = uncertainty_features(trace1, 0, 1, 2);
    REQUIRE(f1.values.size() == 4);
    CHECK(f1.values[0] == doctest::Approx(1.0));
    CHECK(f1.values[1] == doctest::Approx(0.0));
    CHECK(f1.values[2] == doctest::Approx(0.0));
    CHECK(f1.values[3] == doctest::Approx(1.0));
    CHECK(!f1.padded[0]);

    // Uniform V=4 step: (0.25, 0.25, ln 4, 0).
    StepRecord uniform;
    uniform.golden = uniform.sys1_argmax = 0;
    uniform.match = true;
    const double lp = std::log(0.25);
    uniform.sys1_topk = {{0, lp}, {1, lp}, {2, lp}, {3, lp}};
    uniform.sys1_entropy = std::log(4.0);
    uniform.sys2_topk = uniform.sys1_topk;
    CollabTrace five = make_trace(std::vector<StepRecord>(5, uniform));
    five.top_k = 4;
    auto f2 = uncertainty_features(five, 0, 1, 2);
    CHECK(f2.values[0] == doctest::Approx(0.25));
    CHECK(f2.values[1] == doctest::Approx(0.25));
    CHECK(f2.values[2] == doctest::Approx(std::log(4.0)));
    CHECK(f2.values[3] == doctest::Approx(0.0));

    // w=5 over five identical steps: the w=1 block tiled five times.
    auto f5 = uncertainty_features(five, 4, 5, 2);
    REQUIRE(f5.values.size() == 20);
    for (int j = 0; j < 5; ++j) {
        CHECK(!f5.padded[j]);
        for (int i = 0; i < 4; ++i)
            CHECK(f5.values[j * 4 + i] == doctest::Approx(f2.values[i]));
    }

    // Window reaching before the trace start: leading zero blocks flagged.
    auto padded = uncertainty_features(five, 1, 4, 2);
    CHECK(padded.padded[0]);
    CHECK(padded.padded[1]);
    CHECK(!padded.padded[2]);
    CHECK(!padded.padded[3]);
    CHECK(padded.values[0] == 0.0);

    CHECK_THROWS_AS(uncertainty_features(five, 0, 0, 2), InvalidWindow);
}

TEST_CASE("mismatch_uncertainty_report: constructed confidence split") {
    // Mismatch exactly when top-1 prob < 0.5.
    std::mt19937_64 rng(31);
    std::vector<StepRecord> steps;
    const std::vector<double> probs{0.3, 0.4, 0.6, 0.9};
    for (int i = 0; i < 400; ++i) {
        const double p = probs[rng() % probs.size()];
        steps.push_back(make_step(0, p < 0.5 ? 1 : 0, p));
    }
    auto report = mismatch_uncertainty_report(std::vector<CollabTrace>{make_trace(steps)});
    REQUIRE(report.match.count > 0);
    REQUIRE(report.mismatch.count > 0);
    CHECK(report.match.mean_top1 > report.mismatch.mean_top1);
    REQUIRE(report.point_biserial.has_value());
    CHECK(*report.point_biserial > 0.5);

    // Degenerate all-match input: no mismatch rows, undefined correlation.
    std::vector<StepRecord> clean(20, make_step(0, 0, 0.9));
    auto degen = mismatch_uncertainty_report(std::vector<CollabTrace>{make_trace(clean)});
    CHECK(degen.mismatch.count == 0);
    CHECK(degen.match.count == 20);
    CHECK(!degen.point_biserial.has_value());
}

TEST_CASE("trace IO: bit-exact round trip and golden replay") {
    auto setup = two_step_disagreement();
    System2 sys2(FusionStrategy{FusionKind::Speculative, 0.0}, setup.large);
    auto trace = oracle_scan(sys2, *setup.sys1, {}, 12, 3, "p0", "s+l");

    std::ostringstream first;
    save_trace(trace, *setup.corpus.vocab, first);
    std::istringstream stream(first.str());
    auto loaded = load_trace(stream);

    CHECK(loaded.trace.method == trace.method);
    CHECK(loaded.trace.pair_name == trace.pair_name);
    CHECK(loaded.trace.prompt == trace.prompt);
    CHECK(loaded.trace.golden == trace.golden);
    CHECK(loaded.trace.stopped_by_eos == trace.stopped_by_eos);
    CHECK(*loaded.vocab == *setup.corpus.vocab);
    REQUIRE(loaded.trace.steps.size() == trace.steps.size());
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        CHECK(loaded.trace.steps[i].sys1_topk == trace.steps[i].sys1_topk);
        CHECK(loaded.trace.steps[i].sys2_topk == trace.steps[i].sys2_topk);
        CHECK(loaded.trace.steps[i].sys1_entropy == trace.steps[i].sys1_entropy);
    }

    std::ostringstream second;
    save_trace(loaded.trace, *loaded.vocab, second);
    CHECK(first.str() == second.str());

    // Golden replay reproduces the recorded sequence and live decode.
    auto replay = replay_from_trace(loaded, ReplayStream::Golden);
    auto replayed = greedy_decode(*replay, trace.prompt, 12);
    CHECK(replayed == trace.golden);
    CHECK(replayed == greedy_decode(sys2, trace.prompt, 12));
}

TEST_CASE("trace IO: System-1 replay stream reproduces its argmax sequence") {
    auto setup = two_step_disagreement();
    System2 sys2(FusionStrategy{FusionKind::Speculative, 0.0}, setup.large);
    auto trace = oracle_scan(sys2, *setup.sys1, {}, 12);
    std::ostringstream out;
    save_trace(trace, *setup.corpus.vocab, out);
    std::istringstream in(out.str());
    auto loaded = load_trace(in);
    auto replay = replay_from_trace(loaded, ReplayStream::System1);
    auto decoded = greedy_decode(*replay, trace.prompt, 12);
    std::vector<TokenId> expected;
    for (const auto& rec : trace.steps) expected.push_back(rec.sys1_argmax);
    CHECK(decoded == expected);
}

TEST_CASE("uncertainty_features rejects k beyond the recorded width") {
    std::vector<StepRecord> steps(3, make_step(0, 0, 0.8));
    auto trace = make_trace(steps); // records top-2
    CHECK_THROWS_AS(uncertainty_features(trace, 0, 1, 3), InvalidK);
}

TEST_CASE("trace IO: strict replay drift detection") {
    auto setup = two_step_disagreement();
    System2 sys2(FusionStrategy{FusionKind::Speculative, 0.0}, setup.large);
    auto trace = oracle_scan(sys2, *setup.sys1, {}, 12);
    std::ostringstream out;
    save_trace(trace, *setup.corpus.vocab, out);
    std::istringstream in(out.str());
    auto loaded = load_trace(in);
    auto replay = replay_from_trace(loaded, ReplayStream::Golden, true);
    // Asking one step past the recorded end (golden + eos record) throws.
    std::vector<TokenId> long_prefix(trace.prompt);
    for (TokenId t : trace.golden) long_prefix.push_back(t);
    long_prefix.push_back(setup.corpus.vocab->eos());
    CHECK_THROWS_AS(replay->next_logits(long_prefix), ReplayExhausted);
}
