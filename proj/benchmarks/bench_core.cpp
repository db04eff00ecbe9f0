#include "fsgen/collab.hpp"
#include "fsgen/ngram.hpp"
#include "fsgen/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace fsgen;

namespace {

struct BenchFixture {
    std::shared_ptr<const Vocabulary> vocab;
    std::vector<std::vector<TokenId>> corpus;
    std::shared_ptr<NGramModel> small;
    std::shared_ptr<NGramModel> large;

    BenchFixture() {
        PatternCopySpec spec;
        spec.seed = 1;
        spec.items = 400;
        auto items = generate_pattern_copy(spec);
        std::vector<std::string> words;
        for (const auto& item : items)
            for (const auto& w : item.sentence()) words.push_back(w);
        vocab = std::make_shared<Vocabulary>(Vocabulary::build(words));
        for (const auto& item : items) {
            std::vector<TokenId> ids;
            for (const auto& w : item.sentence()) ids.push_back(vocab->id(w));
            corpus.push_back(std::move(ids));
        }
        small = train_ngram(vocab, corpus, 2);
        large = train_ngram(vocab, corpus, 5);
    }
};

const BenchFixture& fixture() {
    static BenchFixture f;
    return f;
}

void BM_NextLogits(benchmark::State& state) {
    const auto& f = fixture();
    const auto& model = state.range(0) == 2 ? *f.small : *f.large;
    const auto& prefix = f.corpus[0];
    for (auto _ : state) {
        auto logits = model.next_logits(prefix);
        benchmark::DoNotOptimize(logits);
    }
}
BENCHMARK(BM_NextLogits)->Arg(2)->Arg(5);

void BM_Normalize(benchmark::State& state) {
    std::vector<double> scores(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < scores.size(); ++i)
        scores[i] = static_cast<double>(i % 17) * 0.37;
    LogitVector logits(scores);
    for (auto _ : state) {
        auto d = normalize(logits);
        benchmark::DoNotOptimize(d);
    }
}
BENCHMARK(BM_Normalize)->Arg(64)->Arg(1024);

void BM_GreedyDecode(benchmark::State& state) {
    const auto& f = fixture();
    std::vector<TokenId> prompt(f.corpus[0].begin(), f.corpus[0].begin() + 2);
    for (auto _ : state) {
        auto tokens = greedy_decode(*f.large, prompt, 16);
        benchmark::DoNotOptimize(tokens);
    }
}
BENCHMARK(BM_GreedyDecode);

void BM_OracleScan(benchmark::State& state) {
    const auto& f = fixture();
    System2 sys2(FusionStrategy{FusionKind::Speculative, 0.0}, f.large);
    std::vector<TokenId> prompt(f.corpus[0].begin(), f.corpus[0].begin() + 2);
    for (auto _ : state) {
        auto trace = oracle_scan(sys2, *f.small, prompt, 16);
        benchmark::DoNotOptimize(trace);
    }
}
BENCHMARK(BM_OracleScan);

} // namespace

BENCHMARK_MAIN();
