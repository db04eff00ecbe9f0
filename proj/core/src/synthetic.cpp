#include "fsgen/synthetic.hpp"

#include "fsgen/error.hpp"

#include <random>

namespace fsgen {

std::vector<std::string> TaskItem::sentence() const {
    std::vector<std::string> s(prompt);
    s.insert(s.end(), continuation.begin(), continuation.end());
    return s;
}

namespace {

// Weighted pick with plain integer arithmetic on a scaled ladder, so the
// result depends only on the engine's (standardized) output stream.
std::size_t pick_weighted(std::mt19937_64& rng, const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0) * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return weights.size() - 1;
}

std::uint64_t pick_uniform(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

} // namespace

std::vector<TaskItem> generate_pattern_copy(const PatternCopySpec& spec) {
    if (spec.items == 0) throw ConfigError("pattern_copy needs at least one item");
    if (spec.keys < 2) throw ConfigError("pattern_copy needs at least two keys");
    if (spec.depth_weights.empty()) throw ConfigError("pattern_copy needs depth weights");
    std::mt19937_64 rng(spec.seed);
    std::vector<TaskItem> items;
    items.reserve(spec.items);
    for (std::size_t i = 0; i < spec.items; ++i) {
        const std::size_t depth = 1 + pick_weighted(rng, spec.depth_weights);
        const std::size_t key = pick_uniform(rng, spec.keys);
        TaskItem item;
        item.prompt.push_back("k" + std::to_string(key));
        for (std::size_t p = 1; p < depth; ++p) item.prompt.push_back("pad");
        item.prompt.push_back("sep");
        item.continuation.push_back("m" + std::to_string(key));
        for (std::size_t f = 1; f <= spec.filler_len; ++f)
            item.continuation.push_back("f" + std::to_string(f));
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<TaskItem> generate_arith_chain(const ArithChainSpec& spec) {
    if (spec.items == 0) throw ConfigError("arith_chain needs at least one item");
    if (spec.modulus < 2) throw ConfigError("arith_chain modulus must be >= 2");
    if (spec.max_step < 1) throw ConfigError("arith_chain max_step must be >= 1");
    if (spec.sums < 1) throw ConfigError("arith_chain needs at least one sum");
    std::mt19937_64 rng(spec.seed);
    std::vector<TaskItem> items;
    items.reserve(spec.items);
    for (std::size_t i = 0; i < spec.items; ++i) {
        std::uint32_t value = static_cast<std::uint32_t>(pick_uniform(rng, spec.modulus));
        const std::uint32_t step =
            1 + static_cast<std::uint32_t>(pick_uniform(rng, spec.max_step));
        TaskItem item;
        item.prompt = {std::to_string(value), "+", std::to_string(step), "="};
        for (std::size_t s = 0; s < spec.sums; ++s) {
            value = (value + step) % spec.modulus;
            item.continuation.push_back(std::to_string(value));
            if (s + 1 < spec.sums) {
                item.continuation.push_back(";");
                item.continuation.push_back(std::to_string(value));
                item.continuation.push_back("+");
                item.continuation.push_back(std::to_string(step));
                item.continuation.push_back("=");
            }
        }
        items.push_back(std::move(item));
    }
    return items;
}

} // namespace fsgen
