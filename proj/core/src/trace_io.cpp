#include "fsgen/trace_io.hpp"

#include "fsgen/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace fsgen {

namespace {

using nlohmann::json;

constexpr double kReplayFloor = -1.0e6;

// JSON has no -inf; zero-probability entries round-trip as null.
json logprob_to_json(double lp) {
    if (std::isinf(lp) && lp < 0) return nullptr;
    return lp;
}

double logprob_from_json(const json& j) {
    if (j.is_null()) return -std::numeric_limits<double>::infinity();
    return j.get<double>();
}

json topk_to_json(const std::vector<ScoredToken>& topk) {
    json arr = json::array();
    for (const auto& [id, lp] : topk) arr.push_back(json::array({id, logprob_to_json(lp)}));
    return arr;
}

std::vector<ScoredToken> topk_from_json(const json& arr) {
    std::vector<ScoredToken> out;
    for (const auto& e : arr)
        out.emplace_back(e.at(0).get<TokenId>(), logprob_from_json(e.at(1)));
    return out;
}

} // namespace

void save_trace(const CollabTrace& trace, const Vocabulary& vocab, std::ostream& out) {
    json header;
    header["type"] = "header";
    header["version"] = 1;
    header["method"] = trace.method;
    header["pair"] = trace.pair_name;
    header["r"] = trace.scale_ratio;
    header["prompt_id"] = trace.prompt_id;
    header["prompt_tokens"] = trace.prompt;
    header["top_k"] = trace.top_k;
    header["fusion_domain"] = "log_probabilities";
    header["native_cof"] = trace.native_cof ? json(*trace.native_cof) : json(nullptr);
    header["stopped"] = trace.stopped_by_eos ? "eos" : "max_length";
    header["vocab"] = vocab.tokens();
    out << header.dump() << '\n';
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const StepRecord& rec = trace.steps[i];
        json step;
        step["type"] = "step";
        step["index"] = i;
        step["golden"] = rec.golden;
        step["sys1_argmax"] = rec.sys1_argmax;
        step["match"] = rec.match;
        step["sys1_topk"] = topk_to_json(rec.sys1_topk);
        step["sys1_entropy"] = rec.sys1_entropy;
        step["sys2_topk"] = topk_to_json(rec.sys2_topk);
        out << step.dump() << '\n';
    }
    if (!out) throw FormatError("failed writing trace stream");
}

void save_trace(const CollabTrace& trace, const Vocabulary& vocab, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open trace file for writing: " + path);
    save_trace(trace, vocab, out);
}

LoadedTrace load_trace(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("trace stream is empty");
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed trace header: ") + e.what());
    }
    if (header.value("type", "") != "header") throw FormatError("first trace record is not a header");
    if (header.value("version", 0) != 1) throw FormatError("unsupported trace version");

    LoadedTrace loaded;
    auto tokens = header.at("vocab").get<std::vector<std::string>>();
    if (tokens.size() < 3) throw FormatError("trace vocabulary too small");
    auto vocab = std::make_shared<Vocabulary>(
        Vocabulary::build(std::span<const std::string>(tokens.data() + 3, tokens.size() - 3)));
    if (vocab->tokens() != tokens)
        throw FormatError("trace vocabulary does not use the reserved control-token layout");
    loaded.vocab = vocab;

    CollabTrace& trace = loaded.trace;
    trace.method = header.at("method").get<std::string>();
    trace.pair_name = header.at("pair").get<std::string>();
    trace.scale_ratio = header.at("r").get<double>();
    trace.prompt_id = header.at("prompt_id").get<std::string>();
    trace.prompt = header.at("prompt_tokens").get<std::vector<TokenId>>();
    trace.top_k = header.at("top_k").get<int>();
    trace.native_cof = header.at("native_cof").is_null()
                           ? std::nullopt
                           : std::optional<double>(header.at("native_cof").get<double>());
    trace.stopped_by_eos = header.at("stopped").get<std::string>() == "eos";

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json step;
        try {
            step = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError(std::string("malformed trace step: ") + e.what());
        }
        if (step.value("type", "") != "step") throw FormatError("unexpected trace record type");
        StepRecord rec;
        rec.golden = step.at("golden").get<TokenId>();
        rec.sys1_argmax = step.at("sys1_argmax").get<TokenId>();
        rec.match = step.at("match").get<bool>();
        rec.sys1_topk = topk_from_json(step.at("sys1_topk"));
        rec.sys1_entropy = step.at("sys1_entropy").get<double>();
        rec.sys2_topk = topk_from_json(step.at("sys2_topk"));
        if (rec.match != (rec.sys1_argmax == rec.golden))
            throw FormatError("trace step match flag is inconsistent");
        trace.steps.push_back(std::move(rec));
        trace.golden.push_back(trace.steps.back().golden);
    }
    return loaded;
}

LoadedTrace load_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open trace file: " + path);
    return load_trace(in);
}

std::shared_ptr<ReplaySource> replay_from_trace(const LoadedTrace& loaded, ReplayStream stream,
                                                bool strict) {
    const Vocabulary& vocab = *loaded.vocab;
    const CollabTrace& trace = loaded.trace;
    std::vector<LogitVector> records;
    records.reserve(trace.steps.size() + 1);
    for (const auto& rec : trace.steps) {
        const auto& topk = stream == ReplayStream::Golden ? rec.sys2_topk : rec.sys1_topk;
        std::vector<double> scores(vocab.size(), kReplayFloor);
        for (const auto& [id, lp] : topk) {
            if (id >= vocab.size()) throw FormatError("trace top-k id outside the vocabulary");
            scores[id] = std::isinf(lp) ? kReplayFloor : lp;
        }
        records.emplace_back(std::move(scores));
    }
    if (trace.stopped_by_eos) {
        std::vector<double> scores(vocab.size(), kReplayFloor);
        scores[vocab.eos()] = 0.0;
        records.emplace_back(std::move(scores));
    }
    return std::make_shared<ReplaySource>(loaded.vocab, std::move(records), trace.prompt.size(),
                                          strict);
}

} // namespace fsgen
