#include "fsgen/experiment.hpp"

#include "fsgen/csv.hpp"
#include "fsgen/error.hpp"
#include "fsgen/trace_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#ifndef FSGEN_VERSION
#define FSGEN_VERSION "0.0.0"
#endif

namespace fsgen {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

bool valid_name(const std::string& name) {
    if (name.empty()) return false;
    for (char c : name)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    return true;
}

CorpusSpec parse_corpus(const json& j, std::uint64_t default_seed) {
    CorpusSpec spec;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "file") {
        spec.kind = CorpusSpec::Kind::File;
        spec.path = j.at("path").get<std::string>();
    } else if (kind == "pattern_copy") {
        spec.kind = CorpusSpec::Kind::PatternCopy;
        auto& p = spec.pattern_copy;
        p.seed = j.value("seed", default_seed);
        p.items = j.value("items", p.items);
        p.keys = j.value("keys", p.keys);
        p.filler_len = j.value("filler_len", p.filler_len);
        if (j.contains("depth_weights"))
            p.depth_weights = j.at("depth_weights").get<std::vector<double>>();
    } else if (kind == "arith_chain") {
        spec.kind = CorpusSpec::Kind::ArithChain;
        auto& a = spec.arith_chain;
        a.seed = j.value("seed", default_seed);
        a.items = j.value("items", a.items);
        a.modulus = j.value("modulus", a.modulus);
        a.max_step = j.value("max_step", a.max_step);
        a.sums = j.value("sums", a.sums);
    } else {
        throw ConfigError("unknown corpus kind: " + kind);
    }
    return spec;
}

json corpus_to_json(const CorpusSpec& spec) {
    json j;
    switch (spec.kind) {
    case CorpusSpec::Kind::File:
        j["kind"] = "file";
        j["path"] = spec.path;
        break;
    case CorpusSpec::Kind::PatternCopy:
        j["kind"] = "pattern_copy";
        j["seed"] = spec.pattern_copy.seed;
        j["items"] = spec.pattern_copy.items;
        j["keys"] = spec.pattern_copy.keys;
        j["filler_len"] = spec.pattern_copy.filler_len;
        j["depth_weights"] = spec.pattern_copy.depth_weights;
        break;
    case CorpusSpec::Kind::ArithChain:
        j["kind"] = "arith_chain";
        j["seed"] = spec.arith_chain.seed;
        j["items"] = spec.arith_chain.items;
        j["modulus"] = spec.arith_chain.modulus;
        j["max_step"] = spec.arith_chain.max_step;
        j["sums"] = spec.arith_chain.sums;
        break;
    }
    return j;
}

void validate(const ExperimentConfig& config) {
    if (config.version != 1) throw ConfigError("unsupported config version");
    if (config.models.size() < 2) throw ConfigError("config needs at least two models");
    if (config.methods.empty()) throw ConfigError("config needs at least one method");
    std::set<std::string> names;
    for (const auto& m : config.models) {
        if (!valid_name(m.name)) throw ConfigError("invalid model name: " + m.name);
        if (!names.insert(m.name).second) throw ConfigError("duplicate model name: " + m.name);
        if (m.order < 1) throw ConfigError("model order must be >= 1: " + m.name);
        if (!(m.fraction > 0.0 && m.fraction <= 1.0))
            throw ConfigError("model fraction must be in (0, 1]: " + m.name);
        if (!(m.lambda > 0.0 && m.lambda <= 1.0))
            throw ConfigError("model lambda must be in (0, 1]: " + m.name);
    }
    std::set<std::string> chat_bases;
    for (const auto& c : config.chat) {
        if (!valid_name(c.name)) throw ConfigError("invalid chat model name: " + c.name);
        if (!names.insert(c.name).second) throw ConfigError("duplicate model name: " + c.name);
        if (!chat_bases.insert(c.base).second)
            throw ConfigError("base model has more than one chat variant: " + c.base);
        if (!(c.tail_fraction > 0.0 && c.tail_fraction <= 1.0))
            throw ConfigError("chat tail_fraction must be in (0, 1]: " + c.name);
    }
    for (const auto& method : config.methods) fusion_kind_from_string(method);
    if (config.beta < 0.0) throw ConfigError("beta must be >= 0");
    if (config.max_length < 1) throw ConfigError("max_length must be >= 1");
    if (config.top_k < 2) throw ConfigError("top_k must be >= 2");
    if (config.router.window < 1) throw ConfigError("router window must be >= 1");
    if (config.router.grid < 2) throw ConfigError("router grid must have >= 2 points");
    for (const auto& f : config.router.features) routing_feature_from_string(f);
    if (config.prompts.count < 1) throw ConfigError("prompt set must be non-empty");
}

} // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config JSON: ") + e.what());
    }
    ExperimentConfig config;
    try {
        config.version = j.value("version", 1);
        config.task = j.value("task", std::string("toy"));
        if (!j.contains("seed")) throw ConfigError("config requires a seed");
        config.seed = j.at("seed").get<std::uint64_t>();
        config.corpus = parse_corpus(j.at("corpus"), config.seed);
        for (const auto& m : j.at("models")) {
            ModelSpec spec;
            spec.name = m.at("name").get<std::string>();
            spec.order = m.at("order").get<std::size_t>();
            spec.fraction = m.value("fraction", 1.0);
            spec.lambda = m.value("lambda", NGramModel::kDefaultLambda);
            config.models.push_back(std::move(spec));
        }
        if (j.contains("chat")) {
            for (const auto& c : j.at("chat")) {
                ChatSpec spec;
                spec.name = c.at("name").get<std::string>();
                spec.base = c.at("base").get<std::string>();
                spec.tail_fraction = c.value("tail_fraction", 0.2);
                config.chat.push_back(std::move(spec));
            }
        }
        config.methods = j.at("methods").get<std::vector<std::string>>();
        config.beta = j.value("beta", 0.5);
        if (j.contains("pairs")) {
            for (const auto& p : j.at("pairs"))
                config.pairs.push_back(
                    {p.at("small").get<std::string>(), p.at("large").get<std::string>()});
        }
        config.prompts.seed = config.seed + 1;
        if (j.contains("prompts")) {
            const auto& p = j.at("prompts");
            const std::string kind = p.value("kind", std::string("corpus_tail"));
            if (kind == "corpus_tail") config.prompts.kind = PromptSpec::Kind::CorpusTail;
            else if (kind == "generator") config.prompts.kind = PromptSpec::Kind::Generator;
            else if (kind == "file") config.prompts.kind = PromptSpec::Kind::File;
            else throw ConfigError("unknown prompt kind: " + kind);
            config.prompts.count = p.value("count", config.prompts.count);
            config.prompts.prefix_len = p.value("prefix_len", config.prompts.prefix_len);
            config.prompts.seed = p.value("seed", config.seed + 1);
            config.prompts.path = p.value("path", std::string());
        }
        config.max_length = j.value("max_length", config.max_length);
        config.top_k = j.value("top_k", config.top_k);
        if (j.contains("router")) {
            const auto& r = j.at("router");
            if (r.contains("features"))
                config.router.features = r.at("features").get<std::vector<std::string>>();
            config.router.window = r.value("window", config.router.window);
            config.router.grid = r.value("grid", config.router.grid);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
    validate(config);
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string canonical_config_json(const ExperimentConfig& config) {
    json j;
    j["version"] = config.version;
    j["task"] = config.task;
    j["seed"] = config.seed;
    j["corpus"] = corpus_to_json(config.corpus);
    j["models"] = json::array();
    for (const auto& m : config.models)
        j["models"].push_back({{"name", m.name},
                               {"order", m.order},
                               {"fraction", m.fraction},
                               {"lambda", m.lambda}});
    j["chat"] = json::array();
    for (const auto& c : config.chat)
        j["chat"].push_back(
            {{"name", c.name}, {"base", c.base}, {"tail_fraction", c.tail_fraction}});
    j["methods"] = config.methods;
    j["beta"] = config.beta;
    j["pairs"] = json::array();
    for (const auto& p : config.pairs)
        j["pairs"].push_back({{"small", p.small}, {"large", p.large}});
    json prompts;
    switch (config.prompts.kind) {
    case PromptSpec::Kind::CorpusTail: prompts["kind"] = "corpus_tail"; break;
    case PromptSpec::Kind::Generator: prompts["kind"] = "generator"; break;
    case PromptSpec::Kind::File: prompts["kind"] = "file"; break;
    }
    prompts["count"] = config.prompts.count;
    prompts["prefix_len"] = config.prompts.prefix_len;
    prompts["seed"] = config.prompts.seed;
    prompts["path"] = config.prompts.path;
    j["prompts"] = prompts;
    j["max_length"] = config.max_length;
    j["top_k"] = config.top_k;
    j["router"] = {{"features", config.router.features},
                   {"window", config.router.window},
                   {"grid", config.router.grid}};
    return j.dump();
}

std::string config_hash(const ExperimentConfig& config) {
    const std::string text = canonical_config_json(config);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<std::vector<std::string>> corpus_sentences(const CorpusSpec& spec) {
    std::vector<std::vector<std::string>> sentences;
    switch (spec.kind) {
    case CorpusSpec::Kind::File: {
        std::ifstream in(spec.path, std::ios::binary);
        if (!in) throw EmptyCorpus("cannot open corpus file: " + spec.path);
        std::string line;
        while (std::getline(in, line)) {
            auto words = split_words(line);
            if (!words.empty()) sentences.push_back(std::move(words));
        }
        break;
    }
    case CorpusSpec::Kind::PatternCopy:
        for (const auto& item : generate_pattern_copy(spec.pattern_copy))
            sentences.push_back(item.sentence());
        break;
    case CorpusSpec::Kind::ArithChain:
        for (const auto& item : generate_arith_chain(spec.arith_chain))
            sentences.push_back(item.sentence());
        break;
    }
    if (sentences.empty()) throw EmptyCorpus("corpus produced no sentences");
    return sentences;
}

const NGramModel& Family::model(const std::string& name) const {
    auto it = models.find(name);
    if (it == models.end()) throw ConfigError("unknown model: " + name);
    return *it->second;
}

Family build_family(const ExperimentConfig& config) {
    validate(config);
    const auto word_sentences = corpus_sentences(config.corpus);

    std::vector<std::string> all_words;
    for (const auto& s : word_sentences) all_words.insert(all_words.end(), s.begin(), s.end());

    Family family;
    family.vocab = std::make_shared<Vocabulary>(Vocabulary::build(all_words));
    family.corpus.reserve(word_sentences.size());
    for (const auto& s : word_sentences) {
        std::vector<TokenId> ids;
        ids.reserve(s.size());
        for (const auto& w : s) ids.push_back(family.vocab->id(w));
        family.corpus.push_back(std::move(ids));
    }

    const std::size_t n = family.corpus.size();
    for (const auto& spec : config.models) {
        const std::size_t take =
            std::max<std::size_t>(1, static_cast<std::size_t>(spec.fraction * n));
        std::span<const std::vector<TokenId>> slice(family.corpus.data(),
                                                    std::min(take, n));
        family.models[spec.name] = train_ngram(family.vocab, slice, spec.order, spec.lambda);
        family.member_order.push_back(spec.name);
    }
    for (const auto& spec : config.chat) {
        auto base = family.models.find(spec.base);
        if (base == family.models.end())
            throw ConfigError("chat spec references unknown base model: " + spec.base);
        const std::size_t take =
            std::max<std::size_t>(1, static_cast<std::size_t>(spec.tail_fraction * n));
        std::span<const std::vector<TokenId>> tail(family.corpus.data() + (n - std::min(take, n)),
                                                   std::min(take, n));
        family.models[spec.name] = continue_training(*base->second, tail);
        family.chat_of[spec.base] = spec.name;
        family.member_order.push_back(spec.name);
    }
    return family;
}

std::vector<std::vector<TokenId>> resolve_prompts(const ExperimentConfig& config,
                                                  const Family& family) {
    std::vector<std::vector<TokenId>> prompts;
    const PromptSpec& spec = config.prompts;
    switch (spec.kind) {
    case PromptSpec::Kind::CorpusTail: {
        if (family.corpus.size() < spec.count)
            throw ConfigError("corpus smaller than the requested prompt count");
        for (std::size_t i = family.corpus.size() - spec.count; i < family.corpus.size(); ++i) {
            const auto& sentence = family.corpus[i];
            const std::size_t len = std::min(spec.prefix_len, sentence.size());
            prompts.emplace_back(sentence.begin(),
                                 sentence.begin() + static_cast<std::ptrdiff_t>(len));
        }
        break;
    }
    case PromptSpec::Kind::Generator: {
        CorpusSpec gen = config.corpus;
        if (gen.kind == CorpusSpec::Kind::File)
            throw ConfigError("generator prompts need a synthetic corpus");
        if (gen.kind == CorpusSpec::Kind::PatternCopy) {
            gen.pattern_copy.seed = spec.seed;
            gen.pattern_copy.items = spec.count;
        } else {
            gen.arith_chain.seed = spec.seed;
            gen.arith_chain.items = spec.count;
        }
        const auto items = gen.kind == CorpusSpec::Kind::PatternCopy
                               ? generate_pattern_copy(gen.pattern_copy)
                               : generate_arith_chain(gen.arith_chain);
        for (const auto& item : items) {
            std::vector<TokenId> ids;
            for (const auto& w : item.prompt) ids.push_back(family.vocab->id(w));
            prompts.push_back(std::move(ids));
        }
        break;
    }
    case PromptSpec::Kind::File: {
        std::ifstream in(spec.path, std::ios::binary);
        if (!in) throw ConfigError("cannot open prompt file: " + spec.path);
        std::string line;
        while (std::getline(in, line) && prompts.size() < spec.count) {
            auto ids = family.vocab->encode(line);
            if (!ids.empty()) prompts.push_back(std::move(ids));
        }
        if (prompts.empty()) throw ConfigError("prompt file produced no prompts");
        break;
    }
    }
    return prompts;
}

namespace {

struct Cell {
    std::string method;
    PairSpec pair;
};

std::vector<PairSpec> auto_pairs(const ExperimentConfig& config, const Family& family) {
    std::vector<PairSpec> pairs;
    for (const auto& a : config.models)
        for (const auto& b : config.models) {
            if (a.name == b.name) continue;
            if (family.model(b.name).param_count() > family.model(a.name).param_count())
                pairs.push_back({a.name, b.name});
        }
    return pairs;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open output file: " + path.string());
    return out;
}

std::pair<double, double> feature_grid_range(RoutingFeature feature, std::size_t vocab_size) {
    if (feature == RoutingFeature::Entropy)
        return {0.0, std::log(static_cast<double>(vocab_size))};
    return {0.0, 1.0};
}

} // namespace

SuiteResult run_finding_suite(const ExperimentConfig& config, const std::string& out_dir) {
    Family family = build_family(config);
    const auto prompts = resolve_prompts(config, family);

    SuiteResult result;
    result.out_dir = out_dir;
    fs::create_directories(fs::path(out_dir) / "traces");

    const std::vector<PairSpec> pairs =
        config.pairs.empty() ? auto_pairs(config, family) : config.pairs;

    std::vector<Cell> cells;
    for (const auto& method : config.methods)
        for (const auto& pair : pairs) cells.push_back({method, pair});

    auto uncertainty_csv = open_out(fs::path(out_dir) / "uncertainty.csv");
    uncertainty_csv << "task,method,small,large,prompt_id,step,top1_prob,entropy,margin,match\n";
    auto sweeps_csv = open_out(fs::path(out_dir) / "sweeps.csv");
    sweeps_csv << "task,method,small,large,feature,window,tau,invocation_rate,"
                  "golden_match_rate,recall,precision\n";

    std::map<std::string, std::vector<CofPoint>> method_points;

    for (const auto& cell : cells) {
        const std::string label = cell.method + "/" + cell.pair.small + "+" + cell.pair.large;
        try {
            const FusionKind kind = fusion_kind_from_string(cell.method);
            auto get = [&](const std::string& name) {
                auto it = family.models.find(name);
                if (it == family.models.end()) throw ConfigError("unknown model: " + name);
                return it->second;
            };
            auto small = get(cell.pair.small);
            auto large = get(cell.pair.large);

            std::shared_ptr<const LogitSource> system1 = small;
            std::shared_ptr<System2> system2;
            std::string system1_name = cell.pair.small;
            switch (kind) {
            case FusionKind::Speculative:
                system2 = std::make_shared<System2>(FusionStrategy{kind, 0.0}, large);
                break;
            case FusionKind::Contrastive:
                system2 =
                    std::make_shared<System2>(FusionStrategy{kind, config.beta}, large, small);
                break;
            case FusionKind::ProxyTuning:
            case FusionKind::EmulatorTuning: {
                auto chat_it = family.chat_of.find(cell.pair.small);
                if (chat_it == family.chat_of.end())
                    throw ConfigError("no chat variant configured for " + cell.pair.small);
                auto chat = get(chat_it->second);
                system2 = std::make_shared<System2>(FusionStrategy{kind, 0.0}, large, small, chat);
                system1 = chat;
                system1_name = chat_it->second;
                break;
            }
            }

            CellResult cr;
            cr.method = cell.method;
            cr.small = cell.pair.small;
            cr.large = cell.pair.large;
            cr.system1 = system1_name;
            cr.r = scale_ratio(*large, *system1);

            const std::string pair_name = cell.pair.small + "+" + cell.pair.large;
            std::vector<CollabTrace> traces;
            for (std::size_t i = 0; i < prompts.size(); ++i) {
                const std::string prompt_id = "p" + std::to_string(i);
                CollabTrace trace =
                    oracle_scan(*system2, *system1, prompts[i], config.max_length,
                                config.top_k, prompt_id, pair_name);
                const std::string file = "traces/" + cell.method + "__" + cell.pair.small +
                                         "__" + cell.pair.large + "__" + prompt_id + ".jsonl";
                save_trace(trace, *family.vocab, (fs::path(out_dir) / file).string());
                cr.trace_files.push_back(file);
                cr.sequences += 1;
                cr.tokens += trace.steps.size();
                cr.mismatches += trace.mismatch_count();
                traces.push_back(std::move(trace));
            }

            // Per-step feature rows (the KDE/scatter input).
            for (const auto& trace : traces) {
                for (std::size_t s = 0; s < trace.steps.size(); ++s) {
                    const auto& rec = trace.steps[s];
                    uncertainty_csv << config.task << ',' << cell.method << ','
                                    << cell.pair.small << ',' << cell.pair.large << ','
                                    << trace.prompt_id << ',' << s << ','
                                    << format_g9(rec.sys1_top1_prob()) << ','
                                    << format_g9(rec.sys1_entropy) << ','
                                    << format_g9(rec.sys1_margin()) << ','
                                    << (rec.match ? 1 : 0) << '\n';
                }
            }

            if (cr.tokens > 0) {
                cr.histogram = position_histogram(traces);
                cr.uncertainty = mismatch_uncertainty_report(traces);
                CofPoint point;
                point.r = cr.r;
                point.cof = static_cast<double>(cr.mismatches) / static_cast<double>(cr.tokens);
                point.method = cell.method;
                point.task = config.task;
                point.sequences = cr.sequences;
                result.cof_points.push_back(point);
                method_points[cell.method].push_back(point);

                for (const auto& feature_name : config.router.features) {
                    const RoutingFeature feature = routing_feature_from_string(feature_name);
                    const auto [lo, hi] = feature_grid_range(feature, family.vocab->size());
                    std::vector<double> grid(config.router.grid);
                    for (std::size_t g = 0; g < grid.size(); ++g)
                        grid[g] = lo + (hi - lo) * static_cast<double>(g) /
                                           static_cast<double>(grid.size() - 1);
                    const auto reports = sweep(feature, config.router.window, grid, traces);
                    for (const auto& [tau, report] : reports) {
                        sweeps_csv << config.task << ',' << cell.method << ','
                                   << cell.pair.small << ',' << cell.pair.large << ','
                                   << feature_name << ',' << config.router.window << ','
                                   << format_g9(tau) << ','
                                   << format_g9(report.invocation_rate) << ','
                                   << format_g9(report.golden_match_rate) << ','
                                   << format_optional(report.recall) << ','
                                   << format_optional(report.precision) << '\n';
                    }
                }
            }
            result.cells.push_back(std::move(cr));
        } catch (const Error& e) {
            result.errors.push_back(label + ": " + e.what());
        }
    }

    // cof_points.csv
    {
        auto out = open_out(fs::path(out_dir) / "cof_points.csv");
        out << "task,method,small,large,r,cof,sequences,tokens,mismatches\n";
        for (const auto& cell : result.cells) {
            if (cell.tokens == 0) continue;
            const double cof =
                static_cast<double>(cell.mismatches) / static_cast<double>(cell.tokens);
            out << config.task << ',' << cell.method << ',' << cell.small << ',' << cell.large
                << ',' << format_g9(cell.r) << ',' << format_g9(cof) << ',' << cell.sequences
                << ',' << cell.tokens << ',' << cell.mismatches << '\n';
        }
    }

    // positions.csv
    {
        auto out = open_out(fs::path(out_dir) / "positions.csv");
        out << "task,method,small,large,bin,rate,mismatches,tokens\n";
        for (const auto& cell : result.cells) {
            if (!cell.histogram) continue;
            for (std::size_t b = 0; b < 10; ++b)
                out << config.task << ',' << cell.method << ',' << cell.small << ','
                    << cell.large << ',' << b << ',' << format_g9(cell.histogram->rate[b]) << ','
                    << cell.histogram->mismatches[b] << ',' << cell.histogram->tokens[b] << '\n';
        }
    }

    // uncertainty_summary.csv
    {
        auto out = open_out(fs::path(out_dir) / "uncertainty_summary.csv");
        out << "task,method,small,large,class,count,mean_top1,std_top1,mean_entropy,"
               "std_entropy,point_biserial\n";
        for (const auto& cell : result.cells) {
            if (!cell.uncertainty) continue;
            const auto& rep = *cell.uncertainty;
            auto row = [&](const char* cls, const ClassStats& s) {
                out << config.task << ',' << cell.method << ',' << cell.small << ','
                    << cell.large << ',' << cls << ',' << s.count << ','
                    << format_g9(s.mean_top1) << ',' << format_g9(s.std_top1) << ','
                    << format_g9(s.mean_entropy) << ',' << format_g9(s.std_entropy) << ','
                    << format_optional(rep.point_biserial) << '\n';
            };
            row("match", rep.match);
            row("mismatch", rep.mismatch);
        }
    }

    // fits.csv over R > 1 points per method.
    {
        auto out = open_out(fs::path(out_dir) / "fits.csv");
        out << "task,method,gamma,alpha,beta,rmse,points,degenerate\n";
        for (const auto& method : config.methods) {
            auto it = method_points.find(method);
            if (it == method_points.end()) continue;
            std::vector<CofPoint> filtered;
            for (const auto& p : it->second)
                if (p.r > 1.0) filtered.push_back(p);
            try {
                const ScalingFit fit = fit_scaling_law(filtered);
                result.fits.emplace_back(method, fit);
                out << config.task << ',' << method << ',' << format_g9(fit.gamma) << ','
                    << format_g9(fit.alpha) << ',' << format_g9(fit.beta) << ','
                    << format_g9(fit.rmse) << ',' << fit.points << ','
                    << (fit.degenerate ? 1 : 0) << '\n';
            } catch (const Error& e) {
                result.errors.push_back("fit/" + method + ": " + e.what());
            }
        }
    }

    // manifest.json
    {
        json manifest;
        manifest["bundle_version"] = 1;
        manifest["fsgen_version"] = FSGEN_VERSION;
        manifest["task"] = config.task;
        manifest["seed"] = config.seed;
        manifest["config"] = json::parse(canonical_config_json(config));
        manifest["config_hash"] = config_hash(config);
        manifest["vocab_size"] = family.vocab->size();
        json models = json::array();
        for (const auto& name : family.member_order) {
            const auto& m = family.model(name);
            models.push_back({{"name", name},
                              {"order", m.order()},
                              {"lambda", m.lambda()},
                              {"param_count", m.param_count()}});
        }
        manifest["models"] = models;
        json ratios = json::array();
        for (const auto& a : family.member_order)
            for (const auto& b : family.member_order) {
                if (a == b) continue;
                ratios.push_back({{"small", a},
                                  {"large", b},
                                  {"r", scale_ratio(family.model(b), family.model(a))}});
            }
        manifest["scale_ratios"] = ratios;
        manifest["prompt_count"] = prompts.size();
        manifest["errors"] = result.errors;
        json cell_list = json::array();
        for (const auto& cell : result.cells)
            cell_list.push_back({{"method", cell.method},
                                 {"small", cell.small},
                                 {"large", cell.large},
                                 {"system1", cell.system1},
                                 {"r", cell.r},
                                 {"sequences", cell.sequences},
                                 {"tokens", cell.tokens},
                                 {"mismatches", cell.mismatches},
                                 {"traces", cell.trace_files}});
        manifest["cells"] = cell_list;
        auto out = open_out(fs::path(out_dir) / "manifest.json");
        out << manifest.dump(2) << '\n';
    }

    return result;
}

} // namespace fsgen
