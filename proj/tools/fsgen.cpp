// fsgen - collaborative decoding laboratory CLI.
//
// Exit codes: 0 success, 1 domain error (bad data, missing files, backend
// failures), 2 usage error. Diagnostics go to stderr; data goes to files or
// stdout.

#include "fsgen/csv.hpp"
#include "fsgen/error.hpp"
#include "fsgen/experiment.hpp"
#include "fsgen/model_io.hpp"
#include "fsgen/render.hpp"
#include "fsgen/trace_io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace fsgen;

namespace {

std::string default_out(const std::string& value) {
    if (!value.empty()) return value;
    const char* env = std::getenv("FSGEN_OUT_DIR");
    return env ? env : "";
}

std::vector<std::vector<TokenId>> read_corpus_file(const std::string& path,
                                                   const Vocabulary& vocab) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EmptyCorpus("cannot open corpus file: " + path);
    std::vector<std::vector<TokenId>> sentences;
    std::string line;
    while (std::getline(in, line)) {
        auto ids = vocab.encode(line);
        if (!ids.empty()) sentences.push_back(std::move(ids));
    }
    if (sentences.empty()) throw EmptyCorpus("corpus file has no sentences: " + path);
    return sentences;
}

std::shared_ptr<NGramModel> load_model_arg(const std::string& arg) {
    if (fs::exists(arg)) return load_model(arg);
    const std::string with_ext = arg + ".fsgn";
    if (fs::exists(with_ext)) return load_model(with_ext);
    throw FormatError("model not found: " + arg);
}

std::vector<fs::path> trace_files_in(const std::string& dir) {
    if (!fs::is_directory(dir)) throw FormatError("not a trace directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw EmptyTrace("no .jsonl traces under " + dir);
    return files;
}

std::ostream& data_stream(std::ofstream& file, const std::string& out) {
    if (out.empty()) return std::cout;
    file.open(out, std::ios::binary);
    if (!file) throw FormatError("cannot open output file: " + out);
    return file;
}

// ---------------------------------------------------------------------------
// Command payloads
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string corpus, out, continue_from;
    std::size_t order = 2;
    double lambda = NGramModel::kDefaultLambda;
    std::uint64_t seed = 0;
};

int run_train(const TrainArgs& args) {
    const std::string out = default_out(args.out);
    if (out.empty()) throw ConfigError("train needs --out (or FSGEN_OUT_DIR)");

    std::shared_ptr<NGramModel> model;
    if (!args.continue_from.empty()) {
        // Continued counting on an existing model; the extra corpus is
        // encoded against the base vocabulary (unknown words become <unk>).
        auto base = load_model_arg(args.continue_from);
        auto sentences = read_corpus_file(args.corpus, base->vocab());
        model = continue_training(*base, sentences);
    } else {
        std::ifstream in(args.corpus, std::ios::binary);
        if (!in) throw EmptyCorpus("cannot open corpus file: " + args.corpus);
        std::ostringstream text;
        text << in.rdbuf();
        auto vocab = std::make_shared<Vocabulary>(Vocabulary::from_text(text.str()));
        auto sentences = read_corpus_file(args.corpus, *vocab);
        model = train_ngram(vocab, sentences, args.order, args.lambda);
    }
    save_model(*model, out);
    std::cerr << "trained order=" << model->order() << " lambda=" << model->lambda()
              << " params=" << model->param_count() << " vocab=" << model->vocab().size()
              << " -> " << out << "\n";
    return 0;
}

struct DecodeArgs {
    std::string model, prompt, prompt_file, replay, stream = "golden", out;
    std::size_t max_length = kDefaultMaxLength;
    bool ids = false;
    int steps_topk = 0; // >0: emit one JSON record per step instead of text
    std::uint64_t seed = 0;
};

int run_decode(const DecodeArgs& args) {
    std::ofstream file;
    std::ostream& out = data_stream(file, default_out(args.out));

    std::shared_ptr<const LogitSource> source;
    std::shared_ptr<const Vocabulary> vocab;
    std::vector<TokenId> prompt;
    std::size_t max_length = args.max_length;

    if (!args.replay.empty()) {
        auto loaded = load_trace(args.replay);
        vocab = loaded.vocab;
        prompt = loaded.trace.prompt;
        const ReplayStream stream =
            args.stream == "sys1" ? ReplayStream::System1 : ReplayStream::Golden;
        source = replay_from_trace(loaded, stream);
        if (!loaded.trace.stopped_by_eos)
            max_length = std::min(max_length, loaded.trace.steps.size());
    } else {
        if (args.model.empty()) throw ConfigError("decode needs --model or --replay");
        auto model = load_model_arg(args.model);
        vocab = model->vocab_ptr();
        source = model;
        std::string prompt_text = args.prompt;
        if (!args.prompt_file.empty()) {
            std::ifstream in(args.prompt_file, std::ios::binary);
            if (!in) throw ConfigError("cannot open prompt file: " + args.prompt_file);
            std::getline(in, prompt_text);
        }
        prompt = vocab->encode(prompt_text);
    }

    if (args.steps_topk > 0) {
        const auto steps = greedy_decode_steps(*source, prompt, max_length,
                                               static_cast<std::size_t>(args.steps_topk));
        for (const auto& step : steps) {
            nlohmann::json j;
            j["index"] = step.index;
            j["token_id"] = step.token_id;
            j["token"] = vocab->token(step.token_id);
            nlohmann::json ranked = nlohmann::json::array();
            for (const auto& [id, lp] : step.logprobs_topk)
                ranked.push_back(nlohmann::json::array({id, lp}));
            j["topk"] = ranked;
            out << j.dump() << "\n";
        }
        return 0;
    }
    const auto tokens = greedy_decode(*source, prompt, max_length);
    if (args.ids) {
        for (std::size_t i = 0; i < tokens.size(); ++i)
            out << (i ? " " : "") << tokens[i];
        out << "\n";
    } else {
        out << vocab->decode(tokens) << "\n";
    }
    return 0;
}

struct OracleArgs {
    std::string method, large, small, base, chat, prompts, out, pair;
    double beta = 0.5;
    std::size_t max_length = 64;
    int topk = 10;
    std::uint64_t seed = 0;
};

int run_oracle(const OracleArgs& args) {
    const FusionKind kind = fusion_kind_from_string(args.method);
    auto large = load_model_arg(args.large);

    std::shared_ptr<const LogitSource> system1;
    std::shared_ptr<System2> system2;
    switch (kind) {
    case FusionKind::Speculative: {
        if (args.small.empty()) throw ConfigError("speculative oracle needs --small");
        auto small = load_model_arg(args.small);
        system1 = small;
        system2 = std::make_shared<System2>(FusionStrategy{kind, 0.0}, large);
        break;
    }
    case FusionKind::Contrastive: {
        if (args.small.empty()) throw ConfigError("contrastive oracle needs --small");
        auto small = load_model_arg(args.small);
        system1 = small;
        system2 = std::make_shared<System2>(FusionStrategy{kind, args.beta}, large, small);
        break;
    }
    case FusionKind::ProxyTuning:
    case FusionKind::EmulatorTuning: {
        if (args.base.empty() || args.chat.empty())
            throw ConfigError(args.method + " oracle needs --base and --chat");
        auto base = load_model_arg(args.base);
        auto chat = load_model_arg(args.chat);
        system1 = chat;
        system2 = std::make_shared<System2>(FusionStrategy{kind, 0.0}, large, base, chat);
        break;
    }
    }

    const std::string out_dir = default_out(args.out);
    if (out_dir.empty()) throw ConfigError("oracle needs --out (or FSGEN_OUT_DIR)");
    fs::create_directories(out_dir);

    std::ifstream prompts_in(args.prompts, std::ios::binary);
    if (!prompts_in) throw ConfigError("cannot open prompt file: " + args.prompts);
    const std::string pair = args.pair.empty() ? "cli" : args.pair;

    std::uint64_t tokens = 0, mismatches = 0, sequences = 0;
    std::string line;
    std::size_t index = 0;
    while (std::getline(prompts_in, line)) {
        auto prompt = system1->vocab().encode(line);
        if (prompt.empty()) continue;
        const std::string prompt_id = "p" + std::to_string(index++);
        auto trace = oracle_scan(*system2, *system1, prompt, args.max_length, args.topk,
                                 prompt_id, pair);
        save_trace(trace, system1->vocab(),
                   (fs::path(out_dir) / (args.method + "__" + pair + "__" + prompt_id + ".jsonl"))
                       .string());
        sequences += 1;
        tokens += trace.steps.size();
        mismatches += trace.mismatch_count();
    }
    if (sequences == 0) throw ConfigError("prompt file produced no prompts");
    const double cof =
        tokens == 0 ? 0.0 : static_cast<double>(mismatches) / static_cast<double>(tokens);
    std::cout << "cof=" << format_g9(cof) << " sequences=" << sequences << " tokens=" << tokens
              << " mismatches=" << mismatches << " r="
              << format_g9(scale_ratio(*large, *system1)) << "\n";
    return 0;
}

struct FitArgs {
    std::string points, method, task, out;
    double min_r = 0.0;
    double predict = 0.0;
    bool do_predict = false;
    std::uint64_t seed = 0;
};

int run_fit(const FitArgs& args) {
    std::ifstream in(args.points, std::ios::binary);
    if (!in) throw FormatError("cannot open points file: " + args.points);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("points file is empty");
    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string f;
        while (std::getline(hs, f, ',')) header.push_back(f);
    }
    auto column = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    };
    const int r_col = column("r"), cof_col = column("cof");
    const int method_col = column("method"), task_col = column("task");
    if (r_col < 0 || cof_col < 0)
        throw FormatError("points file needs 'r' and 'cof' columns");

    std::vector<CofPoint> points;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) fields.push_back(f);
        CofPoint p;
        p.r = std::stod(fields.at(static_cast<std::size_t>(r_col)));
        p.cof = std::stod(fields.at(static_cast<std::size_t>(cof_col)));
        if (method_col >= 0) p.method = fields.at(static_cast<std::size_t>(method_col));
        if (task_col >= 0) p.task = fields.at(static_cast<std::size_t>(task_col));
        if (!args.method.empty() && p.method != args.method) continue;
        if (!args.task.empty() && p.task != args.task) continue;
        if (p.r <= args.min_r) continue;
        points.push_back(p);
    }
    const ScalingFit fit = fit_scaling_law(points);

    std::ofstream file;
    std::ostream& out = data_stream(file, default_out(args.out));
    out << "gamma=" << format_g9(fit.gamma) << " alpha=" << format_g9(fit.alpha)
        << " beta=" << format_g9(fit.beta) << " rmse=" << format_g9(fit.rmse)
        << " points=" << fit.points << " degenerate=" << (fit.degenerate ? 1 : 0) << "\n";
    if (args.do_predict) {
        const auto p = predict_cof(fit, args.predict);
        out << "predict r=" << format_g9(args.predict) << " cof=" << format_g9(p.clamped)
            << " raw=" << format_g9(p.raw) << "\n";
    }
    return 0;
}

struct PositionsArgs {
    std::string traces, out;
    std::uint64_t seed = 0;
};

int run_positions(const PositionsArgs& args) {
    std::map<std::string, std::vector<CollabTrace>> groups;
    for (const auto& file : trace_files_in(args.traces)) {
        auto loaded = load_trace(file.string());
        groups[loaded.trace.method + "," + loaded.trace.pair_name].push_back(
            std::move(loaded.trace));
    }
    std::ofstream file;
    std::ostream& out = data_stream(file, default_out(args.out));
    out << "method,pair,bin,rate,mismatches,tokens\n";
    for (const auto& [key, traces] : groups) {
        const auto hist = position_histogram(traces);
        for (std::size_t b = 0; b < 10; ++b)
            out << key << ',' << b << ',' << format_g9(hist.rate[b]) << ','
                << hist.mismatches[b] << ',' << hist.tokens[b] << '\n';
    }
    return 0;
}

struct SweepArgs {
    std::string traces, feature = "top1_prob", out;
    std::size_t window = 1;
    std::size_t grid = 21;
    double lo = 0.0, hi = -1.0; // hi < lo: derive from the feature
    std::uint64_t seed = 0;
};

int run_route_sweep(const SweepArgs& args) {
    std::vector<CollabTrace> traces;
    std::shared_ptr<const Vocabulary> vocab;
    for (const auto& file : trace_files_in(args.traces)) {
        auto loaded = load_trace(file.string());
        if (!vocab) vocab = loaded.vocab;
        traces.push_back(std::move(loaded.trace));
    }
    const RoutingFeature feature = routing_feature_from_string(args.feature);
    double hi = args.hi;
    if (hi < args.lo)
        hi = feature == RoutingFeature::Entropy ? std::log(static_cast<double>(vocab->size()))
                                                : 1.0;
    std::vector<double> grid(args.grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = args.lo + (hi - args.lo) * static_cast<double>(i) /
                               static_cast<double>(grid.size() - 1);
    const auto reports = sweep(feature, args.window, grid, traces);

    std::ofstream file;
    std::ostream& out = data_stream(file, default_out(args.out));
    out << "tau,invocation_rate,golden_match_rate,recall,precision\n";
    for (const auto& [tau, report] : reports)
        out << format_g9(tau) << ',' << format_g9(report.invocation_rate) << ','
            << format_g9(report.golden_match_rate) << ',' << format_optional(report.recall)
            << ',' << format_optional(report.precision) << '\n';
    return 0;
}

struct SuiteArgs {
    std::string config, out;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int run_suite(const SuiteArgs& args) {
    std::ifstream in(args.config, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + args.config);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    if (args.seed_set) {
        auto j = nlohmann::json::parse(text, nullptr, false);
        if (j.is_discarded()) throw ConfigError("malformed config JSON: " + args.config);
        j["seed"] = args.seed;
        text = j.dump();
    }
    const ExperimentConfig config = parse_config(text);
    const std::string out_dir = default_out(args.out);
    if (out_dir.empty()) throw ConfigError("suite needs --out (or FSGEN_OUT_DIR)");

    const SuiteResult result = run_finding_suite(config, out_dir);
    std::cerr << "suite: " << result.cells.size() << " cells, " << result.cof_points.size()
              << " cof points, " << result.fits.size() << " fits, " << result.errors.size()
              << " errors -> " << out_dir << "\n";
    for (const auto& err : result.errors) std::cerr << "  cell error: " << err << "\n";
    return 0;
}

struct RenderArgs {
    std::string bundle, out;
    std::uint64_t seed = 0;
};

int run_render(const RenderArgs& args) {
    std::string out_dir = default_out(args.out);
    if (out_dir.empty()) out_dir = args.bundle;
    const auto rendered = render_bundle(args.bundle, out_dir);
    std::cerr << "rendered " << rendered.size() << " files -> " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fsgen: fast/slow collaborative decoding laboratory"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "train an n-gram model on a text corpus");
    train->add_option("--corpus", train_args.corpus, "corpus text file (one sentence per line)")
        ->required();
    auto* order_opt = train->add_option("--order", train_args.order, "n-gram order (default 2)");
    auto* lambda_opt =
        train->add_option("--lambda", train_args.lambda, "interpolation weight in (0,1]");
    train->add_option("--continue-from", train_args.continue_from,
                      "continue counting on this model (its order/lambda are kept)")
        ->excludes(order_opt)
        ->excludes(lambda_opt);
    train->add_option("--out", train_args.out, "output model file (.fsgn)");
    train->add_option("--seed", train_args.seed, "accepted for interface parity");

    DecodeArgs decode_args;
    auto* decode = app.add_subcommand("decode", "greedy decode from a model or recorded trace");
    decode->add_option("--model", decode_args.model, "model file");
    decode->add_option("--prompt", decode_args.prompt, "prompt text");
    decode->add_option("--prompt-file", decode_args.prompt_file, "file with the prompt line");
    decode->add_option("--replay", decode_args.replay, "trace file to replay");
    decode->add_option("--stream", decode_args.stream, "replay stream: golden or sys1")
        ->check(CLI::IsMember({"golden", "sys1"}));
    decode->add_option("--max-length", decode_args.max_length, "maximum continuation length");
    decode->add_flag("--ids", decode_args.ids, "print token ids instead of text");
    decode->add_option("--steps", decode_args.steps_topk,
                       "emit one JSON record per step with this top-k width");
    decode->add_option("--out", decode_args.out, "write output here instead of stdout");
    decode->add_option("--seed", decode_args.seed, "accepted for interface parity");

    OracleArgs oracle_args;
    auto* oracle = app.add_subcommand("oracle", "oracle-decoding scan over a prompt set");
    oracle->add_option("--method", oracle_args.method,
                       "speculative|contrastive|proxy_tuning|emulator_tuning")
        ->required();
    oracle->add_option("--large", oracle_args.large, "large model file")->required();
    oracle->add_option("--small", oracle_args.small, "small model file (System 1)");
    oracle->add_option("--base", oracle_args.base, "small base model (proxy/emulator)");
    oracle->add_option("--chat", oracle_args.chat, "small chat model (proxy/emulator)");
    oracle->add_option("--beta", oracle_args.beta, "contrastive strength");
    oracle->add_option("--prompts", oracle_args.prompts, "prompt file, one per line")
        ->required();
    oracle->add_option("--max-length", oracle_args.max_length, "maximum golden length");
    oracle->add_option("--topk", oracle_args.topk, "recorded top-k width");
    oracle->add_option("--pair", oracle_args.pair, "pair label stored in traces");
    oracle->add_option("--out", oracle_args.out, "trace output directory");
    oracle->add_option("--seed", oracle_args.seed, "accepted for interface parity");

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "fit the collaboration-frequency scaling law");
    fit->add_option("--points", fit_args.points, "cof points CSV (needs r and cof columns)")
        ->required();
    fit->add_option("--method", fit_args.method, "filter rows by method");
    fit->add_option("--task", fit_args.task, "filter rows by task");
    fit->add_option("--min-r", fit_args.min_r, "keep rows with r strictly above this");
    fit->add_option("--predict", fit_args.predict, "also predict CoF at this ratio")
        ->check(CLI::PositiveNumber);
    fit->callback([&] { fit_args.do_predict = fit->count("--predict") > 0; });
    fit->add_option("--out", fit_args.out, "write output here instead of stdout");
    fit->add_option("--seed", fit_args.seed, "accepted for interface parity");

    PositionsArgs positions_args;
    auto* positions = app.add_subcommand("positions", "mismatch-position histogram from traces");
    positions->add_option("--traces", positions_args.traces, "directory of .jsonl traces")
        ->required();
    positions->add_option("--out", positions_args.out, "write CSV here instead of stdout");
    positions->add_option("--seed", positions_args.seed, "accepted for interface parity");

    SweepArgs sweep_args;
    auto* route_sweep = app.add_subcommand("route-sweep", "threshold sweep over oracle traces");
    route_sweep->add_option("--traces", sweep_args.traces, "directory of .jsonl traces")
        ->required();
    route_sweep->add_option("--feature", sweep_args.feature, "top1_prob|entropy|margin");
    route_sweep->add_option("--window", sweep_args.window, "feature window");
    route_sweep->add_option("--grid", sweep_args.grid, "number of thresholds");
    route_sweep->add_option("--lo", sweep_args.lo, "grid lower bound");
    route_sweep->add_option("--hi", sweep_args.hi, "grid upper bound");
    route_sweep->add_option("--out", sweep_args.out, "write CSV here instead of stdout");
    route_sweep->add_option("--seed", sweep_args.seed, "accepted for interface parity");

    SuiteArgs suite_args;
    auto* suite = app.add_subcommand("suite", "run the full finding suite from a config");
    suite->add_option("--config", suite_args.config, "experiment config JSON")->required();
    suite->add_option("--out", suite_args.out, "report bundle directory");
    suite->add_option("--seed", suite_args.seed, "override the config seed");
    suite->callback([&] { suite_args.seed_set = suite->count("--seed") > 0; });

    RenderArgs render_args;
    auto* render = app.add_subcommand("render", "render SVG heatmaps and fit overlays");
    render->add_option("--bundle", render_args.bundle, "suite bundle directory")->required();
    render->add_option("--out", render_args.out, "output directory (default: bundle)");
    render->add_option("--seed", render_args.seed, "accepted for interface parity");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 2;
    }

    try {
        if (*train) return run_train(train_args);
        if (*decode) return run_decode(decode_args);
        if (*oracle) return run_oracle(oracle_args);
        if (*fit) return run_fit(fit_args);
        if (*positions) return run_positions(positions_args);
        if (*route_sweep) return run_route_sweep(sweep_args);
        if (*suite) return run_suite(suite_args);
        if (*render) return run_render(render_args);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
