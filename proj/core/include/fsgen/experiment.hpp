#pragma once

#include "fsgen/collab.hpp"
#include "fsgen/ngram.hpp"
#include "fsgen/router.hpp"
#include "fsgen/scaling.hpp"
#include "fsgen/synthetic.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fsgen {

// ---------------------------------------------------------------------------
// Configuration (JSON schema version 1, documented in FORMATS.md)
// ---------------------------------------------------------------------------

struct CorpusSpec {
    enum class Kind { File, PatternCopy, ArithChain };
    Kind kind = Kind::File;
    std::string path;
    PatternCopySpec pattern_copy;
    ArithChainSpec arith_chain;
};

struct ModelSpec {
    std::string name;
    std::size_t order = 2;
    double fraction = 1.0; // leading fraction of corpus sentences used
    double lambda = NGramModel::kDefaultLambda;
};

// Chat variants are produced by continued counting on the trailing
// `tail_fraction` of the corpus.
struct ChatSpec {
    std::string name;
    std::string base;
    double tail_fraction = 0.2;
};

struct PairSpec {
    std::string small;
    std::string large;
};

struct PromptSpec {
    enum class Kind { CorpusTail, Generator, File };
    Kind kind = Kind::CorpusTail;
    std::size_t count = 16;
    std::size_t prefix_len = 2; // CorpusTail
    std::uint64_t seed = 0;     // Generator
    std::string path;           // File
};

struct RouterSpec {
    std::vector<std::string> features = {"top1_prob"};
    std::size_t window = 1;
    std::size_t grid = 21;
};

struct ExperimentConfig {
    int version = 1;
    std::string task = "toy";
    std::uint64_t seed = 0;
    CorpusSpec corpus;
    std::vector<ModelSpec> models;
    std::vector<ChatSpec> chat;
    std::vector<std::string> methods;
    double beta = 0.5;
    std::vector<PairSpec> pairs; // empty: all (small, large) with a strict size gap
    PromptSpec prompts;
    std::size_t max_length = 32;
    int top_k = 10;
    RouterSpec router;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
// Canonical JSON rendering; also the input of config_hash.
std::string canonical_config_json(const ExperimentConfig& config);
// FNV-1a 64 over the canonical JSON, hex encoded.
std::string config_hash(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Family construction
// ---------------------------------------------------------------------------

struct Family {
    std::shared_ptr<const Vocabulary> vocab;
    std::vector<std::string> member_order; // config order, chats appended
    std::map<std::string, std::shared_ptr<NGramModel>> models;
    std::map<std::string, std::string> chat_of; // base name -> chat name
    std::vector<std::vector<TokenId>> corpus;   // tokenized sentences

    const NGramModel& model(const std::string& name) const;
};

// Trains every family member (chat variants via continued training) and
// resolves the shared vocabulary from the full corpus.
Family build_family(const ExperimentConfig& config);

// Tokenized corpus sentences for a corpus spec (also used for chat slices).
std::vector<std::vector<std::string>> corpus_sentences(const CorpusSpec& spec);

std::vector<std::vector<TokenId>> resolve_prompts(const ExperimentConfig& config,
                                                  const Family& family);

// ---------------------------------------------------------------------------
// Finding suite
// ---------------------------------------------------------------------------

struct CellResult {
    std::string method;
    std::string small;
    std::string large;
    std::string system1; // chat variant for proxy/emulator methods
    double r = 1.0;
    std::uint64_t sequences = 0;
    std::uint64_t tokens = 0;
    std::uint64_t mismatches = 0;
    std::optional<PositionHistogram> histogram; // absent when every golden is empty
    std::optional<UncertaintyReport> uncertainty;
    std::vector<std::string> trace_files; // relative to the bundle root
};

struct SuiteResult {
    std::string out_dir;
    std::vector<CellResult> cells;
    std::vector<CofPoint> cof_points;
    std::vector<std::pair<std::string, ScalingFit>> fits; // per method, R > 1 points
    std::vector<std::string> errors;                      // one line per failed cell
};

// Runs oracle scans for every (method, pair) cell over the prompt set, then
// scaling fits and router sweeps, writing the full report bundle under
// `out_dir`: traces/, cof_points.csv, fits.csv, positions.csv,
// uncertainty.csv, uncertainty_summary.csv, sweeps.csv, manifest.json.
// Failures are recorded per cell and the suite continues.
SuiteResult run_finding_suite(const ExperimentConfig& config, const std::string& out_dir);

} // namespace fsgen
