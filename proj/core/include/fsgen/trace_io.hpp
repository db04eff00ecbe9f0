#pragma once

#include "fsgen/collab.hpp"
#include "fsgen/replay.hpp"

#include <iosfwd>
#include <memory>
#include <string>

namespace fsgen {

// Line-delimited trace format: one JSON header record (method, pair, R,
// prompt id, prompt tokens, vocabulary) followed by one JSON record per
// step. Field names are frozen in FORMATS.md; round trips are bit-exact.
void save_trace(const CollabTrace& trace, const Vocabulary& vocab, std::ostream& out);
void save_trace(const CollabTrace& trace, const Vocabulary& vocab, const std::string& path);

struct LoadedTrace {
    CollabTrace trace;
    std::shared_ptr<const Vocabulary> vocab;
};

LoadedTrace load_trace(std::istream& in);
LoadedTrace load_trace(const std::string& path);

enum class ReplayStream { Golden, System1 };

// Rebuilds a replay source from a trace. Recorded top-k entries keep their
// exact logprobs; every other vocabulary slot is filled with a floor far
// below them, so greedy decoding reproduces the recorded argmax stream.
// Traces that stopped at <eos> get a terminal one-hot <eos> record.
std::shared_ptr<ReplaySource> replay_from_trace(const LoadedTrace& loaded,
                                                ReplayStream stream = ReplayStream::Golden,
                                                bool strict = true);

} // namespace fsgen
