#pragma once

#include "fsgen/ngram.hpp"

#include <iosfwd>
#include <memory>
#include <string>

namespace fsgen {

// Binary n-gram model container, magic "FSGN" version 1, little-endian
// throughout. Tables are written in sorted (context, token) order so that
// save -> load -> save is byte-identical. Layout details live in FORMATS.md.
void save_model(const NGramModel& model, std::ostream& out);
void save_model(const NGramModel& model, const std::string& path);

std::shared_ptr<NGramModel> load_model(std::istream& in);
std::shared_ptr<NGramModel> load_model(const std::string& path);

} // namespace fsgen
