#include "fsgen/model_io.hpp"

#include "fsgen/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fsgen {

namespace {

constexpr char kMagic[4] = {'F', 'S', 'G', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("model file truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError("model file truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

} // namespace

void save_model(const NGramModel& model, std::ostream& out) {
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    const Vocabulary& vocab = model.vocab();
    put_u32(out, static_cast<std::uint32_t>(vocab.size()));
    for (const auto& token : vocab.tokens()) {
        put_u32(out, static_cast<std::uint32_t>(token.size()));
        out.write(token.data(), static_cast<std::streamsize>(token.size()));
    }
    put_u32(out, vocab.bos());
    put_u32(out, vocab.eos());
    put_u32(out, vocab.unk());
    put_u32(out, static_cast<std::uint32_t>(model.order()));
    put_f64(out, model.lambda());
    for (std::size_t k = 1; k <= model.order(); ++k) {
        const auto& table = model.table(k);
        std::uint64_t entries = 0;
        for (const auto& [ctx, row] : table) entries += row.size();
        put_u64(out, entries);
        // std::map iteration is already (context, token)-sorted.
        for (const auto& [ctx, row] : table)
            for (const auto& [tok, count] : row) {
                for (TokenId c : ctx) put_u32(out, c);
                put_u32(out, tok);
                put_u64(out, count);
            }
    }
    if (!out) throw FormatError("failed writing model stream");
}

void save_model(const NGramModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open model file for writing: " + path);
    save_model(model, out);
}

std::shared_ptr<NGramModel> load_model(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("not a FSGN model file");
    const std::uint32_t version = get_u32(in);
    if (version != kVersion)
        throw FormatError("unsupported model format version " + std::to_string(version));
    const std::uint32_t v = get_u32(in);
    std::vector<std::string> tokens(v);
    for (auto& token : tokens) {
        const std::uint32_t len = get_u32(in);
        token.resize(len);
        if (len && !in.read(token.data(), len)) throw FormatError("model file truncated");
    }
    const std::uint32_t bos = get_u32(in);
    const std::uint32_t eos = get_u32(in);
    const std::uint32_t unk = get_u32(in);
    if (v < 3 || bos != Vocabulary::kBos || eos != Vocabulary::kEos || unk != Vocabulary::kUnk)
        throw FormatError("model vocabulary does not use the reserved control-token layout");
    auto vocab = std::make_shared<Vocabulary>(Vocabulary::build(
        std::span<const std::string>(tokens.data() + 3, tokens.size() - 3)));
    if (vocab->tokens() != tokens)
        throw FormatError("model vocabulary contains duplicate or misplaced tokens");

    const std::uint32_t order = get_u32(in);
    const double lambda = get_f64(in);
    std::vector<NGramModel::CountTable> tables(order);
    for (std::uint32_t k = 1; k <= order; ++k) {
        const std::uint64_t entries = get_u64(in);
        auto& table = tables[k - 1];
        for (std::uint64_t e = 0; e < entries; ++e) {
            NGramModel::Context ctx(k - 1);
            for (auto& c : ctx) c = get_u32(in);
            const TokenId tok = get_u32(in);
            const std::uint64_t count = get_u64(in);
            if (count == 0) throw FormatError("model file stores a zero count");
            table[std::move(ctx)][tok] = count;
        }
    }
    return std::make_shared<NGramModel>(std::move(vocab), order, lambda, std::move(tables));
}

std::shared_ptr<NGramModel> load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open model file: " + path);
    return load_model(in);
}

} // namespace fsgen
