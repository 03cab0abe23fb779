#include "topnrank/checkpoint.hpp"

#include "topnrank/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace topnrank {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'T', 'N', 'R', 'K', 'M', 'D', 'L', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw ParseError("truncated checkpoint");
    return value;
}

void put_ids(std::ostream& out, std::span<const std::string> ids) {
    put<std::uint64_t>(out, ids.size());
    for (const auto& id : ids) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
    }
}

std::vector<std::string> get_ids(std::istream& in, std::uint64_t expected) {
    const auto count = get<std::uint64_t>(in);
    if (count != 0 && count != expected) throw ParseError("checkpoint id list has the wrong length");
    std::vector<std::string> ids(count);
    for (auto& id : ids) {
        const auto len = get<std::uint32_t>(in);
        id.resize(len);
        if (!in.read(id.data(), len)) throw ParseError("truncated checkpoint");
    }
    return ids;
}

void put_matrix(std::ostream& out, const Matrix& m) {
    auto data = m.data();
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
}

Matrix get_matrix(std::istream& in, std::uint64_t rows, std::uint64_t cols) {
    Matrix m(rows, cols);
    auto data = m.data();
    if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size_bytes())))
        throw ParseError("truncated checkpoint");
    return m;
}

} // namespace

std::uint64_t id_digest(std::span<const std::string> ids) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](unsigned char c) {
        h ^= c;
        h *= 0x100000001b3ULL;
    };
    for (const auto& id : ids) {
        for (unsigned char c : id) mix(c);
        mix(0);
    }
    return h;
}

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
    const auto& model = c.model;
    if (!c.user_ids.empty() && c.user_ids.size() != model.n_users())
        throw std::invalid_argument("user id list does not match the model");
    if (!c.item_ids.empty() && c.item_ids.size() != model.n_items())
        throw std::invalid_argument("item id list does not match the model");
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, model.n_users());
    put<std::uint64_t>(out, model.n_items());
    put<std::uint64_t>(out, model.k());
    put<std::uint8_t>(out, c.smoothing.kind == SmoothingKind::sigmoid ? 1 : 0);
    put<double>(out, c.smoothing.scale);
    put<std::uint64_t>(out, c.seed);
    put<std::uint64_t>(out, id_digest(c.item_ids));
    put_ids(out, c.user_ids);
    put_ids(out, c.item_ids);
    put_matrix(out, model.user_factors);
    put_matrix(out, model.item_factors);
}

Checkpoint read_checkpoint(std::istream& in) {
    char magic[sizeof(kMagic)];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ParseError("not a model checkpoint (bad magic)");
    if (get<std::uint32_t>(in) != kVersion) throw ParseError("unsupported checkpoint version");
    const auto n = get<std::uint64_t>(in);
    const auto m = get<std::uint64_t>(in);
    const auto k = get<std::uint64_t>(in);
    Checkpoint c;
    const auto kind = get<std::uint8_t>(in);
    if (kind > 1) throw ParseError("unknown smoothing kind in checkpoint");
    c.smoothing.kind = kind == 1 ? SmoothingKind::sigmoid : SmoothingKind::rectifier;
    c.smoothing.scale = get<double>(in);
    c.seed = get<std::uint64_t>(in);
    const auto digest = get<std::uint64_t>(in);
    c.user_ids = get_ids(in, n);
    c.item_ids = get_ids(in, m);
    if (digest != id_digest(c.item_ids)) throw ParseError("checkpoint item id digest mismatch");
    c.model.user_factors = get_matrix(in, n, k);
    c.model.item_factors = get_matrix(in, m, k);
    return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    write_checkpoint(out, checkpoint);
    if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    return read_checkpoint(in);
}

} // namespace topnrank
