#pragma once

#include "topnrank/model.hpp"
#include "topnrank/objective.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace topnrank {

/// A trained model with the settings and id space it was trained in.
///
/// Binary layout, little-endian:
///   8 bytes   magic "TNRKMDL1"
///   u32       format version (1)
///   u64 x 3   n_users, n_items, k
///   u8        smoothing kind (0 relu, 1 sigmoid)
///   f64       sigmoid scale C
///   u64       training seed
///   u64       item id digest
///   u64       user id count, then per id: u32 length + bytes
///   u64       item id count, then per id: u32 length + bytes
///   f64 x n*k user factors, row-major
///   f64 x m*k item factors, row-major
/// Id lists are either empty or exactly n_users / n_items long.
struct Checkpoint {
    LatentFactorModel model;
    SmoothingSpec smoothing;
    std::uint64_t seed = 0;
    std::vector<std::string> user_ids;
    std::vector<std::string> item_ids;

    bool operator==(const Checkpoint&) const = default;
};

/// FNV-1a 64 over the ids, each terminated by a zero byte.
std::uint64_t id_digest(std::span<const std::string> ids);

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace topnrank
