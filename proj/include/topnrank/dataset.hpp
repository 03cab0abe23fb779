#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace topnrank {

/// One row of a ratings file. Ids are kept as opaque strings.
struct RawRating {
    std::string user_id;
    std::string item_id;
    double rating = 0.0;
    std::optional<std::int64_t> timestamp;
    /// 1-based source line, 0 when the rating did not come from a file.
    std::size_t line = 0;
};

enum class Delimiter { automatic, comma, tab, double_colon };

struct RatingFormat {
    Delimiter delimiter = Delimiter::automatic;
    /// nullopt: a header is assumed when the rating column of the first row is not numeric.
    std::optional<bool> has_header;
    double min_rating = 0.5;
    double max_rating = 5.0;
};

/// Reads user,item,rating[,timestamp] rows. MovieLens `ratings.csv` and `u.data`
/// parse with the default format. Throws ParseError (with line) on malformed
/// rows or out-of-scale ratings and DataError on duplicate (user, item) pairs.
std::vector<RawRating> load_ratings(const std::filesystem::path& path, const RatingFormat& format = {});
std::vector<RawRating> parse_ratings(std::istream& in, const RatingFormat& format = {});

/// Writes ratings as `userId,movieId,rating,timestamp` with a header row.
void write_ratings(std::ostream& out, std::span<const RawRating> ratings, char delimiter = ',');
void write_ratings(const std::filesystem::path& path, std::span<const RawRating> ratings, char delimiter = ',');

/// Keeps only ratings of users with at least `min_count` ratings, in input order.
std::vector<RawRating> filter_sparse_users(std::span<const RawRating> ratings, std::size_t min_count = 10);

/// Bidirectional raw id <-> dense index map; indices follow first insertion.
class IdMap {
public:
    std::size_t add(const std::string& id);
    std::optional<std::size_t> find(const std::string& id) const;
    const std::string& id(std::size_t index) const { return ids_.at(index); }
    std::size_t size() const { return ids_.size(); }
    std::span<const std::string> ids() const { return ids_; }

    static IdMap from_ids(std::vector<std::string> ids);

    bool operator==(const IdMap& other) const { return ids_ == other.ids_; }

private:
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::string> ids_;
};

struct Interaction {
    std::size_t item = 0;
    double rating = 0.0;
    /// Implicit-feedback weight; +1/-1 under the default conversion.
    double weight = 1.0;
    /// Binary relevance, 0 or 1.
    int relevance = 0;
    std::optional<std::int64_t> timestamp;

    bool operator==(const Interaction&) const = default;
};

/// Per-user interaction lists over dense user and item indices. Each user's
/// list is sorted by item index and holds no duplicate items.
class InteractionDataset {
public:
    InteractionDataset() = default;
    InteractionDataset(IdMap users, IdMap items, std::vector<std::vector<Interaction>> per_user);

    /// Builds a dataset with ids equal to the decimal dense indices.
    static InteractionDataset from_lists(std::vector<std::vector<Interaction>> per_user, std::size_t n_items);

    std::size_t n_users() const { return per_user_.size(); }
    std::size_t n_items() const { return items_.size(); }
    std::size_t n_interactions() const;

    std::span<const Interaction> user(std::size_t u) const { return per_user_.at(u); }
    const IdMap& users() const { return users_; }
    const IdMap& items() const { return items_; }

    /// Raw ratings view, one row per interaction, users in dense order.
    std::vector<RawRating> to_raw() const;

private:
    IdMap users_;
    IdMap items_;
    std::vector<std::vector<Interaction>> per_user_;
};

struct ImplicitOptions {
    double threshold = 4.0;
    /// When set, every observed item gets relevance 1 so that weight -1 items
    /// carry a negative gain instead of none.
    bool negative_gain = false;
};

Interaction make_interaction(std::size_t item, double rating, const ImplicitOptions& options = {});

/// Converts ratings to weighted implicit feedback: rating >= threshold gives
/// (w=+1, y=1), anything else (w=-1, y=0). Dense ids follow first appearance.
InteractionDataset to_implicit(std::span<const RawRating> ratings, const ImplicitOptions& options = {});

/// Same conversion into a fixed id space; unknown users or items are a DataError.
InteractionDataset to_implicit(std::span<const RawRating> ratings, const IdMap& users, const IdMap& items,
                               const ImplicitOptions& options = {});

struct SplitPair {
    InteractionDataset train;
    InteractionDataset test;
    std::uint64_t seed = 0;
};

/// Random per-user halves. Odd-sized histories give the extra interaction to
/// train. Both halves keep the full id maps.
SplitPair split_half(const InteractionDataset& dataset, std::uint64_t seed);

} // namespace topnrank
