#include "topnrank/dataset.hpp"

#include "topnrank/errors.hpp"
#include "topnrank/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace topnrank {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\r' || s.front() == '\n' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\n' || s.back() == '\t'))
        s.remove_suffix(1);
    return s;
}

std::string_view strip_bom(std::string_view s) {
    if (s.size() >= 3 && static_cast<unsigned char>(s[0]) == 0xEF &&
        static_cast<unsigned char>(s[1]) == 0xBB && static_cast<unsigned char>(s[2]) == 0xBF)
        s.remove_prefix(3);
    return s;
}

Delimiter detect_delimiter(std::string_view line) {
    if (line.find("::") != std::string_view::npos) return Delimiter::double_colon;
    if (line.find('\t') != std::string_view::npos) return Delimiter::tab;
    return Delimiter::comma;
}

std::vector<std::string_view> split_fields(std::string_view line, Delimiter delimiter) {
    std::vector<std::string_view> fields;
    const std::string_view sep = delimiter == Delimiter::tab      ? "\t"
                                 : delimiter == Delimiter::comma  ? ","
                                                                  : "::";
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, pos - start)));
        start = pos + sep.size();
    }
    return fields;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
    T value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

std::string pair_key(std::string_view user, std::string_view item) {
    std::string key;
    key.reserve(user.size() + item.size() + 1);
    key.append(user);
    key.push_back('\x1f');
    key.append(item);
    return key;
}

} // namespace

std::vector<RawRating> parse_ratings(std::istream& in, const RatingFormat& format) {
    std::vector<RawRating> ratings;
    std::unordered_map<std::string, std::size_t> seen;
    Delimiter delimiter = format.delimiter;
    bool first_row = true;
    std::string buffer;
    std::size_t line_no = 0;

    while (std::getline(in, buffer)) {
        ++line_no;
        std::string_view line = trim(line_no == 1 ? strip_bom(buffer) : std::string_view(buffer));
        if (line.empty()) continue;
        if (delimiter == Delimiter::automatic) delimiter = detect_delimiter(line);

        auto fields = split_fields(line, delimiter);
        if (first_row) {
            first_row = false;
            bool header = format.has_header.value_or(
                fields.size() >= 3 && !parse_number<double>(fields[2]).has_value());
            if (header) continue;
        }
        if (fields.size() < 3 || fields.size() > 4)
            throw ParseError("expected 3 or 4 fields (user, item, rating[, timestamp]), got " +
                                 std::to_string(fields.size()),
                             line_no);
        if (fields[0].empty() || fields[1].empty())
            throw ParseError("empty user or item id", line_no);

        auto rating = parse_number<double>(fields[2]);
        if (!rating || !std::isfinite(*rating))
            throw ParseError("rating '" + std::string(fields[2]) + "' is not a number", line_no);
        if (*rating < format.min_rating || *rating > format.max_rating)
            throw ParseError("rating out of range: " + std::string(fields[2]), line_no);

        RawRating r;
        r.user_id = std::string(fields[0]);
        r.item_id = std::string(fields[1]);
        r.rating = *rating;
        r.line = line_no;
        if (fields.size() == 4 && !fields[3].empty()) {
            auto ts = parse_number<std::int64_t>(fields[3]);
            if (!ts) throw ParseError("timestamp '" + std::string(fields[3]) + "' is not an integer", line_no);
            r.timestamp = *ts;
        }

        auto [it, inserted] = seen.emplace(pair_key(r.user_id, r.item_id), line_no);
        if (!inserted)
            throw DataError("duplicate (user, item) pair (" + r.user_id + ", " + r.item_id + ") on lines " +
                            std::to_string(it->second) + " and " + std::to_string(line_no));
        ratings.push_back(std::move(r));
    }
    return ratings;
}

std::vector<RawRating> load_ratings(const std::filesystem::path& path, const RatingFormat& format) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open ratings file " + path.string());
    try {
        return parse_ratings(in, format);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_ratings(std::ostream& out, std::span<const RawRating> ratings, char delimiter) {
    out << "userId" << delimiter << "movieId" << delimiter << "rating" << delimiter << "timestamp\n";
    char buf[64];
    for (const auto& r : ratings) {
        auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), r.rating);
        out << r.user_id << delimiter << r.item_id << delimiter << std::string_view(buf, end - buf) << delimiter;
        if (r.timestamp) out << *r.timestamp;
        out << '\n';
    }
}

void write_ratings(const std::filesystem::path& path, std::span<const RawRating> ratings, char delimiter) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_ratings(out, ratings, delimiter);
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<RawRating> filter_sparse_users(std::span<const RawRating> ratings, std::size_t min_count) {
    if (min_count == 0) throw std::invalid_argument("min_count must be at least 1");
    std::unordered_map<std::string_view, std::size_t> counts;
    for (const auto& r : ratings) ++counts[r.user_id];
    std::vector<RawRating> kept;
    kept.reserve(ratings.size());
    for (const auto& r : ratings)
        if (counts[r.user_id] >= min_count) kept.push_back(r);
    return kept;
}

std::size_t IdMap::add(const std::string& id) {
    auto [it, inserted] = index_.emplace(id, ids_.size());
    if (inserted) ids_.push_back(id);
    return it->second;
}

std::optional<std::size_t> IdMap::find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

IdMap IdMap::from_ids(std::vector<std::string> ids) {
    IdMap map;
    for (auto& id : ids) {
        auto before = map.size();
        map.add(id);
        if (map.size() == before) throw DataError("duplicate id in id map: " + id);
    }
    return map;
}

InteractionDataset::InteractionDataset(IdMap users, IdMap items, std::vector<std::vector<Interaction>> per_user)
    : users_(std::move(users)), items_(std::move(items)), per_user_(std::move(per_user)) {
    if (users_.size() != per_user_.size())
        throw DataError("user id map has " + std::to_string(users_.size()) + " entries for " +
                        std::to_string(per_user_.size()) + " users");
    for (std::size_t u = 0; u < per_user_.size(); ++u) {
        auto& list = per_user_[u];
        std::sort(list.begin(), list.end(), [](const Interaction& a, const Interaction& b) { return a.item < b.item; });
        for (std::size_t p = 0; p < list.size(); ++p) {
            if (list[p].item >= items_.size())
                throw DataError("item index " + std::to_string(list[p].item) + " out of range for user " +
                                users_.id(u));
            if (p > 0 && list[p].item == list[p - 1].item)
                throw DataError("duplicate (user, item) pair (" + users_.id(u) + ", " + items_.id(list[p].item) + ")");
            if (!std::isfinite(list[p].weight)) throw DataError("non-finite interaction weight");
        }
    }
}

InteractionDataset InteractionDataset::from_lists(std::vector<std::vector<Interaction>> per_user, std::size_t n_items) {
    IdMap users, items;
    for (std::size_t u = 0; u < per_user.size(); ++u) users.add(std::to_string(u));
    for (std::size_t i = 0; i < n_items; ++i) items.add(std::to_string(i));
    return InteractionDataset(std::move(users), std::move(items), std::move(per_user));
}

std::size_t InteractionDataset::n_interactions() const {
    std::size_t total = 0;
    for (const auto& list : per_user_) total += list.size();
    return total;
}

std::vector<RawRating> InteractionDataset::to_raw() const {
    std::vector<RawRating> out;
    out.reserve(n_interactions());
    for (std::size_t u = 0; u < per_user_.size(); ++u)
        for (const auto& x : per_user_[u])
            out.push_back(RawRating{users_.id(u), items_.id(x.item), x.rating, x.timestamp, 0});
    return out;
}

Interaction make_interaction(std::size_t item, double rating, const ImplicitOptions& options) {
    const bool positive = rating >= options.threshold;
    Interaction x;
    x.item = item;
    x.rating = rating;
    x.weight = positive ? 1.0 : -1.0;
    x.relevance = (positive || options.negative_gain) ? 1 : 0;
    return x;
}

namespace {

InteractionDataset build_implicit(std::span<const RawRating> ratings, IdMap users, IdMap items, bool fixed,
                                  const ImplicitOptions& options) {
    std::vector<std::vector<Interaction>> per_user(users.size());
    for (const auto& r : ratings) {
        std::size_t u, i;
        if (fixed) {
            auto fu = users.find(r.user_id);
            auto fi = items.find(r.item_id);
            if (!fu) throw DataError("user '" + r.user_id + "' is not in the id space");
            if (!fi) throw DataError("item '" + r.item_id + "' is not in the id space");
            u = *fu;
            i = *fi;
        } else {
            u = users.add(r.user_id);
            i = items.add(r.item_id);
            if (u == per_user.size()) per_user.emplace_back();
        }
        auto x = make_interaction(i, r.rating, options);
        x.timestamp = r.timestamp;
        per_user[u].push_back(x);
    }
    return InteractionDataset(std::move(users), std::move(items), std::move(per_user));
}

} // namespace

InteractionDataset to_implicit(std::span<const RawRating> ratings, const ImplicitOptions& options) {
    return build_implicit(ratings, IdMap{}, IdMap{}, false, options);
}

InteractionDataset to_implicit(std::span<const RawRating> ratings, const IdMap& users, const IdMap& items,
                               const ImplicitOptions& options) {
    return build_implicit(ratings, users, items, true, options);
}

SplitPair split_half(const InteractionDataset& dataset, std::uint64_t seed) {
    detail::Rng rng(seed);
    std::vector<std::vector<Interaction>> train(dataset.n_users()), test(dataset.n_users());
    for (std::size_t u = 0; u < dataset.n_users(); ++u) {
        auto list = dataset.user(u);
        if (list.size() < 2)
            throw DataError("user " + dataset.users().id(u) + " has " + std::to_string(list.size()) +
                            " interaction(s); at least 2 are needed to split");
        std::vector<Interaction> shuffled(list.begin(), list.end());
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const std::size_t n_train = (shuffled.size() + 1) / 2;
        train[u].assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
        test[u].assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train), shuffled.end());
    }
    return SplitPair{InteractionDataset(dataset.users(), dataset.items(), std::move(train)),
                     InteractionDataset(dataset.users(), dataset.items(), std::move(test)), seed};
}

} // namespace topnrank
