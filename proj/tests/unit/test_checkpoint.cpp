#include <doctest.h>

#include "topnrank/checkpoint.hpp"
#include "topnrank/errors.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace topnrank;

namespace {

Checkpoint sample() {
    Checkpoint c;
    c.model = init_model(3, 4, 2, {0.7, 5});
    c.model.user_factors(0, 0) = -0.0;
    c.model.item_factors(3, 1) = 1e-310;
    c.smoothing = {SmoothingKind::sigmoid, 7.0};
    c.seed = 0xfeedbeefULL;
    c.user_ids = {"u1", "u2", "u3"};
    c.item_ids = {"10", "20", "30", "caf\xc3\xa9"};
    return c;
}

} // namespace

TEST_CASE("stream round trip is bit exact") {
    auto c = sample();
    std::stringstream buf;
    write_checkpoint(buf, c);
    auto back = read_checkpoint(buf);
    CHECK(back == c);
    CHECK(std::signbit(back.model.user_factors(0, 0)));
}

TEST_CASE("file round trip") {
    auto c = sample();
    c.user_ids.clear();
    c.item_ids.clear();
    const auto path = std::filesystem::temp_directory_path() / "topnrank_checkpoint_test.bin";
    save_checkpoint(path, c);
    CHECK(load_checkpoint(path) == c);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
}

TEST_CASE("corrupt input is rejected") {
    std::stringstream bad("NOTAMODEL.......");
    CHECK_THROWS_AS(read_checkpoint(bad), ParseError);

    std::stringstream buf;
    write_checkpoint(buf, sample());
    auto bytes = buf.str();
    std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_checkpoint(truncated), ParseError);
}

TEST_CASE("mismatched id list lengths are refused") {
    auto c = sample();
    c.item_ids.pop_back();
    std::stringstream buf;
    CHECK_THROWS(write_checkpoint(buf, c));
}

TEST_CASE("id digest is order sensitive and stable") {
    std::vector<std::string> a{"1", "2"}, b{"2", "1"}, c{"12"};
    CHECK(id_digest(a) != id_digest(b));
    CHECK(id_digest(a) != id_digest(c));
    CHECK(id_digest(a) == id_digest(std::vector<std::string>{"1", "2"}));
    // FNV-1a offset basis for the empty list
    CHECK(id_digest(std::vector<std::string>{}) == 0xcbf29ce484222325ULL);
}
