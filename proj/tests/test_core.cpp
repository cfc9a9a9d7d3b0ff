#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "leia/rng.hpp"
#include "leia/unicode.hpp"
#include "leia/util.hpp"

using namespace leia;

// ---- unicode ----

TEST_CASE("scalar_length counts code points, not bytes") {
    CHECK(uni::scalar_length("") == 0);
    CHECK(uni::scalar_length("abc") == 3);
    CHECK(uni::scalar_length("héllo") == 5);
    CHECK(uni::scalar_length("日本語") == 3);
    CHECK(uni::scalar_length("a\xF0\x9D\x84\x9E" "b") == 3);  // U+1D11E between ascii
}

TEST_CASE("decode/append round-trips representative code points") {
    for (char32_t cp : {char32_t(0x41), char32_t(0xE9), char32_t(0x65E5), char32_t(0x1D11E),
                        char32_t(0x10FFFF)}) {
        std::string s;
        uni::append(s, cp);
        size_t pos = 0;
        CHECK(uni::decode(s, pos) == cp);
        CHECK(pos == s.size());
    }
}

TEST_CASE("decode degrades invalid sequences to U+FFFD") {
    size_t pos = 0;
    CHECK(uni::decode("\x80", pos) == 0xFFFD);  // lone continuation
    CHECK(pos == 1);

    pos = 0;  // overlong 2-byte encoding of '/'
    CHECK(uni::decode("\xC0\xAF", pos) == 0xFFFD);
    CHECK(pos == 2);

    pos = 0;  // UTF-16 surrogate D800
    CHECK(uni::decode("\xED\xA0\x80", pos) == 0xFFFD);
    CHECK(pos == 3);

    pos = 0;  // truncated 3-byte sequence
    CHECK(uni::decode("\xE6\x97", pos) == 0xFFFD);
    CHECK(pos == 1);
}

TEST_CASE("byte offsets and slices in scalar coordinates") {
    std::string s = "aé日b";  // bytes: 1 + 2 + 3 + 1
    CHECK(uni::byte_offset_of_scalar(s, 0) == 0);
    CHECK(uni::byte_offset_of_scalar(s, 1) == 1);
    CHECK(uni::byte_offset_of_scalar(s, 2) == 3);
    CHECK(uni::byte_offset_of_scalar(s, 3) == 6);
    CHECK(uni::byte_offset_of_scalar(s, 4) == 7);
    CHECK(uni::byte_offset_of_scalar(s, 99) == s.size());
    CHECK(uni::scalar_slice(s, 1, 3) == "é日");
    CHECK(uni::scalar_slice(s, 0, 0) == "");
}

TEST_CASE("simple uppercase covers latin, cyrillic, greek") {
    CHECK(uni::simple_uppercase(U'a') == U'A');
    CHECK(uni::simple_uppercase(U'é') == U'É');
    CHECK(uni::simple_uppercase(U'я') == U'Я');
    CHECK(uni::simple_uppercase(U'α') == U'Α');
    CHECK(uni::simple_uppercase(U'日') == U'日');
    CHECK(uni::simple_uppercase(U'A') == U'A');
}

TEST_CASE("uppercase_first touches only the first code point") {
    CHECK(uni::uppercase_first("bar") == "Bar");
    CHECK(uni::uppercase_first("éclair") == "Éclair");
    CHECK(uni::uppercase_first("日本") == "日本");
    CHECK(uni::uppercase_first("new york") == "New york");
    CHECK(uni::uppercase_first("") == "");
}

TEST_CASE("trim removes ascii and CJK whitespace") {
    CHECK(uni::trim("  x  ") == "x");
    CHECK(uni::trim("　東京　") == "東京");
    CHECK(uni::trim("\t\n東京 ") == "東京");
    CHECK(uni::trim(" a ") == "a");
    CHECK(uni::trim("   ") == "");
    CHECK(uni::trim("") == "");
}

// ---- util ----

TEST_CASE("base64 known vectors and round-trip") {
    auto enc = [](std::string_view s) {
        return base64_encode(reinterpret_cast<const uint8_t*>(s.data()), s.size());
    };
    CHECK(enc("Man") == "TWFu");
    CHECK(enc("Ma") == "TWE=");
    CHECK(enc("M") == "TQ==");
    CHECK(enc("") == "");

    std::vector<uint8_t> data;
    for (size_t n = 0; n < 67; ++n) {
        std::string b64 = base64_encode(data.data(), data.size());
        std::vector<uint8_t> back = base64_decode(b64);
        CHECK(back == data);
        data.push_back(uint8_t(n * 37 + 11));
    }
}

TEST_CASE("fnv1a64 known vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("atomic_write_file leaves the final content in place") {
    auto dir = std::filesystem::temp_directory_path() / "leia-test-util";
    std::filesystem::create_directories(dir);
    std::string path = (dir / "atomic.txt").string();
    atomic_write_file(path, "hello\n");
    CHECK(read_file(path) == "hello\n");
    atomic_write_file(path, "replaced");
    CHECK(read_file(path) == "replaced");
    std::filesystem::remove_all(dir);
}

TEST_CASE("MappedFile views file bytes") {
    auto dir = std::filesystem::temp_directory_path() / "leia-test-mmap";
    std::filesystem::create_directories(dir);
    std::string path = (dir / "m.bin").string();
    atomic_write_file(path, std::string_view("abc\0def", 7));
    MappedFile m;
    m.open(path);
    CHECK(m.size() == 7);
    CHECK(m.view() == std::string_view("abc\0def", 7));

    std::string empty_path = (dir / "empty").string();
    atomic_write_file(empty_path, "");
    MappedFile e;
    e.open(empty_path);
    CHECK(e.size() == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("parallel_map_ordered keeps input order") {
    std::vector<int> in;
    for (int i = 0; i < 1000; ++i) in.push_back(i);
    std::vector<int> out;
    parallel_map_ordered<int, int>(in, out, 4, [](const int& v) { return v * 3 + 1; });
    REQUIRE(out.size() == in.size());
    for (int i = 0; i < 1000; ++i) CHECK(out[size_t(i)] == i * 3 + 1);
}

TEST_CASE("parallel_map_ordered propagates worker exceptions") {
    std::vector<int> in(200, 1);
    in[137] = -1;
    std::vector<int> out;
    CHECK_THROWS_AS((parallel_map_ordered<int, int>(in, out, 4,
                                                    [](const int& v) {
                                                        if (v < 0) throw IoError("boom");
                                                        return v;
                                                    })),
                    IoError);
}

// ---- rng ----

TEST_CASE("splitmix64 matches the reference stream") {
    CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
    CHECK(splitmix64(0x9E3779B97F4A7C15ULL) == 0x6E789E6AA1B965F4ULL);
}

TEST_CASE("mix_key is stable and sensitive to every component") {
    CHECK(mix_key(42, 7, 3) == 0xF55E4254D4655539ULL);
    CHECK(mix_key(42, 7, 3) == mix_key(42, 7, 3));
    CHECK(mix_key(42, 7, 3) != mix_key(43, 7, 3));
    CHECK(mix_key(42, 7, 3) != mix_key(42, 8, 3));
    CHECK(mix_key(42, 7, 3) != mix_key(42, 7, 4));
}

TEST_CASE("uniform01 stays in [0,1) and looks uniform") {
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double u = record_uniform(99, 1234, uint64_t(i));
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    double mean = sum / n;
    CHECK(mean > 0.49);
    CHECK(mean < 0.51);
}
