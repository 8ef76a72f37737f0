#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include "matef/digest.hpp"
#include "matef/errors.hpp"
#include "matef/sample_library.hpp"
#include "matef/store.hpp"
#include "matef/util.hpp"

using namespace matef;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const auto dir = fs::temp_directory_path() / ("matef_test_" + tag + "_" +
                                                  std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<std::byte> bytes_of(std::string_view s) {
    const auto span = as_bytes(s);
    return {span.begin(), span.end()};
}

}  // namespace

TEST_CASE("md5 matches the RFC 1321 reference vectors") {
    // Computed independently with Python hashlib before the build.
    CHECK(md5_hex(bytes_of("abc")) == "900150983cd24fb0d6963f7d28e17f72");
    CHECK(md5_hex(bytes_of("")) == "d41d8cd98f00b204e9800998ecf8427e");
    CHECK(md5_hex(bytes_of("message digest")) == "f96b697d7cb7938d525a2f31aaf161d0");
    CHECK(sha256_hex(bytes_of("abc")).substr(0, 16) == "ba7816bf8f01cfea");
}

TEST_CASE("ingest is idempotent and keyed by content") {
    const auto dir = temp_dir("ingest");
    ArtefactStore store(dir / "lib.db");
    SampleLibrary library(store);

    const auto blob = bytes_of("\x01\x02\x03\x04");
    const auto first = library.ingest_binary(blob, "feed", {"network_artefacts"});
    const auto second = library.ingest_binary(blob, "other-feed", {"ignored"});
    CHECK(first.md5 == second.md5);
    CHECK(second.source_tag == "feed");  // existing record returned unchanged
    CHECK(store.sample_count() == 1);

    const auto other = library.ingest_binary(bytes_of("different"), "feed", {});
    CHECK(other.md5 != first.md5);
    CHECK(store.sample_count() == 2);

    CHECK_THROWS_AS(library.ingest_binary({}, "feed", {}), ConfigError);

    // Lookup returns byte-identical content.
    CHECK(store.sample_content(first.md5) == blob);
    CHECK(*store.find_sample(first.md5) == first);
    fs::remove_all(dir);
}

TEST_CASE("select_sample draws without replacement, deterministically") {
    const auto dir = temp_dir("select");
    ArtefactStore store(dir / "lib.db");
    SampleLibrary library(store);
    for (int i = 0; i < 10; ++i)
        library.ingest_binary(bytes_of("blob" + std::to_string(i)), "src", {"net"});

    SUBCASE("exhaustive draw returns the whole population") {
        const auto all = library.select_sample("net", 10, 7);
        CHECK(all.size() == 10);
        CHECK(std::set<std::string>(all.begin(), all.end()).size() == 10);
    }
    SUBCASE("fixed seed reproduces the list; the draw is a function") {
        const auto a = library.select_sample("net", 6, 12345);
        const auto b = library.select_sample("net", 6, 12345);
        CHECK(a == b);
        const auto c = library.select_sample("net", 6, 54321);
        CHECK(a != c);  // overwhelming probability over 10P6 orderings
    }
    SUBCASE("count beyond the tagged population names the shortfall") {
        CHECK_THROWS_WITH_AS(static_cast<void>(library.select_sample("net", 11, 1)),
                             doctest::Contains("short by 1"), ConfigError);
        CHECK_THROWS_AS(static_cast<void>(library.select_sample("absent", 1, 1)), ConfigError);
    }
    fs::remove_all(dir);
}

TEST_CASE("select_sample inclusion is empirically uniform") {
    const auto dir = temp_dir("uniform");
    ArtefactStore store(dir / "lib.db");
    SampleLibrary library(store);
    std::vector<std::string> hashes;
    for (int i = 0; i < 100; ++i)
        hashes.push_back(
            library.ingest_binary(bytes_of("pop" + std::to_string(i)), "src", {"net"}).md5);

    // Monte-Carlo oracle: 10,000 seeded draws of 30, every element should be
    // included 30% +/- 2% of the time.
    std::map<std::string, int> included;
    const int draws = 10000;
    for (int seed = 0; seed < draws; ++seed)
        for (const auto& md5 : library.select_sample("net", 30, static_cast<std::uint64_t>(seed)))
            ++included[md5];
    REQUIRE(included.size() == 100);
    for (const auto& [md5, count] : included) {
        const double rate = static_cast<double>(count) / draws;
        CHECK(rate > 0.28);
        CHECK(rate < 0.32);
    }
    fs::remove_all(dir);
}

TEST_CASE("partition_in_trays follows the remainder rule") {
    std::vector<std::string> hashes;
    for (int i = 0; i < 10; ++i) hashes.push_back("h" + std::to_string(i));

    SUBCASE("10 hashes over 3 guests -> sizes 4,3,3") {
        // Brute-force size enumeration: the unique non-increasing size vector
        // with sum 10, max-min <= 1 over 3 trays is (4,3,3).
        const auto trays = partition_in_trays(hashes, 3);
        REQUIRE(trays.size() == 3);
        CHECK(trays[0].hashes.size() == 4);
        CHECK(trays[1].hashes.size() == 3);
        CHECK(trays[2].hashes.size() == 3);
        // Concatenation preserves input order.
        std::vector<std::string> rejoined;
        for (const auto& tray : trays)
            rejoined.insert(rejoined.end(), tray.hashes.begin(), tray.hashes.end());
        CHECK(rejoined == hashes);
    }
    SUBCASE("empty input, one guest -> one empty tray") {
        const auto trays = partition_in_trays({}, 1);
        REQUIRE(trays.size() == 1);
        CHECK(trays[0].hashes.empty());
    }
    SUBCASE("guest_count 0 is rejected") {
        CHECK_THROWS_AS(partition_in_trays(hashes, 0), ConfigError);
    }
    SUBCASE("4800 hashes over 60 guests -> 60 trays of 80") {
        std::vector<std::string> big;
        for (int i = 0; i < 4800; ++i) big.push_back("x" + std::to_string(i));
        const auto trays = partition_in_trays(big, 60);
        REQUIRE(trays.size() == 60);
        for (const auto& tray : trays) CHECK(tray.hashes.size() == 80);
    }
}

TEST_CASE("partition invariants hold across sizes") {
    // Property: sum of tray sizes equals input size and max-min <= 1.
    for (int n : {0, 1, 2, 5, 17, 100, 257}) {
        std::vector<std::string> hashes;
        for (int i = 0; i < n; ++i) hashes.push_back(std::to_string(i));
        for (int guests : {1, 2, 3, 7, 59, 60}) {
            const auto trays = partition_in_trays(hashes, guests);
            std::size_t total = 0, min_size = hashes.size() + 1, max_size = 0;
            for (const auto& tray : trays) {
                total += tray.hashes.size();
                min_size = std::min(min_size, tray.hashes.size());
                max_size = std::max(max_size, tray.hashes.size());
            }
            CHECK(total == hashes.size());
            CHECK(max_size - min_size <= 1);
            CHECK(trays.size() == static_cast<std::size_t>(guests));
        }
    }
}

TEST_CASE("ingest_directory honours the sidecar manifest and dedups") {
    const auto dir = temp_dir("dir_ingest");
    const auto bin_dir = dir / "bins";
    fs::create_directories(bin_dir);
    write_file_text((bin_dir / "a.exe").string(), "payload-a");
    write_file_text((bin_dir / "b.exe").string(), "payload-b");
    write_file_text((bin_dir / "empty.exe").string(), "");
    write_file_text((bin_dir / "manifest.csv").string(),
                    "filename,source_tag,capability_tags\n"
                    "a.exe,vt-feed,\"network_artefacts,packed\"\n");

    ArtefactStore store(dir / "lib.db");
    SampleLibrary library(store);
    const auto summary = ingest_directory(library, bin_dir, std::nullopt, "local", {"misc"});
    CHECK(summary.ingested == 2);
    CHECK(summary.skipped == 1);  // the empty file
    CHECK(summary.duplicates == 0);

    const auto a = store.find_sample(md5_hex(as_bytes("payload-a")));
    REQUIRE(a.has_value());
    CHECK(a->source_tag == "vt-feed");
    CHECK(a->capability_tags == std::set<std::string>{"network_artefacts", "packed"});
    const auto b = store.find_sample(md5_hex(as_bytes("payload-b")));
    REQUIRE(b.has_value());
    CHECK(b->source_tag == "local");
    CHECK(b->capability_tags == std::set<std::string>{"misc"});

    // Second pass ingests nothing new.
    const auto again = ingest_directory(library, bin_dir, std::nullopt, "local", {"misc"});
    CHECK(again.ingested == 0);
    CHECK(again.duplicates == 2);
    fs::remove_all(dir);
}
