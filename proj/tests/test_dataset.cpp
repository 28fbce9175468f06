#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "meagraph/dataset.hpp"
#include "meagraph/errors.hpp"
#include "meagraph/kernels.hpp"
#include "meagraph/textio.hpp"

using namespace meagraph;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("meagraph_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

} // namespace

TEST_CASE("minimal two-atom file loads with inferred dimension") {
    TempDir tmp;
    const std::string path = tmp.file("mini.csv");
    write_text_file(path,
                    "structure_id,atom_index,group,fx,fy,fz,d0,d1\n"
                    "s0,0,bulk,0.1,0.2,0.3,1,2\n"
                    "s0,1,,0.4,0.5,0.6,3,4\n");
    const FeatureDataset ds = load_dataset(path);
    CHECK(ds.feature_dim == 2);
    CHECK(ds.size() == 2);
    CHECK(ds.records[0].group == "bulk");
    CHECK(ds.records[1].group == "unlabeled"); // empty group defaults
    CHECK(ds.records[1].features[1] == 4.0);
}

TEST_CASE("non-finite features are rejected with the row number") {
    TempDir tmp;
    const std::string path = tmp.file("bad.csv");
    write_text_file(path,
                    "structure_id,atom_index,group,fx,fy,fz,d0\n"
                    "s0,0,a,0,0,0,1.5\n"
                    "s0,1,a,0,0,0,nan\n");
    try {
        load_dataset(path);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("ragged rows are rejected") {
    TempDir tmp;
    const std::string path = tmp.file("ragged.csv");
    write_text_file(path,
                    "structure_id,atom_index,group,fx,fy,fz,d0,d1\n"
                    "s0,0,a,0,0,0,1,2\n"
                    "s0,1,a,0,0,0,1\n");
    CHECK_THROWS_AS(load_dataset(path), DataError);
}

TEST_CASE("save -> load -> save round-trips byte-identically") {
    TempDir tmp;
    FeatureDataset ds = synth_blobs(3, 5, 4, 6.0, 0.3, 99, 0.05);
    const std::string p1 = tmp.file("a.csv");
    const std::string p2 = tmp.file("b.csv");
    save_dataset(ds, p1);
    const FeatureDataset loaded = load_dataset(p1);
    save_dataset(loaded, p2);
    CHECK(read_text_file(p1) == read_text_file(p2));
    CHECK(ds.content_hash() == loaded.content_hash());
}

TEST_CASE("content hash changes iff a record changes") {
    FeatureDataset ds = synth_blobs(2, 4, 3, 5.0, 0.2, 7);
    const std::string h1 = ds.content_hash();
    CHECK(h1 == ds.content_hash());
    ds.records[3].features[0] += 1e-9;
    CHECK(ds.content_hash() != h1);
}

TEST_CASE("header defines the column count as 6 + D") {
    FeatureDataset ds = synth_blobs(1, 2, 5, 3.0, 0.1, 1);
    const std::string text = ds.canonical_serialization();
    const std::size_t header_end = text.find('\n', text.rfind("structure_id"));
    const std::string header = text.substr(text.rfind("structure_id"), header_end - text.rfind("structure_id"));
    CHECK(std::count(header.begin(), header.end(), ',') == 5 + 5); // 6+D fields
}

TEST_CASE("synth_blobs basics") {
    // Zero spread puts every atom of a blob on its centroid.
    const FeatureDataset tight = synth_blobs(2, 3, 4, 5.0, 0.0, 13);
    for (std::size_t i = 1; i < 3; ++i) {
        CHECK(tight.records[i].features == tight.records[0].features);
    }
    const FeatureDataset one = synth_blobs(1, 4, 3, 5.0, 0.1, 13);
    CHECK(one.group_set() == std::vector<std::string>{"g0"});

    // Centroid separation holds by direct distance computation.
    const FeatureDataset many = synth_blobs(7, 1, 3, 4.0, 0.0, 13);
    for (std::size_t a = 0; a < 7; ++a) {
        for (std::size_t b = a + 1; b < 7; ++b) {
            const double d2 = kernels::sqdist(many.records[a].features.data(),
                                              many.records[b].features.data(), 3);
            CHECK(std::sqrt(d2) >= 4.0 - 1e-12);
        }
    }
}

TEST_CASE("synth_redundant multiplies the dataset") {
    const FeatureDataset base = synth_blobs(2, 5, 3, 6.0, 0.2, 5, 0.0);
    const FeatureDataset red = synth_redundant(base, 4, 0.01, 6);
    CHECK(red.size() == 4 * base.size());

    // factor 1, jitter 0 keeps the features; labels are regenerated from
    // the hidden map, which for zero force noise reproduces them exactly.
    const FeatureDataset same = synth_redundant(base, 1, 0.0, 6);
    REQUIRE(same.size() == base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK(same.records[i].features == base.records[i].features);
        CHECK(same.records[i].force[0] == doctest::Approx(base.records[i].force[0]));
    }
    CHECK_THROWS_AS(synth_redundant(base, 0, 0.0, 6), ConfigError);
}

TEST_CASE("generators are reproducible per seed") {
    const FeatureDataset a = synth_blobs(3, 4, 5, 7.0, 0.4, 123, 0.1);
    const FeatureDataset b = synth_blobs(3, 4, 5, 7.0, 0.4, 123, 0.1);
    CHECK(a.content_hash() == b.content_hash());
    const FeatureDataset c = synth_blobs(3, 4, 5, 7.0, 0.4, 124, 0.1);
    CHECK(a.content_hash() != c.content_hash());
}

TEST_CASE("scan_dataset streams the same records load_dataset returns") {
    TempDir tmp;
    const FeatureDataset ds = synth_blobs(2, 3, 2, 5.0, 0.3, 3);
    const std::string path = tmp.file("ds.csv");
    save_dataset(ds, path);
    std::size_t count = 0;
    scan_dataset(path, [&](const AtomRecord& r, std::size_t) {
        CHECK(r.features == ds.records[count].features);
        ++count;
    });
    CHECK(count == ds.size());
}
