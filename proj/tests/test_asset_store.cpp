#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "test_util.hpp"

using namespace foraug;
using testutil::TempDir;

namespace {

std::string fg_line(const std::string& id, int cls, const std::string& src, double f) {
    nlohmann::ordered_json j{{"id", id}, {"kind", "foreground"}, {"class_id", cls}, {"source_image_id", src},
                             {"size_fraction", f}};
    return j.dump();
}

std::string bg_line(const std::string& id, int cls, const std::string& src, double f, double infill) {
    nlohmann::ordered_json j{{"id", id},          {"kind", "background"}, {"class_id", cls},
                             {"source_image_id", src}, {"size_fraction", f},   {"infill_ratio", infill}};
    return j.dump();
}

/// Writes n linked fg/bg image pairs and returns the sidecar text.
std::string write_pairs(const TempDir& dir, int n) {
    fs::create_directories(dir / "fg");
    fs::create_directories(dir / "bg");
    std::ostringstream side;
    for (int i = 0; i < n; ++i) {
        const std::string k = std::to_string(i);
        save_png((dir / ("fg/f" + k + ".png")).string(), testutil::opaque_block(10, 10, 2));
        save_png((dir / ("bg/b" + k + ".png")).string(), testutil::gradient(40, 30));
        side << fg_line("f" + k, i % 2, "s" + k, 100.0 / 1200.0) << '\n'
             << bg_line("b" + k, i % 2, "s" + k, 0.1, 0.2) << '\n';
    }
    return side.str();
}

AssetManifest infill_manifest(std::initializer_list<double> ratios) {
    AssetManifest m;
    int i = 0;
    for (double r : ratios) {
        const std::string k = std::to_string(i++);
        m.foregrounds.push_back({"f" + k, 0, "", 0.1, "s" + k, ""});
        m.backgrounds.push_back({"b" + k, 0, "", 0.1, r, "s" + k});
    }
    m.reindex();
    return m;
}

} // namespace

TEST(BuildManifest, ThreePairs) {
    TempDir dir("build3");
    std::istringstream side(write_pairs(dir, 3));
    const AssetManifest m = build_manifest((dir / "fg").string(), (dir / "bg").string(), side);
    EXPECT_EQ(m.foregrounds.size(), 3u);
    EXPECT_EQ(m.backgrounds.size(), 3u);
    EXPECT_EQ(m.pair_count(), 3u);
    EXPECT_TRUE(validate(m).ok());
    EXPECT_EQ(m.foregrounds[0].id, "f0");
    EXPECT_EQ(m.original_background(m.foregrounds[2])->id, "b2");
}

TEST(BuildManifest, EmptyInputIsNoAssets) {
    TempDir dir("empty");
    std::istringstream side("");
    try {
        build_manifest(dir.str(), dir.str(), side);
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("no assets"), std::string::npos);
    }
}

TEST(BuildManifest, MissingFieldNamesAsset) {
    TempDir dir("missing");
    std::istringstream side(R"({"id":"fg_x","kind":"foreground","class_id":1,"source_image_id":"s"})");
    try {
        build_manifest(dir.str(), dir.str(), side, {false, ""});
        FAIL();
    } catch (const InputError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("fg_x"), std::string::npos);
        EXPECT_NE(msg.find("size_fraction"), std::string::npos);
    }
}

TEST(BuildManifest, DuplicateIdRejected) {
    TempDir dir("dup");
    std::istringstream side(fg_line("a", 0, "s", 0.1) + "\n" + fg_line("a", 0, "t", 0.1) + "\n");
    EXPECT_THROW(build_manifest(dir.str(), dir.str(), side, {false, ""}), InputError);
}

TEST(BuildManifest, UndecodableImageRejected) {
    TempDir dir("bad");
    std::istringstream side(write_pairs(dir, 1));
    std::ofstream(dir / "bg/b0.png") << "not an image";
    try {
        build_manifest((dir / "fg").string(), (dir / "bg").string(), side);
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("b0"), std::string::npos);
    }
}

TEST(BuildManifest, OrderIsLexicographicById) {
    std::istringstream side(fg_line("z", 0, "s1", 0.1) + "\n" + bg_line("y", 0, "s1", 0.1, 0) + "\n" +
                            fg_line("a", 0, "s2", 0.1) + "\n" + bg_line("b", 0, "s2", 0.1, 0) + "\n");
    const AssetManifest m = build_manifest(".", ".", side, {false, ""});
    EXPECT_EQ(m.foregrounds[0].id, "a");
    EXPECT_EQ(m.backgrounds[0].id, "b");
}

TEST(BuildManifest, FullScalePairCount) {
    // Pair-count bookkeeping at the size of the published asset corpus.
    const std::size_t n = 1274557;
    std::string text;
    text.reserve(n * 260);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string k = std::to_string(i);
        text += R"({"id":"f)" + k + R"(","kind":"fg","class_id":)" + std::to_string(i % 1000) +
                R"(,"source_image_id":"s)" + k + R"(","size_fraction":0.2,"file":"f.png"})" + "\n";
        text += R"({"id":"b)" + k + R"(","kind":"bg","class_id":)" + std::to_string(i % 1000) +
                R"(,"source_image_id":"s)" + k + R"(","size_fraction":0.2,"infill_ratio":0.3,"file":"b.png"})" +
                "\n";
    }
    std::istringstream side(std::move(text));
    const AssetManifest m = build_manifest("/fg", "/bg", side, {false, ""});
    EXPECT_EQ(m.pair_count(), 1274557u);
}

TEST(PruneBackgrounds, StraddlingThresholdKeepsTwo) {
    const AssetManifest m = infill_manifest({0.5, 0.79, 0.81, 0.95});
    const AssetManifest p = prune_backgrounds(m, 0.8);
    ASSERT_EQ(p.backgrounds.size(), 2u);
    EXPECT_DOUBLE_EQ(p.backgrounds[0].infill_ratio, 0.5);
    EXPECT_DOUBLE_EQ(p.backgrounds[1].infill_ratio, 0.79);
    EXPECT_EQ(p.foregrounds, m.foregrounds);
    EXPECT_TRUE(validate(p, false).ok());
}

TEST(PruneBackgrounds, EqualityIsKept) {
    const AssetManifest p = prune_backgrounds(infill_manifest({0.8, 0.3}), 0.8);
    EXPECT_EQ(p.backgrounds.size(), 2u);
}

TEST(PruneBackgrounds, ThresholdOneIsIdentity) {
    const AssetManifest m = infill_manifest({0.5, 0.79, 0.81, 1.0});
    EXPECT_EQ(prune_backgrounds(m, 1.0), m);
}

TEST(PruneBackgrounds, EmptiedClassIsError) {
    try {
        prune_backgrounds(infill_manifest({0.9, 0.9}), 0.8);
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("class(es): 0"), std::string::npos);
    }
}

TEST(PruneBackgrounds, Idempotent) {
    const AssetManifest m = infill_manifest({0.1, 0.85, 0.4, 0.99, 0.8});
    const AssetManifest once = prune_backgrounds(m, 0.8);
    EXPECT_EQ(prune_backgrounds(once, 0.8), once);
}

TEST(PruneBackgrounds, RejectsBadThreshold) {
    EXPECT_THROW(prune_backgrounds(infill_manifest({0.1}), 0.0), InputError);
    EXPECT_THROW(prune_backgrounds(infill_manifest({0.1}), 1.1), InputError);
}

TEST(Validate, TransparentForegroundIsOneViolation) {
    TempDir dir("transparent");
    std::istringstream side(write_pairs(dir, 2));
    AssetManifest m = build_manifest((dir / "fg").string(), (dir / "bg").string(), side);
    RgbaImage clear(8, 8, 0);
    save_png(m.foregrounds[1].image_ref, clear);
    const ValidationReport r = validate(m);
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].asset_id, "f1");
}

TEST(Validate, InfillOutOfRangeIsOneViolation) {
    AssetManifest m = infill_manifest({0.1, 0.2});
    m.backgrounds[0].infill_ratio = 1.2;
    const ValidationReport r = validate(m, false);
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].asset_id, "b0");
}

TEST(Validate, BrokenLinkageReported) {
    AssetManifest m = infill_manifest({0.1, 0.2});
    m.backgrounds[1].source_image_id = "s0";
    m.reindex();
    EXPECT_FALSE(validate(m, false).ok());
}

TEST(Validate, PrunedSourceIsNotAViolation) {
    const AssetManifest p = prune_backgrounds(infill_manifest({0.1, 0.95}), 0.8);
    EXPECT_TRUE(validate(p, false).ok());
    EXPECT_EQ(p.pair_count(), 1u);
}

TEST(ManifestIo, RoundTrip) {
    TempDir dir("roundtrip");
    std::istringstream side(write_pairs(dir, 4));
    const AssetManifest m = prune_backgrounds(
        build_manifest((dir / "fg").string(), (dir / "bg").string(), side), 1.0);
    save_manifest(m, (dir / "manifest").string());
    const AssetManifest back = load_manifest((dir / "manifest").string());
    EXPECT_EQ(back, m);
    EXPECT_TRUE(validate(back).ok());
}

TEST(ManifestIo, RoundTripKeepsPrunedSources) {
    TempDir dir("roundtrip_pruned");
    const AssetManifest m = prune_backgrounds(infill_manifest({0.1, 0.95}), 0.8);
    save_manifest(m, dir.str());
    EXPECT_EQ(load_manifest(dir.str()), m);
}

TEST(ManifestIo, MissingDirectoryIsIoError) {
    EXPECT_THROW(load_manifest("/nonexistent/foraug/manifest"), IoError);
}

TEST(AssetImages, LoadErrorNamesAsset) {
    AssetManifest m = infill_manifest({0.1});
    m.foregrounds[0].image_ref = "/nonexistent/x.png";
    m.reindex();
    AssetImages images(m);
    try {
        images.foreground(m.foregrounds[0]);
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("f0"), std::string::npos);
    }
    EXPECT_THROW(images.original(m.foregrounds[0]), InputError);
}

TEST(SynthCorpus, SizeFractionMatchesAlphaCount) {
    SynthOptions opt;
    opt.n_classes = 3;
    opt.per_class = 4;
    opt.seed = 5;
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < 4; ++i) {
            const SynthItem item = synth_item(opt, c, i);
            const double area = static_cast<double>(item.original.pixel_count());
            EXPECT_EQ(item.fg.orig_size_fraction, static_cast<double>(opaque_count(item.fg_image)) / area);
        }
    }
}

TEST(SynthCorpus, WrittenCorpusValidates) {
    TempDir dir("synth");
    SynthOptions opt;
    opt.n_classes = 2;
    opt.per_class = 10;
    const AssetManifest m = write_synth_corpus(dir.str(), opt);
    EXPECT_EQ(m.foregrounds.size(), 20u);
    EXPECT_EQ(m.backgrounds.size(), 20u);
    EXPECT_TRUE(validate(load_manifest((dir / "manifest").string())).ok());
    EXPECT_NO_THROW(prune_backgrounds(m, 0.8));
}

TEST(SynthCorpus, FixedSeedIsReproducible) {
    SynthOptions opt;
    opt.per_class = 3;
    const SynthCorpus a = synth_corpus(opt);
    const SynthCorpus b = synth_corpus(opt);
    EXPECT_EQ(a.manifest, b.manifest);
    EXPECT_EQ(a.fg_images, b.fg_images);
    EXPECT_EQ(a.bg_images, b.bg_images);
}
