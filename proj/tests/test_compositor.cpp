#include <gtest/gtest.h>

#include <cstdlib>
#include <set>

#include "test_util.hpp"

using namespace foraug;
using testutil::TempDir;

namespace {

// Independent bilinear oracle for one output sample, half-pixel aligned.
double bilinear_oracle(const RgbImage& src, int out_w, int out_h, int x, int y, int c) {
    auto coord = [](int o, int n_out, int n_in) {
        double f = (o + 0.5) * n_in / static_cast<double>(n_out) - 0.5;
        return std::min(std::max(f, 0.0), static_cast<double>(n_in - 1));
    };
    const double fx = coord(x, out_w, src.width());
    const double fy = coord(y, out_h, src.height());
    const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
    const int x1 = std::min(x0 + 1, src.width() - 1), y1 = std::min(y0 + 1, src.height() - 1);
    const double ax = fx - x0, ay = fy - y0;
    return (1 - ax) * (1 - ay) * src.at(x0, y0, c) + ax * (1 - ay) * src.at(x1, y0, c) +
           (1 - ax) * ay * src.at(x0, y1, c) + ax * ay * src.at(x1, y1, c);
}

std::size_t count_opaque(const RgbaImage& img) {
    std::size_t n = 0;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) n += img.at(x, y, 3) > 127;
    return n;
}

/// Foreground image with a binary disc of radius r.
RgbaImage disc(int size, double r) {
    RgbaImage img(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double dx = x + 0.5 - size / 2.0, dy = y + 0.5 - size / 2.0;
            std::uint8_t* p = img.pixel(x, y);
            p[0] = 250;
            p[1] = static_cast<std::uint8_t>(x);
            p[2] = static_cast<std::uint8_t>(y);
            p[3] = dx * dx + dy * dy <= r * r ? 255 : 0;
        }
    }
    return img;
}

struct Fixture {
    SynthCorpus corpus;
    AssetManifest manifest;
    std::unique_ptr<AssetImages> images;

    Fixture() {
        SynthOptions opt;
        opt.n_classes = 2;
        opt.per_class = 3;
        opt.seed = 3;
        corpus = synth_corpus(opt);
        manifest = corpus.manifest;
        images = std::make_unique<AssetImages>(manifest);
        corpus.add_to(*images);
    }
};

} // namespace

TEST(Resize, SameSizeIsExactCopy) {
    const RgbImage g = testutil::gradient(31, 17);
    EXPECT_EQ(resize_bilinear(g, 31, 17), g);
}

TEST(Resize, MatchesBilinearOracle) {
    const RgbImage g = testutil::gradient(23, 19);
    for (auto [w, h] : {std::pair{50, 41}, std::pair{11, 7}, std::pair{23, 40}}) {
        const RgbImage r = resize_bilinear(g, w, h);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < 3; ++c) {
                    ASSERT_NEAR(r.at(x, y, c), bilinear_oracle(g, w, h, x, y, c), 0.5 + 1e-9);
                }
            }
        }
    }
}

TEST(ResizeForeground, AreaTarget) {
    // 10,000 opaque pixels in a 224 x 224 source, target 10% of a 224 x 224 canvas.
    const RgbaImage fg = testutil::opaque_block(100, 100, 62);
    ASSERT_EQ(count_opaque(fg), 10000u);
    const RgbaImage out = resize_foreground(fg, 0.1, 224, 224);
    const double target = 0.1 * 224 * 224;
    EXPECT_NEAR(static_cast<double>(count_opaque(out)), target, 0.02 * target);
}

TEST(ResizeForeground, IdentityScale) {
    const RgbaImage fg = testutil::opaque_block(50, 40);
    EXPECT_EQ(resize_foreground(fg, 0.25, 100, 80), fg);
}

TEST(ResizeForeground, CapKeepsInsideCanvas) {
    const RgbaImage fg = testutil::opaque_block(100, 10);
    const RgbaImage out = resize_foreground(fg, 0.9, 120, 120);
    EXPECT_LE(out.width(), 120);
    EXPECT_LE(out.height(), 120);
    EXPECT_EQ(out.width(), 120);
}

TEST(ResizeForeground, AspectPreserved) {
    const RgbaImage fg = disc(60, 25);
    const RgbaImage out = resize_foreground(fg, 0.05, 300, 300);
    EXPECT_NEAR(static_cast<double>(out.width()) / out.height(), 1.0, 0.03);
}

TEST(ResizeForeground, BinaryAlphaStaysBinary) {
    const RgbaImage out = resize_foreground(disc(64, 27), 0.07, 224, 224);
    for (std::size_t i = 3; i < out.bytes().size(); i += 4) {
        ASSERT_TRUE(out.bytes()[i] == 0 || out.bytes()[i] == 255);
    }
}

TEST(ResizeForeground, Errors) {
    EXPECT_THROW(resize_foreground(testutil::opaque_block(10, 10), 0.0, 10, 10), InputError);
    EXPECT_THROW(resize_foreground(testutil::opaque_block(10, 10), 1.5, 10, 10), InputError);
    EXPECT_THROW(resize_foreground(RgbaImage(4, 4, 0), 0.5, 10, 10), InputError);
    EXPECT_THROW(resize_foreground(testutil::opaque_block(10, 10), 1e-9, 100, 100), InputError);
}

TEST(SmoothAlpha, ZeroSigmaIsIdentity) {
    const RgbaImage fg = disc(40, 15);
    EXPECT_EQ(smooth_alpha(fg, 0.0), fg);
    EXPECT_THROW(smooth_alpha(fg, -1.0), InputError);
}

TEST(SmoothAlpha, StepEdgeMatchesDenseConvolution) {
    // Vertical step: alpha 255 for x < 20, 0 for x >= 20.
    RgbaImage fg(40, 9);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 40; ++x) fg.at(x, y, 3) = x < 20 ? 255 : 0;
    const double sigma = 2.0;
    const RgbaImage out = smooth_alpha(fg, sigma);
    const int radius = 6;
    for (int x = 0; x < 40; ++x) {
        double num = 0.0, den = 0.0;
        for (int i = -radius; i <= radius; ++i) {
            const double w = std::exp(-i * i / (2 * sigma * sigma));
            const int xx = std::min(std::max(x + i, 0), 39);
            num += w * (xx < 20 ? 255.0 : 0.0);
            den += w;
        }
        EXPECT_NEAR(out.at(x, 4, 3), num / den, 0.5 + 1e-9) << x;
    }
    // Pixels either side of the edge straddle half intensity.
    EXPECT_NEAR((out.at(19, 4, 3) + out.at(20, 4, 3)) / 2.0, 127.5, 1.0);
    for (int x = 0; x < 40; ++x) {
        EXPECT_EQ(out.at(x, 4, 0), fg.at(x, 4, 0));
    }
}

TEST(SmoothAlpha, MassConservedAwayFromBorders) {
    const RgbaImage fg = disc(80, 20);
    const RgbaImage out = smooth_alpha(fg, 3.0);
    double a = 0, b = 0;
    for (std::size_t i = 3; i < fg.bytes().size(); i += 4) {
        a += fg.bytes()[i];
        b += out.bytes()[i];
    }
    EXPECT_NEAR(b / a, 1.0, 0.01);
}

TEST(Blend, RoundsHalfUp) {
    EXPECT_EQ(blend(200, 10, 255), 200);
    EXPECT_EQ(blend(200, 10, 0), 10);
    // 128*1 + 127*0 = 128 / 255 = 0.50196 -> 1
    EXPECT_EQ(blend(1, 0, 128), 1);
    // exact half: alpha*fg + (255-alpha)*bg = 127.5*... use fg=1,bg=0,alpha=127 -> 0.498 -> 0
    EXPECT_EQ(blend(1, 0, 127), 0);
    EXPECT_EQ(blend(255, 0, 51), 51);
}

TEST(Composite, OpaqueIsExactSelection) {
    const RgbImage bg = testutil::gradient(100, 100);
    const RgbaImage fg = testutil::opaque_block(10, 10);
    const RgbImage out = composite(fg, bg, {0.5, 0.5});
    for (int y = 0; y < 100; ++y) {
        for (int x = 0; x < 100; ++x) {
            const bool in = x >= 45 && x <= 54 && y >= 45 && y <= 54;
            for (int c = 0; c < 3; ++c) {
                ASSERT_EQ(out.at(x, y, c), in ? fg.at(x - 45, y - 45, c) : bg.at(x, y, c));
            }
        }
    }
}

TEST(Composite, TransparentLeavesBackground) {
    const RgbImage bg = testutil::gradient(64, 48);
    EXPECT_EQ(composite(RgbaImage(20, 20, 0), bg, {0.3, 0.9}), bg);
}

TEST(Composite, ExtremeCentersStayInside) {
    const RgbImage bg = testutil::gradient(50, 40);
    EXPECT_EQ(placement_offset(10, 10, 50, 40, {0.0, 0.0}), std::pair(0, 0));
    EXPECT_EQ(placement_offset(10, 10, 50, 40, {1.0, 1.0}), std::pair(40, 30));
    EXPECT_THROW(composite(testutil::opaque_block(60, 10), bg, {0.5, 0.5}), InputError);
}

TEST(PlaceInCell, CenterAndCorner) {
    const RgbImage bg(224, 224, 0);
    const RgbaImage fg = testutil::opaque_block(20, 20, 0, 255, 255, 255);
    auto centroid = [](const RgbImage& img) {
        double sx = 0, sy = 0, n = 0;
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                if (img.at(x, y, 0) == 255) {
                    sx += x + 0.5;
                    sy += y + 0.5;
                    ++n;
                }
        return std::pair{sx / n, sy / n};
    };
    const auto [cx, cy] = centroid(place_in_cell(fg, bg, {1, 1}));
    EXPECT_NEAR(cx, 112.0, 0.5);
    EXPECT_NEAR(cy, 112.0, 0.5);
    const auto [ax, ay] = centroid(place_in_cell(fg, bg, {0, 0}));
    EXPECT_NEAR(ax, 224.0 / 6, 0.5);
    EXPECT_NEAR(ay, 224.0 / 6, 0.5);
}

TEST(PlaceInCell, NineDistinctTranslations) {
    const RgbImage bg(224, 224, 0);
    const RgbaImage fg = disc(40, 18);
    std::set<std::vector<std::uint8_t>> outs;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            const RgbImage img = place_in_cell(fg, bg, {r, c});
            outs.insert({img.bytes().begin(), img.bytes().end()});
            // fg pixels identical modulo translation
            const auto [cx, cy] = cell_center({r, c}, 224, 224);
            const int x0 = static_cast<int>(std::floor(cx - 20 + 0.5));
            const int y0 = static_cast<int>(std::floor(cy - 20 + 0.5));
            for (int y = 0; y < 40; ++y) {
                for (int x = 0; x < 40; ++x) {
                    if (fg.at(x, y, 3) == 255) {
                        ASSERT_EQ(img.at(x0 + x, y0 + y, 0), 250);
                    }
                }
            }
        }
    }
    EXPECT_EQ(outs.size(), 9u);
}

TEST(PlaceInCell, OversizedForegroundFitsCell) {
    const RgbImage bg(90, 90, 0);
    const RgbaImage fg = testutil::opaque_block(60, 60, 0, 255, 255, 255);
    const RgbImage img = place_in_cell(fg, bg, {0, 2});
    int lit = 0;
    for (int y = 0; y < 90; ++y)
        for (int x = 0; x < 90; ++x) lit += img.at(x, y, 0) == 255 && (x < 60 || y >= 30);
    EXPECT_EQ(lit, 0);
}

TEST(Render, EmptyPipelineEqualsComposite) {
    Fixture f;
    RecombinationConfig c;
    c.mix_schedule = MixSchedule::none();
    c.augment = {};
    for (std::uint64_t i = 0; i < f.manifest.foregrounds.size(); ++i) {
        const SamplePlan p = plan_sample(f.manifest, c, 0, i);
        const RgbImage canvas = resize_bilinear(f.corpus.bg_images.at(*p.bg_id), 224, 224);
        RgbaImage fg = resize_foreground(f.corpus.fg_images.at(p.fg_id), p.size, 224, 224);
        const int pad = static_cast<int>(std::ceil(3 * p.blur_sigma));
        fg = smooth_alpha(pad_transparent(fg, pad, 224, 224), p.blur_sigma);
        EXPECT_EQ(render(p, f.manifest, c, {}, *f.images), composite(fg, canvas, *p.center));
    }
}

TEST(Render, OrderModesAgreeWithoutStages) {
    Fixture f;
    RecombinationConfig a;
    a.mix_schedule = MixSchedule::none();
    RecombinationConfig b = a;
    b.aug_order = AugOrder::crop_paste_color;
    for (std::uint64_t i = 0; i < f.manifest.foregrounds.size(); ++i) {
        const SamplePlan p = plan_sample(f.manifest, a, 0, i);
        EXPECT_EQ(render(p, f.manifest, a, {}, *f.images), render(p, f.manifest, b, {}, *f.images));
    }
}

TEST(Render, Deterministic) {
    Fixture f;
    RecombinationConfig c;
    c.mix_schedule = MixSchedule::constant(0.5);
    const AugPipeline pipe = make_pipeline(c.augment, c.image_size);
    for (std::uint64_t i = 0; i < f.manifest.foregrounds.size(); ++i) {
        const SamplePlan p = plan_sample(f.manifest, c, 1, i);
        EXPECT_EQ(render(p, f.manifest, c, pipe, *f.images), render(p, f.manifest, c, pipe, *f.images));
    }
}

TEST(Render, CropBeforePasteKeepsForegroundVisible) {
    Fixture f;
    RecombinationConfig c;
    c.mix_schedule = MixSchedule::none();
    c.sigma_max = 0.0;
    c.aug_order = AugOrder::crop_paste_color;
    const AugPipeline pipe = make_pipeline({"random_resized_crop"}, c.image_size);
    for (std::int64_t e = 0; e < 5; ++e) {
        for (std::uint64_t i = 0; i < f.manifest.foregrounds.size(); ++i) {
            const SamplePlan p = plan_sample(f.manifest, c, e, i);
            const RgbImage out = render(p, f.manifest, c, pipe, *f.images);
            // oracle: composite onto the cropped canvas; every opaque fg pixel must appear unchanged
            Rng rng = Rng(hash_key({stream_tag::stage, c.seed, static_cast<std::uint64_t>(e), i, 0}));
            const RgbImage cropped = pipe[0]->apply(resize_bilinear(f.corpus.bg_images.at(*p.bg_id), 224, 224), rng);
            const RgbaImage fg = resize_foreground(f.corpus.fg_images.at(p.fg_id), p.size, 224, 224);
            const auto [x0, y0] = placement_offset(fg.width(), fg.height(), 224, 224, *p.center);
            std::size_t visible = 0;
            for (int y = 0; y < fg.height(); ++y)
                for (int x = 0; x < fg.width(); ++x)
                    if (fg.at(x, y, 3) == 255) {
                        bool same = true;
                        for (int ch = 0; ch < 3; ++ch) same &= out.at(x0 + x, y0 + y, ch) == fg.at(x, y, ch);
                        visible += same;
                    }
            ASSERT_EQ(visible, count_opaque(fg));
            ASSERT_EQ(out, composite(fg, cropped, *p.center));
        }
    }
}

TEST(Render, UseOriginalRendersSourceImage) {
    Fixture f;
    RecombinationConfig c;
    c.mix_schedule = MixSchedule::constant(1.0);
    const SamplePlan p = plan_sample(f.manifest, c, 0, 0);
    ASSERT_TRUE(p.use_original);
    EXPECT_EQ(render(p, f.manifest, c, {}, *f.images), resize_bilinear(f.corpus.originals.at(p.fg_id), 224, 224));
}

TEST(Stages, ColorStagePreservesDimensions) {
    const RgbImage g = testutil::gradient(37, 21);
    Rng r(1);
    const RgbImage j = ColorJitter().apply(g, r);
    EXPECT_EQ(j.width(), 37);
    EXPECT_EQ(j.height(), 21);
    Rng r2(1);
    const RgbImage crop = RandomResizedCrop(64).apply(g, r2);
    EXPECT_EQ(crop.width(), 64);
    EXPECT_THROW(make_pipeline({"sharpen"}, 224), InputError);
}

TEST(Golden, RenderedSamplesMatchCommittedImages) {
    Fixture f;
    RecombinationConfig c;
    c.total_epochs = 4;
    c.mix_schedule = MixSchedule::linear();
    c.image_size = 96;
    const AugPipeline pipe = make_pipeline(c.augment, c.image_size);
    const bool update = std::getenv("FORAUG_UPDATE_GOLDENS") != nullptr;
    const fs::path dir = FORAUG_GOLDEN_DIR;
    for (std::int64_t e : {0, 2}) {
        for (std::uint64_t i : {0u, 3u, 5u}) {
            const SamplePlan p = plan_sample(f.manifest, c, e, i);
            const RgbImage img = render(p, f.manifest, c, pipe, *f.images);
            const fs::path file = dir / ("render_e" + std::to_string(e) + "_i" + std::to_string(i) + ".png");
            if (update) {
                fs::create_directories(dir);
                save_png(file.string(), img);
                continue;
            }
            ASSERT_TRUE(fs::exists(file)) << file << " missing; run with FORAUG_UPDATE_GOLDENS=1";
            EXPECT_EQ(load_rgb(file.string()), img) << file;
        }
    }
    for (int r = 0; r < 3; ++r) {
        SamplePlan p = probe_set(f.manifest, c, ProbeKind::grid)[static_cast<std::size_t>(r * 4)];
        const RgbImage img = render(p, f.manifest, c, {}, *f.images);
        const fs::path file = dir / ("grid_" + std::to_string(r * 4) + ".png");
        if (update) {
            save_png(file.string(), img);
            continue;
        }
        ASSERT_TRUE(fs::exists(file)) << file;
        EXPECT_EQ(load_rgb(file.string()), img) << file;
    }
}
