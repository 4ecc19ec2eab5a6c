#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "test_util.hpp"

using namespace foraug;

TEST(Config, DefaultsAreFinalConfiguration) {
    const RecombinationConfig c;
    EXPECT_EQ(c.bg_strategy, BgStrategy::all);
    EXPECT_EQ(c.size_strategy, SizeStrategy::range);
    EXPECT_EQ(c.aug_order, AugOrder::paste_crop_color);
    EXPECT_DOUBLE_EQ(c.t_prune, 0.8);
    EXPECT_DOUBLE_EQ(c.sigma_max, 4.0);
    EXPECT_EQ(c.mix_schedule, MixSchedule::cosine());
    EXPECT_DOUBLE_EQ(c.size_band, 0.3);
}

TEST(Config, ParsesAllKeys) {
    std::istringstream in("# experiment\n"
                          "bg_strategy = same_class\n"
                          "size_strategy=mean   # trailing comment\n"
                          "size_band = 0.25\n"
                          "eta = -2\n"
                          "sigma_max = 2.5\n"
                          "mix_schedule = constant(0.4)\n"
                          "aug_order = crop_paste_color\n"
                          "t_prune = 0.5\n"
                          "total_epochs = 40\n"
                          "seed = 0x10\n"
                          "image_size = 128\n"
                          "augment = horizontal_flip\n");
    const RecombinationConfig c = parse_config(in);
    EXPECT_EQ(c.bg_strategy, BgStrategy::same_class);
    EXPECT_EQ(c.size_strategy, SizeStrategy::mean);
    EXPECT_DOUBLE_EQ(c.size_band, 0.25);
    EXPECT_EQ(c.eta.eta(), -2);
    EXPECT_DOUBLE_EQ(c.sigma_max, 2.5);
    EXPECT_EQ(c.mix_schedule, MixSchedule::constant(0.4));
    EXPECT_EQ(c.aug_order, AugOrder::crop_paste_color);
    EXPECT_DOUBLE_EQ(c.t_prune, 0.5);
    EXPECT_EQ(c.total_epochs, 40);
    EXPECT_EQ(c.seed, 16u);
    EXPECT_EQ(c.image_size, 128);
    EXPECT_EQ(c.augment, std::vector<std::string>{"horizontal_flip"});
}

TEST(Config, ScheduleAliasesAndMixP) {
    EXPECT_EQ(parse_mix_schedule("cos"), MixSchedule::cosine());
    EXPECT_EQ(parse_mix_schedule("reverse_linear"), MixSchedule::reverse_linear());
    RecombinationConfig c;
    apply_assignment(c, "mix_p=0.3");
    apply_assignment(c, "mix_schedule=constant");
    EXPECT_EQ(c.mix_schedule, MixSchedule::constant(0.3));
    apply_assignment(c, "augment=none");
    EXPECT_TRUE(c.augment.empty());
    EXPECT_THROW(parse_mix_schedule("exp"), InputError);
}

TEST(Config, OverridesApplyOnTopOfBase) {
    RecombinationConfig base;
    base.seed = 7;
    std::istringstream in("sigma_max = 1\n");
    const auto c = parse_config(in, base);
    EXPECT_EQ(c.seed, 7u);
    EXPECT_DOUBLE_EQ(c.sigma_max, 1.0);
}

TEST(Config, ErrorsCarryLineNumbers) {
    const auto message = [](const std::string& text) {
        std::istringstream in(text);
        try {
            parse_config(in, {}, "exp.cfg");
        } catch (const InputError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_NE(message("seed = 1\n\ncolour = red\n").find("exp.cfg:3:"), std::string::npos);
    EXPECT_NE(message("eta = 0\n").find("exp.cfg:1:"), std::string::npos);
    EXPECT_NE(message("seed = -4\n").find("exp.cfg:1:"), std::string::npos);
    EXPECT_NE(message("size_band = abc\n").find("exp.cfg:1:"), std::string::npos);
    EXPECT_NE(message("just words\n").find("exp.cfg:1:"), std::string::npos);
    EXPECT_EQ(message("t_prune = 1.5\n").find("exp.cfg"), std::string::npos); // range checks run after parsing
    EXPECT_NE(message("t_prune = 1.5\n"), "no error");
    EXPECT_NE(message("mix_schedule = constant(2)\n"), "no error");
}

TEST(Config, RoundTrips) {
    Rng r(11);
    for (int t = 0; t < 50; ++t) {
        RecombinationConfig c;
        c.bg_strategy = static_cast<BgStrategy>(r.below(3));
        c.size_strategy = r.bernoulli(0.5) ? SizeStrategy::mean : SizeStrategy::range;
        c.size_band = r.uniform(0.0, 0.9);
        const int etas[] = {-3, -2, -1, 1, 2, 3};
        c.eta = BatesParam(etas[r.below(6)]);
        c.sigma_max = r.uniform(0.0, 6.0);
        c.mix_schedule = r.bernoulli(0.5) ? MixSchedule::constant(r.uniform()) : MixSchedule::linear();
        c.aug_order = r.bernoulli(0.5) ? AugOrder::crop_paste_color : AugOrder::paste_crop_color;
        c.t_prune = r.uniform(0.01, 1.0);
        c.total_epochs = 1 + static_cast<int>(r.below(500));
        c.seed = r.next();
        c.image_size = 8 + static_cast<int>(r.below(512));
        if (r.bernoulli(0.3)) c.augment.clear();
        std::istringstream in(config_to_string(c));
        EXPECT_EQ(parse_config(in), c);
    }
}

TEST(Config, LoadFromFile) {
    testutil::TempDir dir("config");
    {
        std::ofstream out(dir / "a.cfg");
        out << "seed = 3\n";
    }
    EXPECT_EQ(load_config((dir / "a.cfg").string()).seed, 3u);
    EXPECT_THROW(load_config((dir / "missing.cfg").string()), IoError);
}
