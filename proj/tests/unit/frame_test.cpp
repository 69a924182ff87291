#include <gtest/gtest.h>

#include <fstream>

#include "test_util.hpp"
#include "vlnaug/error.hpp"
#include "vlnaug/frame.hpp"

using namespace vlnaug;
using vlnaug::testing::TempDir;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no exception";
    return ErrorKind::kParse;
}

}  // namespace

TEST(FrameImage, RejectsBadShapesAndRange) {
    EXPECT_EQ(kind_of([] { FrameImage(0, 1, 1, {}); }), ErrorKind::kInvalidArgument);
    EXPECT_EQ(kind_of([] { FrameImage(2, 1, 2, {0, 0, 0, 0}); }), ErrorKind::kInvalidArgument);
    EXPECT_EQ(kind_of([] { FrameImage(2, 1, 1, {0.f}); }), ErrorKind::kInvalidArgument);
    EXPECT_EQ(kind_of([] { FrameImage(2, 1, 1, {0.f, 1.5f}); }), ErrorKind::kInvalidArgument);
    EXPECT_NO_THROW(FrameImage(2, 1, 1, {0.f, 1.f}));
}

TEST(FrameImage, IndexingIsRowMajorInterleaved) {
    const FrameImage f(2, 2, 3, {0, .1f, .2f, .3f, .4f, .5f, .6f, .7f, .8f, .9f, 1, 0});
    EXPECT_FLOAT_EQ(f.at(0, 1, 2), .5f);
    EXPECT_FLOAT_EQ(f.at(1, 0, 0), .6f);
    EXPECT_EQ(f.row(1).size(), 6u);
}

TEST(FrameImage, MirrorReversesColumnsAndIsInvolution) {
    const FrameImage f(3, 1, 1, {.1f, .2f, .3f});
    const auto m = f.mirrored();
    EXPECT_FLOAT_EQ(m.at(0, 0), .3f);
    EXPECT_FLOAT_EQ(m.at(0, 2), .1f);
    EXPECT_EQ(m.mirrored(), f);
}

TEST(FrameIo, PngRoundTripWithin8BitQuantization) {
    TempDir dir("frame");
    std::vector<float> px;
    for (int i = 0; i < 4 * 3 * 3; ++i) px.push_back(static_cast<float>(i) / 35.f);
    const FrameImage f(4, 3, 3, px);
    save_frame_png(f, dir / "a.png");
    const auto g = load_frame(dir / "a.png");
    ASSERT_TRUE(g.same_shape(f));
    for (std::size_t i = 0; i < px.size(); ++i) EXPECT_NEAR(g.pixels()[i], px[i], 0.5 / 255 + 1e-6);
}

TEST(FrameIo, GrayscaleStaysSingleChannel) {
    TempDir dir("frame");
    save_frame_png(FrameImage::filled(5, 2, 1, 0.4f), dir / "g.png");
    EXPECT_EQ(load_frame(dir / "g.png").channels(), 1);
}

TEST(FrameIo, CorruptOrMissingFileIsIoError) {
    TempDir dir("frame");
    const auto bad = dir.write("bad.png", "not an image");
    EXPECT_EQ(kind_of([&] { load_frame(bad); }), ErrorKind::kIo);
    EXPECT_EQ(kind_of([&] { load_frame(dir / "missing.png"); }), ErrorKind::kIo);
}

TEST(Downscale, AreaAverageHalvesWidth) {
    const FrameImage f(4, 2, 1, {0, 1, .2f, .4f, 0, 1, .2f, .4f});
    const auto d = downscale_to_width(f, 2);
    ASSERT_EQ(d.width(), 2);
    ASSERT_EQ(d.height(), 1);
    EXPECT_NEAR(d.at(0, 0), 0.5, 1e-6);
    EXPECT_NEAR(d.at(0, 1), 0.3, 1e-6);
    EXPECT_EQ(downscale_to_width(f, 8), f);
}
