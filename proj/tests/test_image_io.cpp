#include "silhar/image_io.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>
#include <png.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace silhar;
namespace fs = std::filesystem;

namespace {

using testutil::TempDir;

void write_raw_pgm(const fs::path& p, int w, int h, const std::vector<std::uint8_t>& px)
{
    std::ofstream out(p, std::ios::binary);
    out << "P5\n# a comment\n" << w << ' ' << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

} // namespace

TEST(ImageIo, ThresholdIdentity)
{
    TempDir tmp("thr");
    write_raw_pgm(tmp.path / "a.pgm", 2, 2, {0, 255, 255, 0});
    const auto m = load_mask(tmp.path / "a.pgm", 127);
    EXPECT_EQ(m, SilhouetteMask(2, 2, {0, 1, 1, 0}));
}

TEST(ImageIo, AllZeroImageIsEmptyMask)
{
    TempDir tmp("zero");
    write_raw_pgm(tmp.path / "z.pgm", 5, 5, std::vector<std::uint8_t>(25, 0));
    EXPECT_TRUE(load_mask(tmp.path / "z.pgm").empty());
}

TEST(ImageIo, AntiAliasedEdgeMatchesPixelScan)
{
    TempDir tmp("aa");
    const int w = 31, h = 17;
    std::vector<std::uint8_t> px;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            px.push_back(static_cast<std::uint8_t>(std::clamp((c - 10) * 25 + r * 3, 0, 255)));
    write_raw_pgm(tmp.path / "edge.pgm", w, h, px);
    const auto m = load_mask(tmp.path / "edge.pgm", 127);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            ASSERT_EQ(m.at(r, c), px[std::size_t(r * w + c)] > 127 ? 1 : 0) << r << ',' << c;
}

TEST(ImageIo, AsciiPgmWithMaxval)
{
    TempDir tmp("p2");
    {
        std::ofstream out(tmp.path / "a.pgm");
        out << "P2\n3 1\n15\n0 8 15\n";
    }
    EXPECT_EQ(load_mask(tmp.path / "a.pgm"), SilhouetteMask(3, 1, {0, 1, 1}));
}

TEST(ImageIo, PngRoundTrip)
{
    TempDir tmp("png");
    std::vector<std::uint8_t> px = {0, 255, 0, 255, 255, 0};
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = 3;
    img.height = 2;
    img.format = PNG_FORMAT_GRAY;
    const auto file = tmp.path / "a.png";
    ASSERT_TRUE(png_image_write_to_file(&img, file.string().c_str(), 0, px.data(), 0, nullptr));
    EXPECT_EQ(load_mask(file), SilhouetteMask(3, 2, {0, 1, 0, 1, 1, 0}));
}

TEST(ImageIo, WritePgmRoundTrip)
{
    TempDir tmp("rt");
    std::mt19937 rng(3);
    SilhouetteMask m(13, 7);
    for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 13; ++c)
            m.set(r, c, rng() & 1);
    write_pgm(tmp.path / "m.pgm", m);
    EXPECT_EQ(load_mask(tmp.path / "m.pgm"), m);
}

TEST(ImageIo, Errors)
{
    TempDir tmp("err");
    try {
        load_mask(tmp.path / "missing.pgm");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::io);
    }
    {
        std::ofstream out(tmp.path / "zero.pgm", std::ios::binary);
        out << "P5\n0 0\n255\n";
    }
    try {
        load_mask(tmp.path / "zero.pgm");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::format);
    }
    {
        std::ofstream out(tmp.path / "short.pgm", std::ios::binary);
        out << "P5\n4 4\n255\nab";
    }
    EXPECT_THROW(load_mask(tmp.path / "short.pgm"), Error);
}

TEST(ImageIo, SequenceOrder)
{
    TempDir tmp("seq");
    for (const char* name : {"f_002.pgm", "f_000.pgm", "f_001.png", "notes.txt"})
        std::ofstream(tmp.path / name) << "x";
    auto files = list_sequence(tmp.path);
    ASSERT_EQ(files.size(), 3u);
    EXPECT_EQ(files[0].filename(), "f_000.pgm");
    EXPECT_EQ(files[1].filename(), "f_001.png");
    EXPECT_EQ(files[2].filename(), "f_002.pgm");

    std::ofstream(tmp.path / kSequenceManifestName) << "# order\nf_002.pgm\n\nf_000.pgm\n";
    files = list_sequence(tmp.path);
    ASSERT_EQ(files.size(), 2u);
    EXPECT_EQ(files[0].filename(), "f_002.pgm");
}
