#pragma once

#include "silhar/error.hpp"
#include "silhar/mask.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace silhar {

inline constexpr int kDefaultThreshold = 127;

// Name of the optional per-directory frame list that overrides directory order.
inline constexpr const char* kSequenceManifestName = "sequence.txt";

// 8-bit grayscale raster; intensities are normalised to 0..255 on load.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
};

namespace detail {

inline void skip_pnm_space(std::istream& in)
{
    for (;;) {
        const int ch = in.peek();
        if (ch == '#') {
            std::string line;
            std::getline(in, line);
        } else if (ch != EOF && std::isspace(ch)) {
            in.get();
        } else {
            return;
        }
    }
}

inline long read_pnm_int(std::istream& in, const std::string& path)
{
    skip_pnm_space(in);
    long v = -1;
    if (!(in >> v) || v < 0)
        throw Error(ErrorCode::format, "malformed PGM header in " + path);
    return v;
}

inline GrayImage read_pgm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::io, "cannot open " + path.string());
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '5'))
        throw Error(ErrorCode::format, path.string() + " is not a P2/P5 PGM");
    const long w = read_pnm_int(in, path.string());
    const long h = read_pnm_int(in, path.string());
    const long maxval = read_pnm_int(in, path.string());
    if (w == 0 || h == 0)
        throw Error(ErrorCode::format, "zero-size image " + path.string());
    if (maxval == 0 || maxval > 65535)
        throw Error(ErrorCode::format, "bad PGM maxval in " + path.string());

    GrayImage img{static_cast<int>(w), static_cast<int>(h), {}};
    const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    img.pixels.resize(n);
    auto scale = [maxval](long v) {
        return static_cast<std::uint8_t>(std::min<long>(255, (v * 255 + maxval / 2) / maxval));
    };
    if (magic[1] == '2') {
        for (std::size_t i = 0; i < n; ++i)
            img.pixels[i] = scale(read_pnm_int(in, path.string()));
    } else {
        in.get(); // single whitespace after maxval
        const std::size_t bytes_per = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> raw(n * bytes_per);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (static_cast<std::size_t>(in.gcount()) != raw.size())
            throw Error(ErrorCode::format, "truncated PGM data in " + path.string());
        for (std::size_t i = 0; i < n; ++i) {
            const long v = bytes_per == 2 ? (long(raw[2 * i]) << 8) | long(raw[2 * i + 1]) : long(raw[i]);
            img.pixels[i] = scale(v);
        }
    }
    return img;
}

inline GrayImage read_png(const std::filesystem::path& path)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str()))
        throw Error(ErrorCode::io, "cannot read PNG " + path.string() + ": " + image.message);
    if (image.width == 0 || image.height == 0) {
        png_image_free(&image);
        throw Error(ErrorCode::format, "zero-size image " + path.string());
    }
    image.format = PNG_FORMAT_GRAY;
    GrayImage img{static_cast<int>(image.width), static_cast<int>(image.height), {}};
    img.pixels.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw Error(ErrorCode::format, "cannot decode PNG " + path.string() + ": " + msg);
    }
    return img;
}

inline std::string lower_extension(const std::filesystem::path& p)
{
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

} // namespace detail

inline bool is_frame_file(const std::filesystem::path& p)
{
    const std::string ext = detail::lower_extension(p);
    return ext == ".pgm" || ext == ".pnm" || ext == ".png";
}

inline GrayImage read_gray(const std::filesystem::path& path)
{
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec))
        throw Error(ErrorCode::io, "cannot open " + path.string());
    return detail::lower_extension(path) == ".png" ? detail::read_png(path) : detail::read_pgm(path);
}

inline SilhouetteMask binarize(const GrayImage& img, int threshold = kDefaultThreshold)
{
    if (threshold < 0 || threshold > 255)
        throw Error(ErrorCode::parameter, "threshold must lie in [0,255]");
    std::vector<std::uint8_t> px(img.pixels.size());
    std::transform(img.pixels.begin(), img.pixels.end(), px.begin(),
                   [threshold](std::uint8_t v) { return static_cast<std::uint8_t>(v > threshold); });
    return SilhouetteMask(img.width, img.height, std::move(px));
}

inline SilhouetteMask load_mask(const std::filesystem::path& path, int threshold = kDefaultThreshold)
{
    return binarize(read_gray(path), threshold);
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::io, "cannot write " + path.string());
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out)
        throw Error(ErrorCode::io, "short write to " + path.string());
}

// Writes the mask as 0/255 P5.
inline void write_pgm(const std::filesystem::path& path, const SilhouetteMask& mask)
{
    GrayImage img{mask.width(), mask.height(), {}};
    img.pixels.reserve(mask.pixels().size());
    for (auto p : mask.pixels())
        img.pixels.push_back(p != 0 ? 255 : 0);
    write_pgm(path, img);
}

// Frame files of one sequence, in playback order: the lines of sequence.txt
// when present, otherwise all frame images sorted by file name.
inline std::vector<std::filesystem::path> list_sequence(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        throw Error(ErrorCode::io, "not a directory: " + dir.string());

    std::vector<fs::path> frames;
    const fs::path manifest = dir / kSequenceManifestName;
    if (fs::is_regular_file(manifest, ec)) {
        std::ifstream in(manifest);
        std::string line;
        while (std::getline(in, line)) {
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#')
                continue;
            const auto last = line.find_last_not_of(" \t\r");
            frames.push_back(dir / line.substr(first, last - first + 1));
        }
        return frames;
    }
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && is_frame_file(entry.path()))
            frames.push_back(entry.path());
    std::sort(frames.begin(), frames.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    return frames;
}

} // namespace silhar
