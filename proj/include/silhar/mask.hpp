#pragma once

#include "silhar/error.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace silhar {

// Marks a row or column without any foreground pixel.
inline constexpr int kNone = -1;

// Binary silhouette frame, row-major, 0 = background, 1 = foreground.
class SilhouetteMask {
public:
    SilhouetteMask(int width, int height) : SilhouetteMask(width, height, {}) {}

    SilhouetteMask(int width, int height, std::vector<std::uint8_t> pixels)
        : width_(width), height_(height), pixels_(std::move(pixels))
    {
        if (width_ < 1 || height_ < 1)
            throw Error(ErrorCode::format, "mask dimensions must be at least 1x1");
        const auto n = static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
        if (pixels_.empty())
            pixels_.assign(n, 0);
        if (pixels_.size() != n)
            throw Error(ErrorCode::format, "pixel buffer does not match mask dimensions");
        if (std::any_of(pixels_.begin(), pixels_.end(), [](std::uint8_t p) { return p > 1; }))
            throw Error(ErrorCode::format, "mask pixels must be 0 or 1");
    }

    // Test/fixture helper: one string per row, '1' or '#' is foreground.
    static SilhouetteMask from_ascii(std::span<const std::string_view> rows)
    {
        if (rows.empty())
            throw Error(ErrorCode::format, "ascii mask has no rows");
        const int w = static_cast<int>(rows.front().size());
        SilhouetteMask m(w, static_cast<int>(rows.size()));
        for (int r = 0; r < m.height_; ++r) {
            if (static_cast<int>(rows[static_cast<std::size_t>(r)].size()) != w)
                throw Error(ErrorCode::format, "ascii mask rows differ in length");
            for (int c = 0; c < w; ++c) {
                const char ch = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
                m.set(r, c, ch == '1' || ch == '#');
            }
        }
        return m;
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    std::uint8_t at(int row, int col) const noexcept
    {
        return pixels_[static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
                       static_cast<std::size_t>(col)];
    }

    void set(int row, int col, bool on) noexcept
    {
        pixels_[static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(col)] = on ? 1 : 0;
    }

    bool contains(int row, int col) const noexcept
    {
        return row >= 0 && col >= 0 && row < height_ && col < width_;
    }

    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }

    std::span<const std::uint8_t> row(int r) const noexcept
    {
        return std::span<const std::uint8_t>(pixels_).subspan(
            static_cast<std::size_t>(r) * static_cast<std::size_t>(width_),
            static_cast<std::size_t>(width_));
    }

    std::size_t foreground_count() const noexcept
    {
        return static_cast<std::size_t>(std::count(pixels_.begin(), pixels_.end(), 1));
    }

    // An all-background mask is a valid value; callers skip such frames.
    bool empty() const noexcept
    {
        return std::find(pixels_.begin(), pixels_.end(), 1) == pixels_.end();
    }

    friend bool operator==(const SilhouetteMask&, const SilhouetteMask&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

// Per-row and per-column foreground extremes.
struct BoundaryVectors {
    std::vector<int> x1; // first foreground column of each row
    std::vector<int> x2; // last foreground column of each row
    std::vector<int> y1; // first foreground row of each column
    std::vector<int> y2; // last foreground row of each column

    friend bool operator==(const BoundaryVectors&, const BoundaryVectors&) = default;
};

// Keeps the 4-connected component with the most pixels. Components are
// discovered in raster order and a later one must be strictly larger to win,
// so ties go to the topmost-then-leftmost seed.
inline SilhouetteMask largest_component(const SilhouetteMask& mask)
{
    const int w = mask.width();
    const int h = mask.height();
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    std::vector<int> label(n, 0);
    std::vector<std::size_t> stack;
    const auto px = mask.pixels();

    int next_label = 0;
    int best_label = 0;
    std::size_t best_size = 0;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (px[seed] == 0 || label[seed] != 0)
            continue;
        ++next_label;
        std::size_t size = 0;
        stack.clear();
        stack.push_back(seed);
        label[seed] = next_label;
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            ++size;
            const std::size_t r = i / static_cast<std::size_t>(w);
            const std::size_t c = i % static_cast<std::size_t>(w);
            auto visit = [&](std::size_t j) {
                if (px[j] != 0 && label[j] == 0) {
                    label[j] = next_label;
                    stack.push_back(j);
                }
            };
            if (c > 0) visit(i - 1);
            if (c + 1 < static_cast<std::size_t>(w)) visit(i + 1);
            if (r > 0) visit(i - static_cast<std::size_t>(w));
            if (r + 1 < static_cast<std::size_t>(h)) visit(i + static_cast<std::size_t>(w));
        }
        if (size > best_size) {
            best_size = size;
            best_label = next_label;
        }
    }

    std::vector<std::uint8_t> out(n, 0);
    if (best_label != 0) {
        for (std::size_t i = 0; i < n; ++i)
            out[i] = label[i] == best_label ? 1 : 0;
    }
    return SilhouetteMask(w, h, std::move(out));
}

inline BoundaryVectors boundary_vectors(const SilhouetteMask& mask)
{
    const int w = mask.width();
    const int h = mask.height();
    BoundaryVectors bv{std::vector<int>(static_cast<std::size_t>(h), kNone),
                       std::vector<int>(static_cast<std::size_t>(h), kNone),
                       std::vector<int>(static_cast<std::size_t>(w), kNone),
                       std::vector<int>(static_cast<std::size_t>(w), kNone)};
    bool any = false;
    for (int r = 0; r < h; ++r) {
        const auto row = mask.row(r);
        for (int c = 0; c < w; ++c) {
            if (row[static_cast<std::size_t>(c)] == 0)
                continue;
            any = true;
            auto& first_c = bv.x1[static_cast<std::size_t>(r)];
            if (first_c == kNone)
                first_c = c;
            bv.x2[static_cast<std::size_t>(r)] = c;
            auto& first_r = bv.y1[static_cast<std::size_t>(c)];
            if (first_r == kNone)
                first_r = r;
            bv.y2[static_cast<std::size_t>(c)] = r;
        }
    }
    if (!any)
        throw Error(ErrorCode::empty_silhouette, "mask has no foreground");
    return bv;
}

// Geometric helpers used by the equivariance checks and the synthetic corpus.

inline SilhouetteMask mirrored(const SilhouetteMask& mask)
{
    SilhouetteMask out(mask.width(), mask.height());
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c)
            out.set(r, mask.width() - 1 - c, mask.at(r, c) != 0);
    return out;
}

// Places `mask` on a width x height canvas with its origin at (tx, ty);
// pixels falling outside the canvas are dropped.
inline SilhouetteMask placed(const SilhouetteMask& mask, int width, int height, int tx, int ty)
{
    SilhouetteMask out(width, height);
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c)
            if (mask.at(r, c) != 0 && out.contains(r + ty, c + tx))
                out.set(r + ty, c + tx, true);
    return out;
}

// Nearest-neighbour integer upscale: every pixel becomes a factor x factor block.
inline SilhouetteMask upscaled(const SilhouetteMask& mask, int factor)
{
    if (factor < 1)
        throw Error(ErrorCode::parameter, "scale factor must be >= 1");
    SilhouetteMask out(mask.width() * factor, mask.height() * factor);
    for (int r = 0; r < out.height(); ++r)
        for (int c = 0; c < out.width(); ++c)
            out.set(r, c, mask.at(r / factor, c / factor) != 0);
    return out;
}

} // namespace silhar
