#pragma once

// End-to-end sequence processing: load frames, sanitize, extract feature rows
// in parallel, carry missing parts forward, cut action intervals and classify
// each one.

#include "silhar/config.hpp"
#include "silhar/error.hpp"
#include "silhar/features.hpp"
#include "silhar/image_io.hpp"
#include "silhar/mask.hpp"
#include "silhar/rac.hpp"
#include "silhar/stbpm.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace silhar {

// Runs fn(i) for i in [0, n) on `threads` workers (1 = inline).
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn)
{
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < std::min(workers, n); ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load())
                    return;
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true))
                        failure = std::current_exception();
                    return;
                }
            }
        });
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

struct FrameStatus {
    bool ok = false;
    ErrorCode error = ErrorCode::empty_silhouette; // meaningful when !ok
    std::string message;
};

struct SequenceFeatures {
    std::vector<FeatureRow> rows;        // one per usable frame, in order
    std::vector<FrameStatus> status;     // one per input frame
    CarryForwardStats carried;

    int total_frames() const noexcept { return static_cast<int>(status.size()); }
    int skipped_frames() const noexcept { return total_frames() - static_cast<int>(rows.size()); }
    int empty_frames() const noexcept
    {
        return static_cast<int>(std::count_if(status.begin(), status.end(), [](const FrameStatus& s) {
            return !s.ok && s.error == ErrorCode::empty_silhouette;
        }));
    }
};

// Sanitizes one mask (largest 4-connected component) and extracts its row.
inline std::optional<FeatureRow> process_mask(const SilhouetteMask& mask, const Config& cfg, int frame,
                                              FrameStatus& status)
{
    try {
        const SilhouetteMask clean = largest_component(mask);
        if (clean.empty()) {
            status = {false, ErrorCode::empty_silhouette, "empty silhouette"};
            return std::nullopt;
        }
        FeatureRow row = spatial_feature_row(clean, cfg, frame);
        status = {true, ErrorCode::empty_silhouette, {}};
        return row;
    } catch (const Error& e) {
        status = {false, e.code(), e.what()};
        return std::nullopt;
    }
}

namespace detail {

inline SequenceFeatures assemble(std::vector<std::optional<FeatureRow>>&& rows, std::vector<FrameStatus>&& status)
{
    SequenceFeatures out;
    out.status = std::move(status);
    for (auto& r : rows)
        if (r)
            out.rows.push_back(std::move(*r));
    out.carried = carry_forward(out.rows);
    return out;
}

} // namespace detail

inline SequenceFeatures extract_features(std::span<const SilhouetteMask> masks, const Config& cfg = {},
                                         int threads = 1)
{
    std::vector<std::optional<FeatureRow>> rows(masks.size());
    std::vector<FrameStatus> status(masks.size());
    parallel_for(masks.size(), threads, [&](std::size_t i) {
        rows[i] = process_mask(masks[i], cfg, static_cast<int>(i), status[i]);
    });
    return detail::assemble(std::move(rows), std::move(status));
}

// Loads and extracts a frame directory; unreadable frames are skipped and
// reported in the status list.
inline SequenceFeatures extract_directory(const std::filesystem::path& dir, const Config& cfg = {}, int threads = 1)
{
    const auto files = list_sequence(dir);
    std::vector<std::optional<FeatureRow>> rows(files.size());
    std::vector<FrameStatus> status(files.size());
    parallel_for(files.size(), threads, [&](std::size_t i) {
        try {
            const SilhouetteMask mask = load_mask(files[i], cfg.threshold);
            rows[i] = process_mask(mask, cfg, static_cast<int>(i), status[i]);
        } catch (const Error& e) {
            status[i] = {false, e.code(), e.what()};
        }
    });
    return detail::assemble(std::move(rows), std::move(status));
}

struct IntervalResult {
    int first_frame = 0;
    int last_frame = 0;
    StbpmVector stbpm;
    AuActivity activity;
    ClassificationResult result;
};

struct SequenceResult {
    std::vector<IntervalResult> intervals;
    std::string label = std::string(kUnknownLabel);
    int md = 0; // majority direction over the intervals that carry the label
};

inline IntervalResult classify_interval(const ActionInterval& interval, const KnowledgeBase& kb,
                                        const Config& cfg = {})
{
    IntervalResult ir;
    ir.first_frame = interval.rows.front().frame;
    ir.last_frame = interval.rows.back().frame;
    ir.stbpm = aggregate(interval, cfg);
    ir.activity = au_activity(ir.stbpm, cfg);
    ir.result = classify(ir.activity, kb);
    return ir;
}

// Majority label over intervals; ties go to the label of the most specific
// winning rule, then the lowest priority value.
inline std::string majority_label(std::span<const IntervalResult> intervals, const KnowledgeBase& kb)
{
    std::map<int, int> votes; // winner rule index (-1 unknown) -> count
    for (const auto& ir : intervals)
        ++votes[ir.result.winner];
    int best = -1, best_count = -1;
    for (const auto& [winner, count] : votes) {
        bool better = count > best_count;
        if (count == best_count) {
            const auto spec = [&](int w) { return w < 0 ? -1 : kb.rules[static_cast<std::size_t>(w)].specificity(); };
            const auto prio = [&](int w) {
                return w < 0 ? std::numeric_limits<int>::max() : kb.rules[static_cast<std::size_t>(w)].priority;
            };
            better = spec(winner) > spec(best) || (spec(winner) == spec(best) && prio(winner) < prio(best));
        }
        if (better) {
            best = winner;
            best_count = count;
        }
    }
    return best < 0 ? std::string(kUnknownLabel) : kb.rules[static_cast<std::size_t>(best)].action;
}

inline SequenceResult classify_rows(std::span<const FeatureRow> rows, const KnowledgeBase& kb, const Config& cfg = {})
{
    SequenceResult out;
    for (const auto& interval : segment_intervals(rows, cfg.interval_length(), cfg.fps)) {
        try {
            out.intervals.push_back(classify_interval(interval, kb, cfg));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::degenerate_interval && e.code() != ErrorCode::md_undefined)
                throw;
        }
    }
    if (out.intervals.empty())
        return out;
    out.label = majority_label(out.intervals, kb);
    int sum = 0;
    for (const auto& ir : out.intervals)
        if (ir.result.label(kb) == out.label)
            sum += ir.activity.md;
    out.md = (sum > 0) - (sum < 0);
    return out;
}

} // namespace silhar
