#pragma once

// Corpus loading, end-to-end evaluation, confusion matrices and the
// moving-direction error rate.

#include "silhar/pipeline.hpp"
#include "silhar/synth.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace silhar::eval {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Labels

struct TrueLabel {
    std::string action;  // knowledge-base vocabulary where a mapping exists
    int direction = 0;   // -1 / +1 for direction-pair classes
    bool directional = false;
    bool excluded = false;
};

namespace detail {

inline std::string squash(std::string_view s)
{
    std::string out;
    for (char c : s)
        if (std::isalnum(static_cast<unsigned char>(c)))
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline bool ends_with(std::string_view s, std::string_view tail)
{
    return s.size() >= tail.size() && s.substr(s.size() - tail.size()) == tail;
}

} // namespace detail

// Maps dataset labels onto the rule vocabulary. Weizmann wave1/wave2 are both
// Wave; MuHAVi LeftToRight/RightToLeft classes keep their direction so they
// are scored together with md. Unmapped labels pass through unchanged.
inline TrueLabel canonical_label(std::string_view raw)
{
    TrueLabel t;
    std::string key = detail::squash(raw);
    if (key == "bend" || key.starts_with("collapse") || key.starts_with("standup") || key.starts_with("shotgun")) {
        t.action = std::string(raw);
        t.excluded = true;
        return t;
    }
    if (detail::ends_with(key, "lefttoright")) {
        t.directional = true;
        t.direction = 1;
        key.resize(key.size() - 11);
    } else if (detail::ends_with(key, "righttoleft")) {
        t.directional = true;
        t.direction = -1;
        key.resize(key.size() - 11);
    }
    static const std::map<std::string, std::string, std::less<>> table = {
        {"stand", "Stand"},   {"standing", "Stand"}, {"walk", "Walk"},        {"walking", "Walk"},
        {"run", "Run"},       {"running", "Run"},    {"runstop", "Run"},      {"jump", "Jump"},
        {"jumping", "Jump"},  {"wave", "Wave"},      {"wave1", "Wave"},       {"wave2", "Wave"},
        {"waving", "Wave"},   {"punch", "Punch"},    {"punching", "Punch"},   {"punchright", "Punch"},
        {"guardtopunch", "Punch"}, {"kick", "Kick"}, {"kicking", "Kick"},     {"kickright", "Kick"},
        {"guardtokick", "Kick"},   {"turnback", "Turn back"}, {"turnbackleft", "Turn back"},
        {"turnbackright", "Turn back"}, {"walkturnback", "Turn back"},
    };
    const auto it = table.find(key);
    t.action = it != table.end() ? it->second : std::string(raw);
    return t;
}

inline std::string direction_suffix(int d) { return d > 0 ? " L2R" : d < 0 ? " R2L" : " ?"; }

inline std::string scored_true(const TrueLabel& t)
{
    return t.directional ? t.action + direction_suffix(t.direction) : t.action;
}

inline std::string scored_prediction(const std::string& label, int md, bool directional)
{
    return directional && label != kUnknownLabel ? label + direction_suffix(md) : label;
}

// ---------------------------------------------------------------------------
// Corpus

struct LabeledSequence {
    std::string id;
    fs::path dir;
    std::string raw_label;
    TrueLabel truth;
    std::string actor;
    std::string camera;
    std::vector<SilhouetteMask> masks; // usable frames in order
    int total_frames = 0;
    int bad_frames = 0;
};

struct Corpus {
    std::vector<LabeledSequence> sequences;
    std::vector<std::string> warnings;
    int excluded = 0;     // entries removed by the label filter
    int dropped = 0;
    int dropped_empty = 0; // of which mostly empty silhouettes
};

struct ManifestEntry {
    std::string id;
    std::string label;
    fs::path dir;
    std::string actor;
    std::string camera;
};

// `<id> <label> <dir>` per line; the label may contain spaces, relative dirs
// are resolved against the manifest's directory, '#' starts a comment.
inline std::vector<ManifestEntry> read_manifest(const fs::path& manifest)
{
    std::ifstream in(manifest);
    if (!in)
        throw Error(ErrorCode::io, "cannot open manifest " + manifest.string());
    std::vector<ManifestEntry> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream ss(line);
        std::vector<std::string> tok;
        for (std::string t; ss >> t;)
            tok.push_back(t);
        if (tok.empty())
            continue;
        if (tok.size() < 3)
            throw Error(ErrorCode::parse, manifest.string() + ":" + std::to_string(lineno) +
                                              ": expected '<id> <label> <dir>'");
        ManifestEntry e;
        e.id = tok.front();
        for (std::size_t i = 1; i + 1 < tok.size(); ++i)
            e.label += (i > 1 ? " " : "") + tok[i];
        e.dir = tok.back();
        if (e.dir.is_relative())
            e.dir = manifest.parent_path() / e.dir;
        out.push_back(std::move(e));
    }
    return out;
}

inline void write_manifest(std::ostream& out, const std::vector<ManifestEntry>& entries)
{
    for (const auto& e : entries)
        out << e.id << ' ' << e.label << ' ' << e.dir.generic_string() << '\n';
}

enum class Layout { weizmann, muhavi };

// Builds manifest entries from a directory tree. Weizmann: leaf directories
// named <actor>_<action>. MuHAVi: <Action>/<Person>/<Camera> leaves.
inline std::vector<ManifestEntry> scan_tree(const fs::path& root, Layout layout)
{
    std::vector<ManifestEntry> out;
    if (!fs::is_directory(root))
        throw Error(ErrorCode::io, "not a directory: " + root.string());
    for (const auto& de : fs::recursive_directory_iterator(root)) {
        if (!de.is_directory())
            continue;
        bool has_frames = false;
        for (const auto& f : fs::directory_iterator(de.path()))
            if (f.is_regular_file() && is_frame_file(f.path())) {
                has_frames = true;
                break;
            }
        if (!has_frames)
            continue;
        const fs::path rel = fs::relative(de.path(), root);
        std::vector<std::string> parts;
        for (const auto& p : rel)
            parts.push_back(p.string());
        ManifestEntry e;
        e.dir = de.path();
        if (layout == Layout::weizmann) {
            const std::string leaf = parts.back();
            const auto us = leaf.find('_');
            if (us == std::string::npos)
                continue;
            e.actor = leaf.substr(0, us);
            e.label = leaf.substr(us + 1);
            e.id = leaf;
        } else {
            if (parts.size() < 3)
                continue;
            e.label = parts[0];
            e.actor = parts[1];
            e.camera = parts[2];
            e.id = parts[0] + "_" + parts[1] + "_" + parts[2];
        }
        out.push_back(std::move(e));
    }
    std::sort(out.begin(), out.end(), [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; });
    return out;
}

inline constexpr double kMaxBadFrameFraction = 0.20;

// Reads every sequence's frames. Unreadable and empty frames are removed; a
// sequence loses more than 20% of its frames, or keeps fewer than k, is
// dropped with a warning. Missing directories are per-entry warnings too.
inline Corpus load_corpus(const std::vector<ManifestEntry>& entries, const Config& cfg = {})
{
    Corpus corpus;
    for (const auto& e : entries) {
        LabeledSequence seq;
        seq.id = e.id;
        seq.dir = e.dir;
        seq.raw_label = e.label;
        seq.truth = canonical_label(e.label);
        seq.actor = e.actor;
        seq.camera = e.camera;
        if (seq.truth.excluded) {
            ++corpus.excluded;
            continue;
        }
        std::vector<fs::path> files;
        try {
            files = list_sequence(e.dir);
        } catch (const Error& err) {
            corpus.warnings.push_back(e.id + ": " + err.what());
            ++corpus.dropped;
            continue;
        }
        int empty = 0;
        for (const auto& f : files) {
            ++seq.total_frames;
            try {
                SilhouetteMask m = load_mask(f, cfg.threshold);
                if (m.foreground_count() == 0) {
                    ++empty;
                    ++seq.bad_frames;
                    continue;
                }
                seq.masks.push_back(std::move(m));
            } catch (const Error&) {
                ++seq.bad_frames;
            }
        }
        const bool too_many_bad = seq.bad_frames > kMaxBadFrameFraction * seq.total_frames;
        if (seq.total_frames == 0 || too_many_bad || static_cast<int>(seq.masks.size()) < cfg.interval_length()) {
            std::ostringstream w;
            w << e.id << ": dropped (" << seq.bad_frames << " of " << seq.total_frames << " frames unusable, "
              << seq.masks.size() << " usable, need " << cfg.interval_length() << ")";
            corpus.warnings.push_back(w.str());
            ++corpus.dropped;
            if (seq.total_frames > 0 && 2 * empty > seq.total_frames)
                ++corpus.dropped_empty;
            continue;
        }
        corpus.sequences.push_back(std::move(seq));
    }
    return corpus;
}

inline Corpus load_corpus(const fs::path& manifest, const Config& cfg = {})
{
    return load_corpus(read_manifest(manifest), cfg);
}

// ---------------------------------------------------------------------------
// Confusion matrix

class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::vector<std::string> labels)
        : labels_(std::move(labels)), counts_(labels_.size() * labels_.size(), 0)
    {
    }

    const std::vector<std::string>& labels() const noexcept { return labels_; }
    std::size_t size() const noexcept { return labels_.size(); }

    int index_of(std::string_view label) const
    {
        const auto it = std::find(labels_.begin(), labels_.end(), label);
        return it == labels_.end() ? -1 : static_cast<int>(it - labels_.begin());
    }

    // Unseen labels are appended, so partial matrices may differ in shape.
    void add(const std::string& truth, const std::string& predicted, long n = 1)
    {
        const std::size_t t = ensure(truth), p = ensure(predicted);
        counts_[t * size() + p] += n;
    }

    long at(std::size_t truth, std::size_t predicted) const { return counts_[truth * size() + predicted]; }
    long at(std::string_view truth, std::string_view predicted) const
    {
        const int t = index_of(truth), p = index_of(predicted);
        return t < 0 || p < 0 ? 0 : at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
    }

    long row_sum(std::size_t truth) const
    {
        long s = 0;
        for (std::size_t p = 0; p < size(); ++p)
            s += at(truth, p);
        return s;
    }
    long total() const
    {
        long s = 0;
        for (long c : counts_)
            s += c;
        return s;
    }
    long trace() const
    {
        long s = 0;
        for (std::size_t i = 0; i < size(); ++i)
            s += at(i, i);
        return s;
    }
    double accuracy() const { return total() > 0 ? double(trace()) / double(total()) : 0.0; }

    // Associative and commutative: counts are added label by label.
    void merge(const ConfusionMatrix& other)
    {
        for (std::size_t t = 0; t < other.size(); ++t)
            for (std::size_t p = 0; p < other.size(); ++p)
                if (const long c = other.at(t, p))
                    add(other.labels_[t], other.labels_[p], c);
    }

    // Same counts under a new label order; labels missing from `order` keep
    // their relative order at the end.
    ConfusionMatrix reordered(const std::vector<std::string>& order) const
    {
        std::vector<std::string> labels;
        for (const auto& l : order)
            if (index_of(l) >= 0 && std::find(labels.begin(), labels.end(), l) == labels.end())
                labels.push_back(l);
        for (const auto& l : labels_)
            if (std::find(labels.begin(), labels.end(), l) == labels.end())
                labels.push_back(l);
        ConfusionMatrix out(labels);
        for (std::size_t t = 0; t < size(); ++t)
            for (std::size_t p = 0; p < size(); ++p)
                if (const long c = at(t, p))
                    out.counts_[static_cast<std::size_t>(out.index_of(labels_[t])) * out.size() +
                                static_cast<std::size_t>(out.index_of(labels_[p]))] += c;
        return out;
    }

    void write_csv(std::ostream& out) const
    {
        out << "true\\predicted";
        for (const auto& l : labels_)
            out << ',' << l;
        out << '\n';
        for (std::size_t t = 0; t < size(); ++t) {
            out << labels_[t];
            for (std::size_t p = 0; p < size(); ++p)
                out << ',' << at(t, p);
            out << '\n';
        }
    }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t ensure(const std::string& label)
    {
        if (const int i = index_of(label); i >= 0)
            return static_cast<std::size_t>(i);
        const std::size_t n = size();
        std::vector<long> grown((n + 1) * (n + 1), 0);
        for (std::size_t t = 0; t < n; ++t)
            for (std::size_t p = 0; p < n; ++p)
                grown[t * (n + 1) + p] = counts_[t * n + p];
        counts_ = std::move(grown);
        labels_.push_back(label);
        return n;
    }

    std::vector<std::string> labels_;
    std::vector<long> counts_;
};

// ---------------------------------------------------------------------------
// Evaluation

struct SequenceRecord {
    std::string id;
    std::string truth;     // scored form
    std::string predicted; // scored form
    std::string label;     // rule label before direction scoring
    int md = 0;
    int frames = 0;
    int usable_frames = 0;
    std::vector<std::string> interval_labels;
    bool correct() const { return truth == predicted; }
};

struct EvalReport {
    ConfusionMatrix matrix;
    double accuracy = 0.0;
    std::vector<SequenceRecord> records; // corpus order
};

inline SequenceRecord evaluate_sequence(const LabeledSequence& seq, const KnowledgeBase& kb, const Config& cfg)
{
    SequenceRecord rec;
    rec.id = seq.id;
    rec.truth = scored_true(seq.truth);
    rec.frames = seq.total_frames;
    const SequenceFeatures feats = extract_features(seq.masks, cfg, 1);
    rec.usable_frames = static_cast<int>(feats.rows.size());
    const SequenceResult res = classify_rows(feats.rows, kb, cfg);
    rec.label = res.label;
    rec.md = res.md;
    rec.predicted = scored_prediction(res.label, res.md, seq.truth.directional);
    for (const auto& ir : res.intervals)
        rec.interval_labels.emplace_back(ir.result.label(kb));
    return rec;
}

// Label order for reports: rule order, then other true labels, UNKNOWN last.
inline std::vector<std::string> report_order(const KnowledgeBase& kb, const ConfusionMatrix& m)
{
    std::vector<std::string> order;
    for (const auto& r : kb.rules) {
        order.push_back(r.action);
        for (int d : {1, -1})
            order.push_back(r.action + direction_suffix(d));
    }
    std::vector<std::string> rest;
    for (const auto& l : m.labels())
        if (std::find(order.begin(), order.end(), l) == order.end() && l != kUnknownLabel)
            rest.push_back(l);
    std::sort(rest.begin(), rest.end());
    order.insert(order.end(), rest.begin(), rest.end());
    order.emplace_back(kUnknownLabel);
    return order;
}

// Sequences are split into contiguous blocks, one per worker; each worker
// fills its own partial matrix and the partials are merged at the end.
inline EvalReport run_eval(const Corpus& corpus, const KnowledgeBase& kb, const Config& cfg = {}, int threads = 1)
{
    if (corpus.sequences.empty())
        throw Error(ErrorCode::parameter, "corpus holds no usable sequence");
    const std::size_t n = corpus.sequences.size();
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
    EvalReport report;
    report.records.resize(n);
    std::vector<ConfusionMatrix> partial(workers);
    parallel_for(workers, static_cast<int>(workers), [&](std::size_t w) {
        const std::size_t lo = n * w / workers, hi = n * (w + 1) / workers;
        for (std::size_t i = lo; i < hi; ++i) {
            report.records[i] = evaluate_sequence(corpus.sequences[i], kb, cfg);
            partial[w].add(report.records[i].truth, report.records[i].predicted);
        }
    });
    ConfusionMatrix merged;
    for (const auto& p : partial)
        merged.merge(p);
    merged.add(std::string(kUnknownLabel), std::string(kUnknownLabel), 0); // always a column
    report.matrix = merged.reordered(report_order(kb, merged));
    report.accuracy = report.matrix.accuracy();
    return report;
}

inline nlohmann::json record_json(const SequenceRecord& r)
{
    return {{"id", r.id},           {"truth", r.truth},       {"predicted", r.predicted},
            {"label", r.label},     {"md", r.md},             {"frames", r.frames},
            {"usable_frames", r.usable_frames}, {"intervals", r.interval_labels}, {"correct", r.correct()}};
}

inline void write_summary(std::ostream& out, const EvalReport& rep, const Corpus& corpus)
{
    out << "sequences: " << rep.records.size() << "  dropped: " << corpus.dropped << "  excluded: " << corpus.excluded
        << '\n';
    out << "accuracy: " << std::fixed << std::setprecision(4) << rep.accuracy << " (" << rep.matrix.trace() << '/'
        << rep.matrix.total() << ")\n";
    for (std::size_t t = 0; t < rep.matrix.size(); ++t) {
        const long rs = rep.matrix.row_sum(t);
        if (rs == 0)
            continue;
        out << "  " << std::left << std::setw(14) << rep.matrix.labels()[t] << std::right << std::setw(5)
            << rep.matrix.at(t, t) << '/' << rs << '\n';
    }
    out.unsetf(std::ios::floatfield);
}

// ---------------------------------------------------------------------------
// Moving direction against ground truth

// A feature row holding only what moving_direction reads, filled from the
// renderer's ground truth.
inline FeatureRow truth_row(const synth::GroundTruth& gt)
{
    FeatureRow r;
    r.frame = gt.frame;
    r.set(Col::xg_cnt, gt.centroid.x);
    r.set(Col::dy, gt.height - 1.0);
    r.set(Col::ha, gt.ha);
    const Col hx[2] = {Col::xhl1, Col::xhl2};
    const Col tx[2] = {Col::xt1, Col::xt2};
    for (std::size_t i = 0; i < std::min<std::size_t>(2, gt.footprints.size()); ++i) {
        r.set(hx[i], gt.footprints[i].heel.x);
        r.set(tx[i], gt.footprints[i].toe.x);
    }
    return r;
}

// md of the trailing window of up to k rows ending at each row (the first
// row has no window and gets no entry).
inline std::vector<int> sliding_md(std::span<const FeatureRow> rows, int k, const Config& cfg)
{
    std::vector<int> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::size_t lo = i + 1 >= static_cast<std::size_t>(k) ? i + 1 - static_cast<std::size_t>(k) : 0;
        out.push_back(moving_direction(rows.subspan(lo, i - lo + 1), cfg));
    }
    return out;
}

struct MdSequence {
    std::vector<SilhouetteMask> masks;
    std::vector<synth::GroundTruth> truth;
};

struct MdScore {
    long frames = 0;
    long wrong = 0;
    double rate() const { return frames > 0 ? 100.0 * double(wrong) / double(frames) : 0.0; }
};

// Per-frame md from the detected rows against md from the ground-truth rows,
// both over the same trailing windows. Frames dropped by extraction count
// as wrong.
inline MdScore md_misclassification(std::span<const MdSequence> corpus, const Config& cfg = {})
{
    MdScore score;
    for (const auto& seq : corpus) {
        if (seq.truth.size() != seq.masks.size() || seq.truth.empty())
            throw Error(ErrorCode::metric_unavailable, "sequence without per-frame ground truth");
        std::vector<FeatureRow> truth_rows;
        for (const auto& gt : seq.truth)
            truth_rows.push_back(truth_row(gt));
        for (std::size_t i = 0; i < truth_rows.size(); ++i)
            truth_rows[i].frame = static_cast<int>(i);
        const SequenceFeatures feats = extract_features(seq.masks, cfg, 1);
        const int k = cfg.interval_length();
        const std::vector<int> want = sliding_md(truth_rows, k, cfg);
        const std::vector<int> got = sliding_md(feats.rows, k, cfg);
        std::map<int, int> got_at; // frame -> md
        for (std::size_t i = 1; i < feats.rows.size(); ++i)
            got_at[feats.rows[i].frame] = got[i - 1];
        for (std::size_t i = 1; i < truth_rows.size(); ++i) {
            ++score.frames;
            const auto it = got_at.find(static_cast<int>(i));
            if (it == got_at.end() || it->second != want[i - 1])
                ++score.wrong;
        }
    }
    return score;
}

inline MdSequence reversed(const MdSequence& s)
{
    MdSequence r{{s.masks.rbegin(), s.masks.rend()}, {s.truth.rbegin(), s.truth.rend()}};
    for (std::size_t i = 0; i < r.truth.size(); ++i)
        r.truth[i].frame = static_cast<int>(i);
    return r;
}

// Intervals whose body travels (dynamic md) must report the opposite sign
// when their frames are replayed backwards. Returns the number checked and
// the number that failed.
struct ReversalCheck {
    int dynamic_intervals = 0;
    int violations = 0;
};

inline ReversalCheck md_time_reversal(std::span<const FeatureRow> rows, const Config& cfg = {})
{
    ReversalCheck out;
    for (const auto& iv : segment_intervals(rows, cfg.interval_length(), cfg.fps)) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& r : iv.rows)
            if (r.has(Col::xg_cnt)) {
                lo = std::min(lo, r[Col::xg_cnt]);
                hi = std::max(hi, r[Col::xg_cnt]);
            }
        if (!(hi - lo > cfg.static_bmc_frac * silhar::detail::mean_height(iv.rows)))
            continue;
        ++out.dynamic_intervals;
        std::vector<FeatureRow> back(iv.rows.rbegin(), iv.rows.rend());
        if (moving_direction(back, cfg) != -moving_direction(iv.rows, cfg))
            ++out.violations;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Localization against ground truth

struct LocalizationScore {
    int frames = 0;
    int head_ok = 0;
    int feet_frames = 0; // frames with at least one ground-truth contact foot
    int feet_ok = 0;
    double head_rate() const { return frames > 0 ? double(head_ok) / frames : 0.0; }
    double feet_rate() const { return feet_frames > 0 ? double(feet_ok) / feet_frames : 1.0; }
};

// Head: detected head centroid within tol*H of the true head center. Feet: every
// true footprint has a detected leg whose heel and toe both lie within tol*H
// of the footprint's heel and toe.
inline LocalizationScore score_localization(std::span<const SilhouetteMask> masks,
                                            std::span<const synth::GroundTruth> truth, const Config& cfg = {},
                                            double tol_frac = 0.05)
{
    LocalizationScore s;
    const auto dist = [](PointD a, PointD b) { return std::hypot(a.x - b.x, a.y - b.y); };
    for (std::size_t i = 0; i < masks.size() && i < truth.size(); ++i) {
        const auto& gt = truth[i];
        const double tol = tol_frac * gt.height;
        ++s.frames;
        const bool has_feet = !gt.footprints.empty();
        s.feet_frames += int(has_feet);
        FrameAnalysis fa;
        try {
            fa = analyze_frame(largest_component(masks[i]), cfg);
        } catch (const Error&) {
            continue;
        }
        if (fa.head && dist(fa.head->center, gt.head_center) <= tol)
            ++s.head_ok;
        if (!has_feet || !fa.legs)
            continue;
        bool all = true;
        for (const auto& fp : gt.footprints) {
            bool found = false;
            for (const auto* leg : {&fa.legs->leg1, &fa.legs->leg2})
                if (*leg && dist((*leg)->heel, fp.heel) <= tol && dist((*leg)->toe, fp.toe) <= tol)
                    found = true;
            all = all && found;
        }
        s.feet_ok += int(all);
    }
    return s;
}

} // namespace silhar::eval
