// silhar: silhouette action recognition from the command line.
//
//   silhar extract  <frames>   -> per-frame feature CSV (or JSON lines)
//   silhar classify <frames>   -> interval and sequence labels as JSON
//   silhar eval     <manifest> -> confusion matrix, per-sequence JSONL, summary
//   silhar synth    --out dir  -> synthetic labelled corpus with manifest
//   silhar rules check <file>  -> validate a rule file
//
// Exit codes: 0 success, 2 input error, 3 input dominated by empty frames.

#include "silhar/silhar.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace silhar;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitEmpty = 3;

struct EmptyDominated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config_path;
    std::string rules_path;
    int fps = 0;
    int k = 0;
    int threads = 1;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool rules)
{
    cmd->add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--fps", c.fps, "frame rate (default from config, 25)")->check(CLI::PositiveNumber);
    cmd->add_option("--k", c.k, "action interval in frames (default = fps)")->check(CLI::Range(2, 100000));
    cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::Range(1, 1024));
    cmd->add_option("--out", c.out, "output directory (default: stdout)");
    if (rules)
        cmd->add_option("--rules", c.rules_path, "rule file (default: built-in set)")->check(CLI::ExistingFile);
}

Config make_config(const Common& c)
{
    Config cfg = c.config_path.empty() ? Config{} : load_config(c.config_path);
    if (c.fps > 0)
        cfg.fps = c.fps;
    if (c.k > 0)
        cfg.k_override = c.k;
    cfg.validate();
    return cfg;
}

KnowledgeBase make_kb(const Common& c) { return c.rules_path.empty() ? default_kb() : load_kb(c.rules_path); }

// Writes to --out/<name> when an output directory was given, else stdout.
template <class Fn>
void emit(const Common& c, const std::string& name, Fn&& write)
{
    if (c.out.empty()) {
        write(std::cout);
        return;
    }
    fs::create_directories(c.out);
    const fs::path p = fs::path(c.out) / name;
    std::ofstream f(p);
    if (!f)
        throw Error(ErrorCode::io, "cannot write " + p.string());
    write(f);
    std::cerr << "wrote " << p.string() << '\n';
}

SequenceFeatures extract_checked(const std::string& dir, const Config& cfg, int threads)
{
    SequenceFeatures feats = extract_directory(dir, cfg, threads);
    for (std::size_t i = 0; i < feats.status.size(); ++i)
        if (!feats.status[i].ok)
            std::cerr << "frame " << i << " skipped: " << feats.status[i].message << '\n';
    if (feats.rows.empty()) {
        if (2 * feats.empty_frames() > feats.total_frames())
            throw EmptyDominated("no usable frame in " + dir + " (empty silhouettes)");
        throw Error(ErrorCode::format, "no usable frame in " + dir);
    }
    if (2 * feats.empty_frames() > feats.total_frames())
        throw EmptyDominated(std::to_string(feats.empty_frames()) + " of " + std::to_string(feats.total_frames()) +
                             " frames are empty in " + dir);
    return feats;
}

int run_extract(const std::string& dir, const std::string& format, const Common& c)
{
    const Config cfg = make_config(c);
    const SequenceFeatures feats = extract_checked(dir, cfg, c.threads);
    if (format == "jsonl")
        emit(c, "features.jsonl", [&](std::ostream& o) { write_feature_jsonl(o, feats.rows); });
    else
        emit(c, "features.csv", [&](std::ostream& o) { write_feature_csv(o, feats.rows); });
    std::cerr << feats.rows.size() << " of " << feats.total_frames() << " frames, head carried "
              << feats.carried.head_carried << ", legs carried " << feats.carried.legs_carried << '\n';
    return 0;
}

int run_classify(const std::string& dir, bool with_stbpm, const Common& c)
{
    const Config cfg = make_config(c);
    const KnowledgeBase kb = make_kb(c);
    const SequenceFeatures feats = extract_checked(dir, cfg, c.threads);
    const SequenceResult res = classify_rows(feats.rows, kb, cfg);

    nlohmann::json j;
    j["sequence"] = dir;
    j["label"] = res.label;
    j["md"] = res.md;
    j["frames"] = feats.total_frames();
    j["usable_frames"] = feats.rows.size();
    j["k"] = cfg.interval_length();
    j["intervals"] = nlohmann::json::array();
    for (const auto& ir : res.intervals) {
        nlohmann::json iv = {{"first_frame", ir.first_frame},
                             {"last_frame", ir.last_frame},
                             {"label", std::string(ir.result.label(kb))},
                             {"md", ir.activity.md},
                             {"confidence", ir.result.confidence},
                             {"matched", ir.result.matched_rules(kb)},
                             {"activity", activity_json(ir.activity)}};
        if (!ir.result.known() && ir.result.nearest >= 0)
            iv["nearest_rule"] = kb.rules[static_cast<std::size_t>(ir.result.nearest)].action;
        if (with_stbpm)
            iv["stbpm"] = stbpm_json(ir.stbpm);
        j["intervals"].push_back(std::move(iv));
    }
    emit(c, "labels.json", [&](std::ostream& o) { o << j.dump(2) << '\n'; });
    return 0;
}

int run_eval_cmd(const std::string& manifest, const std::string& root, const std::string& layout, const Common& c)
{
    const Config cfg = make_config(c);
    const KnowledgeBase kb = make_kb(c);
    std::vector<eval::ManifestEntry> entries;
    if (!root.empty())
        entries = eval::scan_tree(root, layout == "muhavi" ? eval::Layout::muhavi : eval::Layout::weizmann);
    else
        entries = eval::read_manifest(manifest);
    const eval::Corpus corpus = eval::load_corpus(entries, cfg);
    for (const auto& w : corpus.warnings)
        std::cerr << "warning: " << w << '\n';
    if (corpus.sequences.empty()) {
        if (corpus.dropped_empty * 2 > corpus.dropped && corpus.dropped > 0)
            throw EmptyDominated("every sequence was dropped, mostly for empty silhouettes");
        throw Error(ErrorCode::validation, "no usable sequence in the corpus");
    }
    const eval::EvalReport rep = eval::run_eval(corpus, kb, cfg, c.threads);
    if (c.out.empty()) {
        eval::write_summary(std::cout, rep, corpus);
        rep.matrix.write_csv(std::cout);
        return 0;
    }
    emit(c, "confusion.csv", [&](std::ostream& o) { rep.matrix.write_csv(o); });
    emit(c, "sequences.jsonl", [&](std::ostream& o) {
        for (const auto& r : rep.records)
            o << eval::record_json(r).dump() << '\n';
    });
    emit(c, "summary.txt", [&](std::ostream& o) { eval::write_summary(o, rep, corpus); });
    eval::write_summary(std::cout, rep, corpus);
    return 0;
}

int run_synth(int per_class, double seconds, std::uint64_t seed, std::vector<std::string> actions, const Common& c)
{
    if (c.out.empty())
        throw Error(ErrorCode::parameter, "synth needs --out");
    const Config cfg = make_config(c);
    std::vector<std::string_view> views;
    for (const auto& a : actions) {
        if (!synth::is_action(a))
            throw Error(ErrorCode::parameter, "unknown action '" + a + "'");
        views.push_back(a);
    }
    const auto manifest = views.empty() ? synth::write_corpus(c.out, per_class, cfg.fps, seconds, seed)
                                        : synth::write_corpus(c.out, per_class, cfg.fps, seconds, seed, views);
    std::cout << manifest.string() << '\n';
    return 0;
}

int run_rules_check(const std::string& file, bool print)
{
    const KnowledgeBase kb = load_kb(file);
    std::cout << file << ": " << kb.rules.size() << " rules";
    if (!kb.version.empty())
        std::cout << ", version " << kb.version;
    std::cout << '\n';
    if (print)
        std::cout << format_kb(kb);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Action recognition from binary silhouette sequences"};
    app.require_subcommand(1);

    Common common;

    std::string frames_dir, format = "csv";
    auto* extract = app.add_subcommand("extract", "frames -> per-frame feature CSV");
    extract->add_option("frames", frames_dir, "directory of PGM/PNG frames")->required()->check(CLI::ExistingDirectory);
    extract->add_option("--format", format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
    add_common(extract, common, false);

    bool with_stbpm = false;
    auto* classify_cmd = app.add_subcommand("classify", "frames -> labels JSON");
    classify_cmd->add_option("frames", frames_dir, "directory of PGM/PNG frames")->required()->check(CLI::ExistingDirectory);
    classify_cmd->add_flag("--stbpm", with_stbpm, "include the 28x4 aggregates per interval");
    add_common(classify_cmd, common, true);

    std::string manifest, root, layout = "weizmann";
    auto* eval_cmd = app.add_subcommand("eval", "manifest -> confusion matrix and summary");
    auto* man_opt = eval_cmd->add_option("manifest", manifest, "lines of '<id> <label> <frame_dir>'")->check(CLI::ExistingFile);
    auto* root_opt = eval_cmd->add_option("--root", root, "scan a dataset tree instead of reading a manifest")
                         ->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--layout", layout, "tree layout for --root")->check(CLI::IsMember({"weizmann", "muhavi"}));
    man_opt->excludes(root_opt);
    add_common(eval_cmd, common, true);

    int per_class = 10;
    double seconds = 1.0;
    std::uint64_t seed = 1;
    std::vector<std::string> actions;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic labelled corpus");
    synth_cmd->add_option("--per-class", per_class, "sequences per action")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--seconds", seconds, "duration of each sequence")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--seed", seed, "base seed");
    synth_cmd->add_option("--actions", actions, "subset of actions (default: all nine)")->delimiter(',');
    add_common(synth_cmd, common, false);

    std::string rule_file;
    bool print_rules = false;
    auto* rules_cmd = app.add_subcommand("rules", "rule file utilities");
    rules_cmd->require_subcommand(1);
    auto* check_cmd = rules_cmd->add_subcommand("check", "parse and validate a rule file");
    check_cmd->add_option("file", rule_file, "rule file")->required();
    check_cmd->add_flag("--print", print_rules, "print the normalized rules");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitInput;
    }

    try {
        if (*extract)
            return run_extract(frames_dir, format, common);
        if (*classify_cmd)
            return run_classify(frames_dir, with_stbpm, common);
        if (*eval_cmd) {
            if (manifest.empty() && root.empty())
                throw Error(ErrorCode::parameter, "eval needs a manifest or --root");
            return run_eval_cmd(manifest, root, layout, common);
        }
        if (*synth_cmd)
            return run_synth(per_class, seconds, seed, actions, common);
        if (*check_cmd)
            return run_rules_check(rule_file, print_rules);
    } catch (const EmptyDominated& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitEmpty;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return 0;
}
