#pragma once

// Rule-action classifier. A knowledge base is a list of condition-action
// rules over the per-interval action-unit activity; classification is a
// single forward pass with no state between calls.
//
// Rule file, one rule per line ('#' starts a comment, '--' is don't-care):
//
//   action | priority | bmcg(mv;mdr) | bmc(mv;region) | head(mv;region)
//          | hand(mv;region) | leg(mv;region) | sa(lo-hi) | md(-1,0,1)
//
// Sets are comma separated. sa(lo-hi) admits lo < sa_max <= hi.
// A comment of the form "#! version <tag>" sets the knowledge base version.

#include "silhar/error.hpp"
#include "silhar/stbpm.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace silhar {

inline constexpr std::string_view kUnknownLabel = "UNKNOWN";

namespace detail {
inline constexpr std::uint8_t kAllMv = 0b111;
inline constexpr std::uint8_t kAllMd = 0b111; // bit (md + 1)
inline std::uint8_t mdr_bit(Mdr m) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(m)); }
} // namespace detail

// Condition on one action unit. The second slot is the movement direction for
// the global body center and the level region for every other unit.
struct AuCondition {
    bool mv_any = true;
    std::uint8_t mv = detail::kAllMv; // bit i admits mv == i
    bool second_any = true;
    std::uint8_t second = 0;          // mdr bits (1 << Mdr) or RegionSet bits

    friend bool operator==(const AuCondition&, const AuCondition&) = default;
};

struct SaRange {
    bool any = true;
    double lo = 0.0;
    double hi = 0.0;

    bool admits(double sa) const noexcept { return any || (sa > lo && sa <= hi); }

    friend bool operator==(const SaRange&, const SaRange&) = default;
};

struct Rule {
    std::string action;
    int priority = 0;
    std::array<AuCondition, kAuCount> au{};
    SaRange sa;
    bool md_any = true;
    std::uint8_t md = detail::kAllMd;
    int line = 0; // source line, 0 when built in code

    // Number of fields that constrain anything.
    int specificity() const noexcept
    {
        int n = 0;
        for (const auto& c : au)
            n += int(!c.mv_any) + int(!c.second_any);
        return n + int(!sa.any) + int(!md_any);
    }

    friend bool operator==(const Rule& a, const Rule& b)
    {
        return a.action == b.action && a.priority == b.priority && a.au == b.au && a.sa == b.sa &&
               a.md_any == b.md_any && a.md == b.md;
    }
};

struct KnowledgeBase {
    std::vector<Rule> rules;
    std::string version;

    void validate() const
    {
        if (rules.empty())
            throw Error(ErrorCode::validation, "knowledge base holds no rules");
        if (rules.size() > 64)
            throw Error(ErrorCode::validation, "at most 64 rules are supported");
        for (std::size_t i = 0; i < rules.size(); ++i)
            for (std::size_t j = i + 1; j < rules.size(); ++j) {
                if (rules[i].priority == rules[j].priority)
                    throw Error(ErrorCode::validation, "duplicate priority " + std::to_string(rules[i].priority) +
                                                           " (" + rules[i].action + ", " + rules[j].action + ")");
                if (rules[i].action == rules[j].action)
                    throw Error(ErrorCode::validation, "duplicate action label '" + rules[i].action + "'");
            }
    }
};

// ---------------------------------------------------------------------------
// Matching

namespace detail {

inline bool admits_mv(const AuCondition& c, int mv) noexcept
{
    return c.mv_any || (mv >= 0 && mv <= 2 && (c.mv >> mv) & 1u);
}

inline bool admits_second(const AuCondition& c, std::uint8_t value_bits) noexcept
{
    return c.second_any || (c.second & value_bits) != 0;
}

// Per-field outcome; the order is mv/second for each unit, then sa, then md.
inline constexpr int kConditionCount = 2 * int(kAuCount) + 2;

inline int satisfied_conditions(const Rule& r, const AuActivity& act, bool& all) noexcept
{
    int n = 0;
    all = true;
    const auto tally = [&](bool ok) {
        n += int(ok);
        all = all && ok;
    };
    for (std::size_t i = 0; i < kAuCount; ++i) {
        const AuState& s = act.au[i];
        const AuCondition& c = r.au[i];
        tally(admits_mv(c, s.mv));
        const std::uint8_t bits = i == std::size_t(Au::bmc_g) ? mdr_bit(s.mdr) : s.region;
        tally(admits_second(c, bits));
    }
    tally(r.sa.admits(act.sa_max));
    tally(r.md_any || (act.md >= -1 && act.md <= 1 && (r.md >> (act.md + 1)) & 1u));
    return n;
}

} // namespace detail

inline bool match(const Rule& rule, const AuActivity& act) noexcept
{
    for (std::size_t i = 0; i < kAuCount; ++i) {
        const AuState& s = act.au[i];
        const AuCondition& c = rule.au[i];
        if (!detail::admits_mv(c, s.mv))
            return false;
        const std::uint8_t bits = i == std::size_t(Au::bmc_g) ? detail::mdr_bit(s.mdr) : s.region;
        if (!detail::admits_second(c, bits))
            return false;
    }
    if (!rule.sa.admits(act.sa_max))
        return false;
    return rule.md_any || (act.md >= -1 && act.md <= 1 && (rule.md >> (act.md + 1)) & 1u);
}

struct ClassificationResult {
    int winner = -1;             // rule index, -1 for UNKNOWN
    std::uint64_t matched = 0;   // bit i set when rule i matched
    double confidence = 0.0;     // 1 / number of matching rules; 0 when nothing matched
    int nearest = -1;            // most satisfied rule when nothing matched
    int nearest_satisfied = 0;

    bool known() const noexcept { return winner >= 0; }
    int match_count() const noexcept { return std::popcount(matched); }

    std::string_view label(const KnowledgeBase& kb) const
    {
        return winner >= 0 ? std::string_view(kb.rules[static_cast<std::size_t>(winner)].action) : kUnknownLabel;
    }

    std::vector<std::string> matched_rules(const KnowledgeBase& kb) const
    {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < kb.rules.size(); ++i)
            if ((matched >> i) & 1u)
                out.push_back(kb.rules[i].action);
        return out;
    }

    friend bool operator==(const ClassificationResult&, const ClassificationResult&) = default;
};

// Among matching rules the most specific wins, then the lowest priority
// value. With no match the result is UNKNOWN and the rule satisfying the most
// individual conditions is reported.
inline ClassificationResult classify(const AuActivity& act, const KnowledgeBase& kb)
{
    ClassificationResult res;
    int best_spec = -1, best_prio = 0;
    for (std::size_t i = 0; i < kb.rules.size(); ++i) {
        const Rule& r = kb.rules[i];
        if (!match(r, act))
            continue;
        res.matched |= std::uint64_t{1} << i;
        const int spec = r.specificity();
        if (spec > best_spec || (spec == best_spec && r.priority < best_prio)) {
            best_spec = spec;
            best_prio = r.priority;
            res.winner = static_cast<int>(i);
        }
    }
    if (res.winner >= 0) {
        res.confidence = 1.0 / res.match_count();
        return res;
    }
    for (std::size_t i = 0; i < kb.rules.size(); ++i) {
        bool all = false;
        const int n = detail::satisfied_conditions(kb.rules[i], act, all);
        if (res.nearest < 0 || n > res.nearest_satisfied ||
            (n == res.nearest_satisfied && kb.rules[i].priority < kb.rules[static_cast<std::size_t>(res.nearest)].priority)) {
            res.nearest = static_cast<int>(i);
            res.nearest_satisfied = n;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    for (;;) {
        const auto next = s.find(sep, pos);
        out.push_back(trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
        if (next == std::string_view::npos)
            return out;
        pos = next + 1;
    }
}

inline std::string upper(std::string_view s)
{
    std::string out(s);
    for (auto& ch : out)
        ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return out;
}

class RuleParser {
public:
    RuleParser(int line, std::string_view source) : line_(line), source_(source) {}

    [[noreturn]] void fail(int field, const std::string& msg) const
    {
        std::string where = std::string(source_) + ":" + std::to_string(line_);
        if (field > 0)
            where += " field " + std::to_string(field);
        throw Error(ErrorCode::parse, where + ": " + msg);
    }

    // "name(a;b)" -> {a, b}
    std::pair<std::string_view, std::string_view> call(std::string_view text, std::string_view name, int field,
                                                       bool two_args) const
    {
        const auto open = text.find('(');
        if (open == std::string_view::npos || text.back() != ')')
            fail(field, "expected " + std::string(name) + "(...)");
        if (upper(trim(text.substr(0, open))) != upper(name))
            fail(field, "expected " + std::string(name) + "(...), got '" + std::string(text) + "'");
        const auto inner = trim(text.substr(open + 1, text.size() - open - 2));
        if (!two_args)
            return {inner, {}};
        const auto parts = split(inner, ';');
        if (parts.size() != 2)
            fail(field, "expected two ';'-separated values in " + std::string(name) + "(...)");
        return {parts[0], parts[1]};
    }

    void mv_set(std::string_view text, int field, AuCondition& c) const
    {
        if (text == "--") {
            c.mv_any = true;
            c.mv = kAllMv;
            return;
        }
        c.mv = 0;
        for (auto tok : split(text, ',')) {
            if (tok.size() != 1 || tok[0] < '0' || tok[0] > '2')
                fail(field, "bad mv value '" + std::string(tok) + "' (expected 0, 1 or 2)");
            c.mv |= static_cast<std::uint8_t>(1u << (tok[0] - '0'));
        }
        c.mv_any = c.mv == kAllMv;
    }

    void mdr_set(std::string_view text, int field, AuCondition& c) const
    {
        if (text == "--") {
            c.second_any = true;
            c.second = 0;
            return;
        }
        c.second_any = false;
        c.second = 0;
        for (auto tok : split(text, ',')) {
            const std::string t = upper(tok);
            if (t == "X") c.second |= mdr_bit(Mdr::x);
            else if (t == "Y") c.second |= mdr_bit(Mdr::y);
            else if (t == "XY") c.second |= mdr_bit(Mdr::xy);
            else fail(field, "bad movement direction '" + std::string(tok) + "' (expected X, Y or XY)");
        }
    }

    void region_set(std::string_view text, int field, AuCondition& c) const
    {
        if (text == "--") {
            c.second_any = true;
            c.second = 0;
            return;
        }
        c.second_any = false;
        c.second = 0;
        for (auto tok : split(text, ',')) {
            const std::string t = upper(tok);
            if (t == "UL" || t == "UP") c.second |= kUL;
            else if (t == "MID") c.second |= kMID;
            else if (t == "LL") c.second |= kLL;
            else fail(field, "bad region '" + std::string(tok) + "' (expected UL, MID or LL)");
        }
    }

    double number(std::string_view text, int field) const
    {
        double v = 0.0;
        const auto* end = text.data() + text.size();
        const auto [p, ec] = std::from_chars(text.data(), end, v);
        if (ec != std::errc() || p != end)
            fail(field, "bad number '" + std::string(text) + "'");
        return v;
    }

    SaRange sa_range(std::string_view text, int field) const
    {
        SaRange r;
        if (text == "--")
            return r;
        const auto dash = text.find('-', 1);
        if (dash == std::string_view::npos)
            fail(field, "expected sa(lo-hi) or sa(--)");
        r.any = false;
        r.lo = number(trim(text.substr(0, dash)), field);
        r.hi = number(trim(text.substr(dash + 1)), field);
        if (!(r.lo < r.hi))
            fail(field, "sa range needs lo < hi");
        return r;
    }

    void md_set(std::string_view text, int field, Rule& r) const
    {
        if (text == "--") {
            r.md_any = true;
            r.md = kAllMd;
            return;
        }
        r.md = 0;
        for (auto tok : split(text, ',')) {
            int v = 0;
            if (tok == "-1") v = -1;
            else if (tok == "0") v = 0;
            else if (tok == "1" || tok == "+1") v = 1;
            else fail(field, "bad md value '" + std::string(tok) + "' (expected -1, 0 or 1)");
            r.md |= static_cast<std::uint8_t>(1u << (v + 1));
        }
        r.md_any = r.md == kAllMd;
    }

    Rule parse(std::string_view text) const
    {
        const auto fields = split(text, '|');
        if (fields.size() != 9)
            fail(0, "expected 9 '|'-separated fields, found " + std::to_string(fields.size()));
        Rule r;
        r.line = line_;
        if (fields[0].empty())
            fail(1, "empty action label");
        r.action = std::string(fields[0]);
        {
            const auto* end = fields[1].data() + fields[1].size();
            const auto [p, ec] = std::from_chars(fields[1].data(), end, r.priority);
            if (ec != std::errc() || p != end)
                fail(2, "bad priority '" + std::string(fields[1]) + "'");
        }
        static constexpr std::array<std::string_view, kAuCount> names = {"bmcg", "bmc", "head", "hand", "leg"};
        for (std::size_t i = 0; i < kAuCount; ++i) {
            const int field = static_cast<int>(i) + 3;
            const auto [mv, second] = call(fields[i + 2], names[i], field, true);
            mv_set(mv, field, r.au[i]);
            if (i == std::size_t(Au::bmc_g))
                mdr_set(second, field, r.au[i]);
            else
                region_set(second, field, r.au[i]);
        }
        r.sa = sa_range(call(fields[7], "sa", 8, false).first, 8);
        md_set(call(fields[8], "md", 9, false).first, 9, r);
        return r;
    }

private:
    int line_;
    std::string_view source_;
};

} // namespace detail

inline KnowledgeBase parse_kb(std::string_view text, std::string_view source = "<rules>")
{
    KnowledgeBase kb;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        const auto hash = line.find('#');
        if (hash != std::string_view::npos) {
            const auto comment = detail::trim(line.substr(hash + 1));
            if (comment.starts_with("! version"))
                kb.version = std::string(detail::trim(comment.substr(9)));
            line = line.substr(0, hash);
        }
        line = detail::trim(line);
        if (line.empty())
            continue;
        kb.rules.push_back(detail::RuleParser(line_no, source).parse(line));
    }
    kb.validate();
    return kb;
}

inline KnowledgeBase load_kb(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::io, "cannot open rule file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_kb(ss.str(), path.string());
}

// ---------------------------------------------------------------------------
// Formatting (inverse of the parser up to whitespace)

namespace detail {

inline std::string format_mv(const AuCondition& c)
{
    if (c.mv_any)
        return "--";
    std::string s;
    for (int i = 0; i < 3; ++i)
        if ((c.mv >> i) & 1u) {
            if (!s.empty())
                s += ',';
            s += char('0' + i);
        }
    return s;
}

inline std::string format_second(const AuCondition& c, bool mdr)
{
    if (c.second_any)
        return "--";
    std::string s;
    const auto put = [&](bool on, const char* name) {
        if (!on)
            return;
        if (!s.empty())
            s += ',';
        s += name;
    };
    if (mdr) {
        put(c.second & mdr_bit(Mdr::x), "X");
        put(c.second & mdr_bit(Mdr::y), "Y");
        put(c.second & mdr_bit(Mdr::xy), "XY");
    } else {
        put(c.second & kUL, "UL");
        put(c.second & kMID, "MID");
        put(c.second & kLL, "LL");
    }
    return s;
}

inline std::string format_number(double v)
{
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

} // namespace detail

inline std::string format_rule(const Rule& r)
{
    static constexpr std::array<std::string_view, kAuCount> names = {"bmcg", "bmc", "head", "hand", "leg"};
    std::string s = r.action + " | " + std::to_string(r.priority);
    for (std::size_t i = 0; i < kAuCount; ++i)
        s += " | " + std::string(names[i]) + "(" + detail::format_mv(r.au[i]) + ";" +
             detail::format_second(r.au[i], i == std::size_t(Au::bmc_g)) + ")";
    s += r.sa.any ? " | sa(--)" : " | sa(" + detail::format_number(r.sa.lo) + "-" + detail::format_number(r.sa.hi) + ")";
    if (r.md_any) {
        s += " | md(-1,0,1)";
    } else {
        std::string md;
        for (int v = -1; v <= 1; ++v)
            if ((r.md >> (v + 1)) & 1u) {
                if (!md.empty())
                    md += ',';
                md += std::to_string(v);
            }
        s += " | md(" + md + ")";
    }
    return s;
}

inline std::string format_kb(const KnowledgeBase& kb)
{
    std::string s;
    if (!kb.version.empty())
        s += "#! version " + kb.version + "\n";
    for (const auto& r : kb.rules)
        s += format_rule(r) + "\n";
    return s;
}

} // namespace silhar
