#pragma once

// Built-in copy of data/rules/default.rules so the CLI works without the data
// directory. A test keeps the two in sync.

#include "silhar/rac.hpp"

#include <string_view>

namespace silhar {

inline constexpr std::string_view kDefaultRulesText = R"rules(
#! version default
# Default knowledge base: one condition-action rule per line.
#
#   action | priority | bmcg(mv;mdr) | bmc(mv;region) | head(mv;region) | hand(mv;region) | leg(mv;region) | sa(lo-hi) | md(set)
#
# mv: 0 static, 1 slow, 2 rapid.  mdr: X, Y, XY.  region: UL (alias UP), MID, LL.
# '--' is don't-care.  sa(lo-hi) admits lo < sa_max <= hi.  Lower priority wins ties.
Stand     | 1 | bmcg(0;--)   | bmc(0;--)  | head(0;--) | hand(0;--)     | leg(0;--)     | sa(--)    | md(-1,0,1)
Wave      | 2 | bmcg(0;--)   | bmc(1;MID) | head(0;UL) | hand(2;UL,MID) | leg(0;LL)     | sa(--)    | md(-1,0,1)
Punch     | 3 | bmcg(0;--)   | bmc(1;MID) | head(1;UL) | hand(2;UL,MID) | leg(0;LL)     | sa(0-30)  | md(-1,0,1)
Kick      | 4 | bmcg(0;--)   | bmc(1;MID) | head(1;UL) | hand(1;MID)    | leg(0;LL,MID) | sa(0-130) | md(-1,0,1)
Jump      | 5 | bmcg(2;Y,XY) | bmc(1;MID) | head(1;UL) | hand(1;MID)    | leg(1;LL)     | sa(--)    | md(-1,0,1)
Walk      | 6 | bmcg(2;X,XY) | bmc(1;MID) | head(--;--) | hand(--;--)   | leg(2;LL)     | sa(0-60)  | md(-1,0,1)
Run       | 7 | bmcg(2;X,XY) | bmc(1;MID) | head(--;--) | hand(--;--)   | leg(2;LL)     | sa(0-90)  | md(-1,0,1)
Turn back | 8 | bmcg(1;X,XY) | bmc(1;MID) | head(1;UL) | hand(1;MID)    | leg(1;LL)     | sa(0-30)  | md(-1,0,1)
)rules";

inline const KnowledgeBase& default_kb()
{
    static const KnowledgeBase kb = parse_kb(kDefaultRulesText.substr(1), "<builtin default>");
    return kb;
}

} // namespace silhar
