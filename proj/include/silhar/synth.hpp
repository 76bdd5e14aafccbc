#pragma once

// Deterministic articulated stick-figure silhouettes with exact ground truth.
//
// The figure is a 3D skeleton (legs, torso, neck, head, arms) posed in a body
// frame (forward f, lateral l, up z, lengths in units of body height), turned
// by a yaw angle and projected orthographically. Limbs are capsules with
// integer pixel radii, the head a disc; no anti-aliasing.

#include "silhar/error.hpp"
#include "silhar/geometry.hpp"
#include "silhar/image_io.hpp"
#include "silhar/mask.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace silhar::synth {

inline constexpr std::array<std::string_view, 9> kActions = {
    "stand", "walk", "run", "jump", "wave1", "wave2", "punch", "kick", "turnback",
};

struct FigureParams {
    int height = 80;            // standing height, pixels
    double head_radius = 0.065; // fractions of height from here on
    double hip = 0.53;
    double shoulder = 0.818;
    double arm_width = 0.024;   // capsule radii
    double leg_width = 0.032;
    double foot_width = 0.022;
    double contact_band = 0.05; // a foot is planted when it reaches this close to the ground
    int frame_width = 180;      // minimum; sequences widen the frame to fit
    int frame_height = 144;
    std::uint64_t seed = 1;

    void validate() const
    {
        const auto frac = [](double v) { return v > 0.0 && v < 1.0; };
        if (height < 40)
            throw Error(ErrorCode::parameter, "figure height must be at least 40 px");
        if (!frac(head_radius) || !frac(hip) || !frac(shoulder) || !frac(arm_width) || !frac(leg_width) ||
            !frac(foot_width) || !frac(contact_band))
            throw Error(ErrorCode::parameter, "figure fractions must lie in (0,1)");
        if (!(hip < shoulder))
            throw Error(ErrorCode::parameter, "hip must sit below the shoulders");
        if (frame_width < 8 || frame_height < 8)
            throw Error(ErrorCode::parameter, "frame too small");
    }
};

// Joint angles in degrees. Flexion swings a limb forward, abduction out to
// the side; knee and elbow flexion bend the distal segment backward/forward.
struct LegPose {
    double flex = 0.0;
    double knee = 0.0;
    double abduct = 0.0;
    double foot_pitch = 0.0; // toe down
    double foot_yaw = 0.0;   // pivot about the vertical, toe outward
};

struct ArmPose {
    double flex = 0.0;
    double abduct = 0.0;
    double elbow = 0.0;
};

struct Pose {
    double x = 0.0;      // hip-center column
    double lift = 0.0;   // lowest point above the ground line, fraction of height
    double yaw = 0.0;    // 0 profile, 90 facing the camera
    int facing = 1;      // +1: forward projects to +x (right)
    double torso_pitch = 0.0; // forward lean
    double torso_roll = 0.0;
    double neck_pitch = 0.0;
    std::array<LegPose, 2> legs{}; // 0 = left side of the body, 1 = right
    std::array<ArmPose, 2> arms{};
};

// Column reflection of a pose inside a frame `width` wide.
inline Pose mirrored(const Pose& p, int width)
{
    Pose m = p;
    m.x = (width - 1) - p.x;
    m.facing = -p.facing;
    return m;
}

struct Capsule {
    PointD a;
    PointD b;
    double r = 0.0;
};

struct FootTruth {
    PointD heel;    // rear extreme of the foot, provisional orientation (foot's own axis)
    PointD toe;
    double bottom = 0.0; // lowest row covered
    bool contact = false;
};

struct Footprint {
    PointD heel; // endpoint nearer the centroid column (same rule as detection)
    PointD toe;
    PointD contact;
};

struct GroundTruth {
    int frame = 0;
    std::string action;
    int facing = 1;
    double height = 0.0;     // silhouette extent top to bottom, pixels
    double top = 0.0;
    double bottom = 0.0;
    PointD head_center;
    PointD shoulder_center;
    double ha = 90.0;
    std::array<PointD, 2> hand_tips{};
    std::array<FootTruth, 2> feet{};
    std::vector<Footprint> footprints; // contact feet merged where they overlap
    PointD centroid;
    double sa = 0.0;
};

namespace detail {

struct V3 {
    double f = 0.0, l = 0.0, z = 0.0;
    V3 operator+(const V3& o) const { return {f + o.f, l + o.l, z + o.z}; }
    V3 operator-(const V3& o) const { return {f - o.f, l - o.l, z - o.z}; }
    V3 operator*(double s) const { return {f * s, l * s, z * s}; }
};

inline double snap(double v) { return std::round(v * 1024.0) / 1024.0; }

// Direction of a limb segment hanging down, rotated forward by `flex` and out
// to the side `side_sign` by `abduct`.
inline V3 limb_dir(double flex_deg, double abduct_deg, double side_sign)
{
    const double fl = deg2rad(flex_deg), ab = deg2rad(abduct_deg);
    return {std::sin(fl) * std::cos(ab), side_sign * std::sin(ab), -std::cos(fl) * std::cos(ab)};
}

struct Skeleton {
    struct Seg {
        V3 a, b;
        double r_px;
    };
    std::vector<Seg> segs;
    V3 head, shoulder_center;
    std::array<V3, 2> hand_tips;
    std::array<std::size_t, 2> foot_seg{};
    double torso_r_px = 0.0;
};

inline double pixel_radius(double frac, int height) { return std::max(1.0, std::round(frac * height)); }

inline Skeleton build_skeleton(const FigureParams& fig, const Pose& p)
{
    const int H = fig.height;
    Skeleton sk;
    const double ankle_h = 0.045;
    const double leg_len = fig.hip - ankle_h;
    const double thigh = 0.505 * leg_len, shank = leg_len - thigh;
    const double torso_len = fig.shoulder - fig.hip;
    const double leg_r = pixel_radius(fig.leg_width, H);
    const double shank_r = pixel_radius(0.8 * fig.leg_width, H);
    const double foot_r = pixel_radius(fig.foot_width, H);
    const double arm_r = pixel_radius(fig.arm_width, H);

    // legs
    for (int s = 0; s < 2; ++s) {
        const double side = s == 0 ? 1.0 : -1.0;
        const LegPose& lp = p.legs[static_cast<std::size_t>(s)];
        const V3 hip{0.0, side * 0.05, 0.0};
        const V3 knee = hip + limb_dir(lp.flex, lp.abduct, side) * thigh;
        const V3 ankle = knee + limb_dir(lp.flex - lp.knee, lp.abduct, side) * shank;
        sk.segs.push_back({hip, knee, leg_r});
        sk.segs.push_back({knee, ankle, shank_r});
        // foot in its sagittal plane (forward, up), pitched about the ankle
        const double fr = foot_r / H;
        const double pitch = deg2rad(lp.foot_pitch);
        const auto rot = [&](double fwd, double up) {
            return std::pair{fwd * std::cos(pitch) + up * std::sin(pitch), -fwd * std::sin(pitch) + up * std::cos(pitch)};
        };
        const double yaw = deg2rad(lp.foot_yaw);
        const V3 fwd_dir{std::cos(yaw), side * std::sin(yaw), 0.0};
        const auto [hf, hu] = rot(-0.035 + fr, -ankle_h + fr);
        const auto [tf, tu] = rot(0.125 - fr, -ankle_h + fr);
        const V3 heel = ankle + fwd_dir * hf + V3{0, 0, hu};
        const V3 toe = ankle + fwd_dir * tf + V3{0, 0, tu};
        sk.foot_seg[static_cast<std::size_t>(s)] = sk.segs.size();
        sk.segs.push_back({heel, toe, foot_r});
    }

    // torso; the projected half-width depends on yaw
    const double tp = deg2rad(p.torso_pitch), tr = deg2rad(p.torso_roll);
    const V3 up{std::sin(tp) * std::cos(tr), std::sin(tr), std::cos(tp) * std::cos(tr)};
    const double yaw = deg2rad(p.yaw);
    sk.torso_r_px = std::hypot(0.085 * std::cos(yaw), 0.11 * std::sin(yaw)) * H;
    const V3 sc = up * torso_len;
    sk.shoulder_center = sc;
    sk.segs.push_back({V3{0, 0, 0}, sc - up * (sk.torso_r_px / H), sk.torso_r_px});

    // neck and head
    const double np = tp + deg2rad(p.neck_pitch);
    const V3 head_up{std::sin(np) * std::cos(tr), std::sin(tr), std::cos(np) * std::cos(tr)};
    sk.head = sc + head_up * (0.93 - fig.shoulder);
    sk.segs.push_back({sc, sk.head, std::max(1.0, 0.03 * H)});
    sk.segs.push_back({sk.head, sk.head, fig.head_radius * H});

    // arms hang from just below the shoulder line
    const V3 lateral{0.0, std::cos(tr), -std::sin(tr)};
    // shoulder girdle, so raised arms stay attached to the torso
    const V3 girdle = sc - up * 0.03;
    sk.segs.push_back({girdle - lateral * 0.12, girdle + lateral * 0.12, arm_r});
    for (int s = 0; s < 2; ++s) {
        const double side = s == 0 ? 1.0 : -1.0;
        const ArmPose& ap = p.arms[static_cast<std::size_t>(s)];
        const V3 sh = sc + lateral * (side * 0.12) - up * 0.03;
        const V3 elbow = sh + limb_dir(ap.flex, ap.abduct, side) * 0.17;
        const V3 fdir = limb_dir(ap.flex + ap.elbow, ap.abduct, side);
        const V3 wrist = elbow + fdir * 0.17;
        sk.segs.push_back({sh, elbow, arm_r});
        sk.segs.push_back({elbow, wrist, arm_r});
        sk.hand_tips[static_cast<std::size_t>(s)] = wrist + fdir * (arm_r / H);
    }
    return sk;
}

struct Projector {
    double x0, ground, H, cos_y, sin_y, zmin, lift;
    int facing;

    PointD operator()(const V3& v) const
    {
        const double h = v.f * cos_y + v.l * sin_y;
        return {snap(x0 + facing * snap(h * H)), snap(ground - (v.z - zmin + lift) * H)};
    }
};

inline Projector make_projector(const FigureParams& fig, const Pose& p, const Skeleton& sk, double ground)
{
    double zmin = std::numeric_limits<double>::infinity();
    for (const auto& s : sk.segs)
        zmin = std::min({zmin, s.a.z - s.r_px / fig.height, s.b.z - s.r_px / fig.height});
    const double yaw = deg2rad(p.yaw);
    return {snap(p.x), ground, double(fig.height), std::cos(yaw), std::sin(yaw), zmin, p.lift, p.facing};
}

inline bool in_capsule(double px, double py, const Capsule& c)
{
    const double ex = c.b.x - c.a.x, ey = c.b.y - c.a.y;
    const double wx = px - c.a.x, wy = py - c.a.y;
    const double len2 = ex * ex + ey * ey;
    double t = len2 > 0.0 ? (wx * ex + wy * ey) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = wx - t * ex, dy = wy - t * ey;
    return dx * dx + dy * dy <= c.r * c.r;
}

} // namespace detail

inline int ground_row(const FigureParams& fig)
{
    return fig.frame_height - 1 - std::max(2, static_cast<int>(std::lround(0.04 * fig.height)));
}

// Image-space capsules of a pose.
inline std::vector<Capsule> pose_capsules(const FigureParams& fig, const Pose& pose)
{
    const auto sk = detail::build_skeleton(fig, pose);
    const auto proj = detail::make_projector(fig, pose, sk, ground_row(fig));
    std::vector<Capsule> out;
    out.reserve(sk.segs.size());
    for (const auto& s : sk.segs)
        out.push_back({proj(s.a), proj(s.b), s.r_px});
    return out;
}

struct Rendered {
    SilhouetteMask mask;
    GroundTruth truth;
};

inline Rendered render(const FigureParams& fig, const Pose& pose)
{
    fig.validate();
    const int W = fig.frame_width, FH = fig.frame_height;
    const auto sk = detail::build_skeleton(fig, pose);
    const auto proj = detail::make_projector(fig, pose, sk, ground_row(fig));
    std::vector<Capsule> caps;
    for (const auto& s : sk.segs)
        caps.push_back({proj(s.a), proj(s.b), s.r_px});

    double top = std::numeric_limits<double>::infinity(), bottom = -top;
    for (const auto& c : caps) {
        const double lo_x = std::min(c.a.x, c.b.x) - c.r, hi_x = std::max(c.a.x, c.b.x) + c.r;
        const double lo_y = std::min(c.a.y, c.b.y) - c.r, hi_y = std::max(c.a.y, c.b.y) + c.r;
        if (lo_x < 0.0 || hi_x > W - 1 || lo_y < 0.0 || hi_y > FH - 1)
            throw Error(ErrorCode::render, "pose leaves the frame");
        top = std::min(top, lo_y);
        bottom = std::max(bottom, hi_y);
    }

    SilhouetteMask mask(W, FH);
    for (const auto& c : caps) {
        const int c0 = static_cast<int>(std::floor(std::min(c.a.x, c.b.x) - c.r));
        const int c1 = static_cast<int>(std::ceil(std::max(c.a.x, c.b.x) + c.r));
        const int r0 = static_cast<int>(std::floor(std::min(c.a.y, c.b.y) - c.r));
        const int r1 = static_cast<int>(std::ceil(std::max(c.a.y, c.b.y) + c.r));
        for (int r = std::max(r0, 0); r <= std::min(r1, FH - 1); ++r)
            for (int col = std::max(c0, 0); col <= std::min(c1, W - 1); ++col)
                if (detail::in_capsule(col, r, c))
                    mask.set(r, col, 1);
    }

    GroundTruth gt;
    gt.facing = pose.facing;
    gt.top = top;
    gt.bottom = bottom;
    gt.height = bottom - top;
    gt.head_center = proj(sk.head);
    gt.shoulder_center = proj(sk.shoulder_center);
    {
        const double dx = gt.head_center.x - gt.shoulder_center.x;
        const double up = gt.shoulder_center.y - gt.head_center.y;
        double ha = rad2deg(std::atan2(up, -dx));
        if (ha <= 0.0)
            ha += 180.0;
        gt.ha = ha;
    }
    for (std::size_t s = 0; s < 2; ++s)
        gt.hand_tips[s] = proj(sk.hand_tips[s]);

    // pixel-count centroid of the rasterized shape
    {
        double sx = 0.0, sy = 0.0;
        std::int64_t n = 0;
        for (int r = 0; r < FH; ++r)
            for (int col = 0; col < W; ++col)
                if (mask.at(r, col)) {
                    sx += col;
                    sy += r;
                    ++n;
                }
        gt.centroid = n > 0 ? PointD{sx / n, sy / n} : PointD{};
    }

    // feet
    const double contact_row = bottom - fig.contact_band * gt.height;
    for (std::size_t s = 0; s < 2; ++s) {
        const Capsule& c = caps[sk.foot_seg[s]];
        PointD u = c.b - c.a;
        const double len = std::hypot(u.x, u.y);
        u = len > 0.0 ? u * (1.0 / len) : PointD{0.0, 0.0};
        FootTruth ft;
        ft.heel = c.a - u * c.r;
        ft.toe = c.b + u * c.r;
        ft.bottom = std::max(c.a.y, c.b.y) + c.r;
        ft.contact = ft.bottom >= contact_row;
        gt.feet[s] = ft;
    }
    struct Interval {
        double lo, hi;
        PointD lo_pt, hi_pt;
        double bottom;
        double contact_x_sum;
        int contact_n;
    };
    std::vector<Interval> spans;
    for (std::size_t s = 0; s < 2; ++s) {
        if (!gt.feet[s].contact)
            continue;
        const Capsule& c = caps[sk.foot_seg[s]];
        const PointD& left = c.a.x <= c.b.x ? c.a : c.b;
        const PointD& right = c.a.x <= c.b.x ? c.b : c.a;
        const double cx = std::abs(c.a.y - c.b.y) < 0.5 ? 0.5 * (c.a.x + c.b.x) : (c.a.y > c.b.y ? c.a.x : c.b.x);
        spans.push_back({left.x - c.r, right.x + c.r, {left.x - c.r, left.y}, {right.x + c.r, right.y},
                         gt.feet[s].bottom, cx, 1});
    }
    std::sort(spans.begin(), spans.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> merged;
    for (const auto& sp : spans) {
        if (!merged.empty() && sp.lo <= merged.back().hi + 1.0) {
            Interval& m = merged.back();
            if (sp.hi > m.hi) {
                m.hi = sp.hi;
                m.hi_pt = sp.hi_pt;
            }
            if (sp.bottom > m.bottom + 0.5) {
                m.bottom = sp.bottom;
                m.contact_x_sum = sp.contact_x_sum;
                m.contact_n = 1;
            } else if (sp.bottom > m.bottom - 0.5) {
                m.contact_x_sum += sp.contact_x_sum;
                ++m.contact_n;
            }
        } else {
            merged.push_back(sp);
        }
    }
    for (const auto& m : merged) {
        Footprint fp;
        const double da = std::abs(m.lo_pt.x - gt.centroid.x), db = std::abs(m.hi_pt.x - gt.centroid.x);
        fp.heel = db < da ? m.hi_pt : m.lo_pt;
        fp.toe = db < da ? m.lo_pt : m.hi_pt;
        fp.contact = {m.contact_x_sum / m.contact_n, m.bottom};
        gt.footprints.push_back(fp);
    }
    if (gt.footprints.size() >= 2) {
        const PointD vertex{pose.x, bottom - fig.hip * gt.height};
        gt.sa = angle_at(vertex, gt.footprints.front().contact, gt.footprints.back().contact);
    }
    return {std::move(mask), std::move(gt)};
}

// ---------------------------------------------------------------------------
// Action kinematics

namespace detail {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    int uniform_int(int lo, int hi) { return lo + static_cast<int>(unit() * (hi - lo + 1)); }
    int sign() { return unit() < 0.5 ? -1 : 1; }

private:
    std::mt19937_64 eng_;
};

// Per-sequence randomization drawn once from the seed.
struct Variation {
    int facing = 1;
    double phase = 0.0; // radians
    double speed = 1.0;
    double amp = 1.0;
};

inline constexpr double kTau = 2.0 * std::numbers::pi;

inline double smoothstep(double u)
{
    u = std::clamp(u, 0.0, 1.0);
    return u * u * (3.0 - 2.0 * u);
}

inline Pose stand_pose(const Variation& v, double)
{
    Pose p;
    p.yaw = 90.0;
    p.facing = v.facing;
    for (auto& l : p.legs)
        l.abduct = 3.0;
    for (auto& a : p.arms) {
        a.abduct = 10.0 * v.amp;
        a.elbow = 5.0;
    }
    return p;
}

inline Pose walk_pose(const Variation& v, double t)
{
    Pose p;
    p.yaw = 0.0;
    p.facing = v.facing;
    const double phi = kTau * 1.15 * v.speed * t + v.phase;
    p.x = 0.98 * v.speed * t; // fraction of height; scaled later
    p.torso_pitch = 4.0;
    for (int s = 0; s < 2; ++s) {
        const double ph = phi + s * std::numbers::pi;
        auto& l = p.legs[static_cast<std::size_t>(s)];
        l.flex = 18.0 * std::sin(ph);
        l.knee = 5.0 + 45.0 * std::max(0.0, std::cos(ph));
        auto& a = p.arms[static_cast<std::size_t>(s)];
        a.flex = -30.0 * std::sin(ph);
        a.elbow = 20.0;
        a.abduct = 5.0;
    }
    return p;
}

inline Pose run_pose(const Variation& v, double t)
{
    Pose p;
    p.yaw = 0.0;
    p.facing = v.facing;
    const double phi = kTau * 1.5 * v.speed * t + v.phase;
    p.x = 1.9 * v.speed * t;
    p.torso_pitch = 10.0;
    p.lift = 0.04 * std::max(0.0, std::cos(2.0 * phi));
    for (int s = 0; s < 2; ++s) {
        const double ph = phi + s * std::numbers::pi;
        auto& l = p.legs[static_cast<std::size_t>(s)];
        l.flex = 37.0 * std::sin(ph);
        l.knee = 80.0 * std::pow(std::max(0.0, std::cos(ph)), 2.0);
        auto& a = p.arms[static_cast<std::size_t>(s)];
        a.flex = -30.0 * std::sin(ph);
        a.elbow = 80.0;
        a.abduct = 5.0;
    }
    return p;
}

// Forward two-footed hops.
inline Pose jump_pose(const Variation& v, double t)
{
    Pose p;
    p.yaw = 0.0;
    p.facing = v.facing;
    const double cyc = 2.0 * v.speed * t + v.phase / kTau;
    const double c = cyc - std::floor(cyc);
    p.x = 0.45 * v.speed * t;
    double crouch = 0.0;
    if (c < 0.45) {
        crouch = std::sin(std::numbers::pi * c / 0.45);
    } else {
        p.lift = 0.3 * v.amp * std::sin(std::numbers::pi * (c - 0.45) / 0.55);
    }
    p.torso_pitch = 8.0 + 15.0 * crouch;
    for (auto& l : p.legs) {
        l.flex = 30.0 * crouch;
        l.knee = 10.0 + 60.0 * crouch;
    }
    for (auto& a : p.arms) {
        a.flex = 35.0 + 25.0 * std::sin(kTau * c);
        a.elbow = 20.0;
        a.abduct = 5.0;
    }
    return p;
}

inline Pose wave_pose(const Variation& v, double t, bool both)
{
    Pose p;
    p.yaw = 90.0;
    p.facing = v.facing;
    for (auto& l : p.legs)
        l.abduct = 3.0;
    // two-handed waving alternates, so the body center stays put
    const double ph = kTau * 2.0 * v.speed * t + v.phase;
    for (int s = 0; s < 2; ++s) {
        auto& a = p.arms[static_cast<std::size_t>(s)];
        a.abduct = (s == 0 || both) ? 65.0 + 35.0 * std::sin(ph + s * std::numbers::pi) : 8.0;
        a.elbow = 10.0;
    }
    return p;
}

inline Pose guard_pose(const Variation& v)
{
    Pose p;
    p.yaw = 0.0;
    p.facing = v.facing;
    p.legs[0].flex = 12.0;
    p.legs[1].flex = -12.0;
    p.legs[0].knee = p.legs[1].knee = 10.0;
    p.torso_pitch = 5.0;
    p.neck_pitch = 5.0;
    for (auto& a : p.arms) {
        a.flex = 55.0;
        a.elbow = 95.0;
        a.abduct = 5.0;
    }
    return p;
}

// The lead fist drives from a low chamber at the hip up to face height; the
// rear arm stays low.
inline Pose punch_pose(const Variation& v, double t)
{
    Pose p = guard_pose(v);
    const double e = std::max(0.0, std::sin(kTau * 1.5 * v.speed * t + v.phase));
    auto& lead = p.arms[0];
    lead.flex = -10.0 + 110.0 * e;
    lead.elbow = 70.0 * (1.0 - e);
    auto& rear = p.arms[1];
    rear.flex = 10.0;
    rear.elbow = 40.0;
    return p;
}

inline Pose kick_pose(const Variation& v, double t)
{
    Pose p = guard_pose(v);
    const double e = std::max(0.0, std::sin(kTau * 1.2 * v.speed * t + v.phase));
    auto& kl = p.legs[0];
    // Chamber: the thigh rises while the knee bends just enough to lift the
    // ankle straight up; then the knee snaps out.
    const double ratio = 0.505 / 0.495; // thigh / shank
    const auto chamber_knee = [&](double flex) {
        const double rest = ratio * std::sin(deg2rad(12.0)) + std::sin(deg2rad(2.0));
        const double s = std::clamp(rest - ratio * std::sin(deg2rad(flex)), -1.0, 1.0);
        return flex - rad2deg(std::asin(s));
    };
    if (e < 0.5) {
        kl.flex = 12.0 + 76.0 * e;
        kl.knee = chamber_knee(kl.flex);
    } else {
        const double b = (e - 0.5) / 0.5;
        kl.flex = 50.0 + 5.0 * b;
        kl.knee = chamber_knee(50.0) * (1.0 - b) + 10.0 * b;
    }
    for (auto& a : p.arms) {
        a.flex = 55.0 - 15.0 * e;
        a.elbow = 95.0 - 20.0 * e;
    }
    return p;
}

inline Pose turnback_pose(const Variation& v, double t)
{
    Pose p;
    p.facing = v.facing;
    p.yaw = 180.0 * smoothstep(t / 0.9);
    p.x = 0.15 * v.speed * t;
    p.torso_pitch = 6.0;
    p.neck_pitch = 10.0;
    const double phi = kTau * 2.0 * t + v.phase;
    for (int s = 0; s < 2; ++s) {
        const double ph = phi + s * std::numbers::pi;
        auto& l = p.legs[static_cast<std::size_t>(s)];
        l.flex = 10.0 * std::sin(ph);
        l.knee = 5.0 + 20.0 * std::max(0.0, std::cos(ph));
        l.abduct = 3.0;
        auto& a = p.arms[static_cast<std::size_t>(s)];
        a.flex = 20.0 - 10.0 * std::sin(ph); // forearms carried a little forward
        a.abduct = 12.0;
        a.elbow = 30.0;
    }
    return p;
}

} // namespace detail

inline bool is_action(std::string_view action)
{
    return std::find(kActions.begin(), kActions.end(), action) != kActions.end();
}

// Pose of `action` at time t seconds; x is in units of figure height and
// relative to the sequence start.
inline Pose action_pose(std::string_view action, const detail::Variation& v, double t)
{
    using namespace detail;
    if (action == "stand") return stand_pose(v, t);
    if (action == "walk") return walk_pose(v, t);
    if (action == "run") return run_pose(v, t);
    if (action == "jump") return jump_pose(v, t);
    if (action == "wave1") return wave_pose(v, t, false);
    if (action == "wave2") return wave_pose(v, t, true);
    if (action == "punch") return punch_pose(v, t);
    if (action == "kick") return kick_pose(v, t);
    if (action == "turnback") return turnback_pose(v, t);
    throw Error(ErrorCode::parameter, "unknown action '" + std::string(action) + "'");
}

namespace detail {

// Area-weighted center column of the capsules; close to the pixel centroid.
inline double mass_center_x(const FigureParams& fig, const Pose& pose)
{
    double m = 0.0, mx = 0.0;
    for (const auto& c : pose_capsules(fig, pose)) {
        const double len = distance(c.a, c.b);
        const double area = 2.0 * c.r * len + std::numbers::pi * c.r * c.r;
        m += area;
        mx += area * 0.5 * (c.a.x + c.b.x);
    }
    return mx / m;
}

// Leans the torso (bisection on pitch) until the body center is back over
// `target_x`, the way a kicker keeps balance on the stance foot.
inline void balance_torso(const FigureParams& fig, Pose& pose, double target_x)
{
    double lo = -45.0, hi = 20.0;
    for (int i = 0; i < 40; ++i) {
        pose.torso_pitch = 0.5 * (lo + hi);
        const double ahead = (mass_center_x(fig, pose) - target_x) * pose.facing;
        (ahead > 0.0 ? hi : lo) = pose.torso_pitch;
    }
    pose.torso_pitch = 0.5 * (lo + hi);
}

} // namespace detail

struct Sequence {
    std::string action;
    FigureParams fig; // effective parameters (height and frame size after fitting)
    int fps = 25;
    std::vector<SilhouetteMask> masks;
    std::vector<GroundTruth> truth;
};

// Draws the per-sequence variation (height, direction, phase, tempo) from
// fig.seed; fig.height is used as given when `randomize_height` is false.
inline Sequence generate_action(std::string_view action, FigureParams fig, int fps, double seconds,
                                bool randomize_height = true)
{
    if (!is_action(action))
        throw Error(ErrorCode::parameter, "unknown action '" + std::string(action) + "'");
    if (fps < 1 || !(seconds > 0.0))
        throw Error(ErrorCode::parameter, "fps and duration must be positive");
    detail::Rng rng(fig.seed * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull);
    if (randomize_height)
        fig.height = rng.uniform_int(64, 96);
    detail::Variation var;
    var.facing = rng.sign();
    var.phase = rng.uniform(0.0, detail::kTau);
    var.speed = rng.uniform(0.9, 1.1);
    var.amp = rng.uniform(0.9, 1.1);
    fig.validate();

    const int n = std::max(1, static_cast<int>(std::lround(fps * seconds)));
    std::vector<Pose> poses;
    poses.reserve(static_cast<std::size_t>(n));
    const double rest_x = detail::mass_center_x(fig, detail::guard_pose(var));
    for (int i = 0; i < n; ++i) {
        Pose p = action_pose(action, var, double(i) / fps);
        if (action == "kick" || action == "punch")
            detail::balance_torso(fig, p, rest_x);
        p.x *= var.facing * fig.height;
        poses.push_back(p);
    }

    // fit the motion horizontally; the frame grows when the default is too narrow
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : poses)
        for (const auto& c : pose_capsules(fig, p)) {
            lo = std::min({lo, c.a.x - c.r, c.b.x - c.r});
            hi = std::max({hi, c.a.x + c.r, c.b.x + c.r});
        }
    const int margin = std::max(4, fig.height / 10);
    const int needed = static_cast<int>(std::ceil(hi - lo)) + 2 * margin + 1;
    fig.frame_width = std::max(fig.frame_width, needed);
    const double shift = std::round((fig.frame_width - (hi - lo)) / 2.0 - lo);

    Sequence seq;
    seq.action = std::string(action);
    seq.fig = fig;
    seq.fps = fps;
    for (int i = 0; i < n; ++i) {
        Pose p = poses[static_cast<std::size_t>(i)];
        p.x += shift;
        auto [mask, gt] = render(fig, p);
        gt.frame = i;
        gt.action = seq.action;
        seq.masks.push_back(std::move(mask));
        seq.truth.push_back(std::move(gt));
    }
    return seq;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {
inline nlohmann::json pt(const PointD& p) { return nlohmann::json::array({p.x, p.y}); }
inline PointD pt(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
} // namespace detail

inline nlohmann::json truth_json(const GroundTruth& gt)
{
    using detail::pt;
    nlohmann::json feet = nlohmann::json::array();
    for (const auto& f : gt.feet)
        feet.push_back({{"heel", pt(f.heel)}, {"toe", pt(f.toe)}, {"bottom", f.bottom}, {"contact", f.contact}});
    nlohmann::json prints = nlohmann::json::array();
    for (const auto& f : gt.footprints)
        prints.push_back({{"heel", pt(f.heel)}, {"toe", pt(f.toe)}, {"contact", pt(f.contact)}});
    return {{"frame", gt.frame},
            {"action", gt.action},
            {"facing", gt.facing},
            {"height", gt.height},
            {"top", gt.top},
            {"bottom", gt.bottom},
            {"head_center", pt(gt.head_center)},
            {"shoulder_center", pt(gt.shoulder_center)},
            {"ha", gt.ha},
            {"hand_tips", {pt(gt.hand_tips[0]), pt(gt.hand_tips[1])}},
            {"feet", feet},
            {"footprints", prints},
            {"centroid", pt(gt.centroid)},
            {"sa", gt.sa}};
}

inline GroundTruth truth_from_json(const nlohmann::json& j)
{
    using detail::pt;
    GroundTruth gt;
    try {
        gt.frame = j.at("frame").get<int>();
        gt.action = j.at("action").get<std::string>();
        gt.facing = j.at("facing").get<int>();
        gt.height = j.at("height").get<double>();
        gt.top = j.at("top").get<double>();
        gt.bottom = j.at("bottom").get<double>();
        gt.head_center = pt(j.at("head_center"));
        gt.shoulder_center = pt(j.at("shoulder_center"));
        gt.ha = j.at("ha").get<double>();
        gt.hand_tips = {pt(j.at("hand_tips").at(0)), pt(j.at("hand_tips").at(1))};
        for (std::size_t s = 0; s < 2; ++s) {
            const auto& f = j.at("feet").at(s);
            gt.feet[s] = {pt(f.at("heel")), pt(f.at("toe")), f.at("bottom").get<double>(), f.at("contact").get<bool>()};
        }
        for (const auto& f : j.at("footprints"))
            gt.footprints.push_back({pt(f.at("heel")), pt(f.at("toe")), pt(f.at("contact"))});
        gt.centroid = pt(j.at("centroid"));
        gt.sa = j.at("sa").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse, std::string("ground truth sidecar: ") + e.what());
    }
    return gt;
}

inline std::string frame_stem(int i)
{
    std::ostringstream ss;
    ss << "frame_" << std::setw(4) << std::setfill('0') << i;
    return ss.str();
}

// Writes frame_NNNN.pgm plus a frame_NNNN.json ground-truth sidecar per frame.
inline void write_sequence(const Sequence& seq, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < seq.masks.size(); ++i) {
        const std::string stem = frame_stem(static_cast<int>(i));
        write_pgm(dir / (stem + ".pgm"), seq.masks[i]);
        std::ofstream js(dir / (stem + ".json"));
        if (!js)
            throw Error(ErrorCode::io, "cannot write sidecar in " + dir.string());
        js << truth_json(seq.truth[i]).dump() << '\n';
    }
}

// Ground-truth sidecars of a sequence directory in frame order; empty when
// the directory has none.
inline std::vector<GroundTruth> read_truth(const std::filesystem::path& dir)
{
    std::vector<GroundTruth> out;
    for (const auto& frame : list_sequence(dir)) {
        auto side = frame;
        side.replace_extension(".json");
        std::ifstream in(side);
        if (!in)
            return {};
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::parse, side.string() + ": " + e.what());
        }
        out.push_back(truth_from_json(j));
    }
    return out;
}

inline std::uint64_t sequence_seed(std::uint64_t base, std::size_t action_index, int n)
{
    std::uint64_t h = base ^ 0xD6E8FEB86659FD93ull;
    h = (h ^ (action_index + 1)) * 0x100000001B3ull;
    h = (h ^ static_cast<std::uint64_t>(n + 1)) * 0x9E3779B97F4A7C15ull;
    return h ^ (h >> 29);
}

// Generates `per_class` sequences of every action under `out` and writes
// manifest.txt (`<id> <label> <dir>` per line, dirs relative to `out`).
inline std::filesystem::path write_corpus(const std::filesystem::path& out, int per_class, int fps, double seconds,
                                          std::uint64_t base_seed = 1,
                                          std::span<const std::string_view> actions = kActions)
{
    std::filesystem::create_directories(out);
    const auto manifest = out / "manifest.txt";
    std::ofstream man(manifest);
    if (!man)
        throw Error(ErrorCode::io, "cannot write " + manifest.string());
    for (std::size_t a = 0; a < actions.size(); ++a) {
        const auto ai = static_cast<std::size_t>(std::find(kActions.begin(), kActions.end(), actions[a]) - kActions.begin());
        for (int n = 0; n < per_class; ++n) {
            FigureParams fig;
            fig.seed = sequence_seed(base_seed, ai, n);
            const auto seq = generate_action(actions[a], fig, fps, seconds);
            std::ostringstream id;
            id << actions[a] << '_' << std::setw(3) << std::setfill('0') << n;
            write_sequence(seq, out / id.str());
            man << id.str() << ' ' << actions[a] << ' ' << id.str() << '\n';
        }
    }
    return manifest;
}

} // namespace silhar::synth
