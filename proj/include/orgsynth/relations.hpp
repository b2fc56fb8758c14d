#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "orgsynth/boxquery.hpp"
#include "orgsynth/error.hpp"
#include "orgsynth/obb.hpp"

namespace orgsynth {

enum class RelationType : int {
    SupportedBy = 0,
    AttachedTo = 1,
    LeftOf = 2,
    RightOf = 3,
    Nearby = 4,
    Faces = 5,
    OrientedWith = 6,
    None = 7,
};

inline constexpr int kRelationCount = 8;

inline const char* relation_name(RelationType r) {
    switch (r) {
        case RelationType::SupportedBy: return "supported_by";
        case RelationType::AttachedTo: return "attached_to";
        case RelationType::LeftOf: return "left_of";
        case RelationType::RightOf: return "right_of";
        case RelationType::Nearby: return "nearby";
        case RelationType::Faces: return "faces";
        case RelationType::OrientedWith: return "oriented_with";
        case RelationType::None: return "none";
    }
    return "none";
}

inline RelationType parse_relation(const std::string& s) {
    for (int i = 0; i < kRelationCount; ++i) {
        auto r = static_cast<RelationType>(i);
        if (s == relation_name(r)) return r;
    }
    throw Error(ErrorCode::UnsupportedRelation, s);
}

// Decision thresholds for the pairwise predicates.  Ratio-valued gates live
// in (0, 1]; cosine gates in (-1, 1); t_near is a metric distance.
struct ThresholdConfig {
    double tau = 0.5;         // footprint overlap gate (supported_by, oriented_with)
    double epsilon = 0.05;    // vertical gap bound [m]
    double tau_att = 0.3;     // attachment volume-ratio gate
    double tau_dir = 0.9;     // attachment axis-alignment gate
    double tau_left = 0.6;    // left_of volume-fraction gate
    double tau_right = 0.6;   // right_of volume-fraction gate
    double t_near = 1.0;      // nearby distance bound [m] (5.0 for outdoor scenes)
    double tau_face = 0.8;    // facing cosine gate
    double epsilon_pp = 0.9;  // normal-alignment cosine gate (oriented_with)
    std::size_t knn_k = 10;   // neighborhood size for statistics collection

    void validate() const {
        auto ratio = [](double v) { return v > 0.0 && v <= 1.0; };
        auto cosine = [](double v) { return v > -1.0 && v < 1.0; };
        if (!ratio(tau) || !ratio(tau_att) || !ratio(tau_left) || !ratio(tau_right))
            throw Error(ErrorCode::InvalidConfig, "ratio thresholds must be in (0, 1]");
        if (!cosine(tau_dir) || !cosine(tau_face) || !cosine(epsilon_pp))
            throw Error(ErrorCode::InvalidConfig, "cosine thresholds must be in (-1, 1)");
        if (epsilon < 0.0 || t_near <= 0.0)
            throw Error(ErrorCode::InvalidConfig, "distance thresholds must be positive");
        if (knn_k < 1) throw Error(ErrorCode::InvalidConfig, "knn_k must be >= 1");
    }
};

// All continuous quantities feeding the predicates, exposed for diagnostics
// and for the loss terms that share them.
struct PairMeasurements {
    double overlap_xy = 0.0;
    double delta_z = 0.0;
    double volume_ratio = 0.0;     // |A intersect B| / min(|A|, |B|)
    double axis_alignment = 0.0;   // |cos(principal axes)|
    double left_fraction = 0.0;
    double right_fraction = 0.0;
    double distance = 0.0;
    double facing_cos = -1.0;      // cos(front(A), c(B) - c(A))
    double normal_cos = 0.0;       // cos(up_normal(A), up_normal(B))
};

inline PairMeasurements measure_pair(const OrientedBoundingBox& a, const OrientedBoundingBox& b) {
    PairMeasurements m;
    m.overlap_xy = overlap_xy(a, b);
    m.delta_z = delta_z(a, b);
    const double min_vol = std::min(a.volume(), b.volume());
    m.volume_ratio = min_vol > 0.0 ? intersection_volume(a, b) / min_vol : 0.0;
    m.axis_alignment = std::abs(dot(a.axes[0], b.axes[0]));
    m.left_fraction = half_space_fraction(a, b, HalfSpaceSide::Left);
    m.right_fraction = half_space_fraction(a, b, HalfSpaceSide::Right);
    m.distance = min_distance(a, b);
    const Vec3 to_b = b.center - a.center;
    m.facing_cos = norm(to_b) > 1e-12 ? dot(normalized(a.front), normalized(to_b)) : -1.0;
    m.normal_cos = dot(normalized(a.up_normal), normalized(b.up_normal));
    return m;
}

// The seven directed predicates of subject a against object b.  Indexed by
// RelationType; None is always false here.
using PredicateSet = std::array<bool, kRelationCount>;

inline PredicateSet evaluate_predicates(const PairMeasurements& m, const ThresholdConfig& cfg) {
    PredicateSet p{};
    p[int(RelationType::SupportedBy)] = m.overlap_xy > cfg.tau && m.delta_z <= cfg.epsilon;
    p[int(RelationType::AttachedTo)] = m.volume_ratio > cfg.tau_att || m.axis_alignment > cfg.tau_dir;
    p[int(RelationType::LeftOf)] = m.left_fraction > cfg.tau_left;
    p[int(RelationType::RightOf)] = m.right_fraction > cfg.tau_right;
    p[int(RelationType::Nearby)] = m.distance <= cfg.t_near;
    p[int(RelationType::Faces)] = m.facing_cos > cfg.tau_face;
    p[int(RelationType::OrientedWith)] = m.overlap_xy > cfg.tau && m.normal_cos > cfg.epsilon_pp;
    return p;
}

inline PredicateSet evaluate_predicates(const OrientedBoundingBox& a, const OrientedBoundingBox& b,
                                        const ThresholdConfig& cfg) {
    return evaluate_predicates(measure_pair(a, b), cfg);
}

// Single-label classification: the highest-priority true predicate.
// Priority: SupportedBy > AttachedTo > Faces > OrientedWith > LeftOf >
// RightOf > Nearby; None when nothing fires.
inline RelationType classify_pair(const PredicateSet& p) {
    static constexpr RelationType priority[] = {
        RelationType::SupportedBy, RelationType::AttachedTo,  RelationType::Faces,
        RelationType::OrientedWith, RelationType::LeftOf,     RelationType::RightOf,
        RelationType::Nearby,
    };
    for (RelationType r : priority)
        if (p[int(r)]) return r;
    return RelationType::None;
}

// Equivalent to classify_pair(evaluate_predicates(a, b, cfg)) but stops at
// the first predicate that fires, skipping the measurements later predicates
// would need.
inline RelationType classify_pair(const OrientedBoundingBox& a, const OrientedBoundingBox& b,
                                  const ThresholdConfig& cfg) {
    const double oxy = overlap_xy(a, b);
    if (oxy > cfg.tau && delta_z(a, b) <= cfg.epsilon) return RelationType::SupportedBy;
    const double min_vol = std::min(a.volume(), b.volume());
    const double ratio = min_vol > 0.0 ? intersection_volume(a, b) / min_vol : 0.0;
    if (ratio > cfg.tau_att || std::abs(dot(a.axes[0], b.axes[0])) > cfg.tau_dir)
        return RelationType::AttachedTo;
    const Vec3 to_b = b.center - a.center;
    const double facing =
        norm(to_b) > 1e-12 ? dot(normalized(a.front), normalized(to_b)) : -1.0;
    if (facing > cfg.tau_face) return RelationType::Faces;
    if (oxy > cfg.tau && dot(normalized(a.up_normal), normalized(b.up_normal)) > cfg.epsilon_pp)
        return RelationType::OrientedWith;
    if (half_space_fraction(a, b, HalfSpaceSide::Left) > cfg.tau_left) return RelationType::LeftOf;
    if (half_space_fraction(a, b, HalfSpaceSide::Right) > cfg.tau_right) return RelationType::RightOf;
    if (min_distance(a, b) <= cfg.t_near) return RelationType::Nearby;
    return RelationType::None;
}

}  // namespace orgsynth
