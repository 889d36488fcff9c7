// SPDX-License-Identifier: Apache-2.0
//
// Patch-level and cluster-level evaluation metrics. Zero-denominator metrics
// come back as empty optionals and are excluded from aggregates.

#pragma once

#include <array>
#include <optional>
#include <string>

#include "vinescan/errors.hpp"

namespace vinescan {

enum class ClassLabel : std::uint8_t {
    Background = 0,
    Leaves = 1,
    Wood = 2,
    Pole = 3,
    Bunch = 4,
};
constexpr int kNumClasses = 5;

inline const char* class_name(ClassLabel c) {
    switch (c) {
        case ClassLabel::Background: return "background";
        case ClassLabel::Leaves: return "leaves";
        case ClassLabel::Wood: return "wood";
        case ClassLabel::Pole: return "pole";
        default: return "bunch";
    }
}

struct ClassConfusion {
    long tp = 0, fp = 0, tn = 0, fn = 0;

    long total() const { return tp + fp + tn + fn; }
};

struct ConfusionCounts {
    std::array<ClassConfusion, kNumClasses> per_class;

    void validate() const {
        const long t = per_class[0].total();
        for (const auto& c : per_class) {
            if (c.tp < 0 || c.fp < 0 || c.tn < 0 || c.fn < 0)
                throw ValidationError("confusion counts: negative entry");
            if (c.total() != t)
                throw ValidationError("confusion counts: per-class totals differ");
        }
    }
};

struct PatchMetrics {
    std::optional<double> acc;
    std::optional<double> bacc;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> tnr;
};

inline PatchMetrics patch_metrics(const ClassConfusion& c) {
    if (c.tp < 0 || c.fp < 0 || c.tn < 0 || c.fn < 0)
        throw ValidationError("patch_metrics: negative count");
    PatchMetrics m;
    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
    if (c.total() > 0) m.acc = (tp + tn) / (tp + fp + tn + fn);
    if (c.tp + c.fn > 0) m.recall = tp / (tp + fn);
    if (c.tn + c.fp > 0) m.tnr = tn / (tn + fp);
    if (m.recall && m.tnr) m.bacc = (*m.recall + *m.tnr) / 2.0;
    if (c.tp + c.fp > 0) m.precision = tp / (tp + fp);
    return m;
}

struct ClusterCounts {
    long gc = 0;     // total grape clusters
    long t_gc = 0;   // true detections
    long f_gc = 0;   // wrong detections
    long n_gc = 0;   // missed clusters

    void validate() const {
        if (gc < 0 || t_gc < 0 || f_gc < 0 || n_gc < 0)
            throw ValidationError("cluster counts: negative entry");
        if (t_gc + n_gc != gc)
            throw ValidationError("cluster counts: T + N must equal GC");
    }
};

struct ClusterMetrics {
    std::optional<double> acc;
    std::optional<double> precision;
    std::optional<double> recall;
};

inline ClusterMetrics cluster_metrics(const ClusterCounts& c) {
    c.validate();
    ClusterMetrics m;
    const double t = static_cast<double>(c.t_gc);
    if (c.gc > 0) m.acc = t / static_cast<double>(c.gc);
    if (c.t_gc + c.f_gc > 0) m.precision = t / static_cast<double>(c.t_gc + c.f_gc);
    if (c.t_gc + c.n_gc > 0) m.recall = t / static_cast<double>(c.t_gc + c.n_gc);
    return m;
}

}  // namespace vinescan
