#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "camref/image.hpp"
#include "camref/perimeter_fit.hpp"

namespace camref {

// C x C pixel counts, counts(gt, pred). Ignore pixels never enter.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int num_classes);

    int num_classes() const { return num_classes_; }
    uint64_t at(int gt, int pred) const { return counts_[size_t(gt) * num_classes_ + pred]; }
    uint64_t& at(int gt, int pred) { return counts_[size_t(gt) * num_classes_ + pred]; }
    uint64_t total() const;

    void add(const ConfusionMatrix& other);

private:
    int num_classes_;
    std::vector<uint64_t> counts_;
};

// Adds one gt/pred pair into the matrix. Pixels whose gt or pred is the
// ignore value are skipped; any other label >= C is an error.
void accumulate(ConfusionMatrix& cm, const LabelMap& gt, const LabelMap& pred);

struct IouResult {
    std::vector<double> per_class;  // NaN marks classes with empty denominator
    double miou = 0;
    int defined_classes = 0;
};

// IoU_i = p_ii / (sum_j p_ij + sum_j p_ji - p_ii); undefined classes are
// excluded from the mean. Throws when every class is undefined.
IouResult miou(const ConfusionMatrix& cm);

struct OveractivationResult {
    double m_fp = 0;
    double m_fn = 0;
    int excluded_classes = 0;  // foreground classes with TP == 0
};

// m_FP = mean over foreground classes of FP_c/TP_c, m_FN analogous. The
// background class 0 is excluded. Classes with TP_c == 0 contribute the
// sentinel when given, otherwise they are dropped from the mean. Throws when
// no foreground class has a true positive and no sentinel is set.
OveractivationResult overactivation(const ConfusionMatrix& cm,
                                    std::optional<double> tp_zero_sentinel = std::nullopt);

struct Decomposition {
    double epsilon = 0;  // |pred & gt| / |gt|
    uint64_t fp_count = 0;
    bool gt_empty = false;
};

Decomposition decompose_prediction(const BinaryMask& gt, const BinaryMask& pred);

struct MetricsReport {
    std::vector<std::string> class_names;
    std::vector<double> per_class_iou;
    double miou = 0;
    double m_fp = 0;
    double m_fn = 0;
    // Per-image Eq.-style decomposition means; filled by batch drivers.
    std::optional<double> epsilon_mean;
    std::optional<double> fp_count_mean;
};

// Per-class report from a pooled matrix. Names must cover all classes.
MetricsReport build_report(const ConfusionMatrix& cm, const std::vector<std::string>& class_names);

std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const std::string& json_text);

// Aligned text table in percent: classes as columns, mIoU last.
std::string format_report_table(const MetricsReport& report);

}  // namespace camref
