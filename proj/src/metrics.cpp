#include "camref/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace camref {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : num_classes_(num_classes), counts_(size_t(num_classes) * size_t(num_classes), 0) {
    if (num_classes < 1) throw std::invalid_argument("ConfusionMatrix: need at least one class");
}

uint64_t ConfusionMatrix::total() const {
    uint64_t t = 0;
    for (uint64_t c : counts_) t += c;
    return t;
}

void ConfusionMatrix::add(const ConfusionMatrix& other) {
    if (other.num_classes_ != num_classes_)
        throw std::invalid_argument("ConfusionMatrix::add: class count mismatch");
    for (size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

void accumulate(ConfusionMatrix& cm, const LabelMap& gt, const LabelMap& pred) {
    if (gt.width != pred.width || gt.height != pred.height)
        throw std::invalid_argument("accumulate: gt/pred dimensions mismatch");
    const int c = cm.num_classes();
    for (size_t i = 0; i < gt.labels.size(); ++i) {
        uint8_t g = gt.labels[i], p = pred.labels[i];
        if (g == LabelMap::kIgnore || p == LabelMap::kIgnore) continue;
        if (g >= c) throw std::out_of_range("accumulate: gt label " + std::to_string(int(g)) +
                                            " out of range for C=" + std::to_string(c));
        if (p >= c) throw std::out_of_range("accumulate: pred label " + std::to_string(int(p)) +
                                            " out of range for C=" + std::to_string(c));
        ++cm.at(g, p);
    }
}

IouResult miou(const ConfusionMatrix& cm) {
    const int c = cm.num_classes();
    IouResult r;
    r.per_class.assign(size_t(c), std::numeric_limits<double>::quiet_NaN());
    double sum = 0;
    for (int i = 0; i < c; ++i) {
        uint64_t row = 0, col = 0;
        for (int j = 0; j < c; ++j) {
            row += cm.at(i, j);
            col += cm.at(j, i);
        }
        uint64_t denom = row + col - cm.at(i, i);
        if (denom == 0) continue;
        r.per_class[size_t(i)] = double(cm.at(i, i)) / double(denom);
        sum += r.per_class[size_t(i)];
        ++r.defined_classes;
    }
    if (r.defined_classes == 0) throw std::runtime_error("miou: all classes undefined (empty matrix)");
    r.miou = sum / double(r.defined_classes);
    return r;
}

OveractivationResult overactivation(const ConfusionMatrix& cm,
                                    std::optional<double> tp_zero_sentinel) {
    const int c = cm.num_classes();
    if (c < 2) throw std::invalid_argument("overactivation: need a foreground class");
    OveractivationResult r;
    double fp_sum = 0, fn_sum = 0;
    int used = 0;
    for (int k = 1; k < c; ++k) {
        uint64_t tp = cm.at(k, k), fp = 0, fn = 0;
        for (int j = 0; j < c; ++j) {
            if (j == k) continue;
            fp += cm.at(j, k);
            fn += cm.at(k, j);
        }
        if (tp == 0) {
            ++r.excluded_classes;
            if (tp_zero_sentinel) {
                fp_sum += *tp_zero_sentinel;
                fn_sum += *tp_zero_sentinel;
                ++used;
            }
            continue;
        }
        fp_sum += double(fp) / double(tp);
        fn_sum += double(fn) / double(tp);
        ++used;
    }
    if (used == 0) throw std::runtime_error("overactivation: no foreground class has true positives");
    r.m_fp = fp_sum / double(used);
    r.m_fn = fn_sum / double(used);
    return r;
}

Decomposition decompose_prediction(const BinaryMask& gt, const BinaryMask& pred) {
    if (gt.width != pred.width || gt.height != pred.height)
        throw std::invalid_argument("decompose_prediction: dimensions mismatch");
    uint64_t gt_count = 0, inter = 0, fp = 0;
    for (size_t i = 0; i < gt.bits.size(); ++i) {
        if (gt.bits[i]) {
            ++gt_count;
            if (pred.bits[i]) ++inter;
        } else if (pred.bits[i]) {
            ++fp;
        }
    }
    Decomposition d;
    d.fp_count = fp;
    d.gt_empty = gt_count == 0;
    d.epsilon = d.gt_empty ? 0.0 : double(inter) / double(gt_count);
    return d;
}

MetricsReport build_report(const ConfusionMatrix& cm, const std::vector<std::string>& class_names) {
    if (int(class_names.size()) != cm.num_classes())
        throw std::invalid_argument("build_report: " + std::to_string(class_names.size()) +
                                    " names for " + std::to_string(cm.num_classes()) + " classes");
    IouResult iou = miou(cm);
    OveractivationResult over = overactivation(cm);
    MetricsReport rep;
    rep.class_names = class_names;
    rep.per_class_iou = iou.per_class;
    rep.miou = iou.miou;
    rep.m_fp = over.m_fp;
    rep.m_fn = over.m_fn;
    return rep;
}

std::string report_to_json(const MetricsReport& report) {
    nlohmann::json j;
    j["class_names"] = report.class_names;
    nlohmann::json ious = nlohmann::json::array();
    for (double v : report.per_class_iou) {
        if (std::isnan(v))
            ious.push_back(nullptr);
        else
            ious.push_back(v);
    }
    j["per_class_iou"] = std::move(ious);
    j["miou"] = report.miou;
    j["m_fp"] = report.m_fp;
    j["m_fn"] = report.m_fn;
    if (report.epsilon_mean) j["epsilon_mean"] = *report.epsilon_mean;
    if (report.fp_count_mean) j["fp_count_mean"] = *report.fp_count_mean;
    return j.dump(2) + "\n";
}

MetricsReport report_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    MetricsReport rep;
    rep.class_names = j.at("class_names").get<std::vector<std::string>>();
    for (const auto& v : j.at("per_class_iou"))
        rep.per_class_iou.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                : v.get<double>());
    rep.miou = j.at("miou").get<double>();
    rep.m_fp = j.at("m_fp").get<double>();
    rep.m_fn = j.at("m_fn").get<double>();
    if (j.contains("epsilon_mean")) rep.epsilon_mean = j["epsilon_mean"].get<double>();
    if (j.contains("fp_count_mean")) rep.fp_count_mean = j["fp_count_mean"].get<double>();
    return rep;
}

std::string format_report_table(const MetricsReport& report) {
    std::ostringstream head, row;
    auto cell = [](std::ostringstream& os, const std::string& text, size_t width) {
        os << std::setw(int(width)) << text;
    };
    auto pct = [](double v) {
        if (std::isnan(v)) return std::string("-");
        std::ostringstream os;
        os << std::fixed << std::setprecision(1) << v * 100.0;
        return os.str();
    };
    for (size_t i = 0; i < report.class_names.size(); ++i) {
        size_t w = std::max<size_t>(report.class_names[i].size(), 5) + 2;
        cell(head, report.class_names[i], w);
        cell(row, pct(report.per_class_iou[i]), w);
    }
    cell(head, "mIoU", 7);
    cell(row, pct(report.miou), 7);
    std::ostringstream out;
    out << head.str() << "\n" << row.str() << "\n";
    out << std::fixed << std::setprecision(4) << "m_FP " << report.m_fp << "  m_FN " << report.m_fn
        << "\n";
    if (report.epsilon_mean && report.fp_count_mean)
        out << std::fixed << std::setprecision(4) << "epsilon_mean " << *report.epsilon_mean
            << "  fp_count_mean " << *report.fp_count_mean << "\n";
    return out.str();
}

}  // namespace camref
