#include "adjseg/loss_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "adjseg/errors.hpp"

namespace adjseg {

XentResult softmax_xent(const std::vector<LabeledLogits>& selected) {
  if (selected.empty()) throw ParameterError("softmax_xent: empty selection");
  const double inv_count = 1.0 / static_cast<double>(selected.size());
  XentResult r;
  r.grads.reserve(selected.size());
  double total = 0.0;
  for (const auto& item : selected) {
    const auto& z = item.logits;
    if (item.class_id < 0 || static_cast<std::size_t>(item.class_id) >= z.size()) {
      throw DimensionError("softmax_xent: class id " + std::to_string(item.class_id) + " outside logit vector");
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - zmax);
    const double log_denom = std::log(denom);
    total += -(z[static_cast<std::size_t>(item.class_id)] - zmax - log_denom);

    std::vector<double> g(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double p = std::exp(z[k] - zmax - log_denom);
      g[k] = (p - (static_cast<int>(k) == item.class_id ? 1.0 : 0.0)) * inv_count;
    }
    r.grads.push_back(std::move(g));
  }
  r.value = total * inv_count;
  return r;
}

IoUReport iou(const ClassMap& pred, const ClassMap& truth, std::size_t num_classes) {
  if (pred.height() != truth.height() || pred.width() != truth.width()) {
    throw DimensionError("iou: prediction and truth differ in size");
  }
  std::vector<std::size_t> inter(num_classes, 0), uni(num_classes, 0);
  const auto& p = pred.ids();
  const auto& t = truth.ids();
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] == ClassMap::kUnlabeled) continue;
    const bool p_ok = p[k] >= 0 && static_cast<std::size_t>(p[k]) < num_classes;
    const bool t_ok = static_cast<std::size_t>(t[k]) < num_classes;
    if (p_ok && t_ok && p[k] == t[k]) {
      ++inter[static_cast<std::size_t>(t[k])];
      ++uni[static_cast<std::size_t>(t[k])];
      continue;
    }
    if (p_ok) ++uni[static_cast<std::size_t>(p[k])];
    if (t_ok) ++uni[static_cast<std::size_t>(t[k])];
  }

  IoUReport report;
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    ClassIoU row{static_cast<int>(c), inter[c], uni[c], std::nullopt};
    if (uni[c] > 0) {
      row.iou = static_cast<double>(inter[c]) / static_cast<double>(uni[c]);
      sum += *row.iou;
      ++defined;
    }
    report.per_class.push_back(row);
  }
  report.miou = defined ? sum / static_cast<double>(defined) : 0.0;
  return report;
}

void write_iou_csv(const std::filesystem::path& path, double alpha, const IoUReport& report) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << "alpha,class_id,iou,miou\n";
  char buf[128];
  for (const auto& row : report.per_class) {
    if (row.iou) {
      std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g,%.17g\n", alpha, row.class_id, *row.iou, report.miou);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,%d,nan,%.17g\n", alpha, row.class_id, report.miou);
    }
    out << buf;
  }
}

}  // namespace adjseg
