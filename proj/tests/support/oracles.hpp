#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Written as plain nested loops; they share no code with the library
// kernels they check.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "adjseg/labels.hpp"
#include "adjseg/loss_metrics.hpp"
#include "adjseg/network.hpp"
#include "adjseg/tensor.hpp"

namespace oracle {

inline adjseg::FeatureField random_field(std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed,
                                         double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  adjseg::FeatureField f(c, h, w);
  for (double& v : f.values()) v = n(rng);
  return f;
}

inline adjseg::ConvKernelStack random_kernel(std::size_t out, std::size_t in, std::size_t kh, std::size_t kw,
                                             std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  adjseg::ConvKernelStack k(out, in, kh, kw);
  for (double& v : k.weights()) v = n(rng);
  return k;
}

// Same-size zero-padded cross-correlation by direct summation.
inline adjseg::FeatureField conv(const adjseg::FeatureField& x, const adjseg::ConvKernelStack& k) {
  const long h = static_cast<long>(x.height()), w = static_cast<long>(x.width());
  const long ph = static_cast<long>(k.kernel_height() / 2), pw = static_cast<long>(k.kernel_width() / 2);
  adjseg::FeatureField out(k.out_channels(), x.height(), x.width());
  for (std::size_t o = 0; o < k.out_channels(); ++o)
    for (long i = 0; i < h; ++i)
      for (long j = 0; j < w; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < k.in_channels(); ++c)
          for (std::size_t dy = 0; dy < k.kernel_height(); ++dy)
            for (std::size_t dx = 0; dx < k.kernel_width(); ++dx) {
              const long si = i + static_cast<long>(dy) - ph, sj = j + static_cast<long>(dx) - pw;
              if (si < 0 || si >= h || sj < 0 || sj >= w) continue;
              s += k.at(o, c, dy, dx) * x.at(c, static_cast<std::size_t>(si), static_cast<std::size_t>(sj));
            }
        out.at(o, static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = s;
      }
  return out;
}

inline std::vector<adjseg::LabeledLogits> select(const adjseg::FeatureField& y, const adjseg::SelectionSet& q) {
  std::vector<adjseg::LabeledLogits> out;
  for (const auto& e : q.entries()) {
    adjseg::LabeledLogits l;
    l.class_id = e.class_id;
    for (std::size_t c = 0; c < y.channels(); ++c) l.logits.push_back(y.at(c, e.row, e.col));
    out.push_back(l);
  }
  return out;
}

// Per-pixel argmax by comparing every pair; first maximum wins.
inline adjseg::ClassMap argmax(const adjseg::FeatureField& y) {
  adjseg::ClassMap m(y.height(), y.width(), 0);
  for (std::size_t i = 0; i < y.height(); ++i)
    for (std::size_t j = 0; j < y.width(); ++j)
      for (std::size_t c = 0; c < y.channels(); ++c) {
        bool best = true;
        for (std::size_t d = 0; d < y.channels(); ++d) {
          if (d < c && y.at(d, i, j) >= y.at(c, i, j)) best = false;
          if (d > c && y.at(d, i, j) > y.at(c, i, j)) best = false;
        }
        if (best) {
          m.at(i, j) = static_cast<int>(c);
          break;
        }
      }
  return m;
}

struct IoUCounts {
  std::vector<std::size_t> inter, uni;
  double miou = 0.0;
};

// Counts each class by scanning the maps once per class.
inline IoUCounts iou(const adjseg::ClassMap& pred, const adjseg::ClassMap& truth, std::size_t k) {
  IoUCounts r{std::vector<std::size_t>(k, 0), std::vector<std::size_t>(k, 0), 0.0};
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t cls = 0; cls < k; ++cls) {
    const int c = static_cast<int>(cls);
    for (std::size_t i = 0; i < truth.height(); ++i)
      for (std::size_t j = 0; j < truth.width(); ++j) {
        if (truth.at(i, j) == adjseg::ClassMap::kUnlabeled) continue;
        const bool p = pred.at(i, j) == c, t = truth.at(i, j) == c;
        if (p && t) ++r.inter[cls];
        if (p || t) ++r.uni[cls];
      }
    if (r.uni[cls] > 0) {
      sum += static_cast<double>(r.inter[cls]) / static_cast<double>(r.uni[cls]);
      ++defined;
    }
  }
  r.miou = defined ? sum / static_cast<double>(defined) : 0.0;
  return r;
}

inline double smoother(const adjseg::FeatureField& y) {
  double s = 0.0;
  for (std::size_t c = 0; c < y.channels(); ++c)
    for (std::size_t i = 0; i < y.height(); ++i)
      for (std::size_t j = 0; j < y.width(); ++j) {
        if (i + 1 < y.height()) {
          const double d = y.at(c, i + 1, j) - y.at(c, i, j);
          s += 0.5 * d * d;
        }
        if (j + 1 < y.width()) {
          const double d = y.at(c, i, j + 1) - y.at(c, i, j);
          s += 0.5 * d * d;
        }
      }
  return s;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / (std::abs(b) + 1e-12); }

inline double max_abs_diff(const adjseg::FeatureField& a, const adjseg::FeatureField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
  return m;
}

}  // namespace oracle
