// Copyright 2026 The rlr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rlr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "rlr/error.hpp"
#include "rlr/kernels.hpp"

namespace rlr {

namespace {

using Field = std::optional<double> EvalReport::*;

struct NamedField {
  const char* key;
  Field field;
};

constexpr NamedField kFields[] = {
    {"top1", &EvalReport::top1},
    {"balanced_per_class_acc", &EvalReport::balanced_per_class_acc},
    {"per_image_acc_top5", &EvalReport::per_image_acc_top5},
    {"per_class_acc_top5", &EvalReport::per_class_acc_top5},
    {"per_image_map", &EvalReport::per_image_map},
    {"per_class_map", &EvalReport::per_class_map},
    {"rank1", &EvalReport::rank1},
    {"map_retrieval", &EvalReport::map_retrieval},
};

}  // namespace

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["task"] = task;
  for (const auto& f : kFields) {
    const auto& v = this->*f.field;
    j[f.key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  }
  j["evaluated"] = evaluated;
  j["skipped"] = skipped;
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.task = j.value("task", "");
  for (const auto& f : kFields) {
    if (j.contains(f.key) && !j[f.key].is_null()) r.*f.field = j[f.key].get<double>();
  }
  r.evaluated = j.value("evaluated", std::size_t{0});
  r.skipped = j.value("skipped", std::size_t{0});
  return r;
}

std::optional<double> EvalReport::get(std::string_view key) const {
  for (const auto& f : kFields) {
    if (key == f.key) return this->*f.field;
  }
  throw InvalidInput("unknown metric: " + std::string(key));
}

std::size_t argmax(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

std::vector<std::size_t> top_k(std::span<const double> row, std::size_t t) {
  std::vector<std::size_t> idx(row.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  t = std::min(t, row.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(t), idx.end(),
                    [&row](std::size_t a, std::size_t b) {
                      return row[a] > row[b] || (row[a] == row[b] && a < b);
                    });
  idx.resize(t);
  return idx;
}

double top1_accuracy(const Matrix& logits, std::span<const TargetLabels> labels) {
  if (logits.rows() != labels.size()) throw ShapeError("top1: logits and labels disagree");
  if (labels.empty()) throw InsufficientData("top1 on an empty evaluation set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    hits += argmax(logits.row(i)) == labels[i].label() ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

BalancedAccuracy balanced_accuracy(std::span<const std::vector<std::size_t>> predictions,
                                   std::span<const TargetLabels> labels, std::size_t num_classes) {
  if (predictions.size() != labels.size()) {
    throw ShapeError("balanced_accuracy: predictions and labels disagree");
  }
  std::vector<std::size_t> support(num_classes, 0);
  std::vector<std::size_t> hits(num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t c : labels[i].positives()) {
      if (c >= num_classes) throw InvalidInput("label outside [0, K)");
      ++support[c];
      if (std::find(predictions[i].begin(), predictions[i].end(), c) != predictions[i].end()) {
        ++hits[c];
      }
    }
  }
  BalancedAccuracy out;
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (support[c] == 0) {
      out.absent_classes.push_back(c);
      continue;
    }
    sum += static_cast<double>(hits[c]) / static_cast<double>(support[c]);
    ++present;
  }
  if (present == 0) throw InsufficientData("balanced accuracy undefined: no class has ground truth");
  out.value = sum / static_cast<double>(present);
  return out;
}

double average_precision(const std::vector<bool>& ranked_relevance) {
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranked_relevance.size(); ++i) {
    if (!ranked_relevance[i]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  if (hits == 0) throw InsufficientData("average precision undefined without a relevant item");
  return sum / static_cast<double>(hits);
}

namespace {

// Ranking of a score vector: descending score, ascending index.
std::vector<std::size_t> rank_descending(std::span<const double> scores) {
  return top_k(scores, scores.size());
}

}  // namespace

MultilabelReport multilabel_report(const Matrix& scores,
                                   std::span<const std::vector<std::size_t>> truth, std::size_t t) {
  if (scores.rows() != truth.size()) throw ShapeError("multilabel_report: rows disagree");
  if (t == 0) throw InvalidInput("multilabel_report needs t >= 1");
  const std::size_t K = scores.cols();
  MultilabelReport rep;

  std::vector<std::size_t> support(K, 0);
  std::vector<std::size_t> class_hits(K, 0);
  double acc_sum = 0.0;
  double ap_sum = 0.0;
  std::vector<bool> relevant(K);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i].empty()) {
      ++rep.skipped_images;
      continue;
    }
    std::fill(relevant.begin(), relevant.end(), false);
    for (std::size_t c : truth[i]) {
      if (c >= K) throw InvalidInput("label outside [0, K)");
      relevant[c] = true;
      ++support[c];
    }
    const auto top = top_k(scores.row(i), t);
    std::size_t overlap = 0;
    for (std::size_t c : top) {
      if (relevant[c]) {
        ++overlap;
        ++class_hits[c];
      }
    }
    acc_sum += static_cast<double>(overlap) /
               static_cast<double>(std::min(t, truth[i].size()));
    std::vector<bool> ranked(K);
    const auto order = rank_descending(scores.row(i));
    for (std::size_t r = 0; r < K; ++r) ranked[r] = relevant[order[r]];
    ap_sum += average_precision(ranked);
    ++rep.images;
  }
  if (rep.images == 0) throw InsufficientData("multilabel_report: no image has ground truth");
  rep.per_image_acc = acc_sum / static_cast<double>(rep.images);
  rep.per_image_map = ap_sum / static_cast<double>(rep.images);

  // Per class: rank the images by this class's score.
  std::vector<std::vector<bool>> is_positive(K, std::vector<bool>(truth.size(), false));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t c : truth[i]) is_positive[c][i] = true;
  }
  double class_acc = 0.0;
  double class_ap = 0.0;
  std::vector<double> column(truth.size());
  for (std::size_t c = 0; c < K; ++c) {
    if (support[c] == 0) continue;
    class_acc += static_cast<double>(class_hits[c]) / static_cast<double>(support[c]);
    for (std::size_t i = 0; i < truth.size(); ++i) column[i] = scores(i, c);
    const auto order = rank_descending(column);
    std::vector<bool> ranked(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) ranked[r] = is_positive[c][order[r]];
    class_ap += average_precision(ranked);
    ++rep.classes;
  }
  rep.per_class_acc = class_acc / static_cast<double>(rep.classes);
  rep.per_class_map = class_ap / static_cast<double>(rep.classes);
  return rep;
}

DistanceMetric parse_distance(std::string_view name) {
  if (name == "cosine") return DistanceMetric::kCosine;
  if (name == "euclidean") return DistanceMetric::kEuclidean;
  throw InvalidConfig("unknown distance metric: " + std::string(name));
}

double distance(std::span<const double> a, std::span<const double> b, DistanceMetric metric) {
  if (metric == DistanceMetric::kEuclidean) return kernels::squared_distance(a, b);
  const double na = std::sqrt(kernels::dot(a, a));
  const double nb = std::sqrt(kernels::dot(b, b));
  if (na == 0.0 || nb == 0.0) return 1.0;  // orthogonal to everything
  return 1.0 - kernels::dot(a, b) / (na * nb);
}

RetrievalReport retrieval_eval(const Matrix& query_emb, const Matrix& gallery_emb,
                               std::span<const std::size_t> query_ids,
                               std::span<const std::size_t> gallery_ids, DistanceMetric metric) {
  if (query_emb.rows() != query_ids.size() || gallery_emb.rows() != gallery_ids.size()) {
    throw ShapeError("retrieval_eval: embeddings and ids disagree");
  }
  if (query_emb.cols() != gallery_emb.cols()) throw ShapeError("retrieval_eval: embedding dims differ");
  RetrievalReport rep;
  double rank1 = 0.0;
  double ap = 0.0;
  std::vector<double> dist(gallery_emb.rows());
  std::vector<std::size_t> order(gallery_emb.rows());
  std::vector<bool> ranked(gallery_emb.rows());
  for (std::size_t q = 0; q < query_emb.rows(); ++q) {
    const bool has_match =
        std::find(gallery_ids.begin(), gallery_ids.end(), query_ids[q]) != gallery_ids.end();
    if (!has_match) {
      ++rep.skipped;
      continue;
    }
    for (std::size_t g = 0; g < dist.size(); ++g) {
      dist[g] = distance(query_emb.row(q), gallery_emb.row(g), metric);
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&dist](std::size_t a, std::size_t b) {
      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
    });
    for (std::size_t r = 0; r < order.size(); ++r) ranked[r] = gallery_ids[order[r]] == query_ids[q];
    rank1 += ranked.front() ? 1.0 : 0.0;
    ap += average_precision(ranked);
    ++rep.evaluated;
  }
  if (rep.evaluated == 0) throw InsufficientData("retrieval_eval: no query has a gallery match");
  rep.rank1 = rank1 / static_cast<double>(rep.evaluated);
  rep.map = ap / static_cast<double>(rep.evaluated);
  return rep;
}

namespace {

double normal_two_sided(double w_plus, std::size_t n, std::span<const std::size_t> tie_sizes) {
  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
  for (std::size_t t : tie_sizes) {
    const double tt = static_cast<double>(t);
    var -= (tt * tt * tt - tt) / 48.0;
  }
  if (!(var > 0.0)) return 1.0;
  const double z = std::max(0.0, std::abs(w_plus - mean) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

// Doubled ranks are integers even with average ranks, so the enumeration
// compares exactly.
double exact_two_sided(std::span<const std::int64_t> doubled_ranks, std::int64_t doubled_w_plus) {
  const std::size_t n = doubled_ranks.size();
  const std::int64_t total = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), std::int64_t{0});
  const std::int64_t observed = std::abs(2 * doubled_w_plus - total);
  const std::uint64_t patterns = std::uint64_t{1} << n;
  std::uint64_t extreme = 0;
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    std::int64_t w = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1U) w += doubled_ranks[i];
    }
    if (std::abs(2 * w - total) >= observed) ++extreme;
  }
  return static_cast<double>(extreme) / static_cast<double>(patterns);
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    WilcoxonMethod method) {
  if (a.size() != b.size()) throw InvalidInput("wilcoxon: paired samples differ in length");
  WilcoxonResult res;
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (!std::isfinite(d)) throw InvalidInput("wilcoxon: non-finite difference");
    if (d == 0.0) {
      ++res.zeros_dropped;
    } else {
      diffs.push_back(d);
    }
  }
  res.n = diffs.size();
  if (res.n < 5) {
    throw InsufficientData("wilcoxon: " + std::to_string(res.n) +
                           " non-zero differences, need at least 5");
  }
  std::vector<std::size_t> order(res.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&diffs](std::size_t x, std::size_t y) {
    return std::abs(diffs[x]) < std::abs(diffs[y]);
  });
  std::vector<std::int64_t> doubled(res.n);
  std::vector<std::size_t> tie_sizes;
  for (std::size_t i = 0; i < res.n;) {
    std::size_t j = i;
    while (j + 1 < res.n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
    // Ranks i+1 .. j+1 share their average; doubled that is i + j + 2.
    for (std::size_t k = i; k <= j; ++k) doubled[order[k]] = static_cast<std::int64_t>(i + j + 2);
    if (j > i) tie_sizes.push_back(j - i + 1);
    i = j + 1;
  }
  std::int64_t doubled_plus = 0;
  std::int64_t doubled_minus = 0;
  for (std::size_t i = 0; i < res.n; ++i) (diffs[i] > 0 ? doubled_plus : doubled_minus) += doubled[i];
  res.w_plus = static_cast<double>(doubled_plus) / 2.0;
  res.w_minus = static_cast<double>(doubled_minus) / 2.0;
  res.statistic = std::min(res.w_plus, res.w_minus);

  const bool exact = method == WilcoxonMethod::kExact ||
                     (method == WilcoxonMethod::kAuto && res.n <= 20);
  if (exact && res.n > 30) throw InvalidInput("wilcoxon: exact enumeration limited to n <= 30");
  res.exact = exact;
  res.p_value = exact ? exact_two_sided(doubled, doubled_plus)
                      : normal_two_sided(res.w_plus, res.n, tie_sizes);
  return res;
}

}  // namespace rlr
