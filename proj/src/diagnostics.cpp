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

#include "rlr/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rlr/error.hpp"
#include "rlr/text.hpp"

namespace rlr {

double gradient_ratio(double mean_pos_norm, double mean_neg_norm) {
  return mean_pos_norm / (mean_neg_norm + kGradRatioEps);
}

const TraceRecord& record_step(TrainingTrace& trace, std::span<const LossOutput> batch,
                               const StepContext& ctx) {
  if (batch.empty()) throw InvalidInput("record_step needs a non-empty batch");
  if (!trace.records.empty() && ctx.step <= trace.records.back().step) {
    throw InvalidInput("trace steps must be strictly increasing");
  }
  TraceRecord rec;
  rec.step = ctx.step;
  rec.epoch = ctx.epoch;
  rec.train_batch_acc = ctx.train_batch_acc;
  rec.lr = ctx.lr;
  double total = 0.0;
  double pos = 0.0;
  double neg = 0.0;
  double pos_norm = 0.0;
  double neg_norm = 0.0;
  for (const auto& out : batch) {
    total += out.loss;
    pos += out.pos_loss;
    neg += out.neg_loss;
    pos_norm += out.pos_grad_norm;
    neg_norm += out.neg_grad_norm;
  }
  const double n = static_cast<double>(batch.size());
  rec.total_loss = total / n;
  rec.pos_loss = pos / n;
  rec.neg_loss = neg / n;
  rec.grad_ratio = gradient_ratio(pos_norm / n, neg_norm / n);
  rec.flagged = !(std::isfinite(rec.total_loss) && std::isfinite(rec.pos_loss) &&
                  std::isfinite(rec.neg_loss) && std::isfinite(rec.grad_ratio));
  trace.records.push_back(rec);
  return trace.records.back();
}

std::string trace_to_csv(const TrainingTrace& trace) {
  std::string out = kTraceCsvHeader;
  out += '\n';
  for (const auto& r : trace.records) {
    out += std::to_string(r.step) + ',' + std::to_string(r.epoch) + ',' +
           text::format_double(r.total_loss) + ',' + text::format_double(r.pos_loss) + ',' +
           text::format_double(r.neg_loss) + ',' + text::format_double(r.grad_ratio) + ',' +
           text::format_double(r.train_batch_acc) + ',' + text::format_double(r.lr) + '\n';
  }
  return out;
}

nlohmann::json trace_to_json(const TrainingTrace& trace) {
  nlohmann::json j;
  j["run_meta"] = trace.run_meta;
  j["records"] = nlohmann::json::array();
  for (const auto& r : trace.records) {
    j["records"].push_back({{"step", r.step},
                            {"epoch", r.epoch},
                            {"total_loss", r.total_loss},
                            {"pos_loss", r.pos_loss},
                            {"neg_loss", r.neg_loss},
                            {"grad_ratio", r.grad_ratio},
                            {"train_batch_acc", r.train_batch_acc},
                            {"lr", r.lr},
                            {"flagged", r.flagged}});
  }
  j["epochs"] = nlohmann::json::array();
  for (const auto& e : trace.epochs) {
    j["epochs"].push_back(
        {{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"train_acc", e.train_acc}});
  }
  return j;
}

void export_trace(const TrainingTrace& trace, TraceFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write trace " + path.string());
  if (format == TraceFormat::kCsv) {
    out << trace_to_csv(trace);
  } else {
    out << trace_to_json(trace).dump(1) << '\n';
  }
  if (!out) throw IoError("failed writing trace " + path.string());
}

TrainingTrace import_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace " + path.string());
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != kTraceCsvHeader) {
    throw ParseError(path.string() + ":1: unexpected trace header", 1);
  }
  TrainingTrace trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(line, ',');
    TraceRecord r;
    double* reals[] = {&r.total_loss, &r.pos_loss, &r.neg_loss, &r.grad_ratio,
                       &r.train_batch_acc, &r.lr};
    bool ok = f.size() == 8 && text::parse_size(f[0], r.step) && text::parse_size(f[1], r.epoch);
    for (std::size_t i = 0; ok && i < 6; ++i) ok = text::parse_double(f[i + 2], *reals[i]);
    if (!ok) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed trace row",
                       line_no);
    }
    trace.records.push_back(r);
  }
  return trace;
}

TrainingTrace import_trace_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    TrainingTrace trace;
    trace.run_meta = j.at("run_meta");
    for (const auto& r : j.at("records")) {
      trace.records.push_back({r.at("step").get<std::size_t>(), r.at("epoch").get<std::size_t>(),
                               r.at("total_loss").get<double>(), r.at("pos_loss").get<double>(),
                               r.at("neg_loss").get<double>(), r.at("grad_ratio").get<double>(),
                               r.at("train_batch_acc").get<double>(), r.at("lr").get<double>(),
                               r.value("flagged", false)});
    }
    for (const auto& e : j.value("epochs", nlohmann::json::array())) {
      trace.epochs.push_back({e.at("epoch").get<std::size_t>(), e.at("mean_loss").get<double>(),
                              e.at("train_acc").get<double>()});
    }
    return trace;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("malformed trace " + path.string() + ": " + e.what());
  }
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Least-squares slope of a field against the record steps. Values are taken
// relative to the first row so a constant series gives exactly zero.
double slope(std::span<const TraceRecord> rows, double TraceRecord::*field) {
  const double n = static_cast<double>(rows.size());
  const double y0 = rows.front().*field;
  double mx = 0.0;
  double my = 0.0;
  for (const auto& r : rows) {
    mx += static_cast<double>(r.step);
    my += r.*field - y0;
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& r : rows) {
    const double dx = static_cast<double>(r.step) - mx;
    sxy += dx * (r.*field - y0 - my);
    sxx += dx * dx;
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

NcdSummary summarize_ncd(const TrainingTrace& trace, double early_fraction) {
  if (trace.records.size() < 10) {
    throw InsufficientData("summarize_ncd needs at least 10 trace records");
  }
  if (!(early_fraction > 0.0 && early_fraction <= 1.0)) {
    throw InvalidInput("early_fraction must lie in (0, 1]");
  }
  const std::size_t window = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(early_fraction * static_cast<double>(trace.records.size()))));
  const std::span<const TraceRecord> early(trace.records.data(), window);
  std::vector<double> ratios;
  ratios.reserve(window);
  for (const auto& r : early) ratios.push_back(r.grad_ratio);

  NcdSummary s;
  s.window = window;
  s.median_early_grad_ratio = median(std::move(ratios));
  s.pos_loss_slope = slope(early, &TraceRecord::pos_loss);
  s.neg_loss_slope = slope(early, &TraceRecord::neg_loss);
  s.pos_loss_trend_sign = sign(s.pos_loss_slope);
  s.neg_loss_trend_sign = sign(s.neg_loss_slope);
  return s;
}

}  // namespace rlr
