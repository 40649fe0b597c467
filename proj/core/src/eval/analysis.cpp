#include "structpred/eval/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "structpred/error.hpp"

namespace structpred::eval {

namespace {

std::string fixed(double v, int digits = 2) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, v);
  return buffer;
}

std::string escape_xml(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string svg_open(int width, int height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) +
         " " + std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text_at(double x, double y, const std::string& body,
                    const std::string& anchor = "middle") {
  return "<text x=\"" + fixed(x, 1) + "\" y=\"" + fixed(y, 1) + "\" text-anchor=\"" + anchor +
         "\">" + escape_xml(body) + "</text>\n";
}

}  // namespace

std::string LengthBin::name() const {
  return hi ? std::to_string(lo) + "-" + std::to_string(*hi) : std::to_string(lo) + "+";
}

std::vector<LengthBin> length_binned_f1(std::span<const RunReport> reports,
                                        std::size_t bin_width, std::size_t max_len) {
  if (bin_width == 0) fail(ErrorCode::kConfig, "length bins: width must be positive");
  if (max_len == 0) fail(ErrorCode::kConfig, "length bins: max length must be positive");
  std::vector<LengthBin> bins;
  for (std::size_t lo = 1; lo <= max_len; lo += bin_width) {
    LengthBin b;
    b.lo = lo;
    b.hi = std::min(max_len, lo + bin_width - 1);
    bins.push_back(b);
  }
  LengthBin overflow;
  overflow.lo = max_len + 1;
  bins.push_back(overflow);

  for (const auto& report : reports) {
    for (const auto& s : report.sentences) {
      const std::size_t index =
          s.length == 0 ? 0 : std::min(bins.size() - 1, (s.length - 1) / bin_width);
      auto& b = s.length > max_len ? bins.back() : bins[index];
      b.sentences++;
      b.gold += s.gold;
      b.predicted += s.predicted;
      b.unlabeled_correct += s.unlabeled_correct;
      b.labeled_correct += s.labeled_correct;
    }
  }
  for (auto& b : bins) {
    if (b.sentences == 0) continue;
    b.uf = f1_from_counts(b.gold, b.predicted, b.unlabeled_correct).f1;
    b.lf = f1_from_counts(b.gold, b.predicted, b.labeled_correct).f1;
  }
  return bins;
}

std::string length_bins_csv(std::span<const LengthBin> bins) {
  std::string out = "bin,lo,hi,sentences,gold,predicted,UF,LF\n";
  for (const auto& b : bins) {
    out += b.name() + "," + std::to_string(b.lo) + "," + (b.hi ? std::to_string(*b.hi) : "") +
           "," + std::to_string(b.sentences) + "," + std::to_string(b.gold) + "," +
           std::to_string(b.predicted) + "," + (b.uf ? fixed(*b.uf, 4) : "") + "," +
           (b.lf ? fixed(*b.lf, 4) : "") + "\n";
  }
  return out;
}

std::string length_bins_svg(std::span<const LengthBin> bins, const std::string& title) {
  const int width = 560, height = 340;
  const double left = 50, right = 20, top = 30, bottom = 50;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  const std::size_t count = std::max<std::size_t>(bins.size(), 1);
  auto x_of = [&](std::size_t i) {
    return left + plot_w * (count == 1 ? 0.5 : static_cast<double>(i) / (count - 1));
  };
  auto y_of = [&](double v) { return top + plot_h * (1.0 - v / 100.0); };

  std::string svg = svg_open(width, height);
  if (!title.empty()) svg += text_at(width / 2.0, 18, title);
  for (int tick = 0; tick <= 100; tick += 20) {
    const double y = y_of(tick);
    svg += "<line x1=\"" + fixed(left, 1) + "\" y1=\"" + fixed(y, 1) + "\" x2=\"" +
           fixed(width - right, 1) + "\" y2=\"" + fixed(y, 1) + "\" stroke=\"#ddd\"/>\n";
    svg += text_at(left - 6, y + 4, std::to_string(tick), "end");
  }
  for (std::size_t i = 0; i < bins.size(); ++i) {
    svg += text_at(x_of(i), height - bottom + 16, bins[i].name());
  }
  svg += text_at(width / 2.0, height - 12, "sentence length");

  auto series = [&](bool labeled, const std::string& dash) {
    std::string out;
    std::string points;
    auto flush = [&] {
      if (!points.empty()) {
        out += "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"" + dash +
               " points=\"" + points + "\"/>\n";
      }
      points.clear();
    };
    for (std::size_t i = 0; i < bins.size(); ++i) {
      const auto& v = labeled ? bins[i].lf : bins[i].uf;
      if (!v) {
        flush();
        continue;
      }
      if (!points.empty()) points += ' ';
      points += fixed(x_of(i), 1) + "," + fixed(y_of(*v), 1);
      out += "<circle cx=\"" + fixed(x_of(i), 1) + "\" cy=\"" + fixed(y_of(*v), 1) +
             "\" r=\"2.5\" fill=\"black\"/>\n";
    }
    flush();
    return out;
  };
  svg += series(true, "");
  svg += series(false, " stroke-dasharray=\"5,4\"");
  svg += text_at(width - right - 60, top + 12, "LF (solid)", "start");
  svg += text_at(width - right - 60, top + 26, "UF (dashed)", "start");
  svg += "</svg>\n";
  return svg;
}

double label_f1(const LabelCounts& c) { return f1_from_counts(c.gold, c.predicted, c.correct).f1; }

LabelRanking label_diff_ranking(const RunReport& a, const RunReport& b, std::size_t top_k) {
  auto occurs = [](const RunReport& r, const std::string& label) {
    auto it = r.labels.find(label);
    return it != r.labels.end() && it->second.gold + it->second.predicted > 0;
  };
  std::set<std::string> names;
  bool shared = false;
  for (const auto& [label, c] : a.labels) {
    if (c.gold + c.predicted > 0) names.insert(label);
    if (occurs(b, label) && c.gold + c.predicted > 0) shared = true;
  }
  for (const auto& [label, c] : b.labels)
    if (c.gold + c.predicted > 0) names.insert(label);
  if (!names.empty() && !shared) {
    fail(ErrorCode::kValidation, "label_diff_ranking: the reports share no labels");
  }

  LabelRanking ranking;
  for (const auto& label : names) {
    LabelDiff d;
    d.label = label;
    d.f1_a = a.labels.count(label) ? label_f1(a.labels.at(label)) : 0.0;
    d.f1_b = b.labels.count(label) ? label_f1(b.labels.at(label)) : 0.0;
    d.diff = d.f1_b - d.f1_a;
    ranking.all.push_back(d);
  }
  std::stable_sort(ranking.all.begin(), ranking.all.end(),
                   [](const LabelDiff& x, const LabelDiff& y) {
                     if (x.diff != y.diff) return x.diff > y.diff;
                     return x.label < y.label;
                   });
  for (const auto& d : ranking.all) {
    if (d.diff > 0 && ranking.positive.size() < top_k) ranking.positive.push_back(d);
  }
  std::vector<LabelDiff> negatives;
  for (const auto& d : ranking.all)
    if (d.diff < 0) negatives.push_back(d);
  std::stable_sort(negatives.begin(), negatives.end(),
                   [](const LabelDiff& x, const LabelDiff& y) {
                     if (x.diff != y.diff) return x.diff < y.diff;
                     return x.label < y.label;
                   });
  if (negatives.size() > top_k) negatives.resize(top_k);
  ranking.negative = std::move(negatives);
  return ranking;
}

std::string label_ranking_csv(const LabelRanking& ranking) {
  std::string out = "list,rank,label,f1_a,f1_b,diff\n";
  auto emit = [&](const std::string& list, const std::vector<LabelDiff>& rows) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out += list + "," + std::to_string(i + 1) + "," + rows[i].label + "," +
             fixed(rows[i].f1_a, 4) + "," + fixed(rows[i].f1_b, 4) + "," +
             fixed(rows[i].diff, 4) + "\n";
    }
  };
  emit("positive", ranking.positive);
  emit("negative", ranking.negative);
  return out;
}

std::string label_ranking_svg(const LabelRanking& ranking, const std::string& title) {
  std::vector<LabelDiff> rows = ranking.positive;
  rows.insert(rows.end(), ranking.negative.rbegin(), ranking.negative.rend());
  const int row_h = 22;
  const int width = 520;
  const int height = 50 + row_h * static_cast<int>(std::max<std::size_t>(rows.size(), 1));
  const double mid = 300, span = 180;
  double extent = 1.0;
  for (const auto& r : rows) extent = std::max(extent, std::abs(r.diff));

  std::string svg = svg_open(width, height);
  if (!title.empty()) svg += text_at(width / 2.0, 18, title);
  svg += "<line x1=\"" + fixed(mid, 1) + "\" y1=\"30\" x2=\"" + fixed(mid, 1) + "\" y2=\"" +
         std::to_string(height - 10) + "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double y = 34 + static_cast<double>(i) * row_h;
    const double w = span * std::abs(rows[i].diff) / extent;
    const double x = rows[i].diff >= 0 ? mid : mid - w;
    svg += "<rect x=\"" + fixed(x, 1) + "\" y=\"" + fixed(y, 1) + "\" width=\"" + fixed(w, 1) +
           "\" height=\"" + std::to_string(row_h - 6) + "\" fill=\"" +
           (rows[i].diff >= 0 ? "#4a7" : "#c54") + "\"/>\n";
    svg += text_at(10, y + 12, rows[i].label, "start");
    svg += text_at(mid + (rows[i].diff >= 0 ? w + 4 : 4), y + 12,
                   (rows[i].diff >= 0 ? "+" : "") + fixed(rows[i].diff, 2), "start");
  }
  svg += "</svg>\n";
  return svg;
}

std::string attention_svg(std::span<const double> weights, std::size_t length,
                          std::span<const std::string> labels) {
  const int cell = length > 40 ? 8 : 14;
  const int margin = labels.empty() ? 10 : 70;
  const int size = margin + cell * static_cast<int>(length) + 10;
  std::string svg = svg_open(size, size);
  double peak = 0;
  for (double w : weights) peak = std::max(peak, w);
  if (peak <= 0) peak = 1;
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t j = 0; j < length; ++j) {
      const int shade = 255 - static_cast<int>(255.0 * weights[i * length + j] / peak);
      char color[8];
      std::snprintf(color, sizeof color, "#%02x%02x%02x", shade, shade, shade);
      svg += "<rect x=\"" + std::to_string(margin + cell * static_cast<int>(j)) + "\" y=\"" +
             std::to_string(margin + cell * static_cast<int>(i)) + "\" width=\"" +
             std::to_string(cell) + "\" height=\"" + std::to_string(cell) + "\" fill=\"" + color +
             "\"/>\n";
    }
    if (i < labels.size()) {
      svg += text_at(margin - 4, margin + cell * static_cast<double>(i) + cell - 3, labels[i],
                     "end");
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace structpred::eval
