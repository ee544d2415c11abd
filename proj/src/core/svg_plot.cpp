#include "core/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace ts {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& path, size_t lineno) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    fail(ErrorKind::format, path + ": line " + std::to_string(lineno) +
                                ": malformed numeric field '" + s + "'");
  return v;
}

int64_t parse_epoch(const std::string& s, const std::string& path, size_t lineno) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const long long v = std::strtoll(begin, &end, 10);
  if (end == begin || *end != '\0' || v < 0)
    fail(ErrorKind::format, path + ": line " + std::to_string(lineno) +
                                ": malformed epoch field '" + s + "'");
  return v;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt_px(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Series {
  const char* label;
  const char* color;
  std::vector<double> values;
};

void render_chart(const std::filesystem::path& out_path, const std::string& metric_label,
                  const std::vector<int64_t>& epochs, const Series& train,
                  const Series& val) {
  constexpr double width = 760, height = 480;
  constexpr double ml = 72, mr = 150, mt = 44, mb = 58;
  const double px0 = ml, px1 = width - mr;
  const double py0 = mt, py1 = height - mb;

  double lo = train.values[0], hi = train.values[0];
  for (double v : train.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : val.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double pad = (hi - lo) * 0.05;
  if (pad <= 0.0) pad = std::max(0.05, std::abs(hi) * 0.05);
  lo -= pad;
  hi += pad;

  const int64_t e0 = epochs.front(), e1 = epochs.back();
  auto x_at = [&](int64_t e) {
    if (e1 == e0) return (px0 + px1) / 2.0;
    return px0 + (static_cast<double>(e - e0) / static_cast<double>(e1 - e0)) * (px1 - px0);
  };
  auto y_at = [&](double v) { return py1 - (v - lo) / (hi - lo) * (py1 - py0); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"#ffffff\"/>\n";
  svg << "<text x=\"" << (px0 + px1) / 2 << "\" y=\"26\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\" fill=\"#222\">"
      << metric_label << " by epoch</text>\n";

  // y grid and labels
  const int yticks = 6;
  for (int i = 0; i < yticks; ++i) {
    const double v = lo + (hi - lo) * i / (yticks - 1);
    const double y = y_at(v);
    svg << "<line x1=\"" << fmt_px(px0) << "\" y1=\"" << fmt_px(y) << "\" x2=\""
        << fmt_px(px1) << "\" y2=\"" << fmt_px(y)
        << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << fmt_px(px0 - 8) << "\" y=\"" << fmt_px(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
           "fill=\"#444\">"
        << fmt(v) << "</text>\n";
  }

  // x ticks at integer epochs
  const int64_t span = std::max<int64_t>(1, e1 - e0);
  const int64_t step = std::max<int64_t>(1, (span + 9) / 10);
  for (int64_t e = e0; e <= e1; e += step) {
    const double x = x_at(e);
    svg << "<line x1=\"" << fmt_px(x) << "\" y1=\"" << fmt_px(py1) << "\" x2=\""
        << fmt_px(x) << "\" y2=\"" << fmt_px(py1 + 5)
        << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << fmt_px(x) << "\" y=\"" << fmt_px(py1 + 20)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
           "fill=\"#444\">"
        << e << "</text>\n";
  }

  // axes
  svg << "<line x1=\"" << fmt_px(px0) << "\" y1=\"" << fmt_px(py0) << "\" x2=\""
      << fmt_px(px0) << "\" y2=\"" << fmt_px(py1)
      << "\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
  svg << "<line x1=\"" << fmt_px(px0) << "\" y1=\"" << fmt_px(py1) << "\" x2=\""
      << fmt_px(px1) << "\" y2=\"" << fmt_px(py1)
      << "\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
  svg << "<text x=\"" << (px0 + px1) / 2 << "\" y=\"" << height - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "fill=\"#222\">epoch</text>\n";
  svg << "<text x=\"20\" y=\"" << (py0 + py1) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "fill=\"#222\" transform=\"rotate(-90 20 "
      << (py0 + py1) / 2 << ")\">" << metric_label << "</text>\n";

  for (const Series* s : {&train, &val}) {
    svg << "<polyline fill=\"none\" stroke=\"" << s->color
        << "\" stroke-width=\"1.6\" points=\"";
    for (size_t i = 0; i < epochs.size(); ++i) {
      if (i) svg << ' ';
      svg << fmt_px(x_at(epochs[i])) << ',' << fmt_px(y_at(s->values[i]));
    }
    svg << "\"/>\n";
    for (size_t i = 0; i < epochs.size(); ++i)
      svg << "<circle cx=\"" << fmt_px(x_at(epochs[i])) << "\" cy=\""
          << fmt_px(y_at(s->values[i])) << "\" r=\"2.4\" fill=\"" << s->color << "\"/>\n";
  }

  // legend
  const double lx = px1 + 14;
  double ly = py0 + 10;
  for (const Series* s : {&train, &val}) {
    svg << "<line x1=\"" << fmt_px(lx) << "\" y1=\"" << fmt_px(ly) << "\" x2=\""
        << fmt_px(lx + 26) << "\" y2=\"" << fmt_px(ly) << "\" stroke=\"" << s->color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << fmt_px(lx + 32) << "\" y=\"" << fmt_px(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#222\">" << s->label
        << "</text>\n";
    ly += 20;
  }
  svg << "</svg>\n";

  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open for writing: " + out_path.string());
  const std::string body = svg.str();
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) fail(ErrorKind::io, "short write: " + out_path.string());
}

}  // namespace

std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open metrics file: " + path.string());
  const std::string name = path.string();
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::format, name + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader)
    fail(ErrorKind::format, name + ": line 1: expected header '" +
                                std::string(kMetricsHeader) + "', got '" + line + "'");
  std::vector<EpochMetrics> rows;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 7)
      fail(ErrorKind::format, name + ": line " + std::to_string(lineno) + ": expected 7 fields, got " +
                                  std::to_string(fields.size()));
    EpochMetrics m;
    m.epoch = parse_epoch(fields[0], name, lineno);
    m.train_loss = parse_double(fields[1], name, lineno);
    m.train_acc = parse_double(fields[2], name, lineno);
    m.train_iou = parse_double(fields[3], name, lineno);
    m.val_loss = parse_double(fields[4], name, lineno);
    m.val_acc = parse_double(fields[5], name, lineno);
    m.val_iou = parse_double(fields[6], name, lineno);
    rows.push_back(m);
  }
  return rows;
}

void plot_curves(const std::filesystem::path& metrics_csv,
                 const std::filesystem::path& out_dir) {
  const auto rows = read_metrics_csv(metrics_csv);
  if (rows.empty())
    fail(ErrorKind::format, metrics_csv.string() + ": no data rows to plot");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create output directory: " + out_dir.string());

  std::vector<int64_t> epochs;
  Series ta{"train", "#1f77b4", {}}, va{"validation", "#d62728", {}};
  Series tl{"train", "#1f77b4", {}}, vl{"validation", "#d62728", {}};
  Series ti{"train", "#1f77b4", {}}, vi{"validation", "#d62728", {}};
  for (const auto& r : rows) {
    epochs.push_back(r.epoch);
    ta.values.push_back(r.train_acc);
    va.values.push_back(r.val_acc);
    tl.values.push_back(r.train_loss);
    vl.values.push_back(r.val_loss);
    ti.values.push_back(r.train_iou);
    vi.values.push_back(r.val_iou);
  }
  render_chart(out_dir / "accuracy.svg", "accuracy", epochs, ta, va);
  render_chart(out_dir / "loss.svg", "loss", epochs, tl, vl);
  render_chart(out_dir / "iou.svg", "IoU", epochs, ti, vi);
}

}  // namespace ts
