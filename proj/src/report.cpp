#include "adprep/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "adprep/error.hpp"

namespace adprep {

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string optional_fixed(const std::optional<double>& v, int digits = 6) {
  return v ? fixed(*v, digits) : "NA";
}

double parse_number(const std::string& field, std::size_t line) {
  if (field == "NA") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || field.empty())
    throw Error(ErrorCode::MalformedCsv,
                "line " + std::to_string(line) + ": '" + field + "' is not a number");
  return v;
}

// Maps data coordinates into the plot rectangle.
struct Axis {
  double lo, hi, pix_lo, pix_hi;
  double operator()(double v) const {
    if (hi == lo) return (pix_lo + pix_hi) / 2;
    return pix_lo + (v - lo) / (hi - lo) * (pix_hi - pix_lo);
  }
};

}  // namespace

std::string history_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,train_loss,train_acc,test_acc\n";
  for (const auto& e : history) {
    out += std::to_string(e.epoch) + "," + fixed(e.train_loss, 8) + "," + fixed(e.train_acc) + ",";
    out += std::isnan(e.test_acc) ? "NA" : fixed(e.test_acc);
    out += "\n";
  }
  return out;
}

std::vector<std::vector<std::string>> split_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::vector<EpochStats> parse_history_csv(const std::string& text) {
  const auto rows = split_csv(text);
  if (rows.empty()) throw Error(ErrorCode::MalformedCsv, "empty history file");
  const std::vector<std::string> header{"epoch", "train_loss", "train_acc", "test_acc"};
  if (rows[0] != header)
    throw Error(ErrorCode::MalformedCsv, "expected header epoch,train_loss,train_acc,test_acc");
  if (rows.size() < 2) throw Error(ErrorCode::MalformedCsv, "history has no epochs");
  std::vector<EpochStats> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 4)
      throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(i + 1) + ": expected 4 fields");
    EpochStats e;
    const double epoch = parse_number(rows[i][0], i + 1);
    if (!(epoch == std::floor(epoch)))
      throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(i + 1) + ": epoch must be an integer");
    e.epoch = static_cast<int>(epoch);
    e.train_loss = parse_number(rows[i][1], i + 1);
    e.train_acc = parse_number(rows[i][2], i + 1);
    e.test_acc = parse_number(rows[i][3], i + 1);
    if (std::isnan(e.train_loss) || std::isnan(e.train_acc))
      throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(i + 1) + ": missing training value");
    out.push_back(e);
  }
  return out;
}

std::string history_svg(const std::vector<EpochStats>& history) {
  if (history.empty()) throw Error(ErrorCode::EmptyInput, "nothing to plot");
  constexpr double width = 640, height = 400, left = 60, right = 580, top = 40, bottom = 340;

  double e_lo = history.front().epoch, e_hi = e_lo, loss_hi = 0.0;
  for (const auto& e : history) {
    e_lo = std::min<double>(e_lo, e.epoch);
    e_hi = std::max<double>(e_hi, e.epoch);
    loss_hi = std::max(loss_hi, e.train_loss);
  }
  if (loss_hi <= 0.0) loss_hi = 1.0;
  const Axis ex{e_lo, e_hi, left, right};
  const Axis acc_y{0.0, 1.0, bottom, top};
  const Axis loss_y{0.0, loss_hi, bottom, top};

  struct Series {
    const char* name;
    const char* color;
    std::vector<std::pair<double, double>> points;
  };
  Series acc{"test accuracy", "#1f77b4", {}}, loss{"train loss", "#d62728", {}};
  for (const auto& e : history) {
    if (!std::isnan(e.test_acc)) acc.points.emplace_back(ex(e.epoch), acc_y(e.test_acc));
    loss.points.emplace_back(ex(e.epoch), loss_y(e.train_loss));
  }

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << " " << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\"" << bottom
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << right << "\" y1=\"" << top << "\" x2=\"" << right << "\" y2=\"" << bottom
    << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << (left + right) / 2 << "\" y=\"" << bottom + 35 << "\" text-anchor=\"middle\">epoch</text>\n";
  s << "<text x=\"15\" y=\"" << (top + bottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
    << (top + bottom) / 2 << ")\">accuracy</text>\n";
  s << "<text x=\"625\" y=\"" << (top + bottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(90 625 "
    << (top + bottom) / 2 << ")\">loss</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double f = k / 4.0;
    s << "<text x=\"" << left - 6 << "\" y=\"" << fixed(acc_y(f), 2) << "\" text-anchor=\"end\">"
      << fixed(f, 2) << "</text>\n";
    s << "<text x=\"" << right + 6 << "\" y=\"" << fixed(loss_y(f * loss_hi), 2) << "\">"
      << fixed(f * loss_hi, 3) << "</text>\n";
  }
  s << "<text x=\"" << left << "\" y=\"" << bottom + 18 << "\" text-anchor=\"middle\">" << e_lo << "</text>\n";
  if (e_hi != e_lo)
    s << "<text x=\"" << right << "\" y=\"" << bottom + 18 << "\" text-anchor=\"middle\">" << e_hi << "</text>\n";

  for (const Series* series : {&acc, &loss}) {
    if (series->points.size() > 1) {
      s << "<polyline fill=\"none\" stroke=\"" << series->color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < series->points.size(); ++i)
        s << (i ? " " : "") << fixed(series->points[i].first, 2) << "," << fixed(series->points[i].second, 2);
      s << "\"/>\n";
    }
    for (const auto& [x, y] : series->points)
      s << "<circle cx=\"" << fixed(x, 2) << "\" cy=\"" << fixed(y, 2) << "\" r=\"2.5\" fill=\""
        << series->color << "\"/>\n";
  }

  int row = 0;
  for (const Series* series : {&acc, &loss}) {
    const double y = top - 22 + 14 * row++;
    s << "<line x1=\"" << left + 10 << "\" y1=\"" << y << "\" x2=\"" << left + 30 << "\" y2=\"" << y
      << "\" stroke=\"" << series->color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << left + 36 << "\" y=\"" << y + 4 << "\">" << series->name << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out =
      "model,stage,accuracy,sensitivity,specificity,tp,fn,fp,tn,seconds,percentage_decrease\n";
  for (const auto& r : rows) {
    out += r.model + "," + r.stage + ",";
    if (!r.error.empty()) {
      out += "failed,failed,failed,failed,failed,failed,failed,failed,NA\n";
      continue;
    }
    out += fixed(r.metrics.accuracy) + "," + optional_fixed(r.metrics.sensitivity) + "," +
           optional_fixed(r.metrics.specificity) + "," + std::to_string(r.cm.tp) + "," +
           std::to_string(r.cm.fn) + "," + std::to_string(r.cm.fp) + "," + std::to_string(r.cm.tn) +
           "," + fixed(r.seconds) + "," + optional_fixed(r.percentage_decrease, 2) + "\n";
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

}  // namespace adprep
