#include "perplex/lab_report.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "perplex/numfmt.hpp"

namespace perplex {

namespace {

using ojson = nlohmann::ordered_json;

ojson interval(const WilsonInterval& ci) { return ojson::array({ci.low, ci.high}); }

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4e", v);
  return buf;
}

}  // namespace

std::string to_json(const LabReport& report) {
  ojson doc;
  doc["suite"] = report.suite;
  doc["master_seed"] = report.master_seed;
  doc["configuration"] = report.configuration;

  ojson tails = ojson::array();
  for (const auto& series : report.tails) {
    ojson s;
    s["label"] = series.label;
    s["t"] = series.t;
    ojson points = ojson::array();
    for (std::size_t i = 0; i < series.estimates.size(); ++i) {
      const TailEstimate& e = series.estimates[i];
      ojson p;
      p["n"] = e.n;
      p["t"] = e.t;
      p["p_hat"] = e.p_hat;
      p["hits"] = e.hits;
      p["trials"] = e.trials;
      p["ci_low"] = e.ci_low;
      p["ci_high"] = e.ci_high;
      if (i < series.exact.size() && series.exact[i]) p["exact"] = *series.exact[i];
      points.push_back(std::move(p));
    }
    s["points"] = std::move(points);
    if (series.fit) {
      s["fit"] = {{"slope", series.fit->slope},
                  {"intercept", series.fit->intercept},
                  {"r_squared", series.fit->r_squared},
                  {"points_used", series.fit->points.size()},
                  {"excluded", series.fit->excluded}};
    } else {
      s["fit"] = nullptr;
    }
    if (!series.fit_note.empty()) s["fit_note"] = series.fit_note;
    tails.push_back(std::move(s));
  }
  doc["tails"] = std::move(tails);

  ojson curves = ojson::array();
  for (const auto& curve : report.curves) {
    ojson c;
    c["configuration"] = curve.configuration;
    ojson points = ojson::array();
    for (const auto& pt : curve.points) {
      ojson p;
      p["n"] = pt.n;
      p["trials"] = pt.trials;
      p["type1"] = pt.type1_hat;
      p["type1_ci"] = interval(pt.type1_ci);
      p["type2"] = pt.type2_hat;
      p["type2_ci"] = interval(pt.type2_ci);
      if (pt.threshold) p["threshold"] = *pt.threshold;
      points.push_back(std::move(p));
    }
    c["points"] = std::move(points);
    curves.push_back(std::move(c));
  }
  doc["error_curves"] = std::move(curves);
  return doc.dump(2) + "\n";
}

std::string render_table(const LabReport& report) {
  std::string out;
  out += "suite: " + report.suite + "    master_seed: " + std::to_string(report.master_seed) + "\n";
  out += "configuration: " + report.configuration + "\n";

  for (const auto& series : report.tails) {
    out += "\ntail " + series.label + "  t=" + format_short(series.t) + "\n";
    const bool has_exact = !series.exact.empty();
    out += pad_left("n", 8) + pad_left("trials", 9) + pad_left("hits", 8) + pad_left("p_hat", 12) +
           pad_left("ci_low", 12) + pad_left("ci_high", 12) + (has_exact ? pad_left("exact", 12) : "") + "\n";
    for (std::size_t i = 0; i < series.estimates.size(); ++i) {
      const TailEstimate& e = series.estimates[i];
      out += pad_left(std::to_string(e.n), 8) + pad_left(std::to_string(e.trials), 9) +
             pad_left(std::to_string(e.hits), 8) + pad_left(sci(e.p_hat), 12) +
             pad_left(sci(e.ci_low), 12) + pad_left(sci(e.ci_high), 12);
      if (has_exact) {
        out += pad_left(i < series.exact.size() && series.exact[i] ? sci(*series.exact[i]) : "-", 12);
      }
      out += "\n";
    }
    if (series.fit) {
      out += "fit ln p_hat = " + format_fixed(series.fit->intercept, 4) + " + (" +
             sci(series.fit->slope) + ") * n    r^2 = " + format_fixed(series.fit->r_squared, 4) +
             "    excluded = " + std::to_string(series.fit->excluded) + "\n";
    } else if (!series.fit_note.empty()) {
      out += "fit: " + series.fit_note + "\n";
    }
  }

  for (const auto& curve : report.curves) {
    out += "\nerror curve: " + curve.configuration + "\n";
    out += pad_left("n", 8) + pad_left("trials", 9) + pad_left("type I", 10) + pad_left("95% CI", 22) +
           pad_left("type II", 10) + pad_left("95% CI", 22) + pad_left("threshold", 12) + "\n";
    for (const auto& pt : curve.points) {
      out += pad_left(std::to_string(pt.n), 8) + pad_left(std::to_string(pt.trials), 9) +
             pad_left(format_fixed(pt.type1_hat, 4), 10) +
             pad_left("[" + format_fixed(pt.type1_ci.low, 4) + ", " + format_fixed(pt.type1_ci.high, 4) + "]", 22) +
             pad_left(format_fixed(pt.type2_hat, 4), 10) +
             pad_left("[" + format_fixed(pt.type2_ci.low, 4) + ", " + format_fixed(pt.type2_ci.high, 4) + "]", 22) +
             pad_left(pt.threshold ? format_fixed(*pt.threshold, 5) : "-", 12) + "\n";
    }
  }
  return out;
}

std::vector<LineChart> report_charts(const LabReport& report) {
  std::vector<LineChart> charts;
  if (!report.tails.empty()) {
    LineChart chart{report.suite + ": tail decay", "n (tokens)", "ln p_hat", {}};
    for (const auto& series : report.tails) {
      ChartSeries s{"t=" + format_short(series.t), {}};
      for (const auto& e : series.estimates) {
        if (e.p_hat > 0.0) s.points.emplace_back(static_cast<double>(e.n), std::log(e.p_hat));
      }
      chart.series.push_back(std::move(s));
    }
    charts.push_back(std::move(chart));
  }
  for (const auto& curve : report.curves) {
    LineChart chart{report.suite + ": error rates", "n (tokens)", "rate", {}};
    ChartSeries type1{"type I", {}};
    ChartSeries type2{"type II", {}};
    for (const auto& pt : curve.points) {
      type1.points.emplace_back(static_cast<double>(pt.n), pt.type1_hat);
      type2.points.emplace_back(static_cast<double>(pt.n), pt.type2_hat);
    }
    chart.series.push_back(std::move(type1));
    chart.series.push_back(std::move(type2));
    charts.push_back(std::move(chart));
  }
  return charts;
}

}  // namespace perplex
