#include "dynaboost/harness/outputs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dynaboost::harness {

namespace fs = std::filesystem;

namespace {

// Outputs must not depend on the order runs finished in.
std::vector<const RunResult*> by_seed(const std::vector<RunResult>& runs) {
  std::vector<const RunResult*> out;
  for (const auto& r : runs) out.push_back(&r);
  std::stable_sort(out.begin(), out.end(), [](const RunResult* a, const RunResult* b) {
    return a->seed != b->seed ? a->seed < b->seed : a->run_index < b->run_index;
  });
  return out;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::vector<AlgorithmSeries> summarize(const std::vector<RunResult>& runs) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::vector<double>>> complete;
  std::map<std::string, int> diverged;
  for (const auto* run : by_seed(runs)) {
    for (const auto& ep : run->episodes) {
      if (std::find(order.begin(), order.end(), ep.algorithm) == order.end()) order.push_back(ep.algorithm);
      if (ep.diverged) {
        ++diverged[ep.algorithm];
      } else {
        complete[ep.algorithm].push_back(ep.trajectory.costs);
      }
    }
  }
  std::vector<AlgorithmSeries> out;
  for (const auto& name : order) {
    if (complete[name].empty()) continue;
    out.push_back(AlgorithmSeries{name, aggregate(complete[name]), diverged[name]});
  }
  return out;
}

std::string raw_csv(const std::string& experiment, const std::vector<RunResult>& runs) {
  std::string out = "experiment,algorithm,seed,t,instant_cost,avg_cost\n";
  for (const auto* run : by_seed(runs)) {
    for (const auto& ep : run->episodes) {
      double sum = 0.0;
      const auto& c = ep.trajectory.costs;
      const std::string prefix = experiment + "," + ep.algorithm + "," + std::to_string(run->seed) + ",";
      for (std::size_t t = 0; t < c.size(); ++t) {
        sum += c[t];
        out += prefix;
        out += std::to_string(t + 1);
        out += ',';
        out += format_number(c[t]);
        out += ',';
        out += format_number(sum / static_cast<double>(t + 1));
        out += '\n';
      }
    }
  }
  return out;
}

std::string aggregate_csv(const std::vector<AlgorithmSeries>& series) {
  std::string out = "algorithm,t,mean,ci_lo,ci_hi\n";
  for (const auto& s : series) {
    for (std::size_t t = 0; t < s.stats.rounds(); ++t) {
      out += s.algorithm + "," + std::to_string(t + 1) + "," + format_number(s.stats.mean[t]) + ",";
      if (s.stats.has_ci()) {
        out += format_number(s.stats.ci_lo(t)) + "," + format_number(s.stats.ci_hi(t));
      } else {
        out += ",";
      }
      out += '\n';
    }
  }
  return out;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
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

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string render_svg(const std::string& title, const std::vector<AlgorithmSeries>& series) {
  if (series.empty()) return {};
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  const double width = 820, height = 480, left = 80, right = 150, top = 40, bottom = 50;
  const double plot_w = width - left - right, plot_h = height - top - bottom;

  std::size_t rounds = 0;
  for (const auto& s : series) rounds = std::max(rounds, s.stats.rounds());
  // The first rounds of a running average are dominated by single costs;
  // start the axis after a short burn-in so the tail stays readable.
  const std::size_t first = std::min(rounds - 1, rounds / 50);
  double lo = 1e300, hi = -1e300;
  for (const auto& s : series) {
    for (std::size_t t = first; t < s.stats.rounds(); ++t) {
      lo = std::min(lo, s.stats.ci_lo(t));
      hi = std::max(hi, s.stats.ci_hi(t));
    }
  }
  if (!(hi > lo)) {
    hi = lo + std::max(1.0, std::abs(lo)) * 1e-3;
    lo -= std::max(1.0, std::abs(lo)) * 1e-3;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double t0 = static_cast<double>(first + 1), t1 = static_cast<double>(std::max<std::size_t>(rounds, first + 2));
  auto sx = [&](double t) { return left + (t - t0) / (t1 - t0) * plot_w; };
  auto sy = [&](double y) { return top + (hi - y) / (hi - lo) * plot_h; };
  const std::size_t stride = std::max<std::size_t>(1, (rounds - first + 999) / 1000);

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\""
    << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n"
    << "<text x=\"" << left + plot_w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"15\">" << xml_escape(title) << "</text>\n";

  // Axes and ticks.
  o << "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n"
    << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
    << top + plot_h << "\"/>\n"
    << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h << "\"/>\n"
    << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double t = t0 + (t1 - t0) * i / 4.0;
    const double y = lo + (hi - lo) * i / 4.0;
    o << "<text x=\"" << coord(sx(t)) << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"middle\">"
      << tick_label(std::round(t)) << "</text>\n"
      << "<text x=\"" << left - 6 << "\" y=\"" << coord(sy(y) + 4) << "\" text-anchor=\"end\">"
      << tick_label(y) << "</text>\n";
  }
  o << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12
    << "\" text-anchor=\"middle\">round</text>\n"
    << "<text x=\"16\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << top + plot_h / 2 << ")\">running-average cost</text>\n</g>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = palette[k % (sizeof palette / sizeof *palette)];
    std::vector<std::size_t> ts;
    for (std::size_t t = first; t < s.stats.rounds(); t += stride) ts.push_back(t);
    if (ts.empty() || ts.back() + 1 != s.stats.rounds()) ts.push_back(s.stats.rounds() - 1);
    if (s.stats.has_ci()) {
      o << "<polygon class=\"ci\" fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
      for (const auto t : ts) o << coord(sx(t + 1.0)) << "," << coord(sy(s.stats.ci_hi(t))) << " ";
      for (auto it = ts.rbegin(); it != ts.rend(); ++it) {
        o << coord(sx(*it + 1.0)) << "," << coord(sy(s.stats.ci_lo(*it))) << " ";
      }
      o << "\"/>\n";
    }
    o << "<polyline data-algorithm=\"" << xml_escape(s.algorithm) << "\" fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.6\" points=\"";
    for (const auto t : ts) o << coord(sx(t + 1.0)) << "," << coord(sy(s.stats.mean[t])) << " ";
    o << "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    o << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + plot_w + 34
      << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << left + plot_w + 40 << "\" y=\"" << ly + 4
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(s.algorithm) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

namespace {

void indent_block(std::ostringstream& o, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) o << "  " << line << "\n";
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out.flush()) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::string manifest_yaml(const ExperimentConfig& config, const std::string& config_text,
                          const std::vector<RunResult>& runs) {
  std::ostringstream o;
  o << "experiment: \"" << config.name << "\"\n";
  o << "config: |\n";
  indent_block(o, config_text.empty() ? emit_config(config) : config_text);
  o << "normalized_config: |\n";
  indent_block(o, emit_config(config));
  if (config.env.kind == EnvConfig::Kind::kLds) o << "system_seed: " << system_seed(config) << "\n";
  o << "runs:\n";
  for (const auto& run : runs) {
    o << "  - index: " << run.run_index << "\n    seed: " << run.seed << "\n    w_hash: \""
      << hex64(run.w_hash) << "\"\n    algorithms:\n";
    for (const auto& ep : run.episodes) {
      o << "      - name: " << ep.algorithm << "\n        parameters: " << ep.parameter_count
        << "\n        w_hash: \"" << hex64(ep.w_hash) << "\"\n";
      if (ep.diverged) o << "        diverged_round: " << ep.diverged_round << "\n";
    }
  }
  return o.str();
}

OutputFiles write_outputs(const ExperimentConfig& config, const std::string& config_text,
                          const std::vector<RunResult>& runs, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw std::runtime_error("cannot create output directory " + out_dir.string() +
                             (ec ? ": " + ec.message() : std::string()));
  }
  OutputFiles files;
  files.raw = out_dir / (config.name + "_raw.csv");
  files.aggregate = out_dir / (config.name + "_aggregate.csv");
  files.manifest = out_dir / (config.name + "_manifest.yaml");
  const auto series = summarize(runs);
  write_file(files.raw, raw_csv(config.name, runs));
  write_file(files.aggregate, aggregate_csv(series));
  const std::string svg = render_svg(config.name, series);
  if (!svg.empty()) {
    files.svg = out_dir / (config.name + ".svg");
    write_file(files.svg, svg);
  }
  write_file(files.manifest, manifest_yaml(config, config_text, runs));
  return files;
}

}  // namespace dynaboost::harness
