#include "actgen/render.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace actgen {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

SkeletonTopology load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open topology file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("topology parse error: " + std::string(e.what()));
  }
  if (!j.is_array()) throw std::runtime_error("topology must be a JSON array of [i, j] pairs");
  SkeletonTopology topo;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() ||
        !pair[1].is_number_unsigned()) {
      throw std::runtime_error("topology entries must be [i, j] joint index pairs");
    }
    topo.bones.emplace_back(pair[0].get<std::size_t>(), pair[1].get<std::size_t>());
  }
  return topo;
}

std::string render_svg(const ActionSequence& sequence, const SkeletonTopology& topology) {
  sequence.validate();
  const std::size_t d = sequence.dim();
  if (d % 2 != 0) {
    throw std::invalid_argument("render_svg: pose dimension must be 2 x joint count, got " +
                                std::to_string(d));
  }
  const std::size_t joints = d / 2;
  for (const auto& [a, b] : topology.bones) {
    if (a >= joints || b >= joints) {
      throw std::invalid_argument("render_svg: bone (" + std::to_string(a) + ", " + std::to_string(b) +
                                  ") out of range for " + std::to_string(joints) + " joints");
    }
  }

  // One shared scale for the whole sequence.
  double lo_x = sequence.frames[0][0], hi_x = lo_x;
  double lo_y = sequence.frames[0][1], hi_y = lo_y;
  for (const ActionPose& f : sequence.frames) {
    for (std::size_t j = 0; j < joints; ++j) {
      lo_x = std::min(lo_x, f[2 * j]);
      hi_x = std::max(hi_x, f[2 * j]);
      lo_y = std::min(lo_y, f[2 * j + 1]);
      hi_y = std::max(hi_y, f[2 * j + 1]);
    }
  }
  const double span_x = std::max(hi_x - lo_x, 1e-9);
  const double span_y = std::max(hi_y - lo_y, 1e-9);

  constexpr double kBox = 120.0;
  constexpr double kPad = 10.0;
  const double usable = kBox - 2.0 * kPad;
  const std::size_t frames = sequence.length();
  const double width = kBox * static_cast<double>(frames);

  auto map_x = [&](double v) { return kPad + (v - lo_x) / span_x * usable; };
  // SVG y axis points down; flip so larger coordinates render higher.
  auto map_y = [&](double v) { return kBox - kPad - (v - lo_y) / span_y * usable; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
      << fmt(kBox) << "\" viewBox=\"0 0 " << fmt(width) << " " << fmt(kBox) << "\">\n";
  for (std::size_t t = 0; t < frames; ++t) {
    const ActionPose& f = sequence.frames[t];
    svg << "  <g transform=\"translate(" << fmt(kBox * static_cast<double>(t)) << ",0)\">\n";
    svg << "    <rect x=\"0\" y=\"0\" width=\"" << fmt(kBox) << "\" height=\"" << fmt(kBox)
        << "\" fill=\"none\" stroke=\"#ddd\"/>\n";
    for (const auto& [a, b] : topology.bones) {
      svg << "    <line x1=\"" << fmt(map_x(f[2 * a])) << "\" y1=\"" << fmt(map_y(f[2 * a + 1]))
          << "\" x2=\"" << fmt(map_x(f[2 * b])) << "\" y2=\"" << fmt(map_y(f[2 * b + 1]))
          << "\" stroke=\"#333\" stroke-width=\"1.5\"/>\n";
    }
    for (std::size_t j = 0; j < joints; ++j) {
      svg << "    <circle cx=\"" << fmt(map_x(f[2 * j])) << "\" cy=\"" << fmt(map_y(f[2 * j + 1]))
          << "\" r=\"2\" fill=\"#c33\"/>\n";
    }
    svg << "  </g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string render_csv(const ActionSequence& sequence) {
  sequence.validate();
  std::ostringstream csv;
  csv << "t";
  for (std::size_t k = 0; k < sequence.dim(); ++k) csv << ",c" << k;
  csv << "\n";
  for (std::size_t t = 0; t < sequence.length(); ++t) {
    csv << t;
    for (double v : sequence.frames[t]) csv << "," << fmt_full(v);
    csv << "\n";
  }
  return csv.str();
}

}  // namespace actgen
