// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/evalkit/detections_io.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "baggagedet/volcore/bvox.hpp"

namespace baggagedet::evalkit {

namespace {

constexpr const char* kHeader = "# baggagedet detections v1";

std::string num(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, int line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("detections line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

}  // namespace

std::string format_detections(const DetectionsByVolume& dets) {
  std::ostringstream os;
  os << kHeader << '\n';
  for (const auto& [vid, list] : dets) {
    if (vid.find(',') != std::string::npos || vid.find('\n') != std::string::npos)
      throw std::invalid_argument("volume id contains a separator: " + vid);
    os << "# volume " << vid << '\n';
    for (const auto& d : list) {
      os << vid << ',' << d.class_id << ',' << num(d.score);
      for (double v : d.box.as_array()) os << ',' << num(v);
      os << '\n';
    }
  }
  return os.str();
}

DetectionsByVolume parse_detections(const std::string& text) {
  DetectionsByVolume out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line == kHeader) header = true;
      else if (line.rfind("# volume ", 0) == 0) out[line.substr(9)];
      continue;
    }
    if (!header) throw std::runtime_error("detections file: missing header");
    std::vector<std::string> f;
    std::size_t pos = 0;
    while (true) {
      const auto next = line.find(',', pos);
      f.push_back(line.substr(pos, next - pos));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (f.size() != 9)
      throw std::runtime_error("detections line " + std::to_string(lineno) + ": expected 9 fields");
    Detection d;
    d.volume_id = f[0];
    const double cls = parse_double(f[1], lineno);
    d.class_id = static_cast<int>(cls);
    if (static_cast<double>(d.class_id) != cls)
      throw std::runtime_error("detections line " + std::to_string(lineno) + ": class id is not an integer");
    d.score = parse_double(f[2], lineno);
    d.box = Box3D(parse_double(f[3], lineno), parse_double(f[4], lineno), parse_double(f[5], lineno),
                  parse_double(f[6], lineno), parse_double(f[7], lineno), parse_double(f[8], lineno));
    out[d.volume_id].push_back(std::move(d));
  }
  if (!header) throw std::runtime_error("detections file: missing header");
  return out;
}

void write_detections(const DetectionsByVolume& dets, const std::filesystem::path& path) {
  write_text_file(path, format_detections(dets));
}

DetectionsByVolume read_detections(const std::filesystem::path& path) { return parse_detections(read_text_file(path)); }

}  // namespace baggagedet::evalkit
