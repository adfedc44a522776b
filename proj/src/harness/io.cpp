#include "ahs/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>

namespace ahs {
namespace {

std::string_view strip_comment(std::string_view line) {
  if (const auto hash = line.find('#'); hash != std::string_view::npos) {
    line = line.substr(0, hash);
  }
  while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) {
    line.remove_suffix(1);
  }
  while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) {
    line.remove_prefix(1);
  }
  return line;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double to_double(std::string_view token, std::size_t line) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value)) {
    throw ParseError(line, "bad number '" + std::string(token) + "'");
  }
  return value;
}

std::vector<Vec3> parse_xyz(std::istream& in) {
  std::vector<Vec3> out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = strip_comment(raw);
    if (line.empty()) continue;
    const auto tokens = split(line);
    if (tokens.size() < 3) throw ParseError(line_no, "expected 'x y z'");
    out.emplace_back(to_double(tokens[0], line_no), to_double(tokens[1], line_no),
                     to_double(tokens[2], line_no));
  }
  return out;
}

std::vector<Vec3> parse_obj(std::istream& in) {
  std::vector<Vec3> out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = strip_comment(raw);
    const auto tokens = split(line);
    if (tokens.empty() || tokens[0] != "v") continue;
    if (tokens.size() < 4) throw ParseError(line_no, "vertex needs three coordinates");
    out.emplace_back(to_double(tokens[1], line_no), to_double(tokens[2], line_no),
                     to_double(tokens[3], line_no));
  }
  return out;
}

std::vector<Vec3> parse_ply(std::istream& in) {
  std::string raw;
  std::size_t line_no = 0;
  auto next = [&](std::vector<std::string_view>& tokens) {
    while (std::getline(in, raw)) {
      ++line_no;
      tokens = split(strip_comment(raw));
      if (!tokens.empty()) return true;
    }
    return false;
  };

  std::vector<std::string_view> tokens;
  if (!next(tokens) || tokens[0] != "ply") throw ParseError(line_no, "missing 'ply' magic");

  // Header: track the vertex element's property order and the element
  // preceding it (their rows must be skipped).
  struct Element {
    std::string name;
    std::size_t count = 0;
    std::size_t properties = 0;
  };
  std::vector<Element> elements;
  int ix = -1, iy = -1, iz = -1;
  bool header_done = false;
  while (!header_done) {
    if (!next(tokens)) throw ParseError(line_no, "unterminated header");
    // `raw` owns the token storage; copy what we keep.
    if (tokens[0] == "format") {
      if (tokens.size() < 2 || tokens[1] != "ascii") {
        throw ParseError(line_no, "only ascii PLY is supported");
      }
    } else if (tokens[0] == "element") {
      if (tokens.size() < 3) throw ParseError(line_no, "bad element record");
      Element e;
      e.name = std::string(tokens[1]);
      e.count = static_cast<std::size_t>(to_double(tokens[2], line_no));
      elements.push_back(e);
    } else if (tokens[0] == "property") {
      if (elements.empty()) throw ParseError(line_no, "property before element");
      auto& e = elements.back();
      if (tokens.size() >= 2 && tokens[1] == "list") {
        if (e.name == "vertex") throw ParseError(line_no, "list property on vertex");
      } else if (e.name == "vertex" && tokens.size() >= 3) {
        const int idx = static_cast<int>(e.properties);
        if (tokens[2] == "x") ix = idx;
        if (tokens[2] == "y") iy = idx;
        if (tokens[2] == "z") iz = idx;
      }
      ++e.properties;
    } else if (tokens[0] == "end_header") {
      header_done = true;
    }
  }
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError(line_no, "vertex lacks x/y/z");

  std::vector<Vec3> out;
  for (const auto& e : elements) {
    for (std::size_t r = 0; r < e.count; ++r) {
      if (!next(tokens)) throw ParseError(line_no + 1, "unexpected end of file");
      if (e.name != "vertex") continue;
      if (tokens.size() < e.properties) throw ParseError(line_no, "short vertex record");
      out.emplace_back(to_double(tokens[ix], line_no), to_double(tokens[iy], line_no),
                       to_double(tokens[iz], line_no));
    }
    if (e.name == "vertex") break;
  }
  return out;
}

}  // namespace

Transform fit_unit_cube(std::span<const Vec3> points) {
  Transform t;
  if (points.empty()) return t;
  Vec3 lo = points[0];
  Vec3 hi = points[0];
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  t.center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo).maxCoeff();
  t.scale = half > 0.0 ? half : 1.0;
  return t;
}

PointFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".ply") return PointFormat::Ply;
  if (ext == ".obj") return PointFormat::Obj;
  if (ext == ".xyz" || ext == ".txt" || ext == ".pts") return PointFormat::Xyz;
  throw Error(ErrorKind::InvalidInput, "unsupported point file extension: " + ext);
}

std::vector<Vec3> parse_points(std::istream& in, PointFormat format) {
  std::vector<Vec3> out;
  switch (format) {
    case PointFormat::Xyz: out = parse_xyz(in); break;
    case PointFormat::Ply: out = parse_ply(in); break;
    case PointFormat::Obj: out = parse_obj(in); break;
  }
  if (out.empty()) throw Error(ErrorKind::InvalidInput, "no points in input");
  return out;
}

std::vector<Vec3> read_points(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return parse_points(in, format_from_path(path));
}

LoadedCloud load_normalized(const std::filesystem::path& path) {
  LoadedCloud out;
  out.points = read_points(path);
  out.transform = fit_unit_cube(out.points);
  for (auto& p : out.points) p = out.transform.apply(p);
  return out;
}

void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer, bool binary) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    writer(out);
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace ahs
