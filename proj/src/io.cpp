#include "mixfield/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>

#include "mixfield/errors.hpp"

namespace mixfield {

namespace {

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

void finish(std::ostream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

template <class T>
void put(std::ostream& out, T v) {
  const T le = to_little(v);
  out.write(reinterpret_cast<const char*>(&le), sizeof(T));
}

// Sequential little-endian reader that reports the offset of any shortfall.
class ByteReader {
public:
  explicit ByteReader(std::istream& in) : in_(in) {}

  template <class T>
  T get(const char* what) {
    T v;
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got != sizeof(T)) {
      throw FormatError(std::string("grid file truncated while reading ") + what + " at byte " +
                            std::to_string(offset_ + got),
                        offset_ + got);
    }
    offset_ += sizeof(T);
    return to_little(v);
  }

  std::size_t offset() const { return offset_; }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

private:
  std::istream& in_;
  std::size_t offset_ = 0;
};

[[noreturn]] void format_error(const std::string& what, std::size_t position) {
  throw FormatError(what + " (byte " + std::to_string(position) + ")", position);
}

}  // namespace

void write_grid(std::ostream& out, const GridField& grid, GridValueType type) {
  out.write("ANFD", 4);
  put<std::uint32_t>(out, 1);
  for (auto d : grid.dims()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (int a = 0; a < 3; ++a) put<double>(out, grid.bbox().min[a]);
  for (int a = 0; a < 3; ++a) put<double>(out, grid.bbox().max[a]);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(type));
  for (double v : grid.values()) {
    if (type == GridValueType::F32) {
      put<float>(out, static_cast<float>(v));
    } else {
      put<double>(out, v);
    }
  }
}

void write_grid(const std::filesystem::path& path, const GridField& grid, GridValueType type) {
  for (auto d : grid.dims()) {
    if (d > std::numeric_limits<std::uint32_t>::max()) throw DomainError("grid dimension too large for the file format");
  }
  auto out = open_out(path, true);
  write_grid(out, grid, type);
  finish(out, path);
}

GridFile read_grid(std::istream& in) {
  ByteReader r(in);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.get<std::uint8_t>("magic"));
  if (std::memcmp(magic, "ANFD", 4) != 0) format_error("bad grid magic", 0);
  if (r.get<std::uint32_t>("version") != 1) format_error("unsupported grid version", 4);

  GridDims dims;
  std::uint64_t count = 1;
  for (auto& d : dims) {
    d = r.get<std::uint32_t>("dimensions");
    count *= d;
  }
  for (std::size_t a = 0; a < 3; ++a) {
    if (dims[a] < 2) format_error("grid dimension below 2", 8 + 4 * a);
  }
  if (count > (std::uint64_t(1) << 34)) format_error("grid too large", 8);

  Aabb box;
  for (int a = 0; a < 3; ++a) box.min[a] = r.get<double>("bounding box");
  for (int a = 0; a < 3; ++a) box.max[a] = r.get<double>("bounding box");
  if (!box.valid()) format_error("degenerate or non-finite bounding box", 20);

  const auto tag = r.get<std::uint32_t>("value type");
  if (tag > 1) format_error("unknown value type tag " + std::to_string(tag), 68);
  const auto type = static_cast<GridValueType>(tag);

  std::vector<double> values(count);
  for (auto& v : values) {
    const std::size_t at = r.offset();
    v = type == GridValueType::F32 ? static_cast<double>(r.get<float>("payload")) : r.get<double>("payload");
    if (!std::isfinite(v)) format_error("non-finite grid value", at);
  }
  if (!r.at_end()) format_error("trailing bytes after grid payload", r.offset());
  return {GridField(dims, box, std::move(values)), type};
}

GridFile read_grid(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  return read_grid(in);
}

// ---------------------------------------------------------------------------

void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  char buf[96];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
    out << buf;
  }
  for (const Face& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  auto out = open_out(path, false);
  write_obj(out, mesh);
  finish(out, path);
}

namespace {

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view tok, T& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

[[noreturn]] void line_error(const std::string& what, std::size_t line) {
  throw FormatError("OBJ line " + std::to_string(line) + ": " + what, line);
}

}  // namespace

TriangleMesh read_obj(std::istream& in) {
  TriangleMesh mesh;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const auto tokens = split_ws(std::string_view(line).substr(0, hash));
    if (tokens.empty()) continue;
    const auto key = tokens[0];
    if (key == "v") {
      if (tokens.size() != 4 && tokens.size() != 5) line_error("vertex needs 3 coordinates", number);
      Vec3 p;
      for (int a = 0; a < 3; ++a) {
        if (!parse_number(tokens[a + 1], p[a]) || !std::isfinite(p[a])) {
          line_error("bad coordinate '" + std::string(tokens[a + 1]) + "'", number);
        }
      }
      mesh.vertices.push_back(p);
    } else if (key == "f") {
      if (tokens.size() < 4) line_error("face needs at least 3 indices", number);
      std::vector<std::uint32_t> idx;
      for (std::size_t t = 1; t < tokens.size(); ++t) {
        const auto tok = tokens[t].substr(0, tokens[t].find('/'));
        long long i = 0;
        if (!parse_number(tok, i)) line_error("bad index '" + std::string(tokens[t]) + "'", number);
        if (i == 0) line_error("index 0 is invalid (indices are 1-based)", number);
        const long long n = static_cast<long long>(mesh.vertices.size());
        const long long resolved = i > 0 ? i - 1 : n + i;
        if (resolved < 0 || resolved >= n) line_error("index " + std::to_string(i) + " out of range", number);
        idx.push_back(static_cast<std::uint32_t>(resolved));
      }
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) mesh.faces.push_back({idx[0], idx[k], idx[k + 1]});
    } else if (key == "vn" || key == "vt" || key == "vp" || key == "o" || key == "g" || key == "s" ||
               key == "usemtl" || key == "mtllib") {
      continue;
    } else {
      line_error("unknown record '" + std::string(key) + "'", number);
    }
  }
  return mesh;
}

TriangleMesh read_obj(const std::filesystem::path& path) {
  auto in = open_in(path, false);
  return read_obj(in);
}

// ---------------------------------------------------------------------------

namespace {
std::pair<int, int> in_plane_axes(int axis) {
  return axis == 0 ? std::pair{1, 2} : axis == 1 ? std::pair{0, 2} : std::pair{0, 1};
}
}  // namespace

SliceImage sample_slice(const ScalarField& field, const Aabb& bbox, SlicePlane plane,
                        int resolution) {
  if (plane.axis < 0 || plane.axis > 2) throw DomainError("slice axis must be 0, 1 or 2");
  if (resolution < 2) throw DomainError("slice resolution must be at least 2");
  if (!(plane.offset >= bbox.min[plane.axis] && plane.offset <= bbox.max[plane.axis])) {
    throw DomainError("slice plane lies outside the bounding box");
  }
  const auto [ua, va] = in_plane_axes(plane.axis);
  const Vec3 ext = bbox.extent();
  const double pixel = std::max(ext[ua], ext[va]) / resolution;
  SliceImage img;
  img.width = std::max(1, static_cast<int>(std::lround(ext[ua] / pixel)));
  img.height = std::max(1, static_cast<int>(std::lround(ext[va] / pixel)));
  img.values.resize(std::size_t(img.width) * img.height);
  for (int row = 0; row < img.height; ++row) {
    for (int u = 0; u < img.width; ++u) {
      Vec3 p;
      p[plane.axis] = plane.offset;
      p[ua] = bbox.min[ua] + (u + 0.5) * ext[ua] / img.width;
      p[va] = bbox.max[va] - (row + 0.5) * ext[va] / img.height;
      img.values[std::size_t(row) * img.width + u] = field.value(p);
    }
  }
  return img;
}

std::uint8_t slice_grey(double value) {
  const double c = std::clamp(value, -0.2, 0.2);
  return static_cast<std::uint8_t>(std::lround((c + 0.2) / 0.4 * 255.0));
}

std::array<std::uint8_t, 3> overlay_colour(double iso, std::size_t i) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 4> kCycle{
      {{255, 165, 0}, {0, 255, 255}, {255, 0, 255}, {0, 200, 0}}};
  if (iso == 0.0) return {255, 255, 255};
  return kCycle[i % kCycle.size()];
}

ContourSummary contour_summary(const SliceImage& img, double iso) {
  const int w = img.width, h = img.height;
  ContourSummary out;
  if (w < 2 || h < 2) return out;
  // Node ids: horizontal pixel edges first, then vertical ones.
  const std::size_t horizontal = std::size_t(w - 1) * h;
  const std::size_t nodes = horizontal + std::size_t(w) * (h - 1);
  auto hedge = [&](int u, int row) { return std::size_t(row) * (w - 1) + u; };
  auto vedge = [&](int u, int row) { return horizontal + std::size_t(row) * w + u; };

  std::vector<std::size_t> parent(nodes);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::vector<std::uint8_t> degree(nodes, 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto link = [&](std::size_t a, std::size_t b) {
    ++degree[a];
    ++degree[b];
    parent[find(a)] = find(b);
    ++out.segments;
  };

  for (int row = 0; row + 1 < h; ++row) {
    for (int u = 0; u + 1 < w; ++u) {
      // Corners counter-clockwise: top-left, top-right, bottom-right, bottom-left.
      const double c[4] = {img.at(u, row), img.at(u + 1, row), img.at(u + 1, row + 1), img.at(u, row + 1)};
      const std::size_t e[4] = {hedge(u, row), vedge(u + 1, row), hedge(u, row + 1), vedge(u, row)};
      std::size_t crossed[4];
      int n = 0;
      for (int k = 0; k < 4; ++k) {
        if ((c[k] < iso) != (c[(k + 1) % 4] < iso)) crossed[n++] = k;
      }
      if (n == 2) {
        link(e[crossed[0]], e[crossed[1]]);
      } else if (n == 4) {
        const bool centre_inside = (c[0] + c[1] + c[2] + c[3]) / 4.0 < iso;
        const bool first_inside = c[0] < iso;
        if (centre_inside == first_inside) {
          link(e[0], e[1]);
          link(e[2], e[3]);
        } else {
          link(e[3], e[0]);
          link(e[1], e[2]);
        }
      }
    }
  }

  std::vector<std::uint8_t> open(nodes, 0), used(nodes, 0);
  for (std::size_t i = 0; i < nodes; ++i) {
    if (degree[i] == 0) continue;
    const auto r = find(i);
    used[r] = 1;
    if (degree[i] == 1) open[r] = 1;
  }
  for (std::size_t i = 0; i < nodes; ++i) {
    if (!used[i]) continue;
    if (open[i]) {
      ++out.open_chains;
    } else {
      ++out.closed_loops;
    }
  }
  return out;
}

std::vector<bool> contour_mask(const SliceImage& img, double iso) {
  std::vector<bool> mask(img.values.size(), false);
  for (int row = 0; row < img.height; ++row) {
    for (int u = 0; u < img.width; ++u) {
      const bool in = img.at(u, row) < iso;
      const bool right = u + 1 < img.width && (img.at(u + 1, row) < iso) != in;
      const bool below = row + 1 < img.height && (img.at(u, row + 1) < iso) != in;
      if (right || below) mask[std::size_t(row) * img.width + u] = true;
    }
  }
  return mask;
}

void write_pgm(const std::filesystem::path& path, const SliceImage& img) {
  auto out = open_out(path, true);
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  for (double v : img.values) out.put(static_cast<char>(slice_grey(v)));
  finish(out, path);
}

void write_ppm(const std::filesystem::path& path, const SliceImage& img,
               std::span<const double> iso_overlays) {
  std::vector<std::array<std::uint8_t, 3>> rgb(img.values.size());
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    const auto g = slice_grey(img.values[i]);
    rgb[i] = {g, g, g};
  }
  for (std::size_t k = 0; k < iso_overlays.size(); ++k) {
    const auto mask = contour_mask(img, iso_overlays[k]);
    const auto colour = overlay_colour(iso_overlays[k], k);
    for (std::size_t i = 0; i < rgb.size(); ++i) {
      if (mask[i]) rgb[i] = colour;
    }
  }
  auto out = open_out(path, true);
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  for (const auto& px : rgb) out.write(reinterpret_cast<const char*>(px.data()), 3);
  finish(out, path);
}

// ---------------------------------------------------------------------------

namespace {
std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

void write_profile_csv(const std::filesystem::path& path, const RayProfile& p) {
  auto out = open_out(path, false);
  out << "t,f,sigma,T,w\n";
  for (std::size_t i = 0; i < p.ts.size(); ++i) {
    out << num(p.ts[i]) << ',' << num(p.f[i]) << ',' << num(p.sigma[i]) << ',' << num(p.T[i]) << ','
        << num(p.w[i]) << '\n';
  }
  finish(out, path);
}

void write_sweep_csv(const std::filesystem::path& path,
                     std::span<const TheoremCaseReport> reports) {
  auto out = open_out(path, false);
  out << "s,d0,m,step,alpha_quad,alpha_closed,alpha_error,t_star,t_expected,t_error,pass\n";
  for (const auto& r : reports) {
    out << num(r.cfg.s) << ',' << num(r.cfg.d0()) << ',' << num(r.cfg.m) << ',' << num(r.cfg.step) << ','
        << num(r.alpha_quad) << ',' << num(r.alpha_closed) << ',' << num(std::abs(r.alpha_quad - r.alpha_closed))
        << ',' << num(r.t_star) << ',' << num(r.t_expected) << ',' << num(std::abs(r.t_star - r.t_expected))
        << ',' << (r.pass ? 1 : 0) << '\n';
  }
  finish(out, path);
}

void write_loss_csv(const std::filesystem::path& path, const StageResult& stage1,
                    const StageResult& stage2) {
  auto out = open_out(path, false);
  out << "stage,epoch,field_term,regularizer,total\n";
  int stage = 1;
  for (const StageResult* s : {&stage1, &stage2}) {
    for (std::size_t e = 0; e < s->history.size(); ++e) {
      const auto& l = s->history[e];
      out << stage << ',' << e << ',' << num(l.field) << ',' << num(l.regularizer) << ',' << num(l.total) << '\n';
    }
    const auto& l = s->final_loss;
    if (!s->history.empty()) {
      out << stage << ',' << s->history.size() << ',' << num(l.field) << ',' << num(l.regularizer) << ','
          << num(l.total) << '\n';
    }
    ++stage;
  }
  finish(out, path);
}

void write_eval_csv(const std::filesystem::path& path, const ChamferReport& r,
                    std::span<const CompletenessSample> curve) {
  auto out = open_out(path, false);
  out << "metric,value\n";
  out << "g2d_e-3," << num(r.g2d * 1e3) << '\n';
  out << "d2g_e-3," << num(r.d2g * 1e3) << '\n';
  out << "cd_e-3," << num(r.cd * 1e3) << '\n';
  out << "gt_samples," << r.gt_count << '\n';
  out << "rec_samples," << r.rec_count << '\n';
  out << "\nthreshold,fraction\n";
  for (const auto& c : curve) out << num(c.threshold) << ',' << num(c.fraction) << '\n';
  finish(out, path);
}

}  // namespace mixfield
