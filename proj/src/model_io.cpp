#include "anchorpose/model_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "anchorpose/error.hpp"

namespace anchorpose {

double compute_diameter(std::span<const Vec3> points) {
  if (points.size() < 2)
    throw PreconditionError("diameter needs at least two points");
  double best = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      best = std::max(best, (points[i] - points[j]).squaredNorm());
  return std::sqrt(best);
}

ObjectModel::ObjectModel(std::string id, std::vector<Vec3> points, bool symmetric,
                         Symmetry symmetry)
    : id_(std::move(id)), points_(std::move(points)), diameter_(0.0),
      symmetric_(symmetric), symmetry_(std::move(symmetry)) {
  if (points_.empty())
    throw PreconditionError("object model '" + id_ + "' has no points");
  for (const auto &p : points_)
    if (!p.allFinite())
      throw PreconditionError("object model '" + id_ + "' has non-finite points");
  diameter_ = points_.size() < 2 ? 0.0 : compute_diameter(points_);
  if (!(diameter_ > 0.0))
    throw PreconditionError("object model '" + id_ + "' has zero diameter");
}

// ---------------------------------------------------------------------------
// PLY

namespace {

struct PlyProperty {
  std::string name;
  std::string type;
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

std::vector<std::string> split(const std::string &line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;)
    out.push_back(tok);
  return out;
}

bool is_float_type(const std::string &t) {
  return t == "float" || t == "float32" || t == "double" || t == "float64";
}

bool parse_double(const std::string &tok, double &out) {
  const char *end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

} // namespace

ObjectModel load_ply(const std::filesystem::path &path, std::optional<bool> symmetric) {
  std::ifstream in(path);
  if (!in)
    throw ParseError("cannot open '" + path.string() + "'", 0);

  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line))
      return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    return true;
  };

  if (!next_line() || line != "ply")
    throw ParseError("missing 'ply' magic", lineno ? lineno : 1);

  std::vector<PlyElement> elements;
  bool have_format = false;
  for (;;) {
    if (!next_line())
      throw ParseError("unexpected end of file in header", lineno);
    const auto tok = split(line);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info")
      continue;
    if (tok[0] == "end_header")
      break;
    if (tok[0] == "format") {
      if (tok.size() != 3)
        throw ParseError("malformed format line", lineno);
      if (tok[1] != "ascii")
        throw ParseError("unsupported PLY format '" + tok[1] + "' (only ascii)", lineno);
      have_format = true;
    } else if (tok[0] == "element") {
      std::size_t count = 0;
      if (tok.size() != 3 ||
          std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), count).ec !=
              std::errc())
        throw ParseError("malformed element line", lineno);
      elements.push_back({tok[1], count, {}});
    } else if (tok[0] == "property") {
      if (elements.empty())
        throw ParseError("property before any element", lineno);
      if (tok.size() == 3)
        elements.back().props.push_back({tok[2], tok[1], false});
      else if (tok.size() == 5 && tok[1] == "list")
        elements.back().props.push_back({tok[4], tok[3], true});
      else
        throw ParseError("malformed property line", lineno);
    } else {
      throw ParseError("unknown header keyword '" + tok[0] + "'", lineno);
    }
  }
  if (!have_format)
    throw ParseError("missing format line", lineno);

  const auto vertex_it = std::find_if(elements.begin(), elements.end(),
                                      [](const auto &e) { return e.name == "vertex"; });
  if (vertex_it == elements.end())
    throw ParseError("no vertex element", lineno);
  std::array<int, 3> slot{-1, -1, -1};
  for (std::size_t k = 0; k < vertex_it->props.size(); ++k) {
    const auto &p = vertex_it->props[k];
    const int axis = p.name == "x" ? 0 : p.name == "y" ? 1 : p.name == "z" ? 2 : -1;
    if (axis < 0)
      continue;
    if (p.is_list || !is_float_type(p.type))
      throw ParseError("vertex property '" + p.name + "' must be float or double",
                       lineno);
    slot[axis] = static_cast<int>(k);
  }
  if (std::find(slot.begin(), slot.end(), -1) != slot.end())
    throw ParseError("vertex element lacks x, y or z", lineno);

  // ASCII PLY stores one element instance per line
  for (auto it = elements.begin(); it != vertex_it; ++it)
    for (std::size_t i = 0; i < it->count; ++i)
      if (!next_line())
        throw ParseError("unexpected end of file in element '" + it->name + "'", lineno);

  std::vector<Vec3> points;
  points.reserve(vertex_it->count);
  for (std::size_t i = 0; i < vertex_it->count; ++i) {
    if (!next_line())
      throw ParseError("expected " + std::to_string(vertex_it->count) +
                           " vertices, found " + std::to_string(i),
                       lineno);
    const auto tok = split(line);
    Vec3 p;
    std::size_t pos = 0;
    for (std::size_t k = 0; k < vertex_it->props.size(); ++k) {
      const auto &prop = vertex_it->props[k];
      if (pos >= tok.size())
        throw ParseError("too few values on vertex line", lineno);
      if (prop.is_list) {
        std::size_t n = 0;
        if (std::from_chars(tok[pos].data(), tok[pos].data() + tok[pos].size(), n).ec !=
            std::errc())
          throw ParseError("bad list length", lineno);
        pos += 1 + n;
        continue;
      }
      for (int axis = 0; axis < 3; ++axis)
        if (slot[axis] == static_cast<int>(k)) {
          double v = 0.0;
          if (!parse_double(tok[pos], v) || !std::isfinite(v))
            throw ParseError("bad coordinate '" + tok[pos] + "'", lineno);
          p[axis] = v;
        }
      ++pos;
    }
    if (pos > tok.size())
      throw ParseError("too few values on vertex line", lineno);
    points.push_back(p);
  }

  bool sym = false;
  if (symmetric) {
    sym = *symmetric;
  } else if (const auto meta = meta_path_for(path); std::filesystem::exists(meta)) {
    std::ifstream mf(meta);
    try {
      const auto j = nlohmann::json::parse(mf);
      sym = j.at("symmetric").get<bool>();
    } catch (const nlohmann::json::exception &e) {
      throw ParseError("bad sidecar '" + meta.string() + "': " + e.what(), 0);
    }
  }
  try {
    return ObjectModel(path.stem().string(), std::move(points), sym);
  } catch (const PreconditionError &e) {
    throw ParseError(e.what(), 0);
  }
}

void write_ply(const std::filesystem::path &path, std::span<const Vec3> points) {
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write '" + path.string() + "'");
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  char buf[64];
  for (const auto &p : points) {
    for (int axis = 0; axis < 3; ++axis) {
      auto res = std::to_chars(buf, buf + sizeof buf, p[axis]);
      out.write(buf, res.ptr - buf);
      out.put(axis == 2 ? '\n' : ' ');
    }
  }
  if (!out)
    throw Error("failed writing '" + path.string() + "'");
}

std::filesystem::path meta_path_for(const std::filesystem::path &ply_path) {
  auto p = ply_path;
  p.replace_filename(ply_path.stem().string() + ".meta.json");
  return p;
}

void write_meta(const std::filesystem::path &ply_path, bool symmetric) {
  std::ofstream out(meta_path_for(ply_path));
  if (!out)
    throw Error("cannot write sidecar for '" + ply_path.string() + "'");
  out << nlohmann::json{{"symmetric", symmetric}}.dump() << '\n';
}

// ---------------------------------------------------------------------------
// Synthetic shapes

namespace {

using SignedPermutation = Eigen::Matrix3d; // entries in {-1, 0, 1}

Mat3 perm(std::initializer_list<double> rows) {
  Mat3 m;
  auto it = rows.begin();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      m(r, c) = *it++;
  return m;
}

/// D2 for a generic box, D4 (about z) when dx == dy. Exact integer matrices
/// so replicated samples are bitwise images of each other.
std::vector<SignedPermutation> box_group(const BoxSpec &b) {
  std::vector<SignedPermutation> g{
      Mat3::Identity(),
      perm({1, 0, 0, 0, -1, 0, 0, 0, -1}),
      perm({-1, 0, 0, 0, 1, 0, 0, 0, -1}),
      perm({-1, 0, 0, 0, -1, 0, 0, 0, 1}),
  };
  if (b.dx == b.dy) {
    g.push_back(perm({0, -1, 0, 1, 0, 0, 0, 0, 1}));
    g.push_back(perm({0, 1, 0, -1, 0, 0, 0, 0, 1}));
    g.push_back(perm({0, 1, 0, 1, 0, 0, 0, 0, -1}));
    g.push_back(perm({0, -1, 0, -1, 0, 0, 0, 0, -1}));
  }
  return g;
}

Vec3 sample_box_surface(const BoxSpec &b, Rng &rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const double ax = b.dy * b.dz, ay = b.dx * b.dz, az = b.dx * b.dy;
  std::uniform_real_distribution<double> pick(0.0, ax + ay + az);
  const double r = pick(rng);
  const double side = std::uniform_int_distribution<int>(0, 1)(rng) ? 0.5 : -0.5;
  if (r < ax)
    return {side * b.dx, u(rng) * b.dy, u(rng) * b.dz};
  if (r < ax + ay)
    return {u(rng) * b.dx, side * b.dy, u(rng) * b.dz};
  return {u(rng) * b.dx, u(rng) * b.dy, side * b.dz};
}

ObjectModel make_box(const BoxSpec &b, Sampling sampling, const std::string &id,
                     Rng &rng) {
  if (!(b.dx > 0 && b.dy > 0 && b.dz > 0) || b.n < 8)
    throw PreconditionError("box needs positive dimensions and n >= 8");
  const auto group = box_group(b);
  Symmetry sym;
  sym.rotations.clear();
  for (const auto &g : group)
    sym.rotations.push_back(matrix_to_quat(g));

  std::vector<Vec3> pts;
  if (sampling == Sampling::Random) {
    for (std::size_t i = 0; i < b.n; ++i)
      pts.push_back(sample_box_surface(b, rng));
  } else {
    const std::size_t base = (b.n + group.size() - 1) / group.size();
    for (std::size_t i = 0; i < base; ++i) {
      const Vec3 p = sample_box_surface(b, rng);
      for (const auto &g : group)
        pts.push_back(g * p);
    }
  }
  return ObjectModel(id, std::move(pts), true, std::move(sym));
}

ObjectModel make_cylinder(const CylinderSpec &c, Sampling sampling,
                          const std::string &id, Rng &rng) {
  if (!(c.radius > 0 && c.height > 0) || c.n < 8)
    throw PreconditionError("cylinder needs positive dimensions and n >= 8");
  const double pi = std::numbers::pi;
  const double half = 0.5 * c.height;
  const double lateral = 2 * pi * c.radius * c.height;
  const double caps = 2 * pi * c.radius * c.radius;

  std::vector<Vec3> pts;
  if (sampling == Sampling::Random) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < c.n; ++i) {
      const double theta = 2 * pi * u(rng);
      if (u(rng) * (lateral + caps) < lateral) {
        pts.emplace_back(c.radius * std::cos(theta), c.radius * std::sin(theta),
                         (u(rng) - 0.5) * c.height);
      } else {
        const double r = c.radius * std::sqrt(u(rng));
        const double z = u(rng) < 0.5 ? -half : half;
        pts.emplace_back(r * std::cos(theta), r * std::sin(theta), z);
      }
    }
  } else {
    const double spacing = std::sqrt((lateral + caps) / static_cast<double>(c.n));
    const std::size_t steps =
        c.angular_steps ? c.angular_steps
                        : std::max<std::size_t>(8, std::lround(2 * pi * c.radius / spacing));
    const std::size_t rings = std::max<std::size_t>(2, std::lround(c.height / spacing) + 1);
    const std::size_t cap_rings = std::max<std::size_t>(1, std::lround(c.radius / spacing));
    auto ring = [&](double r, double z) {
      for (std::size_t k = 0; k < steps; ++k) {
        const double theta = 2 * pi * static_cast<double>(k) / static_cast<double>(steps);
        pts.emplace_back(r * std::cos(theta), r * std::sin(theta), z);
      }
    };
    for (std::size_t j = 0; j < rings; ++j)
      ring(c.radius, -half + c.height * static_cast<double>(j) / static_cast<double>(rings - 1));
    for (std::size_t j = 1; j < cap_rings; ++j)
      for (double z : {-half, half})
        ring(c.radius * static_cast<double>(j) / static_cast<double>(cap_rings), z);
  }
  Symmetry sym;
  sym.rotations.push_back(UnitQuaternion(0, 1, 0, 0));
  sym.continuous_axis = Vec3::UnitZ();
  return ObjectModel(id, std::move(pts), true, std::move(sym));
}

ObjectModel make_blob(const BlobSpec &b, const std::string &id, Rng &rng) {
  if (b.n < 8)
    throw PreconditionError("blob needs n >= 8");
  std::uniform_real_distribution<double> amp(0.2, 0.6);
  std::vector<std::pair<Vec3, double>> bumps;
  for (int j = 0; j < 6; ++j)
    bumps.emplace_back(random_unit_vector(rng), amp(rng));
  const Vec3 axes(0.06, 0.045, 0.03);
  std::vector<Vec3> pts;
  Vec3 centroid = Vec3::Zero();
  for (std::size_t i = 0; i < b.n; ++i) {
    const Vec3 u = random_unit_vector(rng);
    double radius = 1.0;
    for (const auto &[c, a] : bumps)
      radius += a * std::exp(4.0 * (u.dot(c) - 1.0));
    pts.push_back(radius * u.cwiseProduct(axes));
    centroid += pts.back();
  }
  centroid /= static_cast<double>(b.n);
  for (auto &p : pts)
    p -= centroid;
  return ObjectModel(id, std::move(pts), false);
}

} // namespace

ObjectModel generate_shape(const SyntheticShapeSpec &spec, Rng &rng) {
  return std::visit(
      [&](const auto &s) -> ObjectModel {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CylinderSpec>)
          return make_cylinder(s, spec.sampling, spec.id, rng);
        else if constexpr (std::is_same_v<T, BoxSpec>)
          return make_box(s, spec.sampling, spec.id, rng);
        else
          return make_blob(s, spec.id, rng);
      },
      spec.shape);
}

} // namespace anchorpose
