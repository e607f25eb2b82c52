#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "smfsync/errors.hpp"
#include "smfsync/sdp.hpp"

namespace smfsync::sdp {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* kind_name(VariableKind k) {
  switch (k) {
    case VariableKind::Symmetric:
      return "symmetric";
    case VariableKind::Rectangular:
      return "rectangular";
    case VariableKind::Nonnegative:
      return "nonnegative";
  }
  return "?";
}

VariableKind parse_kind(const std::string& s, int line) {
  if (s == "symmetric") return VariableKind::Symmetric;
  if (s == "rectangular") return VariableKind::Rectangular;
  if (s == "nonnegative") return VariableKind::Nonnegative;
  throw ParseError("line " + std::to_string(line) + ": unknown variable kind '" + s + "'");
}

void write_upper(std::ostream& os, std::size_t block, std::size_t index, const Mat& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r <= c; ++r)
      if (m(r, c) != 0.0) os << "entry " << block << ' ' << index << ' ' << r << ' ' << c << ' ' << fmt(m(r, c)) << '\n';
}

}  // namespace

void write_text(std::ostream& os, const ConicProgram& p) {
  os << "smfsync-sdp 1\n";
  os << "variables " << p.variables.size() << '\n';
  for (const auto& v : p.variables)
    os << "var " << v.name << ' ' << kind_name(v.kind) << ' ' << v.rows << ' ' << v.cols << '\n';
  os << "free " << p.num_free() << '\n';
  for (std::size_t i = 0; i < p.slots.size(); ++i)
    os << "slot " << i << ' ' << p.slots[i].var.index << ' ' << p.slots[i].row << ' ' << p.slots[i].col << '\n';
  os << "objective";
  for (Eigen::Index i = 0; i < p.b.size(); ++i) os << ' ' << fmt(p.b(i));
  os << '\n';
  os << "blocks " << p.blocks.size() << '\n';
  for (std::size_t j = 0; j < p.blocks.size(); ++j) {
    const auto& b = p.blocks[j];
    os << "block " << j << ' ' << b.dim << ' ' << (b.orthant ? "orthant" : "psd") << '\n';
    write_upper(os, j, 0, b.c);
    for (std::size_t i = 0; i < b.a.size(); ++i) write_upper(os, j, i + 1, b.a[i]);
  }
  os << "end\n";
}

ConicProgram read_text(std::istream& is) {
  ConicProgram p;
  std::string raw;
  int line = 0;
  bool header = false, ended = false;
  Eigen::Index m = -1;
  auto fail = [&](const std::string& what) { throw ParseError("line " + std::to_string(line) + ": " + what); };
  auto need_free = [&] {
    if (m < 0) fail("'free' must precede this record");
  };

  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::string key;
    if (!(ls >> key)) continue;
    if (ended) fail("content after 'end'");
    if (!header) {
      int version = 0;
      if (key != "smfsync-sdp" || !(ls >> version) || version != 1) fail("expected header 'smfsync-sdp 1'");
      header = true;
      continue;
    }
    if (key == "variables") {
      std::size_t n;
      if (!(ls >> n)) fail("bad variable count");
      p.variables.reserve(n);
    } else if (key == "var") {
      std::string name, kind;
      Eigen::Index r, c;
      if (!(ls >> name >> kind >> r >> c)) fail("malformed 'var' record");
      p.variables.push_back({name, parse_kind(kind, line), r, c});
    } else if (key == "free") {
      if (!(ls >> m) || m < 0) fail("bad free-variable count");
      p.b = Vec::Zero(m);
      p.slots.resize(static_cast<std::size_t>(m));
    } else if (key == "slot") {
      need_free();
      std::size_t i, v;
      Eigen::Index r, c;
      if (!(ls >> i >> v >> r >> c)) fail("malformed 'slot' record");
      if (i >= p.slots.size() || v >= p.variables.size()) fail("slot index out of range");
      p.slots[i] = {VarId{v}, r, c};
    } else if (key == "objective") {
      need_free();
      for (Eigen::Index i = 0; i < m; ++i)
        if (!(ls >> p.b(i))) fail("objective has fewer than " + std::to_string(m) + " coefficients");
    } else if (key == "blocks") {
      std::size_t n;
      if (!(ls >> n)) fail("bad block count");
      p.blocks.reserve(n);
    } else if (key == "block") {
      need_free();
      std::size_t j;
      Eigen::Index dim;
      std::string kind;
      if (!(ls >> j >> dim >> kind) || j != p.blocks.size() || dim <= 0) fail("malformed 'block' record");
      if (kind != "psd" && kind != "orthant") fail("unknown cone '" + kind + "'");
      p.blocks.push_back({dim, kind == "orthant", Mat::Zero(dim, dim),
                          std::vector<Mat>(static_cast<std::size_t>(m), Mat::Zero(dim, dim))});
    } else if (key == "entry") {
      std::size_t j, i;
      Eigen::Index r, c;
      double v;
      if (!(ls >> j >> i >> r >> c >> v)) fail("malformed 'entry' record");
      if (j >= p.blocks.size() || i > static_cast<std::size_t>(m)) fail("entry refers to an unknown block or variable");
      auto& b = p.blocks[j];
      if (r < 0 || c < r || c >= b.dim) fail("entry outside the upper triangle");
      Mat& target = i == 0 ? b.c : b.a[i - 1];
      target(r, c) = v;
      target(c, r) = v;
    } else if (key == "end") {
      ended = true;
    } else {
      fail("unknown record '" + key + "'");
    }
  }
  if (!header) throw ParseError("empty input");
  if (!ended) throw ParseError("missing 'end'");
  return p;
}

}  // namespace smfsync::sdp
