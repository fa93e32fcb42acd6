#include "idcrn/dataset_io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace idcrn {
namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::runtime_error io_error(const fs::path& p, const std::string& what) {
  return std::runtime_error(p.string() + ": " + what);
}

std::ifstream open_in(const fs::path& p, bool binary = false) {
  std::ifstream in(p, binary ? std::ios::binary : std::ios::in);
  if (!in) throw io_error(p, "cannot open for reading");
  return in;
}

std::ofstream open_out(const fs::path& p, bool binary = false) {
  std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
  if (!out) throw io_error(p, "cannot open for writing");
  return out;
}

double parse_double(std::string_view s, const fs::path& p) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw io_error(p, "bad number '" + std::string(s) + "'");
  return v;
}

long long parse_int(std::string_view s, const fs::path& p) {
  const double v = parse_double(s, p);
  const auto i = static_cast<long long>(v);
  if (static_cast<double>(i) != v) throw io_error(p, "expected integer, got '" + std::string(s) + "'");
  return i;
}

// Splits on commas, or on runs of whitespace when delimiter is ' '.
std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> out;
  if (delimiter == ' ') {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      if (j > i) out.push_back(line.substr(i, j - i));
      i = j;
    }
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

std::vector<std::vector<double>> read_table(const fs::path& p, char delimiter) {
  auto in = open_in(p);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    std::vector<double> row;
    for (auto field : split(line, delimiter)) row.push_back(parse_double(field, p));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<Edge> read_edges(const fs::path& p, char delimiter, bool drop_self_loops) {
  std::vector<Edge> edges;
  for (const auto& row : read_table(p, delimiter)) {
    if (row.size() != 2) throw io_error(p, "edge lines need exactly two columns");
    const auto u = static_cast<Index>(row[0]);
    const auto v = static_cast<Index>(row[1]);
    if (drop_self_loops && u == v) continue;
    edges.emplace_back(u, v);
  }
  return edges;
}

Labels read_labels(const fs::path& p) {
  auto in = open_in(p);
  Labels labels;
  std::string line;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    labels.push_back(static_cast<int>(parse_int(line, p)));
  }
  return labels;
}

std::map<std::string, std::string> read_meta(const fs::path& p) {
  auto in = open_in(p);
  std::map<std::string, std::string> meta;
  std::string line;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    std::istringstream fields(line);
    std::string key, value;
    fields >> key >> value;
    if (key.empty() || value.empty()) throw io_error(p, "malformed meta line '" + line + "'");
    meta[key] = value;
  }
  return meta;
}

Index meta_int(const std::map<std::string, std::string>& meta, const std::string& key, const fs::path& p) {
  auto it = meta.find(key);
  if (it == meta.end()) throw io_error(p, "missing key " + key);
  return static_cast<Index>(parse_int(it->second, p));
}

}  // namespace

Graph load_bundle(const fs::path& dir) {
  const auto meta_path = dir / "meta";
  const auto meta = read_meta(meta_path);
  const Index n = meta_int(meta, "N", meta_path);
  const Index d = meta_int(meta, "D", meta_path);
  const int c = static_cast<int>(meta_int(meta, "C", meta_path));

  Matrix x(n, d);
  if (fs::exists(dir / "features.bin")) {
    const auto dtype = meta.count("dtype") ? meta.at("dtype") : std::string("f32");
    const std::size_t width = dtype == "f64" ? 8 : dtype == "f32" ? 4 : 0;
    if (width == 0) throw io_error(meta_path, "unknown dtype " + dtype);
    const auto bin = dir / "features.bin";
    if (fs::file_size(bin) != static_cast<std::uintmax_t>(n * d) * width) {
      throw io_error(bin, "size does not match N x D x " + std::to_string(width));
    }
    auto in = open_in(bin, true);
    std::vector<char> row(static_cast<std::size_t>(d) * width);
    for (Index i = 0; i < n; ++i) {
      in.read(row.data(), static_cast<std::streamsize>(row.size()));
      for (Index j = 0; j < d; ++j) {
        if (width == 8) {
          double v;
          std::memcpy(&v, row.data() + j * 8, 8);
          x(i, j) = v;
        } else {
          float v;
          std::memcpy(&v, row.data() + j * 4, 4);
          x(i, j) = v;
        }
      }
    }
  } else {
    const auto csv = dir / "features.csv";
    const auto rows = read_table(csv, ',');
    if (static_cast<Index>(rows.size()) != n) throw io_error(csv, "row count does not match N");
    for (Index i = 0; i < n; ++i) {
      if (static_cast<Index>(rows[i].size()) != d) {
        throw io_error(csv, "ragged feature rows: row " + std::to_string(i) + " has " +
                                std::to_string(rows[i].size()) + " columns");
      }
      for (Index j = 0; j < d; ++j) x(i, j) = rows[i][j];
    }
  }

  auto edges = fs::exists(dir / "edges.csv") ? read_edges(dir / "edges.csv", ',', false) : std::vector<Edge>{};
  std::optional<Labels> labels;
  if (fs::exists(dir / "labels.csv")) labels = read_labels(dir / "labels.csv");
  return build_graph(std::move(x), std::move(edges), std::move(labels), c);
}

void save_bundle(const Graph& g, const fs::path& dir, const BundleWriteOptions& options) {
  fs::create_directories(dir);
  const Index n = g.num_nodes();
  const Index d = g.feature_dim();
  {
    auto meta = open_out(dir / "meta");
    meta << "N " << n << "\nD " << d << "\nC " << g.num_classes() << '\n';
    if (options.binary_features) meta << "dtype f64\n";
  }
  if (options.binary_features) {
    fs::remove(dir / "features.csv");
    auto out = open_out(dir / "features.bin", true);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < d; ++j) {
        const double v = g.features()(i, j);
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
    }
  } else {
    fs::remove(dir / "features.bin");
    auto out = open_out(dir / "features.csv");
    char buf[32];
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < d; ++j) {
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, g.features()(i, j));
        if (j) out << ',';
        out.write(buf, end - buf);
      }
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / "edges.csv");
    for (const auto& [u, v] : g.edges()) out << u << ',' << v << '\n';
  }
  if (g.labels()) {
    auto out = open_out(dir / "labels.csv");
    for (int l : *g.labels()) out << l << '\n';
  } else {
    fs::remove(dir / "labels.csv");
  }
}

namespace npy {
namespace {

std::string header_value(const std::string& header, const std::string& key) {
  const auto pos = header.find("'" + key + "'");
  if (pos == std::string::npos) return {};
  auto start = header.find(':', pos);
  if (start == std::string::npos) return {};
  ++start;
  while (start < header.size() && header[start] == ' ') ++start;
  if (header[start] == '(') return header.substr(start, header.find(')', start) - start + 1);
  if (header[start] == '\'') return header.substr(start + 1, header.find('\'', start + 1) - start - 1);
  auto end = header.find_first_of(",}", start);
  return header.substr(start, end - start);
}

template <typename T>
double load_as(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return static_cast<double>(v);
}

}  // namespace

Array read(const fs::path& path) {
  auto in = open_in(path, true);
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, "\x93NUMPY", 6) != 0) throw io_error(path, "not an .npy file");
  unsigned char version[2];
  in.read(reinterpret_cast<char*>(version), 2);
  std::uint32_t header_len = 0;
  if (version[0] == 1) {
    std::uint16_t len16;
    in.read(reinterpret_cast<char*>(&len16), 2);
    header_len = len16;
  } else {
    in.read(reinterpret_cast<char*>(&header_len), 4);
  }
  std::string header(header_len, '\0');
  in.read(header.data(), header_len);
  if (!in) throw io_error(path, "truncated header");

  if (header_value(header, "fortran_order") == "True") throw io_error(path, "Fortran-order arrays are not supported");
  const std::string descr = header_value(header, "descr");
  const std::string shape_text = header_value(header, "shape");

  Array a;
  {
    std::string digits;
    for (char ch : shape_text) {
      if (std::isdigit(static_cast<unsigned char>(ch))) {
        digits += ch;
      } else if (!digits.empty()) {
        a.shape.push_back(std::stoll(digits));
        digits.clear();
      }
    }
  }
  Index count = 1;
  for (Index s : a.shape) count *= s;

  if (descr.size() < 2) throw io_error(path, "bad descr");
  if (descr[0] == '>') throw io_error(path, "big-endian arrays are not supported");
  const std::string kind = descr.substr(1);
  std::size_t width = 0;
  double (*convert)(const char*) = nullptr;
  if (kind == "f8") width = 8, convert = load_as<double>;
  else if (kind == "f4") width = 4, convert = load_as<float>;
  else if (kind == "i8") width = 8, convert = load_as<std::int64_t>;
  else if (kind == "i4") width = 4, convert = load_as<std::int32_t>;
  else if (kind == "i2") width = 2, convert = load_as<std::int16_t>;
  else if (kind == "i1") width = 1, convert = load_as<std::int8_t>;
  else if (kind == "u8") width = 8, convert = load_as<std::uint64_t>;
  else if (kind == "u4") width = 4, convert = load_as<std::uint32_t>;
  else if (kind == "u2") width = 2, convert = load_as<std::uint16_t>;
  else if (kind == "u1" || kind == "b1") width = 1, convert = load_as<std::uint8_t>;
  else throw io_error(path, "unsupported dtype " + descr);

  a.data.resize(static_cast<std::size_t>(count));
  constexpr std::size_t kChunk = 1 << 16;
  std::vector<char> buf(kChunk * width);
  for (std::size_t done = 0; done < a.data.size();) {
    const std::size_t take = std::min(kChunk, a.data.size() - done);
    in.read(buf.data(), static_cast<std::streamsize>(take * width));
    if (!in) throw io_error(path, "truncated data");
    for (std::size_t k = 0; k < take; ++k) a.data[done + k] = convert(buf.data() + k * width);
    done += take;
  }
  return a;
}

void write(const fs::path& path, const std::vector<Index>& shape, const std::vector<double>& data, bool as_int64) {
  std::string shape_text = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    shape_text += std::to_string(shape[i]);
    shape_text += shape.size() == 1 ? "," : (i + 1 < shape.size() ? ", " : "");
  }
  shape_text += ")";
  std::string header = std::string("{'descr': '") + (as_int64 ? "<i8" : "<f8") +
                       "', 'fortran_order': False, 'shape': " + shape_text + ", }";
  while ((10 + header.size() + 1) % 64 != 0) header += ' ';
  header += '\n';
  auto out = open_out(path, true);
  out.write("\x93NUMPY\x01\x00", 8);
  const auto len = static_cast<std::uint16_t>(header.size());
  out.write(reinterpret_cast<const char*>(&len), 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (double v : data) {
    if (as_int64) {
      const auto i = static_cast<std::int64_t>(v);
      out.write(reinterpret_cast<const char*>(&i), 8);
    } else {
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  }
}

}  // namespace npy

namespace {

std::optional<fs::path> find_file(const fs::path& src, const std::string& name, const std::vector<std::string>& files) {
  for (const auto& dir : {src, src / "data", src / "graph", src / name}) {
    for (const auto& f : files) {
      if (fs::exists(dir / f)) return dir / f;
    }
  }
  return std::nullopt;
}

Labels labels_from(const npy::Array& a) {
  Labels labels;
  labels.reserve(a.data.size());
  for (double v : a.data) labels.push_back(static_cast<int>(v));
  return labels;
}

// Compacts label ids to 0..C-1 preserving order of first appearance by value.
int compact_labels(Labels& labels) {
  std::map<int, int> remap;
  for (int l : labels) remap.emplace(l, 0);
  int next = 0;
  for (auto& [from, to] : remap) to = next++;
  for (int& l : labels) l = remap.at(l);
  return next;
}

}  // namespace

Graph convert_public_bundle(const fs::path& src, const std::string& name, const fs::path& dst) {
  Matrix x;
  std::vector<Edge> edges;
  Labels labels;

  if (auto feat = find_file(src, name, {name + "_feat.npy"})) {
    const auto fa = npy::read(*feat);
    if (fa.shape.size() != 2) throw io_error(*feat, "expected a 2-D feature array");
    x.resize(fa.shape[0], fa.shape[1]);
    for (Index i = 0; i < fa.shape[0]; ++i)
      for (Index j = 0; j < fa.shape[1]; ++j) x(i, j) = fa.data[static_cast<std::size_t>(i * fa.shape[1] + j)];

    if (auto adj = find_file(src, name, {name + "_adj.npy"})) {
      const auto aa = npy::read(*adj);
      if (aa.shape.size() != 2 || aa.shape[0] != aa.shape[1]) throw io_error(*adj, "expected a square adjacency");
      const Index n = aa.shape[0];
      for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
          if (aa.data[static_cast<std::size_t>(i * n + j)] != 0.0 || aa.data[static_cast<std::size_t>(j * n + i)] != 0.0)
            edges.emplace_back(i, j);
    } else if (auto el = find_file(src, name, {name + "_edges.npy", name + "_edge.npy"})) {
      const auto ea = npy::read(*el);
      if (ea.shape.size() != 2 || (ea.shape[1] != 2 && ea.shape[0] != 2)) throw io_error(*el, "expected an edge list");
      const bool pairs_in_rows = ea.shape[1] == 2;
      const Index m = pairs_in_rows ? ea.shape[0] : ea.shape[1];
      for (Index e = 0; e < m; ++e) {
        const auto u = static_cast<Index>(ea.data[static_cast<std::size_t>(pairs_in_rows ? 2 * e : e)]);
        const auto v = static_cast<Index>(ea.data[static_cast<std::size_t>(pairs_in_rows ? 2 * e + 1 : m + e)]);
        if (u != v) edges.emplace_back(u, v);
      }
    } else {
      throw std::runtime_error("convert: no adjacency or edge list for " + name + " in " + src.string());
    }
    auto lab = find_file(src, name, {name + "_label.npy", name + "_labels.npy"});
    if (!lab) throw std::runtime_error("convert: no labels for " + name + " in " + src.string());
    labels = labels_from(npy::read(*lab));
  } else if (auto txt = find_file(src, name, {name + ".txt"})) {
    const auto rows = read_table(*txt, ' ');
    const Index n = static_cast<Index>(rows.size());
    const Index d = n ? static_cast<Index>(rows.front().size()) : 0;
    x.resize(n, d);
    for (Index i = 0; i < n; ++i) {
      if (static_cast<Index>(rows[i].size()) != d) throw io_error(*txt, "ragged feature rows");
      for (Index j = 0; j < d; ++j) x(i, j) = rows[i][j];
    }
    auto graph = find_file(src, name, {name + "_graph.txt"});
    if (!graph) throw std::runtime_error("convert: no " + name + "_graph.txt in " + src.string());
    edges = read_edges(*graph, ' ', true);
    auto lab = find_file(src, name, {name + "_label.txt"});
    if (!lab) throw std::runtime_error("convert: no " + name + "_label.txt in " + src.string());
    labels = read_labels(*lab);
  } else {
    throw std::runtime_error("convert: no recognized dataset files for " + name + " in " + src.string());
  }

  const int classes = compact_labels(labels);
  Graph g = build_graph(std::move(x), std::move(edges), std::move(labels), classes);
  save_bundle(g, dst, BundleWriteOptions{.binary_features = true});
  return g;
}

}  // namespace idcrn
