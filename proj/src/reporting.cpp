#include "idcrn/reporting.hpp"

#include <png.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "idcrn/idcrm.hpp"

namespace idcrn {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void put_double(std::string& line, double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  line.append(buf, r.ptr);
}

double parse_double(std::string_view s, const std::filesystem::path& path, std::size_t line_no) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

void colormap(double v, png_byte* rgb) {
  if (!std::isfinite(v)) v = 0.0;
  v = std::clamp(v, -1.0, 1.0);
  const auto c = [](double t) { return static_cast<png_byte>(std::lround(255.0 * t)); };
  if (v >= 0) {
    rgb[0] = 255;
    rgb[1] = rgb[2] = c(1.0 - v);
  } else {
    rgb[0] = rgb[1] = c(1.0 + v);
    rgb[2] = 255;
  }
}

void write_png(const Matrix& m, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("png encoding failed for " + path.string());
  }
  const auto w = static_cast<png_uint_32>(std::max<Index>(m.cols(), 1));
  const auto h = static_cast<png_uint_32>(std::max<Index>(m.rows(), 1));
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(3 * static_cast<std::size_t>(w), 255);
  for (png_uint_32 r = 0; r < h; ++r) {
    for (png_uint_32 c = 0; c < w; ++c)
      if (r < m.rows() && c < m.cols()) colormap(m(r, c), &row[3 * c]);
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

std::vector<Index> label_order(const Labels& labels) {
  std::vector<Index> order(labels.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return labels[a] < labels[b]; });
  return order;
}

HeatmapSpec similarity_matrix(const Matrix& z, const Labels& labels) {
  if (static_cast<Index>(labels.size()) != z.rows()) throw std::invalid_argument("heatmap: labels length mismatch");
  HeatmapSpec spec;
  spec.order = label_order(labels);
  const Index n = z.rows();
  Matrix permuted(n, z.cols());
  for (Index r = 0; r < n; ++r) permuted.row(r) = z.row(spec.order[r]);
  spec.similarity = cosine_similarity(permuted, permuted);
  return spec;
}

Matrix downsample(const Matrix& m, Index max_pixels) {
  if (max_pixels < 1) throw std::invalid_argument("downsample: max_pixels must be positive");
  if (m.rows() <= max_pixels && m.cols() <= max_pixels) return m;
  const auto bins = [&](Index n) { return std::min(n, max_pixels); };
  const Index rows = bins(m.rows()), cols = bins(m.cols());
  Matrix out(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const Index r0 = r * m.rows() / rows, r1 = (r + 1) * m.rows() / rows;
    for (Index c = 0; c < cols; ++c) {
      const Index c0 = c * m.cols() / cols, c1 = (c + 1) * m.cols() / cols;
      out(r, c) = m.block(r0, c0, r1 - r0, c1 - c0).mean();
    }
  }
  return out;
}

HeatmapSpec similarity_heatmap(const Matrix& z, const Labels& labels, const std::filesystem::path& out_path) {
  HeatmapSpec spec = similarity_matrix(z, labels);
  write_png(downsample(spec.similarity), out_path);
  std::filesystem::path csv = out_path;
  csv.replace_extension(".csv");
  write_matrix_csv(spec.similarity, csv);
  return spec;
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
  auto out = open_out(path);
  std::string line;
  for (Index r = 0; r < m.rows(); ++r) {
    line.clear();
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) line += ',';
      put_double(line, m(r, c));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    for (auto f : split(line)) row.push_back(parse_double(f, path, line_no));
    if (!rows.empty() && row.size() != rows.front().size()) throw std::runtime_error(path.string() + ": ragged rows");
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  return m;
}

void dump_embeddings(const Matrix& z, const Labels& labels, const std::filesystem::path& path) {
  if (static_cast<Index>(labels.size()) != z.rows()) throw std::invalid_argument("dump_embeddings: labels length mismatch");
  auto out = open_out(path);
  std::string line;
  for (Index c = 0; c < z.cols(); ++c) line += "z" + std::to_string(c) + ',';
  line += "label\n";
  out << line;
  for (Index r = 0; r < z.rows(); ++r) {
    line.clear();
    for (Index c = 0; c < z.cols(); ++c) {
      put_double(line, z(r, c));
      line += ',';
    }
    line += std::to_string(labels[r]);
    line += '\n';
    out << line;
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header");
  const auto header = split(line);
  if (header.empty() || header.back() != "label") throw std::runtime_error(path.string() + ": bad header");
  const std::size_t d = header.size() - 1;
  std::vector<double> values;
  EmbeddingTable t;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != d + 1) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": wrong width");
    for (std::size_t c = 0; c < d; ++c) values.push_back(parse_double(fields[c], path, line_no));
    t.labels.push_back(static_cast<int>(parse_double(fields[d], path, line_no)));
  }
  t.z.resize(static_cast<Index>(t.labels.size()), static_cast<Index>(d));
  for (Index r = 0; r < t.z.rows(); ++r)
    for (Index c = 0; c < t.z.cols(); ++c) t.z(r, c) = values[r * d + c];
  return t;
}

}  // namespace idcrn
