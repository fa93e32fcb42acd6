#include "idcrn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace idcrn {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint format is little-endian");

constexpr char kMagic[8] = {'I', 'D', 'C', 'R', 'N', 'C', 'K', 'P'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void add(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  }
};

template <typename Fn>
void for_each_row_major(const Matrix& m, Fn&& fn) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) fn(m(i, j));
}

}  // namespace

std::uint64_t parameter_hash(const EncoderState& state) {
  Fnv1a fnv;
  for (const Matrix* p : state.parameters()) for_each_row_major(*p, [&](double v) { fnv.add(&v, sizeof v); });
  return fnv.h;
}

void save_checkpoint(const EncoderState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path.string());
  const auto& cfg = state.config;
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(cfg.input_dim));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(cfg.latent_dim));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.hidden_dims.size()));
  for (Index h : cfg.hidden_dims) put<std::uint64_t>(out, static_cast<std::uint64_t>(h));
  put<std::uint8_t>(out, cfg.graph_branch ? 1 : 0);
  put<std::uint8_t>(out, cfg.attribute_branch ? 1 : 0);

  const auto params = state.parameters();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const Matrix* p : params) {
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p->rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p->cols()));
  }
  for (const Matrix* p : params) for_each_row_major(*p, [&](double v) { put(out, v); });
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());

  std::ofstream manifest(path.string() + ".manifest");
  if (!manifest) throw std::runtime_error("checkpoint: cannot write manifest for " + path.string());
  manifest << "format idcrn-checkpoint " << kCheckpointVersion << '\n';
  manifest << "input_dim " << cfg.input_dim << "\nlatent_dim " << cfg.latent_dim << "\nhidden";
  for (Index h : cfg.hidden_dims) manifest << ' ' << h;
  manifest << "\ngraph_branch " << cfg.graph_branch << "\nattribute_branch " << cfg.attribute_branch << '\n';
  const auto names = state.parameter_names();
  for (std::size_t i = 0; i < params.size(); ++i) {
    manifest << "block " << names[i] << ' ' << params[i]->rows() << 'x' << params[i]->cols() << '\n';
  }
  manifest << "fnv1a64 " << std::hex << std::setw(16) << std::setfill('0') << parameter_hash(state) << '\n';
}

EncoderState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error("checkpoint: bad magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  EncoderConfig cfg;
  cfg.input_dim = static_cast<Index>(get<std::uint64_t>(in));
  cfg.latent_dim = static_cast<Index>(get<std::uint64_t>(in));
  cfg.hidden_dims.resize(get<std::uint32_t>(in));
  for (Index& h : cfg.hidden_dims) h = static_cast<Index>(get<std::uint64_t>(in));
  cfg.graph_branch = get<std::uint8_t>(in) != 0;
  cfg.attribute_branch = get<std::uint8_t>(in) != 0;

  EncoderState state = init_encoder(cfg, 0);
  auto params = state.parameters();
  const auto blocks = get<std::uint32_t>(in);
  if (blocks != params.size()) throw std::runtime_error("checkpoint: block count does not match dims header");
  for (Matrix* p : params) {
    const auto rows = static_cast<Index>(get<std::uint64_t>(in));
    const auto cols = static_cast<Index>(get<std::uint64_t>(in));
    if (rows != p->rows() || cols != p->cols()) throw std::runtime_error("checkpoint: block shape mismatch");
  }
  for (Matrix* p : params)
    for (Index i = 0; i < p->rows(); ++i)
      for (Index j = 0; j < p->cols(); ++j) (*p)(i, j) = get<double>(in);
  return state;
}

}  // namespace idcrn
