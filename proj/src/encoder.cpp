#include "idcrn/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "idcrn/rng.hpp"

namespace idcrn {
namespace {

Matrix activate(Matrix pre, Activation a) {
  if (a == Activation::kTanh) pre = pre.array().tanh().matrix();
  return pre;
}

// d(loss)/d(pre-activation) given d(loss)/d(output) and the output.
Matrix activation_backward(const Matrix& d_out, const Matrix& out, Activation a) {
  if (a == Activation::kTanh) return (d_out.array() * (1.0 - out.array().square())).matrix();
  return d_out;
}

Matrix affine(const Matrix& input, const Layer& layer) {
  return (input * layer.weight).rowwise() + layer.bias.row(0);
}

Layer make_layer(Index fan_in, Index fan_out, Activation a, Rng& rng) {
  Layer layer;
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  layer.weight.resize(fan_in, fan_out);
  for (Index i = 0; i < fan_in; ++i)
    for (Index j = 0; j < fan_out; ++j) layer.weight(i, j) = rng.uniform(-limit, limit);
  layer.bias = Matrix::Zero(1, fan_out);
  layer.activation = a;
  return layer;
}

std::vector<Layer> make_stack(const std::vector<Index>& dims, Rng& rng) {
  std::vector<Layer> stack;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const bool last = l + 2 == dims.size();
    stack.push_back(make_layer(dims[l], dims[l + 1], last ? Activation::kIdentity : Activation::kTanh, rng));
  }
  return stack;
}

template <typename Fn>
void for_each_layer(std::vector<Layer>& g, std::vector<Layer>& a, std::vector<Layer>& d, Fn&& fn) {
  for (auto* stack : {&g, &a, &d})
    for (auto& layer : *stack) fn(layer);
}

void check_rows(const Matrix& x, PropagationRef adjacency) {
  if (adjacency.size() != x.rows()) {
    throw std::invalid_argument("encode: dimension mismatch between adjacency (" + std::to_string(adjacency.size()) +
                                ") and features (" + std::to_string(x.rows()) + " rows)");
  }
}

}  // namespace

std::vector<Matrix*> EncoderState::parameters() {
  std::vector<Matrix*> out;
  for_each_layer(graph, attribute, decoder, [&](Layer& l) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  });
  return out;
}

std::vector<const Matrix*> EncoderState::parameters() const {
  auto params = const_cast<EncoderState*>(this)->parameters();
  return {params.begin(), params.end()};
}

std::vector<std::string> EncoderState::parameter_names() const {
  std::vector<std::string> names;
  auto add = [&](const std::vector<Layer>& stack, const std::string& prefix) {
    for (std::size_t l = 0; l < stack.size(); ++l) {
      names.push_back(prefix + "." + std::to_string(l) + ".weight");
      names.push_back(prefix + "." + std::to_string(l) + ".bias");
    }
  };
  add(graph, "graph");
  add(attribute, "attribute");
  add(decoder, "decoder");
  return names;
}

EncoderState EncoderState::zeros_like() const {
  EncoderState z = *this;
  for (Matrix* p : z.parameters()) p->setZero();
  return z;
}

bool EncoderState::all_finite() const {
  for (const Matrix* p : parameters())
    if (!p->allFinite()) return false;
  return true;
}

EncoderState init_encoder(const EncoderConfig& config, std::uint64_t seed) {
  if (config.input_dim < 1 || config.latent_dim < 1) throw std::invalid_argument("init_encoder: empty dimensions");
  if (!config.graph_branch && !config.attribute_branch) {
    throw std::invalid_argument("init_encoder: at least one branch must be enabled");
  }
  std::vector<Index> dims{config.input_dim};
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(config.latent_dim);
  const std::vector<Index> reversed(dims.rbegin(), dims.rend());

  Rng rng(seed, stream::kEncoderInit);
  EncoderState s;
  s.config = config;
  if (config.graph_branch) s.graph = make_stack(dims, rng);
  if (config.attribute_branch) s.attribute = make_stack(dims, rng);
  s.decoder = make_stack(reversed, rng);
  return s;
}

Matrix encode(const Matrix& features, PropagationRef adjacency, const EncoderState& state, BranchSelection branches,
              EncodeCache* cache) {
  check_rows(features, adjacency);
  if (features.cols() != state.config.input_dim) {
    throw std::invalid_argument("encode: dimension mismatch, features have " + std::to_string(features.cols()) +
                                " columns but the encoder expects " + std::to_string(state.config.input_dim));
  }
  const bool use_graph = branches != BranchSelection::kAttributeOnly && !state.graph.empty();
  const bool use_attr = branches != BranchSelection::kGraphOnly && !state.attribute.empty();
  if (!use_graph && !use_attr) throw std::invalid_argument("encode: selected branch is disabled");
  const double scale = use_graph && use_attr ? 0.5 : 1.0;

  EncodeCache local;
  EncodeCache& c = cache ? *cache : local;
  c = EncodeCache{};
  c.graph_scale = use_graph ? scale : 0.0;
  c.attribute_scale = use_attr ? scale : 0.0;

  Matrix z = Matrix::Zero(features.rows(), state.config.latent_dim);
  if (use_graph) {
    Matrix h = features;
    for (const Layer& layer : state.graph) {
      c.graph_inputs.push_back(adjacency.apply(h));
      h = activate(affine(c.graph_inputs.back(), layer), layer.activation);
      c.graph_outputs.push_back(h);
    }
    z += scale * h;
  }
  if (use_attr) {
    Matrix h = features;
    for (const Layer& layer : state.attribute) {
      c.attribute_inputs.push_back(h);
      h = activate(affine(h, layer), layer.activation);
      c.attribute_outputs.push_back(h);
    }
    z += scale * h;
  }
  return z;
}

void encode_backward(const Matrix& dz, PropagationRef adjacency, const EncoderState& state, const EncodeCache& cache,
                     EncoderState& grad) {
  if (cache.graph_scale != 0.0) {
    Matrix d = cache.graph_scale * dz;
    for (std::size_t l = state.graph.size(); l-- > 0;) {
      const Layer& layer = state.graph[l];
      const Matrix d_pre = activation_backward(d, cache.graph_outputs[l], layer.activation);
      grad.graph[l].weight.noalias() += cache.graph_inputs[l].transpose() * d_pre;
      grad.graph[l].bias += d_pre.colwise().sum();
      if (l > 0) d = adjacency.apply_transpose(d_pre * layer.weight.transpose());
    }
  }
  if (cache.attribute_scale != 0.0) {
    Matrix d = cache.attribute_scale * dz;
    for (std::size_t l = state.attribute.size(); l-- > 0;) {
      const Layer& layer = state.attribute[l];
      const Matrix d_pre = activation_backward(d, cache.attribute_outputs[l], layer.activation);
      grad.attribute[l].weight.noalias() += cache.attribute_inputs[l].transpose() * d_pre;
      grad.attribute[l].bias += d_pre.colwise().sum();
      if (l > 0) d = d_pre * layer.weight.transpose();
    }
  }
}

Matrix decode(const Matrix& z, const EncoderState& state, DecodeCache* cache) {
  if (z.cols() != state.config.latent_dim) throw std::invalid_argument("decode: latent dimension mismatch");
  DecodeCache local;
  DecodeCache& c = cache ? *cache : local;
  c = DecodeCache{};
  Matrix h = z;
  for (const Layer& layer : state.decoder) {
    c.inputs.push_back(h);
    h = activate(affine(h, layer), layer.activation);
    c.outputs.push_back(h);
  }
  return h;
}

Matrix decode_backward(const Matrix& dx_hat, const EncoderState& state, const DecodeCache& cache,
                       EncoderState& grad) {
  Matrix d = dx_hat;
  for (std::size_t l = state.decoder.size(); l-- > 0;) {
    const Layer& layer = state.decoder[l];
    const Matrix d_pre = activation_backward(d, cache.outputs[l], layer.activation);
    grad.decoder[l].weight.noalias() += cache.inputs[l].transpose() * d_pre;
    grad.decoder[l].bias += d_pre.colwise().sum();
    d = d_pre * layer.weight.transpose();
  }
  return d;
}

Matrix fuse(const Matrix& z1, const Matrix& z2) {
  if (z1.rows() != z2.rows() || z1.cols() != z2.cols()) throw std::invalid_argument("fuse: shape mismatch");
  return 0.5 * (z1 + z2);
}

ReconstructionLoss reconstruction_loss(const std::vector<ReconstructionView>& views,
                                       const std::vector<Matrix>& latents, const EncoderState& state,
                                       double adjacency_weight, std::vector<Matrix>* dlatents, EncoderState* grad) {
  if (views.empty() || views.size() != latents.size()) {
    throw std::invalid_argument("reconstruction_loss: need one latent per view");
  }
  const double inv_views = 1.0 / static_cast<double>(views.size());
  const bool want_grad = dlatents != nullptr || grad != nullptr;
  if (dlatents) dlatents->assign(views.size(), Matrix());

  ReconstructionLoss loss;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const Matrix& x = views[v].features;
    const Matrix& z = latents[v];
    const Index n = z.rows();
    if (x.rows() != n || views[v].adjacency.size() != n) {
      throw std::invalid_argument("reconstruction_loss: shape mismatch in view " + std::to_string(v));
    }

    DecodeCache cache;
    const Matrix x_hat = decode(z, state, &cache);
    if (x_hat.cols() != x.cols()) throw std::invalid_argument("reconstruction_loss: decoder output width mismatch");
    const Matrix diff = x_hat - x;
    const double count = static_cast<double>(diff.size());
    loss.feature += inv_views * diff.squaredNorm() / count;

    Matrix dz;
    if (want_grad) {
      EncoderState scratch;
      EncoderState& g = grad ? *grad : (scratch = state.zeros_like());
      dz = decode_backward((2.0 * inv_views / count) * diff, state, cache, g);
    }

    // Structure term, row block by row block so N x N never materializes.
    const double inv_n2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    double adjacency_sum = 0.0;
    constexpr Index kBlock = 1024;
    for (Index start = 0; start < n; start += kBlock) {
      const Index rows = std::min(kBlock, n - start);
      const Matrix logits = z.middleRows(start, rows) * z.transpose();
      const Matrix s = (1.0 + (-logits.array()).exp()).inverse().matrix();
      const Matrix e = views[v].adjacency.dense_rows(start, rows) - s;
      adjacency_sum += e.squaredNorm();
      if (want_grad) {
        const double coef = -2.0 * adjacency_weight * inv_views * inv_n2;
        const Matrix g = coef * (e.array() * s.array() * (1.0 - s.array())).matrix();
        dz.middleRows(start, rows).noalias() += g * z;
        dz.noalias() += g.transpose() * z.middleRows(start, rows);
      }
    }
    loss.adjacency += inv_views * adjacency_sum * inv_n2;
    if (dlatents) (*dlatents)[v] = std::move(dz);
  }
  loss.total = loss.feature + adjacency_weight * loss.adjacency;
  return loss;
}

}  // namespace idcrn
