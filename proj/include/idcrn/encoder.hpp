#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "idcrn/propagation.hpp"
#include "idcrn/types.hpp"

namespace idcrn {

enum class Activation { kIdentity, kTanh };

struct Layer {
  Matrix weight;  // fan_in x fan_out
  Matrix bias;    // 1 x fan_out
  Activation activation = Activation::kIdentity;
};

struct EncoderConfig {
  Index input_dim = 0;
  std::vector<Index> hidden_dims{256};
  Index latent_dim = 20;
  bool graph_branch = true;
  bool attribute_branch = true;
};

/// Trainable parameters shared by both views. The graph branch propagates
/// then transforms (H' = act(M H W + b)); the attribute branch is a plain
/// MLP with the same widths; the decoder mirrors the attribute branch back
/// to the input dimension. Hidden layers use tanh, output layers are linear.
struct EncoderState {
  EncoderConfig config;
  std::vector<Layer> graph;
  std::vector<Layer> attribute;
  std::vector<Layer> decoder;

  // Parameter matrices in declaration order: graph, attribute, decoder; each
  // layer contributes weight then bias.
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
  std::vector<std::string> parameter_names() const;

  EncoderState zeros_like() const;
  bool all_finite() const;
};

/// Glorot-uniform weights, zero biases, deterministic in seed.
EncoderState init_encoder(const EncoderConfig& config, std::uint64_t seed);

enum class BranchSelection { kBoth, kGraphOnly, kAttributeOnly };

struct EncodeCache {
  std::vector<Matrix> graph_inputs;  // propagated layer inputs M H
  std::vector<Matrix> graph_outputs;
  std::vector<Matrix> attribute_inputs;
  std::vector<Matrix> attribute_outputs;
  double graph_scale = 0.0;
  double attribute_scale = 0.0;
};

/// Embeds one view. The result is the mean of the selected branch outputs.
Matrix encode(const Matrix& features, PropagationRef adjacency, const EncoderState& state,
              BranchSelection branches = BranchSelection::kBoth, EncodeCache* cache = nullptr);

/// Accumulates d(loss)/d(parameters) into grad given d(loss)/dz.
void encode_backward(const Matrix& dz, PropagationRef adjacency, const EncoderState& state, const EncodeCache& cache,
                     EncoderState& grad);

struct DecodeCache {
  std::vector<Matrix> inputs;
  std::vector<Matrix> outputs;
};

Matrix decode(const Matrix& z, const EncoderState& state, DecodeCache* cache = nullptr);

/// Accumulates decoder gradients and returns d(loss)/dz.
Matrix decode_backward(const Matrix& dx_hat, const EncoderState& state, const DecodeCache& cache, EncoderState& grad);

struct LatentViews {
  Matrix z1;
  Matrix z2;
  Matrix z_fused;
};

/// Elementwise mean of the two view embeddings.
Matrix fuse(const Matrix& z1, const Matrix& z2);

struct ReconstructionView {
  const Matrix& features;     // perturbed attributes the decoder must reproduce
  PropagationRef adjacency;   // structure reconstructed from sigmoid(z z^T)
};

struct ReconstructionLoss {
  double feature = 0.0;    // mean over views of mean((decode(z) - x)^2)
  double adjacency = 0.0;  // mean over views of ||M - sigmoid(z z^T)||^2 / N^2
  double total = 0.0;      // feature + adjacency_weight * adjacency
};

/// When dlatents is given it receives one gradient per view (overwritten);
/// decoder gradients are accumulated into grad when it is non-null.
ReconstructionLoss reconstruction_loss(const std::vector<ReconstructionView>& views,
                                       const std::vector<Matrix>& latents, const EncoderState& state,
                                       double adjacency_weight = 0.1, std::vector<Matrix>* dlatents = nullptr,
                                       EncoderState* grad = nullptr);

}  // namespace idcrn
