#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbml/matrix.hpp"
#include "cbml/rng.hpp"

namespace cbml {

enum class EncoderKind { identity, linear, mlp2 };

/// Maps precomputed feature rows to embedding rows. identity passes input
/// through, linear is one affine map, mlp2 is affine -> rectifier -> affine.
struct Encoder {
  EncoderKind kind = EncoderKind::identity;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t output_dim = 0;
  Matrix w1;               // linear: input x output; mlp2: input x hidden
  std::vector<double> b1;  // matching column count of w1
  Matrix w2;               // mlp2 only: hidden x output
  std::vector<double> b2;

  std::size_t parameter_count() const {
    return w1.data.size() + b1.size() + w2.data.size() + b2.size();
  }
};

/// Weights start as centered Gaussians scaled by 1/sqrt(fan-in), biases at
/// zero. identity ignores hidden/output dims; its output is its input.
Encoder make_encoder(EncoderKind kind, std::size_t input_dim,
                     std::size_t hidden_dim, std::size_t output_dim, Rng& rng);

Matrix forward(const Encoder& enc, const Matrix& inputs);

struct EncoderGradients {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
};

/// Chain rule from d(loss)/d(embeddings) back to every parameter.
EncoderGradients backward(const Encoder& enc, const Matrix& inputs,
                          const Matrix& grad_embeddings);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment estimates over the flattened parameter vector.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

AdamState make_adam_state(const Encoder& enc);

/// One optimization step: backward pass, then Adam with bias correction.
void backward_and_step(Encoder& enc, const Matrix& inputs,
                       const Matrix& grad_embeddings, AdamState& state,
                       const AdamConfig& cfg);

const char* encoder_kind_name(EncoderKind k);
EncoderKind encoder_kind_from_name(const std::string& name);

}  // namespace cbml
