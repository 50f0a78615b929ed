#include "cbml/encoder.hpp"

#include <cmath>

#include "cbml/errors.hpp"

namespace cbml {

namespace {

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
  for (double& v : m.data) v = scale * rng.normal();
  return m;
}

void add_row_bias(Matrix& m, const std::vector<double>& bias) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    double* r = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) r[j] += bias[j];
  }
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> sums(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* r = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) sums[j] += r[j];
  }
  return sums;
}

bool finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

Encoder make_encoder(EncoderKind kind, std::size_t input_dim,
                     std::size_t hidden_dim, std::size_t output_dim, Rng& rng) {
  Encoder enc;
  enc.kind = kind;
  enc.input_dim = input_dim;
  switch (kind) {
    case EncoderKind::identity:
      enc.hidden_dim = 0;
      enc.output_dim = input_dim;
      break;
    case EncoderKind::linear:
      enc.hidden_dim = 0;
      enc.output_dim = output_dim;
      enc.w1 = gaussian_matrix(input_dim, output_dim, rng);
      enc.b1.assign(output_dim, 0.0);
      break;
    case EncoderKind::mlp2:
      enc.hidden_dim = hidden_dim;
      enc.output_dim = output_dim;
      enc.w1 = gaussian_matrix(input_dim, hidden_dim, rng);
      enc.b1.assign(hidden_dim, 0.0);
      enc.w2 = gaussian_matrix(hidden_dim, output_dim, rng);
      enc.b2.assign(output_dim, 0.0);
      break;
  }
  if (enc.output_dim < 2) {
    throw DimMismatch("encoder output dimension must be at least 2");
  }
  if (kind == EncoderKind::mlp2 && hidden_dim < 1) {
    throw DimMismatch("mlp2 encoder needs a hidden dimension of at least 1");
  }
  return enc;
}

Matrix forward(const Encoder& enc, const Matrix& inputs) {
  if (inputs.cols != enc.input_dim) {
    throw DimMismatch("input width does not match encoder input dimension");
  }
  switch (enc.kind) {
    case EncoderKind::identity:
      return inputs;
    case EncoderKind::linear: {
      Matrix out = matmul(inputs, enc.w1);
      add_row_bias(out, enc.b1);
      return out;
    }
    case EncoderKind::mlp2: {
      Matrix hidden = matmul(inputs, enc.w1);
      add_row_bias(hidden, enc.b1);
      for (double& v : hidden.data) v = v > 0.0 ? v : 0.0;
      Matrix out = matmul(hidden, enc.w2);
      add_row_bias(out, enc.b2);
      return out;
    }
  }
  throw DimMismatch("unknown encoder kind");
}

EncoderGradients backward(const Encoder& enc, const Matrix& inputs,
                          const Matrix& grad_embeddings) {
  if (grad_embeddings.rows != inputs.rows || grad_embeddings.cols != enc.output_dim) {
    throw DimMismatch("embedding gradient shape does not match encoder output");
  }
  EncoderGradients g;
  switch (enc.kind) {
    case EncoderKind::identity:
      break;
    case EncoderKind::linear:
      g.w1 = matmul(transpose(inputs), grad_embeddings);
      g.b1 = column_sums(grad_embeddings);
      break;
    case EncoderKind::mlp2: {
      Matrix pre = matmul(inputs, enc.w1);
      add_row_bias(pre, enc.b1);
      Matrix hidden = pre;
      for (double& v : hidden.data) v = v > 0.0 ? v : 0.0;
      g.w2 = matmul(transpose(hidden), grad_embeddings);
      g.b2 = column_sums(grad_embeddings);
      Matrix grad_hidden = matmul(grad_embeddings, transpose(enc.w2));
      // Rectifier gate: no signal where the unit was inactive.
      for (std::size_t idx = 0; idx < grad_hidden.data.size(); ++idx) {
        if (pre.data[idx] <= 0.0) grad_hidden.data[idx] = 0.0;
      }
      g.w1 = matmul(transpose(inputs), grad_hidden);
      g.b1 = column_sums(grad_hidden);
      break;
    }
  }
  return g;
}

AdamState make_adam_state(const Encoder& enc) {
  AdamState state;
  state.m.assign(enc.parameter_count(), 0.0);
  state.v.assign(enc.parameter_count(), 0.0);
  return state;
}

void backward_and_step(Encoder& enc, const Matrix& inputs,
                       const Matrix& grad_embeddings, AdamState& state,
                       const AdamConfig& cfg) {
  if (enc.kind == EncoderKind::identity) {
    // Nothing to update; keep the step count honest for any later encoder.
    ++state.step;
    return;
  }
  EncoderGradients g = backward(enc, inputs, grad_embeddings);
  if (!all_finite(g.w1) || !finite(g.b1) || !all_finite(g.w2) || !finite(g.b2)) {
    throw NonFiniteGradient("parameter gradient is not finite");
  }

  ++state.step;
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  std::size_t offset = 0;
  auto update = [&](double* params, const double* grads, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      const double grad = grads[i];
      double& m = state.m[offset + i];
      double& v = state.v[offset + i];
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad;
      const double m_hat = m / bias1;
      const double v_hat = v / bias2;
      params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
    offset += count;
  };

  update(enc.w1.data.data(), g.w1.data.data(), enc.w1.data.size());
  update(enc.b1.data(), g.b1.data(), enc.b1.size());
  if (enc.kind == EncoderKind::mlp2) {
    update(enc.w2.data.data(), g.w2.data.data(), enc.w2.data.size());
    update(enc.b2.data(), g.b2.data(), enc.b2.size());
  }
}

const char* encoder_kind_name(EncoderKind k) {
  switch (k) {
    case EncoderKind::identity: return "identity";
    case EncoderKind::linear: return "linear";
    case EncoderKind::mlp2: return "mlp2";
  }
  return "identity";
}

EncoderKind encoder_kind_from_name(const std::string& name) {
  if (name == "identity") return EncoderKind::identity;
  if (name == "linear") return EncoderKind::linear;
  if (name == "mlp2") return EncoderKind::mlp2;
  throw ConfigError("unknown encoder kind: " + name);
}

}  // namespace cbml
