#include "cbml/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cbml/errors.hpp"

namespace cbml {

namespace {

constexpr const char* kMagic = "cbml-model 1";

void write_values(std::ofstream& out, const char* name, const double* values,
                  std::size_t count) {
  out << name << ' ' << count << "\n";
  char buffer[64];
  for (std::size_t i = 0; i < count; ++i) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", values[i]);
    out << buffer << (i + 1 == count ? "\n" : " ");
  }
  if (count == 0) out << "\n";
}

std::vector<double> read_values(std::istream& in, const char* name,
                                std::size_t expected) {
  std::string label;
  std::size_t count = 0;
  if (!(in >> label >> count) || label != name || count != expected) {
    throw ModelFormatError(std::string("expected tensor '") + name + "' with " +
                           std::to_string(expected) + " values");
  }
  std::vector<double> values(count);
  for (double& v : values) {
    if (!(in >> v)) {
      throw ModelFormatError(std::string("tensor '") + name + "' is truncated");
    }
  }
  return values;
}

}  // namespace

void save_model(const std::string& path, const Encoder& enc) {
  std::ofstream out(path);
  if (!out) {
    throw ModelFormatError("cannot open " + path + " for writing");
  }
  out << kMagic << "\n";
  out << "kind " << encoder_kind_name(enc.kind) << "\n";
  out << "dims " << enc.input_dim << ' ' << enc.hidden_dim << ' ' << enc.output_dim
      << "\n";
  if (enc.kind != EncoderKind::identity) {
    write_values(out, "w1", enc.w1.data.data(), enc.w1.data.size());
    write_values(out, "b1", enc.b1.data(), enc.b1.size());
  }
  if (enc.kind == EncoderKind::mlp2) {
    write_values(out, "w2", enc.w2.data.data(), enc.w2.data.size());
    write_values(out, "b2", enc.b2.data(), enc.b2.size());
  }
  if (!out) {
    throw ModelFormatError("write to " + path + " failed");
  }
}

Encoder load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ModelFormatError("cannot open " + path);
  }
  std::string magic;
  if (!std::getline(in, magic) || magic != kMagic) {
    throw ModelFormatError("unrecognized model header: '" + magic + "'");
  }
  std::string key, kind_name;
  if (!(in >> key >> kind_name) || key != "kind") {
    throw ModelFormatError("missing encoder kind");
  }
  Encoder enc;
  enc.kind = encoder_kind_from_name(kind_name);
  if (!(in >> key >> enc.input_dim >> enc.hidden_dim >> enc.output_dim) ||
      key != "dims") {
    throw ModelFormatError("missing encoder dimensions");
  }
  if (enc.kind != EncoderKind::identity) {
    const std::size_t w1_cols =
        enc.kind == EncoderKind::linear ? enc.output_dim : enc.hidden_dim;
    enc.w1 = Matrix(enc.input_dim, w1_cols);
    enc.w1.data = read_values(in, "w1", enc.input_dim * w1_cols);
    enc.b1 = read_values(in, "b1", w1_cols);
  }
  if (enc.kind == EncoderKind::mlp2) {
    enc.w2 = Matrix(enc.hidden_dim, enc.output_dim);
    enc.w2.data = read_values(in, "w2", enc.hidden_dim * enc.output_dim);
    enc.b2 = read_values(in, "b2", enc.output_dim);
  }
  if (!all_finite(enc.w1) || !all_finite(enc.w2)) {
    throw ModelFormatError("model parameters contain non-finite values");
  }
  return enc;
}

}  // namespace cbml
