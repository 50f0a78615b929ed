#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbml/dataio.hpp"
#include "cbml/encoder.hpp"
#include "cbml/loss.hpp"
#include "cbml/rng.hpp"

namespace cbml {

struct TrainConfig {
  int batch_classes = 4;    // distinct classes per mini-batch
  int batch_per_class = 8;  // instances drawn from each of them
  int steps = 100;
  AdamConfig adam;
  std::uint64_t seed = 0;
  LossConfig loss;
};

void validate(const TrainConfig& cfg);

/// Per-step loss components, in the order they were produced.
struct TraceRow {
  int step = 0;
  double pos_term = 0.0;
  double neg_term = 0.0;
  double mvc_term = 0.0;
  double total = 0.0;
};

struct TrainResult {
  Encoder encoder;
  std::vector<TraceRow> trace;
};

/// Class-balanced batch: batch_classes distinct classes drawn without
/// replacement, then per_class rows from each (with replacement only when
/// the class is smaller than per_class).
std::vector<int> sample_batch(const std::vector<int>& labels, int batch_classes,
                              int per_class, Rng& rng);

/// The full optimization loop: sample, embed, loss, Adam step, repeat.
TrainResult train(const FeatureDataset& dataset, Encoder encoder,
                  const TrainConfig& cfg);

/// CSV with header step,L_P,L_N,L2,L.
void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace);

}  // namespace cbml
