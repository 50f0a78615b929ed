#pragma once

#include <string>
#include <vector>

#include "cbml/encoder.hpp"
#include "cbml/kmeans.hpp"
#include "cbml/trainer.hpp"

namespace cbml {

struct PseudoConfig {
  int k = 4;                     // clusters per round
  int rounds = 2;                // cluster/train repetitions
  bool use_hard_mining = false;  // full pair sets unless enabled
  bool randomize_batch = false;  // redraw batch_per_class each round
  TrainConfig train;
};

struct PseudoResult {
  Encoder encoder;
  std::vector<int> pseudo_labels;       // from the final clustering round
  std::vector<TraceRow> trace;          // concatenated over rounds
  std::vector<double> round_inertia;    // clustering inertia per round
};

/// Unlabeled training: embed, cluster, treat cluster ids as labels, train,
/// repeat. Real labels never enter; they exist only for outside evaluation.
PseudoResult pseudo_train(const Matrix& features, const PseudoConfig& cfg,
                          Encoder encoder);

/// CSV with header index,cluster.
void write_labels_csv(const std::string& path, const std::vector<int>& labels);

}  // namespace cbml
