#include "cbml/pseudo.hpp"

#include <fstream>
#include <limits>

#include "cbml/dataio.hpp"
#include "cbml/errors.hpp"
#include "cbml/geometry.hpp"

namespace cbml {

PseudoResult pseudo_train(const Matrix& features, const PseudoConfig& cfg,
                          Encoder encoder) {
  if (cfg.rounds < 1) throw ConfigError("pseudo training needs at least 1 round");
  if (cfg.k < 2) throw ConfigError("pseudo training needs at least 2 clusters");
  validate(cfg.train);

  PseudoResult result;
  for (int round = 0; round < cfg.rounds; ++round) {
    // Cluster on the sphere the loss actually sees, not on raw outputs.
    const Matrix embedded = normalize_rows(forward(encoder, features));
    // Distinct stream per round, decoupled from the training stream.
    Rng cluster_rng(cfg.train.seed * 0x9e3779b97f4a7c15ULL +
                    static_cast<std::uint64_t>(round) + 1);
    const Clustering clustering = kmeans(embedded, cfg.k, cluster_rng);
    result.pseudo_labels = clustering.assignments;
    result.round_inertia.push_back(clustering.inertia);

    FeatureDataset pseudo_set = make_dataset(features, clustering.assignments);
    TrainConfig round_cfg = cfg.train;
    round_cfg.seed = cfg.train.seed + static_cast<std::uint64_t>(round) * 0x51ed2701ULL;
    if (cfg.randomize_batch && cfg.train.batch_per_class > 2) {
      // Vary the per-class draw each round; its own stream, so toggling the
      // flag never shifts the clustering or training draws.
      Rng batch_rng(cfg.train.seed * 0xbf58476d1ce4e5b9ULL +
                    static_cast<std::uint64_t>(round) + 1);
      round_cfg.batch_per_class =
          2 + static_cast<int>(batch_rng.uniform_index(
                  static_cast<std::size_t>(cfg.train.batch_per_class - 1)));
    }
    if (!cfg.use_hard_mining) {
      // Margin wide enough to pass every pair: similarities span [-1, 1].
      round_cfg.loss.epsilon = std::numeric_limits<double>::infinity();
    }
    TrainResult trained = train(pseudo_set, std::move(encoder), round_cfg);
    encoder = std::move(trained.encoder);
    for (TraceRow row : trained.trace) {
      row.step += round * cfg.train.steps;
      result.trace.push_back(row);
    }
  }
  result.encoder = std::move(encoder);
  return result;
}

void write_labels_csv(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) {
    throw ParseError(0, "cannot open " + path + " for writing");
  }
  out << "index,cluster\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << i << ',' << labels[i] << "\n";
  }
}

}  // namespace cbml
