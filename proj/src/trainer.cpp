#include "cbml/trainer.hpp"

#include <cstdio>
#include <fstream>

#include "cbml/errors.hpp"

namespace cbml {

void validate(const TrainConfig& cfg) {
  if (cfg.batch_classes < 2) throw ConfigError("batch_classes must be at least 2");
  if (cfg.batch_per_class < 2) throw ConfigError("batch_per_class must be at least 2");
  if (cfg.steps < 0) throw ConfigError("steps must be non-negative");
  if (!(cfg.adam.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(cfg.adam.beta1 >= 0.0 && cfg.adam.beta1 < 1.0)) {
    throw ConfigError("adam_beta1 must lie in [0,1)");
  }
  if (!(cfg.adam.beta2 >= 0.0 && cfg.adam.beta2 < 1.0)) {
    throw ConfigError("adam_beta2 must lie in [0,1)");
  }
  if (!(cfg.adam.eps > 0.0)) throw ConfigError("adam_eps must be > 0");
  validate(cfg.loss);
}

std::vector<int> sample_batch(const std::vector<int>& labels, int batch_classes,
                              int per_class, Rng& rng) {
  // Class ids gathered in ascending order so the draw depends only on the
  // rng stream, not on hash or insertion order.
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[labels[i]].push_back(static_cast<int>(i));
  }
  if (by_class.size() < static_cast<std::size_t>(batch_classes)) {
    throw InsufficientClasses("dataset has fewer classes than batch_classes");
  }
  std::vector<int> class_ids;
  class_ids.reserve(by_class.size());
  for (const auto& [cls, rows] : by_class) {
    (void)rows;
    class_ids.push_back(cls);
  }
  // Partial Fisher-Yates: the first batch_classes slots become the draw.
  for (int i = 0; i < batch_classes; ++i) {
    const std::size_t j =
        static_cast<std::size_t>(i) +
        rng.uniform_index(class_ids.size() - static_cast<std::size_t>(i));
    std::swap(class_ids[static_cast<std::size_t>(i)], class_ids[j]);
  }

  std::vector<int> batch;
  batch.reserve(static_cast<std::size_t>(batch_classes) * static_cast<std::size_t>(per_class));
  for (int c = 0; c < batch_classes; ++c) {
    const std::vector<int>& members = by_class[class_ids[static_cast<std::size_t>(c)]];
    if (members.size() >= static_cast<std::size_t>(per_class)) {
      std::vector<int> pool = members;
      for (int p = 0; p < per_class; ++p) {
        const std::size_t j =
            static_cast<std::size_t>(p) +
            rng.uniform_index(pool.size() - static_cast<std::size_t>(p));
        std::swap(pool[static_cast<std::size_t>(p)], pool[j]);
        batch.push_back(pool[static_cast<std::size_t>(p)]);
      }
    } else {
      // Too few members: draw with replacement rather than failing.
      for (int p = 0; p < per_class; ++p) {
        batch.push_back(members[rng.uniform_index(members.size())]);
      }
    }
  }
  return batch;
}

TrainResult train(const FeatureDataset& dataset, Encoder encoder,
                  const TrainConfig& cfg) {
  validate(cfg);
  if (dataset.dim() != encoder.input_dim) {
    throw DimMismatch("dataset width does not match encoder input dimension");
  }
  Rng rng(cfg.seed);
  AdamState adam = make_adam_state(encoder);
  TrainResult result;
  result.trace.reserve(static_cast<std::size_t>(cfg.steps));
  for (int step = 0; step < cfg.steps; ++step) {
    const std::vector<int> batch_rows =
        sample_batch(dataset.labels, cfg.batch_classes, cfg.batch_per_class, rng);
    const Matrix inputs = take_rows(dataset.features, batch_rows);
    std::vector<int> batch_labels;
    batch_labels.reserve(batch_rows.size());
    for (int r : batch_rows) batch_labels.push_back(dataset.labels[static_cast<std::size_t>(r)]);

    const Matrix raw = forward(encoder, inputs);
    const LossReport report = cbml_loss_and_grad(raw, batch_labels, cfg.loss);
    backward_and_step(encoder, inputs, report.grad, adam, cfg.adam);
    result.trace.push_back(
        {step, report.pos_term, report.neg_term, report.mvc_term, report.total});
  }
  result.encoder = std::move(encoder);
  return result;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  std::ofstream out(path);
  if (!out) {
    throw ParseError(0, "cannot open " + path + " for writing");
  }
  out << "step,L_P,L_N,L2,L\n";
  char buffer[64];
  for (const TraceRow& row : trace) {
    out << row.step;
    for (double v : {row.pos_term, row.neg_term, row.mvc_term, row.total}) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", v);
      out << ',' << buffer;
    }
    out << "\n";
  }
}

}  // namespace cbml
