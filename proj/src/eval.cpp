#include "cbml/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <utility>

#include "cbml/errors.hpp"
#include "cbml/kmeans.hpp"
#include "cbml/rng.hpp"

namespace cbml {

namespace {

void check_ks(const std::vector<int>& ks, std::size_t gallery_size) {
  if (ks.empty()) {
    throw KOutOfRange("at least one K value is required");
  }
  for (int k : ks) {
    if (k < 1 || static_cast<std::size_t>(k) > gallery_size) {
      throw KOutOfRange("K=" + std::to_string(k) + " outside [1, " +
                        std::to_string(gallery_size) + "]");
    }
  }
}

/// Rank (0-based) of the first same-class hit in the candidate ordering by
/// descending similarity, ties to the lower index. -1 when no positive
/// exists among the candidates.
int first_hit_rank(const std::vector<double>& sims, const std::vector<int>& candidate_ids,
                   const std::vector<int>& candidate_labels, int query_label) {
  std::vector<std::size_t> order(candidate_ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return candidate_ids[a] < candidate_ids[b];
  });
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (candidate_labels[order[rank]] == query_label) return static_cast<int>(rank);
  }
  return -1;
}

std::map<int, double> recall_from_ranks(const std::vector<int>& ranks,
                                        const std::vector<int>& ks) {
  std::map<int, double> out;
  for (int k : ks) {
    std::size_t hits = 0;
    for (int rank : ranks) {
      if (rank >= 0 && rank < k) ++hits;
    }
    out[k] = static_cast<double>(hits) / static_cast<double>(ranks.size());
  }
  return out;
}

}  // namespace

std::map<int, double> recall_at_k(const EmbeddingBatch& embeddings,
                                  const std::vector<int>& ks) {
  const std::size_t n = embeddings.size();
  if (n < 2) {
    throw KOutOfRange("leave-one-out retrieval needs at least 2 points");
  }
  check_ks(ks, n - 1);
  const SimilarityMatrix sims = similarity_matrix(embeddings);
  std::vector<int> ranks(n);
  for (std::size_t q = 0; q < n; ++q) {
    std::vector<double> cand_sims;
    std::vector<int> cand_ids;
    std::vector<int> cand_labels;
    cand_sims.reserve(n - 1);
    cand_ids.reserve(n - 1);
    cand_labels.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == q) continue;
      cand_sims.push_back(sims(q, j));
      cand_ids.push_back(static_cast<int>(j));
      cand_labels.push_back(embeddings.labels[j]);
    }
    ranks[q] = first_hit_rank(cand_sims, cand_ids, cand_labels, embeddings.labels[q]);
  }
  return recall_from_ranks(ranks, ks);
}

std::map<int, double> recall_at_k(const EmbeddingBatch& queries,
                                  const EmbeddingBatch& gallery,
                                  const std::vector<int>& ks) {
  if (queries.dim() != gallery.dim()) {
    throw DimMismatch("query and gallery embedding widths differ");
  }
  check_ks(ks, gallery.size());
  std::vector<int> gallery_ids(gallery.size());
  for (std::size_t j = 0; j < gallery.size(); ++j) gallery_ids[j] = static_cast<int>(j);
  std::vector<int> ranks(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::vector<double> sims(gallery.size());
    for (std::size_t j = 0; j < gallery.size(); ++j) {
      sims[j] = dot(queries.data.row(q), gallery.data.row(j), gallery.dim());
    }
    ranks[q] = first_hit_rank(sims, gallery_ids, gallery.labels, queries.labels[q]);
  }
  return recall_from_ranks(ranks, ks);
}

double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size() || pred.empty()) {
    throw LengthMismatch("label sequences must be nonempty and equally long");
  }
  const double n = static_cast<double>(pred.size());
  std::map<int, std::size_t> pred_counts, truth_counts;
  std::map<std::pair<int, int>, std::size_t> joint_counts;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++pred_counts[pred[i]];
    ++truth_counts[truth[i]];
    ++joint_counts[{pred[i], truth[i]}];
  }
  auto entropy = [n](const std::map<int, std::size_t>& counts) {
    double h = 0.0;
    for (const auto& [label, count] : counts) {
      (void)label;
      const double p = static_cast<double>(count) / n;
      h -= p * std::log(p);
    }
    return h;
  };
  const double h_pred = entropy(pred_counts);
  const double h_truth = entropy(truth_counts);
  const bool pred_flat = pred_counts.size() == 1;
  const bool truth_flat = truth_counts.size() == 1;
  if (pred_flat && truth_flat) return 1.0;
  if (pred_flat || truth_flat) return 0.0;

  double info = 0.0;
  for (const auto& [cell, count] : joint_counts) {
    const double p_joint = static_cast<double>(count) / n;
    const double p_pred = static_cast<double>(pred_counts[cell.first]) / n;
    const double p_truth = static_cast<double>(truth_counts[cell.second]) / n;
    info += p_joint * std::log(p_joint / (p_pred * p_truth));
  }
  double value = 2.0 * info / (h_pred + h_truth);
  // Rounding can push the ratio a hair outside the unit interval.
  return std::min(1.0, std::max(0.0, value));
}

HistogramReport similarity_histogram(const SimilarityMatrix& sims,
                                     const PairIndex& pairs, int bins) {
  if (bins < 2) throw ConfigError("histogram needs at least 2 bins");
  if (sims.size() != pairs.size()) {
    throw DimMismatch("similarity matrix and pair index cover different batch sizes");
  }
  std::vector<double> pos_sims, neg_sims;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (int j : pairs.anchors[i].positives) {
      if (static_cast<std::size_t>(j) > i) pos_sims.push_back(sims(i, static_cast<std::size_t>(j)));
    }
    for (int j : pairs.anchors[i].negatives) {
      if (static_cast<std::size_t>(j) > i) neg_sims.push_back(sims(i, static_cast<std::size_t>(j)));
    }
  }
  if (pos_sims.empty() || neg_sims.empty()) {
    throw NoPairs("histogram needs at least one pair of each kind");
  }

  double lo = pos_sims[0], hi = pos_sims[0];
  for (const std::vector<double>* side : {&pos_sims, &neg_sims}) {
    for (double v : *side) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi - lo < 1e-12) {
    // Degenerate spread; widen so the single occupied bin has finite width.
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(bins);

  HistogramReport report;
  report.bin_centers.resize(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    report.bin_centers[static_cast<std::size_t>(b)] = lo + (static_cast<double>(b) + 0.5) * width;
  }
  auto densities = [&](const std::vector<double>& values) {
    std::vector<double> density(static_cast<std::size_t>(bins), 0.0);
    for (double v : values) {
      auto b = static_cast<long>((v - lo) / width);
      if (b < 0) b = 0;
      if (b >= bins) b = bins - 1;
      density[static_cast<std::size_t>(b)] += 1.0;
    }
    const double mass = static_cast<double>(values.size()) * width;
    for (double& d : density) d /= mass;
    return density;
  };
  report.pos_density = densities(pos_sims);
  report.neg_density = densities(neg_sims);
  report.log_ratio.resize(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    const auto idx = static_cast<std::size_t>(b);
    if (report.pos_density[idx] > 0.0 && report.neg_density[idx] > 0.0) {
      report.log_ratio[idx] = std::log(report.pos_density[idx] / report.neg_density[idx]);
    } else {
      report.log_ratio[idx] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return report;
}

RetrievalReport evaluate_retrieval(const EmbeddingBatch& embeddings,
                                   const std::vector<int>& ks,
                                   std::uint64_t clustering_seed) {
  std::set<int> distinct(embeddings.labels.begin(), embeddings.labels.end());
  if (distinct.size() < 2) {
    throw NoPairs("evaluation set has no negative pairs");
  }
  const SimilarityMatrix sims = similarity_matrix(embeddings);
  const PairIndex pairs = partition_pairs(embeddings.labels);

  double pos_sum = 0.0, neg_sum = 0.0, neg_sum_sq = 0.0;
  std::size_t pos_count = 0, neg_count = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (int j : pairs.anchors[i].positives) {
      if (static_cast<std::size_t>(j) > i) {
        pos_sum += sims(i, static_cast<std::size_t>(j));
        ++pos_count;
      }
    }
    for (int j : pairs.anchors[i].negatives) {
      if (static_cast<std::size_t>(j) > i) {
        const double v = sims(i, static_cast<std::size_t>(j));
        neg_sum += v;
        neg_sum_sq += v * v;
        ++neg_count;
      }
    }
  }
  if (pos_count == 0) {
    throw NoPairs("evaluation set has no positive pairs");
  }

  RetrievalReport report;
  report.recall_at = recall_at_k(embeddings, ks);
  report.pos_sim_mean = pos_sum / static_cast<double>(pos_count);
  report.neg_sim_mean = neg_sum / static_cast<double>(neg_count);
  const double mean = report.neg_sim_mean;
  report.neg_sim_variance =
      neg_sum_sq / static_cast<double>(neg_count) - mean * mean;
  if (report.neg_sim_variance < 0.0) report.neg_sim_variance = 0.0;

  Rng rng(clustering_seed);
  const Clustering clustering =
      kmeans(embeddings.data, static_cast<int>(distinct.size()), rng);
  report.nmi = nmi(clustering.assignments, embeddings.labels);
  return report;
}

void write_retrieval_json(const std::string& path, const RetrievalReport& report) {
  std::ofstream out(path);
  if (!out) {
    throw ParseError(0, "cannot open " + path + " for writing");
  }
  char buffer[64];
  auto fmt = [&buffer](double v) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return std::string(buffer);
  };
  out << "{\n";
  for (const auto& [k, value] : report.recall_at) {
    out << "  \"recall_at_" << k << "\": " << fmt(value) << ",\n";
  }
  out << "  \"nmi\": " << fmt(report.nmi) << ",\n";
  out << "  \"neg_sim_variance\": " << fmt(report.neg_sim_variance) << ",\n";
  out << "  \"pos_sim_mean\": " << fmt(report.pos_sim_mean) << ",\n";
  out << "  \"neg_sim_mean\": " << fmt(report.neg_sim_mean) << "\n";
  out << "}\n";
}

void write_histogram_csv(const std::string& path, const HistogramReport& report) {
  std::ofstream out(path);
  if (!out) {
    throw ParseError(0, "cannot open " + path + " for writing");
  }
  out << "bin_center,pos_density,neg_density,log_ratio\n";
  char buffer[64];
  auto fmt = [&buffer](double v) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return std::string(buffer);
  };
  for (std::size_t b = 0; b < report.bin_centers.size(); ++b) {
    out << fmt(report.bin_centers[b]) << ',' << fmt(report.pos_density[b]) << ','
        << fmt(report.neg_density[b]) << ',' << fmt(report.log_ratio[b]) << "\n";
  }
}

}  // namespace cbml
