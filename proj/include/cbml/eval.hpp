#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cbml/geometry.hpp"
#include "cbml/pairs.hpp"

namespace cbml {

/// Leave-one-out retrieval: every point queries all the others; a query
/// scores when its K nearest neighbours by cosine similarity contain a
/// same-class point. Similarity ties go to the lower index.
std::map<int, double> recall_at_k(const EmbeddingBatch& embeddings,
                                  const std::vector<int>& ks);

/// Split protocol: queries retrieve from a separate gallery, no exclusions.
std::map<int, double> recall_at_k(const EmbeddingBatch& queries,
                                  const EmbeddingBatch& gallery,
                                  const std::vector<int>& ks);

/// Mutual information of the two labelings normalized by the mean of their
/// entropies (natural log). Two degenerate single-cluster partitions count
/// as perfectly aligned; exactly one degenerate side counts as unrelated.
double nmi(const std::vector<int>& pred, const std::vector<int>& truth);

struct HistogramReport {
  std::vector<double> bin_centers;
  std::vector<double> pos_density;
  std::vector<double> neg_density;
  std::vector<double> log_ratio;  // NaN where either side has no mass
};

/// Equal-width bins spanning all pair similarities; each side normalized to
/// integrate to one over the binned range.
HistogramReport similarity_histogram(const SimilarityMatrix& sims,
                                     const PairIndex& pairs, int bins);

struct RetrievalReport {
  std::map<int, double> recall_at;
  double nmi = 0.0;
  double neg_sim_variance = 0.0;
  double pos_sim_mean = 0.0;
  double neg_sim_mean = 0.0;
};

/// Retrieval metrics, clustering agreement (k-means with one centroid per
/// true class), and the similarity-distribution summary stats in one pass.
RetrievalReport evaluate_retrieval(const EmbeddingBatch& embeddings,
                                   const std::vector<int>& ks,
                                   std::uint64_t clustering_seed);

/// Flat JSON object keyed recall_at_<K>, nmi, neg_sim_variance,
/// pos_sim_mean, neg_sim_mean.
void write_retrieval_json(const std::string& path, const RetrievalReport& report);

/// CSV with header bin_center,pos_density,neg_density,log_ratio.
void write_histogram_csv(const std::string& path, const HistogramReport& report);

}  // namespace cbml
