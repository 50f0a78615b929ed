#pragma once

#include <vector>

#include "cbml/matrix.hpp"
#include "cbml/rng.hpp"

namespace cbml {

struct Clustering {
  std::vector<int> assignments;         // one centroid id per row
  Matrix centroids;                     // k x d
  double inertia = 0.0;                 // sum of squared point-centroid gaps
  std::vector<double> inertia_history;  // one entry per Lloyd iteration
};

/// Plus-plus seeding, then Lloyd iterations until the assignment stops
/// changing or max_iter is hit. A cluster that loses all members is reseeded
/// to the point farthest from its own centroid.
Clustering kmeans(const Matrix& features, int k, Rng& rng, int max_iter = 100);

}  // namespace cbml
