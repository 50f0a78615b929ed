#include "cbml/kmeans.hpp"

#include <limits>

#include "cbml/errors.hpp"

namespace cbml {

namespace {

double squared_distance(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return s;
}

std::vector<int> assign_points(const Matrix& points, const Matrix& centroids) {
  std::vector<int> assignments(points.rows, 0);
  for (std::size_t i = 0; i < points.rows; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (std::size_t c = 0; c < centroids.rows; ++c) {
      const double dist = squared_distance(points.row(i), centroids.row(c), points.cols);
      if (dist < best) {
        best = dist;
        best_c = static_cast<int>(c);
      }
    }
    assignments[i] = best_c;
  }
  return assignments;
}

double total_cost(const Matrix& points, const Matrix& centroids,
                  const std::vector<int>& assignments) {
  double cost = 0.0;
  for (std::size_t i = 0; i < points.rows; ++i) {
    cost += squared_distance(points.row(i),
                             centroids.row(static_cast<std::size_t>(assignments[i])),
                             points.cols);
  }
  return cost;
}

Matrix plus_plus_seed(const Matrix& points, int k, Rng& rng) {
  const std::size_t n = points.rows;
  const std::size_t d = points.cols;
  Matrix centroids(static_cast<std::size_t>(k), d);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());

  std::size_t first = rng.uniform_index(n);
  for (std::size_t j = 0; j < d; ++j) centroids(0, j) = points(first, j);

  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dist = squared_distance(
          points.row(i), centroids.row(static_cast<std::size_t>(c - 1)), d);
      if (dist < min_dist[i]) min_dist[i] = dist;
      total += min_dist[i];
    }
    std::size_t chosen;
    if (total <= 0.0) {
      // Every point already coincides with a centroid; any choice is as
      // good as any other.
      chosen = rng.uniform_index(n);
    } else {
      const double target = rng.uniform() * total;
      double cumulative = 0.0;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        cumulative += min_dist[i];
        if (cumulative >= target) {
          chosen = i;
          break;
        }
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      centroids(static_cast<std::size_t>(c), j) = points(chosen, j);
    }
  }
  return centroids;
}

}  // namespace

Clustering kmeans(const Matrix& features, int k, Rng& rng, int max_iter) {
  const std::size_t n = features.rows;
  const std::size_t d = features.cols;
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw KTooLarge("k must lie in [1, number of points]");
  }
  if (max_iter < 1) {
    throw ConfigError("kmeans needs max_iter >= 1");
  }

  Clustering result;
  result.centroids = plus_plus_seed(features, k, rng);
  result.assignments = assign_points(features, result.centroids);
  result.inertia = total_cost(features, result.centroids, result.assignments);
  result.inertia_history.push_back(result.inertia);

  for (int iter = 0; iter < max_iter; ++iter) {
    // Means of the current members.
    Matrix sums(static_cast<std::size_t>(k), d);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(result.assignments[i]);
      ++counts[c];
      const double* p = features.row(i);
      double* s = sums.row(c);
      for (std::size_t j = 0; j < d; ++j) s[j] += p[j];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      double* s = sums.row(c);
      if (counts[c] == 0) {
        // Keep the stale centroid until the reseed below finds it a point.
        const double* old = result.centroids.row(c);
        for (std::size_t j = 0; j < d; ++j) s[j] = old[j];
        continue;
      }
      for (std::size_t j = 0; j < d; ++j) s[j] /= static_cast<double>(counts[c]);
    }

    // Orphaned clusters grab the point currently worst served. Moving that
    // point out never raises the cost, which keeps inertia monotone.
    std::vector<bool> claimed(n, false);
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (counts[c] > 0) continue;
      double worst = -1.0;
      std::size_t worst_i = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (claimed[i]) continue;
        const auto home = static_cast<std::size_t>(result.assignments[i]);
        if (counts[home] <= 1) continue;  // do not orphan another cluster
        const double dist = squared_distance(features.row(i), sums.row(home), d);
        if (dist > worst) {
          worst = dist;
          worst_i = i;
        }
      }
      if (worst < 0.0) break;  // nothing movable; leave the centroid in place
      claimed[worst_i] = true;
      const auto old_home = static_cast<std::size_t>(result.assignments[worst_i]);
      --counts[old_home];
      counts[c] = 1;
      result.assignments[worst_i] = static_cast<int>(c);
      const double* p = features.row(worst_i);
      double* s = sums.row(c);
      for (std::size_t j = 0; j < d; ++j) s[j] = p[j];
    }
    result.centroids = std::move(sums);

    const std::vector<int> next = assign_points(features, result.centroids);
    result.inertia = total_cost(features, result.centroids, next);
    result.inertia_history.push_back(result.inertia);
    const bool converged = next == result.assignments;
    result.assignments = next;
    if (converged) break;
  }
  return result;
}

}  // namespace cbml
