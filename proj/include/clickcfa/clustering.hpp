#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace clickcfa::cluster {

struct Standardization {
    std::vector<double> mean, scale; // scale = std, zero-variance dims get 1
};

Standardization fit_standardize(const std::vector<std::vector<double>>& points);
std::vector<std::vector<double>> apply_standardize(const std::vector<std::vector<double>>& points,
                                                   const Standardization& st);

struct KMeansResult {
    std::vector<int> assignments;
    std::vector<std::vector<double>> centroids; // original (de-standardized) coordinates
    double sse = 0.0;                           // within-cluster SSE in standardized space
};

// k-means++ with 10 restarts, Lloyd to fixpoint (<=300 iterations), empty
// clusters reseeded to the farthest point. Features are standardized per
// dimension internally. Requires at least k distinct points. sse_trace, when
// given, receives the per-iteration SSE of the winning restart.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed,
                    std::vector<double>* sse_trace = nullptr);

// Mean silhouette coefficient (Euclidean). Singleton clusters score 0.
double silhouette_mean(const std::vector<std::vector<double>>& points,
                       const std::vector<int>& assignments, int k);

struct SilhouetteCurve {
    int best_k = 0;
    std::vector<std::pair<int, double>> scores; // (k, mean silhouette)
};

// Mean silhouette (computed in standardized space) for each k in
// [k_min, k_max]; argmax with ties toward smaller k. Needs >= 20 points.
SilhouetteCurve select_k(const std::vector<std::vector<double>>& points, int k_min, int k_max,
                         std::uint64_t seed);

// Shannon entropy (bits) of a binary label multiset.
double label_entropy(const std::vector<int>& labels);

struct MetaClusterSet {
    std::vector<std::vector<std::size_t>> clusters; // indices into the meta set, entropy order
    std::vector<std::vector<double>> centroids;     // reordered to match
    std::vector<double> entropies;                  // non-decreasing
};

// Orders clusters by label entropy ascending; ties broken by size descending
// (stable beyond that).
MetaClusterSet order_by_entropy(const KMeansResult& km, const std::vector<int>& labels);

} // namespace clickcfa::cluster
