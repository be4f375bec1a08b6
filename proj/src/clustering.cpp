#include "clickcfa/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "clickcfa/errors.hpp"
#include "clickcfa/kernels.hpp"
#include "clickcfa/rng.hpp"

namespace clickcfa::cluster {

Standardization fit_standardize(const std::vector<std::vector<double>>& points) {
    const std::size_t n = points.size();
    const std::size_t d = points.empty() ? 0 : points[0].size();
    Standardization st;
    st.mean.assign(d, 0.0);
    st.scale.assign(d, 1.0);
    if (n == 0) return st;
    for (const auto& p : points)
        for (std::size_t j = 0; j < d; ++j) st.mean[j] += p[j];
    for (double& m : st.mean) m /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (const auto& p : points)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = p[j] - st.mean[j];
            var[j] += c * c;
        }
    for (std::size_t j = 0; j < d; ++j) {
        const double s = std::sqrt(var[j] / static_cast<double>(n));
        st.scale[j] = s > 0.0 ? s : 1.0;
    }
    return st;
}

std::vector<std::vector<double>> apply_standardize(const std::vector<std::vector<double>>& points,
                                                   const Standardization& st) {
    std::vector<std::vector<double>> out = points;
    for (auto& p : out)
        for (std::size_t j = 0; j < p.size(); ++j) p[j] = (p[j] - st.mean[j]) / st.scale[j];
    return out;
}

namespace {

double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
    return kernels::sqdist(a.data(), b.data(), a.size());
}

struct LloydRun {
    std::vector<int> assign;
    std::vector<std::vector<double>> centroids;
    double sse = 0.0;
    std::vector<double> sse_trace;
};

LloydRun lloyd_from(const std::vector<std::vector<double>>& pts,
                    std::vector<std::vector<double>> cent);

LloydRun lloyd(const std::vector<std::vector<double>>& pts, int k, Rng& rng) {
    const std::size_t n = pts.size();
    const std::size_t d = pts[0].size();

    // greedy k-means++ seeding: sample several D^2-weighted candidates per
    // step and keep the one that minimizes the resulting potential
    const std::size_t n_candidates = std::min<std::size_t>(n, 2 + static_cast<std::size_t>(
                                                                    std::log(double(k)) + 2.0));
    std::vector<std::vector<double>> cent;
    cent.reserve(k);
    cent.push_back(pts[rng.index(n)]);
    std::vector<double> dist2(n);
    while (static_cast<int>(cent.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (const auto& c : cent) best = std::min(best, sqdist(pts[i], c));
            dist2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            cent.push_back(pts[rng.index(n)]); // all mass on existing centroids
            continue;
        }
        std::size_t best_pick = n - 1;
        double best_potential = std::numeric_limits<double>::max();
        for (std::size_t c = 0; c < n_candidates; ++c) {
            double draw = rng.uniform01() * total;
            std::size_t pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                draw -= dist2[i];
                if (draw <= 0.0) {
                    pick = i;
                    break;
                }
            }
            double potential = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                potential += std::min(dist2[i], sqdist(pts[i], pts[pick]));
            if (potential < best_potential) {
                best_potential = potential;
                best_pick = pick;
            }
        }
        cent.push_back(pts[best_pick]);
    }
    return lloyd_from(pts, std::move(cent));
}

LloydRun lloyd_from(const std::vector<std::vector<double>>& pts,
                    std::vector<std::vector<double>> cent) {
    const std::size_t n = pts.size();
    const std::size_t d = pts[0].size();
    const int k = static_cast<int>(cent.size());

    LloydRun run;
    run.assign.assign(n, -1);
    run.centroids = std::move(cent);
    for (int iter = 0; iter < 300; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double bd = sqdist(pts[i], run.centroids[0]);
            for (int c = 1; c < k; ++c) {
                const double dd = sqdist(pts[i], run.centroids[c]);
                if (dd < bd) {
                    bd = dd;
                    best = c;
                }
            }
            if (run.assign[i] != best) {
                run.assign[i] = best;
                changed = true;
            }
        }
        {
            double sse = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                sse += sqdist(pts[i], run.centroids[run.assign[i]]);
            run.sse_trace.push_back(sse);
        }
        if (!changed) break;
        std::vector<std::size_t> counts(k, 0);
        std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            counts[run.assign[i]]++;
            for (std::size_t j = 0; j < d; ++j) sums[run.assign[i]][j] += pts[i][j];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // reseed to the point farthest from its centroid
                double worst = -1.0;
                std::size_t pick = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double dd = sqdist(pts[i], run.centroids[run.assign[i]]);
                    if (dd > worst) {
                        worst = dd;
                        pick = i;
                    }
                }
                run.centroids[c] = pts[pick];
            } else {
                for (std::size_t j = 0; j < d; ++j)
                    run.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
            }
        }
    }
    run.sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) run.sse += sqdist(pts[i], run.centroids[run.assign[i]]);
    return run;
}

} // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed,
                    std::vector<double>* sse_trace) {
    if (k < 2) fail(ErrorKind::Usage, "k must be at least 2");
    if (points.size() < static_cast<std::size_t>(k))
        fail(ErrorKind::Degenerate, "fewer points than clusters");
    std::set<std::vector<double>> distinct(points.begin(), points.end());
    if (distinct.size() < static_cast<std::size_t>(k))
        fail(ErrorKind::Degenerate, "fewer distinct points than clusters");

    const Standardization st = fit_standardize(points);
    const auto pts = apply_standardize(points, st);

    LloydRun best;
    best.sse = std::numeric_limits<double>::max();
    for (int restart = 0; restart < 10; ++restart) {
        Rng rng(derive_seed(seed, 0xC1057A + restart));
        LloydRun run = lloyd(pts, k, rng);
        if (run.sse < best.sse) best = std::move(run);
    }
    if (k == 2 && pts.size() <= 12) {
        // tiny instances have Lloyd fixpoints unreachable from any seeding;
        // enumerate every bipartition exactly (<= 2047 SSE evaluations)
        const std::size_t n = pts.size();
        const std::size_t d = pts[0].size();
        for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
            std::vector<std::vector<double>> cent(2, std::vector<double>(d, 0.0));
            std::size_t counts[2] = {0, 0};
            for (std::size_t i = 0; i < n; ++i) {
                const int side = (mask >> i) & 1u;
                counts[side]++;
                for (std::size_t j = 0; j < d; ++j) cent[side][j] += pts[i][j];
            }
            for (int c = 0; c < 2; ++c)
                for (std::size_t j = 0; j < d; ++j) cent[c][j] /= double(counts[c]);
            double sse = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                sse += sqdist(pts[i], cent[(mask >> i) & 1u]);
            if (sse < best.sse) {
                best.sse = sse;
                best.centroids = cent;
                best.assign.resize(n);
                for (std::size_t i = 0; i < n; ++i)
                    best.assign[i] = static_cast<int>((mask >> i) & 1u);
            }
        }
    }

    // guarantee a full partition: fill any straggling empty cluster with the
    // farthest point of a multi-member cluster
    while (true) {
        std::vector<std::size_t> counts(k, 0);
        for (int a : best.assign) counts[a]++;
        int empty = -1;
        for (int c = 0; c < k; ++c)
            if (counts[c] == 0) empty = c;
        if (empty < 0) break;
        double worst = -1.0;
        std::size_t pick = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (counts[best.assign[i]] < 2) continue;
            const double dd = sqdist(pts[i], best.centroids[best.assign[i]]);
            if (dd > worst) {
                worst = dd;
                pick = i;
            }
        }
        best.assign[pick] = empty;
        best.centroids[empty] = pts[pick];
        best.sse = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            best.sse += sqdist(pts[i], best.centroids[best.assign[i]]);
    }

    if (sse_trace) *sse_trace = best.sse_trace;
    KMeansResult out;
    out.assignments = std::move(best.assign);
    out.sse = best.sse;
    out.centroids = std::move(best.centroids);
    for (auto& c : out.centroids)
        for (std::size_t j = 0; j < c.size(); ++j) c[j] = c[j] * st.scale[j] + st.mean[j];
    return out;
}

double silhouette_mean(const std::vector<std::vector<double>>& points,
                       const std::vector<int>& assignments, int k) {
    const std::size_t n = points.size();
    if (n == 0 || assignments.size() != n) fail(ErrorKind::Logic, "bad silhouette input");
    std::vector<std::size_t> counts(k, 0);
    for (int a : assignments) counts[a]++;

    double total = 0.0;
    std::vector<double> mean_dist(k);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            mean_dist[assignments[j]] += std::sqrt(sqdist(points[i], points[j]));
        }
        const int own = assignments[i];
        if (counts[own] <= 1) continue; // singleton scores 0
        const double a = mean_dist[own] / static_cast<double>(counts[own] - 1);
        double b = std::numeric_limits<double>::max();
        for (int c = 0; c < k; ++c) {
            if (c == own || counts[c] == 0) continue;
            b = std::min(b, mean_dist[c] / static_cast<double>(counts[c]));
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

SilhouetteCurve select_k(const std::vector<std::vector<double>>& points, int k_min, int k_max,
                         std::uint64_t seed) {
    if (points.size() < 20) fail(ErrorKind::Degenerate, "need at least 20 points to select k");
    const Standardization st = fit_standardize(points);
    const auto pts = apply_standardize(points, st);

    SilhouetteCurve curve;
    double best = -2.0;
    for (int k = k_min; k <= k_max; ++k) {
        const KMeansResult km = kmeans(points, k, seed);
        const double s = silhouette_mean(pts, km.assignments, k);
        curve.scores.emplace_back(k, s);
        if (s > best) { // ties resolve toward the smaller k
            best = s;
            curve.best_k = k;
        }
    }
    return curve;
}

double label_entropy(const std::vector<int>& labels) {
    if (labels.empty()) return 0.0;
    std::size_t ones = 0;
    for (int l : labels) ones += l != 0;
    const double p = static_cast<double>(ones) / labels.size();
    double h = 0.0;
    if (p > 0.0) h -= p * std::log2(p);
    if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
    return h;
}

MetaClusterSet order_by_entropy(const KMeansResult& km, const std::vector<int>& labels) {
    if (labels.size() != km.assignments.size())
        fail(ErrorKind::Logic, "every meta sample needs a label");
    const int k = static_cast<int>(km.centroids.size());
    std::vector<std::vector<std::size_t>> groups(k);
    for (std::size_t i = 0; i < km.assignments.size(); ++i)
        groups[km.assignments[i]].push_back(i);

    std::vector<double> ent(k);
    for (int c = 0; c < k; ++c) {
        std::vector<int> ls;
        ls.reserve(groups[c].size());
        for (std::size_t i : groups[c]) ls.push_back(labels[i]);
        ent[c] = label_entropy(ls);
    }

    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (ent[a] != ent[b]) return ent[a] < ent[b];
        return groups[a].size() > groups[b].size();
    });

    MetaClusterSet out;
    for (int c : order) {
        out.clusters.push_back(groups[c]);
        out.centroids.push_back(km.centroids[c]);
        out.entropies.push_back(ent[c]);
    }
    return out;
}

} // namespace clickcfa::cluster
