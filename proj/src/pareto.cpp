// SPDX-License-Identifier: Apache-2.0
#include "boat/pareto.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace boat {

bool dominates(const ScoreVector& a, const ScoreVector& b) {
    if (a.size() != b.size()) throw DimensionMismatch("score vectors differ in dimension");
    bool strict = false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return false;
        if (a[i] > b[i]) strict = true;
    }
    return strict;
}

std::vector<std::vector<int>> non_dominated_sort(const std::vector<ScoreVector>& points) {
    const int n = static_cast<int>(points.size());
    std::vector<std::vector<int>> fronts;
    if (n == 0) return fronts;

    std::vector<int> dominated_count(n, 0);
    std::vector<std::vector<int>> dominates_list(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            if (dominates(points[i], points[j])) dominates_list[i].push_back(j);
            else if (dominates(points[j], points[i])) ++dominated_count[i];
        }

    std::vector<int> current;
    for (int i = 0; i < n; ++i)
        if (dominated_count[i] == 0) current.push_back(i);
    while (!current.empty()) {
        fronts.push_back(current);
        std::vector<int> next;
        for (int i : current)
            for (int j : dominates_list[i])
                if (--dominated_count[j] == 0) next.push_back(j);
        std::sort(next.begin(), next.end());  // stable input order within fronts
        current = std::move(next);
    }
    return fronts;
}

std::vector<double> crowding_distance(const std::vector<ScoreVector>& front) {
    const int n = static_cast<int>(front.size());
    std::vector<double> dist(n, 0.0);
    if (n == 0) return dist;
    const double inf = std::numeric_limits<double>::infinity();
    const Eigen::Index k = front[0].size();
    std::vector<int> order(n);
    for (Eigen::Index d = 0; d < k; ++d) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return front[a][d] < front[b][d]; });
        dist[order.front()] = inf;
        dist[order.back()] = inf;
        const double range = front[order.back()][d] - front[order.front()][d];
        if (range <= 0) continue;
        for (int i = 1; i + 1 < n; ++i) {
            if (std::isinf(dist[order[i]])) continue;
            dist[order[i]] += (front[order[i + 1]][d] - front[order[i - 1]][d]) / range;
        }
    }
    return dist;
}

namespace {

using Pt = std::array<double, 4>;

// Dimension-sweep recursion: slice on the last coordinate, recurse on k-1.
double hv_impl(std::vector<Pt>& pts, const Pt& ref, int k) {
    if (pts.empty()) return 0.0;
    if (k == 1) {
        double best = ref[0];
        for (const auto& p : pts) best = std::max(best, p[0]);
        return best - ref[0];
    }
    if (k == 2) {
        std::sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) { return a[0] > b[0]; });
        double hv = 0.0;
        double covered = ref[1];
        for (const auto& p : pts)
            if (p[1] > covered) {
                hv += (p[0] - ref[0]) * (p[1] - covered);
                covered = p[1];
            }
        return hv;
    }
    const int last = k - 1;
    std::sort(pts.begin(), pts.end(), [&](const Pt& a, const Pt& b) { return a[last] > b[last]; });
    double hv = 0.0;
    std::vector<Pt> active;
    std::size_t i = 0;
    while (i < pts.size()) {
        const double z = pts[i][last];
        while (i < pts.size() && pts[i][last] == z) active.push_back(pts[i++]);
        const double z_next = (i < pts.size()) ? pts[i][last] : ref[last];
        std::vector<Pt> slab = active;
        hv += (z - z_next) * hv_impl(slab, ref, k - 1);
    }
    return hv;
}

}  // namespace

double hypervolume(const std::vector<ScoreVector>& points, const ScoreVector& ref) {
    const int k = static_cast<int>(ref.size());
    if (k < 1 || k > 4)
        throw UnsupportedDimension("hypervolume supports 1-4 objectives, got " + std::to_string(k));
    Pt r{};
    for (int d = 0; d < k; ++d) r[d] = ref[d];
    std::vector<Pt> pts;
    pts.reserve(points.size());
    for (const auto& p : points) {
        if (p.size() != ref.size()) throw DimensionMismatch("point/reference dimension mismatch");
        bool keep = true;
        Pt q{};
        for (int d = 0; d < k; ++d) {
            q[d] = p[d];
            if (p[d] <= ref[d]) keep = false;
        }
        if (keep) pts.push_back(q);
    }
    return hv_impl(pts, r, k);
}

ScoreVector default_reference(const std::vector<ScoreVector>& initial_scores) {
    if (initial_scores.empty()) throw ConfigError("default reference needs at least one score");
    ScoreVector ref = initial_scores[0];
    for (const auto& s : initial_scores)
        for (Eigen::Index d = 0; d < ref.size(); ++d) ref[d] = std::min(ref[d], s[d]);
    for (Eigen::Index d = 0; d < ref.size(); ++d)
        ref[d] = (ref[d] == 0.0) ? -0.1 : ref[d] - 0.1 * std::abs(ref[d]);
    return ref;
}

double ParetoState::update(std::int64_t id, const ScoreVector& score) {
    if (ref_.size() != 0 && score.size() != ref_.size())
        throw DimensionMismatch("score dimension does not match reference");
    for (const auto& e : front_)
        if (dominates(e.score, score)) return 0.0;
    std::erase_if(front_, [&](const FrontEntry& e) { return dominates(score, e.score); });
    front_.push_back({id, score});

    std::vector<ScoreVector> pts;
    pts.reserve(front_.size());
    for (const auto& e : front_) pts.push_back(e.score);
    const double old_hv = hv_;
    hv_ = hypervolume(pts, ref_);
    return std::max(0.0, hv_ - old_hv);
}

double shannon_entropy(const std::vector<Sequence>& sequences, double log_base) {
    if (sequences.empty()) throw ConfigError("shannon_entropy of an empty set");
    const std::size_t L = sequences[0].size();
    for (const auto& s : sequences)
        if (s.size() != L) throw LengthMismatch("sequences of unequal length");

    const double n = static_cast<double>(sequences.size());
    double total = 0.0;
    for (std::size_t p = 0; p < L; ++p) {
        std::array<int, 20> counts{};
        for (const auto& s : sequences) ++counts[residue_index(s[p])];
        double h = 0.0;
        for (int c : counts)
            if (c > 0) {
                const double q = c / n;
                h -= q * std::log(q);
            }
        total += h;
    }
    double mean = total / static_cast<double>(L);
    if (log_base > 0.0) mean /= std::log(log_base);
    return mean;
}

}  // namespace boat
