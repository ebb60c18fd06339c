#include "srnn/oracle.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace srnn::oracle {

namespace {

// Independent log-sum-exp over a collected list (max shift).
double lse_list(const std::vector<double>& xs) {
    double m = xs[0];
    for (double x : xs) m = std::max(m, x);
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

void check_budget(const ScoreLattice& lat, const EnumerationBudget& b, const char* what) {
    if (lat.T() > b.max_T)
        throw Error(std::string(what) + ": T exceeds enumeration budget");
    if (lat.V() > b.max_V)
        throw Error(std::string(what) + ": V exceeds enumeration budget");
    if (count_labeled_paths(lat.T(), lat.L(), lat.V()) > b.max_pairs)
        throw Error(std::string(what) + ": (y, E) pair count exceeds enumeration budget");
}

void grow(std::vector<int>& prefix, int T, int L, std::vector<Segmentation>& out) {
    int at = prefix.back();
    if (at == T) {
        out.push_back(Segmentation{prefix});
        return;
    }
    for (int next = at + 1; next <= std::min(at + L, T); ++next) {
        prefix.push_back(next);
        grow(prefix, T, L, out);
        prefix.pop_back();
    }
}

// Visit every labeling of a segmentation (odometer over V^J).
template <class F>
void for_each_labeling(int J, int V, F&& fn) {
    std::vector<int> y(J, 0);
    while (true) {
        fn(y);
        int i = J - 1;
        while (i >= 0 && ++y[i] == V) y[i--] = 0;
        if (i < 0) break;
    }
}

double path_score(const ScoreLattice& lat, const Segmentation& seg,
                  const std::vector<int>& y) {
    double s = 0.0;  // left-to-right accumulation, matching the joint DP
    for (int j = 0; j < seg.num_segments(); ++j)
        s += lat.at(seg.start(j), seg.end(j), y[j]);
    return s;
}

// True when (cand_seg, cand_y) is preferred over the incumbent at equal
// score: larger boundaries compared from the end (shorter trailing
// segments), then smaller labels compared from the end.
bool tie_preferred(const Segmentation& cs, const std::vector<int>& cy,
                   const Segmentation& is, const std::vector<int>& iy) {
    int a = static_cast<int>(cs.boundaries.size());
    int b = static_cast<int>(is.boundaries.size());
    for (int i = 1; i <= std::min(a, b); ++i) {
        int cb = cs.boundaries[a - i], ib = is.boundaries[b - i];
        if (cb != ib) return cb > ib;
    }
    for (int i = 1; i <= std::min<int>(cy.size(), iy.size()); ++i) {
        int cl = cy[cy.size() - i], il = iy[iy.size() - i];
        if (cl != il) return cl < il;
    }
    return false;
}

}  // namespace

std::vector<Segmentation> enumerate_segmentations(int T, int L,
                                                  const EnumerationBudget& budget) {
    if (T < 1 || L < 1) throw Error("enumerate_segmentations: T, L >= 1 required");
    if (T > budget.max_T || count_segmentations(T, L) > budget.max_pairs)
        throw Error("enumerate_segmentations: enumeration budget exceeded");
    std::vector<Segmentation> out;
    std::vector<int> prefix{0};
    grow(prefix, T, L, out);
    return out;
}

double count_segmentations(int T, int L) {
    std::vector<double> n(T + 1, 0.0);
    n[0] = 1.0;
    for (int t = 1; t <= T; ++t)
        for (int d = 1; d <= std::min(t, L); ++d) n[t] += n[t - d];
    return n[T];
}

double count_labeled_paths(int T, int L, int V) {
    std::vector<double> n(T + 1, 0.0);
    n[0] = 1.0;
    for (int t = 1; t <= T; ++t)
        for (int d = 1; d <= std::min(t, L); ++d) n[t] += n[t - d] * V;
    return n[T];
}

double count_segmentations_with_parts(int T, int J, int L) {
    // c[j][t]: segmentations of t frames into exactly j segments
    std::vector<std::vector<double>> c(J + 1, std::vector<double>(T + 1, 0.0));
    c[0][0] = 1.0;
    for (int j = 1; j <= J; ++j)
        for (int t = 1; t <= T; ++t)
            for (int d = 1; d <= std::min(t, L); ++d) c[j][t] += c[j - 1][t - d];
    return c[J][T];
}

double log_count_labeled_paths(int T, int L, int V) {
    const double kNegInf = -std::numeric_limits<double>::infinity();
    std::vector<double> ln(T + 1, kNegInf);
    ln[0] = 0.0;
    double log_v = std::log(static_cast<double>(V));
    for (int t = 1; t <= T; ++t) {
        std::vector<double> terms;
        for (int d = 1; d <= std::min(t, L); ++d)
            if (ln[t - d] != kNegInf) terms.push_back(ln[t - d] + log_v);
        if (!terms.empty()) ln[t] = lse_list(terms);
    }
    return ln[T];
}

double log_count_segmentations_with_parts(int T, int J, int L) {
    const double kNegInf = -std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> c(J + 1, std::vector<double>(T + 1, kNegInf));
    c[0][0] = 0.0;
    for (int j = 1; j <= J; ++j)
        for (int t = 1; t <= T; ++t) {
            std::vector<double> terms;
            for (int d = 1; d <= std::min(t, L); ++d)
                if (c[j - 1][t - d] != kNegInf) terms.push_back(c[j - 1][t - d]);
            if (!terms.empty()) c[j][t] = lse_list(terms);
        }
    return c[J][T];
}

double brute_log_partition(const ScoreLattice& lat, const EnumerationBudget& budget) {
    check_budget(lat, budget, "brute_log_partition");
    std::vector<double> scores;
    std::vector<int> prefix{0};
    std::vector<Segmentation> segs;
    grow(prefix, lat.T(), lat.L(), segs);
    for (const auto& seg : segs) {
        for_each_labeling(seg.num_segments(), lat.V(), [&](const std::vector<int>& y) {
            scores.push_back(path_score(lat, seg, y));
        });
    }
    return lse_list(scores);
}

BruteClamped brute_log_clamped(const ScoreLattice& lat, const LabelSequence& y,
                               const EnumerationBudget& budget) {
    check_budget(lat, budget, "brute_log_clamped");
    const int J = y.size();
    std::vector<double> scores;
    std::vector<int> prefix{0};
    std::vector<Segmentation> segs;
    grow(prefix, lat.T(), lat.L(), segs);
    for (const auto& seg : segs) {
        if (seg.num_segments() != J) continue;
        scores.push_back(path_score(lat, seg, y.labels));
    }
    if (scores.empty())
        return {-std::numeric_limits<double>::infinity(), false};
    return {lse_list(scores), true};
}

BruteBest brute_argmax(const ScoreLattice& lat, const EnumerationBudget& budget) {
    check_budget(lat, budget, "brute_argmax");
    BruteBest best;
    best.score = -std::numeric_limits<double>::infinity();
    bool have = false;
    std::vector<int> prefix{0};
    std::vector<Segmentation> segs;
    grow(prefix, lat.T(), lat.L(), segs);
    for (const auto& seg : segs) {
        for_each_labeling(seg.num_segments(), lat.V(), [&](const std::vector<int>& y) {
            double s = path_score(lat, seg, y);
            bool take = !have || s > best.score ||
                        (s == best.score && tie_preferred(seg, y, best.seg, best.labels.labels));
            if (take) {
                best.score = s;
                best.seg = seg;
                best.labels.labels = y;
                have = true;
            }
        });
    }
    return best;
}

std::map<std::tuple<int, int, int>, double> brute_segment_posteriors(
    const ScoreLattice& lat, const LabelSequence* y_obs, const EnumerationBudget& budget) {
    check_budget(lat, budget, "brute_segment_posteriors");
    std::vector<int> prefix{0};
    std::vector<Segmentation> segs;
    grow(prefix, lat.T(), lat.L(), segs);

    // Two passes: total mass, then per-segment mass.
    std::vector<double> all_scores;
    for (const auto& seg : segs) {
        if (y_obs && seg.num_segments() != y_obs->size()) continue;
        if (y_obs) {
            all_scores.push_back(path_score(lat, seg, y_obs->labels));
        } else {
            for_each_labeling(seg.num_segments(), lat.V(), [&](const std::vector<int>& y) {
                all_scores.push_back(path_score(lat, seg, y));
            });
        }
    }
    if (all_scores.empty()) throw Error("brute_segment_posteriors: no feasible path");
    double log_z = lse_list(all_scores);

    std::map<std::tuple<int, int, int>, double> post;
    auto accumulate = [&](const Segmentation& seg, const std::vector<int>& y) {
        double p = std::exp(path_score(lat, seg, y) - log_z);
        for (int j = 0; j < seg.num_segments(); ++j)
            post[{seg.start(j), seg.end(j), y[j]}] += p;
    };
    for (const auto& seg : segs) {
        if (y_obs && seg.num_segments() != y_obs->size()) continue;
        if (y_obs) {
            accumulate(seg, y_obs->labels);
        } else {
            for_each_labeling(seg.num_segments(), lat.V(),
                              [&](const std::vector<int>& y) { accumulate(seg, y); });
        }
    }
    return post;
}

}  // namespace srnn::oracle
