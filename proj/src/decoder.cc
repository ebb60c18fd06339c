#include "srnn/decoder.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace srnn {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lse(const std::vector<double>& xs) {
    double m = xs[0];
    for (double x : xs) m = std::max(m, x);
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}
}  // namespace

DecodeResult decode_joint(const ScoreLattice& lat) {
    const int T = lat.T(), V = lat.V();
    std::vector<double> alpha(T + 1, kNegInf);
    std::vector<int> bp_k(T + 1, -1), bp_y(T + 1, -1);
    alpha[0] = 0.0;
    for (int t = 1; t <= T; ++t) {
        // k descending so a tie keeps the larger k (shorter segment); y
        // ascending so a tie keeps the smaller label.
        for (int k = t - 1; k >= lat.min_start(t); --k) {
            for (int y = 0; y < V; ++y) {
                double cand = alpha[k] + lat.at(k, t, y);
                if (cand > alpha[t]) {
                    alpha[t] = cand;
                    bp_k[t] = k;
                    bp_y[t] = y;
                }
            }
        }
    }

    DecodeResult res;
    res.mode = DecodeMode::kJoint;
    res.score = alpha[T];
    std::vector<int> bounds{T};
    std::vector<int> labels;
    for (int t = T; t > 0; t = bp_k[t]) {
        labels.push_back(bp_y[t]);
        bounds.push_back(bp_k[t]);
    }
    std::reverse(bounds.begin(), bounds.end());
    std::reverse(labels.begin(), labels.end());
    res.segmentation = Segmentation{bounds};
    res.labels.labels = labels;
    return res;
}

DecodeResult decode_marginal_hybrid(const ScoreLattice& lat) {
    const int T = lat.T(), V = lat.V();
    std::vector<double> alpha(T + 1, kNegInf);
    alpha[0] = 0.0;
    std::vector<double> terms;
    // best_label[pair]: argmax_y f(y, <k,t>), smallest index on ties.
    std::vector<int> best_label(lat.num_pairs(), 0);
    std::vector<double> best_score(lat.num_pairs(), kNegInf);
    for (int t = 1; t <= T; ++t) {
        terms.clear();
        for (int k = lat.min_start(t); k < t; ++k) {
            int pair = lat.pair_index(k, t);
            for (int y = 0; y < V; ++y) {
                double f = lat.at(k, t, y);
                if (f > best_score[pair]) {
                    best_score[pair] = f;
                    best_label[pair] = y;
                }
            }
            terms.push_back(alpha[k] + best_score[pair]);
        }
        alpha[t] = lse(terms);
    }

    DecodeResult res;
    res.mode = DecodeMode::kMarginalHybrid;
    res.score = alpha[T];
    std::vector<int> bounds{T};
    std::vector<int> labels;
    for (int t = T; t > 0;) {
        // Predecessor maximizing the summand; larger k wins ties.
        int arg_k = -1;
        double best = kNegInf;
        for (int k = t - 1; k >= lat.min_start(t); --k) {
            int pair = lat.pair_index(k, t);
            double cand = alpha[k] + best_score[pair];
            if (cand > best) {
                best = cand;
                arg_k = k;
            }
        }
        labels.push_back(best_label[lat.pair_index(arg_k, t)]);
        bounds.push_back(arg_k);
        t = arg_k;
    }
    std::reverse(bounds.begin(), bounds.end());
    std::reverse(labels.begin(), labels.end());
    res.segmentation = Segmentation{bounds};
    res.labels.labels = labels;
    return res;
}

}  // namespace srnn
