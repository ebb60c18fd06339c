#ifndef SRNN_ORACLE_H
#define SRNN_ORACLE_H

#include <cstdint>
#include <map>
#include <tuple>
#include <vector>

#include "srnn/lattice.h"

namespace srnn::oracle {

// Brute-force reference implementations for tests and self-checks only.
// These deliberately share no dynamic-programming helpers with the segcrf
// module: everything is direct enumeration over segmentations and labelings.

struct EnumerationBudget {
    int max_T = 8;
    int max_V = 4;
    double max_pairs = 1e7;  // refuse when the (y, E) pair count exceeds this
};

// Every boundary list with all durations in [1, L], in lexicographic order.
std::vector<Segmentation> enumerate_segmentations(int T, int L,
                                                  const EnumerationBudget& budget = {});

// Exact integer count of segmentations (recurrence N(T) = sum_d N(T-d)).
double count_segmentations(int T, int L);
// Weighted count of (y, E) pairs: sum over segmentations of V^{#segments}.
double count_labeled_paths(int T, int L, int V);
// Count of segmentations with exactly J segments, all durations <= L.
double count_segmentations_with_parts(int T, int J, int L);

// Log-domain versions of the path-count recurrences, stable for large T.
double log_count_labeled_paths(int T, int L, int V);
double log_count_segmentations_with_parts(int T, int J, int L);

double brute_log_partition(const ScoreLattice& lat, const EnumerationBudget& budget = {});

struct BruteClamped {
    double log_z;
    bool feasible;
};
BruteClamped brute_log_clamped(const ScoreLattice& lat, const LabelSequence& y,
                               const EnumerationBudget& budget = {});

struct BruteBest {
    LabelSequence labels;
    Segmentation seg;
    double score;
};
// Argmax over all (y, E); ties prefer shorter trailing segments (larger
// boundary values compared from the end), then smaller labels compared from
// the end. Score accumulates segment scores left to right.
BruteBest brute_argmax(const ScoreLattice& lat, const EnumerationBudget& budget = {});

// Posterior P(segment <k,t> with label y | X), or conditioned on the label
// sequence when y_obs is non-null.
std::map<std::tuple<int, int, int>, double> brute_segment_posteriors(
    const ScoreLattice& lat, const LabelSequence* y_obs = nullptr,
    const EnumerationBudget& budget = {});

}  // namespace srnn::oracle

#endif
