#ifndef SRNN_LATTICE_H
#define SRNN_LATTICE_H

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace srnn {

// Thrown for recoverable input/usage errors (bad files, bad shapes, bad
// configuration). Internal invariant violations use assert instead.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Ordered set of distinct label strings; index = position.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> tokens);

    int size() const { return static_cast<int>(tokens_.size()); }
    const std::string& token(int index) const { return tokens_.at(index); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    // -1 if unknown.
    int index_of(const std::string& token) const;

private:
    std::vector<std::string> tokens_;
};

// T x D matrix of input frames, row-major. frame_period_ms is metadata only.
struct FrameSequence {
    int T = 0;
    int D = 0;
    std::vector<double> data;  // T*D, row-major
    double frame_period_ms = 10.0;

    double at(int t, int d) const { return data[static_cast<size_t>(t) * D + d]; }
    void validate() const;
};

// Output token sequence as vocabulary indices, length J >= 1.
struct LabelSequence {
    std::vector<int> labels;

    int size() const { return static_cast<int>(labels.size()); }
    bool operator==(const LabelSequence&) const = default;
};

// Boundary tags b_0 = 0 < b_1 < ... < b_J = T; segment j covers frames
// [b_{j-1}, b_j).
struct Segmentation {
    std::vector<int> boundaries;

    int num_segments() const { return static_cast<int>(boundaries.size()) - 1; }
    int start(int j) const { return boundaries[j]; }
    int end(int j) const { return boundaries[j + 1]; }
    int duration(int j) const { return end(j) - start(j); }
    bool operator==(const Segmentation&) const = default;
};

struct Verdict {
    bool ok = true;
    std::string diagnostic;  // names the first violated invariant
};

Verdict validate_segmentation(const Segmentation& seg, int T,
                              std::optional<int> L = std::nullopt);

// Replaces each label by mapping[label]; optionally merges adjacent
// duplicates afterwards. mapping must be total (>= 0 for every index used).
LabelSequence collapse_labels(const LabelSequence& seq,
                              const std::vector<int>& mapping,
                              bool merge_adjacent = false);

// V * sum_{t=1..T} min(t, L): number of admissible (k, t, y) triples.
int64_t lattice_entry_count(int T, int L, int V);

// Log-domain segment scores f(y, <k, t>) for all 0 <= k < t <= T with
// t - k <= L and y in [0, V). Storage is contiguous in (pair, y) with pairs
// ordered by t ascending, then k ascending.
class ScoreLattice {
public:
    ScoreLattice() = default;
    ScoreLattice(int T, int L, int V);

    int T() const { return T_; }
    int L() const { return L_; }
    int V() const { return V_; }
    int64_t size() const { return static_cast<int64_t>(scores_.size()); }

    bool admissible(int k, int t) const {
        return 0 <= k && k < t && t <= T_ && t - k <= L_;
    }
    // Index of the (k, t) pair block; scores for the pair occupy
    // [pair_offset * V, (pair_offset + 1) * V).
    int pair_index(int k, int t) const;
    int num_pairs() const { return static_cast<int>(pair_base_.size()) == 0 ? 0 : total_pairs_; }

    double& at(int k, int t, int y) { return scores_[score_index(k, t, y)]; }
    double at(int k, int t, int y) const { return scores_[score_index(k, t, y)]; }

    const std::vector<double>& raw() const { return scores_; }
    std::vector<double>& raw() { return scores_; }

    // First admissible start for segments ending at t.
    int min_start(int t) const { return t - L_ > 0 ? t - L_ : 0; }

private:
    size_t score_index(int k, int t, int y) const {
        return static_cast<size_t>(pair_index(k, t)) * V_ + y;
    }

    int T_ = 0, L_ = 0, V_ = 0;
    int total_pairs_ = 0;
    std::vector<int> pair_base_;  // per t: index of first pair ending at t
    std::vector<double> scores_;
};

}  // namespace srnn

#endif
