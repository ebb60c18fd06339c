#include "srnn/lattice.h"

#include <cassert>
#include <cmath>
#include <unordered_set>

namespace srnn {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.empty()) throw Error("vocabulary must have size >= 1");
    std::unordered_set<std::string> seen;
    for (const auto& t : tokens_) {
        if (t.empty()) throw Error("vocabulary token must be non-empty");
        if (!seen.insert(t).second) throw Error("duplicate vocabulary token: " + t);
    }
}

int Vocabulary::index_of(const std::string& token) const {
    for (int i = 0; i < size(); ++i)
        if (tokens_[i] == token) return i;
    return -1;
}

void FrameSequence::validate() const {
    if (T < 1 || D < 1) throw Error("frame sequence requires T >= 1 and D >= 1");
    if (data.size() != static_cast<size_t>(T) * D)
        throw Error("frame sequence data size does not match T*D");
    for (double v : data)
        if (!std::isfinite(v)) throw Error("frame sequence contains non-finite value");
}

Verdict validate_segmentation(const Segmentation& seg, int T, std::optional<int> L) {
    const auto& b = seg.boundaries;
    if (b.size() < 2) return {false, "needs at least two boundary tags"};
    if (b.front() != 0) return {false, "first boundary is not 0"};
    for (size_t i = 1; i < b.size(); ++i)
        if (b[i] <= b[i - 1]) return {false, "not strictly increasing"};
    if (b.back() != T)
        return {false, "last boundary " + std::to_string(b.back()) +
                           " does not equal T=" + std::to_string(T)};
    if (L) {
        for (int j = 0; j < seg.num_segments(); ++j) {
            int d = seg.duration(j);
            if (d > *L)
                return {false, "segment " + std::to_string(j + 1) + " has duration " +
                                   std::to_string(d) + " > L=" + std::to_string(*L)};
        }
    }
    return {true, ""};
}

LabelSequence collapse_labels(const LabelSequence& seq, const std::vector<int>& mapping,
                              bool merge_adjacent) {
    LabelSequence out;
    out.labels.reserve(seq.labels.size());
    for (int y : seq.labels) {
        if (y < 0 || y >= static_cast<int>(mapping.size()) || mapping[y] < 0)
            throw Error("collapse map has no image for index " + std::to_string(y));
        int m = mapping[y];
        if (merge_adjacent && !out.labels.empty() && out.labels.back() == m) continue;
        out.labels.push_back(m);
    }
    return out;
}

int64_t lattice_entry_count(int T, int L, int V) {
    if (T < 1 || L < 1 || V < 1) throw Error("lattice_entry_count requires T, L, V >= 1");
    int64_t pairs = 0;
    for (int t = 1; t <= T; ++t) pairs += std::min(t, L);
    return pairs * V;
}

ScoreLattice::ScoreLattice(int T, int L, int V) : T_(T), L_(L), V_(V) {
    if (T < 1 || L < 1 || V < 1) throw Error("score lattice requires T, L, V >= 1");
    pair_base_.resize(T + 1, 0);
    int pairs = 0;
    for (int t = 1; t <= T; ++t) {
        pair_base_[t] = pairs;
        pairs += std::min(t, L);
    }
    total_pairs_ = pairs;
    scores_.assign(static_cast<size_t>(pairs) * V, 0.0);
}

int ScoreLattice::pair_index(int k, int t) const {
    assert(admissible(k, t));
    return pair_base_[t] + (k - min_start(t));
}

}  // namespace srnn
