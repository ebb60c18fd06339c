#ifndef SRNN_SPEEDUP_H
#define SRNN_SPEEDUP_H

#include <cstdint>
#include <string>
#include <vector>

#include "srnn/config.h"

namespace srnn {

struct SpeedupRow {
    int subsample_layers = 0;
    int clamp_sub = 0;     // L after subsampling
    int length_sub = 0;    // T' after subsampling
    int64_t cells = 0;     // lattice entries, matches lattice_entry_count
    double seconds = 0.0;  // lattice build + log_partition, best of reps
    double speedup = 1.0;  // vs the no-subsampling row
    std::string reference;
};

// Times lattice construction plus the partition recursion for 0, 1, and 2
// subsampling layers at a matched original-frame clamp, on one synthetic
// input of length T.
std::vector<SpeedupRow> run_speedup(const RunConfig& base, int T, int dim, int vocab,
                                    uint64_t seed, int reps);

}  // namespace srnn

#endif
