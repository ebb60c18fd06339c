#include "srnn/speedup.h"

#include <chrono>

#include "srnn/rng.h"
#include "srnn/segcrf.h"

namespace srnn {

namespace {
double now_seconds() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}
}  // namespace

std::vector<SpeedupRow> run_speedup(const RunConfig& base, int T, int dim, int vocab,
                                    uint64_t seed, int reps) {
    if (T < 4) throw Error("speedup: T must be >= 4");
    if (reps < 1) reps = 1;
    static const char* kReference[3] = {"1x", "~3x", "~10x"};

    Rng rng(mix_seed(seed, 0x737064ull));
    FrameSequence x;
    x.T = T;
    x.D = dim;
    x.data.resize(static_cast<size_t>(T) * dim);
    for (double& v : x.data) v = rng.uniform(-1.0, 1.0);

    std::vector<SpeedupRow> rows;
    for (int layers = 0; layers <= 2; ++layers) {
        RunConfig cfg = base;
        cfg.train.dropout_rate = 0.0;
        cfg.encoder.dropout_rate = 0.0;
        cfg.encoder.subsample_after.clear();
        for (int i = 1; i <= layers; ++i) cfg.encoder.subsample_after.push_back(i);
        if (cfg.encoder.num_layers < layers + 1) cfg.encoder.num_layers = layers + 1;
        cfg.encoder.window = 2;

        ModelDims dims = model_dims(cfg, dim, vocab);
        Model model = make_model(dims, seed);

        SpeedupRow row;
        row.subsample_layers = layers;
        row.clamp_sub = dims.clamp_subsampled();
        row.reference = kReference[layers];

        double best = 0.0;
        for (int rep = 0; rep < reps; ++rep) {
            ad::Tape tape;
            ModelVars vars = bind(tape, model);
            EncodeResult enc = encode(tape, x, dims.encoder, vars.encoder,
                                      RunMode::kEval, 0);
            row.length_sub = static_cast<int>(enc.states.size());
            double t0 = now_seconds();
            LatticeNodes lat = build_score_lattice(tape, enc.states, vars.feat,
                                                   dims.vocab, ClampConfig{row.clamp_sub});
            volatile double sink = log_partition(lat.values);
            (void)sink;
            double dt = now_seconds() - t0;
            if (rep == 0 || dt < best) best = dt;
            row.cells = lat.values.size();
        }
        row.seconds = best;
        rows.push_back(row);
    }
    for (auto& row : rows)
        row.speedup = row.seconds > 0.0 ? rows[0].seconds / row.seconds : 0.0;
    return rows;
}

}  // namespace srnn
