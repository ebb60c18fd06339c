#include "srnn/gradcheck.h"

#include <cmath>

#include "srnn/rng.h"
#include "srnn/segcrf.h"

namespace srnn {

namespace {

struct Case {
    ModelDims dims;
    int T = 0;  // original frames
    int J = 0;
};

Case make_case(const std::string& size) {
    Case c;
    if (size == "small") {
        c.dims.input_dim = 3;
        c.dims.vocab = 2;
        c.dims.encoder.num_layers = 1;
        c.dims.encoder.hidden = 4;
        c.dims.encoder.subsample_after = {};
        c.dims.encoder.proj = 4;
        c.dims.encoder.dropout_rate = 0.0;
        c.dims.embed = 4;
        c.dims.dw = 5;
        c.dims.dh = 4;
        c.dims.ddur = 3;
        c.dims.clamp_frames = 3;
        c.T = 5;  // no subsampling: T' = 5
        c.J = 2;
    } else if (size == "medium") {
        c.dims.input_dim = 4;
        c.dims.vocab = 3;
        c.dims.encoder.num_layers = 2;
        c.dims.encoder.hidden = 5;
        c.dims.encoder.subsample_after = {1};
        c.dims.encoder.window = 2;
        c.dims.encoder.proj = 6;
        c.dims.encoder.dropout_rate = 0.0;
        c.dims.embed = 5;
        c.dims.dw = 6;
        c.dims.dh = 5;
        c.dims.ddur = 3;
        c.dims.clamp_frames = 8;  // L' = 4 after factor 2
        c.T = 16;  // one subsampling stage: T' = 8
        c.J = 3;
    } else {
        throw Error("gradcheck: size must be small or medium");
    }
    return c;
}

}  // namespace

double pipeline_loss(const Model& m, const FrameSequence& x, const LabelSequence& y) {
    ad::Tape tape;
    ModelVars vars = bind(tape, m);
    EncodeResult enc = encode(tape, x, m.dims.encoder, vars.encoder, RunMode::kEval, 0);
    ClampConfig clamp{m.dims.clamp_subsampled()};
    LatticeNodes lat = build_score_lattice(tape, enc.states, vars.feat, m.dims.vocab, clamp);
    LossNodes loss = nll_loss(tape, lat, y);
    return tape.value(loss.loss)[0];
}

GradcheckResult run_gradcheck(const std::string& size, uint64_t seed, double tolerance) {
    Case c = make_case(size);
    Model model = make_model(c.dims, seed);
    Rng rng(mix_seed(seed, 0x67636b64ull));

    FrameSequence x;
    x.T = c.T;
    x.D = c.dims.input_dim;
    x.data.resize(static_cast<size_t>(x.T) * x.D);
    for (double& v : x.data) v = rng.uniform(-2.0, 2.0);

    LabelSequence y;
    for (int j = 0; j < c.J; ++j)
        y.labels.push_back(static_cast<int>(rng.uniform_int(0, c.dims.vocab - 1)));

    // Analytic gradients through the whole pipeline.
    GradMap analytic;
    {
        ad::Tape tape;
        ModelVars vars = bind(tape, model);
        EncodeResult enc = encode(tape, x, model.dims.encoder, vars.encoder,
                                  RunMode::kEval, 0);
        ClampConfig clamp{model.dims.clamp_subsampled()};
        LatticeNodes lat = build_score_lattice(tape, enc.states, vars.feat,
                                               model.dims.vocab, clamp);
        LossNodes loss = nll_loss(tape, lat, y);
        tape.backward(loss.loss);
        analytic = collect_grads(tape, vars);
    }

    const double h = 1e-4;
    GradcheckResult res;
    for_each_tensor(model, [&](const std::string& name, ad::Tensor& t) {
        const ad::Tensor& g = analytic.at(name);
        for (int i = 0; i < t.numel(); ++i) {
            double saved = t.v[i];
            t.v[i] = saved + h;
            double up = pipeline_loss(model, x, y);
            t.v[i] = saved - h;
            double down = pipeline_loss(model, x, y);
            t.v[i] = saved;
            double fd = (up - down) / (2.0 * h);
            double err = ad::rel_error(g.v[i], fd);
            if (err > res.max_rel_err) {
                res.max_rel_err = err;
                res.worst_tensor = name;
            }
            ++res.params_checked;
        }
    });
    res.pass = res.max_rel_err < tolerance;
    return res;
}

}  // namespace srnn
