#ifndef SRNN_MODEL_H
#define SRNN_MODEL_H

#include <functional>
#include <map>
#include <string>

#include "srnn/encoder.h"
#include "srnn/rng.h"
#include "srnn/segcrf.h"

namespace srnn {

// Every dimension needed to size the trainable tensors.
struct ModelDims {
    int input_dim = 8;
    int vocab = 1;
    EncoderConfig encoder;
    int embed = 32;   // label embedding dimension
    int dw = 64;      // g hidden width and output dimension of Phi
    int dh = 64;      // segment embedding dimension
    int ddur = 8;     // duration embedding dimension
    bool use_duration = true;
    int clamp_frames = 30;  // max segment duration in original frames

    // Clamp in encoder output frames: ceil(clamp_frames / factor).
    int clamp_subsampled() const {
        int f = encoder.subsample_factor();
        int L = (clamp_frames + f - 1) / f;
        return L < 1 ? 1 : L;
    }
    void validate() const;
};

struct Model {
    ModelDims dims;
    EncoderParams encoder;
    SegmentFeatureParams feat;
};

struct ModelVars {
    EncoderVars encoder;
    SegmentFeatureVars feat;
};

// Allocates all tensors and initializes them uniform in [-0.05, 0.05] from
// the seeded generator, except LSTM forget-gate biases which are set to 1.0.
Model make_model(const ModelDims& dims, uint64_t seed);

ModelVars bind(ad::Tape& tape, const Model& m);

// Visits every trainable tensor as (name, tensor) in a fixed order. The same
// order is used for initialization, checkpoints, SGD, and gradient checks.
void for_each_tensor(Model& m, const std::function<void(const std::string&, ad::Tensor&)>& fn);
void for_each_tensor(const Model& m,
                     const std::function<void(const std::string&, const ad::Tensor&)>& fn);
void for_each_var(const ModelVars& v,
                  const std::function<void(const std::string&, ad::VarId)>& fn);

using GradMap = std::map<std::string, ad::Tensor>;

// Gradients for every model tensor after tape.backward(); parameters the
// root does not reach receive zero tensors.
GradMap collect_grads(const ad::Tape& tape, const ModelVars& vars);

int64_t num_parameters(const Model& m);

}  // namespace srnn

#endif
