// checkpoint.hpp - parameter checkpoints.
//
// A checkpoint is a pair of files sharing a stem:
//   <stem>.bin  - named tensors: shape header + raw little-endian float32 data
//   <stem>.json - manifest: names, shapes, step counter, learning-rate slot,
//                 random-seed state, plus the model/vocab identity needed to
//                 reload for decoding.

#pragma once

#include <cstdint>
#include <string>

#include "g2s/params.hpp"

namespace g2s {

struct CheckpointMeta {
    std::int64_t step = 0;
    double lr = 0.0;
    std::uint64_t seed_state = 0;
    std::string task;               // amr-gen | nmt | nmt-plus
    std::string model_config_json;  // serialized ModelConfig, opaque here
    std::uint64_t vocab_hash_src = 0;
    std::uint64_t vocab_hash_tgt = 0;
};

void save_checkpoint(const std::string& stem, const ParamStore<float>& params,
                     const CheckpointMeta& meta);

// Loads tensors into a fresh store; meta_out may be null.
ParamStore<float> load_checkpoint(const std::string& stem, CheckpointMeta* meta_out);

}  // namespace g2s
