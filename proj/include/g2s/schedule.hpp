// schedule.hpp - training configuration and the optimization schedule.
//
// The schedule is a pure state machine over the dev-perplexity series so it
// can be unit-tested without a model: strict improvement resets both
// patience counters, halving has its own counter that resets after firing,
// early stop fires after `stop_patience` consecutive non-improvements or at
// the checkpoint cap.

#pragma once

#include <cstdint>
#include <limits>
#include <string>

#include "g2s/error.hpp"

namespace g2s {

struct TrainConfig {
    int batch_size = 16;
    int bucket_size = 10;
    double initial_lr = 3e-4;
    int lr_halve_patience = 3;
    int early_stop_patience = 8;
    int max_checkpoints = 30;
    double clip_norm = 1.0;
    double dropout = 0.5;
    int max_target_len = 200;
    int min_freq_src = 2;
    int min_freq_tgt = 2;
    std::uint64_t seed = 1;

    void validate() const {
        if (batch_size < 1 || bucket_size < 1 || max_checkpoints < 1)
            throw ValidationError("train config: sizes must be positive");
        if (initial_lr <= 0 || clip_norm <= 0)
            throw ValidationError("train config: rates must be positive");
        if (lr_halve_patience < 1 || early_stop_patience < 1)
            throw ValidationError("train config: patience (in checkpoints) must be positive");
    }
};

class LrSchedule {
public:
    LrSchedule(double initial_lr, int halve_patience, int stop_patience, int max_checkpoints)
        : lr_(initial_lr),
          halve_patience_(halve_patience),
          stop_patience_(stop_patience),
          max_checkpoints_(max_checkpoints) {}

    struct Decision {
        int checkpoint;
        bool improved;
        bool halved;
        bool stop;
        double lr;
    };

    // Call once per checkpoint with the dev perplexity.
    Decision observe(double dev_perplexity) {
        ++checkpoint_;
        Decision d{checkpoint_, false, false, false, lr_};
        if (dev_perplexity < best_) {  // ties are non-improvements
            best_ = dev_perplexity;
            best_checkpoint_ = checkpoint_;
            halve_streak_ = 0;
            stop_streak_ = 0;
            d.improved = true;
        } else {
            ++halve_streak_;
            ++stop_streak_;
            if (halve_streak_ >= halve_patience_) {
                lr_ /= 2.0;
                halve_streak_ = 0;
                d.halved = true;
            }
        }
        d.lr = lr_;
        d.stop = stop_streak_ >= stop_patience_ || checkpoint_ >= max_checkpoints_;
        return d;
    }

    double lr() const { return lr_; }
    double best() const { return best_; }
    int best_checkpoint() const { return best_checkpoint_; }
    int checkpoint() const { return checkpoint_; }

private:
    double lr_;
    int halve_patience_;
    int stop_patience_;
    int max_checkpoints_;
    double best_ = std::numeric_limits<double>::infinity();
    int best_checkpoint_ = 0;
    int checkpoint_ = 0;
    int halve_streak_ = 0;
    int stop_streak_ = 0;
};

}  // namespace g2s
