// trainer.hpp - the optimization loop: bucketed batches, Adam with gradient
// clipping, per-epoch checkpoints, dev-perplexity schedule and early stopping.

#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "g2s/batch.hpp"
#include "g2s/checkpoint.hpp"
#include "g2s/model.hpp"
#include "g2s/schedule.hpp"

namespace g2s {

inline std::string checkpoint_stem(int index) {
    std::ostringstream os;
    os << "params." << std::setfill('0') << std::setw(5) << index;
    return os.str();
}

struct EpochRecord {
    int checkpoint;
    double train_loss;
    double dev_perplexity;
    double lr;
    double wall_time;
};

struct TrainSummary {
    std::vector<EpochRecord> history;
    std::string best_stem;
    int best_checkpoint = 0;
    double best_perplexity = 0;
};

class Trainer {
public:
    Trainer(ModelConfig mcfg, TrainConfig tcfg, Vocabulary src_vocab,
            std::vector<Instance> train_set, std::vector<Instance> dev_set, std::string out_dir,
            CheckpointMeta meta_template)
        : model_(mcfg),
          cfg_(tcfg),
          src_vocab_(std::move(src_vocab)),
          train_(std::move(train_set)),
          dev_(std::move(dev_set)),
          out_dir_(std::move(out_dir)),
          meta_(std::move(meta_template)),
          dropout_rng_(Rng(tcfg.seed).fork(0xd709)) {
        cfg_.validate();
        mcfg.enc.validate();
        if (train_.empty()) throw ValidationError("training set is empty");
        Rng init_rng = Rng(cfg_.seed).fork(0x1a17);
        model_.register_params(params_, init_rng);
        adam_.lr = cfg_.initial_lr;
        std::filesystem::create_directories(out_dir_);
        meta_.model_config_json = model_.config().to_json().dump();
    }

    const Graph2Seq<float>& model() const { return model_; }
    ParamStore<float>& params() { return params_; }
    double lr() const { return adam_.lr; }
    void set_lr(double lr) { adam_.lr = lr; }

    // One full pass over the training set; returns mean loss per target token.
    double run_epoch(int epoch) {
        BatchPlan plan = make_batches(train_, cfg_, 0, epoch, true);
        if (plan.batches.empty()) throw ValidationError("no trainable batches");
        if (epoch == 1 && plan.dropped > 0)
            std::cerr << "g2s: dropped " << plan.dropped << " instances over the target-length"
                      << " limit of " << cfg_.max_target_len << "\n";
        double loss_sum = 0;
        std::size_t token_sum = 0;
        for (std::size_t bi = 0; bi < plan.batches.size(); ++bi) {
            const auto& idxs = plan.batches[bi];
            auto [gb, tb] = assemble(train_, idxs, plan.target_bounds[bi]);
            Tape<float> tape;
            ParamVars<float> pv{&tape, &params_, {}};
            auto res = model_.sequence_loss(tape, pv, gb, tb, true, &dropout_rng_);
            if (!std::isfinite(res.value))
                throw TrainingError(diagnose("non-finite loss", idxs, 0.0));
            tape.backward(res.loss);
            GradMap<float> grads;
            for (const auto& name : params_.order) {
                auto it = pv.bound.find(name);
                if (it != pv.bound.end())
                    grads.emplace(name, tape.grad(it->second));
                else
                    grads.emplace(name, Tensor<float>::zeros(params_.get(name).shape));
            }
            double norm = clip_global_norm(params_.order, grads, cfg_.clip_norm);
            if (!std::isfinite(norm))
                throw TrainingError(diagnose("non-finite gradient norm", idxs, norm));
            adam_step(params_, grads, adam_);
            loss_sum += res.value * static_cast<double>(res.tokens);
            token_sum += res.tokens;
        }
        return loss_sum / static_cast<double>(token_sum);
    }

    // Teacher-forced perplexity with dropout disabled.
    double perplexity(const std::vector<Instance>& data) {
        BatchPlan plan = make_batches(data, cfg_, 0, 0, false);
        double loss_sum = 0;
        std::size_t token_sum = 0;
        for (std::size_t bi = 0; bi < plan.batches.size(); ++bi) {
            auto [gb, tb] = assemble(data, plan.batches[bi], plan.target_bounds[bi]);
            Tape<float> tape;
            ParamVars<float> pv{&tape, &params_, {}};
            auto res = model_.sequence_loss(tape, pv, gb, tb, false, nullptr);
            loss_sum += res.value * static_cast<double>(res.tokens);
            token_sum += res.tokens;
        }
        if (token_sum == 0) throw ValidationError("perplexity: no tokens");
        return std::exp(loss_sum / static_cast<double>(token_sum));
    }

    std::string save_checkpoint(int index) {
        std::string stem = (std::filesystem::path(out_dir_) / checkpoint_stem(index)).string();
        CheckpointMeta meta = meta_;
        meta.step = adam_.step;
        meta.lr = adam_.lr;
        meta.seed_state = dropout_rng_.state();
        g2s::save_checkpoint(stem, params_, meta);
        return stem;
    }

    // The complete schedule: per-epoch checkpoints, halving on 3 stale
    // checkpoints, stop after 8 stale or at the checkpoint cap.
    TrainSummary run() {
        TrainSummary summary;
        LrSchedule schedule(cfg_.initial_lr, cfg_.lr_halve_patience, cfg_.early_stop_patience,
                            cfg_.max_checkpoints);
        std::ofstream log(std::filesystem::path(out_dir_) / "metrics.jsonl", std::ios::trunc);
        auto t0 = std::chrono::steady_clock::now();
        const std::vector<Instance>& dev = dev_.empty() ? train_ : dev_;
        for (int epoch = 1; epoch <= cfg_.max_checkpoints; ++epoch) {
            double train_loss = run_epoch(epoch);
            double dev_ppl = perplexity(dev);
            save_checkpoint(epoch);
            auto decision = schedule.observe(dev_ppl);
            adam_.lr = decision.lr;
            double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                              .count();
            summary.history.push_back({epoch, train_loss, dev_ppl, adam_.lr, wall});
            log << "{\"checkpoint\":" << epoch << ",\"train_loss\":" << train_loss
                << ",\"dev_perplexity\":" << dev_ppl << ",\"lr\":" << adam_.lr
                << ",\"wall_time\":" << wall << "}\n";
            log.flush();
            if (decision.stop) break;
        }
        summary.best_checkpoint = schedule.best_checkpoint();
        summary.best_perplexity = schedule.best();
        summary.best_stem = checkpoint_stem(summary.best_checkpoint);
        mark_best(summary.best_stem);
        return summary;
    }

    std::pair<GraphBatch, TargetBatch> assemble(const std::vector<Instance>& data,
                                                const std::vector<std::size_t>& idxs,
                                                int target_bound) const {
        std::vector<const LeviGraph*> graphs;
        std::vector<const std::vector<int>*> targets;
        for (std::size_t i : idxs) {
            graphs.push_back(&data[i].graph);
            targets.push_back(&data[i].target_ids);
        }
        return {GraphBatch::build(graphs, src_vocab_, model_.config().enc.edge_types),
                TargetBatch::build(targets, target_bound + 1)};
    }

private:
    std::string diagnose(const char* what, const std::vector<std::size_t>& idxs,
                         double norm) const {
        std::ostringstream os;
        os << what << " at adam step " << adam_.step + 1 << "; batch instances [";
        for (std::size_t i = 0; i < idxs.size(); ++i) os << (i ? "," : "") << idxs[i];
        os << "]; last gradient norm " << norm;
        return os.str();
    }

    void mark_best(const std::string& stem) const {
        std::ofstream marker(std::filesystem::path(out_dir_) / "best", std::ios::trunc);
        marker << stem << "\n";
        for (const char* ext : {".bin", ".json"}) {
            std::filesystem::path link = std::filesystem::path(out_dir_) / ("params.best" + std::string(ext));
            std::error_code ec;
            std::filesystem::remove(link, ec);
            std::filesystem::create_symlink(stem + ext, link, ec);
            // best marker file above is the portable record if symlinks fail
        }
    }

    Graph2Seq<float> model_;
    TrainConfig cfg_;
    Vocabulary src_vocab_;
    std::vector<Instance> train_;
    std::vector<Instance> dev_;
    std::string out_dir_;
    CheckpointMeta meta_;
    ParamStore<float> params_;
    AdamState<float> adam_;
    Rng dropout_rng_;
};

}  // namespace g2s
