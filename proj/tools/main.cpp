// g2s - graph-to-sequence toolkit command line.
//
// Subcommands: preprocess, train, translate, evaluate, gradcheck.
// Exit codes: 0 success, 1 validation/input failure, 2 runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "g2s/amr_prep.hpp"
#include "g2s/beam.hpp"
#include "g2s/conll.hpp"
#include "g2s/gradcheck.hpp"
#include "g2s/metrics.hpp"
#include "g2s/model.hpp"
#include "g2s/parallel.hpp"
#include "g2s/trainer.hpp"

namespace fs = std::filesystem;
using namespace g2s;

namespace {

struct TaskDefaults {
    int edge_types;
    int enc_hidden;
    int min_freq_src;
    int min_freq_tgt;
    bool case_sensitive_eval;
};

TaskDefaults defaults_for(const std::string& task) {
    if (task == "amr-gen") return {3, 576, 2, 2, false};
    if (task == "nmt") return {3, 512, 2, 1, true};
    if (task == "nmt-plus") return {5, 448, 2, 1, true};
    throw ValidationError("unknown task '" + task + "' (expected amr-gen, nmt or nmt-plus)");
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::vector<LeviGraph> read_graphs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return read_levi_jsonl(in);
}

// ------------------------------------------------------------- preprocess

struct PreprocessArgs {
    std::string task = "amr-gen";
    std::string input;
    std::string target_file;  // nmt only; copied through
    std::string out_prefix;
    bool strict = false;
};

int run_preprocess(const PreprocessArgs& args) {
    std::ifstream in(args.input);
    if (!in) throw Error("cannot open " + args.input);
    std::ofstream graphs_out(args.out_prefix + ".graphs.jsonl", std::ios::trunc);
    if (!graphs_out) throw Error("cannot write " + args.out_prefix + ".graphs.jsonl");

    std::size_t ok = 0, failed = 0, total_nodes = 0, total_edges = 0;
    std::map<int, std::size_t> position_histogram;

    auto note_graph = [&](const LeviGraph& g) {
        total_nodes += g.nodes.size();
        total_edges += g.edges.size();
        for (const auto& [id, p] : g.positions) {
            (void)id;
            ++position_histogram[p];
        }
        graphs_out << to_json_line(g) << "\n";
        ++ok;
    };

    if (args.task == "amr-gen") {
        std::ofstream map_out(args.out_prefix + ".map.jsonl", std::ios::trunc);
        std::ofstream tgt_out(args.out_prefix + ".targets.txt", std::ios::trunc);
        auto instances = read_amr_corpus(in);
        for (std::size_t i = 0; i < instances.size(); ++i) {
            try {
                AmrGraph g = simplify(parse_penman(instances[i].penman));
                AlignmentTable align;
                if (!instances[i].alignment_json.empty())
                    align = alignment_from_json_line(g, instances[i].alignment_json);
                auto anon = anonymize(g, align, instances[i].tokens);
                for (const auto& w : anon.warnings)
                    std::cerr << "g2s: instance " << i + 1 << ": " << w << "\n";
                LeviGraph levi = augment(to_levi(anon.graph.to_labeled()));
                compute_positions(levi);
                note_graph(levi);
                map_out << anon.map.to_json_line() << "\n";
                std::ostringstream line;
                for (std::size_t t = 0; t < anon.surface.size(); ++t)
                    line << (t ? " " : "") << anon.surface[t];
                tgt_out << line.str() << "\n";
            } catch (const Error& e) {
                ++failed;
                std::cerr << "g2s: instance " << i + 1 << ": " << e.what() << "\n";
                if (args.strict) throw ValidationError("strict mode: preprocessing failed");
            }
        }
    } else {
        bool sequential = args.task == "nmt-plus";
        auto sentences = read_conll(in);
        for (std::size_t i = 0; i < sentences.size(); ++i) {
            try {
                note_graph(build_nmt_graph(sentences[i], sequential));
            } catch (const Error& e) {
                ++failed;
                std::cerr << "g2s: sentence " << i + 1 << ": " << e.what() << "\n";
                if (args.strict) throw ValidationError("strict mode: preprocessing failed");
            }
        }
        if (!args.target_file.empty()) {
            auto targets = read_lines(args.target_file);
            std::ofstream tgt_out(args.out_prefix + ".targets.txt", std::ios::trunc);
            for (const auto& line : targets) tgt_out << line << "\n";
        }
    }

    nlohmann::ordered_json stats;
    stats["instances"] = ok;
    stats["failed"] = failed;
    stats["nodes"] = total_nodes;
    stats["edges"] = total_edges;
    stats["positions"] = nlohmann::ordered_json::object();
    for (const auto& [p, count] : position_histogram)
        stats["positions"][std::to_string(p)] = count;
    std::cout << stats.dump() << "\n";
    return failed > 0 && args.strict ? 1 : 0;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
    std::string task = "amr-gen";
    std::string train_graphs, train_targets, dev_graphs, dev_targets;
    std::string out_dir = "run";
    int layers = 8;
    int hidden = 0;     // 0 = task default
    int pos_dim = 64;
    int batch_size = 16;
    int bucket_size = 10;
    double lr = 3e-4;
    double dropout = 0.5;
    double clip = 1.0;
    int lr_patience = 3;
    int stop_patience = 8;
    int max_checkpoints = 30;
    int max_target_len = 200;
    std::uint64_t seed = 1;
};

std::vector<Instance> pair_up(const std::vector<LeviGraph>& graphs,
                              const std::vector<std::string>& target_lines,
                              const Vocabulary& tgt_vocab) {
    if (graphs.size() != target_lines.size())
        throw ValidationError("graph/target count mismatch: " + std::to_string(graphs.size()) +
                              " vs " + std::to_string(target_lines.size()));
    std::vector<Instance> out;
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        Instance inst;
        inst.graph = graphs[i];
        inst.target_ids = tgt_vocab.encode(whitespace_tokens(target_lines[i]));
        out.push_back(std::move(inst));
    }
    return out;
}

int run_train(const TrainArgs& args) {
    TaskDefaults task = defaults_for(args.task);
    auto train_graphs = read_graphs(args.train_graphs);
    auto train_targets = read_lines(args.train_targets);

    std::vector<std::vector<std::string>> src_corpus, tgt_corpus;
    for (const auto& g : train_graphs) {
        std::vector<std::string> labels;
        for (const auto& n : g.nodes) labels.push_back(n.label);
        src_corpus.push_back(std::move(labels));
    }
    for (const auto& line : train_targets) tgt_corpus.push_back(whitespace_tokens(line));
    Vocabulary src_vocab = Vocabulary::build(src_corpus, task.min_freq_src);
    Vocabulary tgt_vocab = Vocabulary::build(tgt_corpus, task.min_freq_tgt);

    ModelConfig mcfg;
    mcfg.enc.layers = args.layers;
    mcfg.enc.hidden = args.hidden > 0 ? args.hidden : task.enc_hidden;
    mcfg.enc.pos_dim = args.pos_dim;
    mcfg.enc.edge_types = task.edge_types;
    mcfg.src_vocab = src_vocab.size();
    mcfg.tgt_vocab = tgt_vocab.size();
    mcfg.dropout = args.dropout;
    mcfg.enc.validate();

    TrainConfig tcfg;
    tcfg.batch_size = args.batch_size;
    tcfg.bucket_size = args.bucket_size;
    tcfg.initial_lr = args.lr;
    tcfg.lr_halve_patience = args.lr_patience;
    tcfg.early_stop_patience = args.stop_patience;
    tcfg.max_checkpoints = args.max_checkpoints;
    tcfg.clip_norm = args.clip;
    tcfg.dropout = args.dropout;
    tcfg.max_target_len = args.max_target_len;
    tcfg.seed = args.seed;

    std::vector<Instance> train_set = pair_up(train_graphs, train_targets, tgt_vocab);
    std::vector<Instance> dev_set;
    if (!args.dev_graphs.empty())
        dev_set = pair_up(read_graphs(args.dev_graphs), read_lines(args.dev_targets), tgt_vocab);

    fs::create_directories(args.out_dir);
    src_vocab.save_file((fs::path(args.out_dir) / "vocab.src").string());
    tgt_vocab.save_file((fs::path(args.out_dir) / "vocab.tgt").string());

    CheckpointMeta meta;
    meta.task = args.task;
    meta.vocab_hash_src = src_vocab.hash();
    meta.vocab_hash_tgt = tgt_vocab.hash();

    // run header: every effective setting, for auditability
    nlohmann::ordered_json header;
    header["task"] = args.task;
    header["model"] = mcfg.to_json();
    header["train"] = {{"batch_size", tcfg.batch_size},
                       {"bucket_size", tcfg.bucket_size},
                       {"initial_lr", tcfg.initial_lr},
                       {"lr_halve_patience", tcfg.lr_halve_patience},
                       {"early_stop_patience", tcfg.early_stop_patience},
                       {"max_checkpoints", tcfg.max_checkpoints},
                       {"clip_norm", tcfg.clip_norm},
                       {"dropout", tcfg.dropout},
                       {"max_target_len", tcfg.max_target_len},
                       {"seed", tcfg.seed}};
    header["train_instances"] = train_set.size();
    header["dev_instances"] = dev_set.size();
    std::cout << header.dump() << std::endl;

    Trainer trainer(mcfg, tcfg, src_vocab, std::move(train_set), std::move(dev_set), args.out_dir,
                    meta);
    TrainSummary summary = trainer.run();
    nlohmann::ordered_json result;
    result["checkpoints"] = summary.history.size();
    result["best_checkpoint"] = summary.best_checkpoint;
    result["best_dev_perplexity"] = summary.best_perplexity;
    std::cout << result.dump() << std::endl;
    return 0;
}

// -------------------------------------------------------------- translate

struct TranslateArgs {
    std::vector<std::string> checkpoints;
    std::string input;
    std::string output;
    std::string map_file;
    std::string src_vocab_path, tgt_vocab_path;
    int beam = 5;
    int max_len = 0;  // 0 = 2*nodes+10 capped at 200
    bool no_unk_replace = false;
    bool trace = false;
};

int run_translate(const TranslateArgs& args) {
    if (args.checkpoints.empty()) throw ValidationError("need at least one --checkpoint");
    std::vector<ParamStore<float>> stores;
    CheckpointMeta first_meta;
    for (std::size_t i = 0; i < args.checkpoints.size(); ++i) {
        CheckpointMeta meta;
        stores.push_back(load_checkpoint(args.checkpoints[i], &meta));
        if (i == 0) {
            first_meta = meta;
        } else if (meta.vocab_hash_src != first_meta.vocab_hash_src ||
                   meta.vocab_hash_tgt != first_meta.vocab_hash_tgt) {
            throw ValidationError("incompatible checkpoints: vocabulary hash mismatch between " +
                                  args.checkpoints[0] + " and " + args.checkpoints[i]);
        }
    }
    if (first_meta.model_config_json.empty())
        throw ValidationError("checkpoint manifest lacks the model section");
    ModelConfig cfg = ModelConfig::from_json(nlohmann::json::parse(first_meta.model_config_json));

    fs::path ckpt_dir = fs::path(args.checkpoints[0]).parent_path();
    std::string src_vocab_path =
        args.src_vocab_path.empty() ? (ckpt_dir / "vocab.src").string() : args.src_vocab_path;
    std::string tgt_vocab_path =
        args.tgt_vocab_path.empty() ? (ckpt_dir / "vocab.tgt").string() : args.tgt_vocab_path;
    Vocabulary src_vocab = Vocabulary::load_file(src_vocab_path);
    Vocabulary tgt_vocab = Vocabulary::load_file(tgt_vocab_path);
    if (src_vocab.hash() != first_meta.vocab_hash_src ||
        tgt_vocab.hash() != first_meta.vocab_hash_tgt)
        throw ValidationError("vocabulary files do not match the checkpoint hashes");

    auto graphs = read_graphs(args.input);
    std::vector<AnonymizationMap> maps;
    if (!args.map_file.empty()) {
        for (const auto& line : read_lines(args.map_file))
            maps.push_back(AnonymizationMap::from_json_line(line));
        if (maps.size() != graphs.size())
            throw ValidationError("map/graph count mismatch");
    }

    std::ofstream out(args.output, std::ios::trunc);
    if (!out) throw Error("cannot write " + args.output);
    std::ofstream trace;
    if (args.trace) trace.open(args.output + ".trace.jsonl", std::ios::trunc);

    std::vector<const ParamStore<float>*> store_ptrs;
    for (const auto& s : stores) store_ptrs.push_back(&s);
    bool unk_replace = first_meta.task == "amr-gen" && !args.no_unk_replace;

    std::size_t unfinished = 0;
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        ModelSession session(cfg, store_ptrs, graphs[i], src_vocab);
        int max_len = args.max_len > 0 ? args.max_len : default_max_len(graphs[i]);
        DecodeResult res = beam_search(session, args.beam, max_len);
        if (!res.finished_within_limit) {
            ++unfinished;
            std::cerr << "g2s: sentence " << i + 1 << ": no hypothesis finished within "
                      << max_len << " steps; emitting best unfinished\n";
        }
        std::vector<std::string> words;
        if (unk_replace)
            words = replace_unk(res.best.tokens, res.best.attention_argmax,
                                session.node_labels(), tgt_vocab);
        else
            words = tgt_vocab.decode(res.best.tokens);
        if (!maps.empty()) words = deanonymize(words, maps[i]);
        std::ostringstream line;
        for (std::size_t t = 0; t < words.size(); ++t) line << (t ? " " : "") << words[t];
        out << line.str() << "\n";
        if (args.trace) {
            nlohmann::ordered_json tj;
            tj["tokens"] = words;
            tj["score"] = res.best.score;
            tj["normalized"] = res.best.normalized();
            tj["finished"] = res.finished_within_limit;
            tj["attention_argmax"] = res.best.attention_argmax;
            trace << tj.dump() << "\n";
        }
    }
    std::cerr << "g2s: decoded " << graphs.size() << " sentences (" << unfinished
              << " unfinished)\n";
    return 0;
}

// --------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string hyp, ref, compare;
    std::string task = "amr-gen";
    std::string out;
    int bootstrap_samples = 1000;
    std::uint64_t seed = 1;
};

int run_evaluate(const EvaluateArgs& args) {
    EvalConfig cfg;
    cfg.case_sensitive = defaults_for(args.task).case_sensitive_eval;
    cfg.bootstrap_samples = args.bootstrap_samples;
    auto hyps = read_lines(args.hyp);
    auto refs = read_lines(args.ref);
    if (hyps.size() != refs.size())
        throw ValidationError("hypothesis/reference length mismatch: " +
                              std::to_string(hyps.size()) + " vs " + std::to_string(refs.size()));

    nlohmann::ordered_json report;
    report["config"] = {{"case_sensitive", cfg.case_sensitive},
                        {"bleu_max_order", cfg.bleu_max_order},
                        {"chrf_char_order", cfg.chrf_char_order},
                        {"chrf_word_order", cfg.chrf_word_order},
                        {"chrf_beta", cfg.chrf_beta},
                        {"bootstrap_samples", cfg.bootstrap_samples},
                        {"seed", args.seed}};
    auto system_block = [&](const std::vector<std::string>& sys) {
        nlohmann::ordered_json j;
        BleuResult b = bleu(sys, refs, cfg);
        j["bleu"] = b.score;
        j["brevity_penalty"] = b.brevity_penalty;
        double chrf_sum = 0;
        for (std::size_t i = 0; i < sys.size(); ++i) chrf_sum += chrf_pp(sys[i], refs[i], cfg);
        j["chrf_pp"] = chrf_sum / static_cast<double>(sys.size());
        return j;
    };
    report["system"] = system_block(hyps);

    if (!args.compare.empty()) {
        auto other = read_lines(args.compare);
        if (other.size() != refs.size())
            throw ValidationError("comparison system length mismatch");
        report["compare"] = system_block(other);
        report["bootstrap_p_a_beats_b"] =
            bootstrap_significance(hyps, other, refs, cfg, args.seed);
        std::vector<double> chrf_a, chrf_b;
        for (std::size_t i = 0; i < hyps.size(); ++i) {
            chrf_a.push_back(chrf_pp(hyps[i], refs[i], cfg));
            chrf_b.push_back(chrf_pp(other[i], refs[i], cfg));
        }
        auto w = wilcoxon_signed_rank(chrf_a, chrf_b);
        report["wilcoxon"] = {{"statistic", w.statistic}, {"p_value", w.p_value}, {"n", w.n}};
    }

    std::string text = report.dump(2);
    if (!args.out.empty()) {
        std::ofstream out(args.out, std::ios::trunc);
        out << text << "\n";
    }
    std::cout << text << std::endl;
    return 0;
}

// --------------------------------------------------------------- gradcheck

struct GradcheckArgs {
    int bits = 32;
    std::string inject_bug;
};

int run_gradcheck(const GradcheckArgs& args) {
    double primitive_threshold = args.bits == 64 ? 1e-6 : 1e-3;
    double model_threshold = args.bits == 64 ? 1e-4 : 1e-2;
    bool all_ok = true;

    auto report_line = [&](const std::string& name, double err, double threshold) {
        bool ok = err < threshold;
        all_ok = all_ok && ok;
        std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "  max_rel_err " << err
                  << "  threshold " << threshold << "\n";
    };

    // The checks themselves always run in 64-bit arithmetic; --bits selects
    // the tolerance regime being certified.
    Rng rng(27182);
    auto rnd = [&](std::vector<std::size_t> shape) {
        auto t = Tensor<double>::zeros(shape);
        for (auto& v : t.data) v = rng.uniform(-0.7, 0.7);
        return t;
    };
    const std::string& bug = args.inject_bug;

    {
        ParamStore<double> p;
        p.add("a", rnd({4, 5}));
        p.add("b", rnd({5, 3}));
        auto r = finite_difference_check(p, [&](Tape<double>& t, ParamVars<double>& v) {
            if (!bug.empty()) t.inject_bug(bug);
            return reduce_sum(t, matmul(t, v("a"), v("b")));
        });
        report_line("matmul", r.max_rel_err, primitive_threshold);
    }
    {
        ParamStore<double> p;
        p.add("x", rnd({4, 4}));
        for (const char* op : {"sigmoid", "tanh"}) {
            auto r = finite_difference_check(p, [&](Tape<double>& t, ParamVars<double>& v) {
                if (!bug.empty()) t.inject_bug(bug);
                Var y = std::string(op) == "sigmoid" ? sigmoid(t, v("x")) : tanh_op(t, v("x"));
                return reduce_sum(t, mul(t, y, y));
            });
            report_line(op, r.max_rel_err, primitive_threshold);
        }
    }
    {
        ParamStore<double> p;
        p.add("x", rnd({3, 6}));
        auto mask = std::make_shared<const std::vector<std::uint8_t>>(
            std::vector<std::uint8_t>{1, 1, 0, 1, 1, 1, 1, 0, 1, 1, 1, 1, 0, 1, 1, 1, 1, 1});
        auto probe = rnd({3, 6});
        auto r = finite_difference_check(p, [&](Tape<double>& t, ParamVars<double>& v) {
            if (!bug.empty()) t.inject_bug(bug);
            return reduce_sum(t, mul(t, masked_softmax(t, v("x"), mask), t.constant(probe)));
        });
        report_line("masked_softmax", r.max_rel_err, primitive_threshold);
    }
    {
        ParamStore<double> p;
        p.add("logits", rnd({4, 6}));
        auto r = finite_difference_check(p, [&](Tape<double>& t, ParamVars<double>& v) {
            if (!bug.empty()) t.inject_bug(bug);
            return cross_entropy(t, v("logits"), {1, 5, 0, 3}, {1, 1, 0, 1});
        });
        report_line("cross_entropy", r.max_rel_err, primitive_threshold);
    }
    {
        ParamStore<double> p;
        p.add("table", rnd({7, 4}));
        p.add("x", rnd({5, 4}));
        auto r = finite_difference_check(p, [&](Tape<double>& t, ParamVars<double>& v) {
            if (!bug.empty()) t.inject_bug(bug);
            Var e = embedding_lookup(t, v("table"), {0, 2, 2, 6, 1});
            Var s = edge_accumulate(t, mul(t, e, v("x")), {0, 1, 2, 3, 4}, {1, 0, 1, 2, 0}, 3);
            return reduce_sum(t, mul(t, s, s));
        });
        report_line("embedding/edge_accumulate", r.max_rel_err, primitive_threshold);
    }
    {
        ParamStore<double> p;
        p.add("a", rnd({3, 4}));
        p.add("b", rnd({3, 2}));
        p.add("bias", rnd({6}));
        auto r = finite_difference_check(p, [&](Tape<double>& t, ParamVars<double>& v) {
            if (!bug.empty()) t.inject_bug(bug);
            Var c = concat_cols(t, v("a"), v("b"));
            Var d = add_row(t, c, v("bias"));
            Var s = slice_cols(t, d, 1, 5);
            Var dr = [&] {
                Rng drop(7);
                return dropout(t, s, 0.5, true, drop);
            }();
            return reduce_sum(t, mul(t, dr, dr));
        });
        report_line("concat/slice/dropout", r.max_rel_err, primitive_threshold);
    }

    // Full micro model: 3-node graph, 4-token target, 8 tied layers.
    {
        ModelConfig cfg;
        cfg.enc.layers = 8;
        cfg.enc.hidden = 6;
        cfg.enc.pos_dim = 2;
        cfg.enc.edge_types = 3;
        cfg.dec.hidden = 5;
        cfg.dec.emb_dim = 4;
        cfg.src_vocab = 16;
        cfg.tgt_vocab = 7;
        cfg.dropout = 0.0;
        Graph2Seq<double> model(cfg);
        ParamStore<double> store;
        Rng prng(31415);
        model.register_params(store, prng);
        Rng fill(141);
        for (const auto& name : store.order)
            if (store.get(name).shape.size() == 1)
                for (auto& v : store.get(name).data) v = fill.uniform(-0.1, 0.1);

        LabeledGraph lg;
        lg.nodes = {{0, "w0"}, {1, "w1"}, {2, "w2"}};
        lg.edges = {{0, 1, "r0"}, {0, 2, "r1"}};
        lg.root = 0;
        LeviGraph levi = augment(to_levi(lg));
        compute_positions(levi);
        std::vector<std::vector<std::string>> corpus{
            {"w0", "w1", "w2", "w3", "w4", "r0", "r1", "r2", "ROOT"}};
        Vocabulary vocab = Vocabulary::build(corpus, 1);
        GraphBatch batch = GraphBatch::build_one(levi, vocab, 3);
        std::vector<int> target{4, 6, 5, 4};

        auto r = finite_difference_check(
            store,
            [&](Tape<double>& t, ParamVars<double>& v) {
                if (!bug.empty()) t.inject_bug(bug);
                TargetBatch tb = TargetBatch::build({&target});
                return model.sequence_loss(t, v, batch, tb, false, nullptr).loss;
            },
            1e-5, 40, 653);
        report_line("full-model (encode->decode->loss)", r.max_rel_err, model_threshold);
    }

    std::cout << (all_ok ? "gradcheck: all checks passed" : "gradcheck: FAILURES detected")
              << std::endl;
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph-to-sequence learning toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    // one config file for everything; keys live in a section per subcommand,
    // e.g.  [train]\nlayers=8  -- explicit flags win over file values
    app.set_config("--config");
    int threads = 0;
    app.add_option("--threads", threads, "worker thread cap (0 = hardware)");

    PreprocessArgs pre;
    auto* cmd_pre = app.add_subcommand("preprocess", "build input graphs from AMR or CoNLL text");
    cmd_pre->add_option("--task", pre.task, "amr-gen | nmt | nmt-plus")->capture_default_str();
    cmd_pre->add_option("--input", pre.input, "AMR corpus or CoNLL file")->required();
    cmd_pre->add_option("--target", pre.target_file, "target sentences (nmt, copied through)");
    cmd_pre->add_option("--out", pre.out_prefix, "output prefix")->required();
    cmd_pre->add_flag("--strict", pre.strict, "fail on the first malformed instance");

    TrainArgs tr;
    auto* cmd_tr = app.add_subcommand("train", "train a model");
    cmd_tr->add_option("--task", tr.task)->capture_default_str();
    cmd_tr->add_option("--train-graphs", tr.train_graphs)->required();
    cmd_tr->add_option("--train-targets", tr.train_targets)->required();
    cmd_tr->add_option("--dev-graphs", tr.dev_graphs);
    cmd_tr->add_option("--dev-targets", tr.dev_targets);
    cmd_tr->add_option("--out", tr.out_dir)->capture_default_str();
    cmd_tr->add_option("--layers", tr.layers)->capture_default_str();
    cmd_tr->add_option("--hidden", tr.hidden, "encoder width (0 = task default)");
    cmd_tr->add_option("--pos-dim", tr.pos_dim)->capture_default_str();
    cmd_tr->add_option("--batch-size", tr.batch_size)->capture_default_str();
    cmd_tr->add_option("--bucket-size", tr.bucket_size)->capture_default_str();
    cmd_tr->add_option("--lr", tr.lr)->capture_default_str();
    cmd_tr->add_option("--dropout", tr.dropout)->capture_default_str();
    cmd_tr->add_option("--clip", tr.clip)->capture_default_str();
    cmd_tr->add_option("--lr-patience", tr.lr_patience)->capture_default_str();
    cmd_tr->add_option("--stop-patience", tr.stop_patience)->capture_default_str();
    cmd_tr->add_option("--max-checkpoints", tr.max_checkpoints)->capture_default_str();
    cmd_tr->add_option("--max-target-len", tr.max_target_len)->capture_default_str();
    cmd_tr->add_option("--seed", tr.seed)->capture_default_str();

    TranslateArgs ts;
    auto* cmd_ts = app.add_subcommand("translate", "decode test graphs with beam search");
    cmd_ts->add_option("--checkpoint", ts.checkpoints, "checkpoint stem (repeat to ensemble)")
        ->required();
    cmd_ts->add_option("--input", ts.input, "graphs JSONL")->required();
    cmd_ts->add_option("--output", ts.output, "hypothesis file")->required();
    cmd_ts->add_option("--map", ts.map_file, "anonymization maps for deanonymisation");
    cmd_ts->add_option("--src-vocab", ts.src_vocab_path);
    cmd_ts->add_option("--tgt-vocab", ts.tgt_vocab_path);
    cmd_ts->add_option("--beam", ts.beam)->capture_default_str();
    cmd_ts->add_option("--max-len", ts.max_len, "0 = 2*nodes+10, capped at 200");
    cmd_ts->add_flag("--no-unk-replace", ts.no_unk_replace);
    cmd_ts->add_flag("--trace", ts.trace, "write a JSONL decode trace");

    EvaluateArgs ev;
    auto* cmd_ev = app.add_subcommand("evaluate", "score hypotheses with BLEU and chrF++");
    cmd_ev->add_option("--hyp", ev.hyp)->required();
    cmd_ev->add_option("--ref", ev.ref)->required();
    cmd_ev->add_option("--task", ev.task, "controls casing")->capture_default_str();
    cmd_ev->add_option("--compare", ev.compare, "second system: adds bootstrap + Wilcoxon");
    cmd_ev->add_option("--out", ev.out, "also write the JSON report here");
    cmd_ev->add_option("--samples", ev.bootstrap_samples)->capture_default_str();
    cmd_ev->add_option("--seed", ev.seed)->capture_default_str();

    GradcheckArgs gc;
    auto* cmd_gc = app.add_subcommand("gradcheck", "finite-difference verification harness");
    cmd_gc->add_option("--bits", gc.bits, "32 or 64: tolerance regime")->capture_default_str();
    cmd_gc->add_option("--inject-bug", gc.inject_bug, "op name for the negative control");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (threads > 0) Parallel::set_threads(threads);
        if (cmd_pre->parsed()) return run_preprocess(pre);
        if (cmd_tr->parsed()) return run_train(tr);
        if (cmd_ts->parsed()) return run_translate(ts);
        if (cmd_ev->parsed()) return run_evaluate(ev);
        if (cmd_gc->parsed()) return run_gradcheck(gc);
    } catch (const ParseError& e) {
        std::cerr << "g2s: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "g2s: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "g2s: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
