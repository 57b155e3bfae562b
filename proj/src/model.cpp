#include "g2s/model.hpp"

namespace g2s {

nlohmann::ordered_json ModelConfig::to_json() const {
    nlohmann::ordered_json j;
    j["enc"] = {{"layers", enc.layers},
                {"hidden", enc.hidden},
                {"pos_dim", enc.pos_dim},
                {"edge_types", enc.edge_types}};
    j["dec"] = {{"hidden", dec.hidden}, {"emb_dim", dec.emb_dim}};
    j["src_vocab"] = src_vocab;
    j["tgt_vocab"] = tgt_vocab;
    j["dropout"] = dropout;
    return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    cfg.enc.layers = j.at("enc").at("layers").get<int>();
    cfg.enc.hidden = j.at("enc").at("hidden").get<int>();
    cfg.enc.pos_dim = j.at("enc").at("pos_dim").get<int>();
    cfg.enc.edge_types = j.at("enc").at("edge_types").get<int>();
    cfg.dec.hidden = j.at("dec").at("hidden").get<int>();
    cfg.dec.emb_dim = j.at("dec").at("emb_dim").get<int>();
    cfg.src_vocab = j.at("src_vocab").get<int>();
    cfg.tgt_vocab = j.at("tgt_vocab").get<int>();
    cfg.dropout = j.at("dropout").get<double>();
    return cfg;
}

std::string ggnn_param_name(EdgeType tag, const char* part) {
    return std::string("enc.") + edge_type_name(tag) + "." + part;
}

GraphBatch GraphBatch::build(const std::vector<const LeviGraph*>& graphs,
                             const Vocabulary& src_vocab, int edge_types) {
    if (graphs.empty()) throw ValidationError("empty graph batch");
    GraphBatch b;
    for (const auto* gp : graphs) {
        const LeviGraph& g = *gp;
        if (g.nodes.empty()) throw ValidationError("graph batch contains an empty graph");
        int offset = b.total_nodes;
        int inst = b.batch_size();
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            if (g.nodes[i].id != static_cast<NodeId>(i))
                throw ValidationError("graph node ids must be dense and ordered");
            auto pit = g.positions.find(g.nodes[i].id);
            if (pit == g.positions.end())
                throw ValidationError("missing position for node " +
                                      std::to_string(g.nodes[i].id) +
                                      "; run compute_positions first");
            int pos = pit->second;
            if (pos < 0) throw ValidationError("negative position index");
            b.position_ids.push_back(std::min(pos, kUnreachablePosition));
            b.label_ids.push_back(src_vocab.lookup(g.nodes[i].label));
            b.node_labels.push_back(g.nodes[i].label);
            b.instance_of.push_back(inst);
        }
        for (const auto& e : g.edges) {
            int tag = static_cast<int>(e.tag);
            if (tag >= edge_types)
                throw ValidationError(std::string("graph uses ") + edge_type_name(e.tag) +
                                      " edges but the model is configured for " +
                                      std::to_string(edge_types) + " edge types");
            b.edges[tag].first.push_back(offset + e.src);
            b.edges[tag].second.push_back(offset + e.dst);
        }
        b.total_nodes += static_cast<int>(g.nodes.size());
        b.ranges.emplace_back(offset, b.total_nodes);
    }
    b.in_degree.assign(b.total_nodes, 0);
    for (const auto& [srcs, dsts] : b.edges) {
        (void)srcs;
        for (int d : dsts) b.in_degree[d] += 1;
    }
    return b;
}

std::shared_ptr<const std::vector<std::uint8_t>> GraphBatch::attention_mask() const {
    auto mask = std::make_shared<std::vector<std::uint8_t>>(
        static_cast<std::size_t>(batch_size()) * total_nodes, 0);
    for (int bidx = 0; bidx < batch_size(); ++bidx)
        for (int v = ranges[bidx].first; v < ranges[bidx].second; ++v)
            (*mask)[static_cast<std::size_t>(bidx) * total_nodes + v] = 1;
    return mask;
}

TargetBatch TargetBatch::build(const std::vector<const std::vector<int>*>& targets, int pad_to) {
    if (targets.empty()) throw ValidationError("empty target batch");
    TargetBatch tb;
    tb.batch = static_cast<int>(targets.size());
    int max_len = 0;
    for (const auto* t : targets) {
        if (t->empty()) throw ValidationError("empty target sequence");
        max_len = std::max(max_len, static_cast<int>(t->size()));
    }
    tb.steps = std::max(max_len + 1, pad_to);  // +1 for </s>
    tb.inputs.assign(static_cast<std::size_t>(tb.batch) * tb.steps, Vocabulary::kPad);
    tb.gold.assign(static_cast<std::size_t>(tb.batch) * tb.steps, Vocabulary::kPad);
    tb.mask.assign(static_cast<std::size_t>(tb.batch) * tb.steps, 0);
    for (int b = 0; b < tb.batch; ++b) {
        const auto& t = *targets[static_cast<std::size_t>(b)];
        std::size_t row = static_cast<std::size_t>(b) * tb.steps;
        tb.inputs[row] = Vocabulary::kBos;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (static_cast<int>(i) + 1 < tb.steps) tb.inputs[row + i + 1] = t[i];
            tb.gold[row + i] = t[i];
            tb.mask[row + i] = 1;
        }
        tb.gold[row + t.size()] = Vocabulary::kEos;
        tb.mask[row + t.size()] = 1;
    }
    return tb;
}

}  // namespace g2s
