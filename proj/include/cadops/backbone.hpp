#pragma once

#include <array>
#include <string>
#include <vector>

#include "cadops/brep.hpp"
#include "cadops/features.hpp"
#include "cadops/nn.hpp"

namespace cadops {

// Index tables driving the topological convolution. All orderings are by
// entity id, so two id-relabelings of the same solid produce row-permuted
// tables and row-permuted embeddings.
struct TopologyIndices {
    std::vector<std::array<int, 6>> walks;  // c, mate, next, prev, next(mate), prev(mate)
    std::vector<int> face_of_coedge;
    std::vector<int> face_of_mate;
    std::vector<int> edge_of_coedge;
    std::vector<std::vector<int>> face_coedges;  // per face, ascending coedge ids
    std::vector<std::vector<int>> edge_coedges;  // per edge, ascending
};

inline TopologyIndices build_topology_indices(const BRep& b) {
    TopologyIndices t;
    t.walks.reserve(b.coedges.size());
    for (const Coedge& c : b.coedges) {
        const Coedge& m = b.coedges[static_cast<std::size_t>(c.mate)];
        t.walks.push_back({c.id, m.id, c.next, c.prev, m.next, m.prev});
        t.face_of_coedge.push_back(c.face);
        t.face_of_mate.push_back(m.face);
        t.edge_of_coedge.push_back(c.edge);
    }
    t.face_coedges.resize(b.faces.size());
    t.edge_coedges.resize(b.edges.size());
    for (const Coedge& c : b.coedges) {
        t.face_coedges[static_cast<std::size_t>(c.face)].push_back(c.id);
        t.edge_coedges[static_cast<std::size_t>(c.edge)].push_back(c.id);
    }
    for (const Face& f : b.faces)
        if (t.face_coedges[static_cast<std::size_t>(f.id)].empty())
            throw TopologyError("face " + std::to_string(f.id) + " has no coedges");
    return t;
}

struct BackboneConfig {
    int d_emb = 64;
    int n_layers = 2;
    int hidden = 64;
};

inline void add_backbone_params(nn::ModelParams& mp, int d_f, int d_e, int d_c,
                                const BackboneConfig& cfg) {
    mp.add("embed.face.W", d_f, cfg.hidden);
    mp.add("embed.face.b", 1, cfg.hidden);
    mp.add("embed.edge.W", d_e, cfg.hidden);
    mp.add("embed.edge.b", 1, cfg.hidden);
    mp.add("embed.coedge.W", d_c, cfg.hidden);
    mp.add("embed.coedge.b", 1, cfg.hidden);
    for (int l = 0; l < cfg.n_layers; ++l) {
        const std::string p = "layer" + std::to_string(l);
        const bool last = l + 1 == cfg.n_layers;
        mp.add(p + ".coedge.W", 9 * cfg.hidden, cfg.hidden);
        mp.add(p + ".coedge.b", 1, cfg.hidden);
        mp.add(p + ".face.W", cfg.hidden, last ? cfg.d_emb : cfg.hidden);
        mp.add(p + ".face.b", 1, last ? cfg.d_emb : cfg.hidden);
        if (!last) {
            mp.add(p + ".edge.W", cfg.hidden, cfg.hidden);
            mp.add(p + ".edge.b", 1, cfg.hidden);
        }
    }
}

// Per-face embeddings from the winged-edge convolution. Entity states start
// as linear maps of the input features; each layer gathers the nine walk-set
// states around every coedge, mixes them, and pools coedge states back onto
// faces and edges by elementwise max.
inline int backbone_forward(nn::Tape& tape, const FeatureMatrices& fm, const TopologyIndices& topo,
                            nn::ModelParams& mp, const BackboneConfig& cfg) {
    if (fm.F.rows != static_cast<int>(topo.face_coedges.size()) ||
        fm.E.rows != static_cast<int>(topo.edge_coedges.size()) ||
        fm.C.rows != static_cast<int>(topo.walks.size()))
        throw ShapeError("feature rows do not match topology entity counts");

    auto aff = [&](int x, const std::string& name) {
        int w = tape.param(&mp.at(name + ".W"));
        int b = tape.param(&mp.at(name + ".b"));
        return tape.affine(x, w, b);
    };

    int h_f = aff(tape.input(nn::from_row_matrix(fm.F)), "embed.face");
    int h_e = aff(tape.input(nn::from_row_matrix(fm.E)), "embed.edge");
    int h_c = aff(tape.input(nn::from_row_matrix(fm.C)), "embed.coedge");

    const std::size_t nc = topo.walks.size();
    std::array<std::vector<int>, 6> walk_cols;
    for (int k = 0; k < 6; ++k) {
        walk_cols[static_cast<std::size_t>(k)].reserve(nc);
        for (std::size_t c = 0; c < nc; ++c)
            walk_cols[static_cast<std::size_t>(k)].push_back(topo.walks[c][static_cast<std::size_t>(k)]);
    }

    for (int l = 0; l < cfg.n_layers; ++l) {
        const std::string p = "layer" + std::to_string(l);
        const bool last = l + 1 == cfg.n_layers;

        std::vector<int> parts;
        for (int k = 0; k < 6; ++k)
            parts.push_back(tape.gather_rows(h_c, walk_cols[static_cast<std::size_t>(k)]));
        parts.push_back(tape.gather_rows(h_f, topo.face_of_coedge));
        parts.push_back(tape.gather_rows(h_f, topo.face_of_mate));
        parts.push_back(tape.gather_rows(h_e, topo.edge_of_coedge));
        int z_c = tape.concat_cols(parts);

        int h_c_new = tape.relu(aff(z_c, p + ".coedge"));
        int f_pool = tape.group_reduce(h_c_new, topo.face_coedges, nn::ReduceMode::Max);
        int h_f_new = tape.relu(aff(f_pool, p + ".face"));
        if (!last) {
            int e_pool = tape.group_reduce(h_c_new, topo.edge_coedges, nn::ReduceMode::Max);
            h_e = tape.relu(aff(e_pool, p + ".edge"));
        }
        h_c = h_c_new;
        h_f = h_f_new;
    }
    // unit-normalized embeddings keep the head logits bounded, so no step
    // column can saturate beyond recovery during training
    return tape.normalize_rows(h_f);
}

}  // namespace cadops
