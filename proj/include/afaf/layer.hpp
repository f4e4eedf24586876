#pragma once

#include <string>
#include <vector>

#include "afaf/error.hpp"

namespace afaf {

enum class LayerKind { Dense, Conv, MaxPool, Flatten, Dropout };
enum class Activation { Rectifier, Identity };

// One entry of the declared layer stack. Dense/Conv introduce a neuron layer;
// MaxPool/Flatten/Dropout modify the output of the preceding neuron layer.
struct LayerSpec {
    LayerKind kind = LayerKind::Dense;
    int units = 0;           // dense units or conv feature maps
    int kernel = 0;          // conv kernel size (square, valid convolution)
    double rate = 0.0;       // dropout probability
    Activation act = Activation::Rectifier;

    static LayerSpec dense(int units, Activation act = Activation::Rectifier) {
        return {LayerKind::Dense, units, 0, 0.0, act};
    }
    static LayerSpec conv(int maps, int kernel) {
        return {LayerKind::Conv, maps, kernel, 0.0, Activation::Rectifier};
    }
    static LayerSpec max_pool() { return {LayerKind::MaxPool, 0, 2, 0.0, Activation::Identity}; }
    static LayerSpec flatten() { return {LayerKind::Flatten, 0, 0, 0.0, Activation::Identity}; }
    static LayerSpec dropout(double rate) { return {LayerKind::Dropout, 0, 0, rate, Activation::Identity}; }
};

struct InputShape {
    int channels = 1;
    int height = 1;
    int width = 1;
    int size() const { return channels * height * width; }
    bool spatial() const { return height > 1 || width > 1; }
};

// Resolved neuron layer. A "neuron" is a unit in dense layers and a feature
// map in convolution layers. Index 0 is the input.
struct NeuronLayer {
    int width = 0;            // units or feature maps
    bool conv = false;        // carries spatial extent
    int h = 1, w = 1;         // activation spatial dims
    int pooled_h = 1, pooled_w = 1;
    bool pooled = false;      // 2x2 max-pool applied to the output
    double dropout = 0.0;     // applied to the (pooled) output in train mode
    Activation act = Activation::Rectifier;
    int kernel = 0;           // kernel producing this layer (conv only)

    int act_size() const { return width * h * w; }
    int out_size() const { return width * pooled_h * pooled_w; }
    int spatial() const { return h * w; }
    int pooled_spatial() const { return pooled_h * pooled_w; }
};

class Architecture {
public:
    static Architecture build(InputShape input, const std::vector<LayerSpec>& specs);

    // MLP: input flattened, hidden rectifier dense layers, identity output.
    static Architecture mlp(int input_size, const std::vector<int>& hidden,
                            int output_units, double hidden_dropout = 0.0);

    // Rebuild from an already-resolved layer stack (snapshot loading).
    static Architecture from_resolved(InputShape input, std::vector<NeuronLayer> layers) {
        if (layers.size() < 2) throw ConfigError("architecture needs at least two layers");
        Architecture a;
        a.input_ = input;
        a.layers_ = std::move(layers);
        return a;
    }

    const std::vector<NeuronLayer>& layers() const { return layers_; }
    const NeuronLayer& layer(int l) const { return layers_.at(static_cast<std::size_t>(l)); }
    const InputShape& input() const { return input_; }

    int num_layers() const { return static_cast<int>(layers_.size()); }   // L
    int num_edge_layers() const { return num_layers() - 1; }
    int output_layer() const { return num_layers() - 1; }

    // Scalars stored per edge in edge layer e (source layer e -> layer e+1).
    int block_size(int e) const;

    void set_output_width(int width) { layers_.back().width = width; }

private:
    InputShape input_;
    std::vector<NeuronLayer> layers_;
};

inline Architecture Architecture::build(InputShape input, const std::vector<LayerSpec>& specs) {
    Architecture a;
    a.input_ = input;
    NeuronLayer in;
    in.width = input.spatial() ? input.channels : input.size();
    in.conv = input.spatial();
    in.h = input.spatial() ? input.height : 1;
    in.w = input.spatial() ? input.width : 1;
    in.pooled_h = in.h;
    in.pooled_w = in.w;
    in.act = Activation::Identity;
    a.layers_.push_back(in);

    for (const auto& s : specs) {
        switch (s.kind) {
        case LayerKind::Dense: {
            if (s.units < 1) throw ConfigError("dense layer needs units >= 1");
            NeuronLayer nl;
            nl.width = s.units;
            nl.act = s.act;
            a.layers_.push_back(nl);
            break;
        }
        case LayerKind::Conv: {
            if (s.units < 1) throw ConfigError("conv layer needs feature maps >= 1");
            const NeuronLayer& prev = a.layers_.back();
            if (!prev.conv) throw ConfigError("conv layer requires a spatial input");
            NeuronLayer nl;
            nl.width = s.units;
            nl.conv = true;
            nl.kernel = s.kernel;
            nl.h = prev.pooled_h - s.kernel + 1;
            nl.w = prev.pooled_w - s.kernel + 1;
            if (nl.h < 1 || nl.w < 1) throw ConfigError("conv kernel larger than input extent");
            nl.pooled_h = nl.h;
            nl.pooled_w = nl.w;
            nl.act = s.act;
            a.layers_.push_back(nl);
            break;
        }
        case LayerKind::MaxPool: {
            NeuronLayer& prev = a.layers_.back();
            if (!prev.conv || prev.pooled) throw ConfigError("max-pool must follow an unpooled conv layer");
            if (prev.h % 2 != 0 || prev.w % 2 != 0) throw ConfigError("max-pool needs even spatial dims");
            prev.pooled = true;
            prev.pooled_h = prev.h / 2;
            prev.pooled_w = prev.w / 2;
            break;
        }
        case LayerKind::Flatten:
            // conv -> dense transitions flatten implicitly
            break;
        case LayerKind::Dropout: {
            if (s.rate < 0.0 || s.rate >= 1.0) throw ConfigError("dropout rate must be in [0,1)");
            a.layers_.back().dropout = s.rate;
            break;
        }
        }
    }
    if (a.layers_.size() < 2) throw ConfigError("architecture needs at least one layer beyond the input");
    return a;
}

inline Architecture Architecture::mlp(int input_size, const std::vector<int>& hidden,
                                      int output_units, double hidden_dropout) {
    std::vector<LayerSpec> specs;
    for (int hwidth : hidden) {
        specs.push_back(LayerSpec::dense(hwidth));
        if (hidden_dropout > 0.0) specs.push_back(LayerSpec::dropout(hidden_dropout));
    }
    specs.push_back(LayerSpec::dense(output_units, Activation::Identity));
    return build({input_size, 1, 1}, specs);
}

inline int Architecture::block_size(int e) const {
    const NeuronLayer& src = layer(e);
    const NeuronLayer& tgt = layer(e + 1);
    if (tgt.conv) return tgt.kernel * tgt.kernel;
    if (src.conv) return src.pooled_spatial();  // flattened feature map -> unit
    return 1;
}

}  // namespace afaf
