#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fincast/kinematics.hpp"
#include "fincast/nn.hpp"
#include "fincast/preprocess.hpp"
#include "fincast/reduction.hpp"

namespace fincast {

enum class Arch { dense, recurrent };

Arch parse_arch(const std::string& name);  // "dense" | "recurrent"
std::string arch_name(Arch a);

// A trained surrogate: network weights plus everything needed to reproduce
// its input/output scaling at inference time.
struct SurrogateModel {
    int version = 1;
    Arch arch = Arch::dense;
    Variant variant = Variant::baseline;
    DenseNet dense;  // populated when arch == dense
    LstmNet lstm;    // populated when arch == recurrent
    NormStats stats;
    std::optional<PcaReducer> reducer;  // wfp models carry their fitted reducer
    TrainHistory history;

    int input_dim() const;

    // raw (unnormalized) records in, normalized thrust out; for the recurrent
    // architecture the records form one whole-cycle sequence
    std::vector<double> predict_normalized(const std::vector<std::vector<double>>& records) const;

    void save(const std::string& path) const;
    static SurrogateModel load(const std::string& path);
};

}  // namespace fincast
