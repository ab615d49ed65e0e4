#ifndef THERMOFACE_CONFIG_HPP
#define THERMOFACE_CONFIG_HPP

#include <map>
#include <string>
#include <vector>

#include "thermoface/enhance.hpp"
#include "thermoface/net.hpp"
#include "thermoface/train.hpp"

namespace thermoface {

// Flat key=value config text with section-prefixed keys
// (e.g. "enhance.clahe_clip=0.01"); '#' starts a comment.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> load_config_file(const std::string& path);

struct PipelineConfig {
    EnhanceConfig enhance;
    std::string niqe_model_path;
    std::string brisque_model_path;
    std::string checkpoint_path;
    std::vector<float> pose_set = {-30.0f, -15.0f, 0.0f, 15.0f, 30.0f};
    std::string out_dir = "out";
    int render_size = 256;
    int threads = 0;  // 0 = available cores
    TrainConfig train;
    int train_samples = 8;
    NetworkSpec net;

    // Applies recognized keys on top of the defaults; unknown keys are an
    // error, malformed values too. Pose values must stay within [-90, 90].
    void apply(const std::map<std::string, std::string>& kv);
};

PipelineConfig load_pipeline_config(const std::string& path);

}  // namespace thermoface

#endif
