#include "thermoface/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "thermoface/errors.hpp"

namespace thermoface {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_number(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size() || !std::isfinite(v)) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument("config: bad numeric value for " + key + ": '" + value + "'");
    }
}

int parse_int(const std::string& key, const std::string& value) {
    const double v = parse_number(key, value);
    if (v != std::floor(v)) throw InvalidArgument("config: " + key + " must be an integer");
    return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw InvalidArgument("config: " + key + " must be true or false");
}

std::vector<float> parse_float_list(const std::string& key, const std::string& value) {
    std::vector<float> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(static_cast<float>(parse_number(key, trim(item))));
    if (out.empty()) throw InvalidArgument("config: " + key + " must list at least one value");
    return out;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(lineno, "expected key=value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError(lineno, "empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

void PipelineConfig::apply(const std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : kv) {
        if (key == "enhance.clahe_tiles")
            enhance.clahe_tiles = parse_int(key, value);
        else if (key == "enhance.clahe_clip")
            enhance.clahe_clip = static_cast<float>(parse_number(key, value));
        else if (key == "enhance.fusion_levels")
            enhance.fusion_levels = parse_int(key, value);
        else if (key == "enhance.exposedness_sigma")
            enhance.exposedness_sigma = static_cast<float>(parse_number(key, value));
        else if (key == "enhance.normalization_epsilon")
            enhance.normalization_epsilon = static_cast<float>(parse_number(key, value));
        else if (key == "quality.niqe_model")
            niqe_model_path = value;
        else if (key == "quality.brisque_model")
            brisque_model_path = value;
        else if (key == "reconstruct.checkpoint")
            checkpoint_path = value;
        else if (key == "reconstruct.poses")
            pose_set = parse_float_list(key, value);
        else if (key == "reconstruct.render_size")
            render_size = parse_int(key, value);
        else if (key == "output.dir")
            out_dir = value;
        else if (key == "threads")
            threads = parse_int(key, value);
        else if (key == "train.learning_rate")
            train.learning_rate = parse_number(key, value);
        else if (key == "train.iterations")
            train.iterations = parse_int(key, value);
        else if (key == "train.seed")
            train.seed = static_cast<std::uint64_t>(parse_int(key, value));
        else if (key == "train.momentum")
            train.momentum = parse_bool(key, value);
        else if (key == "train.squared_loss")
            train.squared_loss = parse_bool(key, value);
        else if (key == "train.samples")
            train_samples = parse_int(key, value);
        else if (key == "net.input_size")
            net.input_size = parse_int(key, value);
        else if (key == "net.input_channels")
            net.input_channels = parse_int(key, value);
        else if (key == "net.stem_channels")
            net.stem_channels = parse_int(key, value);
        else if (key == "net.residual_blocks")
            net.encoder_residual_blocks = parse_int(key, value);
        else if (key == "net.transposed_blocks")
            net.decoder_transposed_blocks = parse_int(key, value);
        else
            throw InvalidArgument("config: unknown key '" + key + "'");
    }
    for (float p : pose_set)
        if (p < -90.0f || p > 90.0f)
            throw InvalidArgument("config: pose values must be within [-90, 90]");
    if (enhance.clahe_tiles <= 0 || enhance.clahe_clip <= 0.0f || enhance.clahe_clip > 1.0f ||
        enhance.fusion_levels <= 0 || enhance.exposedness_sigma <= 0.0f ||
        enhance.normalization_epsilon <= 0.0f)
        throw InvalidArgument("config: enhance parameters must be positive (clip in (0,1])");
    if (render_size <= 0) throw InvalidArgument("config: render_size must be positive");
    if (threads < 0) throw InvalidArgument("config: threads must be nonnegative");
    if (train_samples < 1) throw InvalidArgument("config: train.samples must be at least 1");
    train.validate();
}

PipelineConfig load_pipeline_config(const std::string& path) {
    PipelineConfig cfg;
    cfg.apply(load_config_file(path));
    return cfg;
}

}  // namespace thermoface
