#include <zlib.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "thermoface/config.hpp"
#include "thermoface/enhance.hpp"
#include "thermoface/errors.hpp"
#include "thermoface/image_io.hpp"
#include "thermoface/mesh.hpp"
#include "thermoface/posmap.hpp"
#include "thermoface/quality.hpp"
#include "thermoface/render.hpp"
#include "thermoface/train.hpp"

namespace fs = std::filesystem;
using namespace thermoface;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 2;
constexpr int kExitNumeric = 3;

bool is_image_file(const fs::path& p) {
    const std::string ext = p.extension().string();
    return ext == ".pgm" || ext == ".ppm" || ext == ".png";
}

std::vector<fs::path> list_images(const fs::path& input) {
    std::vector<fs::path> files;
    if (fs::is_directory(input)) {
        for (const auto& e : fs::directory_iterator(input))
            if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
        std::sort(files.begin(), files.end());
    } else if (fs::is_regular_file(input)) {
        files.push_back(input);
    } else {
        throw Error("input path does not exist: " + input.string());
    }
    return files;
}

int worker_count(const PipelineConfig& cfg) {
    if (const char* env = std::getenv("THERMOFACE_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    if (cfg.threads > 0) return cfg.threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string crc32_hex(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path.string());
    std::vector<char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const uLong crc = crc32(0, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size()));
    char out[16];
    std::snprintf(out, sizeof out, "%08lx", static_cast<unsigned long>(crc));
    return out;
}

Image weight_to_image(const WeightMap& w) {
    Image img(w.width, w.height, 1);
    const float max = *std::max_element(w.data.begin(), w.data.end());
    for (std::size_t i = 0; i < w.data.size(); ++i)
        img.data[i] = max > 0.0f ? w.data[i] / max : 0.0f;
    return img;
}

// ---- enhance ----

int cmd_enhance(const PipelineConfig& cfg, const std::string& input) {
    const std::vector<fs::path> files = list_images(input);
    fs::create_directories(cfg.out_dir);

    struct Result {
        fs::path file;
        std::string error;  // empty on success
    };
    std::vector<Result> results(files.size());
    std::atomic<std::size_t> next{0};
    const int nthreads = std::min<int>(worker_count(cfg), std::max<std::size_t>(files.size(), 1));
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < files.size(); i = next.fetch_add(1)) {
                results[i].file = files[i];
                try {
                    const Image img = load_image_file(files[i].string());
                    const Image refined = enhance(img, cfg.enhance);
                    const fs::path out = fs::path(cfg.out_dir) /
                                         (files[i].stem().string() + "_refined" + files[i].extension().string());
                    save_image_file(refined, out.string());
                } catch (const std::exception& e) {
                    results[i].error = e.what();
                }
            }
        });
    for (auto& t : pool) t.join();

    std::size_t ok = 0, failed = 0;
    for (const Result& r : results) {
        if (r.error.empty()) {
            ++ok;
        } else {
            ++failed;
            std::cerr << "failed: " << r.file.string() << ": " << r.error << "\n";
        }
    }
    std::cout << ok << " processed, " << failed << " failed\n";
    return failed > 0 ? kExitIo : kExitOk;
}

// ---- quality ----

std::optional<fs::path> find_processed(const fs::path& original) {
    for (const char* ext : {".pgm", ".ppm", ".png"}) {
        const fs::path cand = original.parent_path() / (original.stem().string() + "_refined" + ext);
        if (fs::is_regular_file(cand)) return cand;
    }
    return std::nullopt;
}

int cmd_quality(const PipelineConfig& cfg, const std::string& input, const std::string& fit_dir,
                const std::string& csv_out) {
    if (!fit_dir.empty()) {
        std::vector<Image> corpus;
        for (const fs::path& p : list_images(fit_dir)) corpus.push_back(load_image_file(p.string()));
        save_quality_model(fit_pristine_model(corpus, QualityKind::niqe), cfg.niqe_model_path);
        save_quality_model(fit_pristine_model(corpus, QualityKind::brisque_distance),
                           cfg.brisque_model_path);
        std::cout << "fitted pristine models from " << corpus.size() << " images\n";
        if (input.empty()) return kExitOk;
    }
    const QualityModel niqe_model = load_quality_model(cfg.niqe_model_path);
    const QualityModel brisque_model = load_quality_model(cfg.brisque_model_path);

    std::ostringstream csv;
    csv << "file,niqe_original,niqe_processed,brisque_original,brisque_processed,"
           "niqe_improved,brisque_improved\n";
    bool any_failed = false;
    if (!input.empty()) {
        for (const fs::path& orig : list_images(input)) {
            const std::string stem = orig.stem().string();
            if (stem.size() >= 8 && stem.compare(stem.size() - 8, 8, "_refined") == 0) continue;
            csv << orig.filename().string() << ",";
            try {
                const auto proc = find_processed(orig);
                if (!proc) throw Error("missing processed pair member");
                const Image a = load_image_file(orig.string());
                const Image b = load_image_file(proc->string());
                const double na = score(a, niqe_model), nb = score(b, niqe_model);
                const double ba = score(a, brisque_model), bb = score(b, brisque_model);
                csv << na << "," << nb << "," << ba << "," << bb << ","
                    << (nb < na ? "true" : "false") << "," << (bb < ba ? "true" : "false") << "\n";
            } catch (const std::exception& e) {
                any_failed = true;
                csv << "error,error,error,error,false,false\n";
                std::cerr << "failed: " << orig.string() << ": " << e.what() << "\n";
            }
        }
    }
    if (csv_out.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream f(csv_out, std::ios::trunc);
        if (!f) throw Error("cannot write " + csv_out);
        f << csv.str();
    }
    return any_failed ? kExitIo : kExitOk;
}

// ---- reconstruct ----

struct ReconstructOutputs {
    std::vector<fs::path> files;
};

ReconstructOutputs reconstruct_artifacts(const Network& net, const Image& img,
                                         const std::string& name, const PipelineConfig& cfg) {
    const int s = net.spec.input_size;
    const Image resized = resize_bilinear(img, s, s);
    const PositionMap pm = forward(net, resized);
    const WeightMask mask = default_weight_mask(s, s);
    FaceMesh mesh = mesh_from_posmap(pm, mask, 0.0f);
    mesh = texture_vertices(mesh, resized);
    // scale from position-map pixel units onto the render canvas
    const float scale = static_cast<float>(cfg.render_size) / static_cast<float>(s);
    for (Vec3& v : mesh.vertices) {
        v.x *= scale;
        v.y *= scale;
        v.z *= scale;
    }

    ReconstructOutputs out;
    fs::create_directories(cfg.out_dir);
    const fs::path obj_path = fs::path(cfg.out_dir) / (name + ".obj");
    export_obj_file(mesh, obj_path.string());
    out.files.push_back(obj_path);
    for (float yaw : cfg.pose_set) {
        const FaceMesh posed = rotate_yaw(mesh, Pose{yaw});
        const Image render = render_mesh(posed, cfg.render_size, cfg.render_size, RenderMode::textured);
        char suffix[32];
        std::snprintf(suffix, sizeof suffix, "_yaw%+g", static_cast<double>(yaw));
        const fs::path p = fs::path(cfg.out_dir) / (name + suffix + ".png");
        save_image_file(render, p.string());
        out.files.push_back(p);
    }
    const Image depth = render_depth(mesh, cfg.render_size, cfg.render_size);
    const fs::path depth_path = fs::path(cfg.out_dir) / (name + "_depth.png");
    save_image_file(depth, depth_path.string());
    out.files.push_back(depth_path);
    return out;
}

int cmd_reconstruct(const PipelineConfig& cfg, const std::string& input) {
    if (cfg.checkpoint_path.empty() || !fs::is_regular_file(cfg.checkpoint_path))
        throw Error("checkpoint not found: '" + cfg.checkpoint_path + "'");
    const Network net = load_checkpoint(cfg.checkpoint_path);
    const Image img = load_image_file(input);
    const std::string name = fs::path(input).stem().string();
    const ReconstructOutputs out = reconstruct_artifacts(net, img, name, cfg);
    for (const fs::path& p : out.files) std::cout << p.string() << "\n";
    return kExitOk;
}

// ---- train ----

int cmd_train(const PipelineConfig& cfg) {
    Network net(cfg.net);
    const std::vector<TrainSample> dataset =
        make_synthetic_dataset(cfg.train_samples, net.spec.input_size, cfg.train.seed);
    const std::vector<double> curve = train(net, dataset, cfg.train);

    fs::create_directories(cfg.out_dir);
    const fs::path ckpt = fs::path(cfg.out_dir) / "checkpoint.tprn";
    save_checkpoint(net, ckpt.string());
    const fs::path loss_csv = fs::path(cfg.out_dir) / "loss.csv";
    std::ofstream f(loss_csv, std::ios::trunc);
    if (!f) throw Error("cannot write " + loss_csv.string());
    f << "iteration,loss\n";
    for (std::size_t i = 0; i < curve.size(); ++i) f << i << "," << curve[i] << "\n";
    std::cout << "checkpoint: " << ckpt.string() << "\n";
    std::cout << "final/initial loss ratio: " << curve.back() / curve.front() << "\n";
    return kExitOk;
}

// ---- demo ----

int cmd_demo(const PipelineConfig& cfg, const std::string& input) {
    const Image img = load_image_file(input);
    const std::string name = fs::path(input).stem().string();
    fs::create_directories(cfg.out_dir);

    const EnhanceStages stages = enhance_stages(img, cfg.enhance);
    std::vector<fs::path> files;
    auto emit = [&](const std::string& stage, const Image& im) {
        const fs::path p = fs::path(cfg.out_dir) / (name + "_" + stage + ".png");
        save_image_file(im, p.string());
        files.push_back(p);
    };
    emit("stage_a_input", stages.input);
    emit("stage_b_white_balance", stages.white_balanced);
    emit("stage_c_clahe", stages.equalized);
    emit("stage_d_laplacian_weight", weight_to_image(stages.laplacian_w));
    emit("stage_e_local_contrast_weight", weight_to_image(stages.local_w));
    emit("stage_f_saliency_weight", weight_to_image(stages.saliency_w));
    emit("stage_g_exposedness_weight", weight_to_image(stages.exposedness_w));
    emit("stage_h_output", stages.fused);

    Network net = [&] {
        if (!cfg.checkpoint_path.empty()) {
            if (!fs::is_regular_file(cfg.checkpoint_path))
                throw Error("checkpoint not found: '" + cfg.checkpoint_path + "'");
            return load_checkpoint(cfg.checkpoint_path);
        }
        // no checkpoint given: deterministic desk-scale training
        Network net(cfg.net);
        const auto dataset =
            make_synthetic_dataset(cfg.train_samples, net.spec.input_size, cfg.train.seed);
        TrainConfig tc = cfg.train;
        tc.iterations = std::min(tc.iterations, 200);
        train(net, dataset, tc);
        return net;
    }();

    const ReconstructOutputs rec = reconstruct_artifacts(net, stages.fused, name, cfg);
    files.insert(files.end(), rec.files.begin(), rec.files.end());

    std::sort(files.begin(), files.end());
    const fs::path manifest = fs::path(cfg.out_dir) / (name + "_manifest.txt");
    std::ofstream mf(manifest, std::ios::trunc);
    if (!mf) throw Error("cannot write " + manifest.string());
    for (const fs::path& p : files) mf << p.filename().string() << " " << crc32_hex(p) << "\n";
    mf.close();
    for (const fs::path& p : files) std::cout << p.string() << "\n";
    std::cout << manifest.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"thermal face refinement, quality scoring and 3D reconstruction"};
    app.require_subcommand(1);

    std::string config_path, out_dir, input, fit_dir, csv_out, checkpoint, model_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "pipeline config file (key=value)");
        sub->add_option("--out", out_dir, "output directory");
    };

    CLI::App* enh = app.add_subcommand("enhance", "refine an image or a directory of images");
    enh->add_option("input", input, "image file or directory")->required();
    add_common(enh);

    CLI::App* qual = app.add_subcommand("quality", "score original/processed pairs (CSV report)");
    qual->add_option("input", input, "directory of <name> / <name>_refined pairs");
    qual->add_option("--fit-pristine", fit_dir, "fit the pristine models from this image directory");
    qual->add_option("--niqe-model", checkpoint, "NIQE model path (overrides config)");
    std::string brisque_path;
    qual->add_option("--brisque-model", brisque_path, "brisque-distance model path (overrides config)");
    qual->add_option("--csv", csv_out, "write the report here instead of stdout");
    add_common(qual);

    CLI::App* rec = app.add_subcommand("reconstruct", "OBJ, pose renders and depth map from one image");
    rec->add_option("input", input, "image file")->required();
    std::string rec_ckpt;
    rec->add_option("--checkpoint", rec_ckpt, "network checkpoint (overrides config)");
    add_common(rec);

    CLI::App* tr = app.add_subcommand("train", "desk-scale training on synthetic data");
    add_common(tr);

    CLI::App* demo = app.add_subcommand("demo", "full stage-by-stage artifact set for one image");
    demo->add_option("input", input, "image file")->required();
    std::string demo_ckpt;
    demo->add_option("--checkpoint", demo_ckpt, "network checkpoint (optional)");
    add_common(demo);

    CLI11_PARSE(app, argc, argv);

    try {
        PipelineConfig cfg;
        if (!config_path.empty()) cfg.apply(load_config_file(config_path));
        if (!out_dir.empty()) cfg.out_dir = out_dir;

        if (enh->parsed()) return cmd_enhance(cfg, input);
        if (qual->parsed()) {
            if (!checkpoint.empty()) cfg.niqe_model_path = checkpoint;
            if (!brisque_path.empty()) cfg.brisque_model_path = brisque_path;
            if (cfg.niqe_model_path.empty() || cfg.brisque_model_path.empty())
                throw Error("quality: model paths are required (config or flags)");
            return cmd_quality(cfg, input, fit_dir, csv_out);
        }
        if (rec->parsed()) {
            if (!rec_ckpt.empty()) cfg.checkpoint_path = rec_ckpt;
            return cmd_reconstruct(cfg, input);
        }
        if (tr->parsed()) return cmd_train(cfg);
        if (demo->parsed()) {
            if (!demo_ckpt.empty()) cfg.checkpoint_path = demo_ckpt;
            return cmd_demo(cfg, input);
        }
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
