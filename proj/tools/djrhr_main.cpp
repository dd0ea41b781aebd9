#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "djrhr/config.hpp"
#include "djrhr/image_io.hpp"
#include "djrhr/metrics.hpp"
#include "djrhr/model_io.hpp"
#include "djrhr/networks.hpp"
#include "djrhr/synth.hpp"
#include "djrhr/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace djrhr;

namespace {

// Config-file keys feed the same targets as the CLI flags; a flag given on
// the command line wins over the file value.
class ConfigBinder {
public:
    void bind(CLI::Option* opt, const std::string& key, std::function<void(const std::string&)> apply) {
        entries_[key] = {opt, std::move(apply)};
    }

    void apply_file(const std::string& path) const {
        for (const auto& [key, value] : parse_config_file(path)) {
            const auto it = entries_.find(key);
            if (it == entries_.end()) {
                throw ConfigError("unknown config key '" + key + "'");
            }
            if (it->second.opt->count() == 0) {
                it->second.apply(value);
            }
        }
    }

private:
    struct Entry {
        CLI::Option* opt;
        std::function<void(const std::string&)> apply;
    };
    std::map<std::string, Entry> entries_;
};

template <typename T>
std::function<void(const std::string&)> into(T& target) {
    return [&target](const std::string& v) {
        T parsed;
        if (!CLI::detail::lexical_cast(v, parsed)) {
            throw ConfigError("cannot parse config value '" + v + "'");
        }
        target = parsed;
    };
}

ModelKind parse_model(const std::string& s) {
    if (s == "srr") return ModelKind::srr;
    if (s == "djrhr") return ModelKind::djrhr;
    throw ConfigError("model must be 'srr' or 'djrhr', got '" + s + "'");
}

std::vector<std::string> png_files(const std::string& dir) {
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".png") out.push_back(e.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

int run_synth(const SynthOptions& opts) {
    const std::string manifest = make_dataset(opts);
    std::cout << manifest << "\n";
    return 0;
}

int run_train(TrainOptions opts, const std::string& model_str, double weight_decay,
              const std::string& log_path) {
    opts.model = parse_model(model_str);
    opts.weight_decay = weight_decay >= 0 ? weight_decay
                                          : (opts.model == ModelKind::srr ? 1e-6 : 1e-4);
    if (log_path.empty()) {
        train(opts, std::cout);
    } else {
        std::ofstream log(log_path, std::ios::trunc);
        if (!log) throw IoError("cannot open log file: " + log_path);
        train(opts, log);
    }
    return 0;
}

int run_infer(const std::string& checkpoint, const std::string& input,
              const std::string& output) {
    const Network net = load_model(checkpoint);
    if (fs::is_directory(input)) {
        fs::create_directories(output);
        for (const std::string& in : png_files(input)) {
            const Tensor img = read_png_rgb(in);
            write_png_rgb((fs::path(output) / fs::path(in).filename()).string(),
                          infer(net, img));
        }
    } else {
        const Tensor img = read_png_rgb(input);
        if (fs::path(output).has_parent_path()) {
            fs::create_directories(fs::path(output).parent_path());
        }
        write_png_rgb(output, infer(net, img));
    }
    return 0;
}

int run_eval(const std::string& pred_dir, const std::string& gt_dir,
             const std::string& report_path) {
    const std::vector<std::string> preds = png_files(pred_dir);
    if (preds.empty()) throw IoError("no .png predictions in " + pred_dir);
    for (const std::string& gt : png_files(gt_dir)) {
        const std::string base = fs::path(gt).filename().string();
        if (!fs::exists(fs::path(pred_dir) / base)) {
            throw IoError("missing prediction for '" + base + "'");
        }
    }
    EvalReport report;
    for (const std::string& pred : preds) {
        const std::string base = fs::path(pred).filename().string();
        const fs::path gt = fs::path(gt_dir) / base;
        if (!fs::exists(gt)) {
            throw IoError("missing ground truth for '" + base + "'");
        }
        const Tensor a = read_png_rgb(pred);
        const Tensor b = read_png_rgb(gt.string());
        report.add(base, psnr(a, b), ssim(a, b));
    }
    report.finalize();
    const std::string lines = report.to_json_lines();
    if (report_path.empty()) {
        std::cout << lines;
    } else {
        std::ofstream os(report_path, std::ios::trunc);
        if (!os) throw IoError("cannot write report: " + report_path);
        os << lines;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wavelet-domain single-image rain and haze removal"};
    app.require_subcommand(1);

    // ---- synth ----
    SynthOptions sopts;
    auto* synth_cmd = app.add_subcommand("synth", "Generate LQ/HQ training pairs");
    std::string synth_config;
    ConfigBinder sbind;
    sbind.bind(synth_cmd->add_option("--out", sopts.out_dir, "Output directory"),
               "out", into(sopts.out_dir));
    sbind.bind(synth_cmd->add_option("--hq-dir", sopts.hq_dir,
                                     "Source clean images (default: procedural)"),
               "hq_dir", into(sopts.hq_dir));
    sbind.bind(synth_cmd->add_option("--count", sopts.count, "Number of pairs"), "count",
               into(sopts.count));
    sbind.bind(synth_cmd->add_option("--mode", sopts.mode, "rain | rain_haze"), "mode",
               into(sopts.mode));
    sbind.bind(synth_cmd->add_option("--seed", sopts.seed, "RNG seed"), "seed", into(sopts.seed));
    sbind.bind(synth_cmd->add_option("--height", sopts.image_h, "Procedural image height"),
               "height", into(sopts.image_h));
    sbind.bind(synth_cmd->add_option("--width", sopts.image_w, "Procedural image width"), "width",
               into(sopts.image_w));
    sbind.bind(synth_cmd->add_option("--density", sopts.density, "Streak seeds per kilopixel"),
               "density", into(sopts.density));
    sbind.bind(synth_cmd->add_option("--intensity", sopts.intensity, "Streak brightness scale"),
               "intensity", into(sopts.intensity));
    synth_cmd->add_option("--config", synth_config, "Config file (key = value lines)");

    // ---- train ----
    TrainOptions topts;
    std::string train_model = "djrhr";
    double train_wd = -1.0;  // default depends on model
    std::string train_log, train_config;
    auto* train_cmd = app.add_subcommand("train", "Train SRR-net or DJRHR-net");
    ConfigBinder tbind;
    tbind.bind(train_cmd->add_option("--manifest", topts.manifest_path, "Dataset manifest"),
               "manifest", into(topts.manifest_path));
    tbind.bind(train_cmd->add_option("--checkpoint", topts.checkpoint_path, "Checkpoint path"),
               "checkpoint", into(topts.checkpoint_path));
    tbind.bind(train_cmd->add_option("--model", train_model, "srr | djrhr"), "model",
               into(train_model));
    tbind.bind(train_cmd->add_option("--depth", topts.srr.depth, "SRR conv layers"), "depth",
               into(topts.srr.depth));
    tbind.bind(train_cmd->add_option("--width", topts.srr.width, "SRR hidden width"), "width",
               into(topts.srr.width));
    tbind.bind(train_cmd->add_option("--blocks", topts.djrhr.blocks, "DJRHR dense blocks (L)"),
               "blocks", into(topts.djrhr.blocks));
    tbind.bind(train_cmd->add_option("--growth", topts.djrhr.growth, "DJRHR growth rate (K)"),
               "growth", into(topts.djrhr.growth));
    tbind.bind(train_cmd->add_option("--layers-per-block", topts.djrhr.layers_per_block,
                                     "Dense layers per block"),
               "layers_per_block", into(topts.djrhr.layers_per_block));
    tbind.bind(train_cmd->add_option("--trunk", topts.djrhr.trunk, "Stem/transition width"),
               "trunk", into(topts.djrhr.trunk));
    tbind.bind(train_cmd->add_option("--alpha", topts.loss.alpha, "Dark-channel loss weight"),
               "alpha", into(topts.loss.alpha));
    tbind.bind(train_cmd->add_option("--lr", topts.lr, "Initial learning rate"), "lr",
               into(topts.lr));
    tbind.bind(train_cmd->add_option("--lr-decay", topts.lr_decay, "Per-epoch LR multiplier"),
               "lr_decay", into(topts.lr_decay));
    tbind.bind(train_cmd->add_option("--weight-decay", train_wd,
                                     "Decoupled weight decay (default 1e-6 srr, 1e-4 djrhr)"),
               "weight_decay", into(train_wd));
    tbind.bind(train_cmd->add_option("--batch", topts.batch, "Mini-batch size"), "batch",
               into(topts.batch));
    tbind.bind(train_cmd->add_option("--epochs", topts.epochs, "Training epochs"), "epochs",
               into(topts.epochs));
    tbind.bind(train_cmd->add_option("--patch", topts.patch, "Training crop size"), "patch",
               into(topts.patch));
    tbind.bind(train_cmd->add_option("--seed", topts.seed, "RNG seed"), "seed", into(topts.seed));
    tbind.bind(train_cmd->add_option("--log", train_log, "Loss log file (default stdout)"), "log",
               into(train_log));
    train_cmd->add_option("--config", train_config, "Config file (key = value lines)");

    // ---- infer ----
    std::string infer_ckpt, infer_in, infer_out;
    auto* infer_cmd = app.add_subcommand("infer", "Derain image(s) with a trained model");
    infer_cmd->add_option("--checkpoint", infer_ckpt, "Checkpoint path")->required();
    infer_cmd->add_option("--input", infer_in, "Input PNG or directory")->required();
    infer_cmd->add_option("--output", infer_out, "Output PNG or directory")->required();

    // ---- eval ----
    std::string eval_pred, eval_gt, eval_report;
    auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM report over paired directories");
    eval_cmd->add_option("--pred", eval_pred, "Prediction directory")->required();
    eval_cmd->add_option("--gt", eval_gt, "Ground-truth directory")->required();
    eval_cmd->add_option("--report", eval_report, "Report file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth_cmd) {
            if (!synth_config.empty()) sbind.apply_file(synth_config);
            return run_synth(sopts);
        }
        if (*train_cmd) {
            if (!train_config.empty()) tbind.apply_file(train_config);
            return run_train(topts, train_model, train_wd, train_log);
        }
        if (*infer_cmd) return run_infer(infer_ckpt, infer_in, infer_out);
        if (*eval_cmd) return run_eval(eval_pred, eval_gt, eval_report);
    } catch (const std::exception& e) {
        nlohmann::json err;
        err["error"] = e.what();
        std::cerr << err.dump() << std::endl;
        return 1;
    }
    return 0;
}
