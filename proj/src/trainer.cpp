#include "djrhr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "djrhr/adam.hpp"
#include "djrhr/graph.hpp"
#include "djrhr/image_io.hpp"
#include "djrhr/model_io.hpp"
#include "json.hpp"

namespace djrhr {

using nlohmann::json;

std::vector<ManifestRow> read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open manifest: " + path);
    std::vector<ManifestRow> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        rows.push_back({j.at("hq_path").get<std::string>(), j.at("lq_path").get<std::string>(),
                        j.at("mode").get<std::string>()});
    }
    if (rows.empty()) throw IoError("manifest is empty: " + path);
    return rows;
}

namespace {

Tensor crop_patch(const Tensor& img, std::int64_t oy, std::int64_t ox, std::int64_t p) {
    Tensor out(1, img.dims().c, p, p);
    for (std::int64_t c = 0; c < img.dims().c; ++c) {
        const float* src = img.plane(0, c);
        float* dst = out.plane(0, c);
        for (std::int64_t y = 0; y < p; ++y) {
            std::copy(src + (oy + y) * img.dims().w + ox, src + (oy + y) * img.dims().w + ox + p,
                      dst + y * p);
        }
    }
    return out;
}

Tensor stack_batch(const std::vector<Tensor>& items) {
    const Dims& d0 = items.front().dims();
    Tensor out(static_cast<std::int64_t>(items.size()), d0.c, d0.h, d0.w);
    const std::int64_t per = d0.numel();
    for (std::size_t i = 0; i < items.size(); ++i) {
        std::copy(items[i].vec().begin(), items[i].vec().end(),
                  out.vec().begin() + static_cast<std::int64_t>(i) * per);
    }
    return out;
}

}  // namespace

void train(const TrainOptions& opts, std::ostream& log) {
    const std::vector<ManifestRow> rows = read_manifest(opts.manifest_path);
    const char* expected_mode = opts.model == ModelKind::srr ? "rain" : "rain_haze";
    for (const ManifestRow& r : rows) {
        if (r.mode != expected_mode) {
            throw ValueError(std::string("dataset mode '") + r.mode + "' does not match model '" +
                             model_name(opts.model) + "' (expects " + expected_mode +
                             " data: " + (opts.model == ModelKind::srr ? "12" : "13") +
                             "-channel features)");
        }
    }
    if (opts.batch < 1) throw ValueError("train: batch size must be >= 1");
    if (opts.epochs < 0) throw ValueError("train: epochs must be >= 0");

    std::vector<Tensor> hq, lq;
    hq.reserve(rows.size());
    lq.reserve(rows.size());
    for (const ManifestRow& r : rows) {
        hq.push_back(read_png_rgb(r.hq_path));
        lq.push_back(read_png_rgb(r.lq_path));
        require_same_dims(hq.back(), lq.back(), "train sample");
    }

    Network net = opts.model == ModelKind::srr ? Network::build_srr(opts.srr, opts.seed)
                                               : Network::build_djrhr(opts.djrhr, opts.seed);
    AdamConfig acfg;
    acfg.lr = opts.lr;
    acfg.weight_decay = opts.weight_decay;
    acfg.lr_decay = opts.lr_decay;
    Adam opt(acfg);

    save_model(opts.checkpoint_path, net, &opt);

    std::mt19937_64 rng(opts.seed ^ 0x7261696e5f68617aULL);
    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        opt.config().lr = opts.lr * std::pow(opts.lr_decay, epoch - 1);

        std::vector<std::size_t> order(rows.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);

        double epoch_total = 0.0, epoch_l1 = 0.0, epoch_l2 = 0.0;
        int steps = 0;
        for (std::size_t start = 0; start < order.size(); start += opts.batch) {
            const std::size_t end = std::min(order.size(), start + opts.batch);
            std::vector<Tensor> blq, bhq;
            for (std::size_t i = start; i < end; ++i) {
                const Tensor& full_lq = lq[order[i]];
                const Tensor& full_hq = hq[order[i]];
                const std::int64_t p =
                    std::min<std::int64_t>(opts.patch,
                                           std::min(full_lq.dims().h, full_lq.dims().w));
                const std::int64_t oy =
                    full_lq.dims().h > p ? static_cast<std::int64_t>(rng() % (full_lq.dims().h - p + 1)) : 0;
                const std::int64_t ox =
                    full_lq.dims().w > p ? static_cast<std::int64_t>(rng() % (full_lq.dims().w - p + 1)) : 0;
                blq.push_back(crop_patch(full_lq, oy, ox, p));
                bhq.push_back(crop_patch(full_hq, oy, ox, p));
            }
            const Tensor x_img = stack_batch(blq);
            const Tensor y_img = stack_batch(bhq);

            Graph g;
            std::vector<int> param_nodes;
            double l1 = 0.0, l2 = 0.0, total = 0.0;
            int loss_node;
            if (opts.model == ModelKind::srr) {
                const int x = g.input(pack_srr(x_img).channels);
                const int y = g.input(pack_srr(y_img).channels);
                loss_node = srr_loss(g, net, x, y, &param_nodes);
                total = static_cast<double>(g.value(loss_node).vec()[0]);
            } else {
                const int x = g.input(pack_djrhr(x_img).channels);
                const int y = g.input(pack_djrhr(y_img).channels);
                const JointLossNodes<float> ln = djrhr_loss(g, net, x, y, opts.loss, &param_nodes);
                loss_node = ln.total;
                l1 = static_cast<double>(g.value(ln.l1).vec()[0]);
                l2 = static_cast<double>(g.value(ln.l2).vec()[0]);
                total = l1 + opts.loss.alpha * l2;
            }
            if (!g.value(loss_node).all_finite()) {
                throw ValueError("train: non-finite loss at epoch " + std::to_string(epoch));
            }
            g.backward(loss_node);

            std::vector<Tensor> grads;
            grads.reserve(net.params.size());
            for (std::size_t pi = 0; pi < net.params.size(); ++pi) {
                grads.push_back(g.grad(param_nodes[pi]));
                if (!grads.back().all_finite()) {
                    throw ValueError("train: non-finite gradient for " + net.params[pi].first);
                }
            }
            opt.step(net.params, grads);

            ++steps;
            epoch_total += total;
            epoch_l1 += l1;
            epoch_l2 += l2;
            json step_row;
            step_row["epoch"] = epoch;
            step_row["step"] = steps;
            step_row["lr"] = opt.config().lr;
            step_row["total"] = total;
            if (opts.model == ModelKind::djrhr) {
                step_row["l1"] = l1;
                step_row["l2"] = l2;
                step_row["alpha"] = opts.loss.alpha;
            }
            log << step_row.dump() << "\n";
        }

        json epoch_row;
        epoch_row["epoch"] = epoch;
        epoch_row["epoch_summary"] = true;
        epoch_row["lr"] = opt.config().lr;
        epoch_row["mean_total"] = epoch_total / steps;
        if (opts.model == ModelKind::djrhr) {
            epoch_row["mean_l1"] = epoch_l1 / steps;
            epoch_row["mean_l2"] = epoch_l2 / steps;
        }
        log << epoch_row.dump() << "\n";
        log.flush();

        save_model(opts.checkpoint_path, net, &opt);
    }
}

}  // namespace djrhr
