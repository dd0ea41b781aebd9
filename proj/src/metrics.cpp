#include "djrhr/metrics.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"

namespace djrhr {

double psnr(const Tensor& a, const Tensor& b, double peak) {
    require_same_dims(a, b, "psnr");
    if (peak <= 0) throw ValueError("psnr: peak must be positive");
    double sse = 0.0;
    for (std::size_t i = 0; i < a.vec().size(); ++i) {
        const double d = static_cast<double>(a.vec()[i]) - static_cast<double>(b.vec()[i]);
        sse += d * d;
    }
    if (sse == 0.0) return std::numeric_limits<double>::infinity();
    const double mse = sse / static_cast<double>(a.numel());
    return 10.0 * std::log10(peak * peak / mse);
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

const std::vector<double>& gaussian_kernel() {
    static const std::vector<double> k = [] {
        std::vector<double> v(kWindow);
        double sum = 0.0;
        for (int i = 0; i < kWindow; ++i) {
            const double d = i - (kWindow - 1) / 2.0;
            v[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
            sum += v[i];
        }
        for (double& x : v) x /= sum;
        return v;
    }();
    return k;
}

// Separable Gaussian filter, valid region only: output (H-10) x (W-10).
std::vector<double> filter_valid(const std::vector<double>& img, std::int64_t h, std::int64_t w) {
    const auto& k = gaussian_kernel();
    const std::int64_t vw = w - kWindow + 1;
    const std::int64_t vh = h - kWindow + 1;
    std::vector<double> tmp(static_cast<std::size_t>(h * vw));
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < vw; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kWindow; ++i) acc += k[i] * img[y * w + x + i];
            tmp[y * vw + x] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(vh * vw));
    for (std::int64_t y = 0; y < vh; ++y) {
        for (std::int64_t x = 0; x < vw; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kWindow; ++i) acc += k[i] * tmp[(y + i) * vw + x];
            out[y * vw + x] = acc;
        }
    }
    return out;
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
    require_same_dims(a, b, "ssim");
    const Dims& d = a.dims();
    if (d.h < kWindow || d.w < kWindow) {
        throw ShapeError("ssim: image " + d.str() + " smaller than the " +
                         std::to_string(kWindow) + "x" + std::to_string(kWindow) + " window");
    }
    const double c1 = kK1 * kK1;  // peak 1.0
    const double c2 = kK2 * kK2;
    const std::size_t plane = static_cast<std::size_t>(d.h * d.w);
    double total = 0.0;
    std::int64_t count = 0;
    std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
    for (std::int64_t n = 0; n < d.n; ++n) {
        for (std::int64_t c = 0; c < d.c; ++c) {
            const float* pa = a.plane(n, c);
            const float* pb = b.plane(n, c);
            for (std::size_t i = 0; i < plane; ++i) {
                x[i] = pa[i];
                y[i] = pb[i];
                xx[i] = x[i] * x[i];
                yy[i] = y[i] * y[i];
                xy[i] = x[i] * y[i];
            }
            const auto mx = filter_valid(x, d.h, d.w);
            const auto my = filter_valid(y, d.h, d.w);
            const auto mxx = filter_valid(xx, d.h, d.w);
            const auto myy = filter_valid(yy, d.h, d.w);
            const auto mxy = filter_valid(xy, d.h, d.w);
            for (std::size_t i = 0; i < mx.size(); ++i) {
                const double mu_x = mx[i], mu_y = my[i];
                const double var_x = mxx[i] - mu_x * mu_x;
                const double var_y = myy[i] - mu_y * mu_y;
                const double cov = mxy[i] - mu_x * mu_y;
                const double num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2);
                const double den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2);
                total += num / den;
                ++count;
            }
        }
    }
    return total / static_cast<double>(count);
}

void EvalReport::add(std::string id, double psnr_db, double ssim_val) {
    records.push_back({std::move(id), psnr_db, ssim_val});
}

void EvalReport::finalize() {
    double p = 0.0, s = 0.0;
    for (const EvalRecord& r : records) {
        p += r.psnr_db;
        s += r.ssim;
    }
    const double n = records.empty() ? 1.0 : static_cast<double>(records.size());
    mean_psnr_db = p / n;
    mean_ssim = s / n;
}

namespace {

nlohmann::json psnr_json(double v) {
    if (std::isinf(v)) return "inf";
    return v;
}

}  // namespace

std::string EvalReport::to_json_lines() const {
    std::string out;
    for (const EvalRecord& r : records) {
        nlohmann::json row;
        row["id"] = r.id;
        row["psnr_db"] = psnr_json(r.psnr_db);
        row["ssim"] = r.ssim;
        row["niqe"] = nullptr;  // not computed; column kept for table shape
        out += row.dump() + "\n";
    }
    nlohmann::json agg;
    agg["aggregate"] = true;
    agg["count"] = records.size();
    agg["mean_psnr_db"] = psnr_json(mean_psnr_db);
    agg["mean_ssim"] = mean_ssim;
    agg["config"] = {{"peak", 1.0},
                     {"ssim_window", 11},
                     {"ssim_sigma", 1.5},
                     {"color", "rgb"}};
    out += agg.dump() + "\n";
    return out;
}

}  // namespace djrhr
