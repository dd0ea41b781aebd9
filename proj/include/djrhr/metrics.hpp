#pragma once

#include <string>
#include <vector>

#include "djrhr/tensor.hpp"

namespace djrhr {

// 10*log10(peak^2 / MSE) over all pixels and channels; +inf when a == b.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

// Mean local SSIM per channel, 11x11 Gaussian window sigma=1.5, K1=0.01,
// K2=0.03, valid windows only, averaged over windows and channels.
double ssim(const Tensor& a, const Tensor& b);

struct EvalRecord {
    std::string id;
    double psnr_db = 0.0;
    double ssim = 0.0;
};

struct EvalReport {
    std::vector<EvalRecord> records;
    double mean_psnr_db = 0.0;
    double mean_ssim = 0.0;

    void add(std::string id, double psnr_db, double ssim_val);
    void finalize();  // recomputes the aggregate means

    // JSON lines: one row per record, then one aggregate line. PSNR of
    // identical images serializes as the string "inf".
    std::string to_json_lines() const;
};

}  // namespace djrhr
