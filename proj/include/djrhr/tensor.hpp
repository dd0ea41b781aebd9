#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace djrhr {

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValueError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// (batch, channels, height, width), row-major.
struct Dims {
    std::int64_t n = 0, c = 0, h = 0, w = 0;

    std::int64_t numel() const { return n * c * h * w; }

    bool operator==(const Dims&) const = default;

    std::string str() const {
        std::ostringstream os;
        os << "(" << n << "," << c << "," << h << "," << w << ")";
        return os.str();
    }
};

template <typename T>
class TensorT {
public:
    TensorT() = default;

    TensorT(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w, T fill = T(0))
        : dims_{n, c, h, w} {
        if (n < 0 || c < 0 || h < 0 || w < 0) {
            throw ShapeError("negative tensor dimension " + dims_.str());
        }
        data_.assign(static_cast<std::size_t>(dims_.numel()), fill);
    }

    explicit TensorT(Dims d, T fill = T(0)) : TensorT(d.n, d.c, d.h, d.w, fill) {}

    static TensorT zeros_like(const TensorT& other) { return TensorT(other.dims_); }

    const Dims& dims() const { return dims_; }
    std::int64_t numel() const { return dims_.numel(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    std::vector<T>& vec() { return data_; }
    const std::vector<T>& vec() const { return data_; }

    T& at(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) {
        return data_[static_cast<std::size_t>(((n * dims_.c + c) * dims_.h + y) * dims_.w + x)];
    }
    T at(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) const {
        return data_[static_cast<std::size_t>(((n * dims_.c + c) * dims_.h + y) * dims_.w + x)];
    }

    // Pointer to the start of one (n, c) plane.
    T* plane(std::int64_t n, std::int64_t c) {
        return data_.data() + (n * dims_.c + c) * dims_.h * dims_.w;
    }
    const T* plane(std::int64_t n, std::int64_t c) const {
        return data_.data() + (n * dims_.c + c) * dims_.h * dims_.w;
    }

    bool all_finite() const {
        for (T v : data_) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }

    void fill(T v) { data_.assign(data_.size(), v); }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out(dims_.n, dims_.c, dims_.h, dims_.w);
        for (std::size_t i = 0; i < data_.size(); ++i) {
            out.vec()[i] = static_cast<U>(data_[i]);
        }
        return out;
    }

private:
    Dims dims_{};
    std::vector<T> data_;
};

using Tensor = TensorT<float>;

template <typename T>
inline void require_same_dims(const TensorT<T>& a, const TensorT<T>& b, const char* what) {
    if (!(a.dims() == b.dims())) {
        throw ShapeError(std::string(what) + ": dims mismatch " + a.dims().str() + " vs " +
                         b.dims().str());
    }
}

}  // namespace djrhr
