#include <cstdint>

#include "sslcal/error.hpp"
#include "sslcal/kernels.hpp"

namespace sslcal::kernels::omp {

void affine_forward(const Matrix& in, const Matrix& weight, std::span<const double> bias, Matrix& out) {
    require(in.cols() == weight.cols(), "affine_forward: input width mismatch");
    require(bias.size() == weight.rows(), "affine_forward: bias size mismatch");
    const std::size_t n = in.rows(), fan_in = weight.cols(), fan_out = weight.rows();
    out = Matrix(n, fan_out);
    const bool par = n * fan_in * fan_out >= kParallelMinWork;
    const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t s = 0; s < rows; ++s) {
        const auto x = in.row(static_cast<std::size_t>(s));
        auto y = out.row(static_cast<std::size_t>(s));
        for (std::size_t o = 0; o < fan_out; ++o) {
            const auto w = weight.row(o);
            double acc = bias[o];
            for (std::size_t i = 0; i < fan_in; ++i) acc += w[i] * x[i];
            y[o] = acc;
        }
    }
}

void affine_backward(const Matrix& in, const Matrix& weight, const Matrix& dout, Matrix& dweight,
                     std::vector<double>& dbias, Matrix* din) {
    require(dout.rows() == in.rows() && dout.cols() == weight.rows(), "affine_backward: shape mismatch");
    const std::size_t n = in.rows(), fan_in = weight.cols(), fan_out = weight.rows();
    dweight = Matrix(fan_out, fan_in);
    dbias.assign(fan_out, 0.0);
    const bool par = n * fan_in * fan_out >= kParallelMinWork;

    // One output unit per iteration: the sample sum stays in serial order.
    const auto outs = static_cast<std::int64_t>(fan_out);
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t oi = 0; oi < outs; ++oi) {
        const auto o = static_cast<std::size_t>(oi);
        auto dw = dweight.row(o);
        double db = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            const double g = dout(s, o);
            db += g;
            const auto x = in.row(s);
            for (std::size_t i = 0; i < fan_in; ++i) dw[i] += g * x[i];
        }
        dbias[o] = db;
    }
    if (din == nullptr) return;
    *din = Matrix(n, fan_in);
    const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t si = 0; si < rows; ++si) {
        const auto s = static_cast<std::size_t>(si);
        auto dx = din->row(s);
        for (std::size_t o = 0; o < fan_out; ++o) {
            const double g = dout(s, o);
            const auto w = weight.row(o);
            for (std::size_t i = 0; i < fan_in; ++i) dx[i] += g * w[i];
        }
    }
}

}  // namespace sslcal::kernels::omp
