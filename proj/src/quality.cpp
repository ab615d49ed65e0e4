#include "thermoface/quality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>

#include "thermoface/errors.hpp"

namespace thermoface {

namespace {

// 7x7 Gaussian window, sigma 7/6, normalized.
const Kernel& mscn_window() {
    static const Kernel k = [] {
        const double sigma = 7.0 / 6.0;
        std::vector<float> taps(7);
        double sum = 0.0;
        for (int i = -3; i <= 3; ++i) {
            const double v = std::exp(-0.5 * i * i / (sigma * sigma));
            taps[i + 3] = static_cast<float>(v);
            sum += v;
        }
        for (float& t : taps) t = static_cast<float>(t / sum);
        return Kernel::separable(taps);
    }();
    return k;
}

// Monotonic lookup table for r(b) = gamma(2/b)^2 / (gamma(1/b) gamma(3/b)).
struct ShapeTable {
    std::vector<double> beta;
    std::vector<double> ratio;
};

const ShapeTable& shape_table() {
    static const ShapeTable t = [] {
        ShapeTable t;
        for (double b = 0.2; b <= 10.0 + 1e-12; b += 0.001) {
            t.beta.push_back(b);
            t.ratio.push_back(std::tgamma(2.0 / b) * std::tgamma(2.0 / b) /
                              (std::tgamma(1.0 / b) * std::tgamma(3.0 / b)));
        }
        return t;
    }();
    return t;
}

double lookup_shape(double target) {
    const ShapeTable& t = shape_table();
    const auto it = std::lower_bound(t.ratio.begin(), t.ratio.end(), target);
    if (it == t.ratio.begin()) return t.beta.front();
    if (it == t.ratio.end()) return t.beta.back();
    const std::size_t hi = static_cast<std::size_t>(it - t.ratio.begin());
    // pick the closer of the two bracketing grid points
    return (target - t.ratio[hi - 1] < t.ratio[hi] - target) ? t.beta[hi - 1] : t.beta[hi];
}

}  // namespace

MscnField mscn(const Image& img) {
    if (!img.valid()) throw InvalidArgument("mscn: invalid image");
    const Image lum = to_luminance(img);
    const Image mu = convolve(lum, mscn_window());
    Image sq(lum.width, lum.height, 1);
    for (std::size_t i = 0; i < sq.data.size(); ++i) sq.data[i] = lum.data[i] * lum.data[i];
    const Image mu2 = convolve(sq, mscn_window());
    constexpr float c = 1.0f / 255.0f;
    MscnField f;
    f.width = lum.width;
    f.height = lum.height;
    f.data.resize(lum.data.size());
    for (std::size_t i = 0; i < f.data.size(); ++i) {
        const float var = std::max(0.0f, mu2.data[i] - mu.data[i] * mu.data[i]);
        f.data[i] = (lum.data[i] - mu.data[i]) / (std::sqrt(var) + c);
    }
    return f;
}

GgdParams fit_ggd(const std::vector<float>& samples) {
    if (samples.size() < 100) throw InvalidArgument("fit_ggd: need at least 100 samples");
    double abs_sum = 0.0, sq_sum = 0.0;
    for (float s : samples) {
        abs_sum += std::fabs(s);
        sq_sum += static_cast<double>(s) * s;
    }
    const double n = static_cast<double>(samples.size());
    const double m1 = abs_sum / n, m2 = sq_sum / n;
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    if (m2 - mean * mean <= 1e-18) throw DegenerateInputError("fit_ggd: zero variance");
    GgdParams p;
    p.shape = lookup_shape(m1 * m1 / m2);
    p.sigma = std::sqrt(m2);
    return p;
}

AggdParams fit_aggd(const std::vector<float>& samples) {
    double left_sq = 0.0, right_sq = 0.0, abs_sum = 0.0;
    std::size_t n_left = 0, n_right = 0;
    for (float s : samples) {
        abs_sum += std::fabs(s);
        if (s < 0.0f) {
            left_sq += static_cast<double>(s) * s;
            ++n_left;
        } else if (s > 0.0f) {
            right_sq += static_cast<double>(s) * s;
            ++n_right;
        }
    }
    if (n_left == 0 || n_right == 0 || left_sq <= 0.0 || right_sq <= 0.0)
        throw DegenerateInputError("fit_aggd: one-sided or zero-variance samples");
    const double n = static_cast<double>(samples.size());
    const double sigma_l = std::sqrt(left_sq / static_cast<double>(n_left));
    const double sigma_r = std::sqrt(right_sq / static_cast<double>(n_right));
    const double gamma_hat = sigma_l / sigma_r;
    const double r_hat = (abs_sum / n) * (abs_sum / n) / ((left_sq + right_sq) / n);
    const double g3 = gamma_hat * gamma_hat * gamma_hat;
    const double big_r = r_hat * (g3 + 1.0) * (gamma_hat + 1.0) /
                         ((gamma_hat * gamma_hat + 1.0) * (gamma_hat * gamma_hat + 1.0));
    AggdParams p;
    p.shape = lookup_shape(big_r);
    p.sigma_left = sigma_l;
    p.sigma_right = sigma_r;
    p.mean = (sigma_r - sigma_l) * std::tgamma(2.0 / p.shape) /
             std::sqrt(std::tgamma(1.0 / p.shape) * std::tgamma(3.0 / p.shape));
    return p;
}

namespace {

// The 18 features of one scale over a rectangular window of an MSCN field.
void scale_features(const MscnField& f, int x0, int y0, int w, int h, std::vector<double>& out) {
    std::vector<float> coeffs;
    coeffs.reserve(static_cast<std::size_t>(w) * h);
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) coeffs.push_back(f.at(x, y));
    const GgdParams g = fit_ggd(coeffs);
    out.push_back(g.shape);
    out.push_back(g.sigma * g.sigma);

    const int pair_dx[4] = {1, 0, 1, -1};  // H, V, D1, D2
    const int pair_dy[4] = {0, 1, 1, 1};
    for (int d = 0; d < 4; ++d) {
        std::vector<float> prod;
        prod.reserve(coeffs.size());
        for (int y = y0; y < y0 + h; ++y)
            for (int x = x0; x < x0 + w; ++x) {
                const int xn = x + pair_dx[d], yn = y + pair_dy[d];
                if (xn < x0 || xn >= x0 + w || yn < y0 || yn >= y0 + h) continue;
                prod.push_back(f.at(x, y) * f.at(xn, yn));
            }
        const AggdParams a = fit_aggd(prod);
        out.push_back(a.shape);
        out.push_back(a.mean);
        out.push_back(a.sigma_left * a.sigma_left);
        out.push_back(a.sigma_right * a.sigma_right);
    }
}

// Local std field used for patch sharpness.
Image local_std(const Image& lum) {
    const Image mu = convolve(lum, mscn_window());
    Image sq(lum.width, lum.height, 1);
    for (std::size_t i = 0; i < sq.data.size(); ++i) sq.data[i] = lum.data[i] * lum.data[i];
    const Image mu2 = convolve(sq, mscn_window());
    Image sd(lum.width, lum.height, 1);
    for (std::size_t i = 0; i < sd.data.size(); ++i)
        sd.data[i] = std::sqrt(std::max(0.0f, mu2.data[i] - mu.data[i] * mu.data[i]));
    return sd;
}

// Cholesky solve of the symmetric positive definite system A x = b.
std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b, int n) {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a[i * n + j];
            for (int k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (s <= 0.0) throw DegenerateInputError("score: singular pooled covariance");
                a[i * n + i] = std::sqrt(s);
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
        b[i] = s / a[i * n + i];
    }
    return b;
}

void mean_covariance(const std::vector<std::vector<double>>& vecs, int dim,
                     std::vector<double>& mean, std::vector<double>& cov) {
    const double n = static_cast<double>(vecs.size());
    mean.assign(dim, 0.0);
    for (const auto& v : vecs)
        for (int i = 0; i < dim; ++i) mean[i] += v[i];
    for (double& m : mean) m /= n;
    cov.assign(static_cast<std::size_t>(dim) * dim, 0.0);
    for (const auto& v : vecs)
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) cov[i * dim + j] += (v[i] - mean[i]) * (v[j] - mean[j]);
    for (double& c : cov) c /= n;
}

}  // namespace

std::vector<double> brisque_features(const Image& img) {
    if (!img.valid()) throw InvalidArgument("brisque_features: invalid image");
    if (img.width < 16 || img.height < 16)
        throw InvalidArgument("brisque_features: image smaller than 16x16");
    std::vector<double> out;
    out.reserve(36);
    Image scale = to_luminance(img);
    for (int s = 0; s < 2; ++s) {
        const MscnField f = mscn(scale);
        scale_features(f, 0, 0, f.width, f.height, out);
        if (s == 0) scale = downsample2(scale);
    }
    return out;
}

std::vector<std::vector<double>> niqe_features(const Image& img, const NiqeConfig& cfg) {
    if (!img.valid()) throw InvalidArgument("niqe_features: invalid image");
    const int p = cfg.patch_size;
    if (p < 16) throw InvalidArgument("niqe_features: patch size too small");
    if (img.width < p || img.height < p)
        throw InvalidArgument("niqe_features: image smaller than one patch");
    const Image lum = to_luminance(img);
    const Image sd = local_std(lum);
    const MscnField f = mscn(lum);

    const int nx = img.width / p, ny = img.height / p;
    std::vector<double> sharpness;
    for (int ty = 0; ty < ny; ++ty)
        for (int tx = 0; tx < nx; ++tx) {
            double s = 0.0;
            for (int y = ty * p; y < (ty + 1) * p; ++y)
                for (int x = tx * p; x < (tx + 1) * p; ++x) s += sd.at(x, y, 0);
            sharpness.push_back(s / (static_cast<double>(p) * p));
        }
    std::vector<double> sorted = sharpness;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t idx = static_cast<std::size_t>(cfg.sharpness_percentile * (sorted.size() - 1));
    const double threshold = std::max(sorted[idx], 1e-6);

    std::vector<std::vector<double>> out;
    for (int ty = 0; ty < ny; ++ty)
        for (int tx = 0; tx < nx; ++tx) {
            if (sharpness[static_cast<std::size_t>(ty) * nx + tx] < threshold) continue;
            std::vector<double> feat;
            feat.reserve(18);
            scale_features(f, tx * p, ty * p, p, p, feat);
            out.push_back(std::move(feat));
        }
    return out;
}

QualityModel fit_pristine_model(const std::vector<Image>& corpus, QualityKind kind,
                                const NiqeConfig& cfg) {
    std::vector<std::vector<double>> vecs;
    for (const Image& img : corpus) {
        if (kind == QualityKind::brisque_distance) {
            vecs.push_back(brisque_features(img));
        } else {
            auto patches = niqe_features(img, cfg);
            for (auto& v : patches) vecs.push_back(std::move(v));
        }
    }
    const int dim = kind == QualityKind::brisque_distance ? 36 : 18;
    if (vecs.size() < static_cast<std::size_t>(dim) + 2)
        throw DegenerateInputError("fit_pristine_model: need at least feature_dim + 2 vectors");
    QualityModel m;
    m.kind = kind;
    m.feature_dim = dim;
    mean_covariance(vecs, dim, m.mean, m.covariance);
    for (int i = 0; i < dim; ++i) m.covariance[i * dim + i] += 1e-6;
    return m;
}

double score(const Image& img, const QualityModel& model, const NiqeConfig& cfg) {
    const int dim = model.feature_dim;
    if (model.kind == QualityKind::brisque_distance) {
        const std::vector<double> f = brisque_features(img);
        std::vector<double> d(dim);
        for (int i = 0; i < dim; ++i) d[i] = f[i] - model.mean[i];
        const std::vector<double> x = cholesky_solve(model.covariance, d, dim);
        double q = 0.0;
        for (int i = 0; i < dim; ++i) q += d[i] * x[i];
        return std::sqrt(std::max(0.0, q));
    }
    const auto patches = niqe_features(img, cfg);
    if (patches.empty()) throw DegenerateInputError("score: no sharp patches");
    std::vector<double> mu, cov;
    mean_covariance(patches, dim, mu, cov);
    std::vector<double> pooled(static_cast<std::size_t>(dim) * dim);
    for (std::size_t i = 0; i < pooled.size(); ++i)
        pooled[i] = 0.5 * (cov[i] + model.covariance[i]);
    for (int i = 0; i < dim; ++i) pooled[i * dim + i] += 1e-6;
    std::vector<double> d(dim);
    for (int i = 0; i < dim; ++i) d[i] = mu[i] - model.mean[i];
    const std::vector<double> x = cholesky_solve(pooled, d, dim);
    double q = 0.0;
    for (int i = 0; i < dim; ++i) q += d[i] * x[i];
    return std::sqrt(std::max(0.0, q));
}

namespace {

void put_u32le(std::ofstream& f, std::uint32_t v) {
    const std::uint8_t b[4] = {std::uint8_t(v), std::uint8_t(v >> 8), std::uint8_t(v >> 16),
                               std::uint8_t(v >> 24)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64le(std::ofstream& f, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = std::uint8_t(bits >> (8 * i));
    f.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32le(std::ifstream& f) {
    std::uint8_t b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) throw TruncatedStreamError("quality model: short read");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

double get_f64le(std::ifstream& f) {
    std::uint8_t b[8];
    f.read(reinterpret_cast<char*>(b), 8);
    if (!f) throw TruncatedStreamError("quality model: short read");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void save_quality_model(const QualityModel& model, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path);
    f.write("TQM1", 4);
    put_u32le(f, static_cast<std::uint32_t>(model.feature_dim));
    for (double v : model.mean) put_f64le(f, v);
    for (double v : model.covariance) put_f64le(f, v);
    if (!f) throw Error("short write to " + path);
}

QualityModel load_quality_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "TQM1", 4) != 0)
        throw UnsupportedFormatError("quality model: bad magic");
    QualityModel m;
    m.feature_dim = static_cast<int>(get_u32le(f));
    if (m.feature_dim <= 0 || m.feature_dim > 4096)
        throw DimensionOverflowError("quality model: implausible feature_dim");
    m.kind = m.feature_dim == 36 ? QualityKind::brisque_distance : QualityKind::niqe;
    m.mean.resize(m.feature_dim);
    for (double& v : m.mean) v = get_f64le(f);
    m.covariance.resize(static_cast<std::size_t>(m.feature_dim) * m.feature_dim);
    for (double& v : m.covariance) v = get_f64le(f);
    return m;
}

}  // namespace thermoface
