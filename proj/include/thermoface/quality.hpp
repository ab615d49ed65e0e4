#ifndef THERMOFACE_QUALITY_HPP
#define THERMOFACE_QUALITY_HPP

#include <string>
#include <vector>

#include "thermoface/image.hpp"

namespace thermoface {

// Mean-subtracted contrast-normalized coefficients of an image's luminance.
struct MscnField {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

struct GgdParams {
    double shape = 0.0;  // beta
    double sigma = 0.0;  // sqrt of the second moment
};

struct AggdParams {
    double shape = 0.0;       // nu
    double mean = 0.0;        // eta
    double sigma_left = 0.0;
    double sigma_right = 0.0;
};

enum class QualityKind { niqe, brisque_distance };

// Gaussian "pristine" model in feature space; both metrics score an image
// by a Mahalanobis-style distance to it.
struct QualityModel {
    QualityKind kind = QualityKind::niqe;
    int feature_dim = 0;
    std::vector<double> mean;        // feature_dim
    std::vector<double> covariance;  // row-major feature_dim x feature_dim
};

struct NiqeConfig {
    int patch_size = 96;
    double sharpness_percentile = 0.75;
};

// (I - mu) / (sigma + 1/255) with local Gaussian stats (7x7, sigma 7/6).
MscnField mscn(const Image& img);

// Moment matching over a beta grid [0.2, 10] with step 0.001.
GgdParams fit_ggd(const std::vector<float>& samples);

// Asymmetric variant via left/right partial second moments.
AggdParams fit_aggd(const std::vector<float>& samples);

// 36 features: per scale (original + downsample2) a GGD fit of the MSCN
// field (shape, sigma^2) and AGGD fits (shape, mean, sigma_l^2, sigma_r^2)
// of the H, V, D1, D2 pairwise products. Ordering:
//   [scale][ggd_shape, ggd_var,
//           H:nu,eta,var_l,var_r, V:..., D1:..., D2:...]
std::vector<double> brisque_features(const Image& img);

// Per sharp patch, the 18 features of one BRISQUE scale computed on the
// patch's MSCN coefficients. Patches tile without overlap; a patch is sharp
// when its mean local std is at or above the configured percentile.
std::vector<std::vector<double>> niqe_features(const Image& img, const NiqeConfig& cfg = {});

// Mean + covariance of pooled feature vectors, diagonal regularized by 1e-6.
QualityModel fit_pristine_model(const std::vector<Image>& corpus, QualityKind kind,
                                const NiqeConfig& cfg = {});

// NIQE: distance between the image's own patch statistics and the model,
// with pooled covariance. brisque_distance: Mahalanobis distance of the
// 36-vector to the model.
double score(const Image& img, const QualityModel& model, const NiqeConfig& cfg = {});

// "TQM1" file: magic, u32 feature_dim, f64 mean then row-major covariance,
// all little-endian. Kind is recovered from the dimension (36 -> brisque).
void save_quality_model(const QualityModel& model, const std::string& path);
QualityModel load_quality_model(const std::string& path);

}  // namespace thermoface

#endif
