#include "penning/imaging.hpp"

#include <algorithm>
#include <cmath>

#include "penning/errors.hpp"

namespace penning {

Image blank_image(const CameraModel& camera) {
    Image img;
    img.width = camera.width_px;
    img.height = camera.height_px;
    img.pixels.assign(static_cast<std::size_t>(camera.width_px) * camera.height_px, 0.0);
    img.meters_per_pixel = camera.pixel_pitch / camera.magnification;
    return img;
}

namespace {

// Per-axis pixel masses of a unit Gaussian centred at `centre_px` (pixel
// units), via erf differences over a +-6.5 sigma window. Returns the first
// pixel index of the window.
int axis_masses(double centre_px, double sigma_px, int n_px, std::vector<double>& masses) {
    masses.clear();
    if (sigma_px <= 0.0) {
        const int ip = static_cast<int>(std::floor(centre_px));
        masses.push_back(1.0);
        return ip;
    }
    const double half_span = 6.5 * sigma_px + 1.0;
    int lo = static_cast<int>(std::floor(centre_px - half_span));
    int hi = static_cast<int>(std::ceil(centre_px + half_span));
    lo = std::max(lo, -1);
    hi = std::min(hi, n_px + 1);
    if (lo >= hi) { // window entirely off-sensor
        masses.push_back(1.0);
        return centre_px < 0 ? -1 : n_px;
    }
    const double inv = 1.0 / (sigma_px * std::sqrt(2.0));
    double prev = 0.5 * (1.0 + std::erf((lo - centre_px) * inv));
    for (int i = lo; i < hi; ++i) {
        const double next = 0.5 * (1.0 + std::erf((i + 1 - centre_px) * inv));
        masses.push_back(next - prev);
        prev = next;
    }
    return lo;
}

} // namespace

void deposit_point(Image& img, const CameraModel& camera, double x_m, double z_m,
                   double weight) {
    img.total_weight += weight;
    const double mpp = camera.pixel_pitch; // image-plane pitch
    const double u = x_m * camera.magnification / mpp + 0.5 * img.width;
    const double v = z_m * camera.magnification / mpp + 0.5 * img.height;
    const double sigma_px = camera.psf_sigma * camera.magnification / mpp;

    static thread_local std::vector<double> mx, mz;
    const int x0 = axis_masses(u, sigma_px, img.width, mx);
    const int z0 = axis_masses(v, sigma_px, img.height, mz);

    double deposited = 0.0;
    for (std::size_t j = 0; j < mz.size(); ++j) {
        const int iz = z0 + static_cast<int>(j);
        if (iz < 0 || iz >= img.height) continue;
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const int ix = x0 + static_cast<int>(i);
            if (ix < 0 || ix >= img.width) continue;
            const double m = weight * mx[i] * mz[j];
            img.at(ix, iz) += m;
            deposited += m;
        }
    }
    img.spilled += weight - deposited;
}

Image accumulate_image(const Trajectory& trajectory, std::span<const double> weights,
                       const CameraModel& camera) {
    if (trajectory.states.empty()) throw EmptyTrajectoryError("trajectory has no samples");
    const std::size_t n_ions = trajectory.states.front().size();
    if (weights.size() != trajectory.states.size() * n_ions)
        throw ConfigError("weights must hold one entry per sample per ion");

    Image img = blank_image(camera);
    std::size_t w = 0;
    for (const auto& sample : trajectory.states)
        for (const auto& ion : sample)
            deposit_point(img, camera, ion.position.x, ion.position.z, weights[w++]);
    return img;
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    return v[mid];
}

// Half-max width of a 1-D profile with linear interpolation at the
// crossings; returns pixels.
double direct_fwhm(const std::vector<double>& prof) {
    const auto it = std::max_element(prof.begin(), prof.end());
    if (it == prof.end() || *it <= 0.0) return 0.0;
    const double half = 0.5 * *it;
    const auto peak = static_cast<std::size_t>(it - prof.begin());

    double left = 0.0;
    for (std::size_t i = peak; i-- > 0;) {
        if (prof[i] < half) {
            left = static_cast<double>(i) + (half - prof[i]) / (prof[i + 1] - prof[i]);
            break;
        }
        if (i == 0) left = 0.0;
    }
    double right = static_cast<double>(prof.size() - 1);
    for (std::size_t i = peak + 1; i < prof.size(); ++i) {
        if (prof[i] < half) {
            right = static_cast<double>(i) - (half - prof[i]) / (prof[i - 1] - prof[i]);
            break;
        }
    }
    return right - left;
}

} // namespace

SpotSize measure_spot_size(const Image& img) {
    std::vector<double> border;
    for (int ix = 0; ix < img.width; ++ix) {
        border.push_back(img.at(ix, 0));
        border.push_back(img.at(ix, img.height - 1));
    }
    for (int iy = 1; iy + 1 < img.height; ++iy) {
        border.push_back(img.at(0, iy));
        border.push_back(img.at(img.width - 1, iy));
    }
    const double bg = median(std::move(border));
    const double peak = *std::max_element(img.pixels.begin(), img.pixels.end());
    if (peak <= 0.0 || (bg > 0.0 && peak < 5.0 * bg))
        throw NoSignalError("image peak below 5x border background");

    std::vector<double> profile_x(img.width, 0.0), profile_z(img.height, 0.0);
    double sum = 0.0, sx = 0.0, sz = 0.0;
    for (int iy = 0; iy < img.height; ++iy) {
        for (int ix = 0; ix < img.width; ++ix) {
            const double v = std::max(img.at(ix, iy) - bg, 0.0);
            profile_x[ix] += v;
            profile_z[iy] += v;
            sum += v;
            sx += v * ix;
            sz += v * iy;
        }
    }
    if (sum <= 0.0) throw NoSignalError("no counts above background");
    const double cx = sx / sum, cz = sz / sum;

    double vx = 0.0, vz = 0.0;
    for (int ix = 0; ix < img.width; ++ix) vx += profile_x[ix] * (ix - cx) * (ix - cx);
    for (int iy = 0; iy < img.height; ++iy) vz += profile_z[iy] * (iy - cz) * (iy - cz);
    vx /= sum;
    vz /= sum;
    // Sheppard's correction removes the variance of the pixel binning.
    vx = std::max(0.0, vx - 1.0 / 12.0);
    vz = std::max(0.0, vz - 1.0 / 12.0);

    const double mpp = img.meters_per_pixel;
    constexpr double gauss_fwhm = 2.3548200450309493; // 2 sqrt(2 ln 2)
    SpotSize s;
    s.background = bg;
    s.rms_x = std::sqrt(vx) * mpp;
    s.rms_z = std::sqrt(vz) * mpp;
    s.fwhm_x = gauss_fwhm * s.rms_x;
    s.fwhm_z = gauss_fwhm * s.rms_z;
    s.fwhm_x_direct = direct_fwhm(profile_x) * mpp;
    s.fwhm_z_direct = direct_fwhm(profile_z) * mpp;
    s.centroid_x = (cx - 0.5 * (img.width - 1)) * mpp;
    s.centroid_z = (cz - 0.5 * (img.height - 1)) * mpp;
    return s;
}

TemperatureEstimate estimate_temperature(double rms_size, double mode_omega,
                                         const ParticleSpecies& species, double psf_sigma) {
    TemperatureEstimate est;
    const double var_ion = rms_size * rms_size - psf_sigma * psf_sigma;
    if (var_ion <= 0.0) {
        est.upper_limit = true;
        est.sigma_ion = 0.0;
        est.temperature = 0.0;
        return est;
    }
    est.sigma_ion = std::sqrt(var_ion);
    est.temperature = species.mass * mode_omega * mode_omega * var_ion / constants::boltzmann;
    return est;
}

} // namespace penning
