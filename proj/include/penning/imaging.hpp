#pragma once

#include <span>
#include <vector>

#include "penning/dynamics.hpp"
#include "penning/trap_model.hpp"

namespace penning {

/// ICCD stand-in: observation along +y (perpendicular to the trap axis and
/// the cooling beam), so the image plane is (x, z). Gaussian PSF, square
/// pixels.
struct CameraModel {
    double pixel_pitch = 13e-6;  // m
    double magnification = 1.0;
    double psf_sigma = 8e-6;     // m, in object space
    int width_px = 128;
    int height_px = 128;
    double exposure = 0.0;       // s, metadata only
};

struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> pixels; // expected counts, row-major
    double meters_per_pixel = 0.0;
    double spilled = 0.0; // weight deposited outside the sensor
    double total_weight = 0.0;

    double at(int ix, int iy) const { return pixels[static_cast<std::size_t>(iy) * width + ix]; }
    double& at(int ix, int iy) { return pixels[static_cast<std::size_t>(iy) * width + ix]; }
};

/// Accumulates one weight per trajectory sample (ion 0..N-1 each) at the
/// projected (x, z) position, convolved with the PSF and binned at the pixel
/// pitch. Off-sensor weight lands in the spill counter, so
/// in-sensor + spilled == total input weight. Throws EmptyTrajectoryError.
Image accumulate_image(const Trajectory& trajectory, std::span<const double> weights,
                       const CameraModel& camera);

/// Single-point helper used by tests and synthetic scenes.
void deposit_point(Image& img, const CameraModel& camera, double x_m, double z_m, double weight);

Image blank_image(const CameraModel& camera);

struct SpotSize {
    double rms_x = 0.0;  // m, background-subtracted second moment
    double rms_z = 0.0;
    double fwhm_x = 0.0; // m, Gaussian-equivalent 2 sqrt(2 ln 2) * rms
    double fwhm_z = 0.0;
    double fwhm_x_direct = 0.0; // m, half-max crossings of the marginal profile
    double fwhm_z_direct = 0.0;
    double background = 0.0;    // median border level
    double centroid_x = 0.0;    // m, relative to sensor centre
    double centroid_z = 0.0;
};

/// Throws NoSignalError when the peak is below 5x the border background.
SpotSize measure_spot_size(const Image& img);

struct TemperatureEstimate {
    double temperature = 0.0; // K
    bool upper_limit = false; // measured size consistent with the PSF alone
    double sigma_ion = 0.0;   // m, PSF-deconvolved cloud size
};

/// Equipartition estimate T = m omega^2 sigma_ion^2 / k_B with
/// sigma_ion^2 = max(0, rms^2 - psf^2). For the magnetron mode this is a
/// localisation metric, not a thermodynamic temperature.
TemperatureEstimate estimate_temperature(double rms_size, double mode_omega,
                                         const ParticleSpecies& species, double psf_sigma);

} // namespace penning
