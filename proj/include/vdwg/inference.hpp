#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "vdwg/grating.hpp"

namespace vdwg
{
//---------------------------------------------------------------------------//
// PEAK EXTRACTION
//---------------------------------------------------------------------------//
struct GaussianPeak
{
    double amplitude{};
    double center{};
    double sigma{};
    double background{};
    //! One-sigma statistical uncertainty of area(), from the fit covariance
    double area_sigma{};

    double area() const;
};

struct PeakFitOptions
{
    //! Fallback width seed (FWHM, rad) when the data do not resolve the peak
    double divergence_rad = 1e-4;
    //! Fit window half-width in units of the seeded FWHM
    double window_fwhm = 1.5;
    //! Minimum peak height in units of the robust noise scatter
    double detection_threshold = 5;
    double rel_step_tolerance = 1e-8;
    int max_iterations = 200;
};

/*!
 * Fit one Gaussian per expected center by damped least squares.
 *
 * Peaks whose fit windows overlap are fitted jointly with a shared constant
 * background; isolated peaks get their own background.
 */
std::vector<GaussianPeak> fit_gaussian_peaks(AngularScan const& scan,
                                             std::span<double const> expected_centers,
                                             PeakFitOptions const& options = {});

//! R_n = area_n / sum(area); sigma_n by first-order propagation of area_sigma
OrderIntensities normalize_orders(std::span<std::pair<int, GaussianPeak> const> peaks);

//---------------------------------------------------------------------------//
// C3 FIT
//---------------------------------------------------------------------------//
struct C3Bounds
{
    double lo_mev_nm3 = 0;
    double hi_mev_nm3 = 20;
};

struct C3FitOptions
{
    //! Resolution of the minimizer on C3 (meV nm^3)
    double c3_tolerance = 1e-3;
    //! Coarse chi^2 samples used to bracket and to detect multimodality
    int scan_points = 41;
    SlitQuadratureOptions quadrature;
};

struct FitResult
{
    double c3_hat{};
    double uncertainty{};
    double chi2{};
    //! observed minus model, per order
    std::map<int, double> residuals;
    int iterations{};
    int dof{};
    //! True when uncertainties were absent and chi^2/dof rescaling was applied
    bool rescaled{};
};

/*!
 * Least-squares C3 from relative order intensities.
 *
 * The model is normalized over exactly the observed order set. Throws
 * BoundarySolutionError if the minimum sits at a bound and MultimodalError if
 * the coarse chi^2 scan shows more than one interior minimum.
 */
FitResult fit_c3(OrderIntensities const& observed,
                 GratingGeometry const& geom,
                 BeamState const& beam,
                 C3Bounds const& bounds = {},
                 C3FitOptions const& options = {});

//! Indices of strict interior local minima of a sampled curve (plateaus
//! count once, at their left end)
std::vector<std::size_t> interior_minima(std::span<double const> values);

struct CombinedC3
{
    double c3_mev_nm3{};
    double uncertainty{};
};

//! Inverse-variance weighted mean of per-dataset fits (e.g. TOF slices)
CombinedC3 combine_fits(std::span<FitResult const> fits);

//! chi^2 of the observed intensities against the model at a given C3
double c3_chi2(OrderIntensities const& observed,
               GratingGeometry const& geom,
               BeamState const& beam,
               double c3_mev_nm3,
               SlitQuadratureOptions const& quadrature = {});

//---------------------------------------------------------------------------//
// SYNTHETIC DATA
//---------------------------------------------------------------------------//
struct ScanGrid
{
    double theta_min{};
    double theta_max{};
    std::size_t points{};

    std::vector<double> angles() const;
};

//! Uniform grid covering orders -n_max..n_max with the given sampling of
//! the zeroth-order FWHM of an N-slit pattern
ScanGrid default_scan_grid(BeamState const& beam,
                           GratingGeometry const& geom,
                           int slit_count,
                           int n_max,
                           double samples_per_fwhm = 8);

/*!
 * Angular pattern with multiplicative Gaussian noise.
 *
 * Each sample is scaled by (1 + noise_fraction * z), z standard normal from
 * Rng(seed), and clamped at zero.
 */
AngularScan synthesize_scan(Potential const& pot,
                            GratingGeometry const& geom,
                            BeamState const& beam,
                            int slit_count,
                            double noise_fraction,
                            std::uint64_t seed,
                            ScanGrid const& grid,
                            SlitQuadratureOptions const& quadrature = {});

}  // namespace vdwg
