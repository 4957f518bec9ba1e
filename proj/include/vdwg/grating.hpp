#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace vdwg
{
//---------------------------------------------------------------------------//
// DOMAIN TYPES
//---------------------------------------------------------------------------//
/*!
 * Transmission grating with trapezoidal bars.
 *
 * Lengths in nm. The wedge angle describes the taper of the bar walls: the
 * slit opening grows by t*tan(beta) from the narrow edge to the far face.
 */
struct GratingGeometry
{
    double period_nm{};
    double slit_width_nm{};
    double bar_depth_nm{};
    double wedge_angle_rad{};

    //! Throws InvalidInputError if any invariant fails
    void validate() const;
};

/*!
 * Monochromatic (or nearly so) atom beam.
 *
 * The de Broglie wavelength is derived once on construction so that
 * lambda == h/(m v) always holds for the stored values.
 */
class BeamState
{
  public:
    BeamState(double mass_u, double velocity_mps, double velocity_spread = 0);

    double mass_u() const { return mass_u_; }
    double velocity_mps() const { return velocity_mps_; }
    //! FWHM velocity spread relative to the mean velocity
    double velocity_spread() const { return velocity_spread_; }
    double wavelength_nm() const { return wavelength_nm_; }
    double wavenumber_per_nm() const;

    //! Same species and spread at another velocity
    BeamState with_velocity(double velocity_mps) const;

  private:
    double mass_u_;
    double velocity_mps_;
    double velocity_spread_;
    double wavelength_nm_;
};

//! Non-retarded atom-wall potential -C3/l^3
struct Potential
{
    double c3_mev_nm3{};

    void validate() const;
};

//! Sampled angular distribution behind an N-slit grating.
struct AngularScan
{
    std::vector<double> theta_rad;
    std::vector<double> value;
    int slit_count{1};

    void validate() const;
    std::size_t size() const { return theta_rad.size(); }
};

struct OrderValue
{
    double intensity{};
    //! Absent when the source carries no uncertainty information
    std::optional<double> sigma;
};

//! Relative diffraction-order intensities, normalized over the stored orders.
struct OrderIntensities
{
    std::map<int, OrderValue> orders;

    double total() const;
    std::vector<int> order_numbers() const;
    bool has_sigma() const;
};

//! Model intensities plus the per-order numerical error estimate.
struct ModelIntensities
{
    OrderIntensities intensities;
    std::map<int, double> error_estimate;
};

//---------------------------------------------------------------------------//
// QUADRATURE SETTINGS
//---------------------------------------------------------------------------//
struct SlitQuadratureOptions
{
    //! Target error relative to the half-slit width scale of the integral
    double rel_tolerance = 1e-8;
    //! Allowed contribution of the truncated region next to the wall
    double tail_rel_tolerance = 1e-10;
    //! Maximum phase advance per Gauss-Kronrod panel (rad)
    double max_panel_phase = 1.5707963267948966;
    //! Number of panel-refinement passes before giving up
    int max_refinements = 6;
};

struct SlitAmplitude
{
    std::complex<double> value;
    double error_estimate{};
};

//---------------------------------------------------------------------------//
// OPERATIONS
//---------------------------------------------------------------------------//
double de_broglie_wavelength_nm(double mass_u, double velocity_mps);

//! Angle of the n-th principal maximum, sin(theta) = n lambda / d
double diffraction_angle(int order, double wavelength_nm, double period_nm);

//! Eikonal phase accumulated at distance zeta from the nearer bar wall
double bar_transmission_phase(double zeta_nm,
                              Potential const& pot,
                              GratingGeometry const& geom,
                              BeamState const& beam);

/*!
 * Half-slit integral of the eikonal transmission function.
 *
 * The constructor lays out Gauss-Kronrod panels over [zeta_min, s0/2] so that
 * the total phase (vdW phase plus the transverse term up to the given
 * maximum transverse wavenumber) advances by at most a quarter turn per
 * panel, and caches tau(zeta) at every node. The strip [0, zeta_min] next to
 * the wall is handled by an asymptotic endpoint expansion.
 *
 * Amplitudes for any angle with |k sin(theta)| <= max_kappa can then be
 * evaluated cheaply.
 */
class SlitIntegrator
{
  public:
    SlitIntegrator(Potential const& pot,
                   GratingGeometry const& geom,
                   BeamState const& beam,
                   double max_kappa_per_nm,
                   SlitQuadratureOptions const& options = {});

    //! f_slit(theta) with its error estimate; throws NumericalToleranceError
    SlitAmplitude amplitude(double theta_rad) const;

    double cutoff_nm() const { return zeta_min_; }
    std::size_t panel_count() const { return panels_.size(); }

  private:
    struct Panel
    {
        double lo;
        double hi;
    };
    struct Node
    {
        double zeta;
        double kronrod_weight;
        double gauss_weight;
        std::complex<double> tau;
    };

    struct Sums
    {
        std::complex<double> kronrod;
        double error;
    };

    //! Taylor moments sum_j w_j tau_j (zeta_j - center)^m over a group of panels
    struct MomentGroup
    {
        double center;
        std::vector<std::complex<double>> moments;
    };

    void build_panels(double max_phase);
    void build_moments();
    Sums integrate(double kappa) const;
    std::complex<double> integrate_moments(double kappa) const;
    std::complex<double> tail(double kappa) const;
    double tail_error(double kappa) const;

    double phase(double zeta) const;
    double phase_rate(double zeta) const;
    double phase_curvature(double zeta) const;

    double half_width_;
    double wavenumber_;
    double wavelength_;
    double max_kappa_;
    double phase_scale_;  //!< C3 t / (hbar v), nm^3
    double wedge_offset_;  //!< t tan(beta), nm
    double zeta_min_{0};
    SlitQuadratureOptions options_;
    double panel_error_{0};
    std::vector<Panel> panels_;
    std::vector<Node> nodes_;
    std::vector<MomentGroup> groups_;
};

SlitAmplitude slit_amplitude(double theta_rad,
                             Potential const& pot,
                             GratingGeometry const& geom,
                             BeamState const& beam,
                             SlitQuadratureOptions const& options = {});

//! Orders -n_max..n_max, normalized over that set
ModelIntensities order_intensities(int n_max,
                                   Potential const& pot,
                                   GratingGeometry const& geom,
                                   BeamState const& beam,
                                   SlitQuadratureOptions const& options = {});

//! Arbitrary order set, normalized over exactly those orders
ModelIntensities order_intensities(std::span<int const> orders,
                                   Potential const& pot,
                                   GratingGeometry const& geom,
                                   BeamState const& beam,
                                   SlitQuadratureOptions const& options = {});

//! N-slit Fraunhofer pattern |sin(N x)/sin(x) f_slit|^2 with x = k d sin(theta)/2
AngularScan angular_pattern(std::span<double const> theta_grid,
                            int slit_count,
                            Potential const& pot,
                            GratingGeometry const& geom,
                            BeamState const& beam,
                            SlitQuadratureOptions const& options = {});

//! The N-slit interference factor, with its N^2 limit at principal maxima
double grating_factor(double half_phase, int slit_count);

/*!
 * Order intensities averaged over a Gaussian velocity distribution.
 *
 * The FWHM is beam.velocity_spread() times the mean velocity; the angles
 * stay at the principal maxima of the mean velocity. Gauss-Hermite
 * quadrature with quad_points nodes (1, or odd and >= 3).
 */
ModelIntensities
velocity_averaged_intensities(int n_max,
                              Potential const& pot,
                              GratingGeometry const& geom,
                              BeamState const& beam,
                              int quad_points,
                              SlitQuadratureOptions const& options = {});

}  // namespace vdwg
