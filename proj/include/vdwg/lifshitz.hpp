#pragma once

#include <filesystem>
#include <istream>
#include <memory>
#include <variant>
#include <vector>

namespace vdwg
{
//---------------------------------------------------------------------------//
// DOMAIN TYPES
//---------------------------------------------------------------------------//
/*!
 * Tauc-Lorentz parametrization of the absorptive part of a dielectric
 * function. All four parameters are energies in eV.
 */
struct TaucLorentzParams
{
    double band_gap_ev{};
    double strength_ev{};
    double resonance_ev{};
    double width_ev{};

    void validate() const;
};

//! Single-oscillator atomic polarizability alpha(0)/(1 + (E/E_a)^2)
struct OneOscillatorAtom
{
    double alpha0_nm3{};
    double energy_ev{};

    void validate() const;
};

/*!
 * Dynamic polarizability on the imaginary axis, alpha(iE), from a table.
 *
 * The first node must be at E = 0. Between the origin and the second node
 * the table is interpolated linearly in E^2 (alpha is even in E); beyond it
 * a shape-preserving cubic (PCHIP) in log E is used. Past the last node,
 * alpha decays as alpha_last (E_last/E)^2.
 */
class TabulatedPolarizability
{
  public:
    TabulatedPolarizability(std::vector<double> energy_ev, std::vector<double> alpha_nm3);

    //! Two-column text: energy (eV), alpha (nm^3); '#' starts a comment
    static TabulatedPolarizability parse(std::istream& in);
    static TabulatedPolarizability load(std::filesystem::path const& path);

    double operator()(double energy_ev) const;

    std::vector<double> const& energies() const { return energy_; }
    std::vector<double> const& values() const { return alpha_; }
    //! Energy where alpha first drops to half its static value (or the last node)
    double half_value_energy() const;

  private:
    struct Interp;
    std::vector<double> energy_;
    std::vector<double> alpha_;
    std::shared_ptr<Interp const> interp_;
};

//! Single-oscillator surface response g0/(1 + (E/E_S)^2)
struct OneOscillatorSurface
{
    double g0{};
    double energy_ev{};

    void validate() const;
};

using SurfaceModel = std::variant<TaucLorentzParams, OneOscillatorSurface>;
using AtomModel = std::variant<OneOscillatorAtom, TabulatedPolarizability>;

struct QuadratureValue
{
    double value{};
    double error_estimate{};
};

//---------------------------------------------------------------------------//
// DIELECTRIC RESPONSE
//---------------------------------------------------------------------------//
//! eps_2(E); zero at and below the band gap
double tauc_lorentz_eps2(double energy_ev, TaucLorentzParams const& p);

struct KramersKronigOptions
{
    double rel_tolerance = 1e-10;
    //! Upper end of the numerical integral; an analytic tail covers the rest
    double cutoff_ev = 1e4;
};

//! eps(iE) = 1 + (2/pi) int_0^inf w eps_2(w) / (w^2 + E^2) dw
QuadratureValue eps_imaginary_axis(double energy_ev,
                                   TaucLorentzParams const& p,
                                   KramersKronigOptions const& options = {});

struct DielectricGridOptions
{
    std::size_t nodes = 512;
    double min_ev = 1e-3;
    double max_ev = 1e4;
    KramersKronigOptions kk;
};

/*!
 * eps(iE) tabulated once on a logarithmic grid and interpolated.
 *
 * Below the first grid node the static value eps(i0) anchors a linear
 * interpolation in E^2; above the last node eps - 1 decays as 1/E^2. The
 * interpolation error is measured against direct evaluations at interval
 * midpoints during construction. Immutable after construction.
 */
class ImaginaryAxisDielectric
{
  public:
    explicit ImaginaryAxisDielectric(TaucLorentzParams const& p,
                                     DielectricGridOptions const& options = {});

    double operator()(double energy_ev) const;
    double static_value() const { return eps0_; }

    std::vector<double> const& grid_ev() const { return grid_; }
    std::vector<double> const& grid_values() const { return values_; }

    //! Max observed |Delta g| between the interpolant and direct evaluation
    double surface_response_error() const { return g_error_; }
    //! Largest quadrature error estimate among the tabulated nodes
    double quadrature_error() const { return quad_error_; }

  private:
    struct Interp;
    std::vector<double> grid_;
    std::vector<double> values_;
    double eps0_{};
    double g_error_{};
    double quad_error_{};
    std::shared_ptr<Interp const> interp_;
};

//! g(iE) by direct (uncached) evaluation of the given surface model
double surface_response(double energy_ev, SurfaceModel const& surface);

//! g = (eps - 1)/(eps + 1)
double surface_response_from_eps(double eps);

double static_response_g0(TaucLorentzParams const& p);

//---------------------------------------------------------------------------//
// ATOMIC RESPONSE AND C3
//---------------------------------------------------------------------------//
double one_oscillator_alpha(double energy_ev, OneOscillatorAtom const& atom);

//! E_a = 4 C6 / (3 alpha0^2), C6 in eV nm^6, alpha0 in nm^3
double oscillator_energy_from_c6(double c6_ev_nm6, double alpha0_nm3);

struct LifshitzOptions
{
    double rel_tolerance = 1e-10;
    //! Use the cached eps(iE) grid; otherwise evaluate KK at every node
    bool use_dielectric_cache = true;
    DielectricGridOptions grid;
};

struct C3Estimate
{
    double c3_mev_nm3{};
    //! Quadrature plus interpolation error bound
    double error_estimate{};
};

//! C3 = (1/4 pi) int_0^inf alpha(iE) g(iE) dE, in meV nm^3
C3Estimate c3_lifshitz(AtomModel const& atom,
                       SurfaceModel const& surface,
                       LifshitzOptions const& options = {});

//! Same integral with a prebuilt dielectric cache for the surface
C3Estimate c3_lifshitz(AtomModel const& atom,
                       ImaginaryAxisDielectric const& surface,
                       LifshitzOptions const& options = {});

//! alpha0 g0 E_a E_S / (8 (E_a + E_S)) in meV nm^3
double c3_one_oscillator(double alpha0_nm3, double g0, double atom_energy_ev, double surface_energy_ev);

}  // namespace vdwg
