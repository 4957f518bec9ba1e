#include "vdwg/lifshitz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "vdwg/error.hpp"
#include "vdwg/units.hpp"

namespace vdwg
{
namespace
{
using boost::math::quadrature::gauss_kronrod;

constexpr unsigned max_depth = 20;

void require_positive(double v, char const* what)
{
    if (!(v > 0) || !std::isfinite(v))
        throw InvalidInputError(std::string(what) + " must be positive and finite");
}

//! int_W^inf dw / (w^2 (w^2 + x^2))
double tail_kernel(double cutoff, double x)
{
    double r = x / cutoff;
    if (r < 1e-2)
    {
        double w3 = cutoff * cutoff * cutoff;
        return 1 / (3 * w3) - x * x / (5 * w3 * cutoff * cutoff);
    }
    return (1 / cutoff - std::atan(r) / x) / (x * x);
}

}  // namespace

//---------------------------------------------------------------------------//
// VALIDATION
//---------------------------------------------------------------------------//
void TaucLorentzParams::validate() const
{
    require_positive(band_gap_ev, "Tauc-Lorentz band gap");
    require_positive(strength_ev, "Tauc-Lorentz strength");
    require_positive(resonance_ev, "Tauc-Lorentz resonance energy");
    require_positive(width_ev, "Tauc-Lorentz width");
}

void OneOscillatorAtom::validate() const
{
    require_positive(alpha0_nm3, "static polarizability");
    require_positive(energy_ev, "atomic oscillator energy");
}

void OneOscillatorSurface::validate() const
{
    if (!(g0 > 0 && g0 < 1))
        throw InvalidInputError("static surface response g0 must lie in (0, 1)");
    require_positive(energy_ev, "surface oscillator energy");
}

//---------------------------------------------------------------------------//
// DIELECTRIC RESPONSE
//---------------------------------------------------------------------------//
double tauc_lorentz_eps2(double energy_ev, TaucLorentzParams const& p)
{
    if (!(energy_ev > 0))
        throw InvalidInputError("photon energy must be positive");
    double e = energy_ev;
    if (e <= p.band_gap_ev)
        return 0;
    double above = e - p.band_gap_ev;
    double detune = e * e - p.resonance_ev * p.resonance_ev;
    double denom = (detune * detune + p.width_ev * p.width_ev * e * e) * e;
    return p.strength_ev * p.resonance_ev * p.width_ev * above * above / denom;
}

QuadratureValue eps_imaginary_axis(double energy_ev,
                                   TaucLorentzParams const& p,
                                   KramersKronigOptions const& options)
{
    p.validate();
    if (!(energy_ev >= 0) || std::isnan(energy_ev))
        throw InvalidInputError("imaginary frequency must be non-negative");
    double const x2 = energy_ev * energy_ev;
    double const cutoff = options.cutoff_ev;
    if (!(cutoff > 4 * p.band_gap_ev))
        throw InvalidInputError("Kramers-Kronig cutoff must lie well above the band gap");

    auto integrand = [&](double w) { return w * tauc_lorentz_eps2(w, p) / (w * w + x2); };

    // Geometric breakpoints from the gap to the cutoff; the resonance region
    // sits in the first few segments
    double sum = 0;
    double error = 0;
    double lo = p.band_gap_ev;
    while (lo < cutoff)
    {
        double hi = std::min(lo * 4, cutoff);
        double err = 0;
        sum += gauss_kronrod<double, 15>::integrate(
            integrand, lo, hi, max_depth, options.rel_tolerance, &err);
        error += err;
        lo = hi;
    }

    // Beyond the cutoff eps_2 ~ A Omega Gamma / w^3
    double amp = p.strength_ev * p.resonance_ev * p.width_ev;
    double tail = amp * tail_kernel(cutoff, energy_ev);
    double shape = tauc_lorentz_eps2(cutoff, p) * cutoff * cutoff * cutoff / amp;
    error += tail * std::abs(shape - 1);
    sum += tail;

    QuadratureValue eps{1 + 2 / units::pi * sum, 2 / units::pi * error};
    // GK estimates are pessimistic; fail only well past the requested level
    if (!(eps.error_estimate <= 100 * options.rel_tolerance * eps.value))
    {
        throw NumericalToleranceError("Kramers-Kronig integral", eps.error_estimate,
                                      options.rel_tolerance * eps.value);
    }
    return eps;
}

double surface_response_from_eps(double eps)
{
    return (eps - 1) / (eps + 1);
}

double static_response_g0(TaucLorentzParams const& p)
{
    return surface_response_from_eps(eps_imaginary_axis(0, p).value);
}

double surface_response(double energy_ev, SurfaceModel const& surface)
{
    if (!(energy_ev >= 0))
        throw InvalidInputError("imaginary frequency must be non-negative");
    return std::visit(
        [&](auto const& model) -> double {
            using T = std::decay_t<decltype(model)>;
            model.validate();
            if constexpr (std::is_same_v<T, TaucLorentzParams>)
            {
                return surface_response_from_eps(eps_imaginary_axis(energy_ev, model).value);
            }
            else
            {
                double r = energy_ev / model.energy_ev;
                return model.g0 / (1 + r * r);
            }
        },
        surface);
}

//---------------------------------------------------------------------------//
// CACHED DIELECTRIC FUNCTION
//---------------------------------------------------------------------------//
namespace
{
//! d eps(iE) / dE = -(4 E / pi) int w eps_2 / (w^2 + E^2)^2 dw
double eps_slope(double energy_ev, TaucLorentzParams const& p, KramersKronigOptions const& options)
{
    double const x2 = energy_ev * energy_ev;
    auto integrand = [&](double w) {
        double d = w * w + x2;
        return w * tauc_lorentz_eps2(w, p) / (d * d);
    };
    double sum = 0;
    double lo = p.band_gap_ev;
    while (lo < options.cutoff_ev)
    {
        double hi = std::min(lo * 4, options.cutoff_ev);
        sum += gauss_kronrod<double, 15>::integrate(
            integrand, lo, hi, max_depth, options.rel_tolerance);
        lo = hi;
    }
    sum += gauss_kronrod<double, 15>::integrate(integrand,
                                                options.cutoff_ev,
                                                std::numeric_limits<double>::infinity(),
                                                max_depth,
                                                options.rel_tolerance);
    return -4 * energy_ev / units::pi * sum;
}
}  // namespace

struct ImaginaryAxisDielectric::Interp
{
    boost::math::interpolators::cubic_hermite<std::vector<double>> spline;
};

ImaginaryAxisDielectric::ImaginaryAxisDielectric(TaucLorentzParams const& p,
                                                 DielectricGridOptions const& options)
{
    p.validate();
    if (options.nodes < 4 || !(options.min_ev > 0) || !(options.max_ev > options.min_ev))
        throw InvalidInputError("dielectric grid needs >= 4 nodes on a positive range");

    auto const n = options.nodes;
    double const log_lo = std::log(options.min_ev);
    double const log_step = (std::log(options.max_ev) - log_lo) / static_cast<double>(n - 1);

    QuadratureValue eps0 = eps_imaginary_axis(0, p, options.kk);
    eps0_ = eps0.value;
    quad_error_ = eps0.error_estimate;

    std::vector<double> log_e(n);
    std::vector<double> slope(n);
    grid_.resize(n);
    values_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        log_e[i] = log_lo + log_step * static_cast<double>(i);
        grid_[i] = std::exp(log_e[i]);
        QuadratureValue eps = eps_imaginary_axis(grid_[i], p, options.kk);
        values_[i] = eps.value;
        // Exact slopes in log E make the Hermite interpolant fourth order
        slope[i] = grid_[i] * eps_slope(grid_[i], p, options.kk);
        quad_error_ = std::max(quad_error_, eps.error_estimate);
    }
    auto y = values_;
    interp_ = std::make_shared<Interp const>(Interp{{std::move(log_e), std::move(y), std::move(slope)}});

    // Probe the interpolant inside every interval (off-centre, where odd
    // error terms do not cancel) and in both extrapolated regions
    std::vector<double> probes;
    for (std::size_t i = 0; i + 1 < n; ++i)
    {
        for (double f : {0.25, 0.5})
            probes.push_back(std::exp(log_lo + log_step * (static_cast<double>(i) + f)));
    }
    for (double f : {0.1, 0.5})
        probes.push_back(grid_.front() * f);
    for (double f : {2.0, 10.0})
        probes.push_back(grid_.back() * f);
    for (double e : probes)
    {
        double direct = eps_imaginary_axis(e, p, options.kk).value;
        double diff = std::abs(surface_response_from_eps((*this)(e))
                               - surface_response_from_eps(direct));
        g_error_ = std::max(g_error_, diff);
    }
}

double ImaginaryAxisDielectric::operator()(double energy_ev) const
{
    if (!(energy_ev >= 0))
        throw InvalidInputError("imaginary frequency must be non-negative");
    double const lo = grid_.front();
    double const hi = grid_.back();
    if (energy_ev < lo)
    {
        double r = energy_ev / lo;
        return eps0_ + (values_.front() - eps0_) * r * r;
    }
    if (energy_ev > hi)
    {
        double r = hi / energy_ev;
        return 1 + (values_.back() - 1) * r * r;
    }
    return interp_->spline(std::log(energy_ev));
}

//---------------------------------------------------------------------------//
// ATOMIC RESPONSE
//---------------------------------------------------------------------------//
double one_oscillator_alpha(double energy_ev, OneOscillatorAtom const& atom)
{
    double r = energy_ev / atom.energy_ev;
    return atom.alpha0_nm3 / (1 + r * r);
}

double oscillator_energy_from_c6(double c6_ev_nm6, double alpha0_nm3)
{
    require_positive(c6_ev_nm6, "C6");
    require_positive(alpha0_nm3, "static polarizability");
    return 4 * c6_ev_nm6 / (3 * alpha0_nm3 * alpha0_nm3);
}

double c3_one_oscillator(double alpha0_nm3, double g0, double atom_energy_ev, double surface_energy_ev)
{
    require_positive(alpha0_nm3, "static polarizability");
    require_positive(g0, "g0");
    require_positive(atom_energy_ev, "atomic oscillator energy");
    require_positive(surface_energy_ev, "surface oscillator energy");
    double reduced = atom_energy_ev * surface_energy_ev / (atom_energy_ev + surface_energy_ev);
    return alpha0_nm3 * g0 * reduced / 8 * units::mev_per_ev;
}

//---------------------------------------------------------------------------//
// LIFSHITZ INTEGRAL
//---------------------------------------------------------------------------//
namespace
{
double reference_energy(AtomModel const& atom)
{
    return std::visit(
        [](auto const& model) -> double {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, OneOscillatorAtom>)
            {
                model.validate();
                return model.energy_ev;
            }
            else
            {
                return model.half_value_energy();
            }
        },
        atom);
}

double atom_alpha(AtomModel const& atom, double energy_ev)
{
    return std::visit(
        [energy_ev](auto const& model) -> double {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, OneOscillatorAtom>)
                return one_oscillator_alpha(energy_ev, model);
            else
                return model(energy_ev);
        },
        atom);
}

/*!
 * (1/4 pi) int_0^inf alpha(E) h(E) dE with E = E_ref tan(x).
 *
 * Returns value and GK error in eV nm^3.
 */
template<class F>
QuadratureValue lifshitz_integral(AtomModel const& atom, F&& response, double rel_tol)
{
    double const e_ref = reference_energy(atom);
    auto mapped = [&](double x) {
        double c = std::cos(x);
        double e = e_ref * std::tan(x);
        return atom_alpha(atom, e) * response(e) * e_ref / (c * c);
    };
    double err = 0;
    double value = gauss_kronrod<double, 15>::integrate(
        mapped, 0.0, units::pi / 2, max_depth, rel_tol, &err);
    double const norm = 1 / (4 * units::pi);
    return {value * norm, err * norm};
}

C3Estimate finish(QuadratureValue integral, double extra_error_ev_nm3, double rel_tol)
{
    C3Estimate out;
    out.c3_mev_nm3 = integral.value * units::mev_per_ev;
    out.error_estimate = (integral.error_estimate + extra_error_ev_nm3) * units::mev_per_ev;
    if (!std::isfinite(out.c3_mev_nm3))
        throw NumericalToleranceError("Lifshitz integral", INFINITY, rel_tol);
    if (integral.error_estimate > std::max(1e3 * rel_tol * std::abs(integral.value), 1e-300))
    {
        throw NumericalToleranceError("Lifshitz integral", integral.error_estimate,
                                      rel_tol * std::abs(integral.value));
    }
    return out;
}

}  // namespace

C3Estimate c3_lifshitz(AtomModel const& atom,
                       ImaginaryAxisDielectric const& surface,
                       LifshitzOptions const& options)
{
    auto g = [&](double e) { return surface_response_from_eps(surface(e)); };
    QuadratureValue c3 = lifshitz_integral(atom, g, options.rel_tolerance);
    // Interpolation and KK errors act on g; bound their effect through int alpha
    QuadratureValue alpha_int = lifshitz_integral(atom, [](double) { return 1.0; }, options.rel_tolerance);
    double g_error = surface.surface_response_error() + surface.quadrature_error() / 2;
    return finish(c3, g_error * alpha_int.value, options.rel_tolerance);
}

C3Estimate c3_lifshitz(AtomModel const& atom,
                       SurfaceModel const& surface,
                       LifshitzOptions const& options)
{
    if (auto const* tl = std::get_if<TaucLorentzParams>(&surface))
    {
        tl->validate();
        if (options.use_dielectric_cache)
            return c3_lifshitz(atom, ImaginaryAxisDielectric(*tl, options.grid), options);

        double kk_error = 0;
        auto g = [&](double e) {
            QuadratureValue eps = eps_imaginary_axis(e, *tl, options.grid.kk);
            kk_error = std::max(kk_error, eps.error_estimate);
            return surface_response_from_eps(eps.value);
        };
        QuadratureValue c3 = lifshitz_integral(atom, g, options.rel_tolerance);
        QuadratureValue alpha_int = lifshitz_integral(atom, [](double) { return 1.0; }, options.rel_tolerance);
        return finish(c3, kk_error / 2 * alpha_int.value, options.rel_tolerance);
    }

    auto const& osc = std::get<OneOscillatorSurface>(surface);
    osc.validate();
    auto g = [&](double e) {
        double r = e / osc.energy_ev;
        return osc.g0 / (1 + r * r);
    };
    return finish(lifshitz_integral(atom, g, options.rel_tolerance), 0, options.rel_tolerance);
}

}  // namespace vdwg
