#include "vdwg/grating.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "vdwg/error.hpp"
#include "vdwg/quadrature.hpp"
#include "vdwg/units.hpp"

namespace vdwg
{
namespace
{
using cdouble = std::complex<double>;

constexpr int moment_degree = 20;

//! hbar*v in eV nm
double hbar_v_ev_nm(double velocity_mps)
{
    return units::hbar_ev_s * velocity_mps * units::nm_per_m;
}

void require_finite(double value, char const* what)
{
    if (!std::isfinite(value))
    {
        std::ostringstream os;
        os << what << " must be finite";
        throw InvalidInputError(os.str());
    }
}

}  // namespace

//---------------------------------------------------------------------------//
// DOMAIN TYPES
//---------------------------------------------------------------------------//
void GratingGeometry::validate() const
{
    require_finite(period_nm, "grating period");
    require_finite(slit_width_nm, "slit width");
    require_finite(bar_depth_nm, "bar depth");
    require_finite(wedge_angle_rad, "wedge angle");
    if (!(period_nm > 0))
        throw InvalidInputError("grating period must be positive");
    if (!(slit_width_nm > 0 && slit_width_nm < period_nm))
        throw InvalidInputError("slit width must lie in (0, period)");
    if (!(bar_depth_nm > 0))
        throw InvalidInputError("bar depth must be positive");
    if (!(wedge_angle_rad >= 0 && wedge_angle_rad < units::pi / 2))
        throw InvalidInputError("wedge angle must lie in [0, pi/2)");
}

BeamState::BeamState(double mass_u, double velocity_mps, double velocity_spread)
    : mass_u_(mass_u)
    , velocity_mps_(velocity_mps)
    , velocity_spread_(velocity_spread)
    , wavelength_nm_(de_broglie_wavelength_nm(mass_u, velocity_mps))
{
    if (!(velocity_spread >= 0 && velocity_spread < 1))
        throw InvalidInputError("velocity spread dv/u must lie in [0, 1)");
}

double BeamState::wavenumber_per_nm() const
{
    return 2 * units::pi / wavelength_nm_;
}

BeamState BeamState::with_velocity(double velocity_mps) const
{
    return BeamState(mass_u_, velocity_mps, velocity_spread_);
}

void Potential::validate() const
{
    if (!(c3_mev_nm3 >= 0) || !std::isfinite(c3_mev_nm3))
        throw InvalidInputError("C3 must be finite and non-negative");
}

void AngularScan::validate() const
{
    if (slit_count < 1)
        throw InvalidInputError("slit count must be at least 1");
    if (theta_rad.size() != value.size())
        throw InvalidInputError("angle and value columns differ in length");
    for (std::size_t i = 1; i < theta_rad.size(); ++i)
    {
        if (!(theta_rad[i] > theta_rad[i - 1]))
            throw InvalidInputError("scan angles must be strictly increasing");
    }
}

double OrderIntensities::total() const
{
    double sum = 0;
    for (auto const& [n, v] : orders)
        sum += v.intensity;
    return sum;
}

std::vector<int> OrderIntensities::order_numbers() const
{
    std::vector<int> result;
    result.reserve(orders.size());
    for (auto const& [n, v] : orders)
        result.push_back(n);
    return result;
}

bool OrderIntensities::has_sigma() const
{
    return !orders.empty()
           && std::all_of(orders.begin(), orders.end(), [](auto const& kv) {
                  return kv.second.sigma.has_value();
              });
}

//---------------------------------------------------------------------------//
// ELEMENTARY OPERATIONS
//---------------------------------------------------------------------------//
double de_broglie_wavelength_nm(double mass_u, double velocity_mps)
{
    if (!(mass_u > 0) || !std::isfinite(mass_u))
        throw InvalidInputError("mass must be positive");
    if (!(velocity_mps > 0) || !std::isfinite(velocity_mps))
        throw InvalidInputError("velocity must be positive");
    double planck_j_s = units::planck_ev_s * units::elementary_charge_c;
    double momentum = mass_u * units::atomic_mass_kg * velocity_mps;
    return planck_j_s / momentum * units::nm_per_m;
}

double diffraction_angle(int order, double wavelength_nm, double period_nm)
{
    if (!(wavelength_nm > 0) || !(period_nm > 0))
        throw InvalidInputError("wavelength and period must be positive");
    double s = order * wavelength_nm / period_nm;
    if (std::abs(s) > 1)
        throw EvanescentOrderError(order, s);
    return std::asin(s);
}

double bar_transmission_phase(double zeta_nm,
                              Potential const& pot,
                              GratingGeometry const& geom,
                              BeamState const& beam)
{
    if (!(zeta_nm > 0))
        throw InvalidInputError("distance from the bar wall must be positive");
    double c3_ev = pot.c3_mev_nm3 / units::mev_per_ev;
    double t = geom.bar_depth_nm;
    double straight = c3_ev * t
                      / (hbar_v_ev_nm(beam.velocity_mps()) * zeta_nm * zeta_nm
                         * zeta_nm);
    if (geom.wedge_angle_rad == 0)
        return straight;
    double u = t / zeta_nm * std::tan(geom.wedge_angle_rad);
    return straight * (1 + u / 2) / ((1 + u) * (1 + u));
}

double grating_factor(double half_phase, int slit_count)
{
    // Reduce to the nearest principal maximum: x = m pi + delta, and
    // (sin(N x)/sin(x))^2 = (sin(N delta)/sin(delta))^2
    double m = std::nearbyint(half_phase / units::pi);
    double delta = half_phase - m * units::pi;
    double n = slit_count;
    if (std::abs(delta) < 1e-8)
        return n * n * (1 - (n * n - 1) * delta * delta / 3);
    double ratio = std::sin(n * delta) / std::sin(delta);
    return ratio * ratio;
}

//---------------------------------------------------------------------------//
// SLIT INTEGRATOR
//---------------------------------------------------------------------------//
SlitIntegrator::SlitIntegrator(Potential const& pot,
                               GratingGeometry const& geom,
                               BeamState const& beam,
                               double max_kappa_per_nm,
                               SlitQuadratureOptions const& options)
    : half_width_(geom.slit_width_nm / 2)
    , wavenumber_(beam.wavenumber_per_nm())
    , wavelength_(beam.wavelength_nm())
    , max_kappa_(std::abs(max_kappa_per_nm))
    , phase_scale_(pot.c3_mev_nm3 / units::mev_per_ev * geom.bar_depth_nm
                   / hbar_v_ev_nm(beam.velocity_mps()))
    , wedge_offset_(geom.bar_depth_nm * std::tan(geom.wedge_angle_rad))
    , options_(options)
{
    pot.validate();
    geom.validate();
    if (!(options.rel_tolerance > 0) || !(options.tail_rel_tolerance > 0)
        || !(options.max_panel_phase > 0))
    {
        throw InvalidInputError("quadrature tolerances must be positive");
    }

    // Wall cutoff: the largest zeta whose first neglected endpoint term is
    // below the tail tolerance
    double const tail_tol = options_.tail_rel_tolerance * half_width_;
    if (phase_scale_ > 0)
    {
        auto next_term = [&](double z) {
            double p1 = std::abs(phase_rate(z));
            double p2 = std::abs(phase_curvature(z));
            return (max_kappa_ * p1 + p2) / (p1 * p1 * p1);
        };
        double lo = 1e-12 * half_width_;
        double hi = half_width_ / 2;
        if (!(next_term(lo) <= tail_tol))
        {
            // Phase too weak for an asymptotic treatment; the strip is
            // shorter than the tail tolerance and is dropped
            zeta_min_ = lo;
        }
        else if (next_term(hi) <= tail_tol)
        {
            zeta_min_ = hi;
        }
        else
        {
            for (int i = 0; i < 200 && hi / lo > 1 + 1e-6; ++i)
            {
                double mid = std::sqrt(lo * hi);
                (next_term(mid) <= tail_tol ? lo : hi) = mid;
            }
            zeta_min_ = lo;
        }
    }

    double max_phase = options_.max_panel_phase;
    double const target = options_.rel_tolerance * half_width_;
    double achieved = 0;
    for (int pass = 0; pass <= options_.max_refinements; ++pass)
    {
        build_panels(max_phase);
        achieved = std::max(integrate(0.0).error, integrate(max_kappa_).error);
        if (achieved <= target)
        {
            panel_error_ = achieved;
            build_moments();
            return;
        }
        max_phase /= 2;
    }
    throw NumericalToleranceError("slit integral panel refinement", achieved, target);
}

double SlitIntegrator::phase(double zeta) const
{
    double b = wedge_offset_;
    return phase_scale_ * (zeta + b / 2) / (zeta * zeta * (zeta + b) * (zeta + b));
}

// Logarithmic derivative L = phi'/phi of the closed-form phase
double SlitIntegrator::phase_rate(double zeta) const
{
    double b = wedge_offset_;
    double log_rate = 1 / (zeta + b / 2) - 2 / zeta - 2 / (zeta + b);
    return phase(zeta) * log_rate;
}

double SlitIntegrator::phase_curvature(double zeta) const
{
    double b = wedge_offset_;
    double log_rate = 1 / (zeta + b / 2) - 2 / zeta - 2 / (zeta + b);
    double log_rate_slope = -1 / ((zeta + b / 2) * (zeta + b / 2))
                            + 2 / (zeta * zeta)
                            + 2 / ((zeta + b) * (zeta + b));
    return phase(zeta) * (log_rate * log_rate + log_rate_slope);
}

void SlitIntegrator::build_panels(double max_phase)
{
    panels_.clear();
    nodes_.clear();

    auto rate = [&](double z) {
        double r = max_kappa_;
        if (phase_scale_ > 0)
            r += std::abs(phase_rate(z));
        return r;
    };
    // phi is monotone, so this is the total phase swept over [lo, hi]
    auto advance = [&](double lo, double hi) {
        double a = max_kappa_ * (hi - lo);
        if (phase_scale_ > 0)
            a += std::abs(phase(lo) - phase(hi));
        return a;
    };

    double const max_width = half_width_ / 4;
    double hi = half_width_;
    while (hi > zeta_min_)
    {
        // |phi'| grows toward the wall, so the rate at hi bounds the width
        double r = rate(hi);
        double width = r > 0 ? max_phase / r : max_width;
        width = std::min({width, max_width, hi - zeta_min_});
        for (double a = advance(hi - width, hi); a > max_phase; a = advance(hi - width, hi))
            width *= std::max(0.9 * max_phase / a, 1e-3);
        double lo = hi - width <= zeta_min_ ? zeta_min_ : hi - width;
        if (hi - lo <= 0)
            break;
        panels_.push_back({lo, hi});
        hi = lo;
    }

    auto const& rule = gauss_kronrod15();
    nodes_.reserve(panels_.size() * rule.size());
    for (auto const& p : panels_)
    {
        double center = (p.lo + p.hi) / 2;
        double half = (p.hi - p.lo) / 2;
        for (auto const& q : rule)
        {
            double z = center + half * q.abscissa;
            cdouble tau = phase_scale_ > 0 ? std::polar(1.0, phase(z)) : cdouble(1, 0);
            nodes_.push_back({z, half * q.kronrod_weight, half * q.gauss_weight, tau});
        }
    }
}

SlitIntegrator::Sums SlitIntegrator::integrate(double kappa) const
{
    std::size_t const per_panel = gauss_kronrod15().size();
    Sums sums{};
    for (std::size_t p = 0; p < panels_.size(); ++p)
    {
        cdouble k_sum{};
        cdouble g_sum{};
        for (std::size_t j = p * per_panel; j < (p + 1) * per_panel; ++j)
        {
            auto const& node = nodes_[j];
            cdouble f = std::cos(kappa * (half_width_ - node.zeta)) * node.tau;
            k_sum += node.kronrod_weight * f;
            g_sum += node.gauss_weight * f;
        }
        sums.kronrod += k_sum;
        sums.error += std::abs(k_sum - g_sum);
    }
    return sums;
}

void SlitIntegrator::build_moments()
{
    // Group panels so that kappa_max * |zeta - center| stays below ~1 inside
    // a group; cos(kappa (a - zeta)) is then expanded to Taylor degree 20
    groups_.clear();
    double const reach = 0.25;
    double const group_width = max_kappa_ > 0 ? 2 * reach / max_kappa_ : 2 * half_width_;
    std::size_t const per_panel = gauss_kronrod15().size();

    std::size_t p = 0;
    while (p < panels_.size())
    {
        // Panels are ordered from the slit center toward the wall
        double group_hi = panels_[p].hi;
        std::size_t end = p;
        while (end < panels_.size() && group_hi - panels_[end].lo <= group_width)
            ++end;
        if (end == p)
            end = p + 1;
        double group_lo = panels_[end - 1].lo;

        MomentGroup group{(group_lo + group_hi) / 2, std::vector<cdouble>(moment_degree + 1)};
        for (std::size_t j = p * per_panel; j < end * per_panel; ++j)
        {
            auto const& node = nodes_[j];
            double u = node.zeta - group.center;
            cdouble term = node.kronrod_weight * node.tau;
            for (auto& m : group.moments)
            {
                m += term;
                term *= u;
            }
        }
        groups_.push_back(std::move(group));
        p = end;
    }
}

std::complex<double> SlitIntegrator::integrate_moments(double kappa) const
{
    // cos(alpha - kappa u) = cos(alpha) cos(kappa u) + sin(alpha) sin(kappa u)
    std::array<double, moment_degree + 1> coeff{};
    double c = 1;
    for (int m = 0; m <= moment_degree; ++m)
    {
        // (-1)^floor(m/2) kappa^m / m!
        coeff[m] = ((m / 2) % 2 == 0) ? c : -c;
        c *= kappa / (m + 1);
    }
    cdouble total{};
    for (auto const& g : groups_)
    {
        cdouble even{};
        cdouble odd{};
        for (int m = 0; m <= moment_degree; m += 2)
            even += coeff[m] * g.moments[m];
        for (int m = 1; m <= moment_degree; m += 2)
            odd += coeff[m] * g.moments[m];
        double alpha = kappa * (half_width_ - g.center);
        total += std::cos(alpha) * even + std::sin(alpha) * odd;
    }
    return total;
}

std::complex<double> SlitIntegrator::tail(double kappa) const
{
    if (!(phase_scale_ > 0) || tail_error(kappa) >= zeta_min_)
        return {};
    // Two terms of the endpoint expansion of int_0^z F exp(i phi)
    double z = zeta_min_;
    double f = std::cos(kappa * (half_width_ - z));
    double df = kappa * std::sin(kappa * (half_width_ - z));
    double p1 = phase_rate(z);
    double p2 = phase_curvature(z);
    cdouble const i(0, 1);
    cdouble g0 = f / (i * p1);
    cdouble dg0 = (df * p1 - f * p2) / (i * p1 * p1);
    cdouble g1 = dg0 / (i * p1);
    return std::polar(1.0, phase(z)) * (g0 - g1);
}

double SlitIntegrator::tail_error(double kappa) const
{
    if (!(phase_scale_ > 0))
        return 0;
    double z = zeta_min_;
    double p1 = std::abs(phase_rate(z));
    double p2 = std::abs(phase_curvature(z));
    double bound = (std::abs(kappa) * p1 + p2) / (p1 * p1 * p1);
    // Outside the asymptotic regime the strip itself is the bound
    return std::min(bound, z);
}

SlitAmplitude SlitIntegrator::amplitude(double theta_rad) const
{
    if (!(std::abs(theta_rad) < units::pi / 2))
        throw InvalidInputError("diffraction angle must satisfy |theta| < pi/2");
    double kappa = wavenumber_ * std::sin(theta_rad);
    if (std::abs(kappa) > max_kappa_ * (1 + 1e-12) + 1e-300)
        throw InvalidInputError("angle exceeds the range this slit integrator was built for");

    cdouble value = integrate_moments(kappa) + tail(kappa);
    // The fine-panel estimate is dominated by the vdW phase and was taken at
    // both ends of the kappa range during construction
    double error = panel_error_ + tail_error(kappa);

    double const target = options_.rel_tolerance * half_width_;
    if (error > target)
        throw NumericalToleranceError("slit amplitude quadrature", error, target);

    double prefactor = 2 * std::cos(theta_rad) / std::sqrt(wavelength_);
    return {prefactor * value, prefactor * error};
}

//---------------------------------------------------------------------------//
// INTENSITIES
//---------------------------------------------------------------------------//
namespace
{
struct RawIntensities
{
    std::vector<double> value;
    std::vector<double> error;
};

std::vector<double> principal_angles(std::span<int const> orders,
                                     BeamState const& beam,
                                     GratingGeometry const& geom)
{
    std::vector<double> angles;
    angles.reserve(orders.size());
    for (int n : orders)
        angles.push_back(diffraction_angle(n, beam.wavelength_nm(), geom.period_nm));
    return angles;
}

double max_kappa(std::span<double const> angles, BeamState const& beam)
{
    double m = 0;
    for (double a : angles)
        m = std::max(m, std::abs(std::sin(a)));
    return beam.wavenumber_per_nm() * m;
}

//! |f_slit|^2 at fixed angles; the N^2 grating factor is common and dropped
RawIntensities slit_intensities(std::span<double const> angles,
                                Potential const& pot,
                                GratingGeometry const& geom,
                                BeamState const& beam,
                                SlitQuadratureOptions const& options)
{
    SlitIntegrator integrator(pot, geom, beam, max_kappa(angles, beam), options);
    RawIntensities raw;
    for (double a : angles)
    {
        SlitAmplitude amp = integrator.amplitude(a);
        double mag = std::abs(amp.value);
        raw.value.push_back(mag * mag);
        raw.error.push_back(2 * mag * amp.error_estimate
                            + amp.error_estimate * amp.error_estimate);
    }
    return raw;
}

ModelIntensities normalize(std::span<int const> orders, RawIntensities const& raw)
{
    double total = std::accumulate(raw.value.begin(), raw.value.end(), 0.0);
    double total_error = std::accumulate(raw.error.begin(), raw.error.end(), 0.0);
    if (!(total > 0))
        throw InvalidInputError("total diffracted intensity vanishes");

    ModelIntensities result;
    for (std::size_t i = 0; i < orders.size(); ++i)
    {
        double r = raw.value[i] / total;
        result.intensities.orders[orders[i]] = OrderValue{r, std::nullopt};
        result.error_estimate[orders[i]] = (raw.error[i] + r * total_error) / total;
    }
    return result;
}

std::vector<int> symmetric_orders(int n_max)
{
    if (n_max < 0)
        throw InvalidInputError("maximum order must be non-negative");
    std::vector<int> orders;
    for (int n = -n_max; n <= n_max; ++n)
        orders.push_back(n);
    return orders;
}

void check_distinct(std::span<int const> orders)
{
    if (orders.empty())
        throw InvalidInputError("order set is empty");
    std::vector<int> sorted(orders.begin(), orders.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw InvalidInputError("order set contains duplicates");
}

}  // namespace

SlitAmplitude slit_amplitude(double theta_rad,
                             Potential const& pot,
                             GratingGeometry const& geom,
                             BeamState const& beam,
                             SlitQuadratureOptions const& options)
{
    if (!(std::abs(theta_rad) < units::pi / 2))
        throw InvalidInputError("diffraction angle must satisfy |theta| < pi/2");
    double kappa = beam.wavenumber_per_nm() * std::sin(theta_rad);
    SlitIntegrator integrator(pot, geom, beam, kappa, options);
    return integrator.amplitude(theta_rad);
}

ModelIntensities order_intensities(std::span<int const> orders,
                                   Potential const& pot,
                                   GratingGeometry const& geom,
                                   BeamState const& beam,
                                   SlitQuadratureOptions const& options)
{
    check_distinct(orders);
    geom.validate();
    auto angles = principal_angles(orders, beam, geom);
    return normalize(orders, slit_intensities(angles, pot, geom, beam, options));
}

ModelIntensities order_intensities(int n_max,
                                   Potential const& pot,
                                   GratingGeometry const& geom,
                                   BeamState const& beam,
                                   SlitQuadratureOptions const& options)
{
    auto orders = symmetric_orders(n_max);
    return order_intensities(std::span<int const>(orders), pot, geom, beam, options);
}

AngularScan angular_pattern(std::span<double const> theta_grid,
                            int slit_count,
                            Potential const& pot,
                            GratingGeometry const& geom,
                            BeamState const& beam,
                            SlitQuadratureOptions const& options)
{
    AngularScan scan;
    scan.slit_count = slit_count;
    scan.theta_rad.assign(theta_grid.begin(), theta_grid.end());
    scan.value.assign(theta_grid.size(), 0.0);
    scan.validate();
    geom.validate();
    if (theta_grid.empty())
        return scan;
    for (double t : theta_grid)
    {
        if (!(std::abs(t) < units::pi / 2))
            throw InvalidInputError("scan angles must satisfy |theta| < pi/2");
    }

    SlitIntegrator integrator(pot, geom, beam, max_kappa(theta_grid, beam), options);
    double const half_kd = beam.wavenumber_per_nm() * geom.period_nm / 2;
    for (std::size_t i = 0; i < theta_grid.size(); ++i)
    {
        double theta = theta_grid[i];
        double envelope = std::norm(integrator.amplitude(theta).value);
        scan.value[i] = grating_factor(half_kd * std::sin(theta), slit_count) * envelope;
    }
    return scan;
}

ModelIntensities
velocity_averaged_intensities(int n_max,
                              Potential const& pot,
                              GratingGeometry const& geom,
                              BeamState const& beam,
                              int quad_points,
                              SlitQuadratureOptions const& options)
{
    if (quad_points < 1 || (quad_points > 1 && (quad_points < 3 || quad_points % 2 == 0)))
        throw InvalidInputError("velocity quadrature needs 1 or an odd number >= 3 of points");

    auto orders = symmetric_orders(n_max);
    geom.validate();
    auto angles = principal_angles(orders, beam, geom);

    HermiteRule rule = gauss_hermite(quad_points);
    double const u = beam.velocity_mps();
    double const fwhm = beam.velocity_spread() * u;
    double const sigma = fwhm / (2 * std::sqrt(2 * std::log(2.0)));
    double const weight_norm = std::sqrt(units::pi);

    RawIntensities avg{std::vector<double>(orders.size(), 0.0),
                       std::vector<double>(orders.size(), 0.0)};
    for (int q = 0; q < quad_points; ++q)
    {
        double v = u + std::sqrt(2.0) * sigma * rule.nodes[q];
        if (!(v > 0))
            throw InvalidInputError("velocity spread too wide: quadrature node at v <= 0");
        double w = quad_points == 1 ? 1.0 : rule.weights[q] / weight_norm;
        // The integrator range covers the fixed angles at every node velocity
        BeamState node_beam = beam.with_velocity(v);
        auto raw = slit_intensities(angles, pot, geom, node_beam, options);
        for (std::size_t i = 0; i < orders.size(); ++i)
        {
            avg.value[i] += w * raw.value[i];
            avg.error[i] += w * raw.error[i];
        }
    }
    return normalize(orders, avg);
}

}  // namespace vdwg
