#include "vdwg/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "vdwg/error.hpp"
#include "vdwg/random.hpp"
#include "vdwg/units.hpp"

namespace vdwg
{
namespace
{
constexpr double fwhm_per_sigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)
double const sqrt_two_pi = std::sqrt(2 * units::pi);

double quantile(std::vector<double> values, double q)
{
    auto k = static_cast<std::size_t>(q * static_cast<double>(values.size() - 1));
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
    return values[k];
}

//! 1.4826 * median absolute deviation
double robust_scatter(std::vector<double> const& values)
{
    double med = quantile(values, 0.5);
    std::vector<double> dev(values.size());
    std::transform(values.begin(), values.end(), dev.begin(),
                   [med](double v) { return std::abs(v - med); });
    return 1.4826 * quantile(std::move(dev), 0.5);
}

struct PeakSeed
{
    double center;
    double height;
    double fwhm;
    double lo;  //!< fit window
    double hi;
};

/*!
 * Damped least squares for bg + sum_j A_j exp(-(x - c_j)^2 / (2 s_j^2)).
 *
 * Parameter layout: [bg, A_0, c_0, s_0, A_1, ...]. The background is kept
 * non-negative by projection.
 */
class ClusterFit
{
  public:
    ClusterFit(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {}

    Eigen::VectorXd residuals(Eigen::VectorXd const& p) const
    {
        Eigen::VectorXd r(static_cast<Eigen::Index>(x_.size()));
        for (std::size_t i = 0; i < x_.size(); ++i)
            r(static_cast<Eigen::Index>(i)) = y_[i] - model(p, x_[i]);
        return r;
    }

    Eigen::MatrixXd jacobian(Eigen::VectorXd const& p) const
    {
        auto const peaks = (p.size() - 1) / 3;
        Eigen::MatrixXd jac(static_cast<Eigen::Index>(x_.size()), p.size());
        for (std::size_t i = 0; i < x_.size(); ++i)
        {
            auto row = static_cast<Eigen::Index>(i);
            jac(row, 0) = 1;
            for (Eigen::Index j = 0; j < peaks; ++j)
            {
                double a = p(1 + 3 * j);
                double c = p(2 + 3 * j);
                double s = p(3 + 3 * j);
                double d = x_[i] - c;
                double e = std::exp(-d * d / (2 * s * s));
                jac(row, 1 + 3 * j) = e;
                jac(row, 2 + 3 * j) = a * e * d / (s * s);
                jac(row, 3 + 3 * j) = a * e * d * d / (s * s * s);
            }
        }
        return jac;
    }

    std::size_t size() const { return x_.size(); }

  private:
    static double model(Eigen::VectorXd const& p, double x)
    {
        double v = p(0);
        for (Eigen::Index j = 1; j + 2 < p.size(); j += 3)
        {
            double d = x - p(j + 1);
            v += p(j) * std::exp(-d * d / (2 * p(j + 2) * p(j + 2)));
        }
        return v;
    }

    std::vector<double> x_;
    std::vector<double> y_;
};

struct LmOutcome
{
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance;
    bool converged{};
};

LmOutcome levenberg_marquardt(ClusterFit const& fit,
                              Eigen::VectorXd params,
                              PeakFitOptions const& options)
{
    auto const n = params.size();
    auto scale_of = [&](Eigen::VectorXd const& p, Eigen::Index i) {
        if (i == 0)
        {
            double amp = 0;
            for (Eigen::Index j = 1; j < n; j += 3)
                amp = std::max(amp, std::abs(p(j)));
            return std::max(std::abs(p(0)), amp);
        }
        auto slot = (i - 1) % 3;
        if (slot == 0)
            return std::abs(p(i));
        // centers and widths both scale with the peak width
        return std::abs(p(i - slot + 2));
    };

    Eigen::VectorXd r = fit.residuals(params);
    double cost = r.squaredNorm();
    double lambda = 1e-3;
    LmOutcome out;

    for (int iter = 0; iter < options.max_iterations; ++iter)
    {
        Eigen::MatrixXd jac = fit.jacobian(params);
        Eigen::MatrixXd hess = jac.transpose() * jac;
        Eigen::VectorXd grad = jac.transpose() * r;
        Eigen::VectorXd diag = hess.diagonal().cwiseMax(1e-300);

        bool accepted = false;
        while (!accepted && lambda < 1e12)
        {
            Eigen::MatrixXd damped = hess;
            damped.diagonal() += lambda * diag;
            Eigen::VectorXd step = damped.ldlt().solve(grad);
            if (params(0) <= 0 && step(0) < 0)
            {
                // Background pinned at its bound: solve for the free parameters
                damped.row(0).setZero();
                damped.col(0).setZero();
                damped(0, 0) = 1;
                Eigen::VectorXd g = grad;
                g(0) = 0;
                step = damped.ldlt().solve(g);
            }
            Eigen::VectorXd trial = params + step;
            trial(0) = std::max(trial(0), 0.0);
            if (!trial.allFinite())
            {
                lambda *= 10;
                continue;
            }
            Eigen::VectorXd trial_r = fit.residuals(trial);
            double trial_cost = trial_r.squaredNorm();
            if (trial_cost <= cost)
            {
                double rel_change = 0;
                for (Eigen::Index i = 0; i < n; ++i)
                {
                    double scale = scale_of(trial, i);
                    if (scale > 0)
                        rel_change = std::max(rel_change, std::abs(trial(i) - params(i)) / scale);
                }
                params = trial;
                r = trial_r;
                double previous = cost;
                cost = trial_cost;
                lambda = std::max(lambda / 10, 1e-12);
                accepted = true;
                if (rel_change < options.rel_step_tolerance || previous - cost <= 1e-30 * previous)
                    out.converged = true;
            }
            else
            {
                lambda *= 10;
            }
        }
        // No downhill step exists at machine precision: stationary point
        if (!accepted)
            out.converged = true;
        if (out.converged)
            break;
    }

    out.params = params;
    Eigen::MatrixXd jac = fit.jacobian(params);
    Eigen::MatrixXd hess = jac.transpose() * jac;
    auto dof = static_cast<double>(fit.size()) - static_cast<double>(n);
    double variance = dof > 0 ? cost / dof : 0.0;
    out.covariance = variance * hess.completeOrthogonalDecomposition().pseudoInverse();
    return out;
}

std::string describe_centers(std::vector<std::size_t> const& indices,
                             std::span<double const> centers)
{
    std::ostringstream os;
    for (std::size_t k = 0; k < indices.size(); ++k)
    {
        if (k)
            os << ", ";
        os << "#" << indices[k] << " (" << centers[indices[k]] << " rad)";
    }
    return os.str();
}

}  // namespace

//---------------------------------------------------------------------------//
// PEAK EXTRACTION
//---------------------------------------------------------------------------//
double GaussianPeak::area() const
{
    return amplitude * sigma * sqrt_two_pi;
}

std::vector<GaussianPeak> fit_gaussian_peaks(AngularScan const& scan,
                                             std::span<double const> expected_centers,
                                             PeakFitOptions const& options)
{
    scan.validate();
    if (expected_centers.empty())
        return {};
    if (scan.size() < 5)
        throw InvalidInputError("scan has too few samples for peak fitting");
    for (std::size_t i = 1; i < expected_centers.size(); ++i)
    {
        if (!(expected_centers[i] > expected_centers[i - 1]))
            throw InvalidInputError("expected peak centers must be strictly increasing");
    }
    auto const& th = scan.theta_rad;
    auto const& y = scan.value;
    for (double c : expected_centers)
    {
        if (c < th.front() || c > th.back())
            throw InvalidInputError("expected peak center lies outside the scan");
    }

    double const background = quantile(y, 0.1);
    double const noise = robust_scatter(y);
    double const y_max = *std::max_element(y.begin(), y.end());

    // Seeds and detection
    std::vector<PeakSeed> seeds;
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < expected_centers.size(); ++i)
    {
        double c = expected_centers[i];
        double reach = (th.back() - th.front()) / 2;
        if (i > 0)
            reach = std::min(reach, (c - expected_centers[i - 1]) / 2);
        if (i + 1 < expected_centers.size())
            reach = std::min(reach, (expected_centers[i + 1] - c) / 2);

        auto first = std::lower_bound(th.begin(), th.end(), c - reach) - th.begin();
        auto last = std::upper_bound(th.begin(), th.end(), c + reach) - th.begin();
        if (last <= first)
        {
            missing.push_back(i);
            continue;
        }
        auto peak = std::max_element(y.begin() + first, y.begin() + last) - y.begin();
        double height = y[peak] - background;
        if (!(height > options.detection_threshold * noise) || !(height > 1e-9 * std::abs(y_max)))
        {
            missing.push_back(i);
            continue;
        }

        // Half-maximum crossings around the local maximum
        double half = background + height / 2;
        auto left = peak;
        while (left > first && y[left - 1] > half)
            --left;
        auto right = peak;
        while (right + 1 < last && y[right + 1] > half)
            ++right;
        auto crossing = [&](std::ptrdiff_t inside, std::ptrdiff_t outside) {
            double t = (y[inside] - half) / (y[inside] - y[outside]);
            return th[inside] + t * (th[outside] - th[inside]);
        };
        double fwhm = 0;
        if (left > first && right + 1 < last)
            fwhm = crossing(right, right + 1) - crossing(left, left - 1);
        double spacing = (th.back() - th.front()) / static_cast<double>(th.size() - 1);
        if (!(fwhm > 2 * spacing))
            fwhm = options.divergence_rad;
        fwhm = std::min(fwhm, 2 * reach);

        double w = options.window_fwhm * fwhm;
        seeds.push_back({c, height, fwhm, c - w, c + w});
    }
    if (!missing.empty())
    {
        throw MissingPeakError("no peak above the noise floor at expected center(s) "
                                   + describe_centers(missing, expected_centers),
                               missing.front());
    }

    // Overlapping windows are fitted together
    std::vector<GaussianPeak> result(seeds.size());
    std::size_t begin = 0;
    while (begin < seeds.size())
    {
        std::size_t end = begin + 1;
        double hi = seeds[begin].hi;
        while (end < seeds.size() && seeds[end].lo <= hi)
        {
            hi = std::max(hi, seeds[end].hi);
            ++end;
        }
        double lo = seeds[begin].lo;

        std::vector<double> xs;
        std::vector<double> ys;
        for (std::size_t i = 0; i < th.size(); ++i)
        {
            if (th[i] >= lo && th[i] <= hi)
            {
                xs.push_back(th[i]);
                ys.push_back(y[i]);
            }
        }
        auto const peaks = static_cast<Eigen::Index>(end - begin);
        if (static_cast<Eigen::Index>(xs.size()) < 5 * peaks)
        {
            std::ostringstream os;
            os << "fewer than 5 samples per peak in the fit window of the peak at "
               << seeds[begin].center << " rad";
            throw InvalidInputError(os.str());
        }

        Eigen::VectorXd p(1 + 3 * peaks);
        p(0) = std::max(background, 0.0);
        for (Eigen::Index j = 0; j < peaks; ++j)
        {
            auto const& s = seeds[begin + static_cast<std::size_t>(j)];
            p(1 + 3 * j) = s.height;
            p(2 + 3 * j) = s.center;
            p(3 + 3 * j) = s.fwhm / fwhm_per_sigma;
        }

        ClusterFit fit(std::move(xs), std::move(ys));
        LmOutcome lm = levenberg_marquardt(fit, p, options);
        for (Eigen::Index j = 0; j < peaks; ++j)
        {
            std::size_t idx = begin + static_cast<std::size_t>(j);
            if (!lm.converged)
            {
                std::ostringstream os;
                os << "Gaussian fit did not converge in " << options.max_iterations
                   << " iterations for the peak at " << expected_centers[idx] << " rad";
                throw FitFailureError(os.str());
            }
            GaussianPeak& out = result[idx];
            out.background = lm.params(0);
            out.amplitude = lm.params(1 + 3 * j);
            out.center = lm.params(2 + 3 * j);
            out.sigma = std::abs(lm.params(3 + 3 * j));
            if (!(out.amplitude > 0) || !(out.sigma > 0))
            {
                std::ostringstream os;
                os << "Gaussian fit collapsed (non-positive amplitude or width) for the peak at "
                   << expected_centers[idx] << " rad";
                throw FitFailureError(os.str());
            }
            // d(area)/dA and d(area)/ds
            Eigen::Vector2d grad(out.sigma * sqrt_two_pi, out.amplitude * sqrt_two_pi);
            Eigen::Matrix2d cov;
            cov << lm.covariance(1 + 3 * j, 1 + 3 * j), lm.covariance(1 + 3 * j, 3 + 3 * j),
                lm.covariance(3 + 3 * j, 1 + 3 * j), lm.covariance(3 + 3 * j, 3 + 3 * j);
            out.area_sigma = std::sqrt(std::max(0.0, grad.dot(cov * grad)));
        }
        begin = end;
    }
    return result;
}

OrderIntensities normalize_orders(std::span<std::pair<int, GaussianPeak> const> peaks)
{
    if (peaks.size() < 2)
        throw InvalidInputError("normalization needs at least two peaks");
    double total = 0;
    double total_var = 0;
    bool any_sigma = false;
    for (auto const& [n, peak] : peaks)
    {
        double a = peak.area();
        if (!(a >= 0) || !std::isfinite(a))
            throw InvalidInputError("peak areas must be finite and non-negative");
        total += a;
        total_var += peak.area_sigma * peak.area_sigma;
        any_sigma = any_sigma || peak.area_sigma > 0;
    }
    if (!(total > 0))
        throw InvalidInputError("total peak area is zero");

    OrderIntensities out;
    for (auto const& [n, peak] : peaks)
    {
        double r = peak.area() / total;
        OrderValue v{r, std::nullopt};
        if (any_sigma)
        {
            double own = peak.area_sigma * peak.area_sigma;
            double var = ((1 - r) * (1 - r) * own + r * r * (total_var - own)) / (total * total);
            v.sigma = std::sqrt(std::max(var, 0.0));
        }
        if (!out.orders.emplace(n, v).second)
            throw InvalidInputError("duplicate diffraction order " + std::to_string(n));
    }
    return out;
}

//---------------------------------------------------------------------------//
// C3 FIT
//---------------------------------------------------------------------------//
namespace
{
struct Observation
{
    std::vector<int> orders;
    std::vector<double> value;
    std::vector<double> weight;
    bool weighted{};
};

Observation prepare(OrderIntensities const& observed)
{
    if (observed.orders.size() < 3)
        throw InvalidInputError("C3 fit needs at least three distinct orders");
    double total = observed.total();
    if (!(total > 0) || !std::isfinite(total))
        throw InvalidInputError("observed intensities must have a positive total");

    Observation obs;
    obs.weighted = observed.has_sigma();
    for (auto const& [n, v] : observed.orders)
    {
        if (!(v.intensity >= 0))
            throw InvalidInputError("observed intensities must be non-negative");
        if (obs.weighted && !(*v.sigma > 0))
            obs.weighted = false;
    }
    for (auto const& [n, v] : observed.orders)
    {
        obs.orders.push_back(n);
        obs.value.push_back(v.intensity / total);
        double s = obs.weighted ? *v.sigma / total : 1.0;
        obs.weight.push_back(1 / (s * s));
    }
    return obs;
}

double chi2_of(Observation const& obs,
               GratingGeometry const& geom,
               BeamState const& beam,
               double c3,
               SlitQuadratureOptions const& quadrature,
               std::map<int, double>* residuals = nullptr)
{
    ModelIntensities model = order_intensities(std::span<int const>(obs.orders),
                                               Potential{c3}, geom, beam, quadrature);
    double chi2 = 0;
    for (std::size_t i = 0; i < obs.orders.size(); ++i)
    {
        double d = obs.value[i] - model.intensities.orders.at(obs.orders[i]).intensity;
        chi2 += obs.weight[i] * d * d;
        if (residuals)
            (*residuals)[obs.orders[i]] = d;
    }
    if (!std::isfinite(chi2))
        throw NumericalToleranceError("chi^2 evaluation", chi2, 0);
    return chi2;
}

}  // namespace

double c3_chi2(OrderIntensities const& observed,
               GratingGeometry const& geom,
               BeamState const& beam,
               double c3_mev_nm3,
               SlitQuadratureOptions const& quadrature)
{
    return chi2_of(prepare(observed), geom, beam, c3_mev_nm3, quadrature);
}

std::vector<std::size_t> interior_minima(std::span<double const> values)
{
    std::vector<std::size_t> minima;
    for (std::size_t i = 1; i + 1 < values.size(); ++i)
    {
        if (values[i] < values[i - 1] && values[i] <= values[i + 1])
            minima.push_back(i);
    }
    return minima;
}

CombinedC3 combine_fits(std::span<FitResult const> fits)
{
    if (fits.empty())
        throw InvalidInputError("no fits to combine");
    double wsum = 0;
    double sum = 0;
    for (auto const& f : fits)
    {
        if (!(f.uncertainty > 0) || !std::isfinite(f.uncertainty))
            throw InvalidInputError("fit uncertainty must be positive and finite");
        double w = 1 / (f.uncertainty * f.uncertainty);
        wsum += w;
        sum += w * f.c3_hat;
    }
    return {sum / wsum, 1 / std::sqrt(wsum)};
}

FitResult fit_c3(OrderIntensities const& observed,
                 GratingGeometry const& geom,
                 BeamState const& beam,
                 C3Bounds const& bounds,
                 C3FitOptions const& options)
{
    geom.validate();
    if (!(bounds.lo_mev_nm3 >= 0) || !(bounds.hi_mev_nm3 > bounds.lo_mev_nm3))
        throw InvalidInputError("C3 bounds must satisfy 0 <= lo < hi");
    if (options.scan_points < 3)
        throw InvalidInputError("chi^2 scan needs at least three points");
    Observation const obs = prepare(observed);

    FitResult result;
    auto chi2 = [&](double c3) {
        ++result.iterations;
        return chi2_of(obs, geom, beam, c3, options.quadrature);
    };

    // Coarse scan: bracket and unimodality check
    double const lo = bounds.lo_mev_nm3;
    double const hi = bounds.hi_mev_nm3;
    auto const k = static_cast<std::size_t>(options.scan_points);
    std::vector<double> xs(k);
    std::vector<double> fs(k);
    for (std::size_t i = 0; i < k; ++i)
    {
        xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(k - 1);
        fs[i] = chi2(xs[i]);
    }
    std::vector<std::size_t> const minima = interior_minima(fs);
    if (minima.size() > 1)
    {
        std::ostringstream os;
        os << "chi^2(C3) has " << minima.size() << " local minima on [" << lo << ", " << hi
           << "] meV nm^3 (near";
        for (auto i : minima)
            os << " " << xs[i];
        os << ")";
        throw MultimodalError(os.str());
    }
    auto best = static_cast<std::size_t>(std::min_element(fs.begin(), fs.end()) - fs.begin());
    double bracket_lo = xs[best == 0 ? 0 : best - 1];
    double bracket_hi = xs[best + 1 == k ? k - 1 : best + 1];

    // Golden section with parabolic steps (Brent)
    std::uintmax_t max_iter = 200;
    auto [c3_hat, chi2_min] = boost::math::tools::brent_find_minima(
        chi2, bracket_lo, bracket_hi, std::numeric_limits<double>::digits / 2, max_iter);

    if (c3_hat - lo < options.c3_tolerance || hi - c3_hat < options.c3_tolerance)
    {
        double bound = c3_hat - lo < options.c3_tolerance ? lo : hi;
        std::ostringstream os;
        os << "chi^2 minimum at the search bound C3 = " << bound << " meV nm^3";
        throw BoundarySolutionError(os.str(), bound);
    }

    result.c3_hat = c3_hat;
    result.chi2 = chi2_of(obs, geom, beam, c3_hat, options.quadrature, &result.residuals);
    result.dof = static_cast<int>(obs.orders.size()) - 2;
    result.rescaled = !obs.weighted;

    // Delta chi^2 interval; unweighted data use the residual variance
    double delta = 1;
    if (result.rescaled)
        delta = result.chi2 / std::max(result.dof, 1);
    double const level = result.chi2 + delta;

    auto half_width = [&](double direction) {
        double const bound = direction > 0 ? hi : lo;
        double step = options.c3_tolerance;
        double inner = c3_hat;
        while (true)
        {
            double outer = c3_hat + direction * step;
            if ((outer - bound) * direction >= 0)
            {
                if (chi2(bound) < level)
                    return std::abs(bound - c3_hat);
                outer = bound;
            }
            if (chi2(outer) >= level)
            {
                std::uintmax_t it = 100;
                auto f = [&](double x) { return chi2(x) - level; };
                auto tol = boost::math::tools::eps_tolerance<double>(30);
                auto [a, b] = boost::math::tools::toms748_solve(
                    f, std::min(inner, outer), std::max(inner, outer), tol, it);
                return std::abs((a + b) / 2 - c3_hat);
            }
            inner = outer;
            step *= 2;
        }
    };
    double const upper = half_width(+1);
    double const lower = half_width(-1);
    result.uncertainty = std::max((upper + lower) / 2, options.c3_tolerance);
    return result;
}

//---------------------------------------------------------------------------//
// SYNTHETIC DATA
//---------------------------------------------------------------------------//
std::vector<double> ScanGrid::angles() const
{
    if (points < 2 || !(theta_max > theta_min))
        throw InvalidInputError("scan grid needs >= 2 points on a non-empty range");
    std::vector<double> out(points);
    double step = (theta_max - theta_min) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i)
        out[i] = theta_min + step * static_cast<double>(i);
    out.back() = theta_max;
    return out;
}

ScanGrid default_scan_grid(BeamState const& beam,
                           GratingGeometry const& geom,
                           int slit_count,
                           int n_max,
                           double samples_per_fwhm)
{
    if (slit_count < 1 || n_max < 0 || !(samples_per_fwhm > 0))
        throw InvalidInputError("invalid scan grid parameters");
    double ratio = beam.wavelength_nm() / geom.period_nm;
    double edge = (n_max + 0.5) * ratio;
    if (edge >= 1)
        throw EvanescentOrderError(n_max, n_max * ratio);
    double half_range = std::asin(edge);
    // Zeroth-order FWHM of |sin(N x)/sin(x)|^2 in theta
    double fwhm = 0.8859 * ratio / slit_count;
    double step = fwhm / samples_per_fwhm;
    auto points = static_cast<std::size_t>(std::ceil(2 * half_range / step)) + 1;
    return {-half_range, half_range, points};
}

AngularScan synthesize_scan(Potential const& pot,
                            GratingGeometry const& geom,
                            BeamState const& beam,
                            int slit_count,
                            double noise_fraction,
                            std::uint64_t seed,
                            ScanGrid const& grid,
                            SlitQuadratureOptions const& quadrature)
{
    if (!(noise_fraction >= 0) || !std::isfinite(noise_fraction))
        throw InvalidInputError("noise fraction must be non-negative");
    auto angles = grid.angles();
    AngularScan scan = angular_pattern(angles, slit_count, pot, geom, beam, quadrature);
    if (noise_fraction > 0)
    {
        Rng rng(seed);
        for (double& v : scan.value)
            v = std::max(0.0, v * (1 + noise_fraction * rng.normal()));
    }
    return scan;
}

}  // namespace vdwg
