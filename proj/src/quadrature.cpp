#include "vdwg/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "vdwg/error.hpp"

namespace vdwg
{
namespace
{
std::array<KronrodNode, 15> make_gk15()
{
    using boost::math::quadrature::gauss;
    using boost::math::quadrature::gauss_kronrod;
    auto const& kx = gauss_kronrod<double, 15>::abscissa();
    auto const& kw = gauss_kronrod<double, 15>::weights();
    auto const& gx = gauss<double, 7>::abscissa();
    auto const& gw = gauss<double, 7>::weights();

    auto gauss_weight = [&](double x) {
        for (std::size_t j = 0; j < gx.size(); ++j)
        {
            if (std::abs(gx[j] - x) < 1e-12)
                return gw[j];
        }
        return 0.0;
    };

    std::array<KronrodNode, 15> result{};
    std::size_t next = 0;
    for (std::size_t i = 0; i < kx.size(); ++i)
    {
        double g = gauss_weight(kx[i]);
        result[next++] = {kx[i], kw[i], g};
        if (kx[i] != 0.0)
            result[next++] = {-kx[i], kw[i], g};
    }
    std::sort(result.begin(), result.end(), [](auto const& a, auto const& b) {
        return a.abscissa < b.abscissa;
    });
    return result;
}
}  // namespace

std::array<KronrodNode, 15> const& gauss_kronrod15()
{
    static std::array<KronrodNode, 15> const rule = make_gk15();
    return rule;
}

HermiteRule gauss_hermite(int points)
{
    if (points < 1)
        throw InvalidInputError("Gauss-Hermite rule needs at least one point");

    // Jacobi matrix of the (physicists') Hermite recurrence
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(points, points);
    for (int i = 1; i < points; ++i)
    {
        double off = std::sqrt(0.5 * i);
        jacobi(i, i - 1) = off;
        jacobi(i - 1, i) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);

    HermiteRule rule;
    rule.nodes.resize(points);
    rule.weights.resize(points);
    double const mu0 = std::sqrt(std::numbers::pi);
    for (int i = 0; i < points; ++i)
    {
        double v0 = solver.eigenvectors()(0, i);
        rule.nodes[i] = solver.eigenvalues()(i);
        rule.weights[i] = mu0 * v0 * v0;
    }
    // Exact symmetry; the eigen-solver leaves ~1e-16 noise on the middle node
    if (points % 2 == 1)
        rule.nodes[points / 2] = 0.0;
    return rule;
}

}  // namespace vdwg
