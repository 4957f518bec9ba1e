#pragma once

#include <array>
#include <vector>

namespace vdwg
{
//! One node of a 15-point Kronrod rule with its embedded 7-point Gauss weight
struct KronrodNode
{
    double abscissa;  //!< on [-1, 1]
    double kronrod_weight;
    double gauss_weight;  //!< zero for Kronrod-only nodes
};

//! The full G7/K15 node set on [-1, 1]
std::array<KronrodNode, 15> const& gauss_kronrod15();

struct HermiteRule
{
    std::vector<double> nodes;
    std::vector<double> weights;  //!< for the weight function exp(-x^2)
};

//! Gauss-Hermite rule by the Golub-Welsch eigenvalue method
HermiteRule gauss_hermite(int points);

}  // namespace vdwg
