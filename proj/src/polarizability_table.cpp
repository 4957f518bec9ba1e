#include <cmath>
#include <fstream>
#include <sstream>

#include "vdwg/detail/pchip.hpp"

#include "vdwg/error.hpp"
#include "vdwg/lifshitz.hpp"

namespace vdwg
{
struct TabulatedPolarizability::Interp
{
    // Null when too few nodes for a cubic; linear in log E then
    std::unique_ptr<boost::math::interpolators::pchip<std::vector<double>>> spline;
    std::vector<double> log_energy;
};

TabulatedPolarizability::TabulatedPolarizability(std::vector<double> energy_ev,
                                                 std::vector<double> alpha_nm3)
    : energy_(std::move(energy_ev)), alpha_(std::move(alpha_nm3))
{
    if (energy_.size() != alpha_.size())
        throw InvalidInputError("polarizability table columns differ in length");
    if (energy_.size() < 2)
        throw InvalidInputError("polarizability table needs at least two rows");
    if (energy_.front() != 0)
        throw InvalidInputError("polarizability table must start at zero energy");
    for (std::size_t i = 0; i < energy_.size(); ++i)
    {
        if (!std::isfinite(energy_[i]) || !std::isfinite(alpha_[i]))
            throw InvalidInputError("polarizability table entries must be finite");
        if (alpha_[i] < 0)
            throw InvalidInputError("polarizability must be non-negative");
        if (i > 0 && !(energy_[i] > energy_[i - 1]))
            throw InvalidInputError("polarizability table energies must increase strictly");
        if (i > 0 && alpha_[i] > alpha_[i - 1])
            throw InvalidInputError("polarizability must be non-increasing in energy");
    }

    auto interp = std::make_shared<Interp>();
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 1; i < energy_.size(); ++i)
    {
        x.push_back(std::log(energy_[i]));
        y.push_back(alpha_[i]);
    }
    interp->log_energy = x;
    if (x.size() >= 4)
    {
        interp->spline = std::make_unique<boost::math::interpolators::pchip<std::vector<double>>>(
            std::move(x), std::move(y));
    }
    interp_ = std::move(interp);
}

double TabulatedPolarizability::operator()(double energy_ev) const
{
    if (!(energy_ev >= 0))
        throw InvalidInputError("imaginary frequency must be non-negative");
    std::size_t const last = energy_.size() - 1;
    if (energy_ev <= energy_[1])
    {
        double r = energy_ev / energy_[1];
        return alpha_[0] + (alpha_[1] - alpha_[0]) * r * r;
    }
    if (energy_ev >= energy_[last])
    {
        double r = energy_[last] / energy_ev;
        return alpha_[last] * r * r;
    }
    double x = std::log(energy_ev);
    if (interp_->spline)
        return (*interp_->spline)(x);

    auto const& lx = interp_->log_energy;
    std::size_t j = 1;
    while (j + 1 < lx.size() && lx[j] < x)
        ++j;
    double t = (x - lx[j - 1]) / (lx[j] - lx[j - 1]);
    return alpha_[j] + t * (alpha_[j + 1] - alpha_[j]);
}

double TabulatedPolarizability::half_value_energy() const
{
    for (std::size_t i = 1; i < energy_.size(); ++i)
    {
        if (alpha_[i] <= alpha_[0] / 2)
            return energy_[i];
    }
    return energy_.back();
}

TabulatedPolarizability TabulatedPolarizability::parse(std::istream& in)
{
    std::vector<double> energy;
    std::vector<double> alpha;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream fields(line);
        std::string a;
        std::string b;
        std::string extra;
        if (!(fields >> a))
            continue;
        if (!(fields >> b) || (fields >> extra))
            throw ParseError(line_no, {}, "expected two columns: energy_ev alpha_nm3");
        double e = 0;
        double v = 0;
        try
        {
            std::size_t pa = 0;
            std::size_t pb = 0;
            e = std::stod(a, &pa);
            v = std::stod(b, &pb);
            if (pa != a.size() || pb != b.size())
                throw std::invalid_argument("trailing characters");
        }
        catch (std::exception const&)
        {
            throw ParseError(line_no, {}, "non-numeric value");
        }
        if (!energy.empty() && !(e > energy.back()))
            throw ParseError(line_no, {}, "energies must increase strictly");
        energy.push_back(e);
        alpha.push_back(v);
    }
    try
    {
        return TabulatedPolarizability(std::move(energy), std::move(alpha));
    }
    catch (InvalidInputError const& err)
    {
        throw ParseError(line_no, {}, err.what());
    }
}

TabulatedPolarizability TabulatedPolarizability::load(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidInputError("cannot open polarizability table " + path.string());
    return parse(in);
}

}  // namespace vdwg
