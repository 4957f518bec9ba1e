#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vdwg/grating.hpp"
#include "vdwg/lifshitz.hpp"

namespace vdwg
{
/*!
 * Fully validated run configuration.
 *
 * The text form is line oriented: `section.key = value`, one per line, with
 * `#` starting a comment. Every key may appear at most once.
 */
struct RunConfig
{
    struct Geometry
    {
        double d_nm{};
        double s0_nm{};
        double t_nm{};
        double beta_deg{};
    };
    struct Beam
    {
        std::string species;
        double mass_u{};
        double velocity_mps{};
        double dv_over_u{0};
    };
    struct Material
    {
        std::optional<TaucLorentzParams> tauc_lorentz;
        //! Static surface response; derived from tauc_lorentz when absent
        std::optional<double> g0;
        std::optional<double> es_ev;
    };
    struct Atom
    {
        std::optional<double> alpha0_nm3;
        std::optional<double> ea_ev;
        std::optional<double> c6_ev_nm6;
        std::optional<std::string> table;
    };
    struct Run
    {
        int n_max{};
        double tolerance{1e-8};
        std::uint64_t seed{0};
        int slits{100};
        double samples_per_fwhm{8};
        int velocity_points{9};
    };

    Geometry geometry;
    Beam beam;
    double c3_mev_nm3{};
    Material material;
    Atom atom;
    Run run;

    GratingGeometry grating() const;
    BeamState beam_state() const;
    Potential potential() const;
    SlitQuadratureOptions slit_quadrature() const;

    //! Atom energy from ea_ev, or from c6_ev_nm6 and alpha0
    double atom_energy_ev() const;
    OneOscillatorAtom one_oscillator_atom() const;
};

//! Documentation of one accepted key, for help output
struct ConfigKeyInfo
{
    std::string_view path;
    std::string_view description;
    bool required;
};

std::vector<ConfigKeyInfo> const& config_keys();

//! Parse and validate; throws ParseError with the line number and key path
RunConfig parse_config(std::string_view text);

//! Read a config file; a relative atom.table path is resolved against the
//! file's directory
RunConfig load_config(std::filesystem::path const& path);

//! Canonical text form; parse_config(format_config(c)) reproduces c exactly
std::string format_config(RunConfig const& config);

//! Keeps only the lines of a report that belong to the configuration
std::string extract_config_text(std::string_view report);

//! Shortest decimal string that reads back to the same double
std::string format_double(double value);

}  // namespace vdwg
