#include "vdwg/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "vdwg/error.hpp"
#include "vdwg/units.hpp"

namespace vdwg
{
namespace
{
constexpr std::array<std::string_view, 6> sections
    = {"geometry", "beam", "potential", "material", "atom", "run"};

std::vector<ConfigKeyInfo> const key_table = {
    {"geometry.d", "grating period (nm)", true},
    {"geometry.s0", "slit width at the narrow edge (nm), 0 < s0 < d", true},
    {"geometry.t", "bar depth along the beam (nm)", true},
    {"geometry.beta_deg", "bar wedge angle (degrees), 0 <= beta < 90", true},
    {"beam.species", "atom label, free text without spaces", true},
    {"beam.mass_u", "atomic mass (u)", true},
    {"beam.velocity_mps", "mean beam velocity (m/s)", true},
    {"beam.dv_over_u", "optional FWHM velocity spread over mean velocity, default 0", false},
    {"potential.c3_mev_nm3", "van der Waals coefficient C3 (meV nm^3), >= 0", true},
    {"material.omega_t_ev", "Tauc-Lorentz band gap (eV)", false},
    {"material.a_ev", "Tauc-Lorentz strength (eV)", false},
    {"material.omega_ev", "Tauc-Lorentz resonance energy (eV)", false},
    {"material.gamma_ev", "Tauc-Lorentz width (eV)", false},
    {"material.g0", "static surface response, 0 < g0 < 1; derived from Tauc-Lorentz if absent",
     false},
    {"material.es_ev", "surface oscillator energy (eV) for the one-oscillator route", false},
    {"atom.alpha0_nm3", "static atomic polarizability (nm^3)", false},
    {"atom.ea_ev", "atomic oscillator energy (eV)", false},
    {"atom.c6_ev_nm6", "C6 (eV nm^6); sets the oscillator energy 4 C6 / (3 alpha0^2)", false},
    {"atom.table", "path to a two-column alpha(iE) table: energy_ev alpha_nm3", false},
    {"run.n_max", "highest diffraction order |n| to compute, 1..50", true},
    {"run.tolerance", "optional slit-integral relative tolerance, default 1e-8", false},
    {"run.seed", "optional noise seed (unsigned 64-bit), default 0", false},
    {"run.slits", "optional number of illuminated slits for scans, default 100", false},
    {"run.samples_per_fwhm", "optional scan sampling per zeroth-order FWHM, default 8", false},
    {"run.velocity_points", "optional Gauss-Hermite nodes for velocity averaging (1 or odd >= 3), "
                            "default 9",
     false},
};

std::string_view trim(std::string_view s)
{
    auto const ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

struct Entry
{
    std::string value;
    std::size_t line;
};

class Document
{
  public:
    explicit Document(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

    bool has(std::string const& key) const { return entries_.count(key) != 0; }
    std::size_t line(std::string const& key) const
    {
        auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    bool has_section(std::string_view section) const
    {
        for (auto const& [key, entry] : entries_)
        {
            if (key.compare(0, section.size(), section) == 0 && key[section.size()] == '.')
                return true;
        }
        return false;
    }

    std::size_t section_line(std::string_view section) const
    {
        std::size_t first = 0;
        for (auto const& [key, entry] : entries_)
        {
            if (key.compare(0, section.size(), section) == 0 && key[section.size()] == '.'
                && (first == 0 || entry.line < first))
                first = entry.line;
        }
        return first;
    }

    std::string const& text(std::string const& key) const
    {
        auto it = entries_.find(key);
        if (it == entries_.end())
            throw ParseError(0, key, "missing required key");
        return it->second.value;
    }

    double number(std::string const& key) const
    {
        std::string const& s = text(key);
        double v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
            throw ParseError(line(key), key, "expected a finite number, got '" + s + "'");
        return v;
    }

    template<class Int>
    Int integer(std::string const& key) const
    {
        std::string const& s = text(key);
        Int v{};
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw ParseError(line(key), key, "expected an integer, got '" + s + "'");
        return v;
    }

    std::optional<double> optional_number(std::string const& key) const
    {
        if (!has(key))
            return std::nullopt;
        return number(key);
    }

    [[noreturn]] void fail(std::string const& key, std::string const& message) const
    {
        throw ParseError(line(key), key, message);
    }

  private:
    std::map<std::string, Entry> entries_;
};

Document tokenize(std::string_view text)
{
    std::map<std::string, Entry> entries;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size())
    {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view raw = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;

        if (auto hash = raw.find('#'); hash != std::string_view::npos)
            raw = raw.substr(0, hash);
        raw = trim(raw);
        if (raw.empty())
            continue;

        auto eq = raw.find('=');
        if (eq == std::string_view::npos)
            throw ParseError(line_no, std::string(raw), "expected 'section.key = value'");
        std::string key(trim(raw.substr(0, eq)));
        std::string value(trim(raw.substr(eq + 1)));
        bool known = false;
        for (auto const& info : key_table)
            known = known || info.path == key;
        if (!known)
            throw ParseError(line_no, key, "unknown key");
        if (value.empty())
            throw ParseError(line_no, key, "missing value");
        if (entries.count(key))
            throw ParseError(line_no,
                             key,
                             "duplicate key (first set on line "
                                 + std::to_string(entries.at(key).line) + ")");
        entries.emplace(std::move(key), Entry{std::move(value), line_no});
    }
    return Document(std::move(entries));
}

void check_sections(Document const& doc)
{
    std::string missing;
    for (auto section : sections)
    {
        if (!doc.has_section(section))
            missing += (missing.empty() ? "" : ", ") + std::string(section);
    }
    if (!missing.empty())
        throw ParseError(0, {}, "missing required sections: " + missing);
    for (auto const& info : key_table)
    {
        std::string key(info.path);
        if (info.required && !doc.has(key))
        {
            auto section = key.substr(0, key.find('.'));
            throw ParseError(doc.section_line(section), key, "missing required key");
        }
    }
}

void require(bool ok, Document const& doc, std::string const& key, std::string const& message)
{
    if (!ok)
        doc.fail(key, message);
}

RunConfig build(Document const& doc)
{
    check_sections(doc);
    RunConfig c;

    auto& g = c.geometry;
    g.d_nm = doc.number("geometry.d");
    g.s0_nm = doc.number("geometry.s0");
    g.t_nm = doc.number("geometry.t");
    g.beta_deg = doc.number("geometry.beta_deg");
    require(g.d_nm > 0, doc, "geometry.d", "period must be positive");
    require(g.s0_nm > 0 && g.s0_nm < g.d_nm, doc, "geometry.s0", "slit width must lie in (0, d)");
    require(g.t_nm > 0, doc, "geometry.t", "bar depth must be positive");
    require(g.beta_deg >= 0 && g.beta_deg < 90,
            doc,
            "geometry.beta_deg",
            "wedge angle must lie in [0, 90) degrees");

    auto& b = c.beam;
    b.species = doc.text("beam.species");
    require(b.species.find_first_of(" \t") == std::string::npos,
            doc,
            "beam.species",
            "species label must not contain spaces");
    b.mass_u = doc.number("beam.mass_u");
    b.velocity_mps = doc.number("beam.velocity_mps");
    require(b.mass_u > 0, doc, "beam.mass_u", "mass must be positive");
    require(b.velocity_mps > 0, doc, "beam.velocity_mps", "velocity must be positive");
    b.dv_over_u = doc.optional_number("beam.dv_over_u").value_or(0);
    require(b.dv_over_u >= 0 && b.dv_over_u < 1, doc, "beam.dv_over_u", "must lie in [0, 1)");

    c.c3_mev_nm3 = doc.number("potential.c3_mev_nm3");
    require(c.c3_mev_nm3 >= 0, doc, "potential.c3_mev_nm3", "C3 must be non-negative");

    auto& m = c.material;
    std::array<char const*, 4> tl_keys
        = {"material.omega_t_ev", "material.a_ev", "material.omega_ev", "material.gamma_ev"};
    int tl_count = 0;
    for (auto k : tl_keys)
        tl_count += doc.has(k);
    if (tl_count == 4)
    {
        TaucLorentzParams p{doc.number(tl_keys[0]),
                            doc.number(tl_keys[1]),
                            doc.number(tl_keys[2]),
                            doc.number(tl_keys[3])};
        require(p.band_gap_ev > 0, doc, tl_keys[0], "must be positive");
        require(p.strength_ev > 0, doc, tl_keys[1], "must be positive");
        require(p.resonance_ev > 0, doc, tl_keys[2], "must be positive");
        require(p.width_ev > 0, doc, tl_keys[3], "must be positive");
        m.tauc_lorentz = p;
    }
    else if (tl_count > 0)
    {
        for (auto k : tl_keys)
        {
            if (!doc.has(k))
                throw ParseError(doc.section_line("material"),
                                 k,
                                 "incomplete Tauc-Lorentz parameter set");
        }
    }
    m.g0 = doc.optional_number("material.g0");
    m.es_ev = doc.optional_number("material.es_ev");
    if (m.g0)
        require(*m.g0 > 0 && *m.g0 < 1, doc, "material.g0", "must lie in (0, 1)");
    if (m.es_ev)
        require(*m.es_ev > 0, doc, "material.es_ev", "must be positive");
    if (!m.tauc_lorentz && !(m.g0 && m.es_ev))
        throw ParseError(doc.section_line("material"),
                         "material",
                         "need the four Tauc-Lorentz parameters or both g0 and es_ev");

    auto& a = c.atom;
    a.alpha0_nm3 = doc.optional_number("atom.alpha0_nm3");
    a.ea_ev = doc.optional_number("atom.ea_ev");
    a.c6_ev_nm6 = doc.optional_number("atom.c6_ev_nm6");
    if (doc.has("atom.table"))
        a.table = doc.text("atom.table");
    if (a.alpha0_nm3)
        require(*a.alpha0_nm3 > 0, doc, "atom.alpha0_nm3", "must be positive");
    if (a.ea_ev)
        require(*a.ea_ev > 0, doc, "atom.ea_ev", "must be positive");
    if (a.c6_ev_nm6)
        require(*a.c6_ev_nm6 > 0, doc, "atom.c6_ev_nm6", "must be positive");
    if (a.ea_ev && a.c6_ev_nm6)
        doc.fail("atom.c6_ev_nm6", "give either ea_ev or c6_ev_nm6, not both");
    if ((a.ea_ev || a.c6_ev_nm6) && !a.alpha0_nm3)
        throw ParseError(doc.section_line("atom"), "atom.alpha0_nm3", "missing required key");
    if (a.alpha0_nm3 && !(a.ea_ev || a.c6_ev_nm6))
        doc.fail("atom.alpha0_nm3", "needs atom.ea_ev or atom.c6_ev_nm6");
    if (!a.alpha0_nm3 && !a.table)
        throw ParseError(doc.section_line("atom"),
                         "atom",
                         "need alpha0_nm3 with ea_ev or c6_ev_nm6, or a table");

    auto& r = c.run;
    r.n_max = doc.integer<int>("run.n_max");
    require(r.n_max >= 1 && r.n_max <= 50, doc, "run.n_max", "must lie in 1..50");
    if (auto tol = doc.optional_number("run.tolerance"))
    {
        require(*tol > 0 && *tol < 1e-2, doc, "run.tolerance", "must lie in (0, 0.01)");
        r.tolerance = *tol;
    }
    if (doc.has("run.seed"))
        r.seed = doc.integer<std::uint64_t>("run.seed");
    if (doc.has("run.slits"))
    {
        r.slits = doc.integer<int>("run.slits");
        require(r.slits >= 1, doc, "run.slits", "must be at least 1");
    }
    if (auto s = doc.optional_number("run.samples_per_fwhm"))
    {
        require(*s >= 1, doc, "run.samples_per_fwhm", "must be at least 1");
        r.samples_per_fwhm = *s;
    }
    if (doc.has("run.velocity_points"))
    {
        r.velocity_points = doc.integer<int>("run.velocity_points");
        require(r.velocity_points == 1 || (r.velocity_points >= 3 && r.velocity_points % 2 == 1),
                doc,
                "run.velocity_points",
                "must be 1 or an odd number >= 3");
    }

    // Module-level invariants, in case they are stricter than the checks above
    try
    {
        c.grating().validate();
        (void)c.beam_state();
        c.potential().validate();
    }
    catch (InvalidInputError const& err)
    {
        throw ParseError(0, {}, err.what());
    }
    return c;
}

void put(std::ostringstream& out, std::string_view key, double value)
{
    out << key << " = " << format_double(value) << '\n';
}

}  // namespace

GratingGeometry RunConfig::grating() const
{
    return {geometry.d_nm,
            geometry.s0_nm,
            geometry.t_nm,
            units::degrees_to_radians(geometry.beta_deg)};
}

BeamState RunConfig::beam_state() const
{
    return BeamState(beam.mass_u, beam.velocity_mps, beam.dv_over_u);
}

Potential RunConfig::potential() const
{
    return {c3_mev_nm3};
}

SlitQuadratureOptions RunConfig::slit_quadrature() const
{
    SlitQuadratureOptions opts;
    opts.rel_tolerance = run.tolerance;
    return opts;
}

double RunConfig::atom_energy_ev() const
{
    if (atom.ea_ev)
        return *atom.ea_ev;
    if (atom.c6_ev_nm6 && atom.alpha0_nm3)
        return oscillator_energy_from_c6(*atom.c6_ev_nm6, *atom.alpha0_nm3);
    throw InvalidInputError("configuration has no atomic oscillator energy");
}

OneOscillatorAtom RunConfig::one_oscillator_atom() const
{
    if (!atom.alpha0_nm3)
        throw InvalidInputError("configuration has no static polarizability atom.alpha0_nm3");
    return {*atom.alpha0_nm3, atom_energy_ev()};
}

std::vector<ConfigKeyInfo> const& config_keys()
{
    return key_table;
}

RunConfig parse_config(std::string_view text)
{
    return build(tokenize(text));
}

RunConfig load_config(std::filesystem::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidInputError("cannot open config file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    RunConfig config = parse_config(buffer.str());
    if (config.atom.table)
    {
        std::filesystem::path table(*config.atom.table);
        if (table.is_relative())
            config.atom.table = (path.parent_path() / table).lexically_normal().string();
    }
    return config;
}

std::string format_config(RunConfig const& c)
{
    std::ostringstream out;
    put(out, "geometry.d", c.geometry.d_nm);
    put(out, "geometry.s0", c.geometry.s0_nm);
    put(out, "geometry.t", c.geometry.t_nm);
    put(out, "geometry.beta_deg", c.geometry.beta_deg);
    out << "beam.species = " << c.beam.species << '\n';
    put(out, "beam.mass_u", c.beam.mass_u);
    put(out, "beam.velocity_mps", c.beam.velocity_mps);
    put(out, "beam.dv_over_u", c.beam.dv_over_u);
    put(out, "potential.c3_mev_nm3", c.c3_mev_nm3);
    if (auto const& tl = c.material.tauc_lorentz)
    {
        put(out, "material.omega_t_ev", tl->band_gap_ev);
        put(out, "material.a_ev", tl->strength_ev);
        put(out, "material.omega_ev", tl->resonance_ev);
        put(out, "material.gamma_ev", tl->width_ev);
    }
    if (c.material.g0)
        put(out, "material.g0", *c.material.g0);
    if (c.material.es_ev)
        put(out, "material.es_ev", *c.material.es_ev);
    if (c.atom.alpha0_nm3)
        put(out, "atom.alpha0_nm3", *c.atom.alpha0_nm3);
    if (c.atom.ea_ev)
        put(out, "atom.ea_ev", *c.atom.ea_ev);
    if (c.atom.c6_ev_nm6)
        put(out, "atom.c6_ev_nm6", *c.atom.c6_ev_nm6);
    if (c.atom.table)
        out << "atom.table = " << *c.atom.table << '\n';
    out << "run.n_max = " << c.run.n_max << '\n';
    put(out, "run.tolerance", c.run.tolerance);
    out << "run.seed = " << c.run.seed << '\n';
    out << "run.slits = " << c.run.slits << '\n';
    put(out, "run.samples_per_fwhm", c.run.samples_per_fwhm);
    out << "run.velocity_points = " << c.run.velocity_points << '\n';
    return out.str();
}

std::string extract_config_text(std::string_view report)
{
    std::string out;
    std::istringstream in{std::string(report)};
    std::string line;
    while (std::getline(in, line))
    {
        std::string_view key = trim(line);
        auto dot = key.find('.');
        if (dot == std::string_view::npos)
            continue;
        auto section = key.substr(0, dot);
        for (auto s : sections)
        {
            if (s == section)
            {
                out += line;
                out += '\n';
                break;
            }
        }
    }
    return out;
}

std::string format_double(double value)
{
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{})
        throw InvalidInputError("cannot format floating-point value");
    return std::string(buf.data(), ptr);
}

}  // namespace vdwg
