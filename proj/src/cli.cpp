#include "vdwg/cli.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "vdwg/config.hpp"
#include "vdwg/csv.hpp"
#include "vdwg/error.hpp"
#include "vdwg/inference.hpp"
#include "vdwg/lifshitz.hpp"
#include "vdwg/random.hpp"

namespace vdwg
{
namespace
{
constexpr char const* report_banner = "# vdwg report";

enum ExitCode
{
    exit_ok = 0,
    exit_usage = 1,
    exit_input = 2,
    exit_numerical = 3,
};

int exit_code_for(ErrorKind kind)
{
    switch (kind)
    {
        case ErrorKind::numerical_tolerance:
        case ErrorKind::fit_failure:
        case ErrorKind::boundary_solution:
        case ErrorKind::multimodal:
            return exit_numerical;
        default:
            return exit_input;
    }
}

std::string quoted(std::string const& text)
{
    std::string out = "\"";
    for (char c : text)
    {
        if (c == '"' || c == '\\')
            out += '\\';
        out += (c == '\n') ? ' ' : c;
    }
    return out + '"';
}

int report_error(std::ostream& err, std::string const& kind, int code, std::string const& message)
{
    err << "error kind=" << kind << " exit=" << code << " message=" << quoted(message) << '\n';
    return code;
}

std::string sci(double value)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.8e", value);
    return buf;
}

std::string key_help()
{
    std::ostringstream out;
    out << "Config file: one `section.key = value` per line, '#' starts a comment.\n"
           "Keys (* = required):\n";
    for (auto const& info : config_keys())
    {
        out << "  " << (info.required ? "* " : "  ") << info.path << "\n      "
            << info.description << '\n';
    }
    out << "material needs the four Tauc-Lorentz keys or both g0 and es_ev.\n"
           "atom needs alpha0_nm3 with ea_ev or c6_ev_nm6, and/or table.\n"
           "A report written by this tool is also accepted as a config file.\n"
           "Exit codes: 0 ok, 1 usage, 2 input/format error, 3 numerical failure.\n";
    return out.str();
}

RunConfig read_config(std::string const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidInputError("cannot open config file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    std::string text = buffer.str();
    if (text.rfind(report_banner, 0) == 0)
    {
        // Embedded configs are already fully resolved
        return parse_config(extract_config_text(text));
    }
    return load_config(path);
}

class Report
{
  public:
    Report(std::string const& command, RunConfig const& config)
    {
        out_ << report_banner << '\n';
        out_ << "tool.name = vdwg\n";
        out_ << "tool.version = " << version() << '\n';
        out_ << "tool.command = " << command << '\n';
        out_ << "tool.rng = " << Rng::algorithm << '\n';
        out_ << format_config(config);
    }

    void text(std::string const& key, std::string const& value)
    {
        out_ << key << " = " << value << '\n';
    }
    void number(std::string const& key, double value) { text(key, sci(value)); }
    void integer(std::string const& key, long long value) { text(key, std::to_string(value)); }

    void write(std::string const& path) const
    {
        std::ofstream file(path, std::ios::binary);
        if (!file)
            throw InvalidInputError("cannot write " + path);
        file << out_.str();
        if (!file)
            throw InvalidInputError("failed writing " + path);
    }

  private:
    std::ostringstream out_;
};

template<class Writer>
void write_file(std::string const& path, Writer&& writer)
{
    std::ofstream file(path, std::ios::binary);
    if (!file)
        throw InvalidInputError("cannot write " + path);
    writer(file);
    if (!file)
        throw InvalidInputError("failed writing " + path);
}

//---------------------------------------------------------------------------//
// SUBCOMMANDS
//---------------------------------------------------------------------------//
struct SimulateArgs
{
    std::string config;
    std::string out;
    bool scan{false};
    bool orders{false};
};

void simulate(SimulateArgs const& args)
{
    RunConfig cfg = read_config(args.config);
    auto geom = cfg.grating();
    auto beam = cfg.beam_state();
    auto quad = cfg.slit_quadrature();
    if (args.scan)
    {
        auto grid = default_scan_grid(beam, geom, cfg.run.slits, cfg.run.n_max,
                                      cfg.run.samples_per_fwhm);
        auto angles = grid.angles();
        auto scan = angular_pattern(angles, cfg.run.slits, cfg.potential(), geom, beam, quad);
        write_file(args.out, [&](std::ostream& o) { write_scan_csv(o, scan); });
        return;
    }
    ModelIntensities model = cfg.beam.dv_over_u > 0
        ? velocity_averaged_intensities(
            cfg.run.n_max, cfg.potential(), geom, beam, cfg.run.velocity_points, quad)
        : order_intensities(cfg.run.n_max, cfg.potential(), geom, beam, quad);
    write_file(args.out, [&](std::ostream& o) { write_orders_csv(o, model.intensities); });
}

struct FitArgs
{
    std::string config;
    std::string data;
    std::string scan_data;
    std::string out;
    double c3_min{0};
    double c3_max{20};
};

void fit(FitArgs const& args, std::ostream& err)
{
    RunConfig cfg = read_config(args.config);
    auto geom = cfg.grating();
    auto beam = cfg.beam_state();

    OrderIntensities observed;
    std::vector<std::string> warnings;
    if (!args.scan_data.empty())
    {
        AngularScan scan = load_scan_csv(args.scan_data);
        scan.slit_count = cfg.run.slits;
        std::vector<double> centers;
        for (int n = 1; n <= cfg.run.n_max; ++n)
            centers.push_back(diffraction_angle(n, beam.wavelength_nm(), geom.period_nm));
        auto peaks = fit_gaussian_peaks(scan, centers);
        std::vector<std::pair<int, GaussianPeak>> labelled;
        for (int n = 1; n <= cfg.run.n_max; ++n)
            labelled.emplace_back(n, peaks[static_cast<std::size_t>(n - 1)]);
        observed = normalize_orders(labelled);
    }
    else
    {
        observed = load_orders_csv(args.data, &warnings);
    }
    for (auto const& w : warnings)
        err << "warning message=" << quoted(w) << '\n';

    C3FitOptions opts;
    opts.quadrature = cfg.slit_quadrature();
    FitResult result = fit_c3(observed, geom, beam, {args.c3_min, args.c3_max}, opts);

    Report report("fit", cfg);
    report.text("input.data", args.scan_data.empty() ? args.data : args.scan_data);
    report.text("input.kind", args.scan_data.empty() ? "orders" : "scan");
    report.number("input.c3_min", args.c3_min);
    report.number("input.c3_max", args.c3_max);
    for (auto const& w : warnings)
        report.text("input.warning", w);
    for (auto const& [n, v] : observed.orders)
    {
        report.number("input.intensity." + std::to_string(n), v.intensity);
        if (v.sigma)
            report.number("input.sigma." + std::to_string(n), *v.sigma);
    }
    report.number("result.c3_hat", result.c3_hat);
    report.number("result.uncertainty", result.uncertainty);
    report.number("result.chi2", result.chi2);
    report.integer("result.dof", result.dof);
    report.text("result.chi2_rescaled", result.rescaled ? "true" : "false");
    report.integer("result.evaluations", result.iterations);
    for (auto const& [n, r] : result.residuals)
        report.number("result.residual." + std::to_string(n), r);
    report.write(args.out);
}

struct TheoryArgs
{
    std::string config;
    std::string route;
    std::string out;
    std::string dump_eps;
};

void theory(TheoryArgs const& args)
{
    RunConfig cfg = read_config(args.config);
    auto const& mat = cfg.material;
    Report report("theory", cfg);
    report.text("input.route", args.route);

    std::optional<ImaginaryAxisDielectric> eps;
    if (mat.tauc_lorentz)
        eps.emplace(*mat.tauc_lorentz);
    if (!args.dump_eps.empty())
    {
        if (!eps)
            throw InvalidInputError("--dump-eps needs the Tauc-Lorentz material parameters");
        write_file(args.dump_eps, [&](std::ostream& o) {
            o << "energy_ev,eps\n";
            for (std::size_t i = 0; i < eps->grid_ev().size(); ++i)
                o << format_double(eps->grid_ev()[i]) << ',' << format_double(eps->grid_values()[i])
                  << '\n';
        });
    }

    double g0 = mat.g0 ? *mat.g0 : surface_response_from_eps(eps->static_value());
    report.number("result.g0", g0);
    if (eps)
    {
        report.number("result.eps_static", eps->static_value());
        report.number("result.eps_interpolation_g_error", eps->surface_response_error());
    }

    if (args.route == "kk")
    {
        if (!eps)
            throw InvalidInputError("route kk needs the Tauc-Lorentz material parameters");
        auto atom = cfg.one_oscillator_atom();
        report.number("result.atom_energy_ev", atom.energy_ev);
        C3Estimate c3 = c3_lifshitz(atom, *eps);
        report.number("result.c3_mev_nm3", c3.c3_mev_nm3);
        report.number("result.c3_error_estimate", c3.error_estimate);
    }
    else if (args.route == "one-osc")
    {
        if (!mat.es_ev)
            throw InvalidInputError("route one-osc needs material.es_ev");
        auto atom = cfg.one_oscillator_atom();
        report.number("result.atom_energy_ev", atom.energy_ev);
        report.number("result.surface_energy_ev", *mat.es_ev);
        report.number("result.c3_mev_nm3",
                      c3_one_oscillator(atom.alpha0_nm3, g0, atom.energy_ev, *mat.es_ev));
    }
    else
    {
        if (!cfg.atom.table)
            throw InvalidInputError("route table needs atom.table");
        auto table = TabulatedPolarizability::load(*cfg.atom.table);
        report.number("result.table_alpha0_nm3", table.values().front());
        C3Estimate c3 = eps ? c3_lifshitz(table, *eps)
                            : c3_lifshitz(table, OneOscillatorSurface{g0, *mat.es_ev});
        report.number("result.c3_mev_nm3", c3.c3_mev_nm3);
        report.number("result.c3_error_estimate", c3.error_estimate);
    }
    report.write(args.out);
}

struct SynthArgs
{
    std::string config;
    std::string out;
    double noise{0};
    std::optional<std::uint64_t> seed;
};

void synth(SynthArgs const& args)
{
    RunConfig cfg = read_config(args.config);
    if (args.seed)
        cfg.run.seed = *args.seed;
    auto geom = cfg.grating();
    auto beam = cfg.beam_state();
    auto grid = default_scan_grid(beam, geom, cfg.run.slits, cfg.run.n_max,
                                  cfg.run.samples_per_fwhm);
    AngularScan scan = synthesize_scan(cfg.potential(), geom, beam, cfg.run.slits, args.noise,
                                       cfg.run.seed, grid, cfg.slit_quadrature());
    write_file(args.out, [&](std::ostream& o) { write_scan_csv(o, scan); });
}

}  // namespace

char const* version()
{
    return VDWG_VERSION;
}

int run_cli(int argc, char const* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Diffraction of atoms at nanoscale transmission gratings and "
                 "van der Waals C3 coefficients",
                 "vdwg"};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);
    std::string const keys = key_help();
    app.footer(keys);

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Model order intensities or an angular pattern");
    sim_cmd->add_option("--config", sim.config, "Config file")->required();
    auto* scan_flag = sim_cmd->add_flag("--scan", sim.scan, "Write the angular pattern CSV");
    auto* orders_flag = sim_cmd->add_flag("--orders", sim.orders, "Write order intensities (default)");
    scan_flag->excludes(orders_flag);
    sim_cmd->add_option("--out", sim.out, "Output CSV")->required();
    sim_cmd->footer(keys);

    FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "Fit C3 to measured order intensities");
    fit_cmd->add_option("--config", fit_args.config, "Config file")->required();
    auto* data_opt = fit_cmd->add_option("--data", fit_args.data, "Orders CSV (n,intensity[,sigma])");
    auto* scan_opt = fit_cmd->add_option(
        "--scan-data", fit_args.scan_data, "Scan CSV; orders 1..n_max are extracted by peak fits");
    data_opt->excludes(scan_opt);
    fit_cmd->add_option("--c3-min", fit_args.c3_min, "Lower C3 bound (meV nm^3)")
        ->capture_default_str();
    fit_cmd->add_option("--c3-max", fit_args.c3_max, "Upper C3 bound (meV nm^3)")
        ->capture_default_str();
    fit_cmd->add_option("--out", fit_args.out, "Report file")->required();
    fit_cmd->footer(keys);

    TheoryArgs th;
    auto* th_cmd = app.add_subcommand("theory", "Compute C3 from material and atom response");
    th_cmd->add_option("--config", th.config, "Config file")->required();
    th_cmd->add_option("--route", th.route, "kk, one-osc or table")
        ->required()
        ->check(CLI::IsMember({"kk", "one-osc", "table"}));
    th_cmd->add_option("--out", th.out, "Report file")->required();
    th_cmd->add_option("--dump-eps", th.dump_eps, "Write the eps(iE) grid as CSV");
    th_cmd->footer(keys);

    SynthArgs syn;
    auto* syn_cmd = app.add_subcommand("synth", "Seeded noisy angular scan");
    syn_cmd->add_option("--config", syn.config, "Config file")->required();
    syn_cmd->add_option("--noise", syn.noise, "Relative Gaussian noise per sample")->required();
    syn_cmd->add_option("--seed", syn.seed, "Noise seed (overrides run.seed)");
    syn_cmd->add_option("--out", syn.out, "Output scan CSV")->required();
    syn_cmd->footer(keys);

    try
    {
        app.parse(argc, argv);
        if (fit_cmd->parsed() && fit_args.data.empty() && fit_args.scan_data.empty())
            throw CLI::RequiredError("--data or --scan-data");
    }
    catch (CLI::CallForHelp const& e)
    {
        return app.exit(e, out, err);
    }
    catch (CLI::CallForAllHelp const& e)
    {
        return app.exit(e, out, err);
    }
    catch (CLI::CallForVersion const& e)
    {
        return app.exit(e, out, err);
    }
    catch (CLI::ParseError const& e)
    {
        return report_error(err, "usage", exit_usage, e.what());
    }

    try
    {
        if (sim_cmd->parsed())
            simulate(sim);
        else if (fit_cmd->parsed())
            fit(fit_args, err);
        else if (th_cmd->parsed())
            theory(th);
        else if (syn_cmd->parsed())
            synth(syn);
    }
    catch (Error const& e)
    {
        int code = exit_code_for(e.kind());
        return report_error(err, to_string(e.kind()), code, e.what());
    }
    catch (std::exception const& e)
    {
        return report_error(err, "internal", exit_numerical, e.what());
    }
    return exit_ok;
}

}  // namespace vdwg
