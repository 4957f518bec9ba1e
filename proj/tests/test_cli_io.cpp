#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <doctest.h>

#include "vdwg/cli.hpp"
#include "vdwg/config.hpp"
#include "vdwg/csv.hpp"
#include "vdwg/error.hpp"

using namespace vdwg;
namespace fs = std::filesystem;

namespace
{
fs::path const source_dir = VDWG_SOURCE_DIR;
fs::path const he_config = source_dir / "configs" / "he_star.cfg";
fs::path const ne_config = source_dir / "configs" / "ne_star.cfg";

std::string slurp(fs::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write(fs::path const& path, std::string const& text)
{
    std::ofstream(path, std::ios::binary) << text;
}

class TempDir
{
  public:
    TempDir()
    {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("vdwg-test-" + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path operator/(std::string const& name) const { return path_ / name; }

  private:
    fs::path path_;
};

struct CliResult
{
    int code;
    std::string out;
    std::string err;
};

CliResult cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "vdwg");
    std::vector<char const*> argv;
    for (auto const& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::map<std::string, std::string> read_report(fs::path const& path)
{
    std::map<std::string, std::string> values;
    std::istringstream in(slurp(path));
    std::string line;
    while (std::getline(in, line))
    {
        auto eq = line.find(" = ");
        if (line.empty() || line[0] == '#' || eq == std::string::npos)
            continue;
        values[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return values;
}

std::string replace_line(std::string text, std::string const& key, std::string const& line)
{
    auto pos = text.find(key);
    REQUIRE(pos != std::string::npos);
    auto end = text.find('\n', pos);
    return text.replace(pos, end - pos, line);
}

template<class F>
ParseError parse_error(F&& f)
{
    try
    {
        f();
    }
    catch (ParseError const& e)
    {
        return e;
    }
    FAIL("expected a parse error");
    return ParseError(0, {}, {});
}

}  // namespace

//---------------------------------------------------------------------------//
// CONFIG
//---------------------------------------------------------------------------//
TEST_CASE("shipped configs parse")
{
    RunConfig he = load_config(he_config);
    CHECK(he.geometry.d_nm == 100);
    CHECK(he.geometry.s0_nm == 66.8);
    CHECK(he.geometry.t_nm == 53);
    CHECK(he.geometry.beta_deg == 11);
    CHECK(he.beam.species == "He*");
    CHECK(he.beam.mass_u == 4.0026);
    CHECK(he.beam.velocity_mps == 2347);
    CHECK(he.c3_mev_nm3 == 4.1);
    REQUIRE(he.material.tauc_lorentz);
    CHECK(he.material.tauc_lorentz->band_gap_ev == 2.29);
    CHECK(he.material.tauc_lorentz->strength_ev == 74.5);
    CHECK(he.material.tauc_lorentz->resonance_ev == 7.17);
    CHECK(he.material.tauc_lorentz->width_ev == 7.62);
    CHECK(*he.atom.alpha0_nm3 == 0.0468);
    CHECK(*he.atom.ea_ev == 1.18);
    CHECK(he.run.n_max == 10);
    // Optional keys take their defaults
    CHECK(he.beam.dv_over_u == 0);
    CHECK(he.run.seed == 0);
    CHECK(he.run.tolerance == 1e-8);

    RunConfig ne = load_config(ne_config);
    CHECK(ne.beam.species == "Ne*");
    CHECK(ne.beam.velocity_mps == 873);
    CHECK(*ne.atom.ea_ev == 2.04);
    CHECK(ne.grating().wedge_angle_rad == doctest::Approx(11 * 3.14159265358979 / 180));
}

TEST_CASE("config errors carry line and key")
{
    std::string const base = slurp(he_config);

    auto empty = parse_error([] { parse_config(""); });
    std::string msg = empty.what();
    for (auto section : {"geometry", "beam", "potential", "material", "atom", "run"})
        CHECK(msg.find(section) != std::string::npos);

    auto beta = parse_error([&] { parse_config(replace_line(base, "geometry.beta_deg", "geometry.beta_deg = 95")); });
    CHECK(beta.line == 5);
    CHECK(beta.key == "geometry.beta_deg");

    auto unknown = parse_error([&] { parse_config(base + "geometry.depth = 3\n"); });
    CHECK(unknown.key == "geometry.depth");
    CHECK(unknown.line == std::count(base.begin(), base.end(), '\n') + 1);

    auto type = parse_error([&] { parse_config(replace_line(base, "geometry.d ", "geometry.d = wide")); });
    CHECK(type.key == "geometry.d");
    CHECK(type.line == 2);

    auto dup = parse_error([&] { parse_config(base + "run.n_max = 3\n"); });
    CHECK(dup.key == "run.n_max");

    auto noeq = parse_error([&] { parse_config(base + "run.seed 3\n"); });
    CHECK(noeq.line > 20);

    auto missing = parse_error([&] { parse_config(replace_line(base, "beam.mass_u", "")); });
    CHECK(missing.key == "beam.mass_u");

    auto tl = parse_error([&] { parse_config(replace_line(base, "material.gamma_ev", "")); });
    CHECK(tl.key == "material.gamma_ev");

    auto both = parse_error([&] { parse_config(base + "atom.c6_ev_nm6 = 0.002\n"); });
    CHECK(both.key == "atom.c6_ev_nm6");

    auto spread = parse_error([&] { parse_config(base + "beam.dv_over_u = 1.5\n"); });
    CHECK(spread.key == "beam.dv_over_u");

    auto slit = parse_error([&] { parse_config(replace_line(base, "geometry.s0", "geometry.s0 = 120")); });
    CHECK(slit.key == "geometry.s0");

    auto points = parse_error([&] { parse_config(base + "run.velocity_points = 4\n"); });
    CHECK(points.key == "run.velocity_points");

    auto seed = parse_error([&] { parse_config(base + "run.seed = -1\n"); });
    CHECK(seed.key == "run.seed");
}

TEST_CASE("config variants")
{
    std::string const base = slurp(he_config);
    SUBCASE("C6 sets the atomic energy")
    {
        std::string text = replace_line(base, "atom.ea_ev", "atom.c6_ev_nm6 = 1.956e-3");
        RunConfig c = parse_config(text);
        CHECK(c.atom_energy_ev() == doctest::Approx(1.19).epsilon(0.01));
    }
    SUBCASE("one-oscillator surface only")
    {
        std::string text = base;
        for (auto key : {"material.omega_t_ev", "material.a_ev", "material.omega_ev", "material.gamma_ev"})
            text = replace_line(text, key, "");
        CHECK_THROWS_AS(parse_config(text), ParseError);
        RunConfig c = parse_config(text + "material.g0 = 0.588\n");
        CHECK_FALSE(c.material.tauc_lorentz);
        CHECK(*c.material.g0 == 0.588);
    }
    SUBCASE("comments, blanks and CRLF")
    {
        std::string text = "# header\r\n\r\n" + base;
        std::string crlf;
        for (char ch : text)
            crlf += ch == '\n' ? std::string("\r\n") : std::string(1, ch);
        CHECK(parse_config(crlf).c3_mev_nm3 == 4.1);
    }
    SUBCASE("canonical form round trip")
    {
        RunConfig c = parse_config(base + "run.seed = 18446744073709551615\nbeam.dv_over_u = 0.03\n");
        std::string text = format_config(c);
        CHECK(format_config(parse_config(text)) == text);
        CHECK(parse_config(text).run.seed == 18446744073709551615ull);
    }
    SUBCASE("report extraction")
    {
        std::string report = "# vdwg report\ntool.version = 1\n" + format_config(parse_config(base))
                             + "result.c3 = 3\n";
        CHECK(extract_config_text(report) == format_config(parse_config(base)));
    }
    SUBCASE("shortest round-trip doubles")
    {
        CHECK(format_double(0.1) == "0.1");
        CHECK(format_double(66.8) == "66.8");
        std::mt19937_64 gen(3);
        for (int i = 0; i < 1000; ++i)
        {
            double x = std::bit_cast<double>(gen() & 0x7fefffffffffffffull);
            CHECK(std::stod(format_double(x)) == x);
        }
    }
}

TEST_CASE("help lists every key")
{
    auto r = cli({"--help"});
    CHECK(r.code == 0);
    for (auto const& info : config_keys())
        CHECK(r.out.find(std::string(info.path)) != std::string::npos);
    for (auto sub : {"simulate", "fit", "theory", "synth"})
        CHECK(r.out.find(sub) != std::string::npos);
    auto sub = cli({"theory", "--help"});
    CHECK(sub.code == 0);
    CHECK(sub.out.find("atom.table") != std::string::npos);
}

//---------------------------------------------------------------------------//
// CSV
//---------------------------------------------------------------------------//
TEST_CASE("orders CSV")
{
    std::vector<std::string> warnings;
    std::istringstream good("n,intensity,sigma\n0,0.5,0.01\n1,0.25,0.01\n-1,0.25,0.01\n");
    OrderIntensities o = read_orders_csv(good, &warnings);
    CHECK(warnings.empty());
    CHECK(o.total() == 1);
    CHECK(o.orders.at(-1).sigma == 0.01);

    std::istringstream twice("n,intensity\n0,1.0\n1,0.5\n-1,0.5\n");
    OrderIntensities r = read_orders_csv(twice, &warnings);
    CHECK(warnings.size() == 1);
    CHECK(r.total() == doctest::Approx(1).epsilon(1e-15));
    CHECK(r.orders.at(0).intensity == 0.5);
    CHECK_FALSE(r.has_sigma());

    auto row_of = [](std::string const& text) {
        std::istringstream in(text);
        try
        {
            read_orders_csv(in);
        }
        catch (FormatError const& e)
        {
            return static_cast<long>(e.row);
        }
        return -1L;
    };
    CHECK(row_of("n,intensity,sigma\nx,1,1\n") == 1);
    CHECK(row_of("n,intensity\n0,1\n1,2,3\n") == 2);
    CHECK(row_of("n,intensity\n0,1\n0,2\n") == 2);
    CHECK(row_of("n,intensity\n0,-1\n") == 1);
    CHECK(row_of("order,value\n0,1\n") == 0);
    CHECK(row_of("") == 0);
    CHECK(row_of("n,intensity\n") == 0);
}

TEST_CASE("scan CSV")
{
    std::istringstream good("theta_rad,counts\n-1e-3,5\n0,10\n1e-3,5\n");
    AngularScan s = read_scan_csv(good);
    CHECK(s.size() == 3);
    std::istringstream back("theta_rad,counts\n0,5\n1e-3,10\n1e-3,5\n");
    try
    {
        read_scan_csv(back);
        FAIL("expected a format error");
    }
    catch (FormatError const& e)
    {
        CHECK(e.row == 3);
    }
    std::istringstream neg("theta_rad,counts\n0,-5\n");
    CHECK_THROWS_AS(read_scan_csv(neg), FormatError);
}

TEST_CASE("CSV round trips are lossless")
{
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0, 1);
    OrderIntensities o;
    double total = 0;
    for (int n = -5; n <= 5; ++n)
    {
        o.orders[n].intensity = u(gen);
        total += o.orders[n].intensity;
    }
    for (auto& [n, v] : o.orders)
    {
        v.intensity /= total;
        v.sigma = u(gen) * 1e-3;
    }
    o.orders[0].sigma.reset();
    std::stringstream buf;
    write_orders_csv(buf, o);
    std::vector<std::string> warnings;
    OrderIntensities back = read_orders_csv(buf, &warnings);
    if (warnings.empty())
    {
        for (auto const& [n, v] : o.orders)
        {
            CHECK(back.orders.at(n).intensity == v.intensity);
            CHECK(back.orders.at(n).sigma == v.sigma);
        }
    }
    else
    {
        // A sum off by more than 1e-12 would have been rescaled
        CHECK(std::abs(total - 1) > 0);
    }

    AngularScan scan;
    double theta = -0.01;
    for (int i = 0; i < 1000; ++i)
    {
        theta += u(gen) * 1e-5 + 1e-12;
        scan.theta_rad.push_back(theta);
        scan.value.push_back(u(gen) * 1e6);
    }
    std::stringstream sbuf;
    write_scan_csv(sbuf, scan);
    AngularScan sback = read_scan_csv(sbuf);
    CHECK(sback.theta_rad == scan.theta_rad);
    CHECK(sback.value == scan.value);
}

//---------------------------------------------------------------------------//
// SUBCOMMANDS
//---------------------------------------------------------------------------//
TEST_CASE("theory routes")
{
    TempDir tmp;
    auto kk = cli({"theory", "--config", he_config.string(), "--route", "kk", "--out",
                   (tmp / "kk.txt").string(), "--dump-eps", (tmp / "eps.csv").string()});
    REQUIRE(kk.code == 0);
    auto report = read_report(tmp / "kk.txt");
    double c3 = std::stod(report.at("result.c3_mev_nm3"));
    CHECK(c3 > 3.5);
    CHECK(c3 < 4.0);
    CHECK(std::stod(report.at("result.g0")) == doctest::Approx(0.588).epsilon(0.01));
    CHECK(report.at("tool.version") == version());
    CHECK(report.at("tool.rng") == "mt19937_64+splitmix64-seed+box-muller/v1");
    CHECK(report.at("geometry.s0") == "66.8");
    // Fixed scientific notation with 9 significant digits
    CHECK(report.at("result.c3_mev_nm3").size() == std::string("3.69451560e+00").size());

    std::string eps = slurp(tmp / "eps.csv");
    CHECK(eps.rfind("energy_ev,eps\n", 0) == 0);
    CHECK(std::count(eps.begin(), eps.end(), '\n') == 513);

    // The report reproduces itself
    auto again = cli({"theory", "--config", (tmp / "kk.txt").string(), "--route", "kk", "--out",
                      (tmp / "kk2.txt").string()});
    REQUIRE(again.code == 0);
    CHECK(slurp(tmp / "kk.txt") == slurp(tmp / "kk2.txt"));

    auto one = cli({"theory", "--config", he_config.string(), "--route", "one-osc", "--out",
                    (tmp / "one.txt").string()});
    REQUIRE(one.code == 0);
    CHECK(std::stod(read_report(tmp / "one.txt").at("result.c3_mev_nm3"))
          == doctest::Approx(3.7).epsilon(0.02));

    // Table route, with a path relative to the config file
    std::ostringstream table;
    table << "# E alpha\n0 0.0468\n";
    for (int i = 0; i <= 300; ++i)
    {
        double e = 1e-3 * std::pow(1e6, i / 300.0);
        table << format_double(e) << ' ' << format_double(0.0468 / (1 + (e / 1.18) * (e / 1.18)))
              << '\n';
    }
    write(tmp / "alpha.txt", table.str());
    write(tmp / "table.cfg", slurp(he_config) + "atom.table = alpha.txt\n");
    auto tab = cli({"theory", "--config", (tmp / "table.cfg").string(), "--route", "table", "--out",
                    (tmp / "table.txt").string()});
    REQUIRE(tab.code == 0);
    CHECK(std::stod(read_report(tmp / "table.txt").at("result.c3_mev_nm3"))
          == doctest::Approx(c3).epsilon(1e-4));

    auto no_table = cli({"theory", "--config", he_config.string(), "--route", "table", "--out",
                         (tmp / "x.txt").string()});
    CHECK(no_table.code == 2);
}

TEST_CASE("simulate then fit")
{
    TempDir tmp;
    for (fs::path cfg : {he_config, ne_config})
    {
        auto sim = cli({"simulate", "--config", cfg.string(), "--orders", "--out",
                        (tmp / "orders.csv").string()});
        REQUIRE(sim.code == 0);
        OrderIntensities orders = load_orders_csv(tmp / "orders.csv");
        CHECK(orders.orders.size() == 21);

        auto fit = cli({"fit", "--config", cfg.string(), "--data", (tmp / "orders.csv").string(),
                        "--out", (tmp / "fit.txt").string()});
        REQUIRE(fit.code == 0);
        auto report = read_report(tmp / "fit.txt");
        double truth = load_config(cfg).c3_mev_nm3;
        CHECK(std::abs(std::stod(report.at("result.c3_hat")) / truth - 1) < 0.005);
        CHECK(report.count("result.uncertainty"));
        CHECK(report.count("result.chi2"));
        CHECK(report.count("result.residual.-10"));
        CHECK(report.count("result.residual.10"));
        CHECK(report.at("tool.command") == "fit");
    }

    auto scan = cli({"simulate", "--config", he_config.string(), "--scan", "--out",
                     (tmp / "scan.csv").string()});
    REQUIRE(scan.code == 0);
    CHECK(load_scan_csv(tmp / "scan.csv").size() > 1000);
}

TEST_CASE("synth then fit the scan")
{
    TempDir tmp;
    auto a = cli({"synth", "--config", he_config.string(), "--noise", "0.01", "--seed", "42",
                  "--out", (tmp / "a.csv").string()});
    auto b = cli({"synth", "--config", he_config.string(), "--noise", "0.01", "--seed", "42",
                  "--out", (tmp / "b.csv").string()});
    auto c = cli({"synth", "--config", he_config.string(), "--noise", "0.01", "--seed", "43",
                  "--out", (tmp / "c.csv").string()});
    REQUIRE(a.code == 0);
    CHECK(slurp(tmp / "a.csv") == slurp(tmp / "b.csv"));
    CHECK(slurp(tmp / "a.csv") != slurp(tmp / "c.csv"));

    auto fit = cli({"fit", "--config", he_config.string(), "--scan-data", (tmp / "a.csv").string(),
                    "--out", (tmp / "fit.txt").string()});
    REQUIRE(fit.code == 0);
    auto report = read_report(tmp / "fit.txt");
    CHECK(std::abs(std::stod(report.at("result.c3_hat")) / 4.1 - 1) < 0.05);
    CHECK(report.at("result.chi2_rescaled") == "false");
}

TEST_CASE("exit codes and error lines")
{
    TempDir tmp;
    auto usage = cli({"theory", "--route", "kk", "--out", (tmp / "x").string()});
    CHECK(usage.code == 1);
    CHECK(usage.err.rfind("error kind=usage exit=1 ", 0) == 0);
    CHECK(cli({}).code == 1);
    CHECK(cli({"theory", "--config", he_config.string(), "--route", "magic", "--out", "x"}).code == 1);
    CHECK(cli({"fit", "--config", he_config.string(), "--out", "x"}).code == 1);

    auto missing = cli({"theory", "--config", (tmp / "none.cfg").string(), "--route", "kk",
                        "--out", (tmp / "x").string()});
    CHECK(missing.code == 2);
    CHECK(missing.err.rfind("error kind=invalid-input exit=2 ", 0) == 0);

    write(tmp / "bad.cfg", replace_line(slurp(he_config), "geometry.beta_deg", "geometry.beta_deg = 95"));
    auto bad = cli({"theory", "--config", (tmp / "bad.cfg").string(), "--route", "kk", "--out",
                    (tmp / "x").string()});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("kind=parse") != std::string::npos);
    CHECK(bad.err.find("line 5") != std::string::npos);

    write(tmp / "bad.csv", "n,intensity\n1,0.5\nx,1\n");
    auto format = cli({"fit", "--config", he_config.string(), "--data", (tmp / "bad.csv").string(),
                       "--out", (tmp / "x").string()});
    CHECK(format.code == 2);
    CHECK(format.err.find("kind=format") != std::string::npos);
    CHECK(format.err.find("row 2") != std::string::npos);

    // Data generated without any attraction put the minimum on the lower bound
    write(tmp / "zero.cfg", replace_line(slurp(he_config), "potential.c3_mev_nm3", "potential.c3_mev_nm3 = 0"));
    REQUIRE(cli({"simulate", "--config", (tmp / "zero.cfg").string(), "--out",
                 (tmp / "zero.csv").string()}).code == 0);
    auto boundary = cli({"fit", "--config", he_config.string(), "--data", (tmp / "zero.csv").string(),
                         "--out", (tmp / "x").string()});
    CHECK(boundary.code == 3);
    CHECK(boundary.err.find("kind=boundary-solution") != std::string::npos);
}
