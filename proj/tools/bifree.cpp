// bifree — command-line front end for the bi-free probability toolkit.
//
// Exit codes: 0 success, 1 malformed input, 2 numerical failure.
#include <complex>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bifree/io.hpp"

using namespace bifree;

namespace {

constexpr const char* kVersion = "bifree 1.0.0";

// Parse "re,im" or a bare real into a complex number.
complex parse_point(const std::string& s) {
    std::istringstream in(s);
    double re = 0, im = 0;
    char comma = 0;
    if (!(in >> re)) throw invalid_measure("bad point component: " + s);
    if (in >> comma) {
        if (comma != ',' || !(in >> im))
            throw invalid_measure("bad point component: " + s);
    }
    if (!std::isfinite(re) || !std::isfinite(im))
        throw invalid_measure("non-finite point component: " + s);
    return {re, im};
}

std::vector<std::pair<complex, complex>> parse_points(
    const std::vector<std::string>& raw) {
    if (raw.empty() || raw.size() % 2 != 0)
        throw invalid_measure("--point expects z w pairs (each \"re,im\")");
    std::vector<std::pair<complex, complex>> out;
    for (std::size_t i = 0; i < raw.size(); i += 2)
        out.emplace_back(parse_point(raw[i]), parse_point(raw[i + 1]));
    return out;
}

json echo_header(const std::string& command, const json& params) {
    return {{"tool", kVersion}, {"command", command}, {"parameters", params}};
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

Measure2D load_probability(const std::string& path) {
    return require_probability_2d(parse_measure_file(path), path.c_str());
}

GridSpec2D grid_for(const LawTransforms& law, std::size_t n, double y,
                    double extent) {
    if (extent > 0) return {-extent, extent, -extent, extent, n, n, y};
    return default_grid(law.scale, y, n);
}

int run(int argc, char** argv) {
    CLI::App app{"bi-free probability toolkit: 2-D Cauchy/R transforms, bi-free "
                 "convolution, Levy-Khintchine calculus, limit-theorem demos"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // common option storage
    std::string measure_path, measure2_path, jump_path, quint_path, out_csv,
        out_json;
    std::vector<std::string> raw_points;
    double a = 1, b = 1, c = 0, g1p = 0, g2p = 0, lambda = 1;
    double y = 0.05, extent = 0;
    std::size_t grid_n = 101;
    std::vector<int> n_list = {100, 1000, 10000};
    std::vector<double> t_list = {0.5, 1.0, 2.0};
    int maxdeg = 4;

    auto add_grid = [&](CLI::App* cmd) {
        cmd->add_option("--grid", grid_n, "grid nodes per axis")->default_val(101);
        cmd->add_option("--smoothing", y, "inversion height y")->default_val(0.05);
        cmd->add_option("--extent", extent,
                        "half-width of the grid (0 = auto from support)");
    };
    auto add_points = [&](CLI::App* cmd) {
        cmd->add_option("--point", raw_points,
                        "probe pair: z w, each as \"re,im\" (repeatable)");
    };

    CLI::App* eval_g = app.add_subcommand(
        "eval-g", "evaluate the 2-D Cauchy transform of a measure");
    eval_g->add_option("measure", measure_path, "measure JSON")->required();
    add_points(eval_g);

    CLI::App* eval_r = app.add_subcommand(
        "eval-r", "evaluate the partial R-transform of a measure");
    eval_r->add_option("measure", measure_path, "measure JSON")->required();
    add_points(eval_r);

    CLI::App* convolve =
        app.add_subcommand("convolve", "bi-free additive convolution");
    convolve->add_option("a", measure_path, "first measure JSON")->required();
    convolve->add_option("b", measure2_path, "second measure JSON")->required();
    convolve->add_option("--density-out", out_csv, "density CSV path")->required();
    convolve->add_option("--cumulants-out", out_json, "cumulant JSON path")
        ->required();
    convolve->add_option("--maxdeg", maxdeg, "cumulant degree")->default_val(4);
    add_grid(convolve);

    CLI::App* invert = app.add_subcommand(
        "invert", "invert a measure or quintuple to a grid density");
    invert->add_option("--measure", measure_path, "measure JSON");
    invert->add_option("--quintuple", quint_path, "quintuple JSON");
    invert->add_option("--out", out_csv, "density CSV path")->required();
    add_grid(invert);

    CLI::App* gaussian =
        app.add_subcommand("gaussian", "bi-free Gaussian density and R values");
    gaussian->add_option("--a", a, "variance of the first face")->default_val(1.0);
    gaussian->add_option("--b", b, "variance of the second face")->default_val(1.0);
    gaussian->add_option("--c", c, "covariance")->default_val(0.0);
    gaussian->add_option("--gamma1", g1p, "first shift")->default_val(0.0);
    gaussian->add_option("--gamma2", g2p, "second shift")->default_val(0.0);
    gaussian->add_option("--out", out_csv, "density CSV path (default stdout)");
    add_grid(gaussian);
    add_points(gaussian);

    CLI::App* poisson = app.add_subcommand(
        "poisson", "compound bi-free Poisson R values and density");
    poisson->add_option("--rate", lambda, "rate")->default_val(1.0);
    poisson->add_option("--jump", jump_path, "jump measure JSON")->required();
    poisson->add_option("--out", out_csv, "density CSV path (optional)");
    add_grid(poisson);
    add_points(poisson);

    CLI::App* lk_val =
        app.add_subcommand("lk-validate", "validate a Levy-Khintchine quintuple");
    lk_val->add_option("quintuple", quint_path, "quintuple JSON")->required();

    CLI::App* lk_dec = app.add_subcommand(
        "lk-decompose", "split a quintuple into Gaussian/product/Poisson parts");
    lk_dec->add_option("quintuple", quint_path, "quintuple JSON")->required();

    CLI::App* lk_ev =
        app.add_subcommand("lk-eval", "evaluate the quintuple integral form");
    lk_ev->add_option("quintuple", quint_path, "quintuple JSON")->required();
    add_points(lk_ev);

    CLI::App* clt = app.add_subcommand(
        "clt-demo", "central-limit triangular array convergence report");
    clt->add_option("--c", c, "target covariance")->default_val(0.5);
    clt->add_option("--n", n_list, "n-list")->default_val(std::vector<int>{100, 1000, 10000});

    CLI::App* pdemo = app.add_subcommand(
        "poisson-demo", "Poisson triangular array convergence report");
    pdemo->add_option("--rate", lambda, "rate")->default_val(1.0);
    pdemo->add_option("--jump", jump_path, "jump measure JSON")->required();
    pdemo->add_option("--n", n_list, "n-list")->default_val(std::vector<int>{100, 1000, 10000});

    CLI::App* semi = app.add_subcommand(
        "semigroup", "evaluate the semigroup R-transforms t * R at probe points");
    semi->add_option("quintuple", quint_path, "quintuple JSON")->required();
    semi->add_option("--t", t_list, "t-list")->default_val(std::vector<double>{0.5, 1.0, 2.0});
    add_points(semi);

    CLI11_PARSE(app, argc, argv);

    auto default_probes = [&] {
        return raw_points.empty() ? default_probe_grid() : parse_points(raw_points);
    };

    if (eval_g->parsed()) {
        Measure2D mu = load_probability(measure_path);
        json vals = json::array();
        for (auto [z, w] : raw_points.empty()
                               ? std::vector<std::pair<complex, complex>>{{complex(0, 1), complex(0, 1)}}
                               : parse_points(raw_points)) {
            complex v = g2(mu, z, w);
            vals.push_back({{"z", fmt17(z)}, {"w", fmt17(w)}, {"G", fmt17(v)}});
        }
        json rep = echo_header("eval-g", {{"measure", measure_path}});
        rep["values"] = vals;
        emit(rep);
        return 0;
    }

    if (eval_r->parsed()) {
        Measure2D mu = load_probability(measure_path);
        PartialREvaluator ev = partial_r_evaluator(mu);
        json vals = json::array();
        for (auto [z, w] : default_probes()) {
            complex v = ev(z, w);
            vals.push_back({{"z", fmt17(z)},
                            {"w", fmt17(w)},
                            {"R", fmt17(v)},
                            {"in_omega", ev.omega.contains(z, w)}});
        }
        json rep = echo_header("eval-r", {{"measure", measure_path}});
        rep["values"] = vals;
        emit(rep);
        return 0;
    }

    if (convolve->parsed()) {
        Measure2D mu = load_probability(measure_path);
        Measure2D nu = load_probability(measure2_path);
        GridSpec2D spec = grid_for(law_sum_measures(mu, nu), grid_n, y, extent);
        ConvolutionResult res = bifree_convolve(mu, nu, spec, maxdeg);
        write_csv_file(out_csv, res.density);
        json rep = echo_header("convolve", {{"a", measure_path},
                                            {"b", measure2_path},
                                            {"grid", grid_n},
                                            {"smoothing", y},
                                            {"maxdeg", maxdeg}});
        rep["cumulants"] = serialize(res.cumulants);
        rep["density_csv"] = out_csv;
        rep["mass"] = res.density.riemann_mass();
        std::ofstream out(out_json);
        if (!out) throw invalid_measure("cannot write file: " + out_json);
        out << rep.dump(2) << "\n";
        emit(rep);
        return 0;
    }

    if (invert->parsed()) {
        if (measure_path.empty() == quint_path.empty())
            throw invalid_measure("invert: give exactly one of --measure/--quintuple");
        LawTransforms law = measure_path.empty()
                                ? law_from_quintuple(parse_quintuple_file(quint_path))
                                : law_from_measure(load_probability(measure_path));
        GridSpec2D spec = grid_for(law, grid_n, y, extent);
        GridDensity2D grid = invert2d(law.g, spec.x_min, spec.x_max, spec.u_min,
                                      spec.u_max, spec.n_x, spec.n_u, spec.y);
        write_csv_file(out_csv, grid);
        json rep = echo_header(
            "invert", {{"measure", measure_path}, {"quintuple", quint_path},
                       {"grid", grid_n}, {"smoothing", y}});
        rep["density_csv"] = out_csv;
        rep["mass"] = grid.riemann_mass();
        emit(rep);
        return 0;
    }

    if (gaussian->parsed()) {
        GaussianParams p{g1p, g2p, a, b, c};
        p.validate();
        auto law = law_from_gaussian(p);
        double L = extent > 0 ? extent : 2.0 * std::sqrt(std::max(a, b)) + 0.5;
        GridDensity2D grid;
        grid.x_min = -L; grid.x_max = L; grid.u_min = -L; grid.u_max = L;
        grid.n_x = grid_n; grid.n_u = grid_n; grid.y = 0;
        grid.values.resize(grid_n * grid_n);
        for (std::size_t i = 0; i < grid_n; ++i)
            for (std::size_t j = 0; j < grid_n; ++j)
                grid.values[i * grid_n + j] =
                    gaussian_density(p, grid.x(i), grid.u(j));
        if (out_csv.empty()) {
            write_csv(std::cout, grid);
        } else {
            write_csv_file(out_csv, grid);
        }
        json rep = echo_header("gaussian", {{"a", a}, {"b", b}, {"c", c},
                                            {"gamma1", g1p}, {"gamma2", g2p},
                                            {"grid", grid_n}});
        json vals = json::array();
        for (auto [z, w] : default_probes())
            vals.push_back({{"z", fmt17(z)}, {"w", fmt17(w)},
                            {"R", fmt17(gaussian_r(p, z, w))}});
        rep["r_values"] = vals;
        if (!out_csv.empty()) {
            rep["density_csv"] = out_csv;
            emit(rep);
        }
        return 0;
    }

    if (poisson->parsed()) {
        Measure2D jump = load_probability(jump_path);
        json rep = echo_header("poisson", {{"rate", lambda}, {"jump", jump_path}});
        json vals = json::array();
        for (auto [z, w] : default_probes())
            vals.push_back({{"z", fmt17(z)}, {"w", fmt17(w)},
                            {"R", fmt17(compound_poisson_r(lambda, jump, z, w))}});
        rep["r_values"] = vals;
        if (!out_csv.empty()) {
            auto law = law_from_compound_poisson(lambda, jump);
            GridSpec2D spec = grid_for(law, grid_n, y, extent);
            GridDensity2D grid = invert2d(law.g, spec.x_min, spec.x_max, spec.u_min,
                                          spec.u_max, spec.n_x, spec.n_u, spec.y);
            write_csv_file(out_csv, grid);
            rep["density_csv"] = out_csv;
            rep["mass"] = grid.riemann_mass();
        }
        emit(rep);
        return 0;
    }

    if (lk_val->parsed()) {
        LKQuintupleGeneral q = parse_quintuple_file(quint_path);
        ValidationReport v = lk_validate(q);
        json rep = echo_header("lk-validate", {{"quintuple", quint_path}});
        rep["verdict"] = v.valid() ? "VALID" : "INVALID";
        rep["report"] = serialize(v);
        emit(rep);
        return 0;
    }

    if (lk_dec->parsed()) {
        LKQuintupleGeneral q = parse_quintuple_file(quint_path);
        json rep = echo_header("lk-decompose", {{"quintuple", quint_path}});
        rep["decomposition"] = serialize(lk_decompose(q));
        emit(rep);
        return 0;
    }

    if (lk_ev->parsed()) {
        LKQuintupleGeneral q = parse_quintuple_file(quint_path);
        json rep = echo_header("lk-eval", {{"quintuple", quint_path}});
        json vals = json::array();
        for (auto [z, w] : default_probes())
            vals.push_back({{"z", fmt17(z)}, {"w", fmt17(w)},
                            {"R", fmt17(lk_r_general(q, z, w))}});
        rep["r_values"] = vals;
        emit(rep);
        return 0;
    }

    auto limit_report = [&](const char* name, const ArraySpec& array,
                            const json& params) {
        LimitReport lrep = check_limit_theorem(array, default_probes(), n_list);
        json rep = echo_header(name, params);
        rep["report"] = serialize(lrep);
        emit(rep);
        return 0;  // the verdict lives in the report, as for lk-validate
    };

    if (clt->parsed())
        return limit_report("clt-demo", clt_array(c), {{"c", c}, {"n", n_list}});

    if (pdemo->parsed()) {
        Measure2D jump = load_probability(jump_path);
        return limit_report("poisson-demo", poisson_array(lambda, jump),
                            {{"rate", lambda}, {"jump", jump_path}, {"n", n_list}});
    }

    if (semi->parsed()) {
        LKQuintupleGeneral q = parse_quintuple_file(quint_path);
        ValidationReport v = lk_validate(q);
        if (!v.valid()) throw invalid_measure("semigroup: quintuple is not valid");
        json rep = echo_header("semigroup", {{"quintuple", quint_path}, {"t", t_list}});
        json rows = json::array();
        for (double t : t_list) {
            if (t < 0) throw invalid_measure("semigroup: t must be nonnegative");
            LKQuintupleGeneral qt = lk_scale(q, t);
            json vals = json::array();
            for (auto [z, w] : default_probes())
                vals.push_back({{"z", fmt17(z)}, {"w", fmt17(w)},
                                {"R", fmt17(lk_r_general(qt, z, w))}});
            rows.push_back({{"t", t}, {"r_values", vals}});
        }
        rep["values"] = rows;
        emit(rep);
        return 0;
    }

    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const invalid_measure& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
