#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <variant>

#include <json.hpp>

#include "bifree/levy.hpp"
#include "bifree/limits.hpp"
#include "bifree/measure.hpp"
#include "bifree/partial_r.hpp"

namespace bifree {

using json = nlohmann::json;

/// Fixed 17-significant-digit rendering; identical inputs give identical bytes.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", v);
    return buf;
}

inline std::string fmt17(complex v) {
    return fmt17(v.real()) + (v.imag() < 0 ? "" : "+") + fmt17(v.imag()) + "i";
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_measure("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw invalid_measure("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

// ---------------------------------------------------------------------------
// Measure schema: {"atoms": [[s, t, w], ...]} (2-D) or {"atoms": [[x, w], ...]}
// (1-D).  Signedness is inferred from the weights.
// ---------------------------------------------------------------------------

using AnyMeasure =
    std::variant<Measure1D, SignedMeasure1D, Measure2D, SignedMeasure2D>;

namespace detail {

inline double finite_number(const json& v, const char* what) {
    if (!v.is_number()) throw invalid_measure(std::string(what) + ": not a number");
    double d = v.get<double>();
    if (!std::isfinite(d))
        throw invalid_measure(std::string(what) + ": NaN/Inf rejected");
    return d;
}

}  // namespace detail

inline AnyMeasure parse_measure(const json& j) {
    if (!j.is_object() || !j.contains("atoms") || !j["atoms"].is_array() ||
        j["atoms"].empty())
        throw invalid_measure("measure schema: expected nonempty \"atoms\" array");
    const json& atoms = j["atoms"];
    std::size_t arity = atoms[0].is_array() ? atoms[0].size() : 0;
    if (arity != 2 && arity != 3)
        throw invalid_measure("measure schema: atoms must be [x,w] or [s,t,w]");
    bool negative = false;
    if (arity == 2) {
        std::vector<Atom1D> out;
        for (const json& a : atoms) {
            if (!a.is_array() || a.size() != 2)
                throw invalid_measure("measure schema: mixed atom arity");
            double x = detail::finite_number(a[0], "atom coordinate");
            double w = detail::finite_number(a[1], "atom weight");
            if (w < 0) negative = true;
            out.push_back({x, w});
        }
        if (negative) return SignedMeasure1D{detail::dedup(std::move(out))};
        return Measure1D{detail::dedup(std::move(out))};
    }
    std::vector<Atom2D> out;
    for (const json& a : atoms) {
        if (!a.is_array() || a.size() != 3)
            throw invalid_measure("measure schema: mixed atom arity");
        double s = detail::finite_number(a[0], "atom coordinate");
        double t = detail::finite_number(a[1], "atom coordinate");
        double w = detail::finite_number(a[2], "atom weight");
        if (w < 0) negative = true;
        out.push_back({s, t, w});
    }
    if (negative) return SignedMeasure2D{detail::dedup(std::move(out))};
    return Measure2D{detail::dedup(std::move(out))};
}

inline AnyMeasure parse_measure_file(const std::string& path) {
    return parse_measure(load_json_file(path));
}

inline Measure2D require_probability_2d(const AnyMeasure& m, const char* what) {
    if (const Measure2D* p = std::get_if<Measure2D>(&m)) {
        if (!p->is_probability())
            throw invalid_measure(std::string(what) + ": not a probability measure");
        return *p;
    }
    throw invalid_measure(std::string(what) +
                          ": expected a positive planar measure");
}

inline json serialize(const Measure1D& m) {
    json atoms = json::array();
    for (const Atom1D& a : m.atoms) atoms.push_back({a.x, a.w});
    return {{"atoms", atoms}};
}
inline json serialize(const SignedMeasure1D& m) {
    json atoms = json::array();
    for (const Atom1D& a : m.atoms) atoms.push_back({a.x, a.w});
    return {{"atoms", atoms}};
}
inline json serialize(const Measure2D& m) {
    json atoms = json::array();
    for (const Atom2D& a : m.atoms) atoms.push_back({a.s, a.t, a.w});
    return {{"atoms", atoms}};
}
inline json serialize(const SignedMeasure2D& m) {
    json atoms = json::array();
    for (const Atom2D& a : m.atoms) atoms.push_back({a.s, a.t, a.w});
    return {{"atoms", atoms}};
}

inline json serialize(const AnyMeasure& m) {
    return std::visit([](const auto& x) { return serialize(x); }, m);
}

// ---------------------------------------------------------------------------
// Quintuple schema: {"gamma": [g1, g2], "rho1": {...}, "rho2": {...},
// "rho": {...}} with measure sub-objects.
// ---------------------------------------------------------------------------

inline LKQuintupleGeneral parse_quintuple(const json& j) {
    if (!j.is_object() || !j.contains("gamma") || !j["gamma"].is_array() ||
        j["gamma"].size() != 2)
        throw invalid_measure("quintuple schema: expected \"gamma\": [g1, g2]");
    LKQuintupleGeneral q;
    q.gamma1 = detail::finite_number(j["gamma"][0], "gamma1");
    q.gamma2 = detail::finite_number(j["gamma"][1], "gamma2");
    auto read2 = [&](const char* key) -> std::vector<Atom2D> {
        if (!j.contains(key)) return {};
        const json& m = j[key];
        if (!m.is_object() || !m.contains("atoms") || !m["atoms"].is_array())
            throw invalid_measure(std::string("quintuple schema: bad ") + key);
        std::vector<Atom2D> out;
        for (const json& a : m["atoms"]) {
            if (!a.is_array() || a.size() != 3)
                throw invalid_measure(std::string("quintuple schema: bad atom in ") + key);
            out.push_back({detail::finite_number(a[0], key),
                           detail::finite_number(a[1], key),
                           detail::finite_number(a[2], key)});
        }
        return detail::dedup(std::move(out));
    };
    std::vector<Atom2D> r1 = read2("rho1"), r2 = read2("rho2");
    for (const Atom2D& a : r1)
        if (a.w < 0) throw invalid_measure("quintuple schema: rho1 must be positive");
    for (const Atom2D& a : r2)
        if (a.w < 0) throw invalid_measure("quintuple schema: rho2 must be positive");
    q.rho1 = Measure2D{std::move(r1)};
    q.rho2 = Measure2D{std::move(r2)};
    q.rho = SignedMeasure2D{read2("rho")};
    return q;
}

inline LKQuintupleGeneral parse_quintuple_file(const std::string& path) {
    return parse_quintuple(load_json_file(path));
}

inline json serialize(const LKQuintupleGeneral& q) {
    return {{"gamma", {q.gamma1, q.gamma2}},
            {"rho1", serialize(q.rho1)},
            {"rho2", serialize(q.rho2)},
            {"rho", serialize(q.rho)}};
}

// ---------------------------------------------------------------------------
// Cumulant table: {"maxdeg": d, "kappa": [[m, n, value], ...]}.
// ---------------------------------------------------------------------------

inline json serialize(const CumulantTable& t) {
    json kappa = json::array();
    for (int m = 0; m <= t.maxdeg; ++m)
        for (int n = 0; n <= t.maxdeg; ++n)
            kappa.push_back({m, n, t.at(m, n)});
    return {{"maxdeg", t.maxdeg}, {"kappa", kappa}};
}

inline CumulantTable parse_cumulants(const json& j) {
    if (!j.is_object() || !j.contains("maxdeg") || !j.contains("kappa"))
        throw invalid_measure("cumulant schema: expected maxdeg and kappa");
    CumulantTable t;
    t.maxdeg = j["maxdeg"].get<int>();
    t.kappa.assign((t.maxdeg + 1) * (t.maxdeg + 1), 0.0);
    for (const json& e : j["kappa"]) {
        int m = e[0].get<int>(), n = e[1].get<int>();
        if (m < 0 || n < 0 || m > t.maxdeg || n > t.maxdeg)
            throw invalid_measure("cumulant schema: index out of range");
        t.at(m, n) = detail::finite_number(e[2], "kappa value");
    }
    return t;
}

// ---------------------------------------------------------------------------
// CSV grid writer: header x,u,density; row-major; 17 significant digits.
// ---------------------------------------------------------------------------

inline void write_csv(std::ostream& out, const GridDensity2D& grid) {
    out << "x,u,density\n";
    for (std::size_t i = 0; i < grid.n_x; ++i)
        for (std::size_t j = 0; j < grid.n_u; ++j)
            out << fmt17(grid.x(i)) << ',' << fmt17(grid.u(j)) << ','
                << fmt17(grid.value(i, j)) << '\n';
}

inline void write_csv(std::ostream& out, const GridDensity1D& grid) {
    out << "x,density\n";
    for (std::size_t i = 0; i < grid.n; ++i)
        out << fmt17(grid.x(i)) << ',' << fmt17(grid.values[i]) << '\n';
}

inline void write_csv_file(const std::string& path, const GridDensity2D& grid) {
    std::ofstream out(path);
    if (!out) throw invalid_measure("cannot write file: " + path);
    write_csv(out, grid);
}

inline void write_csv_file(const std::string& path, const GridDensity1D& grid) {
    std::ofstream out(path);
    if (!out) throw invalid_measure("cannot write file: " + path);
    write_csv(out, grid);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json serialize(complex v) { return {v.real(), v.imag()}; }

inline json serialize(const ValidationReport& rep) {
    json issues = json::array();
    for (const ValidationIssue& i : rep.issues)
        issues.push_back(
            {{"check", i.check}, {"location", {i.s, i.t}}, {"residual", i.residual}});
    return {{"valid", rep.valid()}, {"issues", issues}};
}

inline json serialize(const LimitReport& rep) {
    json probes = json::array();
    for (const ProbeTrack& t : rep.probes) {
        json entry = {{"z", serialize(t.z)},
                      {"w", serialize(t.w)},
                      {"in_omega", t.in_omega},
                      {"failed", t.failed}};
        if (t.failed) {
            entry["error"] = t.error;
        } else {
            json sr = json::array(), dv = json::array(), ac = json::array();
            for (complex v : t.scaled_r) sr.push_back(serialize(v));
            for (complex v : t.d_values) dv.push_back(serialize(v));
            for (complex v : t.accomp) ac.push_back(serialize(v));
            entry["scaled_r"] = sr;
            entry["d_functional"] = dv;
            entry["accompaniment"] = ac;
            entry["r_limit"] = serialize(t.r_ext.limit);
            entry["r_residual"] = t.r_ext.residual;
            entry["r_order"] = t.r_ext.order;
            entry["d_limit"] = serialize(t.d_ext.limit);
            entry["d_residual"] = t.d_ext.residual;
            entry["d_order"] = t.d_ext.order;
            entry["equivalent"] = t.equivalent;
        }
        probes.push_back(std::move(entry));
    }
    json moments = json::array();
    for (const MomentTrack& t : rep.rho_moments)
        moments.push_back({{"m", t.m},
                           {"n", t.n},
                           {"values", t.values},
                           {"limit", t.ext.limit.real()},
                           {"residual", t.ext.residual},
                           {"order", t.ext.order}});
    return {{"n_list", rep.ns},
            {"probes", probes},
            {"rho_moments", moments},
            {"gamma1", rep.gamma1},
            {"gamma2", rep.gamma2},
            {"sigma1_mass", rep.sigma1_mass},
            {"sigma2_mass", rep.sigma2_mass},
            {"tail_mass", rep.tail},
            {"equivalence_ok", rep.equivalence_ok}};
}

inline json serialize(const FunctionalEqReport& rep) {
    json pts = json::array();
    for (const FunctionalEqPoint& p : rep.points) {
        json e = {{"z", serialize(p.z)},
                  {"w", serialize(p.w)},
                  {"skipped", p.skipped}};
        if (p.skipped)
            e["note"] = p.note;
        else
            e["residual"] = p.residual;
        pts.push_back(std::move(e));
    }
    return {{"points", pts}, {"max_residual", rep.max_residual}};
}

inline json serialize(const LKDecomposition& d) {
    return {{"gaussian", {{"a", d.gauss_a}, {"b", d.gauss_b}, {"c", d.gauss_c}}},
            {"product",
             {{"gamma1", d.product1.gamma},
              {"sigma1", [&] {
                   json a = json::array();
                   for (const Atom1D& x : d.product1.sigma.atoms)
                       a.push_back({x.x, x.w});
                   return a;
               }()},
              {"gamma2", d.product2.gamma},
              {"sigma2", [&] {
                   json a = json::array();
                   for (const Atom1D& x : d.product2.sigma.atoms)
                       a.push_back({x.x, x.w});
                   return a;
               }()}}},
            {"poisson",
             {{"rate", d.poisson_rate},
              {"jump", serialize(d.poisson_jump)},
              {"shift", {d.shift_s, d.shift_t}}}}};
}

}  // namespace bifree
