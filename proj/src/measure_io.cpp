#include "freeconv/errors.hpp"
#include "freeconv/measure.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace freeconv {

namespace {

using nlohmann::json;

Domain parse_domain(const std::string& s) {
    if (s == "real") return Domain::RealLine;
    if (s == "positive") return Domain::PositiveHalfline;
    if (s == "circle") return Domain::UnitCircle;
    throw ArgumentError("measure json: unknown domain tag '" + s + "'");
}

const char* domain_tag(Domain d) {
    switch (d) {
        case Domain::RealLine: return "real";
        case Domain::PositiveHalfline: return "positive";
        case Domain::UnitCircle: return "circle";
    }
    return "real";
}

Measure from_json(const json& j, ConstructionReport* report) {
    if (!j.is_object()) throw ArgumentError("measure json: top level must be an object");
    if (!j.contains("domain") || !j.at("domain").is_string())
        throw ArgumentError("measure json: missing string field 'domain'");
    const Domain domain = parse_domain(j.at("domain").get<std::string>());

    std::vector<Atom> atoms;
    if (j.contains("atoms")) {
        if (!j.at("atoms").is_array())
            throw ArgumentError("measure json: 'atoms' must be an array");
        for (const auto& ja : j.at("atoms")) {
            if (!ja.is_object() || !ja.contains("x") || !ja.contains("mass"))
                throw ArgumentError("measure json: atom entries need 'x' and 'mass'");
            atoms.push_back({ja.at("x").get<double>(), ja.at("mass").get<double>()});
        }
    }

    Eigen::ArrayXd grid(0), values(0);
    if (j.contains("ac") && !j.at("ac").is_null()) {
        const auto& ac = j.at("ac");
        if (!ac.is_object() || !ac.contains("grid") || !ac.contains("values"))
            throw ArgumentError("measure json: 'ac' needs 'grid' and 'values' arrays");
        const auto& jg = ac.at("grid");
        const auto& jv = ac.at("values");
        if (!jg.is_array() || !jv.is_array())
            throw ArgumentError("measure json: 'ac' grid/values must be arrays");
        grid.resize(static_cast<Eigen::Index>(jg.size()));
        values.resize(static_cast<Eigen::Index>(jv.size()));
        for (Eigen::Index i = 0; i < grid.size(); ++i) grid(i) = jg.at(i).get<double>();
        for (Eigen::Index i = 0; i < values.size(); ++i) values(i) = jv.at(i).get<double>();
    }
    return Measure::make(domain, std::move(atoms), std::move(grid), std::move(values), report);
}

std::string position_hint(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    std::ostringstream os;
    os << "line " << line << ", column " << col;
    return os.str();
}

}  // namespace

Measure parse_measure_json(const std::string& text, ConstructionReport* report) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ArgumentError("measure json: parse error at " +
                            position_hint(text, e.byte ? e.byte - 1 : 0) + ": " + e.what());
    }
    return from_json(j, report);
}

Measure load_measure_json(const std::string& path, ConstructionReport* report) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("measure json: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_measure_json(ss.str(), report);
}

std::string measure_to_json(const Measure& m) {
    json j;
    j["domain"] = domain_tag(m.domain());
    json atoms = json::array();
    for (const auto& a : m.atoms()) atoms.push_back({{"x", a.x}, {"mass", a.mass}});
    j["atoms"] = std::move(atoms);
    json grid = json::array(), values = json::array();
    for (Eigen::Index i = 0; i < m.ac_grid().size(); ++i) {
        grid.push_back(m.ac_grid()(i));
        values.push_back(m.ac_values()(i));
    }
    j["ac"] = {{"grid", std::move(grid)}, {"values", std::move(values)}};
    return j.dump(2);
}

void save_measure_json(const Measure& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("measure json: cannot write '" + path + "'");
    out << measure_to_json(m) << "\n";
}

}  // namespace freeconv
