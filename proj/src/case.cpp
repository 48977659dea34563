#include "lascopf/case.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lascopf/error.hpp"

namespace lascopf {

using nlohmann::json;

namespace {

int line_of_offset(std::string_view text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

const json& need(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
    return *it;
}

double num(const json& obj, const char* key, const std::string& where) {
    const json& v = need(obj, key, where);
    if (!v.is_number()) throw ParseError(where + "." + key + ": expected a number");
    return v.get<double>();
}

double num_or(const json& obj, const char* key, double fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    return num(obj, key, where);
}

int integer(const json& obj, const char* key, const std::string& where) {
    const json& v = need(obj, key, where);
    if (!v.is_number_integer()) throw ParseError(where + "." + key + ": expected an integer");
    return v.get<int>();
}

const json& array_field(const json& obj, const char* key, const std::string& where) {
    const json& v = need(obj, key, where);
    if (!v.is_array()) throw ParseError(where + "." + key + ": expected an array");
    return v;
}

std::string at(const char* list, std::size_t i) {
    return std::string(list) + "[" + std::to_string(i) + "]";
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

int CaseSpec::line_index(int line_id) const {
    for (std::size_t i = 0; i < lines.size(); ++i)
        if (lines[i].id == line_id) return static_cast<int>(i);
    return -1;
}

int CaseSpec::generator_index(int gen_id) const {
    for (std::size_t i = 0; i < generators.size(); ++i)
        if (generators[i].id == gen_id) return static_cast<int>(i);
    return -1;
}

double CaseSpec::total_load(int interval) const {
    double total = 0.0;
    for (const auto& l : forecast_at(*this, interval)) total += l.mw;
    return total;
}

CaseSpec parse_case_file(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError("case document line " + std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
    }
    if (!doc.is_object()) throw ParseError("case document: expected an object at top level");

    CaseSpec spec;
    const std::string root = "case";
    if (doc.contains("name")) spec.name = doc["name"].get<std::string>();
    spec.base_mva = num_or(doc, "base_mva", 100.0, root);

    for (const auto& b : array_field(doc, "buses", root)) {
        if (!b.is_number_integer()) throw ParseError("case.buses: expected integer bus ids");
        spec.buses.push_back(b.get<int>());
    }

    const json& gens = array_field(doc, "generators", root);
    for (std::size_t i = 0; i < gens.size(); ++i) {
        const json& g = gens[i];
        const std::string w = at("generators", i);
        GeneratorSpec s;
        s.id = g.contains("id") ? integer(g, "id", w) : static_cast<int>(i) + 1;
        s.bus = integer(g, "bus", w);
        s.cost_a = num(g, "A", w);
        s.cost_b = num(g, "B", w);
        s.cost_c = num_or(g, "C", 0.0, w);
        s.p_max = num(g, "p_max", w);
        s.p_min = num(g, "p_min", w);
        s.ramp_up = num(g, "r_up", w);
        s.ramp_down = num(g, "r_down", w);
        s.sched_mw = num(g, "sched_mw", w);
        spec.generators.push_back(s);
    }

    const json& lines = array_field(doc, "lines", root);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const json& l = lines[i];
        const std::string w = at("lines", i);
        LineSpec s;
        s.id = l.contains("id") ? integer(l, "id", w) : static_cast<int>(i) + 1;
        s.from_bus = integer(l, "from_bus", w);
        s.to_bus = integer(l, "to_bus", w);
        s.resistance = num_or(l, "resistance", 0.0, w);
        s.reactance = num(l, "reactance", w);
        s.flow_limit = num(l, "flow_limit", w);
        s.emergency_limit = num_or(l, "emergency_limit", s.flow_limit, w);
        spec.lines.push_back(s);
    }

    if (doc.contains("loads")) {
        const json& loads = array_field(doc, "loads", root);
        for (std::size_t i = 0; i < loads.size(); ++i) {
            const std::string w = at("loads", i);
            spec.loads.push_back({integer(loads[i], "bus", w), num(loads[i], "mw", w)});
        }
    }

    spec.horizon = doc.contains("horizon") ? integer(doc, "horizon", root) : 1;

    if (doc.contains("forecast")) {
        const json& fc = array_field(doc, "forecast", root);
        for (std::size_t i = 0; i < fc.size(); ++i) {
            const std::string w = at("forecast", i);
            LoadSeries s;
            s.bus = integer(fc[i], "bus", w);
            for (const auto& v : array_field(fc[i], "mw", w)) {
                if (!v.is_number()) throw ParseError(w + ".mw: expected numbers");
                s.mw.push_back(v.get<double>());
            }
            spec.forecast.push_back(std::move(s));
        }
    } else {
        for (const auto& l : spec.loads) spec.forecast.push_back({l.bus, std::vector<double>(spec.horizon, l.mw)});
    }

    if (doc.contains("contingencies")) {
        for (const auto& c : array_field(doc, "contingencies", root)) {
            if (!c.is_number_integer()) throw ParseError("case.contingencies: expected line ids");
            spec.contingency_lines.push_back(c.get<int>());
        }
    }

    validate_case(spec);
    return spec;
}

std::string serialize_case(const CaseSpec& spec) {
    json doc = json::object();
    doc["name"] = spec.name;
    doc["base_mva"] = spec.base_mva;
    doc["buses"] = spec.buses;
    json gens = json::array();
    for (const auto& g : spec.generators) {
        gens.push_back({{"id", g.id}, {"bus", g.bus}, {"A", g.cost_a}, {"B", g.cost_b}, {"C", g.cost_c},
                        {"p_max", g.p_max}, {"p_min", g.p_min}, {"r_up", g.ramp_up}, {"r_down", g.ramp_down},
                        {"sched_mw", g.sched_mw}});
    }
    doc["generators"] = gens;
    json lines = json::array();
    for (const auto& l : spec.lines) {
        lines.push_back({{"id", l.id}, {"from_bus", l.from_bus}, {"to_bus", l.to_bus}, {"resistance", l.resistance},
                         {"reactance", l.reactance}, {"flow_limit", l.flow_limit},
                         {"emergency_limit", l.emergency_limit}});
    }
    doc["lines"] = lines;
    json loads = json::array();
    for (const auto& l : spec.loads) loads.push_back({{"bus", l.bus}, {"mw", l.mw}});
    doc["loads"] = loads;
    doc["horizon"] = spec.horizon;
    json fc = json::array();
    for (const auto& s : spec.forecast) fc.push_back({{"bus", s.bus}, {"mw", s.mw}});
    doc["forecast"] = fc;
    doc["contingencies"] = spec.contingency_lines;
    return doc.dump(2) + "\n";
}

void validate_case(const CaseSpec& spec) {
    if (!(spec.base_mva > 0.0)) throw ValidationError("base_mva must be positive");
    if (spec.buses.empty()) throw ValidationError("no buses");
    if (spec.generators.empty()) throw ValidationError("no generators");
    if (spec.horizon < 1) throw ValidationError("horizon must be at least 1");

    std::set<int> seen;
    for (int b : spec.buses)
        if (!seen.insert(b).second) throw ValidationError("bus " + std::to_string(b) + " listed twice");

    std::set<int> ids;
    for (std::size_t i = 0; i < spec.generators.size(); ++i) {
        const auto& g = spec.generators[i];
        const std::string w = at("generators", i) + " (id " + std::to_string(g.id) + ")";
        if (!ids.insert(g.id).second) throw ValidationError(w + ": duplicate generator id");
        if (g.p_min > g.p_max) throw ValidationError(w + ": p_min " + fmt(g.p_min) + " > p_max " + fmt(g.p_max));
        if (g.sched_mw < g.p_min || g.sched_mw > g.p_max)
            throw ValidationError(w + ": sched_mw " + fmt(g.sched_mw) + " outside [p_min, p_max]");
        if (g.ramp_down > 0.0 || g.ramp_up < 0.0) throw ValidationError(w + ": ramps must satisfy r_down <= 0 <= r_up");
        if (g.cost_a < 0.0) throw ValidationError(w + ": quadratic cost A must be nonnegative");
    }

    ids.clear();
    for (std::size_t i = 0; i < spec.lines.size(); ++i) {
        const auto& l = spec.lines[i];
        const std::string w = at("lines", i) + " (id " + std::to_string(l.id) + ")";
        if (!ids.insert(l.id).second) throw ValidationError(w + ": duplicate line id");
        if (!(l.reactance > 0.0)) throw ValidationError(w + ": reactance must be positive");
        if (!(l.flow_limit > 0.0)) throw ValidationError(w + ": flow_limit must be positive");
        if (!(l.emergency_limit > 0.0)) throw ValidationError(w + ": emergency_limit must be positive");
        if (l.from_bus == l.to_bus) throw ValidationError(w + ": from_bus equals to_bus");
    }

    std::set<int> forecast_buses;
    for (std::size_t i = 0; i < spec.forecast.size(); ++i) {
        const auto& s = spec.forecast[i];
        if (!forecast_buses.insert(s.bus).second)
            throw ValidationError(at("forecast", i) + ": bus " + std::to_string(s.bus) + " listed twice");
        if (static_cast<int>(s.mw.size()) != spec.horizon)
            throw ValidationError(at("forecast", i) + " (bus " + std::to_string(s.bus) + "): expected " +
                                  std::to_string(spec.horizon) + " intervals, got " + std::to_string(s.mw.size()));
    }
    for (const auto& l : spec.loads)
        if (!forecast_buses.count(l.bus))
            throw ValidationError("forecast: load bus " + std::to_string(l.bus) + " has no forecast entry");

    for (int c : spec.contingency_lines)
        if (spec.line_index(c) < 0) throw ValidationError("contingencies: unknown line id " + std::to_string(c));
}

std::vector<BusLoad> forecast_at(const CaseSpec& spec, int interval) {
    if (interval < 1 || interval > spec.horizon)
        throw ValidationError("forecast interval " + std::to_string(interval) + " outside 1.." +
                              std::to_string(spec.horizon));
    std::vector<BusLoad> row;
    row.reserve(spec.forecast.size());
    for (const auto& s : spec.forecast) row.push_back({s.bus, s.mw[static_cast<std::size_t>(interval - 1)]});
    return row;
}

namespace {

std::string strip_comments(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool comment = false;
    for (char ch : text) {
        if (ch == '%') comment = true;
        if (ch == '\n') comment = false;
        if (!comment) out.push_back(ch);
    }
    return out;
}

std::vector<std::vector<double>> matrix_block(const std::string& text, const std::string& name, bool required) {
    const std::string key = "mpc." + name;
    std::size_t pos = 0;
    while (true) {
        pos = text.find(key, pos);
        if (pos == std::string::npos) {
            if (required) throw ParseError("MATPOWER: missing matrix '" + key + "'");
            return {};
        }
        std::size_t after = pos + key.size();
        while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
        if (after < text.size() && text[after] == '=') {
            pos = after;
            break;
        }
        pos = after;
    }
    std::size_t open = text.find('[', pos);
    std::size_t close = text.find(']', open);
    if (open == std::string::npos || close == std::string::npos)
        throw ParseError("MATPOWER: unterminated matrix '" + key + "'");

    std::vector<std::vector<double>> rows;
    std::vector<double> row;
    std::string token;
    auto flush_token = [&] {
        if (token.empty()) return;
        if (token == "Inf" || token == "inf") row.push_back(INFINITY);
        else if (token == "-Inf" || token == "-inf") row.push_back(-INFINITY);
        else {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(token, &used));
                if (used != token.size()) throw std::invalid_argument(token);
            } catch (const std::exception&) {
                throw ParseError("MATPOWER: bad number '" + token + "' in " + key + " near line " +
                                 std::to_string(line_of_offset(text, open)));
            }
        }
        token.clear();
    };
    auto flush_row = [&] {
        flush_token();
        if (!row.empty()) rows.push_back(std::move(row));
        row.clear();
    };
    for (std::size_t i = open + 1; i < close; ++i) {
        char ch = text[i];
        if (ch == ';' || ch == '\n') flush_row();
        else if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') flush_token();
        else token.push_back(ch);
    }
    flush_row();
    return rows;
}

double scalar_field(const std::string& text, const std::string& name, double fallback) {
    const std::string key = "mpc." + name;
    std::size_t pos = text.find(key);
    if (pos == std::string::npos) return fallback;
    std::size_t eq = text.find('=', pos);
    std::size_t end = text.find(';', eq);
    return std::stod(text.substr(eq + 1, end - eq - 1));
}

void need_cols(const std::vector<double>& row, std::size_t n, const std::string& what, std::size_t index) {
    if (row.size() < n)
        throw ParseError("MATPOWER: " + what + " row " + std::to_string(index + 1) + " has " +
                         std::to_string(row.size()) + " columns, need " + std::to_string(n));
}

}  // namespace

CaseSpec parse_matpower(std::string_view raw) {
    const std::string text = strip_comments(raw);
    CaseSpec spec;
    spec.name = "matpower";
    spec.base_mva = scalar_field(text, "baseMVA", 100.0);

    const auto bus = matrix_block(text, "bus", true);
    const auto gen = matrix_block(text, "gen", true);
    const auto branch = matrix_block(text, "branch", true);
    const auto gencost = matrix_block(text, "gencost", false);

    for (std::size_t i = 0; i < bus.size(); ++i) {
        need_cols(bus[i], 3, "bus", i);
        const int id = static_cast<int>(bus[i][0]);
        spec.buses.push_back(id);
        if (bus[i][2] != 0.0) spec.loads.push_back({id, bus[i][2]});
    }

    for (std::size_t i = 0; i < gen.size(); ++i) {
        const auto& r = gen[i];
        need_cols(r, 10, "gen", i);
        if (r[7] <= 0.0) continue;
        GeneratorSpec g;
        g.id = static_cast<int>(spec.generators.size()) + 1;
        g.bus = static_cast<int>(r[0]);
        g.p_max = r[8];
        g.p_min = r[9];
        g.sched_mw = std::clamp(r[1], g.p_min, g.p_max);
        double ramp = (r.size() > 18 && r[18] > 0.0) ? r[18] : g.p_max - g.p_min;
        g.ramp_up = ramp;
        g.ramp_down = -ramp;
        if (i < gencost.size()) {
            const auto& c = gencost[i];
            need_cols(c, 4, "gencost", i);
            if (static_cast<int>(c[0]) != 2) throw ParseError("MATPOWER: only polynomial gencost (model 2) is supported");
            const int n = static_cast<int>(c[3]);
            need_cols(c, 4 + static_cast<std::size_t>(n), "gencost", i);
            std::vector<double> coef(c.begin() + 4, c.begin() + 4 + n);
            if (n > 3) throw ParseError("MATPOWER: gencost above quadratic is not supported");
            std::reverse(coef.begin(), coef.end());
            coef.resize(3, 0.0);
            g.cost_c = coef[0];
            g.cost_b = coef[1];
            g.cost_a = coef[2];
        }
        spec.generators.push_back(g);
    }

    for (std::size_t i = 0; i < branch.size(); ++i) {
        const auto& r = branch[i];
        need_cols(r, 6, "branch", i);
        if (r.size() > 10 && r[10] <= 0.0) continue;
        LineSpec l;
        l.id = static_cast<int>(spec.lines.size()) + 1;
        l.from_bus = static_cast<int>(r[0]);
        l.to_bus = static_cast<int>(r[1]);
        l.resistance = r[2];
        l.reactance = r[3];
        l.flow_limit = r[5] > 0.0 ? r[5] : 1.0e4;
        l.emergency_limit = (r.size() > 7 && r[7] > 0.0) ? r[7] : l.flow_limit;
        spec.lines.push_back(l);
    }

    spec.horizon = 1;
    for (const auto& l : spec.loads) spec.forecast.push_back({l.bus, {l.mw}});
    validate_case(spec);
    return spec;
}

void apply_forecast_csv(CaseSpec& spec, std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::vector<LoadSeries> series;
    int horizon = -1;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (horizon < 0) {
            if (cells.empty() || cells[0] != "bus") throw ParseError("forecast line 1: header must start with 'bus'");
            horizon = static_cast<int>(cells.size()) - 1;
            continue;
        }
        if (static_cast<int>(cells.size()) != horizon + 1)
            throw ParseError("forecast line " + std::to_string(lineno) + ": expected " + std::to_string(horizon + 1) +
                             " cells");
        LoadSeries s;
        try {
            s.bus = std::stoi(cells[0]);
            for (int k = 1; k <= horizon; ++k) s.mw.push_back(std::stod(cells[static_cast<std::size_t>(k)]));
        } catch (const std::exception&) {
            throw ParseError("forecast line " + std::to_string(lineno) + ": bad number");
        }
        series.push_back(std::move(s));
    }
    if (horizon < 1) throw ParseError("forecast: no intervals");
    std::map<int, double> current;
    for (const auto& l : spec.loads) current[l.bus] = l.mw;
    for (const auto& s : series)
        if (!current.count(s.bus)) spec.loads.push_back({s.bus, s.mw.front()});
    std::set<int> covered;
    for (const auto& s : series) covered.insert(s.bus);
    for (const auto& l : spec.loads)
        if (!covered.count(l.bus)) series.push_back({l.bus, std::vector<double>(static_cast<std::size_t>(horizon), l.mw)});
    spec.forecast = std::move(series);
    spec.horizon = horizon;
    validate_case(spec);
}

CaseSpec read_case_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open case file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        if (path.extension() == ".m") return parse_matpower(buf.str());
        return parse_case_file(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path.filename().string() + ": " + e.what());
    }
}

}  // namespace lascopf
