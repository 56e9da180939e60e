#include "dlme/scenario.hpp"

#include "dlme/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace dlme {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.pop_back();
        std::size_t b = 0;
        while (b < cell.size() && cell[b] == ' ') ++b;
        out.push_back(cell.substr(b));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double number(const std::string& cell, int line_no, const char* what) {
    double v = 0.0;
    const char* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, v);
    if (ec != std::errc() || ptr != end)
        fail(ErrorKind::Parse, "scenario line " + std::to_string(line_no) + ": bad " + what + " '" + cell + "'");
    return v;
}

}  // namespace

ScenarioSet nominal_scenario(const NetworkCase& c, const std::string& label) {
    const auto nb = static_cast<Eigen::Index>(c.buses.size());
    ScenarioSet s;
    s.label = label;
    s.p_demand.resize(nb, c.horizon);
    s.q_demand.resize(nb, c.horizon);
    for (Eigen::Index i = 0; i < nb; ++i) {
        s.p_demand.row(i).setConstant(c.buses[i].p_demand);
        s.q_demand.row(i).setConstant(c.buses[i].q_demand);
    }
    s.pv_availability = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(c.inverters.size()), c.horizon);
    return s;
}

void validate(const ScenarioSet& s, const NetworkCase& c) {
    const auto nb = static_cast<Eigen::Index>(c.buses.size());
    const auto ni = static_cast<Eigen::Index>(c.inverters.size());
    const std::string where = "scenario '" + s.label + "'";
    if (s.p_demand.rows() != nb || s.q_demand.rows() != nb || s.p_demand.cols() != c.horizon ||
        s.q_demand.cols() != c.horizon)
        fail(ErrorKind::Validation, where + ": demand matrices must be " + std::to_string(nb) + " x " +
                                        std::to_string(c.horizon));
    if (s.pv_availability.rows() != ni || s.pv_availability.cols() != c.horizon)
        fail(ErrorKind::Validation, where + ": PV availability must be " + std::to_string(ni) + " x " +
                                        std::to_string(c.horizon));
    if (!s.p_demand.allFinite() || !s.q_demand.allFinite() || !s.pv_availability.allFinite())
        fail(ErrorKind::Validation, where + ": non-finite values");
    if (s.p_demand.size() && (s.p_demand.minCoeff() < 0.0 || s.q_demand.minCoeff() < 0.0))
        fail(ErrorKind::Validation, where + ": demands must be >= 0");
    if (s.pv_availability.size() &&
        (s.pv_availability.minCoeff() < 0.0 || s.pv_availability.maxCoeff() > 1.0))
        fail(ErrorKind::Validation, where + ": PV availability must lie in [0, 1]");
}

std::vector<ScenarioSet> parse_scenarios(const std::string& csv, const NetworkCase& c) {
    std::map<std::string, std::size_t> bus_of, pv_of;
    for (std::size_t i = 0; i < c.buses.size(); ++i) bus_of["bus:" + std::to_string(c.buses[i].id)] = i;
    for (std::size_t i = 0; i < c.inverters.size(); ++i) pv_of["pv:" + c.inverters[i].id] = i;

    std::vector<ScenarioSet> sets;
    std::vector<Eigen::MatrixXi> seen_bus, seen_pv;
    std::map<std::string, std::size_t> index;

    std::stringstream in(csv);
    std::string line;
    int line_no = 0;
    std::map<std::string, std::size_t> col;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r" || line[0] == '#') continue;
        const auto cells = split(line);
        if (col.empty()) {
            for (std::size_t k = 0; k < cells.size(); ++k) col[cells[k]] = k;
            for (const char* name : {"scenario", "entity_id", "hour"})
                if (!col.count(name)) fail(ErrorKind::Parse, std::string("scenario file lacks column '") + name + "'");
            continue;
        }
        auto cell = [&](const char* name) -> std::string {
            auto it = col.find(name);
            if (it == col.end() || it->second >= cells.size()) return "";
            return cells[it->second];
        };
        const std::string label = cell("scenario");
        auto [it, inserted] = index.try_emplace(label, sets.size());
        if (inserted) {
            ScenarioSet s;
            s.label = label;
            s.p_demand = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c.buses.size()), c.horizon);
            s.q_demand = s.p_demand;
            s.pv_availability = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c.inverters.size()), c.horizon);
            sets.push_back(std::move(s));
            seen_bus.push_back(Eigen::MatrixXi::Zero(sets.back().p_demand.rows(), c.horizon));
            seen_pv.push_back(Eigen::MatrixXi::Zero(sets.back().pv_availability.rows(), c.horizon));
        }
        ScenarioSet& s = sets[it->second];
        const int hour = static_cast<int>(number(cell("hour"), line_no, "hour"));
        if (hour < 1 || hour > c.horizon)
            fail(ErrorKind::Validation, "scenario line " + std::to_string(line_no) + ": hour out of range");
        const std::string entity = cell("entity_id");
        if (auto b = bus_of.find(entity); b != bus_of.end()) {
            const auto i = static_cast<Eigen::Index>(b->second);
            if (seen_bus[it->second](i, hour - 1)++)
                fail(ErrorKind::Validation, "scenario line " + std::to_string(line_no) + ": duplicate row");
            s.p_demand(i, hour - 1) = number(cell("p_mw"), line_no, "p_mw");
            s.q_demand(i, hour - 1) = number(cell("q_mvar"), line_no, "q_mvar");
        } else if (auto p = pv_of.find(entity); p != pv_of.end()) {
            const auto i = static_cast<Eigen::Index>(p->second);
            if (seen_pv[it->second](i, hour - 1)++)
                fail(ErrorKind::Validation, "scenario line " + std::to_string(line_no) + ": duplicate row");
            s.pv_availability(i, hour - 1) = number(cell("availability"), line_no, "availability");
        } else {
            fail(ErrorKind::Validation, "scenario line " + std::to_string(line_no) + ": unknown entity '" + entity + "'");
        }
    }
    if (sets.empty()) fail(ErrorKind::Parse, "scenario file contains no rows");
    for (std::size_t k = 0; k < sets.size(); ++k) {
        if (seen_bus[k].size() && seen_bus[k].minCoeff() == 0)
            fail(ErrorKind::Validation, "scenario '" + sets[k].label + "': missing bus rows");
        if (seen_pv[k].size() && seen_pv[k].minCoeff() == 0)
            fail(ErrorKind::Validation, "scenario '" + sets[k].label + "': missing PV rows");
        validate(sets[k], c);
    }
    return sets;
}

std::vector<ScenarioSet> read_scenarios(const std::string& path, const NetworkCase& c) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Parse, "cannot open scenario file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenarios(ss.str(), c);
}

std::string scenarios_to_csv(const std::vector<ScenarioSet>& sets, const NetworkCase& c) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "scenario,entity_id,hour,p_mw,q_mvar,availability\n";
    for (const auto& s : sets) {
        validate(s, c);
        for (int t = 0; t < c.horizon; ++t) {
            for (std::size_t i = 0; i < c.buses.size(); ++i)
                out << s.label << ",bus:" << c.buses[i].id << ',' << t + 1 << ','
                    << s.p_demand(static_cast<Eigen::Index>(i), t) << ','
                    << s.q_demand(static_cast<Eigen::Index>(i), t) << ",\n";
            for (std::size_t i = 0; i < c.inverters.size(); ++i)
                out << s.label << ",pv:" << c.inverters[i].id << ',' << t + 1 << ",,,"
                    << s.pv_availability(static_cast<Eigen::Index>(i), t) << '\n';
        }
    }
    return out.str();
}

}  // namespace dlme
