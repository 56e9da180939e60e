#include "dlme/grid.hpp"

#include "dlme/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace dlme {

using json = nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { fail(ErrorKind::Validation, what); }

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    return it->get<T>();
}

template <class T>
T require(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null())
        fail(ErrorKind::Parse, where + ": missing field '" + key + "'");
    return it->get<T>();
}

std::optional<double> optional_number(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<double>();
}

// An emission rate is either a number or the name of an entry in emission_rates.
double resolve_rate(const json& value, const std::map<std::string, double>& rates,
                    const std::string& where) {
    if (value.is_number()) return value.get<double>();
    if (value.is_string()) {
        auto it = rates.find(value.get<std::string>());
        if (it == rates.end())
            invalid(where + ": unknown emission rate '" + value.get<std::string>() + "'");
        return it->second;
    }
    fail(ErrorKind::Parse, where + ": emission rate must be a number or a name");
}

bool finite(double v) { return std::isfinite(v); }

void check_series(const std::vector<double>& v, int horizon, const std::string& what) {
    if (static_cast<int>(v.size()) != horizon)
        invalid(what + ": expected " + std::to_string(horizon) + " hourly values, got " +
                std::to_string(v.size()));
    for (double x : v)
        if (!finite(x)) invalid(what + ": non-finite value");
}

}  // namespace

std::size_t NetworkCase::bus_index(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return i;
    invalid("unknown bus id " + std::to_string(id));
}

std::size_t NetworkCase::substation_index() const { return bus_index(substation.bus); }

std::vector<std::size_t> NetworkCase::closed_branches() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < branches.size(); ++k)
        if (branches[k].closed) out.push_back(k);
    return out;
}

Tree radial_tree(const NetworkCase& c) {
    const std::size_t n = c.buses.size();
    std::vector<std::vector<std::pair<std::size_t, int>>> adj(n);
    const auto closed = c.closed_branches();
    for (std::size_t k : closed) {
        const auto a = c.bus_index(c.branches[k].from_bus);
        const auto b = c.bus_index(c.branches[k].to_bus);
        adj[a].push_back({b, static_cast<int>(k)});
        adj[b].push_back({a, static_cast<int>(k)});
    }
    if (closed.size() + 1 != n)
        invalid("non-radial topology: " + std::to_string(closed.size()) + " closed branches for " +
                std::to_string(n) + " buses");

    Tree t;
    t.parent.assign(n, -1);
    t.feeder_branch.assign(n, -1);
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{c.substation_index()};
    seen[stack.back()] = 1;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        t.order.push_back(u);
        // reverse so the traversal visits neighbours in file order
        for (auto it = adj[u].rbegin(); it != adj[u].rend(); ++it) {
            const auto [v, k] = *it;
            if (k == t.feeder_branch[u]) continue;
            if (seen[v]) invalid("non-radial topology: closed branches contain a cycle");
            seen[v] = 1;
            t.parent[v] = static_cast<int>(u);
            t.feeder_branch[v] = k;
            stack.push_back(v);
        }
    }
    if (t.order.size() != n) invalid("non-radial topology: network is not connected");
    return t;
}

void validate(const NetworkCase& c) {
    if (c.horizon < 1) invalid("horizon must be at least 1 hour");
    if (!(c.base.mva > 0.0) || !(c.base.kv > 0.0)) invalid("base MVA and kV must be positive");
    if (!(c.options.delta_t > 0.0)) invalid("delta_t must be positive");
    if (c.options.storage_emission_rate < 0.0) invalid("storage emission rate must be >= 0");
    if (c.buses.empty()) invalid("case has no buses");

    int n_sub = 0;
    for (std::size_t i = 0; i < c.buses.size(); ++i) {
        const Bus& b = c.buses[i];
        const std::string where = "bus " + std::to_string(b.id);
        for (std::size_t j = 0; j < i; ++j)
            if (c.buses[j].id == b.id) invalid("duplicate " + where);
        if (!(b.v_min > 0.0 && b.v_min < b.v_max)) invalid(where + ": need 0 < v_min < v_max");
        if (!(b.p_demand >= 0.0 && b.q_demand >= 0.0)) invalid(where + ": demand must be >= 0");
        if (b.is_substation) ++n_sub;
    }
    if (n_sub != 1) invalid("exactly one bus must be the substation, found " + std::to_string(n_sub));
    if (!c.buses[c.substation_index()].is_substation)
        invalid("substation section refers to a bus not flagged as substation");

    for (std::size_t k = 0; k < c.branches.size(); ++k) {
        const Branch& br = c.branches[k];
        const std::string where = "branch " + std::to_string(br.from_bus) + "-" + std::to_string(br.to_bus);
        c.bus_index(br.from_bus);
        c.bus_index(br.to_bus);
        if (br.from_bus == br.to_bus) invalid(where + ": self loop");
        if (!(br.r >= 0.0 && br.x >= 0.0 && br.r + br.x > 0.0))
            invalid(where + ": need r >= 0, x >= 0, r + x > 0");
        if (!(br.i_max > 0.0)) invalid(where + ": i_max must be positive");
        if (!(br.i_min >= 0.0 && br.i_min <= br.i_max)) invalid(where + ": need 0 <= i_min <= i_max");
    }
    radial_tree(c);

    for (const auto& g : c.inverters) {
        const std::string where = "inverter " + g.id;
        c.bus_index(g.bus);
        if (!(g.capacity >= 0.0)) invalid(where + ": capacity must be >= 0");
        if (!(g.p_min >= 0.0 && g.p_min <= g.capacity)) invalid(where + ": need 0 <= p_min <= capacity");
        if (!(g.kappa_min > 0.0 && g.kappa_min <= 1.0)) invalid(where + ": need 0 < kappa_min <= 1");
    }
    for (const auto& g : c.sync_dgs) {
        const std::string where = "synchronous DG " + g.id;
        c.bus_index(g.bus);
        if (!(g.p_min <= g.p_max)) invalid(where + ": need p_min <= p_max");
        if (!(g.q_min <= g.q_max)) invalid(where + ": need q_min <= q_max");
        if (!(g.ramp_down <= g.ramp_up)) invalid(where + ": need ramp_down <= ramp_up");
        if (!(g.emission_rate >= 0.0)) invalid(where + ": emission rate must be >= 0");
        const double p0 = g.initial_output();
        if (!(p0 >= g.p_min && p0 <= g.p_max)) invalid(where + ": initial output outside [p_min, p_max]");
    }
    for (const auto& s : c.storage) {
        const std::string where = "storage " + s.id;
        c.bus_index(s.bus);
        if (!(s.eta_cha > 0.0 && s.eta_cha <= 1.0)) invalid(where + ": need 0 < eta_cha <= 1");
        if (!(s.eta_dis > 0.0 && s.eta_dis <= 1.0)) invalid(where + ": need 0 < eta_dis <= 1");
        if (!(s.e_min <= s.e_init && s.e_init <= s.e_max)) invalid(where + ": need e_min <= e_init <= e_max");
        if (!(s.p_cha_max >= 0.0 && s.p_dis_max >= 0.0)) invalid(where + ": power limits must be >= 0");
        if (s.discharge_emission_rate && !(*s.discharge_emission_rate >= 0.0))
            invalid(where + ": discharge emission rate must be >= 0");
    }
    for (const auto& ev : c.evs) {
        const std::string where = "EV aggregator " + ev.id;
        c.bus_index(ev.bus);
        check_series(ev.p_lb, c.horizon, where + " p_lb");
        check_series(ev.p_ub, c.horizon, where + " p_ub");
        check_series(ev.e_lb, c.horizon, where + " e_lb");
        check_series(ev.e_ub, c.horizon, where + " e_ub");
        double lo = 0.0, hi = 0.0;
        for (int t = 0; t < c.horizon; ++t) {
            const std::string at = where + " hour " + std::to_string(t + 1);
            if (!(ev.p_lb[t] <= ev.p_ub[t])) invalid(at + ": need p_lb <= p_ub");
            if (!(ev.e_lb[t] <= ev.e_ub[t])) invalid(at + ": need e_lb <= e_ub");
            if (t > 0 && (ev.e_lb[t] < ev.e_lb[t - 1] || ev.e_ub[t] < ev.e_ub[t - 1]))
                invalid(at + ": cumulative energy bounds must be non-decreasing");
            lo += ev.p_lb[t] * c.options.delta_t;
            hi += ev.p_ub[t] * c.options.delta_t;
            if (lo > ev.e_ub[t] + 1e-9) invalid(at + ": minimum charging exceeds e_ub");
            if (hi < ev.e_lb[t] - 1e-9) invalid(at + ": maximum charging cannot reach e_lb");
        }
    }

    const Substation& s = c.substation;
    check_series(s.price_p, c.horizon, "substation active price");
    check_series(s.price_q, c.horizon, "substation reactive price");
    if (!(s.emission_rate >= 0.0)) invalid("substation emission rate must be >= 0");
    if (!(s.p_min <= s.p_max)) invalid("substation: need p_min <= p_max");
    if (!(s.q_max >= 0.0)) invalid("substation: q_max must be >= 0");
    if (s.v_set && !(*s.v_set > 0.0)) invalid("substation: v_set must be positive");
    for (const auto& [name, rate] : c.emission_rates)
        if (!(rate >= 0.0)) invalid("emission rate '" + name + "' must be >= 0");
}

NetworkCase parse_case(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Parse, std::string("malformed case file: ") + e.what());
    }
    if (!j.is_object()) fail(ErrorKind::Parse, "case file must be a JSON object");

    NetworkCase c;
    try {
        c.name = get_or<std::string>(j, "name", "");
        if (j.contains("base")) {
            c.base.mva = get_or(j["base"], "mva", c.base.mva);
            c.base.kv = get_or(j["base"], "kv", c.base.kv);
        }
        c.horizon = get_or(j, "horizon", 24);
        if (j.contains("options")) {
            const json& o = j["options"];
            c.options.delta_t = get_or(o, "delta_t", 1.0);
            c.options.terminal_storage = get_or(o, "terminal_storage", true);
            c.options.storage_emission_rate = get_or(o, "storage_emission_rate", 0.0);
            const auto mode = get_or<std::string>(o, "reactive_cost", "signed");
            if (mode == "signed") c.options.reactive_cost = ReactiveCost::Signed;
            else if (mode == "magnitude") c.options.reactive_cost = ReactiveCost::Magnitude;
            else fail(ErrorKind::Parse, "options.reactive_cost must be 'signed' or 'magnitude'");
        }
        if (j.contains("emission_rates"))
            for (auto& [name, v] : j["emission_rates"].items()) c.emission_rates[name] = v.get<double>();

        for (const json& b : j.at("buses")) {
            Bus bus;
            bus.id = require<int>(b, "id", "bus");
            bus.v_min = get_or(b, "v_min", bus.v_min);
            bus.v_max = get_or(b, "v_max", bus.v_max);
            bus.p_demand = get_or(b, "p_demand_mw", 0.0);
            bus.q_demand = get_or(b, "q_demand_mvar", 0.0);
            bus.is_substation = get_or(b, "substation", false);
            c.buses.push_back(bus);
        }
        for (const json& b : j.value("branches", json::array())) {
            Branch br;
            br.from_bus = require<int>(b, "from", "branch");
            br.to_bus = require<int>(b, "to", "branch");
            br.r = require<double>(b, "r", "branch");
            br.x = require<double>(b, "x", "branch");
            br.i_max = get_or(b, "i_max", br.i_max);
            br.i_min = get_or(b, "i_min", 0.0);
            br.closed = get_or(b, "closed", true);
            c.branches.push_back(br);
        }
        for (const json& g : j.value("inverter_dg", json::array())) {
            InverterDG u;
            u.id = require<std::string>(g, "id", "inverter_dg");
            u.bus = require<int>(g, "bus", "inverter " + u.id);
            u.capacity = require<double>(g, "capacity_mw", "inverter " + u.id);
            u.p_min = get_or(g, "p_min_mw", 0.0);
            u.kappa_min = get_or(g, "kappa_min", 1.0);
            u.price_p = get_or(g, "price_p", 0.0);
            u.price_q = optional_number(g, "price_q");
            c.inverters.push_back(u);
        }
        for (const json& g : j.value("sync_dg", json::array())) {
            SynchronousDG u;
            const std::string where = "synchronous DG";
            u.id = require<std::string>(g, "id", where);
            u.bus = require<int>(g, "bus", where + " " + u.id);
            u.p_min = get_or(g, "p_min_mw", 0.0);
            u.p_max = require<double>(g, "p_max_mw", where + " " + u.id);
            u.q_min = get_or(g, "q_min_mvar", 0.0);
            u.q_max = get_or(g, "q_max_mvar", 0.0);
            u.ramp_down = get_or(g, "ramp_down_mw", u.p_min - u.p_max);
            u.ramp_up = get_or(g, "ramp_up_mw", u.p_max - u.p_min);
            u.p_initial = optional_number(g, "p_initial_mw");
            u.emission_rate = resolve_rate(require<json>(g, "emission_rate", where + " " + u.id),
                                           c.emission_rates, where + " " + u.id);
            u.price_p = get_or(g, "price_p", 0.0);
            u.price_q = optional_number(g, "price_q");
            c.sync_dgs.push_back(u);
        }
        for (const json& g : j.value("storage", json::array())) {
            EnergyStorage u;
            u.id = require<std::string>(g, "id", "storage");
            const std::string where = "storage " + u.id;
            u.bus = require<int>(g, "bus", where);
            u.p_cha_max = require<double>(g, "p_cha_max_mw", where);
            u.p_dis_max = require<double>(g, "p_dis_max_mw", where);
            u.e_min = get_or(g, "e_min_mwh", 0.0);
            u.e_max = require<double>(g, "e_max_mwh", where);
            u.e_init = require<double>(g, "e_init_mwh", where);
            u.eta_cha = get_or(g, "eta_cha", 1.0);
            u.eta_dis = get_or(g, "eta_dis", 1.0);
            if (g.contains("discharge_emission_rate") && !g["discharge_emission_rate"].is_null())
                u.discharge_emission_rate =
                    resolve_rate(g["discharge_emission_rate"], c.emission_rates, where);
            u.price = get_or(g, "price", 0.0);
            c.storage.push_back(u);
        }
        for (const json& g : j.value("ev", json::array())) {
            EvAggregator u;
            u.id = require<std::string>(g, "id", "ev");
            const std::string where = "EV aggregator " + u.id;
            u.bus = require<int>(g, "bus", where);
            u.p_lb = require<std::vector<double>>(g, "p_lb_mw", where);
            u.p_ub = require<std::vector<double>>(g, "p_ub_mw", where);
            u.e_lb = require<std::vector<double>>(g, "e_lb_mwh", where);
            u.e_ub = require<std::vector<double>>(g, "e_ub_mwh", where);
            c.evs.push_back(u);
        }

        const json& s = j.at("substation");
        c.substation.bus = require<int>(s, "bus", "substation");
        c.substation.emission_rate = s.contains("emission_rate")
                                         ? resolve_rate(s["emission_rate"], c.emission_rates, "substation")
                                         : c.emission_rates.count("coal") ? c.emission_rates.at("coal")
                                                                         : c.substation.emission_rate;
        c.substation.p_min = get_or(s, "p_min_mw", 0.0);
        c.substation.p_max = get_or(s, "p_max_mw", c.substation.p_max);
        c.substation.q_max = get_or(s, "q_max_mvar", c.substation.q_max);
        c.substation.v_set = optional_number(s, "v_set");

        const json& prices = j.at("prices");
        c.substation.price_p = require<std::vector<double>>(prices, "substation_p", "prices");
        if (prices.contains("substation_q")) {
            c.substation.price_q = prices["substation_q"].get<std::vector<double>>();
        } else {
            for (double p : c.substation.price_p) c.substation.price_q.push_back(0.1 * p);
        }
        for (const json& a : j.value("assumptions", json::array())) c.assumptions.push_back(a.get<std::string>());
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, std::string("case schema error: ") + e.what());
    }
    validate(c);
    return c;
}

NetworkCase load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Parse, "cannot open case file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str());
}

std::string case_to_json(const NetworkCase& c) {
    json j;
    j["name"] = c.name;
    j["base"] = {{"mva", c.base.mva}, {"kv", c.base.kv}};
    j["horizon"] = c.horizon;
    j["options"] = {{"delta_t", c.options.delta_t},
                    {"terminal_storage", c.options.terminal_storage},
                    {"storage_emission_rate", c.options.storage_emission_rate},
                    {"reactive_cost", c.options.reactive_cost == ReactiveCost::Signed ? "signed" : "magnitude"}};
    j["emission_rates"] = json::object();
    for (const auto& [name, rate] : c.emission_rates) j["emission_rates"][name] = rate;

    j["buses"] = json::array();
    for (const Bus& b : c.buses)
        j["buses"].push_back({{"id", b.id}, {"v_min", b.v_min}, {"v_max", b.v_max},
                              {"p_demand_mw", b.p_demand}, {"q_demand_mvar", b.q_demand},
                              {"substation", b.is_substation}});
    j["branches"] = json::array();
    for (const Branch& b : c.branches)
        j["branches"].push_back({{"from", b.from_bus}, {"to", b.to_bus}, {"r", b.r}, {"x", b.x},
                                 {"i_max", b.i_max}, {"i_min", b.i_min}, {"closed", b.closed}});
    j["inverter_dg"] = json::array();
    for (const auto& g : c.inverters) {
        json o = {{"id", g.id}, {"bus", g.bus}, {"capacity_mw", g.capacity}, {"p_min_mw", g.p_min},
                  {"kappa_min", g.kappa_min}, {"price_p", g.price_p}};
        if (g.price_q) o["price_q"] = *g.price_q;
        j["inverter_dg"].push_back(o);
    }
    j["sync_dg"] = json::array();
    for (const auto& g : c.sync_dgs) {
        json o = {{"id", g.id}, {"bus", g.bus}, {"p_min_mw", g.p_min}, {"p_max_mw", g.p_max},
                  {"q_min_mvar", g.q_min}, {"q_max_mvar", g.q_max}, {"ramp_down_mw", g.ramp_down},
                  {"ramp_up_mw", g.ramp_up}, {"emission_rate", g.emission_rate}, {"price_p", g.price_p}};
        if (g.p_initial) o["p_initial_mw"] = *g.p_initial;
        if (g.price_q) o["price_q"] = *g.price_q;
        j["sync_dg"].push_back(o);
    }
    j["storage"] = json::array();
    for (const auto& s : c.storage) {
        json o = {{"id", s.id}, {"bus", s.bus}, {"p_cha_max_mw", s.p_cha_max},
                  {"p_dis_max_mw", s.p_dis_max}, {"e_min_mwh", s.e_min}, {"e_max_mwh", s.e_max},
                  {"e_init_mwh", s.e_init}, {"eta_cha", s.eta_cha}, {"eta_dis", s.eta_dis},
                  {"price", s.price}};
        if (s.discharge_emission_rate) o["discharge_emission_rate"] = *s.discharge_emission_rate;
        j["storage"].push_back(o);
    }
    j["ev"] = json::array();
    for (const auto& e : c.evs)
        j["ev"].push_back({{"id", e.id}, {"bus", e.bus}, {"p_lb_mw", e.p_lb}, {"p_ub_mw", e.p_ub},
                           {"e_lb_mwh", e.e_lb}, {"e_ub_mwh", e.e_ub}});
    j["substation"] = {{"bus", c.substation.bus}, {"emission_rate", c.substation.emission_rate},
                       {"p_min_mw", c.substation.p_min}, {"p_max_mw", c.substation.p_max},
                       {"q_max_mvar", c.substation.q_max}};
    if (c.substation.v_set) j["substation"]["v_set"] = *c.substation.v_set;
    j["prices"] = {{"substation_p", c.substation.price_p}, {"substation_q", c.substation.price_q}};
    j["assumptions"] = c.assumptions;
    return j.dump(2) + "\n";
}

}  // namespace dlme
