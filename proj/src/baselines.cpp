#include "dlme/baselines.hpp"

#include "dlme/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dlme {

double mix_intensity(const std::vector<std::pair<double, double>>& inflows) {
    double p = 0.0, e = 0.0;
    for (const auto& [mw, rate] : inflows) {
        if (mw < 0.0) fail(ErrorKind::Validation, "inflow must be non-negative");
        p += mw;
        e += mw * rate;
    }
    return p > 0.0 ? e / p : 0.0;
}

namespace {

// Stored carbon of one storage unit across the day.
struct Store {
    double carbon = 0.0;  // tCO2
    double energy = 0.0;  // MWh
    double intensity = 0.0;
};

}  // namespace

CefState compute_cef(const NetworkCase& c, const DispatchSolution& sol, const EmissionModel& model) {
    const int T = c.horizon;
    const double dt = c.options.delta_t;
    const double S = c.base.mva;
    const auto nb = c.buses.size();
    const Tree tree = radial_tree(c);
    if (sol.p_sub.size() != T) fail(ErrorKind::Validation, "dispatch horizon does not match the case");

    CefState out;
    out.node = Eigen::MatrixXd::Zero(static_cast<Index>(nb), T);
    out.branch = Eigen::MatrixXd::Zero(static_cast<Index>(c.branches.size()), T);
    out.storage_dis = Eigen::MatrixXd::Zero(static_cast<Index>(c.storage.size()), T);
    out.generation = out.load = out.loss = Eigen::VectorXd::Zero(T);
    out.source_min = out.source_max = Eigen::VectorXd::Zero(T);

    std::vector<Store> stores(c.storage.size());
    for (std::size_t u = 0; u < c.storage.size(); ++u) {
        const auto& st = c.storage[u];
        stores[u].energy = st.e_init;
        stores[u].intensity = st.discharge_emission_rate.value_or(model.substation_rate);
        stores[u].carbon = stores[u].intensity * st.e_init;
    }

    for (int t = 0; t < T; ++t) {
        // sources per bus: (MW, intensity)
        std::vector<std::vector<std::pair<double, double>>> src(nb);
        std::vector<double> sink(nb, 0.0);  // MW drawn by loads at the bus
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        auto add_source = [&](std::size_t bus, double mw, double rate) {
            if (mw <= 0.0) {
                sink[bus] -= mw;
                return;
            }
            src[bus].emplace_back(mw, rate);
            out.generation(t) += mw * rate * dt;
            lo = std::min(lo, rate);
            hi = std::max(hi, rate);
        };
        add_source(c.substation_index(), sol.p_sub(t), model.substation_rate);
        for (std::size_t u = 0; u < c.inverters.size(); ++u)
            add_source(c.bus_index(c.inverters[u].bus), sol.pv_p(static_cast<Index>(u), t), 0.0);
        for (std::size_t u = 0; u < c.sync_dgs.size(); ++u)
            add_source(c.bus_index(c.sync_dgs[u].bus), sol.sg_p(static_cast<Index>(u), t), model.sync_rates[u]);
        for (std::size_t u = 0; u < c.storage.size(); ++u) {
            const auto& st = c.storage[u];
            const double rate = st.discharge_emission_rate ? *st.discharge_emission_rate
                                                           : stores[u].intensity / st.eta_dis;
            out.storage_dis(static_cast<Index>(u), t) = rate;
            add_source(c.bus_index(st.bus), sol.st_dis(static_cast<Index>(u), t), rate);
        }
        out.source_min(t) = std::isfinite(lo) ? lo : 0.0;
        out.source_max(t) = std::isfinite(hi) ? hi : 0.0;

        std::vector<double> load_mw(nb, 0.0);  // demand + EV + charging
        for (std::size_t i = 0; i < nb; ++i) load_mw[i] = sol.p_demand(static_cast<Index>(i), t);
        for (std::size_t u = 0; u < c.evs.size(); ++u)
            load_mw[c.bus_index(c.evs[u].bus)] += sol.ev_p(static_cast<Index>(u), t);
        for (std::size_t u = 0; u < c.storage.size(); ++u)
            load_mw[c.bus_index(c.storage[u].bus)] += sol.st_cha(static_cast<Index>(u), t);

        // Each branch takes power from the bus(es) injecting into it and
        // delivers to at most one end. parent end injection a = p, child end
        // injection b = loss - p.
        struct Line {
            std::size_t k;
            int from_a, from_b;  // which ends inject
            double a, b, loss;
            int deliver_to;      // bus receiving, -1 if none
            double delivered;
        };
        std::vector<Line> lines;
        std::vector<int> pending(nb, 0);
        std::vector<std::vector<std::size_t>> feeds(nb);  // lines whose intensity depends on the bus
        for (std::size_t j = 0; j < nb; ++j) {
            const int k = tree.feeder_branch[j];
            if (k < 0) continue;
            const auto pa = static_cast<std::size_t>(tree.parent[j]);
            const double p = sol.br_p(k, t);
            const double loss = c.branches[static_cast<std::size_t>(k)].r * sol.br_l(k, t) * S;
            Line ln{static_cast<std::size_t>(k), 0, 0, p, loss - p, loss, -1, 0.0};
            if (ln.a > 0.0 && ln.b < 0.0) {
                ln.deliver_to = static_cast<int>(j);
                ln.delivered = -ln.b;
            } else if (ln.b > 0.0 && ln.a < 0.0) {
                ln.deliver_to = static_cast<int>(pa);
                ln.delivered = -ln.a;
            }
            const std::size_t id = lines.size();
            if (ln.a > 0.0) feeds[pa].push_back(id);
            if (ln.b > 0.0) feeds[j].push_back(id);
            if (ln.deliver_to >= 0) ++pending[static_cast<std::size_t>(ln.deliver_to)];
            lines.push_back(ln);
        }
        // lines delivering to each bus
        std::vector<std::vector<std::size_t>> into(nb);
        for (std::size_t id = 0; id < lines.size(); ++id)
            if (lines[id].deliver_to >= 0) into[static_cast<std::size_t>(lines[id].deliver_to)].push_back(id);

        std::vector<double> line_rate(lines.size(), 0.0);
        std::vector<int> line_wait(lines.size(), 0);
        for (std::size_t j = 0; j < nb; ++j)
            for (std::size_t id : feeds[j]) ++line_wait[id];
        std::vector<double> line_acc_p(lines.size(), 0.0), line_acc_e(lines.size(), 0.0);

        std::vector<std::size_t> ready;
        for (std::size_t j = 0; j < nb; ++j)
            if (pending[j] == 0) ready.push_back(j);
        std::size_t done = 0;
        while (!ready.empty()) {
            const std::size_t j = ready.back();
            ready.pop_back();
            ++done;
            auto inflow = src[j];
            for (std::size_t id : into[j]) inflow.emplace_back(lines[id].delivered, line_rate[id]);
            double total = 0.0;
            for (const auto& f : inflow) total += f.first;
            const double e = mix_intensity(inflow);
            if (total <= 0.0 && load_mw[j] + sink[j] > 1e-9) {
                std::ostringstream w;
                w << "bus " << c.buses[j].id << " hour " << t + 1 << ": load with no injection, intensity set to 0";
                out.warnings.push_back(w.str());
            }
            out.node(static_cast<Index>(j), t) = e;
            out.load(t) += e * (load_mw[j] + sink[j]) * dt;
            for (std::size_t id : feeds[j]) {
                Line& ln = lines[id];
                const double inj = (tree.feeder_branch[j] == static_cast<int>(ln.k)) ? ln.b : ln.a;
                line_acc_p[id] += inj;
                line_acc_e[id] += inj * e;
                if (--line_wait[id] > 0) continue;
                line_rate[id] = line_acc_p[id] > 0.0 ? line_acc_e[id] / line_acc_p[id] : 0.0;
                out.branch(static_cast<Index>(ln.k), t) = line_rate[id];
                out.loss(t) += line_rate[id] * ln.loss * dt;
                if (ln.deliver_to >= 0 && --pending[static_cast<std::size_t>(ln.deliver_to)] == 0)
                    ready.push_back(static_cast<std::size_t>(ln.deliver_to));
            }
        }
        if (done != nb) fail(ErrorKind::Numerical, "carbon flow sweep did not reach every bus");
        // a line fed from both ends delivers nothing; its whole intake is loss
        out.audit_error = std::max(out.audit_error, std::abs(out.generation(t) - out.load(t) - out.loss(t)));

        for (std::size_t u = 0; u < c.storage.size(); ++u) {
            const auto& st = c.storage[u];
            Store& s = stores[u];
            const double cha = sol.st_cha(static_cast<Index>(u), t);
            const double dis = sol.st_dis(static_cast<Index>(u), t);
            const double bus_e = out.node(static_cast<Index>(c.bus_index(st.bus)), t);
            s.carbon += bus_e * cha * dt - s.intensity * dis / st.eta_dis * dt;
            s.energy += st.eta_cha * cha * dt - dis / st.eta_dis * dt;
            if (s.energy > 1e-9) s.intensity = std::max(0.0, s.carbon / s.energy);
        }
    }
    return out;
}

MeritOrder compute_merit_order(const NetworkCase& c, const ScenarioSet& s, const EmissionModel& model) {
    validate(s, c);
    const int T = c.horizon;
    MeritOrder mo;
    mo.rodm = Eigen::MatrixXd::Zero(static_cast<Index>(c.buses.size()), T);
    for (int t = 0; t < T; ++t) {
        const auto tt = static_cast<std::size_t>(t);
        std::vector<MeritOrder::Unit> units;
        for (std::size_t u = 0; u < c.inverters.size(); ++u) {
            const auto& g = c.inverters[u];
            units.push_back({g.id, g.price_p, g.capacity * s.pv_availability(static_cast<Index>(u), t), 0.0});
        }
        for (std::size_t u = 0; u < c.sync_dgs.size(); ++u) {
            const auto& g = c.sync_dgs[u];
            units.push_back({g.id, g.price_p, g.p_max, model.sync_rates[u]});
        }
        units.push_back({"substation", c.substation.price_p[tt], c.substation.p_max, model.substation_rate});
        std::stable_sort(units.begin(), units.end(),
                         [](const auto& a, const auto& b) { return a.price < b.price; });

        const double demand = s.p_demand.col(t).sum();
        double cum = 0.0;
        int marginal = -1;
        for (std::size_t k = 0; k < units.size(); ++k) {
            cum += units[k].capacity;
            if (cum > demand) {
                marginal = static_cast<int>(k);
                break;
            }
        }
        if (marginal < 0) {
            if (demand > cum) {
                std::ostringstream msg;
                msg << "hour " << t + 1 << ": demand " << demand << " MW exceeds merit-order capacity " << cum << " MW";
                fail(ErrorKind::Validation, msg.str());
            }
            marginal = static_cast<int>(units.size()) - 1;  // exactly at total capacity
        }
        mo.rodm.col(t).setConstant(units[static_cast<std::size_t>(marginal)].rate);
        mo.marginal.push_back(marginal);
        mo.stack.push_back(std::move(units));
    }
    return mo;
}

}  // namespace dlme
