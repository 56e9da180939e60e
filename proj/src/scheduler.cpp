#include "dlme/scheduler.hpp"

#include "dlme/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <sstream>

namespace dlme {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Terms = std::vector<std::pair<Index, double>>;

// Collects rows per cone family, then stacks zero | nonnegative | second-order.
class Builder {
public:
    Index var(std::string name, double cost = 0.0) {
        names_.push_back(std::move(name));
        cost_.push_back(cost);
        return static_cast<Index>(cost_.size()) - 1;
    }
    void add_cost(Index j, double cost) { cost_[static_cast<std::size_t>(j)] += cost; }

    /// sum a_j x_j = rhs; returns the position inside the zero block.
    Index eq(const Terms& t, double rhs, std::string name) {
        zero_.hour = hour_;
        return zero_.add(t, rhs, std::move(name));
    }
    /// sum a_j x_j <= rhs
    void le(const Terms& t, double rhs, std::string name) {
        nonneg_.hour = hour_;
        nonneg_.add(t, rhs, std::move(name));
    }
    void ge(const Terms& t, double rhs, std::string name) {
        Terms neg = t;
        for (auto& [j, a] : neg) a = -a;
        le(neg, -rhs, std::move(name));
    }
    /// lo <= x <= hi; a fixed value becomes an equality.
    void box(Index j, double lo, double hi, const std::string& name) {
        if (lo > hi) fail(ErrorKind::Validation, name + ": lower bound exceeds upper bound");
        if (lo == hi) {
            eq({{j, 1.0}}, lo, name + " fixed");
            return;
        }
        if (lo > -kInf) ge({{j, 1.0}}, lo, name + " lower");
        if (hi < kInf) le({{j, 1.0}}, hi, name + " upper");
    }
    /// (t, w) in the second-order cone where each entry is an affine expression
    /// sum a_j x_j (no constant).
    void soc(const std::vector<Terms>& entries, const std::string& name) {
        soc_.hour = hour_;
        for (std::size_t k = 0; k < entries.size(); ++k) {
            Terms neg = entries[k];
            for (auto& [j, a] : neg) a = -a;
            soc_.add(neg, 0.0, name + "[" + std::to_string(k) + "]");
        }
        soc_dims_.push_back(static_cast<Index>(entries.size()));
    }

    Index zero_rows() const { return zero_.size(); }
    void set_hour(int t) { hour_ = t; }

    ConeProblem finish(std::vector<std::string>& row_names, std::vector<int>& row_hours,
                       std::vector<std::string>& col_names) {
        const Index n = static_cast<Index>(cost_.size());
        const Index m = zero_.size() + nonneg_.size() + soc_.size();
        std::vector<Triplet> trip;
        ConeProblem p;
        p.b = Vec::Zero(m);
        p.c = Eigen::Map<const Vec>(cost_.data(), n);
        Index offset = 0;
        row_names.clear();
        row_hours.clear();
        for (const Block* blk : {&zero_, &nonneg_, &soc_}) {
            for (const auto& t : blk->trip) trip.emplace_back(t.row() + offset, t.col(), t.value());
            for (Index i = 0; i < blk->size(); ++i) p.b(offset + i) = blk->rhs[static_cast<std::size_t>(i)];
            row_names.insert(row_names.end(), blk->names.begin(), blk->names.end());
            row_hours.insert(row_hours.end(), blk->hours.begin(), blk->hours.end());
            offset += blk->size();
        }
        p.A.resize(m, n);
        p.A.setFromTriplets(trip.begin(), trip.end());
        p.A.prune(0.0);
        if (zero_.size()) p.cones.push_back({ConeKind::Zero, zero_.size()});
        if (nonneg_.size()) p.cones.push_back({ConeKind::Nonnegative, nonneg_.size()});
        for (Index d : soc_dims_) p.cones.push_back({ConeKind::SecondOrder, d});
        col_names = names_;
        return p;
    }

private:
    struct Block {
        std::vector<Triplet> trip;
        std::vector<double> rhs;
        std::vector<std::string> names;
        Index size() const { return static_cast<Index>(rhs.size()); }
        Index add(const Terms& t, double b, std::string name) {
            const Index row = size();
            for (const auto& [j, a] : t)
                if (a != 0.0) trip.emplace_back(row, j, a);
            rhs.push_back(b);
            names.push_back(std::move(name));
            hours.push_back(hour);
            return row;
        }
        int hour = -1;
        std::vector<int> hours;
    };
    Block zero_, nonneg_, soc_;
    int hour_ = -1;
    std::vector<Index> soc_dims_;
    std::vector<double> cost_;
    std::vector<std::string> names_;
};

std::string at(const std::string& what, int t) { return what + " h" + std::to_string(t + 1); }

IndexTable table(std::size_t rows, int horizon) {
    return IndexTable(rows, std::vector<Index>(static_cast<std::size_t>(horizon), -1));
}

double value(const Vec& x, Index j) { return j < 0 ? 0.0 : x(j); }

}  // namespace

ConeProgram build_program(const NetworkCase& c, const ScenarioSet& s) {
    validate(s, c);
    const int T = c.horizon;
    const double S = c.base.mva;
    const double dt = c.options.delta_t;
    const std::size_t nb = c.buses.size();
    const Tree tree = radial_tree(c);
    const bool magnitude = c.options.reactive_cost == ReactiveCost::Magnitude;

    Builder B;
    ConeProgram prog;
    VariableIndex& ix = prog.index;
    ix.horizon = T;
    ix.parent = tree.parent;
    ix.feeder_branch = tree.feeder_branch;
    ix.p_sub.assign(static_cast<std::size_t>(T), -1);
    ix.q_sub = ix.p_sub;
    ix.pv_p = table(c.inverters.size(), T);
    ix.pv_q = ix.pv_p;
    ix.sg_p = table(c.sync_dgs.size(), T);
    ix.sg_q = ix.sg_p;
    ix.st_cha = table(c.storage.size(), T);
    ix.st_dis = ix.st_cha;
    ix.st_e = ix.st_cha;
    ix.ev_p = table(c.evs.size(), T);
    ix.br_p = table(c.branches.size(), T);
    ix.br_q = ix.br_p;
    ix.br_l = ix.br_p;
    ix.v = table(nb, T);
    ix.balance_p = table(nb, T);
    ix.balance_q = ix.balance_p;

    auto energy_cost = [&](double price) { return price * S * dt; };
    // Reactive cost: signed (linear in q) or |q| through an epigraph variable.
    auto reactive_cost = [&](Index q, double price, const std::string& name) {
        if (!magnitude) {
            B.add_cost(q, energy_cost(price));
            return;
        }
        const Index a = B.var(name + " |q|", energy_cost(price));
        B.ge({{a, 1.0}, {q, -1.0}}, 0.0, name + " |q| >= q");
        B.ge({{a, 1.0}, {q, 1.0}}, 0.0, name + " |q| >= -q");
    };

    // bus injections (p.u.) gathered per hour: generation enters with +1, EV with -1
    std::vector<std::vector<Terms>> inj_p(nb, std::vector<Terms>(static_cast<std::size_t>(T)));
    auto inj_q = inj_p;

    for (int t = 0; t < T; ++t) {
        const auto tt = static_cast<std::size_t>(t);
        const std::size_t root = c.substation_index();
        B.set_hour(t);

        // substation
        const Index ps = B.var(at("p_sub", t), energy_cost(c.substation.price_p[tt]));
        const Index qs = B.var(at("q_sub", t));
        reactive_cost(qs, c.substation.price_q[tt], at("q_sub", t));
        ix.p_sub[tt] = ps;
        ix.q_sub[tt] = qs;
        B.box(ps, c.substation.p_min / S, c.substation.p_max / S, at("substation p", t));
        B.box(qs, -c.substation.q_max / S, c.substation.q_max / S, at("substation q", t));
        inj_p[root][tt].push_back({ps, 1.0});
        inj_q[root][tt].push_back({qs, 1.0});

        // voltages
        for (std::size_t i = 0; i < nb; ++i) {
            const Bus& bus = c.buses[i];
            const std::string name = at("v bus " + std::to_string(bus.id), t);
            const Index v = B.var(name);
            ix.v[i][tt] = v;
            if (i == root && c.substation.v_set)
                B.box(v, *c.substation.v_set * *c.substation.v_set, *c.substation.v_set * *c.substation.v_set, name);
            else
                B.box(v, bus.v_min * bus.v_min, bus.v_max * bus.v_max, name);
        }

        // inverter DGs
        for (std::size_t u = 0; u < c.inverters.size(); ++u) {
            const InverterDG& g = c.inverters[u];
            const double hi = g.capacity * s.pv_availability(static_cast<Index>(u), t);
            const std::string name = at("inverter " + g.id, t);
            if (g.p_min > hi) fail(ErrorKind::Validation, name + ": p_min exceeds available output");
            if (hi <= 0.0) continue;  // dark hour: no variables
            const std::size_t b = c.bus_index(g.bus);
            const Index p = B.var(name + " p", energy_cost(g.price_p));
            ix.pv_p[u][tt] = p;
            B.box(p, g.p_min / S, hi / S, name + " p");
            inj_p[b][tt].push_back({p, 1.0});
            if (g.kappa_min < 1.0) {
                const Index q = B.var(name + " q");
                ix.pv_q[u][tt] = q;
                reactive_cost(q, g.price_q.value_or(c.substation.price_q[tt]), name);
                const double k = std::sqrt(1.0 - g.kappa_min * g.kappa_min) / g.kappa_min;
                B.le({{q, 1.0}, {p, -k}}, 0.0, name + " power factor upper");
                B.le({{q, -1.0}, {p, -k}}, 0.0, name + " power factor lower");
                inj_q[b][tt].push_back({q, 1.0});
            }
        }

        // synchronous DGs
        for (std::size_t u = 0; u < c.sync_dgs.size(); ++u) {
            const SynchronousDG& g = c.sync_dgs[u];
            const std::string name = at("sync " + g.id, t);
            const std::size_t b = c.bus_index(g.bus);
            const Index p = B.var(name + " p", energy_cost(g.price_p));
            const Index q = B.var(name + " q");
            reactive_cost(q, g.price_q.value_or(c.substation.price_q[tt]), name);
            ix.sg_p[u][tt] = p;
            ix.sg_q[u][tt] = q;
            B.box(p, g.p_min / S, g.p_max / S, name + " p");
            B.box(q, g.q_min / S, g.q_max / S, name + " q");
            inj_p[b][tt].push_back({p, 1.0});
            inj_q[b][tt].push_back({q, 1.0});

            // ramping, skipped where the output range already implies it
            const double up = g.ramp_up * dt, down = g.ramp_down * dt;
            const double range = g.p_max - g.p_min;
            if (t == 0) {
                const double p0 = g.initial_output();
                if (p0 + up < g.p_max) B.le({{p, 1.0}}, (p0 + up) / S, name + " ramp up");
                if (p0 + down > g.p_min) B.ge({{p, 1.0}}, (p0 + down) / S, name + " ramp down");
            } else {
                const Index prev = ix.sg_p[u][tt - 1];
                if (up < range) B.le({{p, 1.0}, {prev, -1.0}}, up / S, name + " ramp up");
                if (down > -range) B.ge({{p, 1.0}, {prev, -1.0}}, down / S, name + " ramp down");
            }
        }

        // storage
        for (std::size_t u = 0; u < c.storage.size(); ++u) {
            const EnergyStorage& es = c.storage[u];
            const std::string name = at("storage " + es.id, t);
            const std::size_t b = c.bus_index(es.bus);
            const Index cha = B.var(name + " charge", energy_cost(es.price));
            const Index dis = B.var(name + " discharge", energy_cost(es.price));
            const Index e = B.var(name + " energy");
            ix.st_cha[u][tt] = cha;
            ix.st_dis[u][tt] = dis;
            ix.st_e[u][tt] = e;
            B.box(cha, 0.0, es.p_cha_max / S, name + " charge");
            B.box(dis, 0.0, es.p_dis_max / S, name + " discharge");
            // energy limits only where reachable from e_init
            const double hours = dt * (t + 1);
            const double reach_hi = es.e_init + hours * es.eta_cha * es.p_cha_max;
            const double reach_lo = es.e_init - hours * es.p_dis_max / es.eta_dis;
            const bool last = t == T - 1;
            double lo = reach_lo < es.e_min ? es.e_min : -kInf;
            if (last && c.options.terminal_storage) lo = std::max(lo, es.e_init);
            const double hi = reach_hi > es.e_max ? es.e_max : kInf;
            if (lo > -kInf || hi < kInf) B.box(e, lo / S, hi / S, name + " energy");
            Terms rec{{e, 1.0}, {cha, -dt * es.eta_cha}, {dis, dt / es.eta_dis}};
            double rhs = es.e_init / S;
            if (t > 0) {
                rec.push_back({ix.st_e[u][tt - 1], -1.0});
                rhs = 0.0;
            }
            B.eq(rec, rhs, name + " state of charge");
            inj_p[b][tt].push_back({dis, 1.0});
            inj_p[b][tt].push_back({cha, -1.0});
        }

        // EV aggregators
        for (std::size_t u = 0; u < c.evs.size(); ++u) {
            const EvAggregator& ev = c.evs[u];
            const std::string name = at("ev " + ev.id, t);
            const std::size_t b = c.bus_index(ev.bus);
            const Index p = B.var(name + " p");
            ix.ev_p[u][tt] = p;
            B.box(p, ev.p_lb[tt] / S, ev.p_ub[tt] / S, name + " p");
            inj_p[b][tt].push_back({p, -1.0});
            double lo_sum = 0.0, hi_sum = 0.0;
            Terms cum;
            for (int k = 0; k <= t; ++k) {
                lo_sum += ev.p_lb[static_cast<std::size_t>(k)] * dt;
                hi_sum += ev.p_ub[static_cast<std::size_t>(k)] * dt;
                cum.push_back({ix.ev_p[u][static_cast<std::size_t>(k)], dt});
            }
            // Bounds implied by the power limits, or by the final-hour bounds
            // together with the power limits of later hours, are left out.
            double later_lo = 0.0, later_hi = 0.0;
            for (int k = t + 1; k < T; ++k) {
                later_lo += ev.p_lb[static_cast<std::size_t>(k)] * dt;
                later_hi += ev.p_ub[static_cast<std::size_t>(k)] * dt;
            }
            const double elo = ev.e_lb[tt], ehi = ev.e_ub[tt];
            const bool final_hour = t == T - 1;
            if (elo == ehi) {
                B.eq(cum, elo / S, name + " cumulative energy fixed");
            } else {
                const double implied_lo = std::max(lo_sum, final_hour ? -kInf : ev.e_lb.back() - later_hi);
                const double implied_hi = std::min(hi_sum, final_hour ? kInf : ev.e_ub.back() - later_lo);
                if (implied_lo < elo) B.ge(cum, elo / S, name + " cumulative energy lower");
                if (implied_hi > ehi) B.le(cum, ehi / S, name + " cumulative energy upper");
            }
        }

        // branches: variables, limits, voltage drop and the relaxed flow cone
        for (std::size_t j = 0; j < nb; ++j) {
            const int kb = tree.feeder_branch[j];
            if (kb < 0) continue;
            const auto k = static_cast<std::size_t>(kb);
            const Branch& br = c.branches[k];
            const auto i = static_cast<std::size_t>(tree.parent[j]);
            const std::string name =
                at("branch " + std::to_string(c.buses[i].id) + "-" + std::to_string(c.buses[j].id), t);
            const Index p = B.var(name + " p");
            const Index q = B.var(name + " q");
            const Index l = B.var(name + " l");
            ix.br_p[k][tt] = p;
            ix.br_q[k][tt] = q;
            ix.br_l[k][tt] = l;
            B.le({{l, 1.0}}, br.i_max * br.i_max, name + " current upper");
            if (br.i_min > 0.0) B.ge({{l, 1.0}}, br.i_min * br.i_min, name + " current lower");
            const Index vi = ix.v[i][tt], vj = ix.v[j][tt];
            B.eq({{vj, 1.0}, {vi, -1.0}, {p, 2.0 * br.r}, {q, 2.0 * br.x}, {l, -(br.r * br.r + br.x * br.x)}},
                 0.0, name + " voltage drop");
            B.soc({{{l, 1.0}, {vi, 1.0}}, {{p, 2.0}}, {{q, 2.0}}, {{l, 1.0}, {vi, -1.0}}}, name + " flow cone");
        }
    }

    // balance rows: children out - (parent in - losses) - injections = -demand
    for (int t = 0; t < T; ++t) {
        const auto tt = static_cast<std::size_t>(t);
        B.set_hour(t);
        for (std::size_t j = 0; j < nb; ++j) {
            Terms rp, rq;
            for (std::size_t ch = 0; ch < nb; ++ch) {
                if (tree.parent[ch] != static_cast<int>(j)) continue;
                const auto k = static_cast<std::size_t>(tree.feeder_branch[ch]);
                rp.push_back({ix.br_p[k][tt], 1.0});
                rq.push_back({ix.br_q[k][tt], 1.0});
            }
            if (tree.feeder_branch[j] >= 0) {
                const auto k = static_cast<std::size_t>(tree.feeder_branch[j]);
                const Branch& br = c.branches[k];
                rp.push_back({ix.br_p[k][tt], -1.0});
                rp.push_back({ix.br_l[k][tt], br.r});
                rq.push_back({ix.br_q[k][tt], -1.0});
                rq.push_back({ix.br_l[k][tt], br.x});
            }
            for (auto [col, a] : inj_p[j][tt]) rp.push_back({col, -a});
            for (auto [col, a] : inj_q[j][tt]) rq.push_back({col, -a});
            const std::string name = "bus " + std::to_string(c.buses[j].id);
            // A bus with no variables at all (isolated, unsupplied) cannot balance.
            if (rp.empty() || rq.empty())
                fail(ErrorKind::Validation, at(name, t) + ": no supply or flow variables");
            ix.balance_p[j][tt] = B.eq(rp, -s.p_demand(static_cast<Index>(j), t) / S, at(name + " active balance", t));
            ix.balance_q[j][tt] = B.eq(rq, -s.q_demand(static_cast<Index>(j), t) / S, at(name + " reactive balance", t));
        }
    }

    prog.problem = B.finish(prog.row_names, prog.row_hours, ix.column_names);
    const double cmax = prog.problem.c.size() ? prog.problem.c.cwiseAbs().maxCoeff() : 0.0;
    prog.objective_scale = cmax > 0.0 ? cmax : 1.0;
    prog.problem.c /= prog.objective_scale;
    prog.base_mva = S;
    prog.delta_t = dt;
    prog.problem.validate();
    return prog;
}

void set_demand(ConeProgram& prog, const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) {
    const auto& ix = prog.index;
    if (p.rows() != static_cast<Index>(ix.balance_p.size()) || p.cols() != ix.horizon ||
        q.rows() != p.rows() || q.cols() != p.cols())
        fail(ErrorKind::Validation, "demand matrices do not match the program");
    for (std::size_t i = 0; i < ix.balance_p.size(); ++i)
        for (int t = 0; t < ix.horizon; ++t) {
            prog.problem.b(ix.balance_p[i][static_cast<std::size_t>(t)]) = -p(static_cast<Index>(i), t) / prog.base_mva;
            prog.problem.b(ix.balance_q[i][static_cast<std::size_t>(t)]) = -q(static_cast<Index>(i), t) / prog.base_mva;
        }
}

DispatchSolution extract_dispatch(const ConeProgram& prog, const SolutionBundle& bundle) {
    const auto& ix = prog.index;
    const int T = ix.horizon;
    const double S = prog.base_mva;
    DispatchSolution d;
    d.status = bundle.status;
    d.kkt = bundle.kkt;
    d.residual_norm = bundle.residual_norm;
    d.iterations = bundle.iterations;
    d.message = bundle.message;
    const Vec& x = bundle.solution.x;
    const bool have = x.size() == prog.problem.A.cols();
    auto get = [&](Index j, double scale) { return have ? value(x, j) * scale : 0.0; };
    auto fill = [&](const IndexTable& tab, double scale) {
        Eigen::MatrixXd m(static_cast<Index>(tab.size()), T);
        for (std::size_t u = 0; u < tab.size(); ++u)
            for (int t = 0; t < T; ++t) m(static_cast<Index>(u), t) = get(tab[u][static_cast<std::size_t>(t)], scale);
        return m;
    };
    d.p_sub.resize(T);
    d.q_sub.resize(T);
    for (int t = 0; t < T; ++t) {
        d.p_sub(t) = get(ix.p_sub[static_cast<std::size_t>(t)], S);
        d.q_sub(t) = get(ix.q_sub[static_cast<std::size_t>(t)], S);
    }
    d.pv_p = fill(ix.pv_p, S);
    d.pv_q = fill(ix.pv_q, S);
    d.sg_p = fill(ix.sg_p, S);
    d.sg_q = fill(ix.sg_q, S);
    d.st_cha = fill(ix.st_cha, S);
    d.st_dis = fill(ix.st_dis, S);
    d.st_e = fill(ix.st_e, S);
    d.ev_p = fill(ix.ev_p, S);
    d.br_p = fill(ix.br_p, S);
    d.br_q = fill(ix.br_q, S);
    d.br_l = fill(ix.br_l, 1.0);
    d.v = fill(ix.v, 1.0);
    const auto nb = static_cast<Index>(ix.balance_p.size());
    d.p_demand.resize(nb, T);
    d.q_demand.resize(nb, T);
    for (Index i = 0; i < nb; ++i)
        for (int t = 0; t < T; ++t) {
            d.p_demand(i, t) = -prog.problem.b(ix.balance_p[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)]) * S;
            d.q_demand(i, t) = -prog.problem.b(ix.balance_q[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)]) * S;
        }
    if (have) {
        d.objective = prog.objective_scale * prog.problem.c.dot(x);
        for (std::size_t k = 0; k < ix.br_l.size(); ++k)
            for (int t = 0; t < T; ++t) {
                const auto tt = static_cast<std::size_t>(t);
                if (ix.br_l[k][tt] < 0) continue;
                // the parent of the branch is the bus whose feeder it is not
                std::size_t parent = 0;
                for (std::size_t j = 0; j < ix.feeder_branch.size(); ++j)
                    if (ix.feeder_branch[j] == static_cast<int>(k)) parent = static_cast<std::size_t>(ix.parent[j]);
                const double p = x(ix.br_p[k][tt]), q = x(ix.br_q[k][tt]);
                const double gap = x(ix.br_l[k][tt]) * x(ix.v[parent][tt]) - p * p - q * q;
                d.max_cone_gap = std::max(d.max_cone_gap, gap);
            }
    }
    return d;
}

DispatchResult solve_dispatch(const ConeProgram& prog, const SolverSettings& settings, const Vec* warm_start) {
    DispatchResult r;
    r.bundle = solve_hsde(prog.problem, settings, warm_start);
    r.dispatch = extract_dispatch(prog, r.bundle);
    if (r.bundle.optimal() && r.dispatch.max_cone_gap > 1e-5)
        std::cerr << "warning: flow cone not tight (gap " << r.dispatch.max_cone_gap
                  << "); the relaxation may not be exact\n";
    return r;
}

double total_emission(const DispatchSolution& sol, const NetworkCase& c) {
    const double dt = c.options.delta_t;
    double e = c.substation.emission_rate * sol.p_sub.sum() * dt;
    for (std::size_t u = 0; u < c.sync_dgs.size(); ++u)
        e += c.sync_dgs[u].emission_rate * sol.sg_p.row(static_cast<Index>(u)).sum() * dt;
    e += c.options.storage_emission_rate * sol.st_dis.sum() * dt;
    return e;
}

double constraint_violation(const DispatchSolution& sol, const NetworkCase& c, const ScenarioSet& s) {
    const int T = c.horizon;
    const double S = c.base.mva, dt = c.options.delta_t;
    const Tree tree = radial_tree(c);
    double worst = 0.0;
    auto upd = [&](double viol) { worst = std::max(worst, viol); };
    auto box = [&](double x, double lo, double hi) { upd(std::max(lo - x, x - hi)); };

    for (int t = 0; t < T; ++t) {
        const auto tt = static_cast<std::size_t>(t);
        box(sol.p_sub(t), c.substation.p_min, c.substation.p_max);
        box(sol.q_sub(t), -c.substation.q_max, c.substation.q_max);
        Eigen::VectorXd gp = Eigen::VectorXd::Zero(static_cast<Index>(c.buses.size())), gq = gp;
        const auto root = static_cast<Index>(c.substation_index());
        gp(root) += sol.p_sub(t);
        gq(root) += sol.q_sub(t);
        for (std::size_t u = 0; u < c.inverters.size(); ++u) {
            const auto& g = c.inverters[u];
            const auto U = static_cast<Index>(u);
            const double hi = g.capacity * s.pv_availability(U, t);
            const double p = sol.pv_p(U, t), q = sol.pv_q(U, t);
            if (hi > 0.0) box(p, g.p_min, hi);
            else upd(std::abs(p) + std::abs(q));
            const double k = std::sqrt(1.0 - g.kappa_min * g.kappa_min) / g.kappa_min;
            upd(std::abs(q) - k * p);
            gp(static_cast<Index>(c.bus_index(g.bus))) += p;
            gq(static_cast<Index>(c.bus_index(g.bus))) += q;
        }
        for (std::size_t u = 0; u < c.sync_dgs.size(); ++u) {
            const auto& g = c.sync_dgs[u];
            const auto U = static_cast<Index>(u);
            box(sol.sg_p(U, t), g.p_min, g.p_max);
            box(sol.sg_q(U, t), g.q_min, g.q_max);
            const double prev = t == 0 ? g.initial_output() : sol.sg_p(U, t - 1);
            box(sol.sg_p(U, t) - prev, g.ramp_down * dt, g.ramp_up * dt);
            gp(static_cast<Index>(c.bus_index(g.bus))) += sol.sg_p(U, t);
            gq(static_cast<Index>(c.bus_index(g.bus))) += sol.sg_q(U, t);
        }
        for (std::size_t u = 0; u < c.storage.size(); ++u) {
            const auto& es = c.storage[u];
            const auto U = static_cast<Index>(u);
            box(sol.st_cha(U, t), 0.0, es.p_cha_max);
            box(sol.st_dis(U, t), 0.0, es.p_dis_max);
            box(sol.st_e(U, t), es.e_min, es.e_max);
            const double prev = t == 0 ? es.e_init : sol.st_e(U, t - 1);
            upd(std::abs(sol.st_e(U, t) - prev - dt * (es.eta_cha * sol.st_cha(U, t) - sol.st_dis(U, t) / es.eta_dis)));
            if (t == T - 1 && c.options.terminal_storage) upd(es.e_init - sol.st_e(U, t));
            gp(static_cast<Index>(c.bus_index(es.bus))) += sol.st_dis(U, t) - sol.st_cha(U, t);
        }
        for (std::size_t u = 0; u < c.evs.size(); ++u) {
            const auto& ev = c.evs[u];
            const auto U = static_cast<Index>(u);
            box(sol.ev_p(U, t), ev.p_lb[tt], ev.p_ub[tt]);
            box(sol.ev_p.row(U).head(t + 1).sum() * dt, ev.e_lb[tt], ev.e_ub[tt]);
            gp(static_cast<Index>(c.bus_index(ev.bus))) -= sol.ev_p(U, t);
        }
        for (std::size_t j = 0; j < c.buses.size(); ++j) {
            const auto J = static_cast<Index>(j);
            const Bus& bus = c.buses[j];
            if (static_cast<Index>(j) == root && c.substation.v_set)
                upd(std::abs(sol.v(J, t) - *c.substation.v_set * *c.substation.v_set));
            else
                box(sol.v(J, t), bus.v_min * bus.v_min, bus.v_max * bus.v_max);
            double bp = gp(J) - s.p_demand(J, t), bq = gq(J) - s.q_demand(J, t);
            for (std::size_t ch = 0; ch < c.buses.size(); ++ch) {
                if (tree.parent[ch] != static_cast<int>(j)) continue;
                const auto k = static_cast<Index>(tree.feeder_branch[ch]);
                bp -= sol.br_p(k, t);
                bq -= sol.br_q(k, t);
            }
            if (tree.feeder_branch[j] >= 0) {
                const auto k = static_cast<Index>(tree.feeder_branch[j]);
                const Branch& br = c.branches[static_cast<std::size_t>(k)];
                const auto I = static_cast<Index>(tree.parent[j]);
                const double l = sol.br_l(k, t), p = sol.br_p(k, t) / S, q = sol.br_q(k, t) / S;
                bp += sol.br_p(k, t) - br.r * l * S;
                bq += sol.br_q(k, t) - br.x * l * S;
                upd(std::abs(sol.v(J, t) - sol.v(I, t) + 2.0 * (br.r * p + br.x * q) -
                             (br.r * br.r + br.x * br.x) * l));
                box(l, br.i_min * br.i_min, br.i_max * br.i_max);
                const double vi = sol.v(I, t);
                upd(std::hypot(2.0 * p, 2.0 * q, l - vi) - (l + vi));
            }
            upd(std::abs(bp) / S);
            upd(std::abs(bq) / S);
        }
    }
    return worst;
}

std::string dump_program(const ConeProgram& prog) {
    const ConeProblem& p = prog.problem;
    std::ostringstream out;
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "# cone program: minimize c'x subject to A x + s = b, s in K\n";
    out << "# objective_scale " << num(prog.objective_scale) << "\n";
    out << "n " << p.A.cols() << "\nm " << p.A.rows() << "\n";
    out << "cones " << p.cones.size() << "\n";
    for (const Cone& k : p.cones) out << to_string(k.kind) << " " << k.dim << "\n";
    Index nc = 0;
    for (Index j = 0; j < p.c.size(); ++j) nc += p.c(j) != 0.0;
    out << "c " << nc << "\n";
    for (Index j = 0; j < p.c.size(); ++j)
        if (p.c(j) != 0.0) out << j << " " << num(p.c(j)) << "\n";
    Index nbz = 0;
    for (Index i = 0; i < p.b.size(); ++i) nbz += p.b(i) != 0.0;
    out << "b " << nbz << "\n";
    for (Index i = 0; i < p.b.size(); ++i)
        if (p.b(i) != 0.0) out << i << " " << num(p.b(i)) << "\n";
    out << "A " << p.A.nonZeros() << "\n";
    for (Index col = 0; col < p.A.outerSize(); ++col)
        for (SpMat::InnerIterator it(p.A, col); it; ++it)
            out << it.row() << " " << col << " " << num(it.value()) << "\n";
    return out.str();
}

}  // namespace dlme
