#include "lascopf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "lascopf/error.hpp"
#include "lascopf/log.hpp"

namespace lascopf {

namespace {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;

// min 1/2 x'diag(q)x + c'x  s.t.  Ax = b,  Gx <= h
struct Qp {
    Vec q, c;
    SpMat A, G;
    Vec b, h;
};

struct QpPoint {
    Vec x, y, z;
    bool converged = false;
    int iterations = 0;
};

double inf_norm(const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

double kkt_residual(const Qp& qp, const Vec& x, const Vec& y, const Vec& z) {
    const Vec rd = qp.q.cwiseProduct(x) + qp.c + qp.A.transpose() * y + qp.G.transpose() * z;
    const Vec slack = qp.h - qp.G * x;
    double r = std::max(inf_norm(rd), inf_norm(qp.A * x - qp.b));
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
        r = std::max(r, -slack[i]);
        r = std::max(r, -z[i]);
        r = std::max(r, std::abs(z[i] * slack[i]));
    }
    return r;
}

double max_step(const Vec& v, const Vec& dv) {
    double a = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
    return a;
}

// Mehrotra predictor-corrector on the reduced KKT system.
QpPoint interior_point(const Qp& qp, double tol, int max_iter) {
    const Eigen::Index n = qp.c.size(), me = qp.b.size(), mi = qp.h.size();
    constexpr double kReg = 1e-11;
    QpPoint pt;
    pt.x = Vec::Zero(n);
    pt.y = Vec::Zero(me);
    pt.z = Vec::Ones(mi);
    Vec s = (qp.h - qp.G * pt.x).cwiseMax(1.0);

    const SpMat At = qp.A.transpose();
    const SpMat Gt = qp.G.transpose();
    const double scale_c = 1.0 + inf_norm(qp.c);
    const double scale_b = 1.0 + std::max(inf_norm(qp.b), inf_norm(qp.h));

    Eigen::SparseLU<SpMat> lu;
    bool analysed = false;
    for (int it = 0; it < max_iter; ++it) {
        pt.iterations = it;
        const Vec rd = qp.q.cwiseProduct(pt.x) + qp.c + At * pt.y + Gt * pt.z;
        const Vec rp = qp.A * pt.x - qp.b;
        const Vec ri = qp.G * pt.x + s - qp.h;
        const double mu = mi ? s.dot(pt.z) / static_cast<double>(mi) : 0.0;
        if (inf_norm(rd) <= tol * scale_c && inf_norm(rp) <= tol * scale_b && inf_norm(ri) <= tol * scale_b &&
            mu <= tol) {
            pt.converged = true;
            return pt;
        }

        const Vec w = pt.z.cwiseQuotient(s);
        SpMat H = Gt * w.asDiagonal() * qp.G;
        std::vector<Trip> trips;
        trips.reserve(static_cast<std::size_t>(H.nonZeros() + 2 * qp.A.nonZeros() + n + me));
        for (int k = 0; k < H.outerSize(); ++k)
            for (SpMat::InnerIterator e(H, k); e; ++e) trips.emplace_back(e.row(), e.col(), e.value());
        for (Eigen::Index i = 0; i < n; ++i) trips.emplace_back(i, i, qp.q[i] + kReg);
        for (int k = 0; k < qp.A.outerSize(); ++k)
            for (SpMat::InnerIterator e(qp.A, k); e; ++e) {
                trips.emplace_back(n + e.row(), e.col(), e.value());
                trips.emplace_back(e.col(), n + e.row(), e.value());
            }
        for (Eigen::Index i = 0; i < me; ++i) trips.emplace_back(n + i, n + i, -kReg);
        SpMat K(n + me, n + me);
        K.setFromTriplets(trips.begin(), trips.end());
        K.makeCompressed();
        if (!analysed) {
            lu.analyzePattern(K);
            analysed = true;
        }
        lu.factorize(K);
        if (lu.info() != Eigen::Success) return pt;

        auto solve = [&](const Vec& rc, Vec& dx, Vec& dy, Vec& dz, Vec& ds) {
            const Vec t = (pt.z.cwiseProduct(ri) - rc).cwiseQuotient(s);
            Vec rhs(n + me);
            rhs.head(n) = -rd - Gt * t;
            rhs.tail(me) = -rp;
            const Vec sol = lu.solve(rhs);
            dx = sol.head(n);
            dy = sol.tail(me);
            const Vec gdx = qp.G * dx;
            dz = t + w.cwiseProduct(gdx);
            ds = -ri - gdx;
        };

        Vec dx, dy, dz, ds;
        const Vec sz = s.cwiseProduct(pt.z);
        solve(sz, dx, dy, dz, ds);
        const double a_aff = std::min(max_step(s, ds), max_step(pt.z, dz));
        const double mu_aff =
            mi ? (s + a_aff * ds).dot(pt.z + a_aff * dz) / static_cast<double>(mi) : 0.0;
        const double sigma = mu > 0.0 ? std::pow(mu_aff / mu, 3) : 0.0;
        const Vec rc = sz + ds.cwiseProduct(dz) - Vec::Constant(mi, sigma * mu);
        solve(rc, dx, dy, dz, ds);
        const double a = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(pt.z, dz)));
        pt.x += a * dx;
        pt.y += a * dy;
        pt.z += a * dz;
        s += a * ds;
        if (!pt.x.allFinite()) return pt;
    }
    pt.iterations = max_iter;
    return pt;
}

// Equality-constrained re-solve on the identified active set.
bool polish(const Qp& qp, QpPoint& pt) {
    const Eigen::Index n = qp.c.size(), me = qp.b.size(), mi = qp.h.size();
    const Vec slack = qp.h - qp.G * pt.x;
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < mi; ++i)
        if (pt.z[i] > slack[i]) active.push_back(i);
    const auto ma = static_cast<Eigen::Index>(active.size());
    std::vector<Trip> trips;
    for (Eigen::Index i = 0; i < n; ++i)
        if (qp.q[i] != 0.0) trips.emplace_back(i, i, qp.q[i]);
    for (int k = 0; k < qp.A.outerSize(); ++k)
        for (SpMat::InnerIterator e(qp.A, k); e; ++e) {
            trips.emplace_back(n + e.row(), e.col(), e.value());
            trips.emplace_back(e.col(), n + e.row(), e.value());
        }
    std::vector<Eigen::Index> row_of(static_cast<std::size_t>(mi), -1);
    for (Eigen::Index k = 0; k < ma; ++k) row_of[static_cast<std::size_t>(active[static_cast<std::size_t>(k)])] = k;
    for (int k = 0; k < qp.G.outerSize(); ++k)
        for (SpMat::InnerIterator e(qp.G, k); e; ++e) {
            const auto r = row_of[static_cast<std::size_t>(e.row())];
            if (r < 0) continue;
            trips.emplace_back(n + me + r, e.col(), e.value());
            trips.emplace_back(e.col(), n + me + r, e.value());
        }
    SpMat K(n + me + ma, n + me + ma);
    K.setFromTriplets(trips.begin(), trips.end());
    K.makeCompressed();
    Eigen::SparseLU<SpMat> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success) return false;
    Vec rhs(n + me + ma);
    rhs.head(n) = -qp.c;
    rhs.segment(n, me) = qp.b;
    for (Eigen::Index k = 0; k < ma; ++k) rhs[n + me + k] = qp.h[active[static_cast<std::size_t>(k)]];
    const Vec sol = lu.solve(rhs);
    if (!sol.allFinite()) return false;
    QpPoint cand = pt;
    cand.x = sol.head(n);
    cand.y = sol.segment(n, me);
    cand.z = Vec::Zero(mi);
    for (Eigen::Index k = 0; k < ma; ++k) cand.z[active[static_cast<std::size_t>(k)]] = sol[n + me + k];
    if (kkt_residual(qp, cand.x, cand.y, cand.z) >= kkt_residual(qp, pt.x, pt.y, pt.z)) return false;
    pt = cand;
    return true;
}

struct Layout {
    int G = 0, N = 0, S = 0, H = 0;
    int p(int t, int g) const { return t * G + g; }
    int theta(int t, int c, int n) const { return H * G + (t * S + c) * N + n; }
    int size() const { return H * G + H * S * N; }
};

int find_root(std::vector<int>& parent, int i) {
    while (parent[static_cast<std::size_t>(i)] != i) i = parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
    return i;
}

}  // namespace

OracleSolution solve_centralized(const CaseSpec& spec, std::span<const int> contingency_lines, int horizon,
                                 const OracleOptions& options) {
    validate_case(spec);
    if (horizon <= 0) horizon = spec.horizon;
    if (horizon > spec.horizon)
        throw ValidationError("oracle horizon " + std::to_string(horizon) + " exceeds the forecast length " +
                              std::to_string(spec.horizon));

    std::map<int, int> bus_index;
    for (std::size_t i = 0; i < spec.buses.size(); ++i) bus_index[spec.buses[i]] = static_cast<int>(i);
    auto bus_of = [&](int bus, const std::string& what) {
        const auto it = bus_index.find(bus);
        if (it == bus_index.end()) throw ValidationError(what + " references unknown bus " + std::to_string(bus));
        return it->second;
    };

    OracleSolution out;
    out.horizon = horizon;
    out.outaged_line_ids.push_back(-1);
    std::vector<int> outage{-1};
    for (int id : contingency_lines) {
        const int r = spec.line_index(id);
        if (r < 0) throw ValidationError("contingency references unknown line " + std::to_string(id));
        outage.push_back(r);
        out.outaged_line_ids.push_back(id);
    }

    Layout lay;
    lay.G = static_cast<int>(spec.generators.size());
    lay.N = static_cast<int>(spec.buses.size());
    lay.S = static_cast<int>(outage.size());
    lay.H = horizon;
    const int n = lay.size();
    const double base = spec.base_mva;

    std::vector<int> gen_bus, from, to;
    for (const auto& g : spec.generators) gen_bus.push_back(bus_of(g.bus, "generator " + std::to_string(g.id)));
    for (const auto& l : spec.lines) {
        from.push_back(bus_of(l.from_bus, "line " + std::to_string(l.id)));
        to.push_back(bus_of(l.to_bus, "line " + std::to_string(l.id)));
    }

    std::vector<Trip> a_trips, g_trips;
    std::vector<double> b_vals, h_vals;
    std::vector<int> balance_row(static_cast<std::size_t>(horizon * lay.S * lay.N));

    for (int t = 0; t < horizon; ++t) {
        std::vector<double> load(static_cast<std::size_t>(lay.N), 0.0);
        for (const auto& bl : forecast_at(spec, t + 1)) load[static_cast<std::size_t>(bus_of(bl.bus, "load"))] += bl.mw;
        for (int c = 0; c < lay.S; ++c) {
            const int rb = static_cast<int>(b_vals.size());
            for (int k = 0; k < lay.N; ++k) {
                balance_row[static_cast<std::size_t>((t * lay.S + c) * lay.N + k)] = rb + k;
                b_vals.push_back(load[static_cast<std::size_t>(k)]);
            }
            for (int g = 0; g < lay.G; ++g) a_trips.emplace_back(rb + gen_bus[static_cast<std::size_t>(g)], lay.p(t, g), 1.0);
            std::vector<int> parent(static_cast<std::size_t>(lay.N));
            std::iota(parent.begin(), parent.end(), 0);
            for (std::size_t r = 0; r < spec.lines.size(); ++r) {
                if (static_cast<int>(r) == outage[static_cast<std::size_t>(c)]) continue;
                const double k = base / spec.lines[r].reactance;
                const int i = from[r], j = to[r];
                // flow i->j = k (theta_i - theta_j); leaves i, enters j
                a_trips.emplace_back(rb + i, lay.theta(t, c, i), -k);
                a_trips.emplace_back(rb + i, lay.theta(t, c, j), k);
                a_trips.emplace_back(rb + j, lay.theta(t, c, i), k);
                a_trips.emplace_back(rb + j, lay.theta(t, c, j), -k);
                const double limit = c == 0 ? spec.lines[r].flow_limit : spec.lines[r].emergency_limit;
                const int rg = static_cast<int>(h_vals.size());
                g_trips.emplace_back(rg, lay.theta(t, c, i), k);
                g_trips.emplace_back(rg, lay.theta(t, c, j), -k);
                g_trips.emplace_back(rg + 1, lay.theta(t, c, i), -k);
                g_trips.emplace_back(rg + 1, lay.theta(t, c, j), k);
                h_vals.push_back(limit);
                h_vals.push_back(limit);
                parent[static_cast<std::size_t>(find_root(parent, i))] = find_root(parent, j);
            }
            std::vector<bool> pinned(static_cast<std::size_t>(lay.N), false);
            for (int k = 0; k < lay.N; ++k) {
                const int root = find_root(parent, k);
                if (pinned[static_cast<std::size_t>(root)]) continue;
                pinned[static_cast<std::size_t>(root)] = true;
                a_trips.emplace_back(static_cast<int>(b_vals.size()), lay.theta(t, c, k), 1.0);
                b_vals.push_back(0.0);
            }
        }
        for (int g = 0; g < lay.G; ++g) {
            const auto& gen = spec.generators[static_cast<std::size_t>(g)];
            auto row = [&](std::initializer_list<std::pair<int, double>> terms, double rhs) {
                const int rg = static_cast<int>(h_vals.size());
                for (const auto& [col, v] : terms) g_trips.emplace_back(rg, col, v);
                h_vals.push_back(rhs);
            };
            row({{lay.p(t, g), 1.0}}, gen.p_max);
            row({{lay.p(t, g), -1.0}}, -gen.p_min);
            if (t == 0) {
                row({{lay.p(t, g), 1.0}}, gen.sched_mw + gen.ramp_up);
                row({{lay.p(t, g), -1.0}}, -(gen.sched_mw + gen.ramp_down));
            } else {
                row({{lay.p(t, g), 1.0}, {lay.p(t - 1, g), -1.0}}, gen.ramp_up);
                row({{lay.p(t, g), -1.0}, {lay.p(t - 1, g), 1.0}}, -gen.ramp_down);
            }
        }
    }

    const auto me = static_cast<Eigen::Index>(b_vals.size());
    const auto mi = static_cast<Eigen::Index>(h_vals.size());
    const int n_balance = horizon * lay.S * lay.N;

    // Phase 1: least total imbalance with elastic balance rows.
    {
        Qp p1;
        const int ne = n + 2 * n_balance;
        p1.q = Vec::Zero(ne);
        p1.c = Vec::Zero(ne);
        p1.c.tail(2 * n_balance).setOnes();
        std::vector<Trip> at = a_trips, gt = g_trips;
        for (int k = 0; k < n_balance; ++k) {
            at.emplace_back(balance_row[static_cast<std::size_t>(k)], n + 2 * k, 1.0);
            at.emplace_back(balance_row[static_cast<std::size_t>(k)], n + 2 * k + 1, -1.0);
            gt.emplace_back(static_cast<int>(mi) + 2 * k, n + 2 * k, -1.0);
            gt.emplace_back(static_cast<int>(mi) + 2 * k + 1, n + 2 * k + 1, -1.0);
        }
        p1.A.resize(me, ne);
        p1.A.setFromTriplets(at.begin(), at.end());
        p1.G.resize(mi + 2 * n_balance, ne);
        p1.G.setFromTriplets(gt.begin(), gt.end());
        p1.b = Eigen::Map<const Vec>(b_vals.data(), me);
        p1.h = Vec::Zero(mi + 2 * n_balance);
        p1.h.head(mi) = Eigen::Map<const Vec>(h_vals.data(), mi);
        const auto pt = interior_point(p1, 1e-9, options.max_iter);
        out.iterations += pt.iterations;
        const double violation = pt.x.tail(2 * n_balance).sum();
        const double total = p1.b.lpNorm<1>();
        if (!pt.converged && !std::isfinite(violation))
            throw Error("oracle: feasibility stage failed to converge");
        out.infeasibility_mw = std::max(0.0, violation);
        if (violation > 1e-6 * (1.0 + total)) {
            int worst = 0;
            double wv = -1.0;
            for (int k = 0; k < n_balance; ++k) {
                const double v = pt.x[n + 2 * k] + pt.x[n + 2 * k + 1];
                if (v > wv) {
                    wv = v;
                    worst = k;
                }
            }
            const int bus = spec.buses[static_cast<std::size_t>(worst % lay.N)];
            const int c = (worst / lay.N) % lay.S;
            const int t = worst / (lay.N * lay.S);
            std::ostringstream msg;
            msg << "infeasible: no dispatch meets every constraint; least total nodal imbalance " << violation
                << " MW, largest " << wv << " MW at bus " << bus << ", interval " << t + 1;
            if (c > 0) msg << ", outage of line " << contingency_lines[static_cast<std::size_t>(c - 1)];
            out.certificate = msg.str();
            out.feasible = false;
            log::info("oracle: ", out.certificate);
            return out;
        }
    }

    Qp qp;
    qp.q = Vec::Zero(n);
    qp.c = Vec::Zero(n);
    double constant = 0.0;
    for (int t = 0; t < horizon; ++t)
        for (int g = 0; g < lay.G; ++g) {
            const auto& gen = spec.generators[static_cast<std::size_t>(g)];
            qp.q[lay.p(t, g)] = 2.0 * gen.cost_a;
            qp.c[lay.p(t, g)] = gen.cost_b;
            constant += gen.cost_c;
        }
    qp.A.resize(me, n);
    qp.A.setFromTriplets(a_trips.begin(), a_trips.end());
    qp.G.resize(mi, n);
    qp.G.setFromTriplets(g_trips.begin(), g_trips.end());
    qp.b = Eigen::Map<const Vec>(b_vals.data(), me);
    qp.h = Eigen::Map<const Vec>(h_vals.data(), mi);

    auto pt = interior_point(qp, options.tolerance, options.max_iter);
    out.iterations += pt.iterations;
    if (!pt.converged && !pt.x.allFinite()) throw Error("oracle: interior point failed");
    if (options.polish) out.polished = polish(qp, pt);
    out.kkt_residual = kkt_residual(qp, pt.x, pt.y, pt.z);
    out.feasible = true;

    const Vec& x = pt.x;
    out.objective = constant + 0.5 * x.dot(qp.q.cwiseProduct(x)) + qp.c.dot(x);
    out.dispatch_mw.assign(static_cast<std::size_t>(horizon), std::vector<double>(static_cast<std::size_t>(lay.G)));
    out.angles.assign(static_cast<std::size_t>(horizon), {});
    out.lmp.assign(static_cast<std::size_t>(horizon), {});
    out.flows_mw.assign(static_cast<std::size_t>(horizon), {});
    const Vec imbalance = qp.A * x - qp.b;
    for (int t = 0; t < horizon; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        for (int g = 0; g < lay.G; ++g) out.dispatch_mw[ti][static_cast<std::size_t>(g)] = x[lay.p(t, g)];
        for (int c = 0; c < lay.S; ++c) {
            std::vector<double> ang(static_cast<std::size_t>(lay.N)), price(static_cast<std::size_t>(lay.N));
            for (int k = 0; k < lay.N; ++k) {
                ang[static_cast<std::size_t>(k)] = x[lay.theta(t, c, k)];
                const int row = balance_row[static_cast<std::size_t>((t * lay.S + c) * lay.N + k)];
                price[static_cast<std::size_t>(k)] = -pt.y[row];
                out.max_imbalance_mw = std::max(out.max_imbalance_mw, std::abs(imbalance[row]));
            }
            std::vector<double> flows(spec.lines.size(), 0.0);
            for (std::size_t r = 0; r < spec.lines.size(); ++r)
                if (static_cast<int>(r) != outage[static_cast<std::size_t>(c)])
                    flows[r] = base / spec.lines[r].reactance *
                               (ang[static_cast<std::size_t>(from[r])] - ang[static_cast<std::size_t>(to[r])]);
            out.angles[ti].push_back(std::move(ang));
            out.lmp[ti].push_back(std::move(price));
            out.flows_mw[ti].push_back(std::move(flows));
        }
    }
    log::debug("oracle: objective ", out.objective, ", kkt ", out.kkt_residual, ", iterations ", out.iterations);
    return out;
}

std::vector<double> dc_flows(std::span<const double> angles, int label, const ScenarioSet& scenarios,
                             const DtnNetwork& net) {
    if (angles.size() < static_cast<std::size_t>(net.net_count()))
        throw ValidationError("dc_flows: angle vector does not cover every net");
    std::vector<double> out;
    out.reserve(net.lines.size());
    const auto& b = scenarios.susceptance.at(static_cast<std::size_t>(label));
    for (std::size_t r = 0; r < net.lines.size(); ++r) {
        const auto& l = net.lines[r];
        out.push_back(b[r] * (angles[static_cast<std::size_t>(l.from_net)] - angles[static_cast<std::size_t>(l.to_net)]));
    }
    return out;
}

}  // namespace lascopf
