#include "lascopf/prox.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "lascopf/error.hpp"

namespace lascopf {

namespace {

constexpr int kMaxSlots = 8;
constexpr int kMaxRows = 4 * kMaxSlots + 4;

struct Row {
    int i = -1, j = -1;        // variable indices (j = -1 for single-variable rows)
    double gi = 0.0, gj = 0.0;
    double h = 0.0;
    int pair = 0;              // opposing rows share a pair id
};

struct Rows {
    std::array<Row, kMaxRows> r;
    int n = 0;
    void add(int i, double gi, int j, double gj, double h, int pair) { r[static_cast<std::size_t>(n++)] = {i, j, gi, gj, h, pair}; }
};

void build_rows(const GenLocalProblem& p, int k_count, Rows& rows) {
    int pair = 0;
    for (int k = 0; k < k_count; ++k) {
        if (!p.slots[static_cast<std::size_t>(k)].boxed) continue;
        rows.add(k, 1.0, -1, 0.0, p.p_max, pair);
        rows.add(k, -1.0, -1, 0.0, -p.p_min, pair);
        ++pair;
    }
    for (int k = 0; k + 1 < k_count; ++k) {
        rows.add(k + 1, 1.0, k, -1.0, p.ramp_up, pair);
        rows.add(k + 1, -1.0, k, 1.0, -p.ramp_down, pair);
        ++pair;
    }
    if (p.before) {
        rows.add(0, 1.0, -1, 0.0, *p.before + p.ramp_up, pair);
        rows.add(0, -1.0, -1, 0.0, -(*p.before + p.ramp_down), pair);
        ++pair;
    }
    if (p.after) {
        const int last = k_count - 1;
        rows.add(last, -1.0, -1, 0.0, p.ramp_up - *p.after, pair);
        rows.add(last, 1.0, -1, 0.0, *p.after - p.ramp_down, pair);
        ++pair;
    }
}

double row_value(const Row& row, const double* x) {
    double v = row.gi * x[row.i];
    if (row.j >= 0) v += row.gj * x[row.j];
    return v;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxSlots, kMaxSlots>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxSlots, 1>;

// Tries active set `act`; on success writes x and returns true.
bool try_active(const Rows& rows, const int* act, int s, int k_count, const double* q, const double* c, double tol,
                double* x) {
    if (s == 0) {
        for (int k = 0; k < k_count; ++k) x[k] = -c[k] / q[k];
    } else {
        SmallMat m(s, s);
        SmallVec rhs(s);
        for (int a = 0; a < s; ++a) {
            const Row& ra = rows.r[static_cast<std::size_t>(act[a])];
            double gqc = ra.gi * c[ra.i] / q[ra.i];
            if (ra.j >= 0) gqc += ra.gj * c[ra.j] / q[ra.j];
            rhs(a) = -ra.h - gqc;
            for (int b = 0; b < s; ++b) {
                const Row& rb = rows.r[static_cast<std::size_t>(act[b])];
                double v = 0.0;
                if (ra.i == rb.i) v += ra.gi * rb.gi / q[ra.i];
                if (rb.j >= 0 && ra.i == rb.j) v += ra.gi * rb.gj / q[ra.i];
                if (ra.j >= 0 && ra.j == rb.i) v += ra.gj * rb.gi / q[ra.j];
                if (ra.j >= 0 && rb.j >= 0 && ra.j == rb.j) v += ra.gj * rb.gj / q[ra.j];
                m(a, b) = v;
            }
        }
        Eigen::FullPivLU<SmallMat> lu(m);
        if (lu.rank() < s) return false;
        SmallVec mu = lu.solve(rhs);
        for (int a = 0; a < s; ++a)
            if (!(mu(a) >= -tol)) return false;
        for (int k = 0; k < k_count; ++k) x[k] = -c[k];
        for (int a = 0; a < s; ++a) {
            const Row& ra = rows.r[static_cast<std::size_t>(act[a])];
            x[ra.i] -= ra.gi * mu(a);
            if (ra.j >= 0) x[ra.j] -= ra.gj * mu(a);
        }
        for (int k = 0; k < k_count; ++k) x[k] /= q[k];
    }
    for (int r = 0; r < rows.n; ++r) {
        const Row& row = rows.r[static_cast<std::size_t>(r)];
        if (row_value(row, x) > row.h + tol * (1.0 + std::abs(row.h))) return false;
    }
    return true;
}

// Enumerates subsets of size s in lexicographic order, skipping opposing pairs.
bool enumerate(const Rows& rows, int s, int start, int depth, int* act, int k_count, const double* q, const double* c,
               double tol, double* x) {
    if (depth == s) return try_active(rows, act, s, k_count, q, c, tol, x);
    for (int r = start; r < rows.n; ++r) {
        bool clash = false;
        for (int a = 0; a < depth; ++a)
            if (rows.r[static_cast<std::size_t>(act[a])].pair == rows.r[static_cast<std::size_t>(r)].pair) clash = true;
        if (clash) continue;
        act[depth] = r;
        if (enumerate(rows, s, r + 1, depth + 1, act, k_count, q, c, tol, x)) return true;
    }
    return false;
}

}  // namespace

void GenLocalProblem::check_feasible() const {
    const std::string who = "generator " + std::to_string(id);
    if (p_min > p_max) throw InfeasibleError(who + ": box [" + fmt(p_min) + ", " + fmt(p_max) + "] is empty");
    if (ramp_down > ramp_up) throw InfeasibleError(who + ": ramp window is empty");
    if (slots.empty()) throw InfeasibleError(who + ": no dispatch slots");
    const double inf = INFINITY;
    auto box = [&](std::size_t k) {
        return slots[k].boxed ? std::pair{p_min, p_max} : std::pair{-inf, inf};
    };
    auto [lo, hi] = box(0);
    if (before) {
        const double wlo = *before + ramp_down, whi = *before + ramp_up;
        if (whi < lo - 1e-12 || wlo > hi + 1e-12)
            throw InfeasibleError(who + ": ramp window from preceding dispatch " + fmt(*before) + " [" + fmt(wlo) +
                                  ", " + fmt(whi) + "] misses box [" + fmt(lo) + ", " + fmt(hi) + "]");
        lo = std::max(lo, wlo);
        hi = std::min(hi, whi);
    }
    for (std::size_t k = 1; k < slots.size(); ++k) {
        auto [blo, bhi] = box(k);
        const double wlo = lo + ramp_down, whi = hi + ramp_up;
        if (whi < blo - 1e-12 || wlo > bhi + 1e-12)
            throw InfeasibleError(who + ": ramp between slots " + std::to_string(k - 1) + " and " + std::to_string(k) +
                                  " cannot meet box [" + fmt(blo) + ", " + fmt(bhi) + "]");
        lo = std::max(blo, wlo);
        hi = std::min(bhi, whi);
    }
    if (after) {
        const double wlo = *after - ramp_up, whi = *after - ramp_down;
        if (whi < lo - 1e-12 || wlo > hi + 1e-12)
            throw InfeasibleError(who + ": ramp window to following value " + fmt(*after) + " [" + fmt(wlo) + ", " +
                                  fmt(whi) + "] misses reachable range [" + fmt(lo) + ", " + fmt(hi) + "]");
    }
}

bool GenLocalProblem::feasible(std::span<const double> p, double tol) const {
    Rows rows;
    build_rows(*this, static_cast<int>(slots.size()), rows);
    for (int r = 0; r < rows.n; ++r)
        if (row_value(rows.r[static_cast<std::size_t>(r)], p.data()) > rows.r[static_cast<std::size_t>(r)].h + tol)
            return false;
    return true;
}

double GenLocalProblem::local_objective(std::span<const double> p) const {
    double f = 0.0;
    for (std::size_t k = 0; k < slots.size(); ++k) {
        const auto& s = slots[k];
        const double x = p[k];
        f += s.cost_weight * (cost_a * x * x + cost_b * x + cost_c);
        f += 0.5 * s.prox_weight * (x - s.prox_center) * (x - s.prox_center);
        f += s.linear * x;
    }
    return f;
}

void solve_generator_slots(const GenLocalProblem& prob, double rho, std::span<const double> target_sum,
                           std::span<const int> target_count, std::span<double> out) {
    const int k_count = static_cast<int>(prob.slots.size());
    if (k_count < 1 || k_count > kMaxSlots)
        throw InfeasibleError("generator " + std::to_string(prob.id) + ": unsupported slot count " +
                              std::to_string(k_count));
    std::array<double, kMaxSlots> q{}, c{};
    for (int k = 0; k < k_count; ++k) {
        const auto& s = prob.slots[static_cast<std::size_t>(k)];
        const double n = static_cast<double>(target_count[static_cast<std::size_t>(k)]);
        q[static_cast<std::size_t>(k)] = 2.0 * s.cost_weight * prob.cost_a + s.prox_weight + rho * n;
        c[static_cast<std::size_t>(k)] = s.cost_weight * prob.cost_b + s.linear - s.prox_weight * s.prox_center -
                                         rho * target_sum[static_cast<std::size_t>(k)];
        if (!(q[static_cast<std::size_t>(k)] > 0.0))
            throw InfeasibleError("generator " + std::to_string(prob.id) + ": slot " + std::to_string(k) +
                                  " has no curvature");
    }

    if (k_count == 1 && prob.slots[0].boxed && !prob.after) {
        double lo = prob.p_min, hi = prob.p_max;
        if (prob.before) {
            lo = std::max(lo, *prob.before + prob.ramp_down);
            hi = std::min(hi, *prob.before + prob.ramp_up);
        }
        if (lo > hi) {
            prob.check_feasible();
            hi = lo;  // empty only by rounding
        }
        out[0] = std::clamp(-c[0] / q[0], lo, hi);
        return;
    }

    Rows rows;
    build_rows(prob, k_count, rows);
    std::array<int, kMaxSlots> act{};
    std::array<double, kMaxSlots> x{};
    for (double tol : {1e-12, 1e-9, 1e-6}) {
        for (int s = 0; s <= std::min(k_count, rows.n); ++s) {
            if (enumerate(rows, s, 0, 0, act.data(), k_count, q.data(), c.data(), tol, x.data())) {
                for (int k = 0; k < k_count; ++k) out[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(k)];
                return;
            }
        }
    }
    prob.check_feasible();
    throw InfeasibleError("generator " + std::to_string(prob.id) + ": no KKT point found by active-set enumeration");
}

ProxOutput prox_generator(const GenLocalProblem& prob, const ProxInput& in) {
    const std::size_t k_count = prob.slots.size();
    if (prob.target_slots.size() != in.v_p.size())
        throw ValidationError("generator " + std::to_string(prob.id) + ": power target count does not match layout");
    std::vector<double> sum(k_count, 0.0);
    std::vector<int> count(k_count, 0);
    for (std::size_t i = 0; i < in.v_p.size(); ++i) {
        const auto k = static_cast<std::size_t>(prob.target_slots[i]);
        sum[k] += in.v_p[i];
        count[k] += 1;
    }
    ProxOutput out;
    out.slots.assign(k_count, 0.0);
    solve_generator_slots(prob, in.rho, sum, count, out.slots);
    for (int k : prob.target_slots) out.p.push_back(out.slots[static_cast<std::size_t>(k)]);
    out.theta = in.v_theta;
    return out;
}

LineTerminalPair project_line(double b, double limit, double p1, double p2, double theta1, double theta2) {
    if (b == 0.0) return {0.0, 0.0, theta1, theta2};
    const double s = theta1 + theta2;
    double d = (2.0 * b * (p2 - p1) + (theta1 - theta2)) / (4.0 * b * b + 1.0);
    const double dmax = limit / b;
    d = std::clamp(d, -dmax, dmax);
    const double flow = b * d;
    return {-flow, flow, 0.5 * (s + d), 0.5 * (s - d)};
}

ProxOutput prox_line(const LineLocalProblem& prob, const ProxInput& in) {
    const std::size_t layers = prob.susceptance.size();
    if (in.v_p.size() != 2 * layers || in.v_theta.size() != 2 * layers || prob.limit.size() != layers)
        throw ValidationError("line " + std::to_string(prob.id) + ": target count does not match layout");
    ProxOutput out;
    out.p.resize(2 * layers);
    out.theta.resize(2 * layers);
    for (std::size_t l = 0; l < layers; ++l) {
        auto r = project_line(prob.susceptance[l], prob.limit[l], in.v_p[2 * l], in.v_p[2 * l + 1],
                              in.v_theta[2 * l], in.v_theta[2 * l + 1]);
        out.p[2 * l] = r.p1;
        out.p[2 * l + 1] = r.p2;
        out.theta[2 * l] = r.theta1;
        out.theta[2 * l + 1] = r.theta2;
    }
    return out;
}

ProxOutput prox_load(double fixed_mw, double base_mva, const ProxInput& in) {
    ProxOutput out;
    out.p.assign(in.v_p.size(), -fixed_mw / base_mva);
    out.theta = in.v_theta;
    return out;
}

}  // namespace lascopf
