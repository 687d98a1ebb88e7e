#pragma once

// Damped-Newton finite-difference solver for the boundary-blow-up real
// Monge-Ampere problem det(D^2 phi) = kappa * exp(2 phi) on an open simplex,
// phi = +infinity on the boundary.
//
// The blow-up condition is realized by exhaustion: Dirichlet solves with an
// increasing constant boundary value M, stopped once the solution stops
// moving on an interior compact. The boundary constant is applied in the
// kappa-normalized gauge (M - log(kappa)/2), so solutions for different kappa
// are related by the exact constant-shift identity node by node.
//
// A second, independent route substitutes phi = psi - sum_j log x_j
// - log(1 - sum_j x_j) and solves for the bounded correction psi on a
// slightly shrunken simplex with inexpensive Neumann-type closure. The two
// routes are compared in the test suite.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "collapselab/errors.hpp"
#include "collapselab/grid.hpp"

namespace collapselab::ma {

enum class SolveMode { exhaustion, barrier, dirichlet };

// phi(x) = -log((sqrt(kappa)/pi) sin(pi x)) solves phi'' = kappa e^{2 phi} on
// (0,1) with blow-up endpoints: phi'' = pi^2 csc^2(pi x) and
// kappa e^{2 phi} = pi^2 / sin^2(pi x) agree identically. The test suite
// re-checks this substitution numerically before relying on it.
inline double closed_form_1d(double kappa, double x) {
    if (!(kappa > 0)) throw validation_error("kappa must be positive");
    if (!(x > 0.0 && x < 1.0)) throw domain_violation("x must lie in (0,1)");
    const double pi = 3.14159265358979323846;
    return -0.5 * std::log(kappa) + std::log(pi) - std::log(std::sin(pi * x));
}

// Hand-differentiated second derivative of the closed form: pi^2 csc^2(pi x).
inline double closed_form_1d_hessian(double kappa, double x) {
    if (!(kappa > 0)) throw validation_error("kappa must be positive");
    if (!(x > 0.0 && x < 1.0)) throw domain_violation("x must lie in (0,1)");
    const double pi = 3.14159265358979323846;
    double s = std::sin(pi * x);
    return pi * pi / (s * s);
}

struct MASolution {
    GridSpec grid;
    double kappa = 1.0;
    SolveMode mode = SolveMode::exhaustion;
    std::vector<double> values;      // phi at every site (interior + layer)
    std::vector<double> correction;  // barrier mode only: psi at every site
    std::vector<SymMat> hessians;    // per interior node, the solved operator
    double residual_sup = 0.0;       // over evaluable nodes (slack >= 3h)
    int newton_iters = 0;
    double boundary_constant = std::numeric_limits<double>::quiet_NaN();

    double value_at(int site) const { return values[site]; }
    const SymMat& hessian_at(int site) const { return hessians[site]; }
};

struct ResidualReport {
    std::vector<double> field;  // relative residual per interior node
    double sup = 0.0;
    double mean = 0.0;
    int sup_site = -1;
    std::vector<double> sup_location;
};

struct SolveOptions {
    double tol = 1e-6;
    int m_start = 4;
    int m_step = 2;
    int m_max = 60;               // hard cap on the boundary constant
    double compact_slack = 0.05;  // exhaustion stop measured on this compact
    // Barrier-mode shrink of the domain; 0 picks the default policy. In 1D
    // the wall model is exact, so the wall can sit at two spacings and the
    // solve converges at full second order. In higher dimensions the normal
    // derivative of the correction at a wall is only modeled, so the wall is
    // kept at a fixed, grid-representable offset (1/32): the model bias is
    // then resolution-independent and cancels in grid-refinement studies.
    double barrier_margin = 0.0;
    int max_newton = 80;
};

namespace detail {

struct SlaveTerm {
    int32_t site;
    double weight;
};

struct Problem {
    const GridSpec* grid = nullptr;
    double kappa = 1.0;
    bool barrier = false;
    // barrier mode: layer site values are slaved affinely to interior anchors
    std::vector<std::vector<SlaveTerm>> layer_terms;
    std::vector<double> layer_offset;

    int dim() const { return grid->dim(); }

    double rhs_weight(int site) const {
        if (!barrier) return 1.0;
        auto x = grid->coords(site);
        double w = 1.0, sum = 0.0;
        for (double xi : x) { w *= xi * xi; sum += xi; }
        double x0 = 1.0 - sum;
        return 1.0 / (w * x0 * x0);
    }

    SymMat hessian_add(int site) const {
        SymMat b{0, 0, 0, 0, 0, 0};
        if (!barrier) return b;
        auto x = grid->coords(site);
        double sum = 0.0;
        for (double xi : x) sum += xi;
        double far = 1.0 / ((1.0 - sum) * (1.0 - sum));
        for (int i = 0; i < dim(); ++i)
            for (int j = i; j < dim(); ++j)
                sym_set(b, i, j, (i == j ? 1.0 / (x[i] * x[i]) : 0.0) + far);
        return b;
    }

    void refresh_layer(std::vector<double>& v) const {
        if (!barrier) return;
        int n_int = grid->n_interior();
        for (int s = n_int; s < grid->n_sites(); ++s) {
            double val = layer_offset[s - n_int];
            for (const SlaveTerm& t : layer_terms[s - n_int]) val += t.weight * v[t.site];
            v[s] = val;
        }
    }
};

inline SymMat assemble_hessian(const Problem& pb, const std::vector<double>& v, int site) {
    const GridSpec& g = *pb.grid;
    const auto& dirs = g.directions();
    double inv_h2 = 1.0 / (g.h() * g.h());
    SymMat H = pb.hessian_add(site);
    std::array<double, 6> deltas{};
    for (std::size_t d = 0; d < dirs.size(); ++d) {
        double p = v[g.neighbor(site, static_cast<int>(d), true)];
        double m = v[g.neighbor(site, static_cast<int>(d), false)];
        deltas[d] = (p - 2.0 * v[site] + m) * inv_h2;
    }
    for (std::size_t d = 0; d < dirs.size(); ++d) {
        const Direction& dir = dirs[d];
        if (dir.axis_b < 0) {
            sym_set(H, dir.axis_a, dir.axis_a, sym_get(H, dir.axis_a, dir.axis_a) + deltas[d]);
        } else {
            // H_ij = (Delta_i + Delta_j - Delta_{i-j}) / 2, on top of any
            // analytic additive part already placed in H.
            double di = deltas[dir.axis_a], dj = deltas[dir.axis_b];
            double mixed = 0.5 * (di + dj - deltas[d]);
            sym_set(H, dir.axis_a, dir.axis_b,
                    sym_get(H, dir.axis_a, dir.axis_b) + mixed);
        }
    }
    return H;
}

struct ResidualScan {
    double sup_all = 0.0;  // over every interior node
    double l2 = 0.0;       // rms of the log-residual, the line-search merit
    bool spd = true;
    int first_bad_site = -1;
    std::vector<double> rel;  // per interior node
};

// sup_all is the log-ratio merit max |log(det/rhs)|, which equals the
// relative residual to first order once small but stays moderate instead of
// exponentially large far from the solution, so sup-norm damping makes
// steady progress.
inline ResidualScan scan_residual(const Problem& pb, const std::vector<double>& v) {
    const GridSpec& g = *pb.grid;
    ResidualScan out;
    out.rel.resize(g.n_interior());
    for (int s = 0; s < g.n_interior(); ++s) {
        SymMat H = assemble_hessian(pb, v, s);
        if (!sym_spd(H, g.dim())) {
            out.spd = false;
            if (out.first_bad_site < 0) out.first_bad_site = s;
        }
        double det = sym_det(H, g.dim());
        double rhs = pb.kappa * std::exp(2.0 * v[s]) * pb.rhs_weight(s);
        double r = det > 0 ? std::abs(std::log(det / rhs))
                           : std::numeric_limits<double>::infinity();
        out.rel[s] = r;
        out.sup_all = std::max(out.sup_all, r);
        out.l2 += r * r;
    }
    out.l2 = std::sqrt(out.l2 / std::max(1, g.n_interior()));
    return out;
}

inline std::string describe_site(const GridSpec& g, int site) {
    std::ostringstream os;
    os << "node (";
    auto x = g.coords(site);
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
    os << ")";
    return os.str();
}

// One damped Newton run on a fixed problem. `v` holds values at all sites
// (layer refreshed internally in barrier mode). Returns iteration count.
inline int newton_solve(const Problem& pb, std::vector<double>& v, double tol, int max_iter) {
    const GridSpec& g = *pb.grid;
    const auto& dirs = g.directions();
    const int n = g.n_interior();
    const double inv_h2 = 1.0 / (g.h() * g.h());
    const double hard_target = 5e-13;

    pb.refresh_layer(v);
    ResidualScan scan = scan_residual(pb, v);
    if (!scan.spd)
        throw loss_of_convexity("initial iterate has a non-SPD Hessian at " +
                                describe_site(g, scan.first_bad_site));

    std::ostringstream trace;
    int iters = 0;
    int stall = 0;
    Eigen::VectorXd rhs_vec(n);
    std::vector<Eigen::Triplet<double>> trips;
    while (scan.sup_all > hard_target && iters < max_iter) {
        trips.clear();
        for (int s = 0; s < n; ++s) {
            SymMat H = assemble_hessian(pb, v, s);
            SymMat cof = sym_cofactor(H, g.dim());
            double det = sym_det(H, g.dim());
            double rhs = pb.kappa * std::exp(2.0 * v[s]) * pb.rhs_weight(s);
            // Newton on the log form log(det H) - log(rhs) = 0: the -2
            // diagonal from the exponential side never degenerates, so the
            // iteration survives iterates with det/rhs far from 1.
            rhs_vec(s) = -std::log(det / rhs);
            double diag = -2.0;
            for (std::size_t d = 0; d < dirs.size(); ++d) {
                const Direction& dir = dirs[d];
                double c;
                if (dir.axis_b < 0) {
                    c = sym_get(cof, dir.axis_a, dir.axis_a);
                    for (int j = 0; j < g.dim(); ++j)
                        if (j != dir.axis_a) c += sym_get(cof, dir.axis_a, j);
                } else {
                    c = -sym_get(cof, dir.axis_a, dir.axis_b);
                }
                c *= inv_h2 / det;
                diag += -2.0 * c;
                for (bool plus : {true, false}) {
                    int nb = g.neighbor(s, static_cast<int>(d), plus);
                    if (g.is_interior(nb)) {
                        trips.emplace_back(s, nb, c);
                    } else if (pb.barrier) {
                        for (const SlaveTerm& t : pb.layer_terms[nb - n])
                            trips.emplace_back(s, t.site, c * t.weight);
                    }
                    // exhaustion: layer values are fixed, no column
                }
            }
            trips.emplace_back(s, s, diag);
        }
        Eigen::SparseMatrix<double> J(n, n);
        J.setFromTriplets(trips.begin(), trips.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(J);
        if (lu.info() != Eigen::Success)
            throw newton_diverged("Newton linearization is singular at iteration " +
                                  std::to_string(iters));
        Eigen::VectorXd step = lu.solve(rhs_vec);

        double alpha = 1.0;
        bool accepted = false;
        bool spd_blocked = false;
        std::vector<double> trial = v;
        while (alpha >= 1e-4) {
            for (int s = 0; s < n; ++s) trial[s] = v[s] + alpha * step(s);
            pb.refresh_layer(trial);
            ResidualScan t = scan_residual(pb, trial);
            if (t.spd && t.l2 <= scan.l2 * (1.0 - 1e-4 * alpha)) {
                if (t.sup_all > 0.5 * scan.sup_all) ++stall; else stall = 0;
                v.swap(trial);
                scan = std::move(t);
                accepted = true;
                break;
            }
            if (!t.spd) spd_blocked = true;
            alpha *= 0.5;
        }
        ++iters;
        trace << "iter " << iters << " res " << scan.sup_all << " alpha " << alpha << "\n";
        if (!accepted) {
            if (scan.sup_all <= tol) break;
            if (spd_blocked)
                throw loss_of_convexity("damping cannot restore convexity; trace:\n" +
                                        trace.str());
            throw newton_diverged("line search failed; trace:\n" + trace.str());
        }
        if (stall >= 3 && scan.sup_all <= tol) break;
    }
    if (scan.sup_all > tol)
        throw newton_diverged("residual " + std::to_string(scan.sup_all) +
                              " above tolerance after " + std::to_string(iters) +
                              " iterations; trace:\n" + trace.str());
    return iters;
}

inline void finalize(MASolution& sol, const Problem& pb);

}  // namespace detail

// Fresh-stencil residual of a solution, |det(D^2 phi) - kappa e^{2phi}| /
// (kappa e^{2phi}) per interior node; summary statistics over the evaluable
// set (boundary slack >= 3h).
inline ResidualReport ma_residual(const MASolution& sol) {
    detail::Problem pb;
    pb.grid = &sol.grid;
    pb.kappa = sol.kappa;
    pb.barrier = sol.mode == SolveMode::barrier;
    const std::vector<double>& field_values =
        pb.barrier ? sol.correction : sol.values;
    // slaving info is not needed here: all sites already carry values

    const GridSpec& g = sol.grid;
    ResidualReport rep;
    rep.field.resize(g.n_interior());
    double slack_min = 3.0 * g.h() - 1e-12;
    double acc = 0.0;
    int count = 0;
    for (int s = 0; s < g.n_interior(); ++s) {
        SymMat H = detail::assemble_hessian(pb, field_values, s);
        // barrier mode: det(D^2 psi + B'') = kappa e^{2 psi} / W = kappa e^{2 phi}
        double rhs = pb.barrier
                         ? sol.kappa * std::exp(2.0 * sol.correction[s]) * pb.rhs_weight(s)
                         : sol.kappa * std::exp(2.0 * sol.values[s]);
        double r = std::abs(sym_det(H, g.dim()) - rhs) / rhs;
        rep.field[s] = r;
        if (g.boundary_slack(s) >= slack_min) {
            acc += r;
            ++count;
            if (r > rep.sup) {
                rep.sup = r;
                rep.sup_site = s;
            }
        }
    }
    rep.mean = count ? acc / count : 0.0;
    if (rep.sup_site >= 0) rep.sup_location = g.coords(rep.sup_site);
    return rep;
}

namespace detail {

inline void finalize(MASolution& sol, const Problem& pb) {
    const GridSpec& g = *pb.grid;
    sol.hessians.resize(g.n_interior());
    const std::vector<double>& fv = pb.barrier ? sol.correction : sol.values;
    for (int s = 0; s < g.n_interior(); ++s) {
        sol.hessians[s] = assemble_hessian(pb, fv, s);
        if (!sym_spd(sol.hessians[s], g.dim()))
            throw loss_of_convexity("final Hessian field is not SPD");
    }
    ResidualReport rep = ma_residual(sol);
    sol.residual_sup = rep.sup;
}

}  // namespace detail

// Single Dirichlet solve with constant boundary value. Exposed so the
// monotone-exhaustion property can be probed directly.
inline MASolution dirichlet_solve(const toric::SimplexDomain& domain, double kappa,
                                  int resolution, double tol, double boundary_value,
                                  const MASolution* warm_start = nullptr,
                                  int max_newton = 80) {
    if (!(kappa > 0)) throw validation_error("kappa must be positive");
    if (!(tol > 0)) throw validation_error("tol must be positive");
    MASolution sol;
    sol.grid = GridSpec(domain, resolution);
    sol.kappa = kappa;
    sol.mode = SolveMode::dirichlet;
    sol.boundary_constant = boundary_value;
    const GridSpec& g = sol.grid;

    detail::Problem pb;
    pb.grid = &g;
    pb.kappa = kappa;
    pb.barrier = false;

    sol.values.assign(g.n_sites(), boundary_value);
    // matched enlargement for the cold near-wall profile
    double delta0 = std::exp(-(boundary_value + 0.5 * std::log(kappa)) / g.dim());
    delta0 = std::min(0.5, std::max(1e-14, delta0));
    auto cold_value = [&](int s) {
        auto x = g.coords(s);
        double m = g.domain().margin;
        double sum = 0.0, val = -0.5 * std::log(kappa);
        for (double xi : x) {
            val -= std::log(xi - m + delta0);
            sum += xi;
        }
        val -= std::log((1.0 - m) + delta0 - sum);
        return val;
    };
    // Cold start: convex log barrier of a slightly enlarged simplex, the
    // enlargement chosen so the worst (corner) stack of blow-up terms matches
    // the boundary constant; a constant downward shift keeps wall-adjacent
    // values below the boundary data (the resulting boundary jump only
    // inflates the diagonal of the assembled Hessian).
    auto cold_init = [&]() {
        for (int s = 0; s < g.n_interior(); ++s) sol.values[s] = cold_value(s);
        double worst = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < g.n_interior(); ++s) {
            bool near_wall = false;
            for (std::size_t d = 0; d < g.directions().size() && !near_wall; ++d)
                for (bool plus : {true, false})
                    if (!g.is_interior(g.neighbor(s, static_cast<int>(d), plus)))
                        near_wall = true;
            if (near_wall) worst = std::max(worst, sol.values[s]);
        }
        double shift = std::max(0.0, worst - (boundary_value - 0.5));
        if (shift > 0.0)
            for (int s = 0; s < g.n_interior(); ++s) sol.values[s] -= shift;
    };

    if (warm_start && warm_start->grid.resolution() == resolution &&
        warm_start->grid.dim() == g.dim()) {
        for (int s = 0; s < g.n_interior(); ++s) {
            double w = warm_start->values[s];
            sol.values[s] = std::isnan(w) ? std::min(cold_value(s), boundary_value - 0.25)
                                          : w;
        }
        // Diffuse away any seams the warm start may carry (prolongation and
        // near-wall refill meet here): Jacobi-average the neighborhoods of
        // non-SPD nodes until the whole field is convex again.
        bool repaired = false;
        for (int sweep = 0; sweep < 40 && !repaired; ++sweep) {
            std::vector<int> mark;
            for (int s = 0; s < g.n_interior(); ++s) {
                if (sym_spd(detail::assemble_hessian(pb, sol.values, s), g.dim()))
                    continue;
                mark.push_back(s);
                for (std::size_t d = 0; d < g.directions().size(); ++d)
                    for (bool plus : {true, false}) {
                        int nb = g.neighbor(s, static_cast<int>(d), plus);
                        if (g.is_interior(nb)) mark.push_back(nb);
                    }
            }
            if (mark.empty()) {
                repaired = true;
                break;
            }
            std::sort(mark.begin(), mark.end());
            mark.erase(std::unique(mark.begin(), mark.end()), mark.end());
            std::vector<double> repl(mark.size());
            for (std::size_t i = 0; i < mark.size(); ++i) {
                double acc = 0.0;
                int cnt = 0;
                for (std::size_t d = 0; d < g.directions().size(); ++d)
                    for (bool plus : {true, false}) {
                        acc += sol.values[g.neighbor(mark[i], static_cast<int>(d), plus)];
                        ++cnt;
                    }
                repl[i] = acc / cnt;
            }
            for (std::size_t i = 0; i < mark.size(); ++i) sol.values[mark[i]] = repl[i];
        }
        if (!repaired) {
            bool all_ok = true;
            for (int s = 0; s < g.n_interior() && all_ok; ++s)
                all_ok = sym_spd(detail::assemble_hessian(pb, sol.values, s), g.dim());
            if (!all_ok) cold_init();
        }
    } else {
        cold_init();
    }
    sol.newton_iters = detail::newton_solve(pb, sol.values, tol, max_newton);
    detail::finalize(sol, pb);
    return sol;
}

namespace detail {

// Dyadic prolongation of a solution onto the doubled grid, used as a warm
// start. Odd fine nodes average their coarse lattice neighbors; the
// anti-diagonal pair is used for the doubly-odd case so the interpolation
// respects the triangular lattice.
inline MASolution prolong_to(const MASolution& coarse, int fine_res) {
    MASolution fine;
    fine.grid = GridSpec(coarse.grid.domain(), fine_res);
    fine.kappa = coarse.kappa;
    fine.mode = coarse.mode;
    const GridSpec& gf = fine.grid;
    const GridSpec& gc = coarse.grid;
    fine.values.assign(gf.n_sites(), coarse.boundary_constant);
    // Fine nodes whose interpolation stencil touches the coarse boundary
    // layer are marked NaN; the warm-start consumer replaces them with its
    // own matched near-wall profile (averaging in layer constants would
    // plant local maxima next to the walls).
    bool tainted = false;
    auto cval = [&](int a, int b, int c) {
        MultiIdx mi{a, b, c};
        int s = gc.site_at(mi);
        if (!gc.is_interior(s)) {
            tainted = true;
            return coarse.boundary_constant;
        }
        return coarse.values[s];
    };
    for (int s = 0; s < gf.n_interior(); ++s) {
        MultiIdx mi = gf.multi_index(s);
        int a = mi[0] >> 1, b = mi[1] >> 1, c = mi[2] >> 1;
        bool oa = mi[0] & 1, ob = mi[1] & 1, oc = mi[2] & 1;
        tainted = false;
        double v;
        if (!oa && !ob && !oc) v = cval(a, b, c);
        else if (oa && !ob && !oc) v = 0.5 * (cval(a, b, c) + cval(a + 1, b, c));
        else if (!oa && ob && !oc) v = 0.5 * (cval(a, b, c) + cval(a, b + 1, c));
        else if (!oa && !ob && oc) v = 0.5 * (cval(a, b, c) + cval(a, b, c + 1));
        else if (oa && ob && !oc) v = 0.5 * (cval(a + 1, b, c) + cval(a, b + 1, c));
        else if (oa && !ob && oc) v = 0.5 * (cval(a + 1, b, c) + cval(a, b, c + 1));
        else if (!oa && ob && oc) v = 0.5 * (cval(a, b + 1, c) + cval(a, b, c + 1));
        else
            v = (cval(a + 1, b, c) + cval(a, b + 1, c) + cval(a, b, c + 1)) / 3.0;
        fine.values[s] = tainted ? std::numeric_limits<double>::quiet_NaN() : v;
    }
    return fine;
}

// The Dirichlet-M solutions approach the blow-up solution from below while
// e^{-M} dominates, but on a fixed grid they never converge: once M exceeds
// the level the grid can resolve, the interior keeps creeping upward at a
// rate ~ h per unit of M (the layer equation at distance h is consistent
// with the blow-up profile only for M near -log h). The schedule therefore
// runs up to the grid-matched level round(-log h) + 2 and stops there, or
// earlier if the interior compact has already stopped moving to tol/10.
// Fine grids are reached by nested continuation: the solution is first
// computed at half resolution and prolonged as the warm start.
inline MASolution solve_exhaustion(const toric::SimplexDomain& domain, double kappa,
                                   int resolution, const SolveOptions& opt) {
    int m_hat = static_cast<int>(std::lround(std::log(static_cast<double>(resolution)))) + 2;
    m_hat = std::min(std::max(m_hat, opt.m_start), opt.m_max);
    MASolution prev;
    bool have_prev = false;
    int total_iters = 0;
    int m0 = opt.m_start;
    if (resolution > 64 && resolution % 2 == 0) {
        MASolution coarse = solve_exhaustion(domain, kappa, resolution / 2, opt);
        total_iters += coarse.newton_iters;
        prev = prolong_to(coarse, resolution);
        have_prev = true;
        // hand over at the coarse grid's own matched level so the boundary
        // constant is continuous across the prolongation
        int m_hat_coarse =
            static_cast<int>(std::lround(std::log(resolution / 2.0))) + 2;
        m0 = std::min(std::max(opt.m_start, m_hat_coarse), m_hat);
    }
    for (int m = m0;; m = std::min(m + opt.m_step, m_hat)) {
        double b = m - 0.5 * std::log(kappa);
        MASolution cur = dirichlet_solve(domain, kappa, resolution, opt.tol, b,
                                         have_prev ? &prev : nullptr, opt.max_newton);
        total_iters += cur.newton_iters;
        bool saturated = false;
        if (have_prev && prev.grid.resolution() == resolution) {
            double change = 0.0;
            const GridSpec& g = cur.grid;
            bool compact_seen = false;
            for (int s = 0; s < g.n_interior(); ++s) {
                if (g.boundary_slack(s) < opt.compact_slack) continue;
                compact_seen = true;
                change = std::max(change, std::abs(cur.values[s] - prev.values[s]));
            }
            if (!compact_seen)
                for (int s = 0; s < g.n_interior(); ++s)
                    change = std::max(change, std::abs(cur.values[s] - prev.values[s]));
            saturated = change < opt.tol / 10.0;
        }
        if (saturated || m >= m_hat) {
            cur.mode = SolveMode::exhaustion;
            cur.newton_iters = total_iters;
            return cur;
        }
        prev = std::move(cur);
        have_prev = true;
    }
}

inline MASolution solve_barrier(const toric::SimplexDomain& domain, double kappa,
                                int resolution, const SolveOptions& opt) {
    // Snap the shrink margin onto the grid so wall nodes sit exactly on the
    // shrunken boundary planes.
    double margin_req = opt.barrier_margin;
    if (margin_req <= 0.0)
        margin_req = domain.dim == 1 ? 2.0 / resolution : 1.0 / 32.0;
    int m_wall = static_cast<int>(std::lround(margin_req * resolution));
    if (m_wall < 2) m_wall = 2;
    toric::SimplexDomain shrunk = domain;
    shrunk.margin = static_cast<double>(m_wall) / resolution;

    MASolution sol;
    sol.grid = GridSpec(shrunk, resolution);
    sol.kappa = kappa;
    sol.mode = SolveMode::barrier;
    const GridSpec& g = sol.grid;
    const int n = g.n_interior();

    detail::Problem pb;
    pb.grid = &g;
    pb.kappa = kappa;
    pb.barrier = true;
    pb.layer_terms.resize(g.n_sites() - n);
    pb.layer_offset.resize(g.n_sites() - n);

    // Neumann-type closure for the bounded correction. Near a wall the
    // correction's gradient approaches the summed gradient of the other
    // walls' log terms (the blowing term of the wall itself cancels against
    // the barrier), so each wall node is slaved to interior nodes through a
    // one-sided second-order extrapolation that uses that model gradient.
    // Facet nodes extrapolate along the inward lattice normal(s); corner
    // nodes fall back to first order from the nearest interior nodes.
    for (int s = n; s < g.n_sites(); ++s) {
        auto xw = g.coords(s);
        const MultiIdx& wi = g.multi_index(s);
        double sum = 0.0;
        for (double xi : xw) sum += xi;
        double x0 = 1.0 - sum;
        bool on_diag = std::abs(x0 - shrunk.margin) < 0.5 * g.h();
        int n_side = 0;
        std::array<bool, 3> on_side{false, false, false};
        for (int k = 0; k < g.dim(); ++k) {
            on_side[k] = std::abs(xw[k] - shrunk.margin) < 0.5 * g.h();
            if (on_side[k]) ++n_side;
        }
        // Model gradient of the bounded correction at the wall node. On a
        // facet, the correction's trace is governed by the one-lower
        // dimensional blow-up profile whose log-derivative is
        // xi'(t) = 1/t - 1/(1-t) - pi cot(pi t); tangentially that is the
        // whole story, while the normal component is modeled by the distant
        // walls' log terms. In 1D the model is exact.
        const double pi = 3.14159265358979323846;
        auto xi_prime = [pi](double t) {
            return 1.0 / t - 1.0 / (1.0 - t) - pi / std::tan(pi * t);
        };
        std::vector<double> grad(g.dim(), 0.0);
        int walls_on = n_side + (on_diag ? 1 : 0);
        if (g.dim() == 1) {
            grad[0] = xi_prime(xw[0]);
        } else if (walls_on == 1 && n_side == 1) {
            for (int k = 0; k < g.dim(); ++k)
                grad[k] = on_side[k] ? -1.0 / x0 : xi_prime(xw[k]);
        } else if (walls_on == 1 && on_diag) {
            double mean = 0.0;
            for (int k = 0; k < g.dim(); ++k) mean += xi_prime(xw[k]);
            mean /= g.dim();
            for (int k = 0; k < g.dim(); ++k) grad[k] = xi_prime(xw[k]) - mean;
        } else {
            // corner: every remaining wall is at a moderate distance
            for (int k = 0; k < g.dim(); ++k)
                if (!on_side[k]) grad[k] += 1.0 / xw[k];
            if (!on_diag)
                for (int k = 0; k < g.dim(); ++k) grad[k] += -1.0 / x0;
        }

        // candidate inward extrapolation steps
        std::vector<MultiIdx> steps;
        if (n_side + (on_diag ? 1 : 0) == 1) {
            if (on_diag) {
                for (int k = 0; k < g.dim(); ++k) {
                    MultiIdx d{0, 0, 0};
                    d[k] = -1;
                    steps.push_back(d);
                }
            } else {
                for (int k = 0; k < g.dim(); ++k)
                    if (on_side[k]) {
                        MultiIdx d{0, 0, 0};
                        d[k] = 1;
                        steps.push_back(d);
                    }
            }
        }
        std::vector<detail::SlaveTerm> terms;
        double offset = 0.0;
        int used = 0;
        for (const MultiIdx& d : steps) {
            MultiIdx p1 = wi, p2 = wi;
            for (int k = 0; k < g.dim(); ++k) {
                p1[k] += d[k];
                p2[k] += 2 * d[k];
            }
            int s1 = g.site_at(p1), s2 = g.site_at(p2);
            if (!g.is_interior(s1) || !g.is_interior(s2)) continue;
            double dg = 0.0;
            for (int k = 0; k < g.dim(); ++k) dg += d[k] * grad[k];
            // psi(W) = (4 psi(W+d) - psi(W+2d) - 2h d.grad) / 3
            terms.push_back({static_cast<int32_t>(s1), 4.0 / 3.0});
            terms.push_back({static_cast<int32_t>(s2), -1.0 / 3.0});
            offset += -2.0 * g.h() * dg / 3.0;
            ++used;
        }
        if (used == 0) {
            // Wall nodes on several walls (corners) or with no clean inward
            // stencil take the facet-limit trace directly: the correction is
            // continuous up to the closed boundary, and both adjacent facets
            // give the same value there.
            double t = -1.0;
            for (int k = 0; k < g.dim(); ++k)
                if (!on_side[k]) t = std::max(t, xw[k]);
            if (t < 0.0) t = x0;  // every coordinate pinned: use the far slack
            t = std::min(std::max(t, 1e-12), 1.0 - 1e-12);
            auto xi_of = [pi](double u) {
                return std::log(pi * u * (1.0 - u) / std::sin(pi * u));
            };
            offset = -0.5 * std::log(kappa) + xi_of(t);
        } else {
            double w = 1.0 / used;
            for (auto& t : terms) t.weight *= w;
            offset *= w;
        }
        pb.layer_terms[s - n] = std::move(terms);
        pb.layer_offset[s - n] = offset;
    }

    // Initial correction: matches the facet traces (exact in 1D) and keeps
    // the assembled Hessian SPD from the first iterate on.
    const double pi = 3.14159265358979323846;
    auto xi = [pi](double t) { return std::log(pi * t * (1.0 - t) / std::sin(pi * t)); };
    std::vector<double> psi(g.n_sites(), 0.0);
    for (int s = 0; s < n; ++s) {
        auto x = g.coords(s);
        double sum = 0.0, val = -0.5 * std::log(kappa);
        for (double xv : x) {
            val += 0.5 * xi(xv);
            sum += xv;
        }
        val += 0.5 * xi(1.0 - sum);
        psi[s] = val;
    }
    sol.newton_iters = detail::newton_solve(pb, psi, opt.tol, opt.max_newton);
    sol.correction = psi;
    sol.values.resize(g.n_sites());
    for (int s = 0; s < g.n_sites(); ++s) {
        auto x = g.coords(s);
        double sum = 0.0, barrier = 0.0;
        for (double xi : x) {
            barrier -= std::log(xi);
            sum += xi;
        }
        barrier -= std::log(1.0 - sum);
        sol.values[s] = psi[s] + barrier;
    }
    detail::finalize(sol, pb);
    return sol;
}

}  // namespace detail

inline MASolution solve_real_ma(const toric::SimplexDomain& domain, double kappa,
                                int resolution, double tol,
                                SolveMode mode = SolveMode::exhaustion,
                                SolveOptions opt = SolveOptions{}) {
    if (domain.dim < 1 || domain.dim > 3)
        throw validation_error("solver supports dimensions 1..3");
    if (!(kappa > 0)) throw validation_error("kappa must be positive");
    if (!(tol > 0)) throw validation_error("tol must be positive");
    opt.tol = tol;
    switch (mode) {
        case SolveMode::exhaustion:
            return detail::solve_exhaustion(domain, kappa, resolution, opt);
        case SolveMode::barrier:
            return detail::solve_barrier(domain, kappa, resolution, opt);
        case SolveMode::dirichlet:
            throw validation_error("use dirichlet_solve for fixed boundary values");
    }
    throw validation_error("unknown solve mode");
}

// Central-difference Hessian field (the stored, solved operator); every
// matrix is revalidated as SPD.
inline std::vector<SymMat> hessian_field(const MASolution& sol) {
    for (std::size_t s = 0; s < sol.hessians.size(); ++s)
        if (!sym_spd(sol.hessians[s], sol.grid.dim()))
            throw loss_of_convexity("hessian field contains a non-SPD matrix");
    return sol.hessians;
}

// Builds an MASolution by sampling a given potential (and optionally its
// exact Hessian) on the grid; used to feed closed-form oracles through the
// same machinery as solver output.
inline MASolution from_function(
    const toric::SimplexDomain& domain, double kappa, int resolution,
    const std::function<double(const std::vector<double>&)>& f,
    const std::function<SymMat(const std::vector<double>&)>& hessian = nullptr) {
    MASolution sol;
    sol.grid = GridSpec(domain, resolution);
    sol.kappa = kappa;
    sol.mode = SolveMode::exhaustion;
    const GridSpec& g = sol.grid;
    sol.values.resize(g.n_sites());
    double m = domain.margin;
    for (int s = 0; s < g.n_sites(); ++s) {
        auto x = g.coords(s);
        // pull layer points slightly inside so blow-up potentials stay finite
        double slack = g.boundary_slack(s);
        double want = 0.45 * g.h();
        if (slack < want) {
            // slack is affine along the segment toward the barycenter
            double center = 1.0 / (g.dim() + 1);
            double slack_c = (1.0 - (g.dim() + 1) * m) / (g.dim() + 1);
            double alpha = (want - slack) / (slack_c - slack);
            for (int d = 0; d < g.dim(); ++d)
                x[d] = x[d] + alpha * (center - x[d]);
        }
        sol.values[s] = f(x);
    }
    detail::Problem pb;
    pb.grid = &g;
    pb.kappa = kappa;
    pb.barrier = false;
    sol.hessians.resize(g.n_interior());
    for (int s = 0; s < g.n_interior(); ++s)
        sol.hessians[s] = hessian ? hessian(g.coords(s))
                                  : detail::assemble_hessian(pb, sol.values, s);
    ResidualReport rep = ma_residual(sol);
    sol.residual_sup = rep.sup;
    sol.newton_iters = 0;
    return sol;
}

// Sup difference between two solutions on the set of common grid nodes with
// full-simplex boundary slack at least `slack`.
inline double sup_difference_on_compact(const MASolution& a, const MASolution& b,
                                        double slack) {
    if (a.grid.resolution() != b.grid.resolution() || a.grid.dim() != b.grid.dim())
        throw dimension_mismatch("solutions live on incompatible grids");
    double sup = 0.0;
    const GridSpec& ga = a.grid;
    const GridSpec& gb = b.grid;
    for (int s = 0; s < ga.n_interior(); ++s) {
        auto xi = ga.multi_index(s);
        double sum = 0.0, sl = 1.0;
        for (int d = 0; d < ga.dim(); ++d) {
            double x = xi[d] * ga.h();
            sl = std::min(sl, x);
            sum += x;
        }
        sl = std::min(sl, 1.0 - sum);
        if (sl < slack) continue;
        int sb = gb.site_at(xi);
        if (!gb.is_interior(sb)) continue;
        sup = std::max(sup, std::abs(a.values[s] - b.values[sb]));
    }
    return sup;
}

}  // namespace collapselab::ma
