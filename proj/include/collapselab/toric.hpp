#pragma once

// Exact integer/rational lattice-cone combinatorics: dual cones, the
// Gorenstein covector, dual-cell polytopes, the logarithm map and the torus
// fibration base domain. Everything here is exact arithmetic; floating point
// only enters through log_map / fibration_base, which are plain real maps.

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "collapselab/errors.hpp"

namespace collapselab::toric {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;
using IntVec = std::vector<Int>;
using RatVec = std::vector<Rat>;
using IntMat = std::vector<IntVec>;  // row-major
using RatMat = std::vector<RatVec>;

struct Lattice {
    int rank = 1;
};

namespace detail {

inline Int vec_gcd(const IntVec& v) {
    Int g = 0;
    for (const Int& x : v) g = boost::multiprecision::gcd(g, x);
    return g;
}

inline Rat dot(const RatVec& a, const RatVec& b) {
    Rat s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline Rat dot(const RatVec& a, const IntVec& b) {
    Rat s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * Rat(b[i]);
    return s;
}

// Gaussian elimination rank over the rationals.
inline int rat_rank(RatMat m) {
    int rows = static_cast<int>(m.size());
    int cols = rows ? static_cast<int>(m[0].size()) : 0;
    int rank = 0;
    for (int c = 0; c < cols && rank < rows; ++c) {
        int piv = -1;
        for (int r = rank; r < rows; ++r)
            if (m[r][c] != 0) { piv = r; break; }
        if (piv < 0) continue;
        std::swap(m[rank], m[piv]);
        for (int r = 0; r < rows; ++r) {
            if (r == rank || m[r][c] == 0) continue;
            Rat f = m[r][c] / m[rank][c];
            for (int cc = c; cc < cols; ++cc) m[r][cc] -= f * m[rank][cc];
        }
        ++rank;
    }
    return rank;
}

// Solves the square system a * x = b exactly. Throws on singular input.
inline RatVec solve_square(RatMat a, RatVec b) {
    int n = static_cast<int>(a.size());
    for (int c = 0; c < n; ++c) {
        int piv = -1;
        for (int r = c; r < n; ++r)
            if (a[r][c] != 0) { piv = r; break; }
        if (piv < 0) throw validation_error("singular linear system");
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (int r = 0; r < n; ++r) {
            if (r == c || a[r][c] == 0) continue;
            Rat f = a[r][c] / a[c][c];
            for (int cc = c; cc < n; ++cc) a[r][cc] -= f * a[c][cc];
            b[r] -= f * b[c];
        }
    }
    RatVec x(n);
    for (int i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
    return x;
}

inline RatMat invert_square(const RatMat& a) {
    int n = static_cast<int>(a.size());
    RatMat inv(n, RatVec(n, 0));
    for (int j = 0; j < n; ++j) {
        RatVec e(n, 0);
        e[j] = 1;
        RatVec col = solve_square(a, e);
        for (int i = 0; i < n; ++i) inv[i][j] = col[i];
    }
    return inv;
}

// Smith normal form of an integer matrix: u * m_in * w = d with u, w
// unimodular and d diagonal (divisibility chain not needed here, only the
// diagonal shape and the transforms).
struct SmithResult {
    IntMat u;  // rows x rows
    IntMat d;  // rows x cols, diagonal
    IntMat w;  // cols x cols
};

inline SmithResult smith_normal_form(IntMat m) {
    int rows = static_cast<int>(m.size());
    int cols = rows ? static_cast<int>(m[0].size()) : 0;
    IntMat u(rows, IntVec(rows, 0)), w(cols, IntVec(cols, 0));
    for (int i = 0; i < rows; ++i) u[i][i] = 1;
    for (int i = 0; i < cols; ++i) w[i][i] = 1;

    auto swap_rows = [&](int a, int b) { std::swap(m[a], m[b]); std::swap(u[a], u[b]); };
    auto swap_cols = [&](int a, int b) {
        for (int r = 0; r < rows; ++r) std::swap(m[r][a], m[r][b]);
        for (int r = 0; r < cols; ++r) std::swap(w[r][a], w[r][b]);
    };
    auto add_row = [&](int dst, int src, const Int& f) {
        for (int c = 0; c < cols; ++c) m[dst][c] += f * m[src][c];
        for (int c = 0; c < rows; ++c) u[dst][c] += f * u[src][c];
    };
    auto add_col = [&](int dst, int src, const Int& f) {
        for (int r = 0; r < rows; ++r) m[r][dst] += f * m[r][src];
        for (int r = 0; r < cols; ++r) w[r][dst] += f * w[r][src];
    };
    auto negate_row = [&](int r) {
        for (int c = 0; c < cols; ++c) m[r][c] = -m[r][c];
        for (int c = 0; c < rows; ++c) u[r][c] = -u[r][c];
    };

    int k = 0;
    while (k < rows && k < cols) {
        int pr = -1, pc = -1;
        for (int r = k; r < rows && pr < 0; ++r)
            for (int c = k; c < cols; ++c)
                if (m[r][c] != 0) { pr = r; pc = c; break; }
        if (pr < 0) break;
        swap_rows(k, pr);
        swap_cols(k, pc);
        bool again = true;
        while (again) {
            again = false;
            for (int r = k + 1; r < rows; ++r) {
                if (m[r][k] == 0) continue;
                Int q = m[r][k] / m[k][k];
                add_row(r, k, -q);
                if (m[r][k] != 0) { swap_rows(k, r); again = true; }
            }
            for (int c = k + 1; c < cols; ++c) {
                if (m[k][c] == 0) continue;
                Int q = m[k][c] / m[k][k];
                add_col(c, k, -q);
                if (m[k][c] != 0) { swap_cols(k, c); again = true; }
            }
        }
        if (m[k][k] < 0) negate_row(k);
        ++k;
    }
    return SmithResult{std::move(u), std::move(m), std::move(w)};
}

}  // namespace detail

// Rational covector in M_Q; integrality is what the Gorenstein test checks.
struct Covector {
    RatVec entries;

    bool is_integral() const {
        for (const Rat& e : entries)
            if (boost::multiprecision::denominator(e) != 1) return false;
        return true;
    }

    IntVec as_integral() const {
        if (!is_integral()) throw not_gorenstein("covector is not integral");
        IntVec out;
        out.reserve(entries.size());
        for (const Rat& e : entries) out.push_back(boost::multiprecision::numerator(e));
        return out;
    }

    std::string str() const {
        std::ostringstream os;
        os << "(";
        for (std::size_t i = 0; i < entries.size(); ++i)
            os << (i ? "," : "") << entries[i];
        os << ")";
        return os.str();
    }
};

// Simplicial rational cone given by primitive ray generators. Rays are
// primitivized on construction; linearly dependent generators are rejected.
class Cone {
public:
    Cone(Lattice lattice, IntMat rays) : lattice_(lattice), rays_(std::move(rays)) {
        if (lattice_.rank < 1) throw validation_error("lattice rank must be >= 1");
        if (rays_.empty()) throw validation_error("cone needs at least one ray");
        for (IntVec& ray : rays_) {
            if (static_cast<int>(ray.size()) != lattice_.rank)
                throw validation_error("ray arity does not match lattice rank");
            Int g = detail::vec_gcd(ray);
            if (g == 0) throw validation_error("zero ray generator");
            if (g != 1)
                for (Int& x : ray) x /= g;
        }
        RatMat m;
        for (const IntVec& ray : rays_) {
            RatVec row;
            for (const Int& x : ray) row.emplace_back(x);
            m.push_back(std::move(row));
        }
        if (detail::rat_rank(m) != static_cast<int>(rays_.size()))
            throw non_simplicial("ray generators are linearly dependent");
    }

    int rank() const { return lattice_.rank; }
    int nrays() const { return static_cast<int>(rays_.size()); }
    const IntMat& rays() const { return rays_; }
    const Lattice& lattice() const { return lattice_; }

    bool full_dimensional() const { return nrays() == rank(); }

    // Canonical (sorted) ray list, for set comparisons.
    IntMat sorted_rays() const {
        IntMat r = rays_;
        std::sort(r.begin(), r.end());
        return r;
    }

private:
    Lattice lattice_;
    IntMat rays_;
};

// Pairing <u, v> of a covector with a lattice vector.
inline Rat pair(const Covector& u, const IntVec& v) {
    if (u.entries.size() != v.size()) throw dimension_mismatch("covector/vector arity mismatch");
    return detail::dot(u.entries, v);
}

// Dual of a full-dimensional simplicial cone: rows of the inverse ray matrix,
// scaled back to primitive integer covectors.
inline Cone dual_cone(const Cone& c) {
    if (!c.full_dimensional()) {
        if (c.nrays() < c.rank())
            throw not_full_dimensional("cone rays do not span the lattice");
        throw non_simplicial("more rays than lattice rank");
    }
    int n = c.rank();
    RatMat v(n, RatVec(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) v[i][j] = Rat(c.rays()[j][i]);  // rays as columns
    RatMat vinv = detail::invert_square(v);
    IntMat dual_rays;
    for (int i = 0; i < n; ++i) {
        Int lcm = 1;
        for (int j = 0; j < n; ++j)
            lcm = boost::multiprecision::lcm(lcm, boost::multiprecision::denominator(vinv[i][j]));
        IntVec ray(n);
        for (int j = 0; j < n; ++j) {
            Rat scaled = vinv[i][j] * Rat(lcm);
            ray[j] = boost::multiprecision::numerator(scaled);
        }
        dual_rays.push_back(std::move(ray));
    }
    return Cone(c.lattice(), std::move(dual_rays));
}

// The covector u with <u, v_j> = 1 on every primitive ray generator, taken in
// the rational span of the rays' dual vectors (for full-dimensional cones this
// is the unique solution). Throws not_gorenstein when u is not in M.
inline Covector gorenstein_covector(const Cone& c) {
    int k = c.nrays();
    RatMat gram(k, RatVec(k, 0));
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
            Rat s = 0;
            for (int i = 0; i < c.rank(); ++i)
                s += Rat(c.rays()[a][i]) * Rat(c.rays()[b][i]);
            gram[a][b] = s;
        }
    RatVec ones(k, 1);
    RatVec y = detail::solve_square(gram, ones);
    Covector u;
    u.entries.assign(c.rank(), Rat(0));
    for (int a = 0; a < k; ++a)
        for (int i = 0; i < c.rank(); ++i)
            u.entries[i] += y[a] * Rat(c.rays()[a][i]);
    for (int a = 0; a < k; ++a)
        if (pair(u, c.rays()[a]) != 1)
            throw numerical_error("gorenstein pairing failed (internal)");
    if (!u.is_integral())
        throw not_gorenstein("unit-pairing covector is not integral: " + u.str());
    return u;
}

// An open simplex in the paper's coordinates x_1..x_s (the slot x_0 is
// eliminated). margin shrinks every defining inequality; vertices carry the
// ambient slice realization when the domain comes from a cone.
struct SimplexDomain {
    int dim = 0;
    double margin = 0.0;
    RatMat vertices;            // ambient coordinates of the slice vertices
    Int normalized_volume = 1;  // lattice-normalized volume of the closed cell

    bool contains(const std::vector<double>& x) const {
        if (static_cast<int>(x.size()) != dim) return false;
        double sum = 0;
        for (double xi : x) {
            if (xi <= margin) return false;
            sum += xi;
        }
        return sum < 1.0 - margin;
    }

    // Smallest slack among the defining inequalities x_j > margin,
    // sum x_j < 1 - margin, in barycentric units.
    double boundary_slack(const std::vector<double>& x) const {
        double slack = 1.0;
        double sum = 0;
        for (double xi : x) {
            slack = std::min(slack, xi - margin);
            sum += xi;
        }
        return std::min(slack, (1.0 - margin) - sum);
    }
};

// Slice {v in Int(c) : <v,u> = 1} in barycentric coordinates. The primitive
// generators all lie on the slice, so they are literally its vertices.
inline SimplexDomain cell_polytope(const Cone& c, const Covector& u) {
    for (const IntVec& ray : c.rays())
        if (pair(u, ray) != 1)
            throw not_gorenstein("covector does not pair to 1 with every ray");
    if (!u.is_integral()) throw not_gorenstein("covector is not integral");

    SimplexDomain d;
    d.dim = c.nrays() - 1;
    d.margin = 0.0;
    for (const IntVec& ray : c.rays()) {
        RatVec v;
        for (const Int& x : ray) v.emplace_back(x);
        d.vertices.push_back(std::move(v));
    }
    if (c.nrays() > 1) {
        IntMat diffs(c.rank(), IntVec(c.nrays() - 1));
        for (int j = 1; j < c.nrays(); ++j)
            for (int i = 0; i < c.rank(); ++i)
                diffs[i][j - 1] = c.rays()[j][i] - c.rays()[0][i];
        auto snf = detail::smith_normal_form(diffs);
        Int vol = 1;
        for (int i = 0; i < c.nrays() - 1; ++i) vol *= snf.d[i][i];
        d.normalized_volume = vol;
    }
    return d;
}

// x_j = log|z_j| / log(t).
inline std::vector<double> log_map(const std::vector<double>& moduli, double t_abs) {
    if (!(t_abs > 0.0 && t_abs < 1.0))
        throw degenerate_parameter("t must lie in (0,1)");
    double lt = std::log(t_abs);
    std::vector<double> x;
    x.reserve(moduli.size());
    for (double m : moduli) {
        if (!(m > 0.0)) throw non_positive_modulus("modulus must be positive");
        x.push_back(std::log(m) / lt);
    }
    return x;
}

// The fibration base B_t: the standard simplex shrunk by
// margin = log(eps) / log(t). Smaller t gives a smaller margin.
inline SimplexDomain fibration_base(int s, double t_abs, double eps) {
    if (s < 0) throw validation_error("dimension must be >= 0");
    if (!(t_abs > 0.0 && t_abs < 1.0))
        throw degenerate_parameter("t must lie in (0,1)");
    if (!(eps > 0.0 && eps <= 1.0))
        throw degenerate_parameter("eps must lie in (0,1]");
    double margin = std::log(eps) / std::log(t_abs);
    if (margin >= 1.0 / (s + 1))
        throw empty_domain("margin " + std::to_string(margin) + " empties the simplex");
    SimplexDomain d;
    d.dim = s;
    d.margin = margin;
    return d;
}

// Re-expresses a (possibly non-full-dimensional) cone inside the saturated
// sublattice of its span. The result is full-dimensional in its own lattice,
// which is the transverse model used for local cones of strata.
inline Cone reduce_to_span(const Cone& c) {
    int r = c.rank();
    int k = c.nrays();
    if (k == r) return c;
    IntMat m(r, IntVec(k));
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < k; ++j) m[i][j] = c.rays()[j][i];
    auto snf = detail::smith_normal_form(m);
    // u maps the span onto the first k coordinates; the saturated sublattice
    // is u^{-1}(Z^k x 0), so coordinates there are the first k entries of u*v.
    IntMat reduced;
    for (int j = 0; j < k; ++j) {
        IntVec coord(k, 0);
        for (int i = 0; i < k; ++i) {
            Int s = 0;
            for (int l = 0; l < r; ++l) s += snf.u[i][l] * c.rays()[j][l];
            coord[i] = s;
        }
        // The trailing rows of u*ray must vanish on span members.
        for (int i = k; i < r; ++i) {
            Int s = 0;
            for (int l = 0; l < r; ++l) s += snf.u[i][l] * c.rays()[j][l];
            if (s != 0) throw numerical_error("span reduction failed (internal)");
        }
        reduced.push_back(std::move(coord));
    }
    return Cone(Lattice{k}, std::move(reduced));
}

// Fixture format: one ray per line, whitespace-separated integers, `#` starts
// a comment.
inline Cone read_cone_fixture(std::istream& in) {
    IntMat rays;
    std::string line;
    int width = -1;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        IntVec ray;
        long long v;
        while (ls >> v) ray.emplace_back(v);
        if (ray.empty()) continue;
        if (width < 0) width = static_cast<int>(ray.size());
        if (static_cast<int>(ray.size()) != width)
            throw fixture_error("inconsistent ray arity in cone fixture");
        rays.push_back(std::move(ray));
    }
    if (rays.empty()) throw fixture_error("cone fixture has no rays");
    return Cone(Lattice{width}, std::move(rays));
}

}  // namespace collapselab::toric
