#pragma once

// Uniform simplex grid in the coordinates x_1..x_s (x_0 eliminated), s <= 3.
// Interior nodes satisfy every defining inequality of the (possibly shrunken)
// simplex by at least one grid spacing; the boundary layer is the set of
// lattice points one step outside, which carry Dirichlet or slaved values.
//
// All second differences are taken along the lattice directions e_i and
// e_i - e_j. Those are exactly the root directions of the simplex symmetry
// group acting on the node lattice, so a discretization assembled from them
// commutes with every coordinate permutation (including the hidden x_0 slot),
// and every stencil stays inside the closed simplex lattice.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "collapselab/errors.hpp"
#include "collapselab/toric.hpp"

namespace collapselab::ma {

using MultiIdx = std::array<int, 3>;  // unused trailing slots are 0

struct Direction {
    MultiIdx step{0, 0, 0};
    int axis_a = -1;  // for e_i: axis_a = i, axis_b = -1
    int axis_b = -1;  // for e_i - e_j: axis_a = i, axis_b = j
};

inline std::vector<Direction> root_directions(int dim) {
    std::vector<Direction> dirs;
    for (int i = 0; i < dim; ++i) {
        Direction d;
        d.step[i] = 1;
        d.axis_a = i;
        dirs.push_back(d);
    }
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j) {
            Direction d;
            d.step[i] = 1;
            d.step[j] = -1;
            d.axis_a = i;
            d.axis_b = j;
            dirs.push_back(d);
        }
    return dirs;
}

class GridSpec {
public:
    GridSpec() = default;

    GridSpec(toric::SimplexDomain domain, int resolution)
        : domain_(std::move(domain)), res_(resolution) {
        if (domain_.dim < 1 || domain_.dim > 3)
            throw validation_error("grid supports dimensions 1..3");
        if (res_ < 8) throw resolution_too_coarse("resolution must be >= 8");
        h_ = 1.0 / res_;
        lo_ = static_cast<int>(std::ceil(domain_.margin * res_ + 1.0 - 1e-9));
        hi_ = static_cast<int>(std::floor((1.0 - domain_.margin) * res_ - 1.0 + 1e-9));
        if (domain_.dim * lo_ > hi_)
            throw resolution_too_coarse("no interior nodes at this resolution/margin");

        box_lo_ = lo_ - 1;
        box_hi_ = hi_ + 1;
        side_ = box_hi_ - box_lo_ + 1;
        std::size_t box = 1;
        for (int d = 0; d < domain_.dim; ++d) box *= static_cast<std::size_t>(side_);
        site_of_box_.assign(box, -1);

        // interior sites first, lexicographic, then the boundary layer
        for (int pass = 0; pass < 2; ++pass) {
            MultiIdx idx{0, 0, 0};
            enumerate(0, idx, pass == 0);
            if (pass == 0) n_interior_ = static_cast<int>(sites_.size());
        }
        dirs_ = root_directions(domain_.dim);
        neighbors_.assign(static_cast<std::size_t>(n_interior_) * dirs_.size() * 2, -1);
        for (int s = 0; s < n_interior_; ++s) {
            for (std::size_t d = 0; d < dirs_.size(); ++d) {
                MultiIdx p = sites_[s], m = sites_[s];
                for (int k = 0; k < domain_.dim; ++k) {
                    p[k] += dirs_[d].step[k];
                    m[k] -= dirs_[d].step[k];
                }
                neighbors_[(s * dirs_.size() + d) * 2 + 0] = site_at(p);
                neighbors_[(s * dirs_.size() + d) * 2 + 1] = site_at(m);
            }
        }
        for (int s = 0; s < n_interior_; ++s)
            for (std::size_t k = 0; k < dirs_.size() * 2; ++k)
                if (neighbors_[s * dirs_.size() * 2 + k] < 0)
                    throw resolution_too_coarse("stencil leaves the node box");
    }

    const toric::SimplexDomain& domain() const { return domain_; }
    int dim() const { return domain_.dim; }
    int resolution() const { return res_; }
    double h() const { return h_; }
    int n_interior() const { return n_interior_; }
    int n_sites() const { return static_cast<int>(sites_.size()); }
    const std::vector<Direction>& directions() const { return dirs_; }

    const MultiIdx& multi_index(int site) const { return sites_[site]; }

    std::vector<double> coords(int site) const {
        std::vector<double> x(domain_.dim);
        for (int d = 0; d < domain_.dim; ++d) x[d] = sites_[site][d] * h_;
        return x;
    }

    // Smallest slack among the full-simplex inequalities, in barycentric units
    // relative to this grid's (possibly shrunken) domain.
    double boundary_slack(int site) const {
        double slack = 1.0, sum = 0.0;
        for (int d = 0; d < domain_.dim; ++d) {
            double x = sites_[site][d] * h_;
            slack = std::min(slack, x - domain_.margin);
            sum += x;
        }
        return std::min(slack, (1.0 - domain_.margin) - sum);
    }

    int site_at(const MultiIdx& idx) const {
        std::size_t flat = 0;
        for (int d = 0; d < domain_.dim; ++d) {
            if (idx[d] < box_lo_ || idx[d] > box_hi_) return -1;
            flat = flat * side_ + static_cast<std::size_t>(idx[d] - box_lo_);
        }
        return site_of_box_[flat];
    }

    // Nearest interior site to x (Euclidean); -1 when the grid is empty.
    int nearest_interior(const std::vector<double>& x) const {
        if (static_cast<int>(x.size()) != domain_.dim)
            throw dimension_mismatch("point arity does not match grid dimension");
        int best = -1;
        double best_d = 0;
        for (int s = 0; s < n_interior_; ++s) {
            double d2 = 0;
            for (int d = 0; d < domain_.dim; ++d) {
                double diff = sites_[s][d] * h_ - x[d];
                d2 += diff * diff;
            }
            if (best < 0 || d2 < best_d) { best = s; best_d = d2; }
        }
        return best;
    }

    int neighbor(int site, int dir, bool plus) const {
        return neighbors_[(static_cast<std::size_t>(site) * dirs_.size() + dir) * 2 + (plus ? 0 : 1)];
    }

    bool is_interior(int site) const { return site >= 0 && site < n_interior_; }

private:
    void enumerate(int axis, MultiIdx& idx, bool interior_pass) {
        if (axis == domain_.dim) {
            int sum = 0;
            bool ge_lo = true;
            for (int d = 0; d < domain_.dim; ++d) {
                sum += idx[d];
                if (idx[d] < lo_) ge_lo = false;
            }
            bool interior = ge_lo && sum <= hi_;
            if (interior != interior_pass) return;
            if (!interior && sum > hi_ + 1) return;
            std::size_t flat = 0;
            for (int d = 0; d < domain_.dim; ++d)
                flat = flat * side_ + static_cast<std::size_t>(idx[d] - box_lo_);
            site_of_box_[flat] = static_cast<int>(sites_.size());
            sites_.push_back(idx);
            return;
        }
        for (int v = box_lo_; v <= box_hi_; ++v) {
            idx[axis] = v;
            enumerate(axis + 1, idx, interior_pass);
        }
        idx[axis] = 0;
    }

    toric::SimplexDomain domain_;
    int res_ = 0;
    double h_ = 0;
    int lo_ = 0, hi_ = 0, box_lo_ = 0, box_hi_ = 0, side_ = 0;
    std::vector<int32_t> site_of_box_;
    std::vector<MultiIdx> sites_;
    int n_interior_ = 0;
    std::vector<Direction> dirs_;
    std::vector<int32_t> neighbors_;
};

// Packed symmetric s x s matrix, s <= 3: [H11,H22,H33,H12,H13,H23].
using SymMat = std::array<double, 6>;

inline double sym_get(const SymMat& m, int i, int j) {
    if (i == j) return m[i];
    int a = std::min(i, j), b = std::max(i, j);
    if (a == 0 && b == 1) return m[3];
    if (a == 0 && b == 2) return m[4];
    return m[5];
}

inline void sym_set(SymMat& m, int i, int j, double v) {
    if (i == j) { m[i] = v; return; }
    int a = std::min(i, j), b = std::max(i, j);
    if (a == 0 && b == 1) m[3] = v;
    else if (a == 0 && b == 2) m[4] = v;
    else m[5] = v;
}

inline double sym_det(const SymMat& m, int dim) {
    if (dim == 1) return m[0];
    if (dim == 2) return m[0] * m[1] - m[3] * m[3];
    return m[0] * (m[1] * m[2] - m[5] * m[5]) - m[3] * (m[3] * m[2] - m[5] * m[4]) +
           m[4] * (m[3] * m[5] - m[1] * m[4]);
}

// Cofactor matrix (equals det * H^{-1} for invertible H), same packing.
inline SymMat sym_cofactor(const SymMat& m, int dim) {
    SymMat c{0, 0, 0, 0, 0, 0};
    if (dim == 1) {
        c[0] = 1.0;
    } else if (dim == 2) {
        c[0] = m[1];
        c[1] = m[0];
        c[3] = -m[3];
    } else {
        c[0] = m[1] * m[2] - m[5] * m[5];
        c[1] = m[0] * m[2] - m[4] * m[4];
        c[2] = m[0] * m[1] - m[3] * m[3];
        c[3] = -(m[3] * m[2] - m[5] * m[4]);
        c[4] = m[3] * m[5] - m[1] * m[4];
        c[5] = -(m[0] * m[5] - m[3] * m[4]);
    }
    return c;
}

inline bool sym_spd(const SymMat& m, int dim) {
    if (!(m[0] > 0)) return false;
    if (dim == 1) return true;
    double d2 = m[0] * m[1] - m[3] * m[3];
    if (!(d2 > 0)) return false;
    if (dim == 2) return true;
    return sym_det(m, 3) > 0;
}

inline double sym_max_abs(const SymMat& m, int dim) {
    double v = 0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) v = std::max(v, std::abs(sym_get(m, i, j)));
    return v;
}

}  // namespace collapselab::ma
