#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>
#include <sstream>

#include "collapselab/toric.hpp"

using namespace collapselab;
using namespace collapselab::toric;

namespace {

Cone make_cone(int rank, std::vector<std::vector<long long>> rays) {
    IntMat m;
    for (auto& r : rays) {
        IntVec row;
        for (long long v : r) row.emplace_back(v);
        m.push_back(std::move(row));
    }
    return Cone(Lattice{rank}, std::move(m));
}

// Brute-force dual oracle in rank 2: enumerate small lattice covectors with
// nonnegative pairing against every ray, then check they all lie in the cone
// spanned by the claimed dual rays (2D sign test on cross products).
void check_dual_by_enumeration(const Cone& c, const Cone& dual) {
    auto cross = [](const IntVec& a, const IntVec& b) { return a[0] * b[1] - a[1] * b[0]; };
    const IntVec& w1 = dual.rays()[0];
    const IntVec& w2 = dual.rays()[1];
    Int orient = cross(w1, w2);
    REQUIRE(orient != 0);
    for (long long ux = -8; ux <= 8; ++ux) {
        for (long long uy = -8; uy <= 8; ++uy) {
            if (ux == 0 && uy == 0) continue;
            IntVec u{Int(ux), Int(uy)};
            bool nonneg = true;
            for (const auto& v : c.rays())
                if (u[0] * v[0] + u[1] * v[1] < 0) nonneg = false;
            // u is in cone(w1,w2) iff both barycentric signs agree with the
            // orientation of (w1,w2).
            bool inside = (cross(w1, u) * orient >= 0) && (cross(u, w2) * orient >= 0);
            CHECK(nonneg == inside);
        }
    }
    // and the claimed rays themselves pair >= 0 with every primal ray
    for (const auto& w : dual.rays())
        for (const auto& v : c.rays())
            CHECK(w[0] * v[0] + w[1] * v[1] >= 0);
}

}  // namespace

TEST_CASE("orthant is self-dual") {
    Cone c = make_cone(2, {{1, 0}, {0, 1}});
    Cone d = dual_cone(c);
    CHECK(d.sorted_rays() == c.sorted_rays());
}

TEST_CASE("dual of a skew cone, against brute-force enumeration") {
    Cone c = make_cone(2, {{1, 0}, {1, 2}});
    Cone d = dual_cone(c);
    Cone expected = make_cone(2, {{0, 1}, {2, -1}});
    CHECK(d.sorted_rays() == expected.sorted_rays());
    check_dual_by_enumeration(c, d);
}

TEST_CASE("biduality on fixed and random cones") {
    Cone c = make_cone(2, {{1, 0}, {1, 2}});
    CHECK(dual_cone(dual_cone(c)).sorted_rays() == c.sorted_rays());

    std::mt19937 rng(7);
    std::uniform_int_distribution<int> entry(-4, 4);
    int built = 0;
    while (built < 40) {
        int n = 2 + static_cast<int>(rng() % 3);  // rank 2..4
        std::vector<std::vector<long long>> rays(n, std::vector<long long>(n));
        for (auto& r : rays)
            for (auto& x : r) x = entry(rng);
        try {
            Cone cone = make_cone(n, rays);
            if (!cone.full_dimensional()) continue;
            Cone dd = dual_cone(dual_cone(cone));
            CHECK(dd.sorted_rays() == cone.sorted_rays());
            ++built;
        } catch (const validation_error&) {
            continue;  // dependent or zero rays; resample
        }
    }
}

TEST_CASE("dual cone rejects degenerate input") {
    CHECK_THROWS_AS(dual_cone(make_cone(3, {{1, 0, 0}, {0, 1, 0}})), not_full_dimensional);
    CHECK_THROWS_AS(make_cone(2, {{1, 0}, {0, 1}, {1, 1}}), non_simplicial);
    CHECK_THROWS_AS(make_cone(2, {{1, 1}, {2, 2}}), non_simplicial);
}

TEST_CASE("gorenstein covector on the standard basis") {
    for (int n = 1; n <= 4; ++n) {
        std::vector<std::vector<long long>> rays(n, std::vector<long long>(n, 0));
        for (int i = 0; i < n; ++i) rays[i][i] = 1;
        Covector u = gorenstein_covector(make_cone(n, rays));
        for (const Rat& e : u.entries) CHECK(e == 1);
    }
}

TEST_CASE("gorenstein covector solves the skew system") {
    Covector u = gorenstein_covector(make_cone(2, {{1, 0}, {1, 2}}));
    REQUIRE(u.entries.size() == 2);
    CHECK(u.entries[0] == 1);
    CHECK(u.entries[1] == 0);
}

TEST_CASE("non-Gorenstein cone is rejected with the fractional solution") {
    try {
        gorenstein_covector(make_cone(2, {{2, 1}, {1, 2}}));
        FAIL("expected not_gorenstein");
    } catch (const not_gorenstein& e) {
        CHECK(std::string(e.what()).find("1/3") != std::string::npos);
    }
}

TEST_CASE("gorenstein pairing is exactly 1 on unimodular cones") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> shear(-2, 2);
    for (int trial = 0; trial < 30; ++trial) {
        int n = 2 + static_cast<int>(rng() % 3);
        // random unimodular matrix: identity hit by integer shears
        std::vector<std::vector<long long>> v(n, std::vector<long long>(n, 0));
        for (int i = 0; i < n; ++i) v[i][i] = 1;
        for (int k = 0; k < 12; ++k) {
            int a = static_cast<int>(rng() % n), b = static_cast<int>(rng() % n);
            if (a == b) continue;
            long long f = shear(rng);
            for (int j = 0; j < n; ++j) v[a][j] += f * v[b][j];
        }
        Cone cone = make_cone(n, v);
        Covector u = gorenstein_covector(cone);
        CHECK(u.is_integral());
        for (const auto& ray : cone.rays()) CHECK(pair(u, ray) == 1);
    }
}

TEST_CASE("cell polytope of the standard cone is the standard simplex") {
    for (int n = 1; n <= 3; ++n) {
        std::vector<std::vector<long long>> rays(n + 1, std::vector<long long>(n + 1, 0));
        for (int i = 0; i <= n; ++i) rays[i][i] = 1;
        Cone c = make_cone(n + 1, rays);
        SimplexDomain d = cell_polytope(c, gorenstein_covector(c));
        CHECK(d.dim == n);
        CHECK(d.margin == 0.0);
        CHECK(d.normalized_volume == 1);
        CHECK(d.contains(std::vector<double>(n, 1.0 / (n + 1))));
    }
}

TEST_CASE("cell polytope of the skew cone is a segment of lattice length 2") {
    Cone c = make_cone(2, {{1, 0}, {1, 2}});
    SimplexDomain d = cell_polytope(c, gorenstein_covector(c));
    CHECK(d.dim == 1);
    CHECK(d.normalized_volume == 2);
}

TEST_CASE("cell polytope of a single ray is a point") {
    Cone c = make_cone(1, {{1}});
    SimplexDomain d = cell_polytope(c, gorenstein_covector(c));
    CHECK(d.dim == 0);
    CHECK(d.normalized_volume == 1);
}

TEST_CASE("dimension law: cell dim is ray count minus one") {
    std::mt19937 rng(23);
    std::uniform_int_distribution<int> entry(-3, 3);
    for (int trial = 0; trial < 30; ++trial) {
        int rank = 2 + static_cast<int>(rng() % 3);
        int k = 1 + static_cast<int>(rng() % rank);
        // height-1 lifts (w_i, 1) are always unit-pairing against (0,...,0,1)
        std::vector<std::vector<long long>> rays;
        for (int i = 0; i < k; ++i) {
            std::vector<long long> r(rank, 0);
            for (int j = 0; j + 1 < rank; ++j) r[j] = entry(rng);
            r[rank - 1] = 1;
            rays.push_back(r);
        }
        try {
            Cone c = make_cone(rank, rays);
            Covector u;
            u.entries.assign(rank, Rat(0));
            u.entries[rank - 1] = 1;
            SimplexDomain d = cell_polytope(c, u);
            CHECK(d.dim == c.nrays() - 1);
        } catch (const non_simplicial&) {
            continue;
        }
    }
}

TEST_CASE("log map basics") {
    CHECK(log_map({0.3}, 0.3)[0] == Catch::Approx(1.0));
    CHECK(log_map({0.001}, 0.01)[0] == Catch::Approx(1.5));
    CHECK_THROWS_AS(log_map({1.0}, 1.5), degenerate_parameter);
    CHECK_THROWS_AS(log_map({-2.0}, 0.5), non_positive_modulus);
}

TEST_CASE("log map additivity") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> mod(0.01, 5.0);
    double t = 1e-4;
    for (int i = 0; i < 50; ++i) {
        double a = mod(rng), b = mod(rng);
        double lhs = log_map({a * b}, t)[0];
        double rhs = log_map({a}, t)[0] + log_map({b}, t)[0];
        CHECK(lhs == Catch::Approx(rhs).margin(1e-12));
    }
    // |z0|*|z1| = t  =>  x0 + x1 = 1
    double z0 = 0.37 * 1e-4, z1 = 1.0 / 0.37;
    auto x = log_map({z0, z1}, 1e-4);
    CHECK(x[0] + x[1] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("fibration base margins") {
    CHECK(fibration_base(2, 0.5, 1.0).margin == 0.0);
    double d = fibration_base(2, std::exp(-10.0), std::exp(-1.0)).margin;
    CHECK(d == Catch::Approx(0.1).margin(1e-14));
    CHECK_THROWS_AS(fibration_base(2, 0.9, 0.5), empty_domain);
    CHECK_THROWS_AS(fibration_base(2, 1.2, 0.5), degenerate_parameter);

    // monotone: smaller t gives smaller margin, so a larger base domain
    double prev = fibration_base(2, 1e-2, 0.9).margin;
    for (double t : {1e-4, 1e-8, 1e-16}) {
        double cur = fibration_base(2, t, 0.9).margin;
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("span reduction produces the transverse lattice model") {
    // two rays spanning a saturated plane in Z^3
    Cone c = make_cone(3, {{0, 0, 1}, {-1, -1, 1}});
    Cone red = reduce_to_span(c);
    CHECK(red.rank() == 2);
    CHECK(red.full_dimensional());
    Covector u = gorenstein_covector(red);
    CHECK(u.is_integral());

    // single non-unit-coordinate primitive ray: reduces to the standard ray
    Cone one = make_cone(2, {{2, 1}});
    Cone red1 = reduce_to_span(one);
    CHECK(red1.rank() == 1);
    CHECK(red1.rays()[0][0] == 1);
    // in the ambient lattice the minimal-norm covector is fractional
    CHECK_THROWS_AS(gorenstein_covector(one), not_gorenstein);
}

TEST_CASE("cone fixture parsing") {
    std::istringstream in(
        "# a skew cone\n"
        "1 0\n"
        "\n"
        "1 2  # second ray\n");
    Cone c = read_cone_fixture(in);
    CHECK(c.rank() == 2);
    CHECK(c.nrays() == 2);
    CHECK(gorenstein_covector(c).entries[0] == 1);

    std::istringstream bad("1 0\n1 2 3\n");
    CHECK_THROWS_AS(read_cone_fixture(bad), fixture_error);
}
