#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "adlv/schubert.hpp"
#include "test_util.hpp"

using namespace adlv;

static const FieldParams& FP(int q = 2, int s = 2, int prec = 16) {
    return FieldParams::get(q, s, prec);
}

static SympMatrix special(const FieldParams& fp, int n, int k) {
    return make_standard(fp, StandardKind::special_b, n, k);
}

static SympMatrix coxeter(const FieldParams& fp, int n, int k) {
    return make_standard(fp, StandardKind::coxeter_b, n, k);
}

static bool mat_eq(const SympMatrix& a, const SympMatrix& b) {
    for (int i = 1; i <= 2 * a.n; ++i)
        for (int j = 1; j <= 2 * a.n; ++j)
            if (!ls_eq(a.at(i, j), b.at(i, j))) return false;
    return true;
}

// coefficients of a in the exponent window [lo, hi)
static LaurentElem window_part(const LaurentElem& a, int lo, int hi) {
    LaurentElem t(*a.par);
    for (int e = lo; e < hi; ++e) {
        fq_t c = a.coeff(e);
        if (c == 0) continue;
        if (t.coeffs.empty()) t.vmin = e;
        t.coeffs.resize(static_cast<std::size_t>(e - t.vmin) + 1, 0);
        t.coeffs[static_cast<std::size_t>(e - t.vmin)] = c;
    }
    return t;
}

// window truncation of a scaled lattice vector as a coordinate point
static TruncatedLatticePoint coord_point(const SympVector& w, const LcoordSet& lc) {
    TruncatedLatticePoint tp;
    tp.par = w.par;
    tp.n = w.n;
    tp.win = lcoord_windows(lc.prof, lc.tab);
    tp.coeffs.push_back(w.par->F->one());
    for (int i = 2; i <= 2 * w.n; ++i)
        for (int e = lc.tab.alpha_of(i); e < lc.tab.gamma_of(i); ++e)
            tp.coeffs.push_back(w.at(i).coeff(e));
    return tp;
}

TEST_CASE("cell profiles match the monomial representative") {
    const FieldParams& fp = FP();

    // similitude order and the diagonal shape at k=0
    for (int n = 1; n <= 3; ++n)
        for (int r = 1; r <= 2; ++r) {
            CellProfile p = make_cell_profile(fp, n, 0, r);
            CHECK(p.lambda.valuation() == n * r);
            for (int i = 1; i <= 2 * n; ++i) {
                CHECK(p.tau_of(i) == i);
                int e = (i <= n) ? (i - 1) * r : (i - n) * r;
                CHECK(ls_eq(p.xr.at(i, i), LaurentElem::pi_pow(fp, e)));
            }
        }

    // twisted permutations
    {
        CellProfile p = make_cell_profile(fp, 2, 1, 1);
        CHECK(p.tau == std::vector<int>{1, 3, 2, 4});
        CHECK(p.varphi == std::vector<int>{0, 1, 2, 3});
        CHECK(p.lambda.valuation() == 2 * 1 + 1);
    }
    {
        CellProfile p = make_cell_profile(fp, 3, 1, 2);
        CHECK(p.tau == std::vector<int>{1, 4, 5, 2, 3, 6});
        CHECK(p.varphi == std::vector<int>{0, 2, 5, 2, 5, 7});
        CHECK(p.lambda.valuation() == 3 * 2 + 1);
    }
    {
        CellProfile p = make_cell_profile(fp, 4, 1, 2);
        CHECK(p.tau == std::vector<int>{1, 5, 6, 2, 7, 3, 4, 8});
        CHECK(p.varphi == std::vector<int>{0, 2, 5, 2, 8, 5, 8, 10});
        // coordinate windows of the unipotent factor, against the r=2 shape
        auto win = [&](int i, int j) { return std::pair(p.g_bound(i, j), p.h_bound(i, j)); };
        CHECK(win(2, 1) == std::pair(0, 2));       // [0, r)
        CHECK(win(3, 1) == std::pair(0, 5));       // [0, 2r+1)
        CHECK(win(3, 4) == std::pair(1, 3));       // [1, r+1)
        CHECK(win(4, 2) == std::pair(0, 1));       // [0, 1)
        CHECK(win(6, 4) == std::pair(0, 3));       // [0, r+1)
        CHECK(win(8, 5) == std::pair(0, 2));       // [0, r)
        CHECK(win(6, 2) == std::pair(0, 4));       // [0, r+2)
        CHECK(win(7, 2) == std::pair(0, 7));       // [0, 2r+3)
        CHECK(win(5, 6) == std::pair(1, 3));       // [1, r+1)
        CHECK(!p.in_root_set(1, 2));               // no roots in the top row
        CHECK(!p.in_root_set(2, 3));
    }

    // first-column windows agree with the coordinate-set gamma table
    for (int k = 0; k <= 1; ++k)
        for (int n = 1; n <= 3; ++n)
            for (int m = 0; m <= 1; ++m) {
                CellProfile p = make_cell_profile(fp, n, k, 2);
                CoordTables t = coord_tables(p, m);
                for (int i = 2; i <= 2 * n; ++i) {
                    CHECK(p.h_bound(i, 1) == p.varphi_of(i));
                    CHECK(t.gamma_of(i) == m + p.h_bound(i, 1));
                    CHECK(p.g_bound(i, 1) <= t.alpha_of(i));
                    CHECK(t.beta_of(i) <= t.gamma_of(i));
                }
            }
}

TEST_CASE("containment reduction factors cell members into Iwahori pieces") {
    std::mt19937 rng(77);
    struct Cfg {
        int n, k, q, s, r;
        bool use_special;
    };
    // n = 2 needs the quartic extension: both strata are empty over
    // F_4, and the coxeter representative only produces degenerate
    // one-line vectors there whose frames sit in a different cell
    std::vector<Cfg> cfgs = {{1, 0, 2, 2, 1, true}, {1, 1, 2, 2, 1, true},
                             {2, 0, 2, 4, 1, true}, {2, 0, 2, 4, 2, true},
                             {2, 1, 2, 4, 1, true}, {2, 1, 2, 4, 2, true}};
    for (const auto& c : cfgs) {
        CAPTURE(c.n);
        CAPTURE(c.k);
        CAPTURE(c.s);
        CAPTURE(c.r);
        const FieldParams& fp = FP(c.q, c.s);
        SympMatrix b = c.use_special ? special(fp, c.n, c.k) : coxeter(fp, c.n, c.k);
        CellProfile prof = make_cell_profile(fp, c.n, c.k, c.r);
        CongruencePattern iw = iwahori_pattern(c.n, 0);

        // the representative itself reduces trivially
        {
            SchubertFactors f = schubert_reduce(prof.xr, prof);
            CHECK(mat_eq(f.left, SympMatrix::identity(fp, c.n)));
            CHECK(mat_eq(f.right, SympMatrix::identity(fp, c.n)));
        }

        // frames of admissible vectors lie in the cell
        int found = 0;
        for (long idx = 0; idx < 300 && found < 3; ++idx) {
            auto av = monomial_admissible(fp, c.n, b, false, idx);
            if (!av) continue;
            ++found;
            SympMatrix g = g_br(*av, c.r).g;
            SchubertFactors f = schubert_reduce(g, prof);
            CHECK(congruence_member(f.left, iw));
            CHECK(congruence_member(f.right, iw));
            CHECK(mat_eq(mat_mul(f.left, mat_mul(prof.xr, f.right)), g));
        }
        CHECK(found == 3);

        // random Iwahori sandwiches reduce and reconstruct
        for (int t = 0; t < 3; ++t) {
            SympMatrix i1 = testutil::random_level_iwahori(fp, c.n, 0, rng);
            SympMatrix i2 = testutil::random_level_iwahori(fp, c.n, 0, rng);
            SympMatrix g = mat_mul(i1, mat_mul(prof.xr, i2));
            SchubertFactors f = schubert_reduce(g, prof);
            CHECK(congruence_member(f.left, iw));
            CHECK(congruence_member(f.right, iw));
            CHECK(mat_eq(mat_mul(f.left, mat_mul(prof.xr, f.right)), g));
        }

        // the identity matrix sits in a different cell once r >= 1
        CHECK_THROWS_AS(schubert_reduce(SympMatrix::identity(fp, c.n), prof), PivotCollapse);
    }
}

TEST_CASE("coordinate sets factor as truncations times free extensions") {
    // gamma = beta at n=1: no free part
    {
        const FieldParams& fp = FP();
        for (int k = 0; k <= 1; ++k) {
            SympMatrix b = special(fp, 1, k);
            LcoordSet lc = enumerate_Lcoord(fp, b, 0, 1);
            CHECK(lc.ext_count == 1);
            CHECK(static_cast<long>(lc.points.size()) == lc.lprime_count);
            CHECK(lc.lprime_count > 0);
            // every point is the truncation of an exact lattice member
            for (const auto& tp : lc.points) {
                SympVector v = tp.lift();
                CHECK(v.at(1).is_unit());
                AdmissibleVector av = symp_admissible(v, b);
                CHECK(av.alpha.valuation() == 0);
            }
        }
        CHECK_THROWS_AS(enumerate_Lcoord(fp, special(fp, 1, 0), 1, 1), PreconditionViolated);
    }

    // full symplectic n=2 over the quartic extension: one free slot,
    // and the truncation layer matches the level-one slice exactly
    {
        const FieldParams& fp = FP(2, 4);
        SympMatrix b = special(fp, 2, 0);
        LcoordSet lc = enumerate_Lcoord(fp, b, 0, 1);
        CHECK(lc.ext_count == 16);  // q^s = 16, one slot
        // the pairing congruence filter removes nothing at n = 2
        CHECK(static_cast<long>(lc.points.size()) == lc.lprime_count * lc.ext_count);
        CHECK(lc.lprime_count > 0);
        std::vector<FixedSlot> pin = {{1, 0, fp.F->one()}};
        long slice = enumerate_level_set(fp, b, lbh_spec(2, 0, 1), 100000000L, pin).count();
        CHECK(lc.lprime_count == slice);  // beta equals the level-one windows here

        // the quadratic extension carries an empty stratum
        const FieldParams& fp2 = FP();
        CHECK(enumerate_Lcoord(fp2, special(fp2, 2, 0), 0, 1).points.empty());
    }

    // half-twisted n=2: the coxeter set over F_4 is degenerate but
    // still factors; the special one over F_16 is substantive
    {
        const FieldParams& fp2 = FP();
        SympMatrix b2 = coxeter(fp2, 2, 1);
        LcoordSet lc2 = enumerate_Lcoord(fp2, b2, 0, 1);
        CHECK(static_cast<long>(lc2.points.size()) == lc2.lprime_count * lc2.ext_count);

        const FieldParams& fp = FP(2, 4);
        SympMatrix b = special(fp, 2, 1);
        LcoordSet lc = enumerate_Lcoord(fp, b, 0, 1);
        CHECK(lc.ext_count == 16);
        CHECK(static_cast<long>(lc.points.size()) == lc.lprime_count * lc.ext_count);
        CHECK(lc.lprime_count > 0);

        // the truncation count matches the residue count times a power of q^s
        LevelSetSpec l1 = lbh_spec(2, 1, 1);
        std::vector<FixedSlot> pin = {{1, 0, fp.F->one()}};
        long slice = enumerate_level_set(fp, b, l1, 100000000L, pin).count();
        CHECK(slice > 0);
        CHECK(lc.lprime_count % slice == 0);
        long quot = lc.lprime_count / slice;
        while (quot % 16 == 0) quot /= 16;
        CHECK(quot == 1);
    }
}

TEST_CASE("orthogonalized chains yield frames with Iwahori-reduced transport") {
    struct Cfg {
        int n, k, q, s, m, r;
    };
    std::vector<Cfg> cfgs = {{1, 0, 2, 2, 0, 1}, {1, 1, 2, 2, 0, 1}, {1, 1, 2, 2, 1, 1},
                             {2, 0, 2, 4, 0, 1}, {2, 1, 2, 4, 0, 1}};
    for (const auto& c : cfgs) {
        CAPTURE(c.n);
        CAPTURE(c.k);
        CAPTURE(c.m);
        const FieldParams& fp = FP(c.q, c.s);
        SympMatrix b = special(fp, c.n, c.k);
        LcoordSet lc = enumerate_Lcoord(fp, b, c.m, c.r);
        REQUIRE(!lc.points.empty());
        int kn2 = (c.k * c.n) / 2;
        std::size_t step = std::max<std::size_t>(1, lc.points.size() / 8);
        for (std::size_t pi = 0; pi < lc.points.size(); pi += step) {
            SympVector v = lc.points[pi].lift();
            auto h = h_coord_chain(v, b);
            int d = 2 * c.n;
            for (int i = 1; i <= d; ++i)
                for (int j = i + 1; j <= d; ++j) {
                    LaurentElem pr = pairing(h[static_cast<std::size_t>(i - 1)],
                                             h[static_cast<std::size_t>(j - 1)]);
                    if (i + j == d + 1)
                        CHECK(pr.valuation() == kn2);
                    else
                        CHECK(pr.known_zero());
                }
            Frame fr = h_br(v, b, c.r);
            CHECK(fr.lambda.valuation() == c.n * c.r + kn2);
            SympMatrix A = A_h_br(v, b, c.r);
            CHECK(congruence_member(A, iwahori_pattern(c.n, c.m)));
            if (c.n == 1) {
                Frame gr = g_br(symp_admissible(v, b), c.r);
                CHECK(mat_eq(fr.g, gr.g));
            }
        }
    }
}

TEST_CASE("cell coordinates recover each coordinate point from its frame") {
    struct Cfg {
        int n, k, q, s, r;
    };
    std::vector<Cfg> cfgs = {{1, 0, 2, 2, 1}, {1, 1, 2, 2, 1}, {2, 0, 2, 4, 1}, {2, 1, 2, 4, 1}};
    for (const auto& c : cfgs) {
        CAPTURE(c.n);
        CAPTURE(c.k);
        const FieldParams& fp = FP(c.q, c.s);
        SympMatrix b = special(fp, c.n, c.k);
        CellProfile prof = make_cell_profile(fp, c.n, c.k, c.r);
        LcoordSet lc = enumerate_Lcoord(fp, b, 0, c.r);
        REQUIRE(!lc.points.empty());
        std::size_t step = std::max<std::size_t>(1, lc.points.size() / 12);
        int bad = -1;
        for (std::size_t pi = 0; pi < lc.points.size(); pi += step) {
            SympVector v = lc.points[pi].lift();
            Frame fr = h_br(v, b, c.r);
            auto coords = schubert_col1(fr.g, prof);
            if (!ls_eq(coords[0], LaurentElem::one(fp))) { bad = static_cast<int>(pi); break; }
            for (int i = 2; i <= 2 * c.n; ++i)
                if (!ls_eq(coords[static_cast<std::size_t>(i - 1)], v.at(i))) bad = static_cast<int>(pi);
            if (bad >= 0) break;
        }
        CHECK(bad == -1);
    }
}

TEST_CASE("sampled cosets land in the coordinate set with matching frames") {
    struct Cfg {
        int n, k, q, s, r;
    };
    std::vector<Cfg> cfgs = {{1, 0, 2, 2, 1}, {1, 1, 2, 2, 1}, {2, 0, 2, 4, 1}, {2, 1, 2, 4, 1}};
    for (const auto& c : cfgs) {
        CAPTURE(c.n);
        CAPTURE(c.k);
        const FieldParams& fp = FP(c.q, c.s);
        SympMatrix b = special(fp, c.n, c.k);
        CellProfile prof = make_cell_profile(fp, c.n, c.k, c.r);
        LcoordSet lc = enumerate_Lcoord(fp, b, 0, c.r);
        std::set<TruncatedLatticePoint> index(lc.points.begin(), lc.points.end());
        CongruencePattern iw = iwahori_pattern(c.n, 0);

        int found = 0;
        for (long idx = 0; idx < 300 && found < 3; ++idx) {
            auto av = monomial_admissible(fp, c.n, b, false, idx);
            if (!av) continue;
            ++found;
            SympMatrix g = g_br(*av, c.r).g;
            // scale the sampled lattice member to leading entry one and
            // truncate to the coordinate windows
            SympVector w = vec_scale(av->v, ls_invert(av->v.at(1)));
            TruncatedLatticePoint tp = coord_point(w, lc);
            CHECK(index.count(tp) == 1);
            SympVector v = tp.lift();
            // v refines the coset: the transition column is unit-led integral
            SympVector col = mat_vec(mat_inverse(g), v);
            CHECK(col.at(1).valuation() == 0);
            bool integral = true;
            for (int i = 2; i <= 2 * c.n; ++i)
                if (!col.at(i).val_at_least(0)) integral = false;
            CHECK(integral);
            // and the two frames generate the same coset
            SympMatrix M = mat_mul(mat_inverse(g), h_br(v, b, c.r).g);
            CHECK(congruence_member(M, iw));
        }
        CHECK(found == 3);
    }
}
