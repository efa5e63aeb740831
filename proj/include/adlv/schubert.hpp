#pragma once

// The Schubert-cell side of the component structure: the monomial cell
// representative x_r with its permutation tau and entry scalars phi_r,
// the two-phase containment reduction g = left * x_r * right, the finite
// coordinate sets L_coord^{b,m,r} with their canonical window lifts, the
// Gram-orthogonalized h-frames, and the cell coordinates of a coset.

#include <set>

#include "finite_level.hpp"
#include "parametrize.hpp"

namespace adlv {

// ------------------------------------------------------------------
// Cell profile

struct CellProfile {
    const FieldParams* par = nullptr;
    int n = 0;
    int k = 0;
    int r = 0;
    std::vector<int> tau;            // 1-based permutation of {1..2n}
    std::vector<LaurentElem> phi;    // entry of x_r at (i, tau(i))
    std::vector<int> varphi;         // ord phi
    SympMatrix xr;
    LaurentElem lambda;

    int tau_of(int i) const { return tau[static_cast<std::size_t>(i - 1)]; }
    int varphi_of(int i) const { return varphi[static_cast<std::size_t>(i - 1)]; }
    const LaurentElem& phi_of(int i) const { return phi[static_cast<std::size_t>(i - 1)]; }

    // entry bounds of the Iwahori subgroup and of the cell coordinates:
    // the (i,j) coordinate of the unipotent part lives on [g(i,j), h(i,j))
    int g_bound(int i, int j) const { return i > j ? 0 : 1; }
    int h_bound(int i, int j) const {
        return varphi_of(i) + (tau_of(i) < tau_of(j) ? 1 : 0) - varphi_of(j);
    }
    bool in_root_set(int i, int j) const { return i != j && g_bound(i, j) < h_bound(i, j); }
};

inline CellProfile make_cell_profile(const FieldParams& fp, int n, int k, int r) {
    case_params(n, k);  // validates n, k
    CellProfile p;
    p.par = &fp;
    p.n = n;
    p.k = k;
    p.r = r;
    int d = 2 * n;
    p.tau.assign(static_cast<std::size_t>(d), 0);
    p.phi.assign(static_cast<std::size_t>(d), LaurentElem::zero(fp));
    p.varphi.assign(static_cast<std::size_t>(d), 0);
    if (k == 0) {
        for (int i = 1; i <= d; ++i) p.tau[static_cast<std::size_t>(i - 1)] = i;
        for (int i = 1; i <= n; ++i) p.varphi[static_cast<std::size_t>(i - 1)] = (i - 1) * r;
        for (int i = n + 1; i <= d; ++i) p.varphi[static_cast<std::size_t>(i - 1)] = (i - n) * r;
        for (int i = 1; i <= d; ++i)
            p.phi[static_cast<std::size_t>(i - 1)] =
                LaurentElem::pi_pow(fp, p.varphi_of(i));
    } else {
        int nprime = n / 2;
        for (int i = 1; i <= n; ++i)
            p.tau[static_cast<std::size_t>(i - 1)] =
                ((i / 2) % 2 == 0) ? (i + 1) / 2 : n + (i + 1) / 2;
        for (int i = n + 1; i <= d; ++i)
            p.tau[static_cast<std::size_t>(i - 1)] = d + 1 - p.tau_of(d + 1 - i);
        for (int i = 1; i <= n; ++i) {
            int e = (i % 2 == 0) ? (2 * ((i + 3) / 4) - 1) * r + ((i + 3) / 4 - 1)
                                 : (2 * ((i + 2) / 4)) * r + (i + 2) / 4;
            int sign = ((p.tau_of(i) - i) % 2 == 0) ? 1 : -1;
            p.varphi[static_cast<std::size_t>(i - 1)] = e;
            p.phi[static_cast<std::size_t>(i - 1)] = LaurentElem::int_const(fp, sign).shifted(e);
        }
        for (int i = n + 1; i <= d; ++i) {
            int e = n * r + nprime - p.varphi_of(d + 1 - i);
            p.varphi[static_cast<std::size_t>(i - 1)] = e;
            p.phi[static_cast<std::size_t>(i - 1)] = LaurentElem::pi_pow(fp, e);
        }
    }
    p.xr = SympMatrix(fp, n);
    for (int i = 1; i <= d; ++i) p.xr.at(i, p.tau_of(i)) = p.phi_of(i);
    p.lambda = gsp_similitude(p.xr);  // throws unless x_r is a similitude
    return p;
}

// ------------------------------------------------------------------
// Containment reduction: write g = left * x_r * right with both factors
// in the Iwahori subgroup.  Phase one clears the tau(1)..tau(n) columns
// below their pivots by paired row operations; phase two clears the top
// n rows by paired column operations; a diagonal factor is absorbed at
// the end.  A pivot whose order deviates from ord phi_r signals an input
// outside the cell.

struct SchubertFactors {
    SympMatrix left;
    SympMatrix right;
    long steps = 0;
};

namespace detail {

inline void check_iwahori_coeff(const LaurentElem& c, int i, int j) {
    int need = (i > j) ? 0 : 1;
    if (!c.val_at_least(need))
        throw PivotCollapse("containment reduction: coefficient at (" + std::to_string(i) + "," +
                            std::to_string(j) + ") falls outside the Iwahori bound");
}

}  // namespace detail

inline SchubertFactors schubert_reduce(const SympMatrix& g0, const CellProfile& p) {
    const FieldParams& fp = *g0.par;
    int n = g0.n;
    int d = 2 * n;
    if (n != p.n) throw PreconditionViolated("schubert_reduce: dimension mismatch");
    SchubertFactors out;
    out.left = SympMatrix::identity(fp, n);
    out.right = SympMatrix::identity(fp, n);
    SympMatrix cur = g0;

    auto pivot_inverse = [&](int i) {
        const LaurentElem& piv = cur.at(i, p.tau_of(i));
        auto vo = piv.try_valuation();
        if (!vo || *vo != p.varphi_of(i))
            throw PivotCollapse("containment reduction: pivot order at row " + std::to_string(i) +
                                " deviates from the cell profile");
        return ls_invert(piv);
    };

    // phase one: clear column tau(j) on rows j < i <= 2n+1-j
    for (int j = 1; j <= n; ++j) {
        LaurentElem inv = pivot_inverse(j);
        for (int i = j + 1; i <= d + 1 - j; ++i) {
            if (cur.at(i, p.tau_of(j)).known_zero()) continue;
            LaurentElem c = ls_neg(ls_mul(cur.at(i, p.tau_of(j)), inv));
            detail::check_iwahori_coeff(c, i, j);
            SympMatrix E = elem_symp(fp, n, i, j, c);          // adds c * row j to row i
            cur = mat_mul(E, cur);
            out.left = mat_mul(out.left, elem_symp(fp, n, i, j, ls_neg(c)));
            ++out.steps;
        }
    }

    // phase two: write cur = N * Q * x_r where Q lies in the conjugate
    // x_r I x_r^{-1} (entry (a,b) of that group has order at least
    // h(a,b)) and N is a product of coordinate-root factors, each in I.
    // Each sweep absorbs the below-window head of an entry of
    // P = cur * x_r^{-1} into a left factor at the same position.
    SympMatrix P = mat_mul(cur, mat_inverse(p.xr));
    SympMatrix N = SympMatrix::identity(fp, n);
    auto head_below = [&](const LaurentElem& a, int e0) {
        LaurentElem t(fp);
        t.prec = a.prec;  // the head is known wherever a is
        for (std::size_t i = 0; i < a.coeffs.size(); ++i) {
            int e = a.vmin + static_cast<int>(i);
            if (e >= e0 || a.coeffs[i] == 0) continue;
            if (t.coeffs.empty()) t.vmin = e;
            t.coeffs.resize(static_cast<std::size_t>(e - t.vmin) + 1, 0);
            t.coeffs[static_cast<std::size_t>(e - t.vmin)] = a.coeffs[i];
        }
        return t;
    };
    for (int a = 1; a <= d; ++a) {
        auto vo = P.at(a, a).try_valuation();
        if (!vo || *vo != 0)
            throw PivotCollapse("containment reduction: non-unit diagonal remainder");
    }
    bool clean = false;
    for (int sweep = 0; sweep < 4 * fp.prec + 8 && !clean; ++sweep) {
        clean = true;
        for (int a = 1; a <= d; ++a)
            for (int bcol = 1; bcol <= d; ++bcol) {
                if (a == bcol) continue;
                LaurentElem head = head_below(P.at(a, bcol), p.h_bound(a, bcol));
                if (head.known_zero()) continue;
                int o = head.valuation();
                // absorb through a row c whose entry in this column is
                // deep enough that the factor at (a, c) stays in I
                int pick = 0;
                for (int c = 1; c <= d && pick == 0; ++c) {
                    if (c == a) continue;
                    auto oc = P.at(c, bcol).try_valuation();
                    if (oc && o - *oc >= p.g_bound(a, c)) pick = c;
                }
                if (pick == 0)
                    throw PivotCollapse("containment reduction: entry at (" + std::to_string(a) +
                                        "," + std::to_string(bcol) +
                                        ") cannot be absorbed within the Iwahori bound");
                LaurentElem t = ls_div(head, P.at(pick, bcol));
                P = mat_mul(elem_symp(fp, n, a, pick, ls_neg(t)), P);
                N = mat_mul(N, elem_symp(fp, n, a, pick, t));
                ++out.steps;
                clean = false;
            }
    }
    if (!clean)
        throw ShapeViolation("containment reduction: window absorption did not stabilize");
    out.left = mat_mul(out.left, N);
    out.right = mat_mul(mat_inverse(p.xr), mat_mul(P, p.xr));
    return out;
}

// ------------------------------------------------------------------
// Finite coordinate sets

struct CoordTables {
    std::vector<int> alpha, beta, gamma;  // 2n entries, 1-based via of()
    int of(const std::vector<int>& t, int i) const { return t[static_cast<std::size_t>(i - 1)]; }
    int alpha_of(int i) const { return of(alpha, i); }
    int beta_of(int i) const { return of(beta, i); }
    int gamma_of(int i) const { return of(gamma, i); }
};

inline CoordTables coord_tables(const CellProfile& p, int m) {
    int n = p.n, d = 2 * n;
    CoordTables t;
    t.alpha.assign(static_cast<std::size_t>(d), 0);
    t.beta.assign(static_cast<std::size_t>(d), 0);
    t.gamma.assign(static_cast<std::size_t>(d), 0);
    for (int i = 1; i <= d; ++i) {
        if (p.k == 1 && n % 2 == 0 && i > n && i % 2 == 1) t.alpha[static_cast<std::size_t>(i - 1)] = 1;
        int b;
        if (p.k == 0)
            b = m + p.r;
        else if (n % 2 == 0)
            b = (i > n || i % 2 == 1) ? m + p.r + 1 : m + p.r;
        else
            b = (i % 2 == 1) ? m + p.r + 1 : m + p.r;
        t.beta[static_cast<std::size_t>(i - 1)] = b;
        t.gamma[static_cast<std::size_t>(i - 1)] = m + p.varphi_of(i);
    }
    return t;
}

struct LcoordSet {
    CellProfile prof;
    int m = 0;
    CoordTables tab;
    std::vector<TruncatedLatticePoint> points;  // first coordinate pinned to 1
    long base_count = 0;                        // size of the level-(m+r+k) truncation
    long lprime_count = 0;                      // distinct beta-truncations
    long ext_count = 1;                         // free extensions tried per truncation
};

// canonical coefficient windows of a coordinate point
inline std::vector<Window> lcoord_windows(const CellProfile& p, const CoordTables& t) {
    std::vector<Window> w(static_cast<std::size_t>(2 * p.n));
    w[0] = {0, 1};  // the normalized leading slot
    for (int i = 2; i <= 2 * p.n; ++i)
        w[static_cast<std::size_t>(i - 1)] = {t.alpha_of(i), t.gamma_of(i)};
    return w;
}

inline LcoordSet enumerate_Lcoord(const FieldParams& fp, const SympMatrix& b, int m, int r,
                                  long budget = 100000000L) {
    const FqField& F = *fp.F;
    int n = b.n;
    int k = kottwitz(b);
    if (r + k < m + 1) throw PreconditionViolated("enumerate_Lcoord requires r+k >= m+1");
    LcoordSet out;
    out.prof = make_cell_profile(fp, n, k, r);
    out.m = m;
    out.tab = coord_tables(out.prof, m);
    int d = 2 * n;

    // the beta-truncation of the lattice set is the level-h set, h = m+r+k,
    // cut down to leading coordinate exactly 1
    int h = m + r + k;
    LevelSetSpec spec = lbh_spec(n, k, h);
    std::vector<FixedSlot> pins;
    pins.push_back({1, 0, F.one()});
    for (int e = 1; e < spec.window(1).hi; ++e) pins.push_back({1, e, 0});
    FinitePointSet base = enumerate_level_set(fp, b, spec, budget, pins);
    out.base_count = base.count();

    // project to the beta windows
    auto wins = lcoord_windows(out.prof, out.tab);
    std::set<std::vector<fq_t>> seen;
    for (const auto& pt : base.points) {
        std::vector<fq_t> key;
        for (int i = 2; i <= d; ++i)
            for (int e = out.tab.alpha_of(i); e < out.tab.beta_of(i); ++e)
                key.push_back(pt.coeff(i, e));
        seen.insert(std::move(key));
    }

    // free extension over [beta, gamma), then the pairing congruences
    std::vector<int> ext;  // flattened slot list (coordinate, exponent)
    for (int i = 2; i <= d; ++i)
        for (int e = out.tab.beta_of(i); e < out.tab.gamma_of(i); ++e) ext.push_back(i * 1000 + e);
    long ext_total = 1;
    for (std::size_t t = 0; t < ext.size(); ++t) {
        ext_total *= static_cast<long>(F.size);
        if (ext_total > budget) throw BudgetExceeded("enumerate_Lcoord: extension over budget");
    }
    out.lprime_count = static_cast<long>(seen.size());
    out.ext_count = ext_total;
    int kn2 = (k * n) / 2;
    SigmaLinearOp Fop = SigmaLinearOp::F_of(b);
    for (const auto& key : seen) {
        for (long code = 0; code < ext_total; ++code) {
            TruncatedLatticePoint tp;
            tp.par = &fp;
            tp.n = n;
            tp.win = wins;
            tp.coeffs.push_back(F.one());
            std::size_t kpos = 0;
            long c = code;
            std::vector<fq_t> extv(ext.size());
            for (std::size_t t = 0; t < ext.size(); ++t) {
                extv[t] = static_cast<fq_t>(c % F.size);
                c /= F.size;
            }
            std::size_t epos = 0;
            for (int i = 2; i <= d; ++i) {
                for (int e = out.tab.alpha_of(i); e < out.tab.beta_of(i); ++e)
                    tp.coeffs.push_back(key[kpos++]);
                for (int e = out.tab.beta_of(i); e < out.tab.gamma_of(i); ++e)
                    tp.coeffs.push_back(extv[epos++]);
            }
            SympVector v = tp.lift();
            bool ok = true;
            SympVector f = v;
            for (int i = 1; i < n && ok; ++i) {
                f = Fop.apply(f);
                if (!pairing(v, f).val_at_least((n - i) * r + m + kn2)) ok = false;
            }
            if (ok) out.points.push_back(std::move(tp));
        }
    }
    std::sort(out.points.begin(), out.points.end());
    return out;
}

// ------------------------------------------------------------------
// The Gram-orthogonalized chain h_1 .. h_{2n} and the frame h_{b,r}

inline std::vector<SympVector> h_coord_chain(const SympVector& v, const SympMatrix& b) {
    const FieldParams& fp = *v.par;
    int n = v.n;
    int k = kottwitz(b);
    int d = 2 * n;
    SigmaLinearOp Vk = SigmaLinearOp::V_of(b, k);
    std::vector<SympVector> h(static_cast<std::size_t>(d), SympVector(fp, n));
    auto H = [&](int i) -> SympVector& { return h[static_cast<std::size_t>(i - 1)]; };
    H(1) = v;
    H(d) = F_pow(b, v, n);
    LaurentElem a = pairing(H(d), H(1));  // -alpha
    LaurentElem am = pairing(H(1), H(d));
    for (int i = 1; i <= n - 1; ++i) {
        SympVector fv = F_pow(b, v, n - i);
        SympVector x = vec_sub(fv, vec_scale(H(1), ls_div(pairing(H(d), fv), a)));
        x = vec_sub(x, vec_scale(H(d), ls_div(pairing(H(1), fv), am)));
        SympVector w = sigma_linear_apply(Vk, v, i);
        SympVector y = vec_sub(w, vec_scale(H(1), ls_div(pairing(H(d), w), a)));
        y = vec_sub(y, vec_scale(H(d), ls_div(pairing(H(1), w), am)));
        for (int j = n + 2 - i; j <= n; ++j) {
            LaurentElem gj = pairing(H(d + 1 - j), H(j));
            LaurentElem gjm = pairing(H(j), H(d + 1 - j));
            x = vec_sub(x, vec_scale(H(j), ls_div(pairing(H(d + 1 - j), fv), gj)));
            x = vec_sub(x, vec_scale(H(d + 1 - j), ls_div(pairing(H(j), fv), gjm)));
            y = vec_sub(y, vec_scale(H(j), ls_div(pairing(H(d + 1 - j), w), gj)));
            y = vec_sub(y, vec_scale(H(d + 1 - j), ls_div(pairing(H(j), w), gjm)));
        }
        H(n + 1 - i) = x;
        H(n + i) = y;
    }
    return h;
}

inline Frame h_br(const SympVector& v, const SympMatrix& b, int r) {
    const FieldParams& fp = *v.par;
    int n = v.n;
    int d = 2 * n;
    auto h = h_coord_chain(v, b);
    auto H = [&](int i) -> const SympVector& { return h[static_cast<std::size_t>(i - 1)]; };
    Frame fr;
    fr.kind = FrameKind::h_br;
    fr.r = r;
    fr.g = SympMatrix(fp, n);
    for (int i = 1; i <= n; ++i)
        fr.g.set_col(i, vec_scale(H(i), LaurentElem::pi_pow(fp, (i - 1) * r)));
    LaurentElem top = pairing(H(1), H(d));
    for (int i = 1; i <= n - 1; ++i) {
        LaurentElem scale = ls_div(top, pairing(H(n + 1 - i), H(n + i)));
        scale = scale.shifted(i * r);
        if ((n + i) % 2 == 0) scale = ls_neg(scale);
        fr.g.set_col(n + i, vec_scale(H(n + i), scale));
    }
    fr.g.set_col(d, vec_scale(H(d), LaurentElem::pi_pow(fp, n * r)));
    fr.lambda = gsp_similitude(fr.g);
    return fr;
}

// A_{b,r} = w_r^{-1} h_{b,r}(v)^{-1} F(h_{b,r}(v))
inline SympMatrix A_h_br(const SympVector& v, const SympMatrix& b, int r) {
    const FieldParams& fp = *v.par;
    Frame fr = h_br(v, b, r);
    SympMatrix Fg = SigmaLinearOp::F_of(b).apply(fr.g);
    SympMatrix wr = make_standard(fp, StandardKind::wr, v.n, kottwitz(b), r);
    return mat_mul(mat_inverse(wr), mat_mul(mat_inverse(fr.g), Fg));
}

// ------------------------------------------------------------------
// Cell coordinates of a coset g*I: reduce the Iwahori factor from the
// right by x_r I x_r^{-1} \cap I to the windowed normal form, then read
// the first column.  Entries are cleared from exponent
// max(g(i,j), h(i,j)) upward; window coefficients stay put.

inline SympMatrix schubert_normal_form(const SympMatrix& g0, const CellProfile& p) {
    const FieldParams& fp = *g0.par;
    int n = p.n, d = 2 * n;
    SchubertFactors f = schubert_reduce(g0, p);
    SympMatrix B = f.left;
    auto tail_from = [&](const LaurentElem& a, int e0) {
        LaurentElem t(fp);
        t.prec = a.prec;
        t.vmin = std::max(a.vmin, e0);
        for (std::size_t i = 0; i < a.coeffs.size(); ++i) {
            int e = a.vmin + static_cast<int>(i);
            if (e < e0 || a.coeffs[i] == 0) continue;
            t.coeffs.resize(static_cast<std::size_t>(e - t.vmin) + 1, 0);
            t.coeffs[static_cast<std::size_t>(e - t.vmin)] = a.coeffs[i];
        }
        t.normalize();
        return t;
    };
    int prec = fp.prec;
    for (int sweep = 0; sweep < 4 * prec + 8; ++sweep) {
        bool dirty = false;
        for (int j = 1; j <= d; ++j) {
            LaurentElem diag = B.at(j, j);
            if (!ls_eq(diag, LaurentElem::one(fp))) {
                LaurentElem s = ls_invert(diag);
                for (int a = 1; a <= d; ++a) B.at(a, j) = ls_mul(B.at(a, j), s);
                dirty = true;
            }
            for (int i = 1; i <= d; ++i) {
                if (i == j) continue;
                int f0 = std::max(p.g_bound(i, j), p.h_bound(i, j));
                LaurentElem t = tail_from(B.at(i, j), f0);
                if (t.known_zero()) continue;
                // B <- B * (1 - t E_{ij}): subtracts t * column i from column j
                for (int a = 1; a <= d; ++a)
                    B.at(a, j) = ls_sub(B.at(a, j), ls_mul(t, B.at(a, i)));
                dirty = true;
            }
        }
        if (!dirty) return B;
    }
    throw ShapeViolation("cell coordinates: window reduction did not stabilize");
}

// the coordinates recovered from the first column; entry i lives on
// [0, h(i,1)) and h(i,1) equals the gamma window bound of L_coord
inline std::vector<LaurentElem> schubert_col1(const SympMatrix& g0, const CellProfile& p) {
    SympMatrix B = schubert_normal_form(g0, p);
    std::vector<LaurentElem> out;
    for (int i = 1; i <= 2 * p.n; ++i) out.push_back(B.at(i, 1));
    return out;
}

}  // namespace adlv
