#pragma once

// GSp_{2n} over F_{q^s}((pi)) at finite precision: the symplectic form,
// similitude extraction, standard representatives (w_r, Coxeter b, special b),
// Iwahori-type congruence subgroups, the parahoric G_{x,0} pattern, and the
// sigma-linear operators F = b*sigma and V_k = pi^k sigma^{-1} b^{-1}.
//
// Matrices and vectors are 1-based (at(i,j)) to stay aligned with the usual
// matrix notation for this material.

#include <cassert>
#include <functional>
#include <vector>

#include "laurent.hpp"

namespace adlv {

// The "central line" convention: block boundary after column n, the form
// pairs index i with 2n+1-i carrying sign (-1)^{i+1}.
inline int pair_index(int i, int two_n) { return two_n + 1 - i; }
inline int pair_sign(int i) { return (i % 2 == 1) ? 1 : -1; }

struct SympVector {
    const FieldParams* par = nullptr;
    int n = 0;
    std::vector<LaurentElem> v;  // size 2n, 1-based via at()

    SympVector() = default;
    SympVector(const FieldParams& fp, int n_) : par(&fp), n(n_), v(2 * n_, LaurentElem::zero(fp)) {}

    LaurentElem& at(int i) { return v[static_cast<std::size_t>(i - 1)]; }
    const LaurentElem& at(int i) const { return v[static_cast<std::size_t>(i - 1)]; }

    static SympVector basis(const FieldParams& fp, int n_, int i) {
        SympVector r(fp, n_);
        r.at(i) = LaurentElem::one(fp);
        return r;
    }
};

struct SympMatrix {
    const FieldParams* par = nullptr;
    int n = 0;
    std::vector<LaurentElem> m;  // row-major, 2n x 2n

    SympMatrix() = default;
    SympMatrix(const FieldParams& fp, int n_)
        : par(&fp), n(n_), m(4 * n_ * n_, LaurentElem::zero(fp)) {}

    int dim() const { return 2 * n; }
    LaurentElem& at(int i, int j) { return m[static_cast<std::size_t>((i - 1) * dim() + (j - 1))]; }
    const LaurentElem& at(int i, int j) const {
        return m[static_cast<std::size_t>((i - 1) * dim() + (j - 1))];
    }

    static SympMatrix identity(const FieldParams& fp, int n_) {
        SympMatrix r(fp, n_);
        for (int i = 1; i <= 2 * n_; ++i) r.at(i, i) = LaurentElem::one(fp);
        return r;
    }

    SympVector col(int j) const {
        SympVector r(*par, n);
        for (int i = 1; i <= dim(); ++i) r.at(i) = at(i, j);
        return r;
    }
    void set_col(int j, const SympVector& c) {
        for (int i = 1; i <= dim(); ++i) at(i, j) = c.at(i);
    }
    SympVector row(int i) const {
        SympVector r(*par, n);
        for (int j = 1; j <= dim(); ++j) r.at(j) = at(i, j);
        return r;
    }
};

inline SympMatrix mat_mul(const SympMatrix& a, const SympMatrix& b) {
    SympMatrix r(*a.par, a.n);
    int d = a.dim();
    for (int i = 1; i <= d; ++i)
        for (int j = 1; j <= d; ++j) {
            LaurentElem acc = LaurentElem::zero(*a.par);
            for (int l = 1; l <= d; ++l) acc = ls_add(acc, ls_mul(a.at(i, l), b.at(l, j)));
            r.at(i, j) = acc;
        }
    return r;
}

inline SympVector mat_vec(const SympMatrix& a, const SympVector& x) {
    SympVector r(*a.par, a.n);
    int d = a.dim();
    for (int i = 1; i <= d; ++i) {
        LaurentElem acc = LaurentElem::zero(*a.par);
        for (int l = 1; l <= d; ++l) acc = ls_add(acc, ls_mul(a.at(i, l), x.at(l)));
        r.at(i) = acc;
    }
    return r;
}

inline SympMatrix mat_transpose(const SympMatrix& a) {
    SympMatrix r(*a.par, a.n);
    for (int i = 1; i <= a.dim(); ++i)
        for (int j = 1; j <= a.dim(); ++j) r.at(i, j) = a.at(j, i);
    return r;
}

inline SympVector vec_add(const SympVector& a, const SympVector& b) {
    SympVector r(*a.par, a.n);
    for (int i = 1; i <= 2 * a.n; ++i) r.at(i) = ls_add(a.at(i), b.at(i));
    return r;
}

inline SympVector vec_sub(const SympVector& a, const SympVector& b) {
    SympVector r(*a.par, a.n);
    for (int i = 1; i <= 2 * a.n; ++i) r.at(i) = ls_sub(a.at(i), b.at(i));
    return r;
}

inline SympVector vec_scale(const SympVector& a, const LaurentElem& c) {
    SympVector r(*a.par, a.n);
    for (int i = 1; i <= 2 * a.n; ++i) r.at(i) = ls_mul(a.at(i), c);
    return r;
}

inline SympMatrix mat_scale(const SympMatrix& a, const LaurentElem& c) {
    SympMatrix r = a;
    for (auto& e : r.m) e = ls_mul(e, c);
    return r;
}

inline SympVector vec_frobenius(const SympVector& a, int e) {
    SympVector r = a;
    for (auto& x : r.v) x = frobenius(x, e);
    return r;
}

inline SympMatrix mat_frobenius(const SympMatrix& a, int e) {
    SympMatrix r = a;
    for (auto& x : r.m) x = frobenius(x, e);
    return r;
}

// Gaussian elimination with minimal-valuation pivoting.
inline SympMatrix mat_inverse(const SympMatrix& a) {
    int d = a.dim();
    SympMatrix L = a;
    SympMatrix R = SympMatrix::identity(*a.par, a.n);
    for (int c = 1; c <= d; ++c) {
        int piv = 0, pv = 0;
        for (int i = c; i <= d; ++i) {
            auto vo = L.at(i, c).try_valuation();
            if (vo && (piv == 0 || *vo < pv)) { piv = i; pv = *vo; }
        }
        if (piv == 0) throw NotInvertible("mat_inverse: no usable pivot in column " +
                                          std::to_string(c));
        if (piv != c) {
            for (int j = 1; j <= d; ++j) {
                std::swap(L.at(c, j), L.at(piv, j));
                std::swap(R.at(c, j), R.at(piv, j));
            }
        }
        LaurentElem inv = ls_invert(L.at(c, c));
        for (int j = 1; j <= d; ++j) {
            L.at(c, j) = ls_mul(L.at(c, j), inv);
            R.at(c, j) = ls_mul(R.at(c, j), inv);
        }
        for (int i = 1; i <= d; ++i) {
            if (i == c) continue;
            LaurentElem f = L.at(i, c);
            if (f.known_zero()) continue;
            for (int j = 1; j <= d; ++j) {
                L.at(i, j) = ls_sub(L.at(i, j), ls_mul(f, L.at(c, j)));
                R.at(i, j) = ls_sub(R.at(i, j), ls_mul(f, R.at(c, j)));
            }
        }
    }
    return R;
}

inline SympMatrix omega_matrix(const FieldParams& fp, int n) {
    SympMatrix r(fp, n);
    for (int j = 1; j <= 2 * n; ++j)
        r.at(pair_index(j, 2 * n), j) = LaurentElem::int_const(fp, pair_sign(j));
    return r;
}

// <u, v> = u^T Omega v
inline LaurentElem pairing(const SympVector& u, const SympVector& v) {
    const FieldParams& fp = *u.par;
    LaurentElem acc = LaurentElem::zero(fp);
    int d = 2 * u.n;
    for (int j = 1; j <= d; ++j) {
        LaurentElem t = ls_mul(u.at(pair_index(j, d)), v.at(j));
        acc = pair_sign(j) > 0 ? ls_add(acc, t) : ls_sub(acc, t);
    }
    return acc;
}

struct SimilitudeResult {
    bool ok = false;
    LaurentElem lambda;
    std::string reason;
};

// lambda with M^T Omega M = lambda * Omega, checked on all entries.
inline SimilitudeResult try_similitude(const SympMatrix& M) {
    const FieldParams& fp = *M.par;
    int d = M.dim();
    SympMatrix G = mat_mul(mat_transpose(M), mat_mul(omega_matrix(fp, M.n), M));
    SimilitudeResult res;
    // candidate from the (1, 2n) slot: Omega_{1,2n} = -1
    LaurentElem cand = ls_neg(G.at(1, d));
    if (!cand.try_valuation()) {
        res.reason = "similitude factor not determinable at precision";
        return res;
    }
    SympMatrix Om = omega_matrix(fp, M.n);
    for (int i = 1; i <= d; ++i)
        for (int j = 1; j <= d; ++j) {
            if (!ls_eq(G.at(i, j), ls_mul(cand, Om.at(i, j)))) {
                res.reason = "Gram mismatch at (" + std::to_string(i) + "," +
                             std::to_string(j) + ")";
                return res;
            }
        }
    res.ok = true;
    res.lambda = cand;
    return res;
}

inline LaurentElem gsp_similitude(const SympMatrix& M) {
    auto r = try_similitude(M);
    if (!r.ok) throw NotSimilitude("gsp_similitude: " + r.reason);
    return r.lambda;
}

inline int kottwitz(const SympMatrix& M) { return ls_valuation(gsp_similitude(M)); }

enum class StandardKind { wr, coxeter_b, special_b, Ak, b0 };

inline SympMatrix make_standard(const FieldParams& fp, StandardKind kind, int n, int k, int r = 0) {
    if (k != 0 && k != 1) throw UnsupportedK("make_standard: k must be 0 or 1");
    SympMatrix M(fp, n);
    int d = 2 * n;
    switch (kind) {
        case StandardKind::wr: {
            int sign = (n % 2 == 0) ? -1 : 1;  // (-1)^{n+1}
            M.at(1, n + 1) = LaurentElem::pi_pow(fp, r + k, sign > 0 ? fp.F->one() : fp.F->neg(fp.F->one()));
            for (int i = 2; i <= n; ++i) M.at(i, i - 1) = LaurentElem::pi_pow(fp, -r);
            for (int i = n + 1; i <= 2 * n - 1; ++i) M.at(i, i + 1) = LaurentElem::pi_pow(fp, r + k);
            M.at(d, n) = LaurentElem::pi_pow(fp, -r);
            break;
        }
        case StandardKind::b0: {
            int sign = (n % 2 == 0) ? -1 : 1;
            M.at(1, n + 1) = LaurentElem::int_const(fp, sign);
            for (int i = 2; i <= n; ++i) M.at(i, i - 1) = LaurentElem::one(fp);
            for (int i = n + 1; i <= 2 * n - 1; ++i) M.at(i, i + 1) = LaurentElem::one(fp);
            M.at(d, n) = LaurentElem::one(fp);
            break;
        }
        case StandardKind::Ak: {
            for (int i = 1; i <= d; ++i)
                M.at(i, i) = (i % 2 == 0) ? LaurentElem::pi_pow(fp, k) : LaurentElem::one(fp);
            break;
        }
        case StandardKind::coxeter_b:
            return mat_mul(make_standard(fp, StandardKind::b0, n, k),
                           make_standard(fp, StandardKind::Ak, n, k));
        case StandardKind::special_b: {
            if (k == 0) {
                for (int i = 1; i <= n; ++i) M.at(i, i) = LaurentElem::one(fp);
                for (int i = n + 1; i <= d; ++i) M.at(i, i) = LaurentElem::int_const(fp, -1);
            } else {
                for (int blk = 0; blk < n; ++blk) {
                    M.at(2 * blk + 1, 2 * blk + 2) = LaurentElem::pi_pow(fp, 1);
                    M.at(2 * blk + 2, 2 * blk + 1) = LaurentElem::one(fp);
                }
            }
            break;
        }
    }
    return M;
}

// Elementary symplectic transvection-type matrices:
//   j != 2n+1-i:  1 + c e_{i,j} + (-1)^{i-j+1} c e_{2n+1-j, 2n+1-i}
//   j == 2n+1-i:  1 + c e_{i, 2n+1-i}
inline SympMatrix elem_symp(const FieldParams& fp, int n, int i, int j, const LaurentElem& c) {
    SympMatrix P = SympMatrix::identity(fp, n);
    int d = 2 * n;
    if (j == pair_index(i, d)) {
        P.at(i, j) = ls_add(P.at(i, j), c);
    } else {
        P.at(i, j) = ls_add(P.at(i, j), c);
        LaurentElem c2 = ((i - j + 1) % 2 == 0) ? c : ls_neg(c);
        P.at(pair_index(j, d), pair_index(i, d)) =
            ls_add(P.at(pair_index(j, d), pair_index(i, d)), c2);
    }
    return P;
}

// ------------------------------------------------------------------
// Congruence patterns

enum class DiagFlag { unit, one_plus_pm1, none };

struct CongruencePattern {
    enum class Kind { iwahori, dotted_iwahori, parahoric_gx0, custom };
    Kind kind = Kind::custom;
    int n = 0;
    int m = 0;
    std::vector<int> lower;  // (2n)^2 valuation lower bounds, row-major
    DiagFlag diag = DiagFlag::none;
    bool require_unit_lambda = false;

    int bound(int i, int j) const { return lower[static_cast<std::size_t>((i - 1) * 2 * n + (j - 1))]; }
    int& bound(int i, int j) { return lower[static_cast<std::size_t>((i - 1) * 2 * n + (j - 1))]; }
};

inline CongruencePattern iwahori_pattern(int n, int m, bool dotted = false) {
    CongruencePattern p;
    p.kind = dotted ? CongruencePattern::Kind::dotted_iwahori : CongruencePattern::Kind::iwahori;
    p.n = n;
    p.m = m;
    p.lower.assign(static_cast<std::size_t>(4 * n * n), 0);
    for (int i = 1; i <= 2 * n; ++i)
        for (int j = 1; j <= 2 * n; ++j)
            p.bound(i, j) = (i < j) ? m + 1 : (i > j ? m : 0);
    p.diag = dotted ? DiagFlag::one_plus_pm1 : DiagFlag::unit;
    return p;
}

// barycenter weights of the fixed point of b on the apartment, times 4
// (the odd-n weights are quarter-integers).  The entry bound of G_{x,0}
// at (i,j) is ceil(w_j - w_i).
inline std::vector<int> gx0_weights4(int n, int k) {
    std::vector<int> w4(static_cast<std::size_t>(2 * n), 0);
    if (k == 0) return w4;
    auto add_coroot = [&](int i, int c) {  // c = 4 * coefficient of alpha_i-vee
        w4[i - 1] += c;
        w4[i] -= c;
        w4[2 * n - i - 1] += c;
        w4[2 * n - i] -= c;
    };
    auto add_beta = [&](int c) {
        w4[n - 1] += c;
        w4[n] -= c;
    };
    if (n % 2 == 0) {
        int m = n / 2;
        for (int j = 1; j <= m - 1; ++j) {
            add_coroot(2 * j, 2 * j * k);
            add_coroot(2 * j + 1, 2 * j * k);
        }
        add_beta(2 * m * k);
    } else {
        for (int i = 1; i <= n - 2; i += 2) add_coroot(i, -k);
        add_beta(-k);
    }
    return w4;
}

inline CongruencePattern gx0_pattern(int n, int k) {
    if (k != 0 && k != 1) throw UnsupportedK("gx0_pattern: k must be 0 or 1");
    CongruencePattern p;
    p.kind = CongruencePattern::Kind::parahoric_gx0;
    p.n = n;
    p.m = 0;
    p.lower.assign(static_cast<std::size_t>(4 * n * n), 0);
    auto w4 = gx0_weights4(n, k);
    for (int i = 1; i <= 2 * n; ++i)
        for (int j = 1; j <= 2 * n; ++j) {
            int diff4 = w4[j - 1] - w4[i - 1];  // 4*(w_j - w_i)
            p.bound(i, j) = diff4 >= 0 ? (diff4 + 3) / 4 : -((-diff4) / 4);
        }
    p.diag = DiagFlag::none;
    p.require_unit_lambda = true;
    return p;
}

inline bool bounds_member(const SympMatrix& M, const CongruencePattern& pat) {
    int d = M.dim();
    for (int i = 1; i <= d; ++i)
        for (int j = 1; j <= d; ++j)
            if (!M.at(i, j).val_at_least(pat.bound(i, j))) return false;
    return true;
}

inline bool congruence_member(const SympMatrix& M, const CongruencePattern& pat) {
    const FieldParams& fp = *M.par;
    int d = M.dim();
    if (pat.kind == CongruencePattern::Kind::parahoric_gx0) {
        // units of the order cut out by the entry bounds, with unit similitude:
        // the bounds must hold for the matrix and for its inverse
        if (!bounds_member(M, pat)) return false;
        try {
            if (!bounds_member(mat_inverse(M), pat)) return false;
        } catch (const NotInvertible&) {
            return false;
        }
        auto sim0 = try_similitude(M);
        return sim0.ok && ls_valuation(sim0.lambda) == 0;
    }
    for (int i = 1; i <= d; ++i)
        for (int j = 1; j <= d; ++j) {
            if (i == j && pat.diag != DiagFlag::none) {
                if (pat.diag == DiagFlag::unit) {
                    auto vo = M.at(i, i).try_valuation();
                    if (!vo) {
                        if (M.at(i, i).prec <= 0)
                            throw InsufficientPrecision("congruence_member: diagonal undecidable");
                        return false;  // known zero deep enough: not a unit
                    }
                    if (*vo != 0) return false;
                } else {
                    LaurentElem d1 = ls_sub(M.at(i, i), LaurentElem::one(fp));
                    if (!d1.val_at_least(pat.m + 1)) return false;
                }
            } else {
                if (!M.at(i, j).val_at_least(pat.bound(i, j))) return false;
            }
        }
    auto sim = try_similitude(M);
    if (!sim.ok) return false;
    if (pat.require_unit_lambda && ls_valuation(sim.lambda) != 0) return false;
    return true;
}

// ------------------------------------------------------------------
// sigma-linear operators: x -> scal * A * sigma^e(x)

struct SigmaLinearOp {
    SympMatrix A;
    int frob_power = 0;
    LaurentElem scal;

    static SigmaLinearOp F_of(const SympMatrix& b) {
        SigmaLinearOp op{b, 1, LaurentElem::one(*b.par)};
        return op;
    }
    // V_k = pi^k sigma^{-1} b^{-1}:  v -> pi^k sigma^{-1}(b^{-1}) sigma^{-1}(v)
    static SigmaLinearOp V_of(const SympMatrix& b, int k) {
        SigmaLinearOp op{mat_frobenius(mat_inverse(b), -1), -1,
                         LaurentElem::pi_pow(*b.par, k)};
        return op;
    }

    SympVector apply(const SympVector& x) const {
        return vec_scale(mat_vec(A, vec_frobenius(x, frob_power)), scal);
    }
    SympMatrix apply(const SympMatrix& x) const {
        return mat_scale(mat_mul(A, mat_frobenius(x, frob_power)), scal);
    }

    SigmaLinearOp inverse() const {
        // (scal * A * sigma^e)^{-1} = scal'^{-1} A' sigma^{-e} with
        // A' = sigma^{-e}(A^{-1}), scal' = sigma^{-e}(scal)
        SigmaLinearOp op{mat_frobenius(mat_inverse(A), -frob_power), -frob_power,
                         ls_invert(frobenius(scal, -frob_power))};
        return op;
    }
};

template <typename T>
inline T sigma_linear_apply(const SigmaLinearOp& op, const T& x, int power) {
    if (power == 0) return x;
    SigmaLinearOp use = power > 0 ? op : op.inverse();
    int times = power > 0 ? power : -power;
    T r = x;
    for (int i = 0; i < times; ++i) r = use.apply(r);
    return r;
}

// sigma(P)^{-1} C P
inline SympMatrix sigma_conjugate(const SympMatrix& P, const SympMatrix& C) {
    return mat_mul(mat_inverse(mat_frobenius(P, 1)), mat_mul(C, P));
}

}  // namespace adlv
