#pragma once

// Finite-precision Laurent series over F_{q^s}: the computational model of
// the equal-characteristic local field F_{q^s}((pi)).
//
// An element knows its coefficients on a window [vmin, vmin+len) and an
// absolute precision `prec`: coefficients at exponents >= prec are unknown,
// exponents below the window are zero.  Exact elements (constants, monomials,
// entries of standard matrices) carry prec = EXACT_PREC.  Every operation
// records the precision it can guarantee.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "errors.hpp"
#include "finite_field.hpp"

namespace adlv {

constexpr int EXACT_PREC = 1 << 24;

struct FieldParams {
    int p;      // residue characteristic
    int q;      // residue field size of K (prime here)
    int s;      // coefficients live in F_{q^s}
    int prec;   // default working precision
    const FqField* F;  // F_{q^s} tables

    static const FieldParams& get(int q, int s, int prec) {
        static std::map<std::tuple<int, int, int>, std::unique_ptr<FieldParams>> cache;
        auto key = std::make_tuple(q, s, prec);
        auto it = cache.find(key);
        if (it == cache.end()) {
            auto fp = std::make_unique<FieldParams>();
            fp->p = q;
            fp->q = q;
            fp->s = s;
            fp->prec = prec;
            fp->F = &FqField::get(q, s);
            it = cache.emplace(key, std::move(fp)).first;
        }
        return *it->second;
    }
};

class LaurentElem {
public:
    const FieldParams* par = nullptr;
    int vmin = 0;
    int prec = EXACT_PREC;
    std::vector<fq_t> coeffs;  // exponents vmin .. vmin+len-1

    LaurentElem() = default;
    explicit LaurentElem(const FieldParams& fp) : par(&fp) {}

    static LaurentElem zero(const FieldParams& fp) { return LaurentElem(fp); }

    static LaurentElem one(const FieldParams& fp) { return constant(fp, fp.F->one()); }

    static LaurentElem constant(const FieldParams& fp, fq_t c) {
        LaurentElem r(fp);
        if (c != 0) { r.vmin = 0; r.coeffs = {c}; }
        return r;
    }

    static LaurentElem pi_pow(const FieldParams& fp, int e, fq_t c = 1) {
        LaurentElem r(fp);
        if (c != 0) { r.vmin = e; r.coeffs = {c}; }
        return r;
    }

    static LaurentElem int_const(const FieldParams& fp, long long v) {
        long long m = ((v % fp.p) + fp.p) % fp.p;
        fq_t c = 0;
        for (long long i = 0; i < m; ++i) c = fp.F->add(c, fp.F->one());
        return constant(fp, c);
    }

    bool compatible(const LaurentElem& o) const { return par == o.par; }

    fq_t coeff(int e) const {
        if (e >= prec) throw InsufficientPrecision("coefficient beyond precision");
        if (e < vmin || e >= vmin + static_cast<int>(coeffs.size())) return 0;
        return coeffs[e - vmin];
    }

    bool known(int e) const { return e < prec; }

    // all coefficients known on [vmin_window, prec) are zero
    bool known_zero() const {
        for (fq_t c : coeffs)
            if (c != 0) return false;
        return true;
    }

    bool exact_zero() const { return prec >= EXACT_PREC && known_zero(); }

    std::optional<int> try_valuation() const {
        for (std::size_t i = 0; i < coeffs.size(); ++i)
            if (coeffs[i] != 0) return vmin + static_cast<int>(i);
        return std::nullopt;
    }

    int valuation() const {
        auto v = try_valuation();
        if (v) return *v;
        throw InsufficientPrecision(prec >= EXACT_PREC
                                        ? "valuation of exact zero"
                                        : "no nonzero coefficient before precision");
    }

    // ord >= m certified?  false if a known coefficient below m is nonzero,
    // true if precision covers [.., m); otherwise undecidable.
    bool val_at_least(int m) const {
        for (std::size_t i = 0; i < coeffs.size(); ++i)
            if (coeffs[i] != 0 && vmin + static_cast<int>(i) < m) return false;
        if (prec >= m) return true;
        throw InsufficientPrecision("valuation bound " + std::to_string(m) +
                                    " exceeds precision " + std::to_string(prec));
    }

    bool is_unit() const {
        auto v = try_valuation();
        return v && *v == 0;
    }

    LaurentElem truncated(int new_prec) const {
        LaurentElem r(*par);
        r.prec = std::min(prec, new_prec);
        r.vmin = vmin;
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            int e = vmin + static_cast<int>(i);
            if (e >= r.prec) break;
            r.coeffs.push_back(coeffs[i]);
        }
        r.normalize();
        return r;
    }

    LaurentElem shifted(int e) const {  // multiply by pi^e
        LaurentElem r = *this;
        r.vmin += e;
        if (r.prec < EXACT_PREC) r.prec += e;
        return r;
    }

    void normalize() {
        std::size_t a = 0, b = coeffs.size();
        while (a < b && coeffs[a] == 0) ++a;
        while (b > a && coeffs[b - 1] == 0) --b;
        if (a > 0 || b < coeffs.size()) {
            coeffs = std::vector<fq_t>(coeffs.begin() + a, coeffs.begin() + b);
            vmin += static_cast<int>(a);
        }
        if (coeffs.empty()) vmin = 0;
    }

    // lower bound for the valuation used in precision bookkeeping
    int vbound() const {
        auto v = try_valuation();
        if (v) return *v;
        return std::min(prec, EXACT_PREC);
    }

    std::string str() const {
        if (coeffs.empty()) return prec >= EXACT_PREC ? "0" : "O(pi^" + std::to_string(prec) + ")";
        std::string s;
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            if (coeffs[i] == 0) continue;
            if (!s.empty()) s += " + ";
            int e = vmin + static_cast<int>(i);
            s += std::to_string(coeffs[i]);
            if (e != 0) s += "*pi^" + std::to_string(e);
        }
        if (prec < EXACT_PREC) s += " + O(pi^" + std::to_string(prec) + ")";
        return s;
    }
};

inline LaurentElem ls_add(const LaurentElem& a, const LaurentElem& b) {
    LaurentElem r(*a.par);
    r.prec = std::min(a.prec, b.prec);
    int lo = std::min(a.vmin, b.vmin);
    int hi_a = a.vmin + static_cast<int>(a.coeffs.size());
    int hi_b = b.vmin + static_cast<int>(b.coeffs.size());
    int hi = std::min(std::max(hi_a, hi_b), r.prec);
    if (hi > lo) {
        r.vmin = lo;
        r.coeffs.assign(static_cast<std::size_t>(hi - lo), 0);
        const FqField& F = *a.par->F;
        for (int e = lo; e < hi; ++e) {
            fq_t ca = (e >= a.vmin && e < hi_a) ? a.coeffs[e - a.vmin] : 0;
            fq_t cb = (e >= b.vmin && e < hi_b) ? b.coeffs[e - b.vmin] : 0;
            r.coeffs[e - lo] = F.add(ca, cb);
        }
    }
    r.normalize();
    return r;
}

inline LaurentElem ls_neg(const LaurentElem& a) {
    LaurentElem r = a;
    for (auto& c : r.coeffs) c = a.par->F->neg(c);
    return r;
}

inline LaurentElem ls_sub(const LaurentElem& a, const LaurentElem& b) {
    return ls_add(a, ls_neg(b));
}

inline LaurentElem ls_mul(const LaurentElem& a, const LaurentElem& b) {
    LaurentElem r(*a.par);
    long long pr = std::min(static_cast<long long>(a.prec) + b.vbound(),
                            static_cast<long long>(b.prec) + a.vbound());
    // exact times exact stays exact; a finite vmin must not erode the sentinel
    if (pr >= EXACT_PREC / 2) pr = EXACT_PREC;
    r.prec = static_cast<int>(std::min(pr, static_cast<long long>(EXACT_PREC)));
    if (a.coeffs.empty() || b.coeffs.empty()) return r;
    int lo = a.vmin + b.vmin;
    int hi = std::min(lo + static_cast<int>(a.coeffs.size() + b.coeffs.size()) - 1, r.prec);
    if (hi <= lo && r.prec <= lo) return r;
    hi = std::max(hi, lo);
    r.vmin = lo;
    r.coeffs.assign(static_cast<std::size_t>(hi - lo), 0);
    const FqField& F = *a.par->F;
    for (std::size_t i = 0; i < a.coeffs.size(); ++i) {
        if (a.coeffs[i] == 0) continue;
        for (std::size_t j = 0; j < b.coeffs.size(); ++j) {
            if (b.coeffs[j] == 0) continue;
            int e = a.vmin + static_cast<int>(i) + b.vmin + static_cast<int>(j);
            if (e >= r.prec) break;
            r.coeffs[e - lo] = F.add(r.coeffs[e - lo], F.mul(a.coeffs[i], b.coeffs[j]));
        }
    }
    r.normalize();
    return r;
}

inline LaurentElem ls_scal(const LaurentElem& a, fq_t c) {
    LaurentElem r = a;
    const FqField& F = *a.par->F;
    for (auto& x : r.coeffs) x = F.mul(x, c);
    r.normalize();
    return r;
}

// a^{-1}.  For exact inputs the result is computed to `want_prec`
// (default: the params' working precision, shifted by the valuation);
// exact monomials invert exactly.
inline LaurentElem ls_invert(const LaurentElem& a, int want_prec = -1) {
    auto vo = a.try_valuation();
    if (!vo)
        throw InsufficientPrecision("ls_invert: no visible nonzero coefficient");
    int v = *vo;
    const FqField& F = *a.par->F;
    // monomial with exact zero tail
    bool monomial = a.prec >= EXACT_PREC;
    if (monomial) {
        for (std::size_t i = 0; i < a.coeffs.size(); ++i)
            if (a.coeffs[i] != 0 && a.vmin + static_cast<int>(i) != v) { monomial = false; break; }
    }
    if (monomial) {
        return LaurentElem::pi_pow(*a.par, -v, F.inv(a.coeff(v)));
    }
    int rel;  // number of result coefficients beyond exponent -v
    if (a.prec >= EXACT_PREC / 2) {
        int target = want_prec >= 0 ? want_prec : a.par->prec - v;
        rel = std::max(1, target + v);
    } else {
        rel = a.prec - 2 * v + v;  // abs prec a.prec - 2v, starting at -v
    }
    if (rel <= 0)
        throw InsufficientPrecision("ls_invert: precision exhausted by valuation");
    LaurentElem r(*a.par);
    r.vmin = -v;
    r.prec = (a.prec >= EXACT_PREC / 2) ? -v + rel : a.prec - 2 * v;
    r.coeffs.assign(static_cast<std::size_t>(rel), 0);
    // invert the unit part u with u_0 = a_{v}: standard series division
    fq_t u0inv = F.inv(a.coeff(v));
    r.coeffs[0] = u0inv;
    for (int m = 1; m < rel; ++m) {
        fq_t acc = 0;
        for (int t = 1; t <= m; ++t) {
            fq_t at = (v + t < a.prec) ? a.coeff(v + t) : 0;
            if (at == 0) continue;
            acc = F.add(acc, F.mul(at, r.coeffs[m - t]));
        }
        r.coeffs[m] = F.neg(F.mul(acc, u0inv));
    }
    r.normalize();
    return r;
}

inline LaurentElem ls_div(const LaurentElem& a, const LaurentElem& b) {
    return ls_mul(a, ls_invert(b));
}

inline int ls_valuation(const LaurentElem& a) { return a.valuation(); }

// sigma^e: q-power Frobenius on coefficients, pi fixed
inline LaurentElem frobenius(const LaurentElem& a, int e) {
    LaurentElem r = a;
    const FqField& F = *a.par->F;
    int steps = ((e % a.par->s) + a.par->s) % a.par->s;
    for (auto& c : r.coeffs) c = F.frob(c, steps);
    return r;
}

// [.]-lift on the window [i, j): exact, idempotent, [0] = 0
inline LaurentElem canonical_lift(const LaurentElem& a, int i, int j) {
    if (j <= i) throw WindowOutOfRange("canonical_lift: empty window");
    if (j > a.prec) throw WindowOutOfRange("canonical_lift: window beyond precision");
    LaurentElem r(*a.par);
    r.vmin = i;
    r.coeffs.assign(static_cast<std::size_t>(j - i), 0);
    for (int e = std::max(i, a.vmin); e < j; ++e) {
        if (e >= a.vmin + static_cast<int>(a.coeffs.size())) break;
        r.coeffs[e - i] = a.coeffs[e - a.vmin];
    }
    r.normalize();
    return r;
}

// equality of all coefficients both sides can certify
inline bool ls_eq(const LaurentElem& a, const LaurentElem& b) {
    return ls_sub(a, b).known_zero();
}

inline bool ls_is_rational(const LaurentElem& a) {  // sigma-fixed at precision
    return ls_eq(frobenius(a, 1), a);
}

}  // namespace adlv
