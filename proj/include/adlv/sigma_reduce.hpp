#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adlv/symplectic.hpp"

namespace adlv {

// sigma-conjugation elimination toward the two canonical forms:
// a matrix C with g = F(g) C is replaced by sigma(P)^{-1} C P, which is
// the corresponding matrix for gP.  Eliminations use the elementary
// symplectic matrices of elem_symp; the order of eliminations is fixed
// (later steps rely on the zeros produced by earlier ones).

enum class ReduceMode { semiinf, affine };

enum class StepKind { col, row, pair, diagonal };

struct EliminationStep {
    StepKind kind;
    int i = 0, j = 0;  // indices of the elementary matrix 1 + c e_{i,j} (+ partner)
    LaurentElem c;
};

struct ReductionResult {
    SympMatrix P;        // accumulated conjugator
    SympMatrix Cprime;   // sigma(P)^{-1} C P
    std::vector<EliminationStep> trace;
    std::vector<int> gamma_history;  // score after each first-phase sweep (affine)
    bool converged = true;

    ReductionResult(const FieldParams& fp, int n) : P(fp, n), Cprime(fp, n) {}
};

inline const char* step_kind_name(StepKind k) {
    switch (k) {
        case StepKind::col: return "col";
        case StepKind::row: return "row";
        case StepKind::pair: return "pair";
        default: return "diag";
    }
}

// one step per line: kind, i, j, val(c)
inline std::string trace_text(const ReductionResult& res) {
    std::string out;
    for (const auto& s : res.trace) {
        auto vo = s.c.try_valuation();
        out += step_kind_name(s.kind);
        out += ' ';
        out += std::to_string(s.i);
        out += ' ';
        out += std::to_string(s.j);
        out += ' ';
        out += vo ? std::to_string(*vo) : std::string("inf");
        out += '\n';
    }
    return out;
}

// row of the invertible "chain" entry of column j in the working shape
inline int chain_row(int n, int j) {
    if (j == 1) return n + 1;
    if (j <= n) return j - 1;
    if (j <= 2 * n - 1) return j + 1;
    return n;
}

// pi-exponent carried by column j of the affine shape
inline int column_scale(int n, int j, int r, int k) {
    return (j == 1 || (j > n && j < 2 * n)) ? -(r + k) : r;
}

// ------------------------------------------------------------------
// shape checks

inline bool semiinf_shape_ok(const SympMatrix& C) {
    int n = C.n;
    for (int j = 1; j <= 2 * n; ++j) {
        int q = chain_row(n, j);
        if (!C.at(q, j).try_valuation()) return false;
        for (int i = q + 1; i <= 2 * n; ++i)
            if (!C.at(i, j).known_zero()) return false;
    }
    return true;
}

inline bool affine_shape_ok(const SympMatrix& C, int m, int r, int k) {
    int n = C.n;
    for (int j = 1; j <= 2 * n; ++j) {
        int q = chain_row(n, j);
        int s = column_scale(n, j, r, k);
        auto vo = C.at(q, j).try_valuation();
        if (!vo || *vo != s) return false;
        for (int i = 1; i <= 2 * n; ++i) {
            if (i == q) continue;
            if (!C.at(i, j).val_at_least(s + (i < q ? m + 1 : m))) return false;
        }
    }
    return true;
}

// allowed support of the canonical form (both modes share it)
inline bool canonical_slot(int n, int i, int j) {
    if (i == chain_row(n, j)) return true;
    if (i == 1 && (j == 1 || (j > n && j < 2 * n))) return true;
    if (j == 2 * n - 1 && i >= 2 && i <= n) return true;
    return false;
}

// ------------------------------------------------------------------
// elimination engine

namespace detail {

struct SigmaReducer {
    const FieldParams& fp;
    int n;
    SympMatrix C, P;
    std::vector<EliminationStep> trace;
    bool affine = false;
    int m = 0;

    SigmaReducer(const SympMatrix& C0, bool aff, int m0)
        : fp(*C0.par), n(C0.n), C(C0), P(SympMatrix::identity(*C0.par, C0.n)),
          affine(aff), m(m0) {}

    void apply_elem(StepKind kind, int i, int j, const LaurentElem& c) {
        SympMatrix E = elem_symp(fp, n, i, j, c);
        // sigma(E)^{-1} = elem_symp(i, j, -sigma(c)) exactly (the defining
        // nilpotents square to zero and annihilate each other)
        SympMatrix Einv = elem_symp(fp, n, i, j, ls_neg(frobenius(c, 1)));
        C = mat_mul(Einv, mat_mul(C, E));
        P = mat_mul(P, E);
        trace.push_back({j == pair_index(i, 2 * n) ? StepKind::pair : kind, i, j, c});
    }

    void check_coeff(int i, int j, const LaurentElem& c) {
        if (!affine) return;
        if (!c.val_at_least(i < j ? m + 1 : m))
            throw ShapeViolation("sigma reduction: elimination coefficient leaves I^m at (" +
                                 std::to_string(i) + "," + std::to_string(j) + ")");
    }

    // kill (t,u) by adding a multiple of column p (chain entry at (t,p))
    void elim_col(int t, int p, int u) {
        if (C.at(t, u).known_zero()) return;
        LaurentElem c = ls_neg(ls_div(C.at(t, u), C.at(t, p)));
        check_coeff(p, u, c);
        apply_elem(StepKind::col, p, u, c);
    }

    // kill (t,u) by subtracting a multiple of row p (chain entry at (p,u))
    void elim_row(int t, int p, int u) {
        if (C.at(t, u).known_zero()) return;
        LaurentElem sc = ls_div(C.at(t, u), C.at(p, u));
        LaurentElem c = frobenius(sc, -1);
        check_coeff(t, p, c);
        apply_elem(StepKind::row, t, p, c);
    }

    void require_zero(int i, int j, const char* what) {
        if (!C.at(i, j).known_zero())
            throw ShapeViolation(std::string("sigma reduction: expected vanishing (") + what +
                                 ") failed at (" + std::to_string(i) + "," +
                                 std::to_string(j) + ")");
    }

    void check_canonical() {
        for (int i = 1; i <= 2 * n; ++i)
            for (int j = 1; j <= 2 * n; ++j)
                if (!canonical_slot(n, i, j)) require_zero(i, j, "canonical support");
    }
};

}  // namespace detail

// ------------------------------------------------------------------
// semi-infinite reduction

inline ReductionResult reduce_semiinfinite(const SympMatrix& C0) {
    if (!semiinf_shape_ok(C0))
        throw ShapeViolation("reduce_semiinfinite: input is not in the w-coset shape");
    int n = C0.n;
    detail::SigmaReducer R(C0, false, 0);

    // columns 3..n: clear everything above the chain entry
    for (int i = 3; i <= n; ++i)
        for (int j = 2; j <= i - 1; ++j) R.elim_col(j - 1, j, i);
    // column 2n: clear rows 1..n-1
    for (int j = 2; j <= n; ++j) R.elim_col(j - 1, j, 2 * n);
    // rows n+1..2n-1 of columns n+1..2n-1 vanish via the symplectic form
    for (int i = n + 1; i <= 2 * n - 1; ++i)
        for (int j = i; j <= 2 * n - 1; ++j) R.require_zero(i, j, "column pairing");
    // rows 2..n of column 1, then of columns n+1..2n-2 (upper triangular half)
    for (int i = 2; i <= n; ++i) R.elim_row(i, n + 1, 1);
    for (int i = 1; i <= n - 2; ++i)
        for (int j = 2; j <= n - i; ++j) R.elim_row(j, n + i + 1, n + i);

    R.check_canonical();
    ReductionResult res(*C0.par, n);
    res.P = R.P;
    res.Cprime = R.C;
    res.trace = std::move(R.trace);
    return res;
}

// ------------------------------------------------------------------
// affine reduction

namespace detail {

inline std::vector<std::pair<int, int>> affine_phase1_entries(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = n + 2; i <= 2 * n; ++i) e.emplace_back(i, 1);
    for (int j = n + 1; j <= 2 * n - 2; ++j)
        for (int i = j + 2; i <= 2 * n; ++i) e.emplace_back(i, j);
    for (int j = 2; j <= n; ++j)
        for (int i = 2 * n; i >= n + 2; --i) e.emplace_back(i, j);
    return e;
}

inline int gamma_score(const SympMatrix& C, const std::vector<std::pair<int, int>>& ents,
                       int r, int k) {
    int n = C.n;
    int g = 1 << 28;
    for (auto [i, j] : ents) {
        const LaurentElem& e = C.at(i, j);
        auto vo = e.try_valuation();
        if (!vo) continue;  // already vanished at working precision
        int o = *vo - column_scale(n, j, r, k);
        if (o < g) g = o;
    }
    return g;
}

inline bool all_known_zero(const SympMatrix& C, const std::vector<std::pair<int, int>>& ents) {
    for (auto [i, j] : ents)
        if (!C.at(i, j).known_zero()) return false;
    return true;
}

}  // namespace detail

inline ReductionResult reduce_affine(const SympMatrix& C0, int m, int r, int prec) {
    const FieldParams& fp = *C0.par;
    int n = C0.n;
    int k = -ls_valuation(gsp_similitude(C0));
    if (r + k < m + 1)
        throw PreconditionViolated("reduce_affine requires r+k >= m+1");
    if (!affine_shape_ok(C0, m, r, k))
        throw ShapeViolation("reduce_affine: input is not in the w_r-coset shape");

    detail::SigmaReducer R(C0, true, m);
    ReductionResult res(fp, n);
    auto ents = detail::affine_phase1_entries(n);

    // phase 1: sweeps strictly raising the minimal normalized order of the
    // lower-left entries, until they vanish at working precision.  The later
    // vanishing assertions need the residuals to be invisible, not merely of
    // order >= prec, so the score cap only serves as an emergency brake.
    int guard = prec + 4 * n * (m + r + k + 2) + 64;
    int g = detail::gamma_score(R.C, ents, r, k);
    while (!ents.empty() && !detail::all_known_zero(R.C, ents)) {
        if (g >= prec)
            throw PrecisionExhausted(
                "reduce_affine: score cap reached with residuals still visible; "
                "raise prec above the working precision");
        if (--guard < 0) throw PrecisionExhausted("reduce_affine: sweep guard exceeded");
        for (int i = n + 2; i <= 2 * n; ++i) R.elim_row(i, n + 1, 1);
        for (int j = n + 1; j <= 2 * n - 2; ++j)
            for (int i = j + 2; i <= 2 * n; ++i) R.elim_row(i, j + 1, j);
        for (int j = 2; j <= n; ++j)
            for (int i = 2 * n + 2 - j; i >= n + 2; --i) R.elim_col(i, i - 1, j);
        for (int i = 2 * n; i >= n + 3; --i)
            for (int j = 2 * n + 3 - i; j <= n; ++j) R.elim_col(i, i - 1, j);
        int g2 = detail::gamma_score(R.C, ents, r, k);
        res.gamma_history.push_back(g2);
        if (g2 <= g && !detail::all_known_zero(R.C, ents))
            throw NoProgress("reduce_affine: sweep did not raise the score");
        g = g2;
    }
    res.converged = ents.empty() || detail::all_known_zero(R.C, ents);

    // phase 2: exact eliminations of the remaining off-support entries
    // column 2n below the middle
    for (int p = 2 * n - 1; p >= n + 1; --p) R.elim_col(p + 1, p, 2 * n);
    if (n >= 1) R.elim_col(n + 1, 1, 2 * n);
    // row n+1 is then forced by the pairing with column 2n
    for (int j = 2; j <= n; ++j) R.require_zero(n + 1, j, "row n+1 pairing");
    // interior of the lower-right block
    for (int j = 2 * n - 1; j >= n + 1; --j)
        for (int i = 2 * n - 1; i >= n + 1; --i) {
            if (i == j + 1) continue;
            if (i == n + 1) R.elim_col(n + 1, 1, j);
            else R.elim_col(i, i - 1, j);
        }
    // column 1 above the middle
    for (int i = n; i >= 2; --i) R.elim_row(i, n + 1, 1);
    // upper triangular half of rows 2..n at columns n+1..2n-2
    for (int j = n + 1; j <= 2 * n - 2; ++j)
        for (int i = 2; i <= 2 * n - j; ++i) R.elim_row(i, j + 1, j);

    R.check_canonical();
    // chain entries keep exact order r after the reduction
    for (int j = 1; j <= 2 * n; ++j) {
        if (j == 1 || (j > n && j < 2 * n)) continue;
        auto vo = R.C.at(chain_row(n, j), j).try_valuation();
        if (!vo || *vo != r)
            throw ShapeViolation("reduce_affine: marked entry lost its order");
    }
    res.P = R.P;
    res.Cprime = R.C;
    res.trace = std::move(R.trace);
    return res;
}

// ------------------------------------------------------------------
// diagonal normalization of the marked entries

inline ReductionResult normalize_diagonal(const SympMatrix& C, ReduceMode mode, int r = 0) {
    const FieldParams& fp = *C.par;
    int n = C.n;
    int rr = (mode == ReduceMode::affine) ? r : 0;

    std::vector<std::pair<int, int>> marked;
    for (int i = 1; i <= n - 1; ++i) marked.emplace_back(i, i + 1);
    marked.emplace_back(n, 2 * n);

    std::vector<LaurentElem> u;
    for (auto [i, j] : marked) {
        LaurentElem ui = C.at(i, j).shifted(-rr);
        auto vo = ui.try_valuation();
        if (!vo || (mode == ReduceMode::affine && *vo != 0))
            throw NotUnit("normalize_diagonal: marked entry (" + std::to_string(i) + "," +
                          std::to_string(j) + ") is not invertible of the right order");
        u.push_back(ui);
    }

    // twisted recursion: q_1 = 1, q_{i+1} = (u_i sigma(q_i)^{-1})^{-1}
    std::vector<LaurentElem> q(static_cast<std::size_t>(2 * n), LaurentElem::one(fp));
    auto& qv = q;
    for (int i = 1; i <= n - 1; ++i)
        qv[static_cast<std::size_t>(i)] =
            ls_div(frobenius(qv[static_cast<std::size_t>(i - 1)], 1),
                   u[static_cast<std::size_t>(i - 1)]);
    LaurentElem q2n = ls_div(frobenius(qv[static_cast<std::size_t>(n - 1)], 1),
                             u[static_cast<std::size_t>(n - 1)]);
    qv[static_cast<std::size_t>(2 * n - 1)] = q2n;
    // fill the mirror half so that q_i q_{2n+1-i} is the constant similitude
    for (int i = 2; i <= n; ++i)
        qv[static_cast<std::size_t>(2 * n - i)] = ls_div(q2n, qv[static_cast<std::size_t>(i - 1)]);

    ReductionResult res(fp, n);
    SympMatrix Q(fp, n);
    for (int i = 1; i <= 2 * n; ++i) {
        Q.at(i, i) = qv[static_cast<std::size_t>(i - 1)];
        res.trace.push_back({StepKind::diagonal, i, i, Q.at(i, i)});
    }
    res.P = Q;
    res.Cprime = C;
    for (int i = 1; i <= 2 * n; ++i)
        for (int j = 1; j <= 2 * n; ++j)
            res.Cprime.at(i, j) = ls_mul(ls_div(C.at(i, j), frobenius(Q.at(i, i), 1)), Q.at(j, j));

    for (auto [i, j] : marked)
        if (!ls_eq(res.Cprime.at(i, j), LaurentElem::pi_pow(fp, rr)))
            throw NotUnit("normalize_diagonal: marked entry did not normalize");
    return res;
}

}  // namespace adlv
