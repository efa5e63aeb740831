#pragma once

// Small finite fields F_{p^d} with exp/log tables.
//
// Elements are indices 0..p^d-1 encoding polynomials sum c_i x^i over F_p
// (value sum c_i p^i) modulo a fixed Conway polynomial, so representations
// are reproducible across runs and machines.  Multiplication goes through
// discrete logs; x is a primitive root (asserted at table build).

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace adlv {

using fq_t = std::uint16_t;

class FqField {
public:
    int p;
    int d;
    unsigned size;          // p^d
    std::vector<int> modulus;  // coefficients a_0..a_d of the Conway polynomial

    FqField(int p_, int d_) : p(p_), d(d_) {
        modulus = conway(p_, d_);
        unsigned n = 1;
        for (int i = 0; i < d; ++i) n *= static_cast<unsigned>(p);
        size = n;
        build_tables();
    }

    fq_t zero() const { return 0; }
    fq_t one() const { return 1; }

    fq_t add(fq_t a, fq_t b) const {
        if (p == 2) return a ^ b;
        fq_t r = 0;
        unsigned mul = 1;
        for (int i = 0; i < d; ++i) {
            unsigned da = (a / mul) % static_cast<unsigned>(p);
            unsigned db = (b / mul) % static_cast<unsigned>(p);
            r = static_cast<fq_t>(r + ((da + db) % p) * mul);
            mul *= static_cast<unsigned>(p);
        }
        return r;
    }

    fq_t neg(fq_t a) const {
        if (p == 2) return a;
        fq_t r = 0;
        unsigned mul = 1;
        for (int i = 0; i < d; ++i) {
            unsigned da = (a / mul) % static_cast<unsigned>(p);
            r = static_cast<fq_t>(r + ((p - da) % p) * mul);
            mul *= static_cast<unsigned>(p);
        }
        return r;
    }

    fq_t sub(fq_t a, fq_t b) const { return add(a, neg(b)); }

    fq_t mul(fq_t a, fq_t b) const {
        if (a == 0 || b == 0) return 0;
        return exp_[log_[a] + log_[b]];
    }

    fq_t inv(fq_t a) const {
        if (a == 0) throw std::domain_error("FqField::inv of zero");
        unsigned n1 = size - 1;
        return exp_[(n1 - log_[a]) % n1];
    }

    fq_t div(fq_t a, fq_t b) const { return mul(a, inv(b)); }

    // a^e for integer e (e may be negative for nonzero a)
    fq_t pow(fq_t a, long long e) const {
        if (a == 0) {
            if (e <= 0) throw std::domain_error("FqField::pow 0^(e<=0)");
            return 0;
        }
        long long n1 = static_cast<long long>(size) - 1;
        long long k = (static_cast<long long>(log_[a]) * (e % n1)) % n1;
        if (k < 0) k += n1;
        return exp_[k];
    }

    // absolute Frobenius a -> a^p, iterated e times (e mod d)
    fq_t frob(fq_t a, int e = 1) const {
        int r = ((e % d) + d) % d;
        fq_t x = a;
        for (int i = 0; i < r; ++i) x = frob_[x];
        return x;
    }

    // element from an F_p-coefficient list c_0..c_{d-1} (low degree first)
    fq_t from_coeffs(const std::vector<int>& c) const {
        fq_t r = 0;
        unsigned mul = 1;
        for (int i = 0; i < d && i < static_cast<int>(c.size()); ++i) {
            int ci = ((c[i] % p) + p) % p;
            r = static_cast<fq_t>(r + static_cast<unsigned>(ci) * mul);
            mul *= static_cast<unsigned>(p);
        }
        return r;
    }

    // the generator x (primitive by the Conway choice); x^j via exp table
    fq_t gen() const { return d > 1 ? static_cast<fq_t>(p) : exp_[1]; }

    std::string poly_string() const {
        // e.g. "x^4+x+1" over F_2; used in CSV metadata
        std::string s;
        for (int i = d; i >= 0; --i) {
            int c = (i == d) ? 1 : modulus[i];
            if (c == 0) continue;
            if (!s.empty()) s += "+";
            if (i == 0) { s += std::to_string(c); continue; }
            if (c != 1) s += std::to_string(c) + "*";
            s += (i == 1) ? "x" : ("x^" + std::to_string(i));
        }
        return s;
    }

    static const FqField& get(int p, int d) {
        static std::map<std::pair<int, int>, std::unique_ptr<FqField>> cache;
        auto key = std::make_pair(p, d);
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache.emplace(key, std::make_unique<FqField>(p, d)).first;
        return *it->second;
    }

private:
    std::vector<fq_t> exp_;   // exp_[i] = x^i, i in [0, 2(size-1))
    std::vector<fq_t> log_;   // log_[a] for a != 0
    std::vector<fq_t> frob_;  // a -> a^p

    static std::vector<int> conway(int p, int d) {
        // coefficients a_0..a_{d-1} with f = x^d + a_{d-1}x^{d-1} + ... + a_0
        if (p == 2) {
            switch (d) {
                case 1: return {1};
                case 2: return {1, 1};
                case 3: return {1, 1, 0};
                case 4: return {1, 1, 0, 0};
                case 6: return {1, 1, 0, 1, 1, 0};
                case 8: return {1, 0, 1, 1, 1, 0, 0, 0};
                default: break;
            }
        } else if (p == 3) {
            switch (d) {
                case 1: return {1};
                case 2: return {2, 2};
                case 3: return {1, 2, 0};
                case 4: return {2, 0, 0, 2};
                case 6: return {2, 2, 1, 0, 2, 0};
                case 8: return {2, 2, 2, 0, 1, 2, 0, 0};
                default: break;
            }
        }
        throw std::invalid_argument("no fixed irreducible polynomial for p=" +
                                    std::to_string(p) + ", d=" + std::to_string(d));
    }

    fq_t scalar_mul(int c, fq_t a) const {
        fq_t r = 0;
        for (int i = 0; i < c % p; ++i) r = add(r, a);
        return r;
    }

    fq_t mul_by_x(fq_t a) const {
        unsigned shifted = static_cast<unsigned>(a) * static_cast<unsigned>(p);
        unsigned top = shifted / size;   // coefficient of x^d, < p
        fq_t low = static_cast<fq_t>(shifted % size);
        if (top == 0) return low;
        // x^d = -(a_0 + a_1 x + ...)
        fq_t red = 0;
        unsigned mul = 1;
        for (int i = 0; i < d; ++i) {
            red = static_cast<fq_t>(red + static_cast<unsigned>((p - modulus[i]) % p) * mul);
            mul *= static_cast<unsigned>(p);
        }
        return add(low, scalar_mul(static_cast<int>(top), red));
    }

    void build_tables() {
        unsigned n1 = size - 1;
        exp_.assign(2 * n1, 0);
        log_.assign(size, 0);
        std::vector<bool> seen(size, false);
        fq_t cur = 1;
        for (unsigned i = 0; i < n1; ++i) {
            exp_[i] = cur;
            if (cur == 0 || seen[cur])
                throw std::logic_error("polynomial not primitive for p=" +
                                       std::to_string(p) + ", d=" + std::to_string(d));
            seen[cur] = true;
            log_[cur] = static_cast<fq_t>(i);
            cur = mul_by_x(cur);
        }
        if (cur != 1)
            throw std::logic_error("x does not have full order for p=" +
                                   std::to_string(p) + ", d=" + std::to_string(d));
        for (unsigned i = 0; i < n1; ++i) exp_[n1 + i] = exp_[i];
        frob_.assign(size, 0);
        for (unsigned a = 1; a < size; ++a) {
            unsigned long long k = (static_cast<unsigned long long>(log_[a]) *
                                    static_cast<unsigned>(p)) % n1;
            frob_[a] = exp_[k];
        }
    }
};

}  // namespace adlv
