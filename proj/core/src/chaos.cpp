#include "kpz/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kpz/errors.hpp"

namespace kpz::chaos {

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

std::size_t ipow(std::size_t b, int e) {
    std::size_t r = 1;
    for (int k = 0; k < e; ++k) r *= b;
    return r;
}

void check_cells(std::size_t n, int order) {
    double cells = std::pow(double(n), order);
    if (cells > double(kMaxCells))
        throw TooLarge("kernel of order " + std::to_string(order) + " on " + std::to_string(n) +
                       " points exceeds the cell budget");
}

}  // namespace

int ChaosGrid::index(double x) const {
    int i = static_cast<int>(std::floor((x - lo) / du()));
    return std::clamp(i, 0, n - 1);
}

ChaosKernel::ChaosKernel(int ord, ChaosGrid g) : order(ord), grid(g) {
    check_cells(g.n, ord);
    v.assign(ipow(g.n, ord), 0.0);
}

ChaosKernel ChaosKernel::constant(double c, ChaosGrid g) {
    ChaosKernel k(0, g);
    k.v[0] = c;
    return k;
}

double& ChaosKernel::at(std::span<const int> idx) {
    std::size_t f = 0;
    for (int i : idx) f = f * grid.n + i;
    return v[f];
}

double ChaosKernel::at(std::span<const int> idx) const {
    std::size_t f = 0;
    for (int i : idx) f = f * grid.n + i;
    return v[f];
}

double ChaosKernel::norm2() const {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s * std::pow(grid.du(), order);
}

double ito_norm(std::span<const ChaosKernel> phis) {
    double s = 0.0;
    for (const auto& k : phis) s += k.norm2() / factorial(k.order);
    return s;
}

ChaosKernel symmetrize(const ChaosKernel& k) {
    if (k.order <= 1) return k;
    ChaosKernel out(k.order, k.grid);
    std::vector<int> idx(k.order), perm(k.order), pidx(k.order);
    const int n = k.grid.n;
    const double nperm = factorial(k.order);
    for (std::size_t f = 0; f < k.v.size(); ++f) {
        std::size_t r = f;
        for (int a = k.order - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(r % n);
            r /= n;
        }
        std::iota(perm.begin(), perm.end(), 0);
        double s = 0.0;
        do {
            for (int a = 0; a < k.order; ++a) pidx[a] = idx[perm[a]];
            s += k.at(pidx);
        } while (std::next_permutation(perm.begin(), perm.end()));
        out.v[f] = s / nperm;
    }
    return out;
}

double symmetry_defect(const ChaosKernel& k, int checks, RngStream& rng) {
    if (k.order <= 1) return 0.0;
    double worst = 0.0;
    std::vector<int> idx(k.order);
    for (int c = 0; c < checks; ++c) {
        for (int& i : idx) i = static_cast<int>(rng.uniform() * k.grid.n) % k.grid.n;
        const double base = k.at(idx);
        for (int a = 0; a < k.order; ++a)
            for (int b = a + 1; b < k.order; ++b) {
                std::swap(idx[a], idx[b]);
                worst = std::max(worst, std::abs(k.at(idx) - base));
                std::swap(idx[a], idx[b]);
            }
    }
    return worst;
}

namespace {

// eta^eps sampled at offsets k*du, |k| <= reach (zero outside)
std::vector<double> sampled_eta(Profile p, double eps, double du, int& reach) {
    reach = static_cast<int>(std::ceil(profile_radius(p) * eps / du)) + 1;
    std::vector<double> e(2 * reach + 1);
    for (int k = -reach; k <= reach; ++k) e[k + reach] = scaled_value(p, eps, k * du);
    return e;
}

}  // namespace

ChaosKernel psi_eps_kernel(Profile p, double eps, double x, const ChaosGrid& g) {
    ChaosKernel k(2, g);
    const double du = g.du();
    for (int i = 0; i < g.n; ++i) {
        const double a = scaled_value(p, eps, x - g.u(i));
        if (a == 0.0) continue;
        for (int j = 0; j < g.n; ++j) k.at2(i, j) = 2.0 * a * scaled_value(p, eps, x - g.u(j));
    }
    (void)du;
    return k;
}

ChaosKernel diff_kernel(Profile p, double eps, double x, const ChaosGrid& g) {
    const double du = g.du();
    const int ix = g.index(x);
    int R;
    std::vector<double> e = sampled_eta(p, eps, du, R);
    // eta2 at offsets, by discrete convolution on the same spacing
    std::vector<double> e2(4 * R + 1, 0.0);
    for (int a = -R; a <= R; ++a)
        for (int b = -R; b <= R; ++b) e2[a + b + 2 * R] += e[a + R] * e[b + R] * du;
    ChaosKernel k(2, g);
    // first term: sum_y eta2(x - y) eta(y - x1) eta(y - x2) du
    for (int y = ix - 2 * R; y <= ix + 2 * R; ++y) {
        if (y < 0 || y >= g.n) continue;
        const double w = e2[ix - y + 2 * R] * du;
        if (w == 0.0) continue;
        for (int i1 = y - R; i1 <= y + R; ++i1) {
            if (i1 < 0 || i1 >= g.n) continue;
            const double a = w * e[y - i1 + R];
            if (a == 0.0) continue;
            for (int i2 = y - R; i2 <= y + R; ++i2) {
                if (i2 < 0 || i2 >= g.n) continue;
                k.at2(i1, i2) += 2.0 * a * e[y - i2 + R];
            }
        }
    }
    for (int i1 = ix - R; i1 <= ix + R; ++i1) {
        if (i1 < 0 || i1 >= g.n) continue;
        for (int i2 = ix - R; i2 <= ix + R; ++i2) {
            if (i2 < 0 || i2 >= g.n) continue;
            k.at2(i1, i2) -= 2.0 * e[ix - i1 + R] * e[ix - i2 + R];
        }
    }
    return k;
}

double remark_formula_diff(double eps) {
    return (1.0 / (std::numbers::pi * eps * eps)) *
           (1.0 / (4.0 * std::sqrt(5.0)) - 1.0 / (2.0 * std::sqrt(3.0)) + 0.25);
}

double remark_formula_psi(double eps) {
    const double eta2_0 = 1.0 / (2.0 * std::sqrt(std::numbers::pi));
    return eta2_0 * eta2_0 / (eps * eps);
}

// ---------------------------------------------------------------- diagrams

int Diagram::total() const { return std::accumulate(orders.begin(), orders.end(), 0); }

namespace {

std::vector<Vertex> vertices_of(const std::vector<int>& orders) {
    std::vector<Vertex> vs;
    for (int g = 0; g < static_cast<int>(orders.size()); ++g)
        for (int s = 0; s < orders[g]; ++s) vs.push_back({g, s});
    return vs;
}

void guard(const std::vector<int>& orders) {
    if (orders.size() < 2) throw std::invalid_argument("diagrams need at least two factors");
    int total = 0;
    for (int n : orders) {
        if (n < 0) throw std::invalid_argument("negative order");
        total += n;
    }
    if (total > 8) throw TooLarge("sum of orders " + std::to_string(total) + " exceeds 8");
}

}  // namespace

std::vector<Diagram> diagram_enumerate(const std::vector<int>& orders) {
    guard(orders);
    const std::vector<Vertex> vs = vertices_of(orders);
    std::vector<Diagram> out;
    std::vector<char> used(vs.size(), 0);
    Diagram cur;
    cur.orders = orders;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        while (i < vs.size() && used[i]) ++i;
        if (i == vs.size()) {
            out.push_back(cur);
            return;
        }
        // leave vertex i free
        used[i] = 1;
        rec(i + 1);
        // or pair it with a later free vertex of another group
        for (std::size_t j = i + 1; j < vs.size(); ++j) {
            if (used[j] || vs[j].group == vs[i].group) continue;
            used[j] = 1;
            cur.edges.push_back({vs[i], vs[j]});
            rec(i + 1);
            cur.edges.pop_back();
            used[j] = 0;
        }
        used[i] = 0;
    };
    rec(0);
    return out;
}

std::uint64_t diagram_count_bruteforce(const std::vector<int>& orders) {
    guard(orders);
    const std::vector<Vertex> vs = vertices_of(orders);
    std::vector<std::pair<int, int>> edges;
    for (std::size_t a = 0; a < vs.size(); ++a)
        for (std::size_t b = a + 1; b < vs.size(); ++b)
            if (vs[a].group != vs[b].group) edges.push_back({int(a), int(b)});
    if (edges.size() > 26) throw TooLarge("too many candidate edges for brute force");
    std::uint64_t count = 0;
    const std::uint64_t lim = std::uint64_t(1) << edges.size();
    for (std::uint64_t mask = 0; mask < lim; ++mask) {
        std::uint32_t seen = 0;
        bool ok = true;
        for (std::size_t e = 0; e < edges.size() && ok; ++e) {
            if (!(mask >> e & 1)) continue;
            const std::uint32_t bits = (1u << edges[e].first) | (1u << edges[e].second);
            if (seen & bits) ok = false;
            seen |= bits;
        }
        count += ok;
    }
    return count;
}

double diagram_prefactor(const Diagram& d) {
    double den = 1.0;
    for (int n : d.orders) den *= factorial(n);
    return factorial(d.total() - 2 * static_cast<int>(d.edges.size())) / den;
}

ChaosKernel diagram_contract(std::span<const ChaosKernel> ks, const Diagram& d) {
    if (ks.size() != d.orders.size()) throw std::invalid_argument("kernel count does not match diagram");
    const ChaosGrid g = ks[0].grid;
    for (std::size_t l = 0; l < ks.size(); ++l)
        if (ks[l].order != d.orders[l] || ks[l].grid.n != g.n)
            throw std::invalid_argument("kernel order or grid mismatch");
    const std::vector<Vertex> vs = vertices_of(d.orders);
    auto pos = [&](const Vertex& v) {
        return static_cast<std::size_t>(std::find(vs.begin(), vs.end(), v) - vs.begin());
    };
    // variable id per vertex: free vertices first, then one per edge
    std::vector<int> var(vs.size(), -1);
    const int P = static_cast<int>(d.edges.size());
    for (int e = 0; e < P; ++e) {
        var[pos(d.edges[e].first)] = -2 - e;
        var[pos(d.edges[e].second)] = -2 - e;
    }
    int F = 0;
    for (int& v : var)
        if (v == -1) v = F++;
    for (int& v : var)
        if (v <= -2) v = F + (-2 - v);
    const int nv = F + P;
    if (std::pow(double(g.n), nv) > 5e7) throw TooLarge("contraction too expensive on this grid");
    ChaosKernel out(F, g);
    const double w = std::pow(g.du(), P);
    std::vector<int> assign(nv, 0);
    std::vector<std::vector<int>> idx(ks.size());
    for (std::size_t l = 0; l < ks.size(); ++l) idx[l].resize(ks[l].order);
    const std::size_t total = ipow(g.n, nv);
    for (std::size_t c = 0; c < total; ++c) {
        std::size_t r = c;
        for (int a = nv - 1; a >= 0; --a) {
            assign[a] = static_cast<int>(r % g.n);
            r /= g.n;
        }
        double prod = w;
        std::size_t vi = 0;
        for (std::size_t l = 0; l < ks.size() && prod != 0.0; ++l) {
            for (int s = 0; s < ks[l].order; ++s) idx[l][s] = assign[var[vi + s]];
            vi += ks[l].order;
            prod *= ks[l].at(idx[l]);
        }
        if (prod == 0.0) continue;
        std::size_t f = 0;
        for (int a = 0; a < F; ++a) f = f * g.n + assign[a];
        out.v[f] += prod;
    }
    return symmetrize(out);
}

double expected_product(std::span<const ChaosKernel> ks) {
    std::vector<int> orders;
    for (const auto& k : ks) orders.push_back(k.order);
    double s = 0.0;
    for (const Diagram& d : diagram_enumerate(orders)) {
        if (!d.complete()) continue;
        s += diagram_prefactor(d) * diagram_contract(ks, d).v[0];
    }
    return s;
}

double discrete_wiener_integral(const ChaosKernel& k, std::span<const double> dB) {
    if (k.order == 0) return k.v[0];
    const int n = k.grid.n;
    std::vector<double> cur(k.v.begin(), k.v.end()), next;
    for (int ord = k.order; ord > 0; --ord) {
        const std::size_t rows = cur.size() / n;
        next.assign(rows, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* p = cur.data() + r * n;
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += p[j] * dB[j];
            next[r] = s;
        }
        cur.swap(next);
    }
    return cur[0] / factorial(k.order);
}

ChaosKernel random_kernel(int order, const ChaosGrid& g, RngStream& rng) {
    ChaosKernel k(order, g);
    for (double& v : k.v) v = rng.normal();
    k = symmetrize(k);
    if (order >= 2) {
        std::vector<int> idx(order);
        for (std::size_t f = 0; f < k.v.size(); ++f) {
            std::size_t r = f;
            for (int a = order - 1; a >= 0; --a) {
                idx[a] = static_cast<int>(r % g.n);
                r /= g.n;
            }
            std::sort(idx.begin(), idx.end());
            if (std::adjacent_find(idx.begin(), idx.end()) != idx.end()) k.v[f] = 0.0;
        }
    }
    return k;
}

EnsembleEstimate mc_product_moment(std::span<const ChaosKernel> ks, std::int64_t samples, std::uint64_t seed) {
    const ChaosGrid g = ks[0].grid;
    RngStream rng(seed, 0);
    std::vector<double> dB(g.n);
    const double sd = std::sqrt(g.du());
    RunningStats st;
    for (std::int64_t s = 0; s < samples; ++s) {
        rng.fill_normal(dB, sd);
        double p = 1.0;
        for (const auto& k : ks) p *= discrete_wiener_integral(k, dB);
        st.add(p);
    }
    EnsembleEstimate e;
    e.estimate = st.mean();
    e.std_error = st.stderr_of_mean();
    e.n = st.n();
    e.seed = seed;
    e.target = expected_product(ks);
    judge(e);
    return e;
}

// ---------------------------------------------------------------- phi_x

double Rho::density(double u) const {
    const double t = (u - center) / half;
    return std::abs(t) < 1.0 ? 0.75 * (1.0 - t * t) / half : 0.0;
}

double Rho::tail(double u) const {
    const double t = (u - center) / half;
    if (t <= -1.0) return 1.0;
    if (t >= 1.0) return 0.0;
    return 1.0 - 0.25 * (2.0 + 3.0 * t - t * t * t);
}

double theta(const Rho& r, double u) { return -r.tail(u); }

double phi_x(const Rho& r, double x, double u) { return (u <= x ? 1.0 : 0.0) + theta(r, u); }

ChaosKernel phi_x_kernel(const Rho& r, double x, const ChaosGrid& g) {
    ChaosKernel k(1, g);
    for (int i = 0; i < g.n; ++i) k.v[i] = phi_x(r, x, g.u(i));
    return k;
}

double a_of_x(const Rho& r, double x) {
    std::vector<double> br = {r.lo(), r.hi(), x};
    std::sort(br.begin(), br.end());
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < br.size(); ++k) {
        if (br[k + 1] <= br[k]) continue;
        auto f = [&](double u) {
            const double v = phi_x(r, x, u);
            return v * v;
        };
        s += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, br[k], br[k + 1], 10, 1e-14);
    }
    return 0.5 * s;
}

std::vector<ChaosKernel> exp_chaos_Y(const Rho& r, double x, int n_max, const ChaosGrid& g) {
    const double ea = std::exp(a_of_x(r, x));
    std::vector<double> f(g.n);
    for (int i = 0; i < g.n; ++i) f[i] = phi_x(r, x, g.u(i));
    std::vector<ChaosKernel> out;
    out.push_back(ChaosKernel::constant(ea, g));
    for (int n = 1; n <= n_max; ++n) {
        ChaosKernel k(n, g);
        const ChaosKernel& prev = out.back();
        for (std::size_t a = 0; a < prev.v.size(); ++a) {
            const double pa = n == 1 ? ea : prev.v[a];
            for (int i = 0; i < g.n; ++i) k.v[a * g.n + i] = pa * f[i];
        }
        out.push_back(std::move(k));
    }
    return out;
}

EnsembleEstimate mc_exp_chaos(const Rho& r, double x, std::int64_t samples, std::uint64_t seed, double du) {
    const double L = std::floor((std::min(x, r.lo()) - 2.0 * du) / du) * du;
    const double H = std::ceil((std::max(x, r.hi()) + 2.0 * du) / du) * du;
    const int K = static_cast<int>(std::llround((H - L) / du));
    const int ix = static_cast<int>(std::llround((x - L) / du));
    std::vector<double> w(K + 1);
    double ws = 0.0;
    for (int k = 0; k <= K; ++k) ws += (w[k] = r.density(L + k * du));
    for (double& v : w) v /= ws;
    RngStream rng(seed, 0);
    std::vector<double> z(K);
    const double sd = std::sqrt(du);
    RunningStats st;
    for (std::int64_t s = 0; s < samples; ++s) {
        rng.fill_normal(z, sd);
        double B = 0.0, avg = 0.0, Bx = 0.0;
        for (int k = 0; k <= K; ++k) {
            if (k > 0) B += z[k - 1];
            avg += w[k] * B;
            if (k == ix) Bx = B;
        }
        st.add(std::exp(Bx - avg));
    }
    EnsembleEstimate e;
    e.estimate = st.mean();
    e.std_error = st.stderr_of_mean();
    e.n = st.n();
    e.seed = seed;
    e.target = std::exp(a_of_x(r, x));
    judge(e);
    return e;
}

// ---------------------------------------------------------------- J constants

const char* rlaw_name(RLaw l) {
    switch (l) {
        case RLaw::gaussian: return "gaussian";
        case RLaw::uniform: return "uniform";
        case RLaw::triangle: return "triangle";
        case RLaw::epanechnikov: return "epanechnikov";
        case RLaw::one_sided: return "one-sided";
    }
    return "?";
}

namespace {

// Devroye's rule for the Epanechnikov density on [-1, 1]
double draw_epanechnikov(RngStream& rng) {
    const double u1 = 2.0 * rng.uniform() - 1.0;
    const double u2 = 2.0 * rng.uniform() - 1.0;
    const double u3 = 2.0 * rng.uniform() - 1.0;
    if (std::abs(u3) >= std::abs(u2) && std::abs(u3) >= std::abs(u1)) return u2;
    return u3;
}

double draw_eta(RLaw l, RngStream& rng) {
    switch (l) {
        case RLaw::gaussian: return rng.normal();
        case RLaw::triangle: return rng.uniform() + rng.uniform() - 1.0;
        case RLaw::epanechnikov: return draw_epanechnikov(rng);
        case RLaw::one_sided: return std::abs(draw_epanechnikov(rng));
        case RLaw::uniform: break;
    }
    return 0.0;
}

Profile profile_of(RLaw l) {
    switch (l) {
        case RLaw::gaussian: return Profile::gaussian_truncated;
        case RLaw::triangle: return Profile::triangle;
        case RLaw::epanechnikov: return Profile::epanechnikov;
        case RLaw::one_sided: return Profile::one_sided_epanechnikov;
        case RLaw::uniform: break;
    }
    throw std::invalid_argument("uniform R has no underlying eta");
}

// Discrete law of R: weights p at offsets (lo + k) * h, normalized.
struct DiscreteLaw {
    std::vector<double> p;
    int lo = 0;
    double h = 1.0;
    double r(int k) const { return (lo + k) * h; }
};

DiscreteLaw eta_n_law(RLaw l, int n, double h) {
    DiscreteLaw d;
    d.h = h;
    if (l == RLaw::uniform) {
        if (n != 2) throw std::invalid_argument("uniform law is only defined as eta2");
        const int R = static_cast<int>(std::llround(1.0 / h));
        d.lo = -R;
        d.p.assign(2 * R + 1, 1.0);
        d.p.front() = d.p.back() = 0.5;
    } else {
        MollifierKernel k = self_convolve(scale_kernel(profile_of(l), 1.0, h), n);
        d.lo = k.lo;
        d.p = k.values;
    }
    const double s = std::accumulate(d.p.begin(), d.p.end(), 0.0);
    for (double& v : d.p) v /= s;
    return d;
}

// mid-rank CDF: P(R < t) + P(R = t)/2 at grid points t = (lo + k) h
std::vector<double> mid_cdf(const DiscreteLaw& d) {
    std::vector<double> F(d.p.size());
    double c = 0.0;
    for (std::size_t k = 0; k < d.p.size(); ++k) {
        F[k] = c + 0.5 * d.p[k];
        c += d.p[k];
    }
    return F;
}

double cdf_at(const DiscreteLaw& d, const std::vector<double>& F, int offset) {
    const int k = offset - d.lo;
    if (k < 0) return 0.0;
    if (k >= static_cast<int>(F.size())) return 1.0;
    return F[k];
}

}  // namespace

double sample_R(RLaw l, RngStream& rng) {
    if (l == RLaw::uniform) return 2.0 * rng.uniform() - 1.0;
    return draw_eta(l, rng) + draw_eta(l, rng);
}

EnsembleEstimate j1_mc(RLaw l, std::int64_t samples, std::uint64_t seed, bool asymmetric_form) {
    RngStream rng(seed, 0);
    RunningStats st;
    for (std::int64_t s = 0; s < samples; ++s) {
        const double r1 = sample_R(l, rng), r2 = sample_R(l, rng), r3 = sample_R(l, rng);
        double x;
        if (!asymmetric_form) {
            // exact zeros count as failures of the event
            x = double(r1 + r3 < 0.0 && r2 + r3 < 0.0) - double(r1 < 0.0 && r2 < 0.0);
        } else {
            x = double(r1 + r3 > 0.0 && r2 + r3 > 0.0) - double(r1 > 0.0 && r2 > 0.0);
        }
        st.add(x);
    }
    EnsembleEstimate e;
    e.estimate = st.mean();
    e.std_error = st.stderr_of_mean();
    e.n = st.n();
    e.seed = seed;
    return e;
}

double j1_quadrature(RLaw l, bool asymmetric_form) {
    const DiscreteLaw d = eta_n_law(l, 2, 1e-3);
    const std::vector<double> F = mid_cdf(d);
    double s = 0.0;
    for (std::size_t k = 0; k < d.p.size(); ++k) {
        const int off = d.lo + static_cast<int>(k);
        const double c = cdf_at(d, F, -off);
        const double v = asymmetric_form ? 1.0 - c : c;
        s += d.p[k] * v * v;
    }
    const double c0 = cdf_at(d, F, 0);
    const double v0 = asymmetric_form ? 1.0 - c0 : c0;
    return s - v0 * v0;
}

std::pair<double, double> positive_masses(RLaw l) {
    auto pos = [](const DiscreteLaw& d) {
        double s = 0.0;
        for (std::size_t k = 0; k < d.p.size(); ++k) {
            const int off = d.lo + static_cast<int>(k);
            if (off > 0) s += d.p[k];
            if (off == 0) s += 0.5 * d.p[k];
        }
        return s;
    };
    const double h = 2e-3;
    return {pos(eta_n_law(l, 4, h)), pos(eta_n_law(l, 2, h))};
}

namespace {

struct JQuad {
    std::vector<double> p;
    std::vector<double> r;
    std::vector<double> F;  // mid-rank CDF at -r
    double F0 = 0.5;
};

JQuad jquad(Profile prof, double eps, double step) {
    MollifierKernel k2 = self_convolve(scale_kernel(prof, eps, step), 2);
    JQuad q;
    double s = 0.0;
    for (double v : k2.values) s += v;
    std::vector<double> cum(k2.values.size());
    double c = 0.0;
    for (std::size_t k = 0; k < k2.values.size(); ++k) {
        const double p = k2.values[k] / s;
        q.p.push_back(p);
        q.r.push_back((k2.lo + static_cast<int>(k)) * step);
        cum[k] = c + 0.5 * p;
        c += p;
    }
    auto F_at = [&](int off) {
        const int k = off - k2.lo;
        if (k < 0) return 0.0;
        if (k >= static_cast<int>(cum.size())) return 1.0;
        return cum[k];
    };
    for (std::size_t k = 0; k < q.p.size(); ++k) q.F.push_back(F_at(-(k2.lo + static_cast<int>(k))));
    q.F0 = F_at(0);
    return q;
}

}  // namespace

double j2(Profile p, double eps, const Rho& rho, double x, double step) {
    const JQuad q = jquad(p, eps, step);
    double first = 0.0;
    for (std::size_t k3 = 0; k3 < q.p.size(); ++k3) {
        double inner = 0.0;
        for (std::size_t k2 = 0; k2 < q.p.size(); ++k2) inner += q.p[k2] * theta(rho, x + q.r[k2] + q.r[k3]);
        first += q.p[k3] * q.F[k3] * inner;
    }
    double second = 0.0;
    for (std::size_t k2 = 0; k2 < q.p.size(); ++k2) second += q.p[k2] * theta(rho, x + q.r[k2]);
    return first - q.F0 * second;
}

double j3(Profile p, double eps, const Rho& rho, double x, double step) {
    const JQuad q = jquad(p, eps, step);
    double first = 0.0;
    for (std::size_t k3 = 0; k3 < q.p.size(); ++k3) {
        double inner = 0.0;
        for (std::size_t k = 0; k < q.p.size(); ++k) inner += q.p[k] * theta(rho, x + q.r[k] + q.r[k3]);
        first += q.p[k3] * inner * inner;
    }
    double m = 0.0;
    for (std::size_t k = 0; k < q.p.size(); ++k) m += q.p[k] * theta(rho, x + q.r[k]);
    return first - m * m;
}

// ---------------------------------------------------------------- product chaos

namespace {

// int k(u_1..u_m, rest) prod f(u_j) du_j
ChaosKernel contract_first(const ChaosKernel& k, const std::vector<double>& f, int m) {
    const int n = k.grid.n;
    const double du = k.grid.du();
    std::vector<double> cur(k.v.begin(), k.v.end()), next;
    std::size_t tail = ipow(n, k.order - 1);
    for (int c = 0; c < m; ++c) {
        next.assign(tail, 0.0);
        for (int i = 0; i < n; ++i) {
            const double w = f[i] * du;
            if (w == 0.0) continue;
            const double* src = cur.data() + static_cast<std::size_t>(i) * tail;
            for (std::size_t t = 0; t < tail; ++t) next[t] += w * src[t];
        }
        cur.swap(next);
        tail = tail / n;
    }
    ChaosKernel out;
    out.order = k.order - m;
    out.grid = k.grid;
    out.v = std::move(cur);
    return out;
}

}  // namespace

std::array<ChaosKernel, 4> second_chaos_of_product(std::span<const ChaosKernel> phis, const Rho& rho, double x) {
    if (phis.empty()) throw std::invalid_argument("need at least the constant kernel");
    const int n_max = static_cast<int>(phis.size()) - 1;
    if (n_max > 4) throw TooLarge("second_chaos_of_product supports n_max <= 4");
    const ChaosGrid g = phis[0].grid;
    for (int n = 0; n <= n_max; ++n)
        if (phis[n].order != n) throw std::invalid_argument("phis[n] must have order n");
    const double ea = std::exp(a_of_x(rho, x));
    std::vector<double> f(g.n);
    for (int i = 0; i < g.n; ++i) f[i] = phi_x(rho, x, g.u(i));
    std::array<ChaosKernel, 4> out = {ChaosKernel(2, g), ChaosKernel(2, g), ChaosKernel(2, g), ChaosKernel(2, g)};
    for (int n = 0; n + 2 <= n_max; ++n) {
        ChaosKernel c = contract_first(phis[n + 2], f, n);
        const double w = ea / factorial(n);
        for (std::size_t t = 0; t < c.v.size(); ++t) out[0].v[t] += w * c.v[t];
    }
    for (int n = 0; n <= n_max; ++n) {
        const double s = contract_first(phis[n], f, n).v[0] * ea / factorial(n);
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) out[1].at2(i, j) += s * f[i] * f[j];
    }
    for (int n = 0; n + 1 <= n_max; ++n) {
        ChaosKernel c = contract_first(phis[n + 1], f, n);
        const double w = ea / factorial(n);
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) {
                out[2].at2(i, j) += w * c.v[i] * f[j];
                out[3].at2(i, j) += w * f[i] * c.v[j];
            }
    }
    return out;
}

// ---------------------------------------------------------------- static B

EnsembleEstimate static_b_expectation(const StaticBConfig& c) {
    const double gap = std::max(c.phi_lo - c.rho.hi(), c.rho.lo() - c.phi_hi);
    if (gap <= 0.0) throw OverlappingSupports("supp phi meets supp rho");
    if (!(c.eps < 1.0 && c.eps < 0.25 * gap))
        throw EpsilonTooLarge("epsilon = " + std::to_string(c.eps) + " must stay below min(1, dist/4 = " +
                              std::to_string(0.25 * gap) + ")");
    const double du = c.eps / c.points_per_eps;
    const MollifierKernel eta = scale_kernel(c.profile, c.eps, du);
    const MollifierKernel eta2 = self_convolve(eta, 2);
    const double R = eta.support_radius;
    const double L = std::min(c.rho.lo(), c.phi_lo) - 3.0 * R - 10.0 * du;
    const double H = std::max(c.rho.hi(), c.phi_hi) + 3.0 * R + 10.0 * du;
    const int K = static_cast<int>(std::ceil((H - L) / du));
    auto node = [&](int i) { return L + i * du; };
    auto idx = [&](double x) { return static_cast<int>(std::floor((x - L) / du)); };

    // index ranges
    const int pa = idx(c.phi_lo) - 1, pb = idx(c.phi_hi) + 2;
    const int ra = idx(c.rho.lo()) - 1, rb = idx(c.rho.hi()) + 2;
    const int e2r = std::max(-eta2.lo, eta2.hi);
    const int sa = pa - e2r - 1, sb = pb + e2r + 1;  // S needed here
    const int er = std::max(-eta.lo, eta.hi);
    if (std::min(ra, sa) - er < 0 || std::max(rb, sb + 1) + er >= K) throw std::logic_error("window too small");

    std::vector<double> phi(K, 0.0), rw(K, 0.0);
    const double pc = 0.5 * (c.phi_lo + c.phi_hi), pw = 0.5 * (c.phi_hi - c.phi_lo);
    for (int i = pa; i <= pb; ++i) {
        const double t = (node(i) - pc) / pw;
        phi[i] = std::abs(t) < 1.0 ? c.phi_scale * (1.0 - t * t) : 0.0;
    }
    double rs = 0.0;
    for (int i = ra; i <= rb; ++i) rs += (rw[i] = c.rho.density(node(i)));
    for (double& v : rw) v /= rs;

    std::vector<double> f;
    if (c.test_bump) {
        const auto [a, b] = *c.test_bump;
        if (!(a < b) || a < L || b > H) throw Error("test functional must sit inside the sampling window");
        f.assign(K, 0.0);
        for (int i = 0; i < K; ++i) {
            const double t = (node(i) + 0.5 * du - 0.5 * (a + b)) / (0.5 * (b - a));
            f[i] = std::abs(t) < 1.0 ? 1.0 - t * t : 0.0;
        }
    }

    RngStream rng(c.seed, 0);
    std::vector<double> z(K), B(K), h(K), S(K);
    const double sd = std::sqrt(du);
    auto smooth = [&](int i) {
        double s = 0.0;
        for (int o = eta.lo; o <= eta.hi; ++o) s += eta.values[o - eta.lo] * B[i - o];
        return s * du;
    };
    RunningStats st;
    for (std::int64_t s = 0; s < c.samples; ++s) {
        rng.fill_normal(z, sd);
        double acc = 0.0;
        for (int i = 0; i < K; ++i) {
            B[i] = acc;
            acc += z[i];
        }
        double hr = 0.0;
        for (int i = ra; i <= rb; ++i) hr += rw[i] * smooth(i);
        for (int i = sa - 1; i <= sb + 1; ++i) h[i] = smooth(i);
        for (int i = sa; i <= sb; ++i) {
            const double u = (h[i + 1] - h[i]) / du, v = (h[i] - h[i - 1]) / du;
            S[i] = (u * u + v * v + u * v) / 3.0;
        }
        double val = 0.0;
        for (int i = pa; i <= pb; ++i) {
            if (phi[i] == 0.0) continue;
            double sm = 0.0;
            for (int o = eta2.lo; o <= eta2.hi; ++o) sm += eta2.values[o - eta2.lo] * S[i - o];
            sm *= du;
            val += (sm - S[i] - c.constant) * std::exp(h[i] - hr) * phi[i];
        }
        if (!f.empty()) {
            double Phi = 0.0;
            for (int i = 0; i < K; ++i) Phi += f[i] * z[i];
            val *= Phi;
        }
        st.add(val * du);
    }
    EnsembleEstimate e;
    e.estimate = st.mean();
    e.std_error = st.stderr_of_mean();
    e.n = st.n();
    e.seed = c.seed;
    e.target = 0.0;
    judge(e);
    return e;
}

// ---------------------------------------------------------------- Dirichlet norm, pinning

namespace {

// line convolution of a vector with eta sampled on the same spacing
std::vector<double> smooth_line(const std::vector<double>& f, const std::vector<double>& e, int R, double du) {
    const int n = static_cast<int>(f.size());
    std::vector<double> out(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int o = -R; o <= R; ++o) {
            const int j = i - o;
            if (j >= 0 && j < n) s += e[o + R] * f[j];
        }
        out[i] = s * du;
    }
    return out;
}

}  // namespace

double dirichlet_norm(std::span<const ChaosKernel> phis, Profile p, double eps) {
    double total = 0.0;
    for (const ChaosKernel& k : phis) {
        if (k.order == 0) continue;
        const ChaosGrid& g = k.grid;
        const int n = g.n;
        const double du = g.du();
        int R;
        const std::vector<double> e = sampled_eta(p, eps, du, R);
        if (k.order == 1) {
            std::vector<double> d(n, 0.0);
            for (int i = 1; i + 1 < n; ++i) d[i] = -(k.v[i + 1] - k.v[i - 1]) / (2.0 * du);
            std::vector<double> sm = smooth_line(d, e, R, du);
            double s = 0.0;
            for (double v : sm) s += v * v;
            total += 0.5 * s * du;
        } else if (k.order == 2) {
            // D phi_2(x; x1) = -d/dx phi_2(x, x1), then smooth both variables
            std::vector<double> d(static_cast<std::size_t>(n) * n, 0.0);
            for (int i = 1; i + 1 < n; ++i)
                for (int j = 0; j < n; ++j) d[i * std::size_t(n) + j] = -(k.at2(i + 1, j) - k.at2(i - 1, j)) / (2.0 * du);
            std::vector<double> row(n), col(n);
            for (int i = 0; i < n; ++i) {
                std::copy(d.begin() + i * std::size_t(n), d.begin() + (i + 1) * std::size_t(n), row.begin());
                row = smooth_line(row, e, R, du);
                std::copy(row.begin(), row.end(), d.begin() + i * std::size_t(n));
            }
            double s = 0.0;
            for (int j = 0; j < n; ++j) {
                for (int i = 0; i < n; ++i) col[i] = d[i * std::size_t(n) + j];
                col = smooth_line(col, e, R, du);
                for (double v : col) s += v * v;
            }
            total += 0.5 * s * du * du;  // 1/1! for n = 1
        } else {
            throw TooLarge("dirichlet_norm supports kernels of order 1 and 2");
        }
    }
    return total;
}

ChaosKernel project_pinned(const ChaosKernel& k) {
    ChaosKernel out = k;
    const int n = k.grid.n;
    for (int axis = 0; axis < k.order; ++axis) {
        const std::size_t stride = ipow(n, k.order - 1 - axis);
        const std::size_t block = stride * n;
        for (std::size_t b = 0; b < out.v.size(); b += block)
            for (std::size_t t = 0; t < stride; ++t) {
                double m = 0.0;
                for (int i = 0; i < n; ++i) m += out.v[b + i * stride + t];
                m /= n;
                for (int i = 0; i < n; ++i) out.v[b + i * stride + t] -= m;
            }
    }
    return out;
}

double inner(const ChaosKernel& a, const ChaosKernel& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
    return s * std::pow(a.grid.du(), a.order);
}

ChaosKernel psi_eps_M_kernel(Profile p, double eps, double x, const ChaosGrid& torus) {
    const double M = torus.hi - torus.lo;
    std::vector<double> f(torus.n);
    for (int i = 0; i < torus.n; ++i) f[i] = scaled_value(p, eps, std::remainder(x - torus.u(i), M)) - 1.0 / M;
    ChaosKernel k(2, torus);
    for (int i = 0; i < torus.n; ++i)
        for (int j = 0; j < torus.n; ++j) k.at2(i, j) = 2.0 * f[i] * f[j];
    return k;
}

}  // namespace kpz::chaos
