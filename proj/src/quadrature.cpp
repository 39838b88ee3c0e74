#include "aggdiff/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <string>
#include <vector>

#include "aggdiff/kern.hpp"
#include "aggdiff/specfun.hpp"

namespace aggdiff::quadrature {

namespace {

struct GaussNodes {
    std::vector<double> x;  // nodes on (-1,1)
    std::vector<double> w;
};

// Gauss-Legendre nodes by Newton iteration on P_n.
GaussNodes compute_gauss(int n) {
    GaussNodes g;
    g.x.resize(n);
    g.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-16) break;
        }
        g.x[i] = -x;
        g.x[n - 1 - i] = x;
        g.w[i] = g.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    return g;
}

const GaussNodes& gauss_nodes(int order) {
    static std::map<int, GaussNodes> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, compute_gauss(order)).first;
    return it->second;
}

struct Panel {
    double lo, hi;
    double coarse;  // one-shot GL value
    double fine;    // sum of GL on the two halves
    double err() const { return std::fabs(coarse - fine); }
};

class AdaptiveGL {
public:
    AdaptiveGL(std::function<double(double)> g, int order, int max_panels)
        : g_(std::move(g)), nodes_(gauss_nodes(order)), max_panels_(max_panels) {}

    long evaluations = 0;

    double gl(double lo, double hi) {
        const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
        const std::size_t n = nodes_.x.size();
        vals_.resize(n);
        for (std::size_t i = 0; i < n; ++i) vals_[i] = g_(c + h * nodes_.x[i]);
        evaluations += long(n);
        return h * kern::dot(nodes_.w.data(), vals_.data(), n);
    }

    Panel make_panel(double lo, double hi) {
        Panel p{lo, hi, 0.0, 0.0};
        p.coarse = gl(lo, hi);
        const double mid = 0.5 * (lo + hi);
        p.fine = gl(lo, mid) + gl(mid, hi);
        return p;
    }

    // Integrate over the breakpoint partition; refine worst panels until the
    // total error estimate meets tol(sum) or the budget is exhausted.
    IntegralResult run(const std::vector<double>& breaks, double rel_tol,
                       double abs_tol, double external_value) {
        auto cmp = [](const Panel& a, const Panel& b) { return a.err() < b.err(); };
        std::priority_queue<Panel, std::vector<Panel>, decltype(cmp)> heap(cmp);
        double sum = 0.0, errsum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
            Panel p = make_panel(breaks[i], breaks[i + 1]);
            sum += p.fine;
            errsum += p.err();
            heap.push(p);
            ++count;
        }
        auto tol = [&]() {
            return std::max(abs_tol, rel_tol * std::fabs(sum + external_value));
        };
        while (errsum > tol() && int(count) < max_panels_) {
            Panel worst = heap.top();
            heap.pop();
            sum -= worst.fine;
            errsum -= worst.err();
            const double mid = 0.5 * (worst.lo + worst.hi);
            if (mid <= worst.lo || mid >= worst.hi) {  // interval exhausted
                sum += worst.fine;
                errsum += worst.err();
                break;
            }
            Panel left = make_panel(worst.lo, mid);
            Panel right = make_panel(mid, worst.hi);
            sum += left.fine + right.fine;
            errsum += left.err() + right.err();
            heap.push(left);
            heap.push(right);
            ++count;
        }
        IntegralResult res;
        res.value = sum;
        res.err_estimate = errsum;
        res.evaluations = evaluations;
        if (errsum > tol())
            throw QuadratureError("quadrature: tolerance not reached within panel budget",
                                  sum + external_value, errsum);
        return res;
    }

private:
    std::function<double(double)> g_;
    const GaussNodes& nodes_;
    int max_panels_;
    std::vector<double> vals_;
};

// Geometric ladder of breakpoints from `from` down to `floor_v` (both > 0).
void push_geometric(std::vector<double>& out, double from, double floor_v) {
    for (double v = from; v > floor_v * 1.0000001; v *= 0.1) out.push_back(v);
}

}  // namespace

QuadratureRule QuadratureRule::gauss(double rel_tol, double abs_tol, int order) {
    QuadratureRule r;
    r.mode = QuadMode::TransformedGauss;
    r.npoints = order;
    r.rel_tol = rel_tol;
    r.abs_tol = abs_tol;
    return r;
}

QuadratureRule QuadratureRule::riemann(int npoints, double r_max) {
    QuadratureRule r;
    r.mode = QuadMode::UniformRiemann;
    r.npoints = npoints;
    r.r_max = r_max;
    return r;
}

IntegralResult integrate_interval(const std::function<double(double)>& f,
                                  double a, double b, double rel_tol,
                                  double abs_tol, int order, int max_panels) {
    if (!(b > a)) throw std::invalid_argument("integrate_interval: requires b > a");
    AdaptiveGL ad(f, order, max_panels);
    return ad.run({a, 0.5 * (a + b), b}, rel_tol, abs_tol, 0.0);
}

IntegralResult integrate_semi_infinite(const std::function<double(double)>& f,
                                       const QuadratureRule& rule,
                                       const EndpointHints& hints) {
    if (rule.mode == QuadMode::UniformRiemann) {
        if (rule.npoints < 16 || !(rule.r_max > 0.0))
            throw std::invalid_argument("integrate_semi_infinite: bad Riemann rule");
        // Midpoint convention on n equal cells of [0, r_max]; excludes r = 0
        // so integrable origin singularities are never sampled.
        const double h = rule.r_max / rule.npoints;
        double sum = 0.0;
        for (int j = 0; j < rule.npoints; ++j) sum += f((j + 0.5) * h);
        IntegralResult res;
        res.value = sum * h;
        res.err_estimate = std::numeric_limits<double>::infinity();
        res.evaluations = rule.npoints;
        return res;
    }

    if (rule.npoints < 16)
        throw std::invalid_argument("integrate_semi_infinite: panel order must be >= 16");

    // Split at r = 1.  The near field [0,1] is integrated directly; the far
    // field [1,inf) in the variable v = 1/r, so that both endpoint regions
    // are resolved by geometric ladders of exactly representable
    // breakpoints.  With endpoint hints the residual pieces beyond
    // r = 2^-40 and r = 2^40 are added analytically (the cutoffs are powers
    // of two, so the quadrature and tail boundaries match exactly).
    const double cutoff = std::ldexp(1.0, -40);  // 2^-40

    double tail0 = 0.0, tail_inf = 0.0;
    long extra_evals = 0;

    if (hints.origin_exponent) {
        const double a = *hints.origin_exponent;
        if (!(a > -1.0))
            throw std::invalid_argument("integrate_semi_infinite: origin exponent must be > -1");
        tail0 = f(cutoff) * cutoff / (1.0 + a);
        ++extra_evals;
    }
    if (hints.decay_exponent) {
        const double b = *hints.decay_exponent;
        if (!(b > 1.0))
            throw std::invalid_argument("integrate_semi_infinite: decay exponent must be > 1");
        const double R = 1.0 / cutoff;
        tail_inf = f(R) * R / (b - 1.0);
        ++extra_evals;
    }

    std::vector<double> breaks;
    breaks.push_back(hints.origin_exponent ? cutoff : 0.0);
    {
        std::vector<double> ladder;
        push_geometric(ladder, 0.1, std::max(cutoff, 1e-13));
        std::sort(ladder.begin(), ladder.end());
        for (double v : ladder)
            if (v > breaks.front()) breaks.push_back(v);
    }
    for (double v : {0.4, 0.7, 1.0}) breaks.push_back(v);

    const double external = tail0 + tail_inf;
    AdaptiveGL near_field(f, rule.npoints, rule.max_panels);
    IntegralResult res_near;
    // far-field integrand in v = 1/r
    const auto gfar = [&f](double v) { return f(1.0 / v) / (v * v); };
    AdaptiveGL far_field(gfar, rule.npoints, rule.max_panels);

    // The near/far tolerance split halves the budget on each side.
    bool near_ok = true, far_ok = true;
    std::string msg;
    IntegralResult res_far;
    try {
        res_near = near_field.run(breaks, 0.5 * rule.rel_tol, 0.5 * rule.abs_tol, external);
    } catch (const QuadratureError& e) {
        near_ok = false;
        res_near.value = e.best_value;
        res_near.err_estimate = e.err_estimate;
        msg = e.what();
    }
    std::vector<double> vbreaks;
    vbreaks.push_back(hints.decay_exponent ? cutoff : 0.0);
    {
        std::vector<double> ladder;
        push_geometric(ladder, 0.1, std::max(cutoff, 1e-13));
        std::sort(ladder.begin(), ladder.end());
        for (double v : ladder)
            if (v > vbreaks.front()) vbreaks.push_back(v);
    }
    for (double v : {0.4, 0.7, 1.0}) vbreaks.push_back(v);
    try {
        res_far = far_field.run(vbreaks, 0.5 * rule.rel_tol, 0.5 * rule.abs_tol, external);
    } catch (const QuadratureError& e) {
        far_ok = false;
        res_far.value = e.best_value;
        res_far.err_estimate = e.err_estimate;
        msg = e.what();
    }

    IntegralResult res;
    res.value = res_near.value + res_far.value + external;
    res.err_estimate = res_near.err_estimate + res_far.err_estimate;
    res.evaluations = near_field.evaluations + far_field.evaluations + extra_evals;
    if (!near_ok || !far_ok) throw QuadratureError(msg, res.value, res.err_estimate);
    return res;
}

IntegralResult weighted_moment(const std::function<double(double)>& profile,
                               int k, int dim, const QuadratureRule& rule,
                               const EndpointHints& profile_hints) {
    if (k < 0 || dim < 1) throw std::invalid_argument("weighted_moment: k >= 0, N >= 1");
    const double power = k + dim - 1;
    EndpointHints h;
    if (profile_hints.origin_exponent)
        h.origin_exponent = *profile_hints.origin_exponent + power;
    if (profile_hints.decay_exponent)
        h.decay_exponent = *profile_hints.decay_exponent - power;
    const auto f = [&profile, power](double r) {
        return std::pow(r, power) * profile(r);
    };
    IntegralResult res = integrate_semi_infinite(f, rule, h);
    res.value *= specfun::sphere_area(dim);
    res.err_estimate *= specfun::sphere_area(dim);
    return res;
}

}  // namespace aggdiff::quadrature
